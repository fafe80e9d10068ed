//! Cross-checks of the library's propagation machinery against independent
//! oracles: Taylor-series matrix exponentials and closed-form coherent-state
//! amplitudes.

mod common;

use common::{css_log_domain, rotation_x_oracle, seeded};
use gravispin_core::channels::{oat_prepare, TwistingSpec};
use gravispin_core::dicke::{
    cat_state_analytic, css_state, polarized_state, rotation_x, DickeKet,
};
use gravispin_core::distributions::husimi_grid;
use gravispin_core::C64;

#[test]
fn rotation_matches_taylor_exponential() {
    for n in [1u32, 2, 5, 8, 13] {
        for theta in [0.1, 0.9, std::f64::consts::FRAC_PI_2, 2.7, -1.3] {
            let fast = rotation_x(n, theta).unwrap();
            let slow = rotation_x_oracle(n, theta);
            let diff = fast.max_abs_diff(&slow);
            assert!(diff < 1e-11, "n = {n}, theta = {theta}: {diff:.2e}");
        }
    }
}

#[test]
fn oat_zero_twisting_matches_exponential_oracle() {
    // chi tau = 0 collapses the preparation to exp(i pi Jx)
    for n in [2u32, 3, 6] {
        let pol = polarized_state(n).unwrap();
        let prepared = oat_prepare(&pol, &TwistingSpec { chi_tau: 0.0 }).unwrap();
        let oracle = rotation_x_oracle(n, std::f64::consts::PI).mul_vec(pol.amplitudes());
        let diff: f64 = prepared
            .amplitudes()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "n = {n}: {diff:.2e}");
    }
}

#[test]
fn cat_matches_dense_twisting_pipeline() {
    for n in [2u32, 4, 6, 10, 12] {
        let pipe = common::DensePipeline::build(n, std::f64::consts::FRAC_PI_4, false);
        let mut pol = vec![C64::new(0.0, 0.0); n as usize + 1];
        pol[n as usize] = C64::new(1.0, 0.0);
        let oracle = pipe.u0.mul_vec(&pol);
        let cat = cat_state_analytic(n).unwrap();
        let diff: f64 = cat
            .amplitudes()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "n = {n}: {diff:.2e}");
    }
}

#[test]
fn css_log_domain_agrees_with_rotation_route() {
    for n in [10u32, 30, 60] {
        for &(theta, phi) in &[(0.3, 1.1), (1.57, -2.0), (2.9, 0.4)] {
            let lib = css_state(n, theta, phi).unwrap();
            let log = css_log_domain(n, theta, phi);
            for (a, b) in lib.amplitudes().iter().zip(&log) {
                // the rotation route carries ~1e-16 absolute error from O(1)
                // cancellations, so the relative contract only binds where the
                // amplitude itself is comfortably above that floor
                if b.norm() >= 1e-5 {
                    assert!(
                        (a - b).norm() <= 1e-10 * b.norm(),
                        "n = {n} theta = {theta} phi = {phi}: {a} vs {b}"
                    );
                } else {
                    assert!(
                        (a - b).norm() <= 1e-13,
                        "n = {n} theta = {theta} phi = {phi}: {a} vs {b}"
                    );
                }
            }
        }
    }
}

#[test]
fn husimi_integral_matches_overcompleteness() {
    // (N+1)/(4 pi) Int Q dOmega = 1 for any normalized state
    let n = 10u32;
    let state = gravispin_core::dicke::optimal_state(n).unwrap();
    let grid = husimi_grid(&state, 201, 201).unwrap();
    let integral = grid.sphere_integral();
    let expect = 4.0 * std::f64::consts::PI / (n as f64 + 1.0);
    assert!(
        (integral / expect - 1.0).abs() < 0.02,
        "integral {integral:.6} vs {expect:.6}"
    );
}

#[test]
fn random_states_stay_normalized_through_channels() {
    use gravispin_core::channels::{apply_classical_gravity, apply_quantum_gravity};
    let mut rng = seeded(11);
    for n in [3u32, 17, 64] {
        for _ in 0..5 {
            let ket = common::random_ket(n, &mut rng);
            let out = apply_quantum_gravity(&apply_classical_gravity(&ket, 0.3, -0.8), 1.7);
            assert!((out.norm_sq() - 1.0).abs() < 1e-12);
            let prepared = oat_prepare(&out, &TwistingSpec::CAT).unwrap();
            assert!((prepared.norm_sq() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn gamma_only_shifts_the_global_phase() {
    use gravispin_core::channels::apply_classical_gravity;
    let mut rng = seeded(5);
    for _ in 0..10 {
        let ket = common::random_ket(12, &mut rng);
        let out = apply_classical_gravity(&ket, 0.0, 2.345);
        assert!((out.fidelity(&ket) - 1.0).abs() < 1e-12);
        // and the phase is exactly e^{i gamma N} on every amplitude
        let expect = C64::new(0.0, 2.345 * 12.0).exp();
        for (a, b) in out.amplitudes().iter().zip(ket.amplitudes()) {
            assert!((a - expect * b).norm() < 1e-13);
        }
    }
}

#[test]
fn cat_husimi_has_four_lobes() {
    // two polar lobes plus two equatorial lobes a phi-distance pi apart
    let n = 100u32;
    let cat = cat_state_analytic(n).unwrap();
    let grid = husimi_grid(&cat, 41, 41).unwrap();
    let equator = 20; // theta = pi/2
    let phi_quarter = 30; // phi = +pi/2
    let phi_neg_quarter = 10; // phi = -pi/2
    for (it, ip, label) in [
        (0, 0, "north pole"),
        (40, 0, "south pole"),
        (equator, phi_quarter, "equator +pi/2"),
        (equator, phi_neg_quarter, "equator -pi/2"),
    ] {
        let q = grid.value(it, ip);
        assert!((q - 0.25).abs() < 2e-2, "{label}: Q = {q:.4}");
    }
    // nothing anywhere beats the lobes, and the equator between lobes is dark
    assert!(grid.max_value() <= 0.25 + 1e-6);
    assert!(grid.value(equator, 20) < 1e-6); // phi = 0
    assert!(grid.value(equator, 0) < 1e-6); // phi = -pi
}

#[test]
fn decoupling_clean_under_double_preparation() {
    use gravispin_core::channels::{ExperimentConfig, Recombiner};
    use gravispin_core::fisher::{
        decoupling_report, ParameterId, DEFAULT_CORRELATION_THRESHOLD, DEFAULT_COSINE_THRESHOLD,
        DEFAULT_PROB_FLOOR,
    };
    let config = ExperimentConfig::figure_defaults(60, Recombiner::U0, true);
    let report = decoupling_report(
        &config,
        &ParameterId::ALL,
        gravispin_core::JzConvention::Unit,
        DEFAULT_PROB_FLOOR,
        DEFAULT_CORRELATION_THRESHOLD,
        DEFAULT_COSINE_THRESHOLD,
    )
    .unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(!report.any_flagged(), "no nuisance parameter should exceed the thresholds");
    for row in &report.rows {
        assert!(row.correlation.abs() < 1e-2, "{:?}: corr {:.3e}", row.param, row.correlation);
    }
}

#[test]
fn snapshot_order_is_ascending_m() {
    // the first amplitude belongs to m = -N/2, the last to +N/2
    let k = polarized_state(3).unwrap();
    assert_eq!(k.amplitudes()[3], C64::new(1.0, 0.0));
    let (first, rest) = {
        let mut amps = vec![C64::new(0.0, 0.0); 4];
        amps[0] = C64::new(1.0, 0.0);
        (DickeKet::new(3, amps).unwrap(), k)
    };
    use gravispin_core::dicke::{expectation, operator, OperatorKind};
    let jz = operator(OperatorKind::Jz, 3).unwrap();
    assert!((expectation(&jz, &first).unwrap() + 1.5).abs() < 1e-12);
    assert!((expectation(&jz, &rest).unwrap() - 1.5).abs() < 1e-12);
}
