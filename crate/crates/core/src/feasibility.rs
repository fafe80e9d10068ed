//! Laboratory physics to simulator parameters: pair-interaction integrals for
//! separated Gaussian clouds, the nonlinear phase magnitude, minimum particle
//! numbers, and the width-scaling separation of the long-range signal from
//! contact interactions.
//!
//! Two alpha values are always reported side by side: the published formula
//! `t G m^2 / (hbar sigma sqrt(pi))` and the first-principles value
//! `|kappa_aa| t / hbar` from the closed-form integral, which comes out a
//! factor sqrt(2) smaller. The quadrature and Monte Carlo oracles below side
//! with the first-principles number; both are reported, never reconciled.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// CODATA Newtonian constant of gravitation, m^3 kg^-1 s^-2.
pub const G_CODATA: f64 = 6.67430e-11;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Atomic mass unit, kg.
pub const AMU_KG: f64 = 1.66053906660e-27;
/// Rb-87 atomic mass, amu.
pub const RB87_AMU: f64 = 86.909180527;

const SQRT_PI: f64 = 1.772453850905516;

/// Laboratory quantities feeding the feasibility formulas. The Gaussian width
/// sigma follows the |u|^2 ~ exp(-(r -+ x0 x)^2 / sigma^2) normalization, so
/// each cloud has positional variance sigma^2/2 per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Single-particle mass, kg.
    pub mass: f64,
    /// Gaussian width, m.
    pub sigma: f64,
    /// Half the cloud separation x0, m (the clouds sit at -+ x0).
    pub separation: f64,
    /// Interrogation time, s.
    pub time: f64,
    /// Experiment repetitions k.
    pub repetitions: u64,
    /// Gravitational constant, m^3 kg^-1 s^-2.
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
}

impl PhysicalConfig {
    /// Rb-87 cloud at the reference operating point: sigma = 50 um,
    /// x0 = 10 sigma, t = 1 s, k = 1e5.
    pub fn rb87_reference() -> Self {
        PhysicalConfig {
            mass: RB87_AMU * AMU_KG,
            sigma: 50e-6,
            separation: 500e-6,
            time: 1.0,
            repetitions: 100_000,
            g: G_CODATA,
            hbar: HBAR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("sigma", self.sigma),
            ("separation", self.separation),
            ("time", self.time),
            ("repetitions", self.repetitions as f64),
            ("G", self.g),
            ("hbar", self.hbar),
        ];
        for (name, v) in fields {
            if v.is_nan() || v <= 0.0 || !v.is_finite() {
                return Err(Error::NonPositiveQuantity { name, value: v });
            }
        }
        Ok(())
    }
}

/// Mode label for the pair-energy integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Closed form of the mutual Newtonian energy integral
/// `kappa_ij = -G m^2 / 2 * Int |u_i(r)|^2 |u_j(r')|^2 / |r - r'|`
/// for the Gaussian clouds: with d the center distance (0 for i = j, 2 x0
/// otherwise), kappa = -G m^2 / 2 * erf(d / (sqrt(2) sigma)) / d, with the
/// d -> 0 limit -G m^2 / 2 * sqrt(2/pi) / sigma. Joules; always negative.
pub fn kappa_gaussian_analytic(config: &PhysicalConfig, i: Mode, j: Mode) -> f64 {
    let d = if i == j { 0.0 } else { 2.0 * config.separation };
    kappa_at_distance(config, d)
}

/// The same integral for an arbitrary center distance.
pub fn kappa_at_distance(config: &PhysicalConfig, d: f64) -> f64 {
    let pref = -0.5 * config.g * config.mass * config.mass;
    if d == 0.0 {
        return pref * libm::sqrt(2.0 / core::f64::consts::PI) / config.sigma;
    }
    pref * libm::erf(d / (core::f64::consts::SQRT_2 * config.sigma)) / d
}

/// Both nonlinear-phase magnitudes: the published formula and the
/// first-principles value from the closed-form integral. Their ratio is the
/// constant 1/sqrt(2) independent of every input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMagnitude {
    pub reference: f64,
    pub derived: f64,
}

impl AlphaMagnitude {
    pub fn ratio_derived_to_reference(&self) -> f64 {
        self.derived / self.reference
    }
}

pub fn alpha_magnitude(config: &PhysicalConfig) -> AlphaMagnitude {
    let reference =
        config.time * config.g * config.mass * config.mass / (config.hbar * config.sigma * SQRT_PI);
    let derived =
        libm::fabs(kappa_gaussian_analytic(config, Mode::A, Mode::A)) * config.time / config.hbar;
    AlphaMagnitude { reference, derived }
}

/// Minimum particle number from inverting the detectability bound
/// alpha >= 2 / (sqrt(k) N^2), for both alpha values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumAtomNumber {
    /// N = sqrt(2 hbar sigma sqrt(pi) / (sqrt(k) G m^2 t)).
    pub reference_formula: f64,
    /// Same inversion applied to the first-principles alpha.
    pub from_derived_alpha: f64,
}

pub fn minimum_atom_number(config: &PhysicalConfig) -> MinimumAtomNumber {
    let alpha = alpha_magnitude(config);
    let sqrt_k = libm::sqrt(config.repetitions as f64);
    let n_of = |a: f64| libm::sqrt(2.0 / (sqrt_k * a));
    MinimumAtomNumber {
        reference_formula: n_of(alpha.reference),
        from_derived_alpha: n_of(alpha.derived),
    }
}

/// One row of the width-scaling table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub sigma: f64,
    /// Long-range (1/sigma) column, normalized to the first row.
    pub gravity_coeff: f64,
    /// Contact (1/sigma^3) column, normalized to the first row.
    pub contact_coeff: f64,
}

/// Normalized sigma^-1 vs sigma^-3 columns: doubling sigma halves the
/// long-range coefficient and divides the contact coefficient by eight.
pub fn scaling_separation(config: &PhysicalConfig, sigmas: &[f64]) -> Result<Vec<ScalingRow>> {
    if sigmas.is_empty() {
        return Err(Error::InvalidInput {
            field: "sigma_values",
            reason: alloc::string::String::from("must be nonempty"),
        });
    }
    for &s in sigmas {
        if s.is_nan() || s <= 0.0 || !s.is_finite() {
            return Err(Error::NonPositiveQuantity { name: "sigma", value: s });
        }
    }
    config.validate()?;
    let s0 = sigmas[0];
    Ok(sigmas
        .iter()
        .map(|&s| ScalingRow {
            sigma: s,
            gravity_coeff: s0 / s,
            contact_coeff: (s0 / s) * (s0 / s) * (s0 / s),
        })
        .collect())
}

/// Peak density n / (pi^{3/2} sigma^3) of one Gaussian cloud, m^-3.
pub fn peak_density(config: &PhysicalConfig, n: f64) -> f64 {
    n / (SQRT_PI * SQRT_PI * SQRT_PI * config.sigma * config.sigma * config.sigma)
}

/// Reference peak density quoted for the headline operating point, m^-3
/// (4e13 cm^-3). Not reproducible from N_min and sigma via the Gaussian
/// peak-density formula; reports carry a flag instead of an adjustment.
pub const QUOTED_REFERENCE_DENSITY: f64 = 4e19;

/// Everything the CLI-facing feasibility report carries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub alpha_reference: f64,
    pub alpha_derived: f64,
    pub kappa_aa: f64,
    pub kappa_ab: f64,
    pub cross_term_ratio: f64,
    pub n_min: f64,
    pub n_min_derived: f64,
    pub density_peak: f64,
    /// Set when the peak density disagrees with the quoted reference value
    /// by more than a factor of 10 either way.
    pub density_flag: bool,
}

pub fn feasibility_report(config: &PhysicalConfig) -> Result<FeasibilityReport> {
    config.validate()?;
    let alpha = alpha_magnitude(config);
    let kappa_aa = kappa_gaussian_analytic(config, Mode::A, Mode::A);
    let kappa_ab = kappa_gaussian_analytic(config, Mode::A, Mode::B);
    let nmin = minimum_atom_number(config);
    let density = peak_density(config, nmin.reference_formula);
    let density_ratio = density / QUOTED_REFERENCE_DENSITY;
    Ok(FeasibilityReport {
        alpha_reference: alpha.reference,
        alpha_derived: alpha.derived,
        kappa_aa,
        kappa_ab,
        cross_term_ratio: kappa_ab / kappa_aa,
        n_min: nmin.reference_formula,
        n_min_derived: nmin.from_derived_alpha,
        density_peak: density,
        density_flag: !(0.1..=10.0).contains(&density_ratio),
    })
}

/// Monte Carlo estimate of the pair-energy integral, reported with its
/// standard error so agreement checks can be stated in sigmas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Partial sums from one batch; batches combine associatively, so any
/// partition of the sample budget gives byte-identical results.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchSums {
    pub sum: f64,
    pub sum_sq: f64,
    pub count: u64,
}

impl BatchSums {
    pub fn merge(self, other: BatchSums) -> BatchSums {
        BatchSums {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            count: self.count + other.count,
        }
    }
}

#[inline]
fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    // 53-bit mantissa in (0, 1]
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u = uniform_open(rng);
    let v = uniform_open(rng);
    let r = libm::sqrt(-2.0 * libm::log(u));
    let t = 2.0 * core::f64::consts::PI * v;
    (r * libm::cos(t), r * libm::sin(t))
}

/// Deterministic per-batch stream: ChaCha8 keyed by the base seed and batch
/// index with a fixed stride.
pub fn batch_rng(seed: u64, batch_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ batch_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Accumulates one batch of 1/|r - r'| samples with r, r' drawn from the two
/// Gaussian clouds at center distance `d`.
pub fn kappa_mc_batch(
    config: &PhysicalConfig,
    d: f64,
    seed: u64,
    batch_index: u64,
    batch_size: u64,
) -> BatchSums {
    let mut rng = batch_rng(seed, batch_index);
    // each cloud has variance sigma^2/2 per axis
    let s = config.sigma / core::f64::consts::SQRT_2;
    let mut sums = BatchSums::default();
    for _ in 0..batch_size {
        let (a1, a2) = standard_normal_pair(&mut rng);
        let (a3, b1) = standard_normal_pair(&mut rng);
        let (b2, b3) = standard_normal_pair(&mut rng);
        let dx = s * (a1 - b1) + d;
        let dy = s * (a2 - b2);
        let dz = s * (a3 - b3);
        let inv_r = 1.0 / libm::sqrt(dx * dx + dy * dy + dz * dz);
        sums.sum += inv_r;
        sums.sum_sq += inv_r * inv_r;
        sums.count += 1;
    }
    sums
}

/// Turns accumulated batch sums into the kappa estimate (Joules).
pub fn kappa_mc_finish(config: &PhysicalConfig, sums: BatchSums, seed: u64) -> MonteCarloEstimate {
    let n = sums.count as f64;
    let mean_inv_r = sums.sum / n;
    let var = (sums.sum_sq / n - mean_inv_r * mean_inv_r).max(0.0);
    let pref = -0.5 * config.g * config.mass * config.mass;
    MonteCarloEstimate {
        mean: pref * mean_inv_r,
        std_error: libm::fabs(pref) * libm::sqrt(var / n),
        samples: sums.count,
        seed,
    }
}

/// Single-threaded Monte Carlo run over `samples` draws.
pub fn kappa_monte_carlo(
    config: &PhysicalConfig,
    d: f64,
    samples: u64,
    seed: u64,
) -> MonteCarloEstimate {
    const BATCH: u64 = 262_144;
    let mut sums = BatchSums::default();
    let mut index = 0u64;
    let mut left = samples;
    while left > 0 {
        let take = left.min(BATCH);
        sums = sums.merge(kappa_mc_batch(config, d, seed, index, take));
        index += 1;
        left -= take;
    }
    kappa_mc_finish(config, sums, seed)
}

/// Batch layout used by parallel drivers; `kappa_mc_batch` with these indices
/// and sizes reproduces `kappa_monte_carlo` exactly.
pub fn batch_layout(samples: u64) -> Vec<(u64, u64)> {
    const BATCH: u64 = 262_144;
    let mut out = Vec::new();
    let mut index = 0u64;
    let mut left = samples;
    while left > 0 {
        let take = left.min(BATCH);
        out.push((index, take));
        index += 1;
        left -= take;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_config() -> PhysicalConfig {
        PhysicalConfig {
            mass: 1.0,
            sigma: 1.0,
            separation: 5.0,
            time: 1.0,
            repetitions: 1,
            g: 1.0,
            hbar: 1.0,
        }
    }

    #[test]
    fn kappa_limit_is_continuous() {
        let cfg = unit_config();
        let at_zero = kappa_at_distance(&cfg, 0.0);
        let near_zero = kappa_at_distance(&cfg, 1e-12);
        assert!((near_zero / at_zero - 1.0).abs() < 1e-6);
        assert_abs_diff_eq!(
            at_zero,
            -0.5 * libm::sqrt(2.0 / core::f64::consts::PI),
            epsilon = 1e-15
        );
    }

    #[test]
    fn kappa_cross_term_decays_with_separation() {
        let mut cfg = unit_config();
        cfg.separation = 10.0; // x0 = 10 sigma
        let aa = kappa_gaussian_analytic(&cfg, Mode::A, Mode::A);
        let ab = kappa_gaussian_analytic(&cfg, Mode::A, Mode::B);
        assert!(aa < 0.0 && ab < 0.0);
        let ratio = ab / aa;
        assert!(ratio > 0.0 && ratio < 0.1, "ratio {ratio}");
        // monotone decay toward zero
        cfg.separation = 100.0;
        let far = kappa_gaussian_analytic(&cfg, Mode::A, Mode::B) / aa;
        assert!(far < ratio);
    }

    #[test]
    fn alpha_reference_value_and_scaling() {
        let cfg = PhysicalConfig {
            mass: 1.4432e-25,
            ..PhysicalConfig::rb87_reference()
        };
        let a = alpha_magnitude(&cfg);
        // plug-in arithmetic for t G m^2/(hbar sigma sqrt(pi))
        assert!((a.reference / 1.4875e-22 - 1.0).abs() < 1e-3, "alpha {:.6e}", a.reference);
        // derived/published ratio is exactly 1/sqrt(2), config-independent
        assert_abs_diff_eq!(
            a.ratio_derived_to_reference(),
            core::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        let mut wider = cfg;
        wider.sigma *= 2.0;
        let aw = alpha_magnitude(&wider);
        assert_abs_diff_eq!(aw.reference / a.reference, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(aw.derived / a.derived, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            aw.ratio_derived_to_reference(),
            core::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn minimum_atom_number_reference() {
        let report = minimum_atom_number(&PhysicalConfig::rb87_reference());
        // within a factor of two of 5e9
        let ratio = report.reference_formula / 5e9;
        assert!(ratio > 0.5 && ratio < 2.0, "N_min {:.3e}", report.reference_formula);

        // k x16 halves N
        let mut cfg = PhysicalConfig::rb87_reference();
        cfg.repetitions *= 16;
        let r16 = minimum_atom_number(&cfg);
        assert_abs_diff_eq!(r16.reference_formula / report.reference_formula, 0.5, epsilon = 1e-12);

        // doubling the mass halves N
        let mut cfg = PhysicalConfig::rb87_reference();
        cfg.mass *= 2.0;
        let r2m = minimum_atom_number(&cfg);
        assert_abs_diff_eq!(r2m.reference_formula / report.reference_formula, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn nmin_and_alpha_are_inverses_through_the_bound() {
        let cfg = PhysicalConfig::rb87_reference();
        let alpha = alpha_magnitude(&cfg);
        let nmin = minimum_atom_number(&cfg);
        let sqrt_k = (cfg.repetitions as f64).sqrt();
        let detectable = 2.0 / (sqrt_k * nmin.reference_formula * nmin.reference_formula);
        assert!((detectable / alpha.reference - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_table() {
        let cfg = unit_config();
        let rows = scaling_separation(&cfg, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(rows[1].gravity_coeff, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].contact_coeff, 0.125, epsilon = 1e-15);
        let single = scaling_separation(&cfg, &[3.0]).unwrap();
        assert_eq!(single.len(), 1);
        assert_abs_diff_eq!(single[0].gravity_coeff, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(single[0].contact_coeff, 1.0, epsilon = 1e-15);
        assert!(scaling_separation(&cfg, &[]).is_err());

        // exact log-log slopes over a decade
        let sigmas: Vec<f64> = (0..11).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let rows = scaling_separation(&cfg, &sigmas).unwrap();
        let slope = |ys: Vec<f64>| {
            let xs: Vec<f64> = sigmas.iter().map(|s| s.ln()).collect();
            let lys: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = lys.iter().sum::<f64>() / lys.len() as f64;
            let num: f64 = xs.iter().zip(&lys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            num / den
        };
        assert_abs_diff_eq!(slope(rows.iter().map(|r| r.gravity_coeff).collect()), -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(slope(rows.iter().map(|r| r.contact_coeff).collect()), -3.0, epsilon = 1e-10);
    }

    #[test]
    fn peak_density_examples() {
        let mut cfg = unit_config();
        assert_abs_diff_eq!(
            peak_density(&cfg, SQRT_PI * SQRT_PI * SQRT_PI),
            1.0,
            epsilon = 1e-12
        );
        cfg.sigma = 2.0;
        assert_abs_diff_eq!(
            peak_density(&cfg, SQRT_PI * SQRT_PI * SQRT_PI),
            0.125,
            epsilon = 1e-12
        );
    }

    #[test]
    fn report_flags_density_mismatch() {
        let report = feasibility_report(&PhysicalConfig::rb87_reference()).unwrap();
        assert!(report.density_flag, "reference density should disagree >10x");
        assert!(report.n_min.is_finite() && report.n_min > 0.0);
        assert!(report.cross_term_ratio >= 0.0 && report.cross_term_ratio <= 1.0);
        assert!(report.kappa_aa < 0.0 && report.kappa_ab < 0.0);
        assert!(report.kappa_ab.abs() <= report.kappa_aa.abs());
    }

    #[test]
    fn outputs_finite_over_parameter_box() {
        for mass in [1e-27, 1e-25, 1e-24] {
            for sigma in [1e-6, 5e-5, 1e-3] {
                let cfg = PhysicalConfig {
                    mass,
                    sigma,
                    separation: 10.0 * sigma,
                    time: 1.0,
                    repetitions: 1000,
                    g: G_CODATA,
                    hbar: HBAR,
                };
                let rep = feasibility_report(&cfg).unwrap();
                for v in [rep.alpha_reference, rep.alpha_derived, rep.n_min, rep.density_peak] {
                    assert!(v.is_finite() && v > 0.0);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_matches_closed_form_same_cloud() {
        let cfg = unit_config();
        let est = kappa_monte_carlo(&cfg, 0.0, 200_000, 0);
        let exact = kappa_at_distance(&cfg, 0.0);
        let dev = (est.mean - exact).abs();
        assert!(
            dev < 3.0 * est.std_error,
            "MC {:.6e} vs exact {:.6e}, {:.1} SE",
            est.mean,
            exact,
            dev / est.std_error
        );
    }

    #[test]
    fn monte_carlo_matches_closed_form_separated() {
        let cfg = unit_config();
        let d = 2.0 * cfg.separation;
        let est = kappa_monte_carlo(&cfg, d, 200_000, 7);
        let exact = kappa_at_distance(&cfg, d);
        let dev = (est.mean - exact).abs();
        assert!(dev < 3.0 * est.std_error, "{:.2} SE", dev / est.std_error);
    }

    #[test]
    fn monte_carlo_batches_are_deterministic_and_associative() {
        let cfg = unit_config();
        let a = kappa_monte_carlo(&cfg, 0.0, 300_000, 42);
        let b = kappa_monte_carlo(&cfg, 0.0, 300_000, 42);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        // manual batch assembly reproduces the single-threaded run
        let mut sums = BatchSums::default();
        for (index, size) in batch_layout(300_000) {
            sums = sums.merge(kappa_mc_batch(&cfg, 0.0, 42, index, size));
        }
        let c = kappa_mc_finish(&cfg, sums, 42);
        assert_eq!(a.mean.to_bits(), c.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), c.std_error.to_bits());
    }

    #[test]
    fn rejects_nonpositive_config() {
        let mut cfg = unit_config();
        cfg.sigma = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = unit_config();
        cfg.mass = -1.0;
        assert!(cfg.validate().is_err());
    }
}
