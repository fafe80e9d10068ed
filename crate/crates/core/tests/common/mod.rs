// not every test binary uses every oracle
#![allow(dead_code)]

//! Independent oracles shared by the integration tests. Everything here
//! deliberately avoids the library's own eigendecomposition/propagation paths:
//! matrix exponentials are Taylor series with scaling-and-squaring, coherent
//! states come from the closed-form tensor-power amplitudes, and pipelines are
//! rebuilt from dense matrix products.

use gravispin_core::dicke::{m_values, operator, DickeKet, OperatorKind};
use gravispin_core::linalg::CMat;
use gravispin_core::C64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn scale(m: &CMat, s: C64) -> CMat {
    let mut out = m.clone();
    for v in out.data_mut() {
        *v *= s;
    }
    out
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    let mut out = a.clone();
    for (x, y) in out.data_mut().iter_mut().zip(b.data()) {
        *x += *y;
    }
    out
}

/// exp(M) by scaling-and-squaring over a plain Taylor series.
pub fn expm_taylor(m: &CMat) -> CMat {
    let dim = m.dim();
    let norm: f64 = m.data().iter().map(|c| c.norm()).fold(0.0, f64::max) * dim as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = scale(m, C64::new(1.0 / 2f64.powi(squarings as i32), 0.0));
    let mut result = CMat::identity(dim);
    let mut term = CMat::identity(dim);
    for k in 1..=24 {
        term = term.mul_mat(&scaled);
        term = scale(&term, C64::new(1.0 / k as f64, 0.0));
        result = add(&result, &term);
    }
    for _ in 0..squarings {
        result = result.mul_mat(&result);
    }
    result
}

/// exp(i theta Jx) via the Taylor oracle.
pub fn rotation_x_oracle(n: u32, theta: f64) -> CMat {
    let jx = operator(OperatorKind::Jx, n).unwrap().to_dense();
    expm_taylor(&scale(&jx, C64::new(0.0, theta)))
}

/// Closed-form CSS amplitudes in the log domain:
/// c_{n_a} = sqrt(C(N, n_a)) u^{n_a} v^{n_b} with u = e^{i phi/2} cos(theta/2)
/// and v = i e^{-i phi/2} sin(theta/2).
pub fn css_log_domain(n: u32, theta: f64, phi: f64) -> Vec<C64> {
    let ln_c = |k: u32| -> f64 {
        ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
    };
    let lu = (theta / 2.0).cos().abs().ln();
    let lv = (theta / 2.0).sin().abs().ln();
    let au = phi / 2.0 + if (theta / 2.0).cos() < 0.0 { std::f64::consts::PI } else { 0.0 };
    let av = -phi / 2.0
        + std::f64::consts::FRAC_PI_2
        + if (theta / 2.0).sin() < 0.0 { std::f64::consts::PI } else { 0.0 };
    (0..=n)
        .map(|na| {
            let nb = n - na;
            let mag = (0.5 * ln_c(na) + na as f64 * lu + nb as f64 * lv).exp();
            let arg = na as f64 * au + nb as f64 * av;
            C64::new(mag * arg.cos(), mag * arg.sin())
        })
        .collect()
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Random unit ket from a seeded stream.
pub fn random_ket(n: u32, rng: &mut ChaCha8Rng) -> DickeKet {
    let amps: Vec<C64> = (0..=n)
        .map(|_| C64::new(normal(rng), normal(rng)))
        .collect();
    DickeKet::normalized(n, amps).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    let v = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Dense independent pipeline: U2 . diag-phases . U0 |pol>, with every factor
/// built from the Taylor exponential, plus elementwise dephasing.
pub struct DensePipeline {
    pub n: u32,
    pub u0: CMat,
    pub u2: CMat,
}

impl DensePipeline {
    pub fn build(n: u32, chi_tau: f64, u2_is_dagger: bool) -> Self {
        let r = rotation_x_oracle(n, std::f64::consts::FRAC_PI_2);
        let ms = m_values(n);
        let tw: Vec<C64> = ms
            .iter()
            .map(|&m| C64::new(0.0, chi_tau * m * m).exp())
            .collect();
        let u0 = r.mul_mat(&CMat::from_diag(&tw)).mul_mat(&r);
        let u2 = if u2_is_dagger { u0.adjoint() } else { u0.clone() };
        DensePipeline { n, u0, u2 }
    }

    /// Outcome probabilities at the given parameter point. `beta_weight`
    /// selects the J_z convention; deltas apply in the A / J_z eigenbases.
    pub fn probabilities(
        &self,
        alpha: f64,
        beta: f64,
        beta_weight: f64,
        delta_a: f64,
        delta_jz: f64,
    ) -> Vec<f64> {
        let dim = self.n as usize + 1;
        let ms = m_values(self.n);
        let nf = self.n as f64;
        let avals: Vec<f64> = ms.iter().map(|&m| nf * nf / 2.0 - nf + 2.0 * m * m).collect();
        let mut pol = vec![C64::new(0.0, 0.0); dim];
        pol[dim - 1] = C64::new(1.0, 0.0);
        let psi = self.u0.mul_vec(&pol);
        let phased: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(i, c)| c * C64::new(0.0, alpha * avals[i] + beta * beta_weight * ms[i]).exp())
            .collect();
        // density with dephasing factors
        let mut rho = CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let da = avals[i] - avals[j];
                let dz = ms[i] - ms[j];
                let damp = (-delta_a * da * da - delta_jz * dz * dz).exp();
                rho[(i, j)] = phased[i] * phased[j].conj() * damp;
            }
        }
        let out = rho.conjugate_with(&self.u2);
        out.diagonal().iter().map(|c| c.re).collect()
    }
}
