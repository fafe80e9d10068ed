//! Dicke-basis states and collective operators for N two-mode bosons.
//!
//! A pure symmetric state of N particles lives in the (N+1)-dimensional span
//! of the J_z eigenstates |m>, m = -N/2 ... N/2, stored in ascending m. Mode
//! occupations are n_a = N/2 + m and n_b = N/2 - m; the two-mode picture is
//! never materialized.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::{phase, C64};

const NORM_TOL: f64 = 1e-12;

/// J_z eigenvalues in ascending order, half-integer for odd n.
pub fn m_values(n: u32) -> Vec<f64> {
    let half = n as f64 / 2.0;
    (0..=n).map(|i| i as f64 - half).collect()
}

/// Diagonal of A = a†a†aa + b†b†bb: n_a(n_a-1) + n_b(n_b-1) = N^2/2 - N + 2m^2.
pub fn a_values(n: u32) -> Vec<f64> {
    let nf = n as f64;
    m_values(n)
        .into_iter()
        .map(|m| nf * nf / 2.0 - nf + 2.0 * m * m)
        .collect()
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Pure N-particle state in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeKet {
    n: u32,
    amplitudes: Vec<C64>,
}

impl DickeKet {
    /// Checked constructor: length must be N+1 and the norm must already be 1
    /// within 1e-12.
    pub fn new(n: u32, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != n as usize + 1 {
            return Err(Error::DimensionMismatch {
                expected: n as usize + 1,
                got: amplitudes.len(),
            });
        }
        let ket = DickeKet { n, amplitudes };
        let ns = ket.norm_sq();
        if libm::fabs(ns - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq: ns });
        }
        Ok(ket)
    }

    /// Constructor that rescales a nonzero vector to unit norm.
    pub fn normalized(n: u32, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != n as usize + 1 {
            return Err(Error::DimensionMismatch {
                expected: n as usize + 1,
                got: amplitudes.len(),
            });
        }
        let ns: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if ns == 0.0 {
            return Err(Error::NotNormalized { norm_sq: 0.0 });
        }
        let s = 1.0 / libm::sqrt(ns);
        for c in &mut amplitudes {
            *c *= s;
        }
        Ok(DickeKet { n, amplitudes })
    }

    pub(crate) fn from_amplitudes_unchecked(n: u32, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), n as usize + 1);
        DickeKet { n, amplitudes }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n as usize + 1
    }

    /// Amplitudes in ascending m.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &DickeKet) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |<self|other>|^2; the only state comparison used anywhere, so global
    /// phases never matter.
    pub fn fidelity(&self, other: &DickeKet) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// |c_m|^2 in ascending m.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Applies a diagonal (in m) phase profile, returning the new state.
    pub fn apply_diag_phase(&self, phases: &[C64]) -> DickeKet {
        debug_assert_eq!(phases.len(), self.dim());
        let amps = self
            .amplitudes
            .iter()
            .zip(phases)
            .map(|(c, p)| c * p)
            .collect();
        DickeKet { n: self.n, amplitudes: amps }
    }
}

/// Mixed N-particle state as an (N+1)x(N+1) density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeDensity {
    n: u32,
    mat: CMat,
}

impl DickeDensity {
    /// Checked constructor: Hermitian within 1e-12 and unit trace within 1e-12.
    /// Positivity is not rechecked here (it is O(n^3)); use
    /// [`DickeDensity::min_eigenvalue`] where it matters.
    pub fn new(n: u32, mat: CMat) -> Result<Self> {
        if mat.dim() != n as usize + 1 {
            return Err(Error::DimensionMismatch { expected: n as usize + 1, got: mat.dim() });
        }
        let defect = mat.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NonHermitian { max_asym: defect });
        }
        let tr = mat.trace();
        if libm::fabs(tr.re - 1.0) > 1e-12 || libm::fabs(tr.im) > 1e-12 {
            return Err(Error::BadTrace { trace: tr.re });
        }
        Ok(DickeDensity { n, mat })
    }

    pub(crate) fn from_mat_unchecked(n: u32, mat: CMat) -> Self {
        DickeDensity { n, mat }
    }

    /// |psi><psi| for a pure state.
    pub fn from_pure(ket: &DickeKet) -> Self {
        let dim = ket.dim();
        let mut mat = CMat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = ket.amplitudes[i] * ket.amplitudes[j].conj();
            }
        }
        DickeDensity { n: ket.n, mat }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n as usize + 1
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut CMat {
        &mut self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Diagonal in the J_z basis (the measured distribution).
    pub fn diag_probabilities(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|c| c.re).collect()
    }

    /// Smallest eigenvalue; >= -1e-10 for any physical state produced here.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_min_eigenvalue(&self.mat)
    }

    /// <psi|rho|psi>.
    pub fn fidelity_with(&self, ket: &DickeKet) -> f64 {
        let v = self.mat.mul_vec(ket.amplitudes());
        ket.amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Either a pure or a mixed state, for operations accepting both.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Ket(&'a DickeKet),
    Density(&'a DickeDensity),
}

impl<'a> From<&'a DickeKet> for StateRef<'a> {
    fn from(k: &'a DickeKet) -> Self {
        StateRef::Ket(k)
    }
}

impl<'a> From<&'a DickeDensity> for StateRef<'a> {
    fn from(d: &'a DickeDensity) -> Self {
        StateRef::Density(d)
    }
}

impl StateRef<'_> {
    pub fn n(&self) -> u32 {
        match self {
            StateRef::Ket(k) => k.n(),
            StateRef::Density(d) => d.n(),
        }
    }
}

/// All particles in mode a: |(N/2)_z>.
pub fn polarized_state(n: u32) -> Result<DickeKet> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut amps = vec![C64::new(0.0, 0.0); n as usize + 1];
    amps[n as usize] = C64::new(1.0, 0.0);
    Ok(DickeKet { n, amplitudes: amps })
}

/// The three-peak state (|0_z> + (|(N/2)_z> + |(-N/2)_z>)/sqrt(2))/sqrt(2)
/// that maximizes the variance of A at fixed N. Needs the m = 0 level.
pub fn optimal_state(n: u32) -> Result<DickeKet> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddParticleCount { op: "optimal_state", n });
    }
    let dim = n as usize + 1;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[n as usize / 2] = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = C64::new(0.5, 0.0);
    amps[n as usize] = C64::new(0.5, 0.0);
    Ok(DickeKet { n, amplitudes: amps })
}

/// Coherent state along +x or -x: the tensor power of (|a> ± |b>)/sqrt(2).
/// Amplitudes are binomial square roots, computed in the log-gamma domain so
/// arbitrary N (at least up to 2000) stays finite.
pub fn x_extremal_state(n: u32, toward_positive: bool) -> Result<DickeKet> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let half_n_ln2 = n as f64 / 2.0 * core::f64::consts::LN_2;
    let amps = (0..=n)
        .map(|na| {
            let mag = libm::exp(0.5 * ln_binomial(n, na) - half_n_ln2);
            let sign = if toward_positive || (n - na).is_multiple_of(2) { 1.0 } else { -1.0 };
            C64::new(sign * mag, 0.0)
        })
        .collect();
    Ok(DickeKet { n, amplitudes: amps })
}

/// The macroscopic-superposition state produced by one-axis twisting at
/// chi*tau = pi/4, written in closed form:
///
/// ```text
/// |cat> = 1/2 [ e^{iN pi/2} |X+>  +  e^{-iN pi/2} |X->
///             + e^{-i3pi/4} e^{iN pi/2} |(N/2)_z>
///             + e^{+i pi/4} e^{iN pi/2} |(-N/2)_z> ]
/// ```
///
/// with |X±> the ±x coherent states above. The phases come from splitting the
/// twisting phase profile e^{i pi m^2/4} over the four fourth roots of unity
/// and carrying each branch through the surrounding pi/2 rotations; the result
/// is amplitude-exact against the twisting pipeline for every even N,
/// including N = 2 (mod 4) where the relative phase of the two z components
/// flips. The norm is computed from the actual overlap rather than assumed.
pub fn cat_state_analytic(n: u32) -> Result<DickeKet> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddParticleCount { op: "cat_state_analytic", n });
    }
    let xp = x_extremal_state(n, true)?;
    let xm = x_extremal_state(n, false)?;
    let ph_n = phase(n as f64 * core::f64::consts::FRAC_PI_2);
    let c_xp = ph_n * 0.5;
    let c_xm = ph_n.conj() * 0.5;
    let c_zp = phase(-3.0 * core::f64::consts::FRAC_PI_4) * ph_n * 0.5;
    let c_zm = phase(core::f64::consts::FRAC_PI_4) * ph_n * 0.5;

    let dim = n as usize + 1;
    let mut amps: Vec<C64> = xp
        .amplitudes
        .iter()
        .zip(&xm.amplitudes)
        .map(|(p, m)| c_xp * p + c_xm * m)
        .collect();
    amps[dim - 1] += c_zp;
    amps[0] += c_zm;
    DickeKet::normalized(n, amps)
}

/// Which collective operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Jx,
    Jy,
    Jz,
    Jz2,
    A,
    Nplus,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Jx => "Jx",
            OperatorKind::Jy => "Jy",
            OperatorKind::Jz => "Jz",
            OperatorKind::Jz2 => "Jz2",
            OperatorKind::A => "A",
            OperatorKind::Nplus => "Nplus",
        }
    }
}

/// Matrix (diagonal where possible) representation of a collective operator.
#[derive(Debug, Clone)]
pub enum Representation {
    Diagonal(Vec<f64>),
    Dense(CMat),
}

#[derive(Debug, Clone)]
pub struct CollectiveOperator {
    n: u32,
    kind: OperatorKind,
    repr: Representation,
}

/// Ladder-coupling strengths sqrt(j(j+1) - m(m+1)) between m and m+1.
fn ladder_offdiag(n: u32) -> Vec<f64> {
    let j = n as f64 / 2.0;
    let ms = m_values(n);
    (0..n as usize)
        .map(|k| libm::sqrt(j * (j + 1.0) - ms[k] * (ms[k] + 1.0)))
        .collect()
}

/// Builds the requested collective operator for n particles.
pub fn operator(kind: OperatorKind, n: u32) -> Result<CollectiveOperator> {
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let dim = n as usize + 1;
    let repr = match kind {
        OperatorKind::Jz => Representation::Diagonal(m_values(n)),
        OperatorKind::Jz2 => {
            Representation::Diagonal(m_values(n).into_iter().map(|m| m * m).collect())
        }
        OperatorKind::A => Representation::Diagonal(a_values(n)),
        OperatorKind::Nplus => Representation::Diagonal(vec![n as f64; dim]),
        OperatorKind::Jx => {
            let s = ladder_offdiag(n);
            let mut m = CMat::zeros(dim);
            for k in 0..n as usize {
                let v = C64::new(0.5 * s[k], 0.0);
                m[(k, k + 1)] = v;
                m[(k + 1, k)] = v;
            }
            Representation::Dense(m)
        }
        OperatorKind::Jy => {
            let s = ladder_offdiag(n);
            let mut m = CMat::zeros(dim);
            for k in 0..n as usize {
                // <m+1|Jy|m> = -i/2 sqrt(j(j+1)-m(m+1))
                m[(k + 1, k)] = C64::new(0.0, -0.5 * s[k]);
                m[(k, k + 1)] = C64::new(0.0, 0.5 * s[k]);
            }
            Representation::Dense(m)
        }
    };
    Ok(CollectiveOperator { n, kind, repr })
}

impl CollectiveOperator {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Representation::Diagonal(_))
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        match &self.repr {
            Representation::Diagonal(d) => Some(d),
            Representation::Dense(_) => None,
        }
    }

    /// Dense matrix form (diagonals are materialized).
    pub fn to_dense(&self) -> CMat {
        match &self.repr {
            Representation::Dense(m) => m.clone(),
            Representation::Diagonal(d) => {
                let cs: Vec<C64> = d.iter().map(|&v| C64::new(v, 0.0)).collect();
                CMat::from_diag(&cs)
            }
        }
    }

    /// O |psi>.
    pub fn apply(&self, ket: &DickeKet) -> Result<Vec<C64>> {
        if ket.dim() != self.n as usize + 1 {
            return Err(Error::DimensionMismatch { expected: self.n as usize + 1, got: ket.dim() });
        }
        Ok(match &self.repr {
            Representation::Diagonal(d) => ket
                .amplitudes()
                .iter()
                .zip(d)
                .map(|(c, &v)| c * v)
                .collect(),
            Representation::Dense(m) => m.mul_vec(ket.amplitudes()),
        })
    }
}

/// <O> for pure or mixed states; real for the Hermitian operators built here.
pub fn expectation<'a>(op: &CollectiveOperator, state: impl Into<StateRef<'a>>) -> Result<f64> {
    let state = state.into();
    let dim = op.n as usize + 1;
    match state {
        StateRef::Ket(ket) => {
            let v = op.apply(ket)?;
            Ok(ket
                .amplitudes()
                .iter()
                .zip(&v)
                .map(|(c, x)| (c.conj() * x).re)
                .sum())
        }
        StateRef::Density(rho) => {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: rho.dim() });
            }
            match &op.repr {
                Representation::Diagonal(d) => Ok(rho
                    .diag_probabilities()
                    .iter()
                    .zip(d)
                    .map(|(p, &v)| p * v)
                    .sum()),
                Representation::Dense(m) => Ok(m.mul_mat(rho.matrix()).trace().re),
            }
        }
    }
}

/// Cached eigendecomposition of J_x for one particle count.
///
/// J_x is real symmetric tridiagonal with spectrum exactly {-N/2, ..., N/2};
/// after the QL pass the eigenvalues are snapped onto that grid so repeated
/// rotations stay unitary to machine precision. Immutable after construction,
/// so one instance can serve any number of threads.
#[derive(Debug, Clone)]
pub struct JxEigen {
    n: u32,
    eigenvalues: Vec<f64>,
    // row-major: vectors[i*dim + k] = <m_z = i | m_x = k>
    vectors: Vec<f64>,
}

impl JxEigen {
    pub fn compute(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let dim = n as usize + 1;
        let diag = vec![0.0f64; dim];
        let off: Vec<f64> = ladder_offdiag(n).iter().map(|s| 0.5 * s).collect();
        let (raw, vectors) = linalg::sym_tridiag_eigen(&diag, &off);
        let ms = m_values(n);
        let mut worst = 0.0f64;
        for (v, m) in raw.iter().zip(&ms) {
            worst = worst.max(libm::fabs(v - m));
        }
        assert!(
            worst < 1e-8 * (1.0 + n as f64),
            "Jx spectrum deviated from the m grid"
        );
        Ok(JxEigen { n, eigenvalues: ms, vectors })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n as usize + 1
    }

    /// Snapped eigenvalues (the m grid, ascending).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// <m_z = i | m_x = k> as a row-major real matrix.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// exp(i theta Jx) |psi> in O(dim^2).
    pub fn apply_rotation(&self, theta: f64, amps: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        debug_assert_eq!(amps.len(), dim);
        // y = V^T psi
        let mut y = vec![C64::new(0.0, 0.0); dim];
        for (i, &a) in amps.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let row = &self.vectors[i * dim..(i + 1) * dim];
            for (yk, &vik) in y.iter_mut().zip(row) {
                *yk += a * vik;
            }
        }
        for (k, yk) in y.iter_mut().enumerate() {
            *yk *= phase(theta * self.eigenvalues[k]);
        }
        // V y
        (0..dim)
            .map(|i| {
                let row = &self.vectors[i * dim..(i + 1) * dim];
                row.iter().zip(&y).map(|(&vik, yk)| yk * vik).sum()
            })
            .collect()
    }

    /// Dense exp(i theta Jx).
    pub fn rotation(&self, theta: f64) -> CMat {
        let dim = self.dim();
        let mut out = CMat::zeros(dim);
        // (V e^{i theta Lambda} V^T)_{ij} = sum_k V_ik e^{i theta m_k} V_jk
        for i in 0..dim {
            let ri = &self.vectors[i * dim..(i + 1) * dim];
            for (k, &f) in ri.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let w = phase(theta * self.eigenvalues[k]) * f;
                for j in 0..dim {
                    out[(i, j)] += w * self.vectors[j * dim + k];
                }
            }
        }
        out
    }

    /// Projection of a state onto the J_x eigenbasis: c_k = <m_x = k | psi>.
    pub fn project_x(&self, ket: &DickeKet) -> Vec<C64> {
        let dim = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let a = ket.amplitudes()[i];
            let row = &self.vectors[i * dim..(i + 1) * dim];
            for k in 0..dim {
                out[k] += row[k] * a;
            }
        }
        out
    }

    /// Projection onto the J_y eigenbasis, using |m_y> = e^{-i pi/2 Jz} |m_x>.
    pub fn project_y(&self, ket: &DickeKet) -> Vec<C64> {
        let ms = m_values(self.n);
        let rotated: Vec<C64> = ket
            .amplitudes()
            .iter()
            .zip(&ms)
            .map(|(a, &m)| a * phase(core::f64::consts::FRAC_PI_2 * m))
            .collect();
        let tmp = DickeKet::from_amplitudes_unchecked(self.n, rotated);
        self.project_x(&tmp)
    }
}

/// Dense exp(i theta Jx); convenience wrapper that computes the
/// eigendecomposition on the spot. Reuse [`JxEigen`] when applying many
/// rotations at the same particle count.
pub fn rotation_x(n: u32, theta: f64) -> Result<CMat> {
    Ok(JxEigen::compute(n)?.rotation(theta))
}

/// Coherent spin state |xi(theta, phi)> = e^{i phi Jz} e^{i theta Jx} |(N/2)_z>,
/// built by actually applying the two factors in that order.
pub fn css_state(n: u32, theta: f64, phi: f64) -> Result<DickeKet> {
    let eig = JxEigen::compute(n)?;
    css_state_with(&eig, theta, phi)
}

/// Same as [`css_state`] against a prebuilt eigendecomposition.
pub fn css_state_with(eig: &JxEigen, theta: f64, phi: f64) -> Result<DickeKet> {
    let pol = polarized_state(eig.n())?;
    let rotated = eig.apply_rotation(theta, pol.amplitudes());
    let ms = m_values(eig.n());
    let amps = rotated
        .into_iter()
        .zip(&ms)
        .map(|(c, &m)| c * phase(phi * m))
        .collect();
    Ok(DickeKet::from_amplitudes_unchecked(eig.n(), amps))
}
