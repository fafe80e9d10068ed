//! The interferometer channels: one-axis-twisting preparation, the nonlinear
//! and linear phase evolutions, dephasing maps, and their composition.
//!
//! Everything between preparation and recombination is diagonal in the Dicke
//! basis, so those factors commute; the pipeline fixes a canonical order
//! (linear phase, nonlinear phase, dephasing maps sorted by generator) and the
//! commutation is asserted by tests rather than assumed.

use alloc::vec::Vec;

use crate::convention::JzConvention;
use crate::dicke::{
    a_values, m_values, polarized_state, DickeDensity, DickeKet, JxEigen,
};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::{phase, C64, FIGURE_BASE_OFFSET};

/// One-axis twisting strength chi*tau (radians of J_z^2 phase).
/// The macroscopic superposition is produced at chi*tau = pi/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistingSpec {
    pub chi_tau: f64,
}

impl TwistingSpec {
    pub const CAT: TwistingSpec = TwistingSpec { chi_tau: core::f64::consts::FRAC_PI_4 };
}

/// Dimensionless phases accumulated during the interrogation time.
/// `alpha` multiplies A (nonlinear, mode-local pair energy), `beta` the
/// J_z generator selected by the convention, and `gamma` the total number
/// (a global phase at fixed N).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GravityParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Which operator's eigenbasis dephases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DephasingGenerator {
    /// A = a†a†aa + b†b†bb (pair interaction energy).
    A,
    /// J_z (eigenvalues m; any rescaling of the generator is absorbed into delta).
    Jz,
}

impl DephasingGenerator {
    pub fn name(self) -> &'static str {
        match self {
            DephasingGenerator::A => "A",
            DephasingGenerator::Jz => "Jz",
        }
    }

    /// Eigenvalue profile lambda_m over the Dicke basis.
    pub fn eigenvalues(self, n: u32) -> Vec<f64> {
        match self {
            DephasingGenerator::A => a_values(n),
            DephasingGenerator::Jz => m_values(n),
        }
    }
}

/// One dephasing map exp(delta L[Gamma]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingSpec {
    pub generator: DephasingGenerator,
    pub delta: f64,
}

impl DephasingSpec {
    pub fn new(generator: DephasingGenerator, delta: f64) -> Result<Self> {
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::NegativeDelta(delta));
        }
        Ok(DephasingSpec { generator, delta })
    }
}

/// Which unitary closes the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recombiner {
    /// U2 = U0^dag: echoes the preparation, projecting back onto |Psi_0>.
    #[default]
    U0Dagger,
    /// U2 = U0: applies the preparation again; separates the dephasing
    /// signatures from the nonlinear phase.
    U0,
}

impl Recombiner {
    pub fn name(self) -> &'static str {
        match self {
            Recombiner::U0Dagger => "U0_DAGGER",
            Recombiner::U0 => "U0",
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: u32,
    pub twisting: TwistingSpec,
    pub gravity: GravityParams,
    pub dephasing: Vec<DephasingSpec>,
    pub recombiner: Recombiner,
}

impl ExperimentConfig {
    /// Plain config with all phases zero and no dephasing.
    pub fn zeroed(n: u32, recombiner: Recombiner) -> Self {
        ExperimentConfig {
            n,
            twisting: TwistingSpec::CAT,
            gravity: GravityParams::default(),
            dephasing: Vec::new(),
            recombiner,
        }
    }

    /// The figure-reproduction operating point: all small parameters offset
    /// to 1e-8 so probability derivatives are well conditioned.
    pub fn figure_defaults(n: u32, recombiner: Recombiner, with_dephasing: bool) -> Self {
        let eps = FIGURE_BASE_OFFSET;
        let dephasing = if with_dephasing {
            alloc::vec![
                DephasingSpec { generator: DephasingGenerator::A, delta: eps },
                DephasingSpec { generator: DephasingGenerator::Jz, delta: eps },
            ]
        } else {
            Vec::new()
        };
        ExperimentConfig {
            n,
            twisting: TwistingSpec::CAT,
            gravity: GravityParams { alpha: eps, beta: eps, gamma: 0.0 },
            dephasing,
            recombiner,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if !self.twisting.chi_tau.is_finite() {
            return Err(Error::InvalidInput {
                field: "chi_tau",
                reason: alloc::string::String::from("must be finite"),
            });
        }
        for v in [self.gravity.alpha, self.gravity.beta, self.gravity.gamma] {
            if !v.is_finite() {
                return Err(Error::InvalidInput {
                    field: "gravity",
                    reason: alloc::string::String::from("alpha, beta, gamma must be finite"),
                });
            }
        }
        for d in &self.dephasing {
            if d.delta.is_nan() || d.delta < 0.0 {
                return Err(Error::NegativeDelta(d.delta));
            }
        }
        Ok(())
    }
}

/// U0 |psi> with U0 = exp(i Jx pi/2) exp(i chi tau Jz^2) exp(i Jx pi/2),
/// factors applied right to left.
pub fn oat_prepare(state: &DickeKet, spec: &TwistingSpec) -> Result<DickeKet> {
    let eig = JxEigen::compute(state.n())?;
    Ok(oat_prepare_with(&eig, state, spec))
}

/// [`oat_prepare`] against a prebuilt J_x eigendecomposition.
pub fn oat_prepare_with(eig: &JxEigen, state: &DickeKet, spec: &TwistingSpec) -> DickeKet {
    let half_pi = core::f64::consts::FRAC_PI_2;
    let ms = m_values(state.n());
    let mut amps = eig.apply_rotation(half_pi, state.amplitudes());
    for (a, &m) in amps.iter_mut().zip(&ms) {
        *a *= phase(spec.chi_tau * m * m);
    }
    let amps = eig.apply_rotation(half_pi, &amps);
    DickeKet::from_amplitudes_unchecked(state.n(), amps)
}

/// Exact inverse of [`oat_prepare_with`] (conjugate factors in reverse order).
pub fn oat_invert_with(eig: &JxEigen, state: &DickeKet, spec: &TwistingSpec) -> DickeKet {
    let half_pi = core::f64::consts::FRAC_PI_2;
    let ms = m_values(state.n());
    let mut amps = eig.apply_rotation(-half_pi, state.amplitudes());
    for (a, &m) in amps.iter_mut().zip(&ms) {
        *a *= phase(-spec.chi_tau * m * m);
    }
    let amps = eig.apply_rotation(-half_pi, &amps);
    DickeKet::from_amplitudes_unchecked(state.n(), amps)
}

/// exp(i alpha A) |psi>: c_m <- exp(i alpha (N^2/2 - N + 2 m^2)) c_m.
pub fn apply_quantum_gravity(state: &DickeKet, alpha: f64) -> DickeKet {
    let phases: Vec<C64> = a_values(state.n())
        .into_iter()
        .map(|v| phase(alpha * v))
        .collect();
    state.apply_diag_phase(&phases)
}

/// Density overload of [`apply_quantum_gravity`].
pub fn apply_quantum_gravity_density(rho: &DickeDensity, alpha: f64) -> DickeDensity {
    conjugate_diag_phase(rho, &a_values(rho.n()), alpha)
}

/// exp(i (beta Jz + gamma N+)) |psi>: c_m <- exp(i (beta m + gamma N)) c_m.
///
/// `beta` here multiplies m itself; callers working in the unit convention
/// pass beta pre-scaled by [`JzConvention::beta_weight`].
pub fn apply_classical_gravity(state: &DickeKet, beta: f64, gamma: f64) -> DickeKet {
    let nf = state.n() as f64;
    let phases: Vec<C64> = m_values(state.n())
        .into_iter()
        .map(|m| phase(beta * m + gamma * nf))
        .collect();
    state.apply_diag_phase(&phases)
}

/// Density overload of [`apply_classical_gravity`]; the gamma term cancels in
/// the conjugation as it must.
pub fn apply_classical_gravity_density(rho: &DickeDensity, beta: f64, _gamma: f64) -> DickeDensity {
    conjugate_diag_phase(rho, &m_values(rho.n()), beta)
}

fn conjugate_diag_phase(rho: &DickeDensity, values: &[f64], angle: f64) -> DickeDensity {
    let dim = rho.dim();
    let mut out = rho.matrix().clone();
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] *= phase(angle * (values[i] - values[j]));
        }
    }
    DickeDensity::from_mat_unchecked(rho.n(), out)
}

/// The dephasing map rho_nm <- rho_nm exp(-delta (lambda_n - lambda_m)^2).
/// The diagonal (and hence the J_z distribution) is untouched; underflow of
/// the factor to exactly zero in the delta -> infinity limit is fine.
pub fn dephase(rho: &DickeDensity, spec: &DephasingSpec) -> Result<DickeDensity> {
    if spec.delta.is_nan() || spec.delta < 0.0 {
        return Err(Error::NegativeDelta(spec.delta));
    }
    let lam = spec.generator.eigenvalues(rho.n());
    let dim = rho.dim();
    let mut out = rho.matrix().clone();
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let d = lam[i] - lam[j];
            out[(i, j)] *= libm::exp(-spec.delta * d * d);
        }
    }
    Ok(DickeDensity::from_mat_unchecked(rho.n(), out))
}

/// d rho / d delta for the dephasing family: element (n, m) is
/// -(lambda_n - lambda_m)^2 rho_nm. At delta = 0 this is exactly the
/// Lindblad dissipator L[Gamma] rho = Gamma rho Gamma - (Gamma^2 rho + rho Gamma^2)/2
/// for a generator diagonal in this basis; at delta > 0 the exponential damping
/// is already folded into rho, so the same expression stays exact.
pub fn lindblad_derivative(rho: &DickeDensity, generator: DephasingGenerator) -> CMat {
    let lam = generator.eigenvalues(rho.n());
    let dim = rho.dim();
    let mut out = rho.matrix().clone();
    for i in 0..dim {
        for j in 0..dim {
            let d = lam[i] - lam[j];
            out[(i, j)] *= -d * d;
        }
    }
    out
}

/// One fully-evolved experiment, holding the intermediate states the Fisher
/// engines need. Construction is pure; instances are immutable.
pub struct Pipeline {
    config: ExperimentConfig,
    convention: JzConvention,
    eig: JxEigen,
    prepared: DickeKet,
    mid_ket: DickeKet,
    mid_density: Option<DickeDensity>,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, convention: JzConvention) -> Result<Self> {
        Self::with_initial(config, convention, None)
    }

    /// As [`Pipeline::new`], but optionally replacing the twisting-prepared
    /// state with an externally supplied one (e.g. an imported snapshot).
    pub fn with_initial(
        config: ExperimentConfig,
        convention: JzConvention,
        initial: Option<DickeKet>,
    ) -> Result<Self> {
        config.validate()?;
        let eig = JxEigen::compute(config.n)?;
        let prepared = match initial {
            Some(k) => {
                if k.n() != config.n {
                    return Err(Error::DimensionMismatch {
                        expected: config.n as usize + 1,
                        got: k.n() as usize + 1,
                    });
                }
                k
            }
            None => oat_prepare_with(&eig, &polarized_state(config.n)?, &config.twisting),
        };

        // canonical order: linear phase, nonlinear phase, then dephasing maps
        // sorted by generator (all diagonal, so the order is a convention)
        let beta_eff = convention.beta_weight() * config.gravity.beta;
        let mid_ket = apply_quantum_gravity(
            &apply_classical_gravity(&prepared, beta_eff, config.gravity.gamma),
            config.gravity.alpha,
        );
        let mid_density = if config.dephasing.is_empty() {
            None
        } else {
            let mut rho = DickeDensity::from_pure(&mid_ket);
            let mut specs = config.dephasing.clone();
            specs.sort_by_key(|s| s.generator);
            for s in &specs {
                rho = dephase(&rho, s)?;
            }
            Some(rho)
        };
        Ok(Pipeline { config, convention, eig, prepared, mid_ket, mid_density })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn convention(&self) -> JzConvention {
        self.convention
    }

    pub fn eig(&self) -> &JxEigen {
        &self.eig
    }

    /// State after preparation, before any interrogation phases.
    pub fn prepared(&self) -> &DickeKet {
        &self.prepared
    }

    /// Pure state after the diagonal phase factors (before dephasing).
    pub fn mid_ket(&self) -> &DickeKet {
        &self.mid_ket
    }

    /// Mixed mid-state when dephasing is configured.
    pub fn mid_density(&self) -> Option<&DickeDensity> {
        self.mid_density.as_ref()
    }

    /// Applies the configured recombiner to a state vector.
    pub fn apply_recombiner(&self, amps: &[C64]) -> Vec<C64> {
        let half_pi = core::f64::consts::FRAC_PI_2;
        let chi = self.config.twisting.chi_tau;
        let ms = m_values(self.config.n);
        let (rot, tw) = match self.config.recombiner {
            Recombiner::U0 => (half_pi, chi),
            Recombiner::U0Dagger => (-half_pi, -chi),
        };
        let mut v = self.eig.apply_rotation(rot, amps);
        for (a, &m) in v.iter_mut().zip(&ms) {
            *a *= phase(tw * m * m);
        }
        self.eig.apply_rotation(rot, &v)
    }

    /// Dense matrix of the configured recombiner.
    pub fn recombiner_dense(&self) -> CMat {
        let half_pi = core::f64::consts::FRAC_PI_2;
        let chi = self.config.twisting.chi_tau;
        let (rot, tw) = match self.config.recombiner {
            Recombiner::U0 => (half_pi, chi),
            Recombiner::U0Dagger => (-half_pi, -chi),
        };
        let r = self.eig.rotation(rot);
        let dim = r.dim();
        let ms = m_values(self.config.n);
        // R * diag * R without forming the diagonal matrix
        let mut mid = r.clone();
        for i in 0..dim {
            let p = phase(tw * ms[i] * ms[i]);
            for j in 0..dim {
                mid[(i, j)] *= p;
            }
        }
        r.mul_mat(&mid)
    }

    /// Final pure state; `None` when dephasing makes the output mixed.
    pub fn final_ket(&self) -> Option<DickeKet> {
        if self.mid_density.is_some() {
            return None;
        }
        let amps = self.apply_recombiner(self.mid_ket.amplitudes());
        Some(DickeKet::from_amplitudes_unchecked(self.config.n, amps))
    }

    /// Final state as a density matrix (pure fast path when no dephasing).
    pub fn final_density(&self) -> DickeDensity {
        match &self.mid_density {
            None => DickeDensity::from_pure(&self.final_ket().expect("pure path")),
            Some(rho) => {
                let u2 = self.recombiner_dense();
                DickeDensity::from_mat_unchecked(self.config.n, rho.matrix().conjugate_with(&u2))
            }
        }
    }

    /// J_z distribution of the final state.
    pub fn final_probabilities(&self) -> Vec<f64> {
        match &self.mid_density {
            None => self
                .apply_recombiner(self.mid_ket.amplitudes())
                .iter()
                .map(|c| c.norm_sqr())
                .collect(),
            Some(_) => self.final_density().diag_probabilities(),
        }
    }
}

/// Runs the full scheme and returns the output density matrix.
pub fn run_experiment(config: &ExperimentConfig, convention: JzConvention) -> Result<DickeDensity> {
    Ok(Pipeline::new(config.clone(), convention)?.final_density())
}
