//! Multi-parameter estimation: quantum Fisher matrices for pure states,
//! probability-derivative engines, classical Fisher matrices, and
//! Cramer–Rao inversion.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::channels::{DephasingGenerator, DephasingSpec, ExperimentConfig, Pipeline};
use crate::convention::JzConvention;
use crate::dicke::{a_values, m_values, CollectiveOperator, DickeKet, Representation};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::C64;

/// Probability floor below which CFI outcomes need a significant derivative
/// to be counted.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-14;

/// Absolute probability below which a sub-floor outcome is never trusted:
/// amplitudes carry ~1e-13 of propagation rounding, so probabilities under
/// its square are indistinguishable from noise and dividing by them would
/// amplify garbage.
pub const PROB_NOISE_FLOOR: f64 = 1e-26;

/// Flag level for the nuisance-correlation entries of a decoupling report.
pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 1e-2;

/// Flag level for raw derivative-profile overlap (the failure-mode detector).
pub const DEFAULT_COSINE_THRESHOLD: f64 = 0.5;

/// The estimable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterId {
    Alpha,
    Beta,
    DeltaA,
    DeltaJz,
}

impl ParameterId {
    pub const ALL: [ParameterId; 4] =
        [ParameterId::Alpha, ParameterId::Beta, ParameterId::DeltaA, ParameterId::DeltaJz];

    pub fn name(self) -> &'static str {
        match self {
            ParameterId::Alpha => "alpha",
            ParameterId::Beta => "beta",
            ParameterId::DeltaA => "delta_A",
            ParameterId::DeltaJz => "delta_Jz",
        }
    }

    pub fn parse(s: &str) -> Option<ParameterId> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// A Hermitian generator for QFI purposes: either a diagonal profile over the
/// Dicke basis or a dense matrix.
#[derive(Debug, Clone)]
pub enum Generator {
    Diagonal(Vec<f64>),
    Dense(CMat),
}

impl Generator {
    /// Wraps a dense matrix, rejecting non-Hermitian input.
    pub fn dense(mat: CMat) -> Result<Generator> {
        let defect = mat.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NonHermitian { max_asym: defect });
        }
        Ok(Generator::Dense(mat))
    }

    pub fn from_operator(op: &CollectiveOperator) -> Generator {
        match op.representation() {
            Representation::Diagonal(d) => Generator::Diagonal(d.clone()),
            Representation::Dense(m) => Generator::Dense(m.clone()),
        }
    }

    /// Generator conjugate to a unitary parameter. Dephasing magnitudes have
    /// no pure-state QFI generator and are rejected; only the classical
    /// engine covers them.
    pub fn for_parameter(
        param: ParameterId,
        n: u32,
        convention: JzConvention,
    ) -> Result<Generator> {
        match param {
            ParameterId::Alpha => Ok(Generator::Diagonal(a_values(n))),
            ParameterId::Beta => {
                let w = convention.beta_weight();
                Ok(Generator::Diagonal(m_values(n).into_iter().map(|m| w * m).collect()))
            }
            ParameterId::DeltaA | ParameterId::DeltaJz => {
                Err(Error::UnsupportedParameter("dephasing magnitudes in the pure-state QFI"))
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Generator::Diagonal(d) => d.len(),
            Generator::Dense(m) => m.dim(),
        }
    }

    fn apply(&self, ket: &DickeKet) -> Vec<C64> {
        match self {
            Generator::Diagonal(d) => ket
                .amplitudes()
                .iter()
                .zip(d)
                .map(|(c, &v)| c * v)
                .collect(),
            Generator::Dense(m) => m.mul_vec(ket.amplitudes()),
        }
    }
}

/// Symmetric parameter-information matrix over an ordered parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    params: Vec<ParameterId>,
    values: Vec<f64>, // row-major k x k
}

impl FisherMatrix {
    pub fn new(params: Vec<ParameterId>, values: Vec<f64>) -> Result<Self> {
        let k = params.len();
        if values.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, got: values.len() });
        }
        Ok(FisherMatrix { params, values })
    }

    pub fn params(&self) -> &[ParameterId] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.params.len() + j]
    }

    pub fn index_of(&self, param: ParameterId) -> Option<usize> {
        self.params.iter().position(|&p| p == param)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let k = self.dim();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                worst = worst.max(libm::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.values, self.dim()).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Pure-state QFI in covariance form:
/// `F_ij = 4 ( Re<G_i psi | G_j psi> - <G_i><G_j> )`.
pub fn qfi_pure(state: &DickeKet, generators: &[Generator]) -> Result<Vec<f64>> {
    let k = generators.len();
    let dim = state.dim();
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
        }
        if let Generator::Dense(m) = g {
            let defect = m.hermiticity_defect();
            if defect > 1e-12 {
                return Err(Error::NonHermitian { max_asym: defect });
            }
        }
    }
    let applied: Vec<Vec<C64>> = generators.iter().map(|g| g.apply(state)).collect();
    let means: Vec<f64> = applied
        .iter()
        .map(|v| inner(state.amplitudes(), v).re)
        .collect();
    let mut out = vec![0.0f64; k * k];
    for i in 0..k {
        for j in i..k {
            let f = 4.0 * (inner(&applied[i], &applied[j]).re - means[i] * means[j]);
            out[i * k + j] = f;
            out[j * k + i] = f;
        }
    }
    Ok(out)
}

/// The same matrix computed from the raw tangent-vector formula
/// `F_ij = 2 ( <d_i|d_j> + <d_j|d_i> - 2 <psi|d_i><d_j|psi> )`
/// with |d_i> = i G_i |psi>. Kept as an independent route; the two must agree
/// for Hermitian parameter-independent generators.
pub fn qfi_pure_literal(state: &DickeKet, generators: &[Generator]) -> Result<Vec<f64>> {
    let k = generators.len();
    let dim = state.dim();
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
        }
    }
    let i_unit = C64::new(0.0, 1.0);
    let tangents: Vec<Vec<C64>> = generators
        .iter()
        .map(|g| g.apply(state).into_iter().map(|c| i_unit * c).collect())
        .collect();
    let overlaps: Vec<C64> = tangents
        .iter()
        .map(|t| inner(state.amplitudes(), t))
        .collect();
    let mut out = vec![0.0f64; k * k];
    for i in 0..k {
        for j in 0..k {
            let dd = inner(&tangents[i], &tangents[j]);
            let f = 2.0 * (dd + dd.conj() - 2.0 * overlaps[i] * overlaps[j].conj());
            debug_assert!(libm::fabs(f.im) < 1e-9 * (1.0 + libm::fabs(f.re)));
            out[i * k + j] = f.re;
        }
    }
    Ok(out)
}

/// Labeled QFI over estimable parameters (alpha and beta only).
pub fn qfi_matrix(
    state: &DickeKet,
    params: &[ParameterId],
    convention: JzConvention,
) -> Result<FisherMatrix> {
    let generators: Vec<Generator> = params
        .iter()
        .map(|&p| Generator::for_parameter(p, state.n(), convention))
        .collect::<Result<_>>()?;
    let values = qfi_pure(state, &generators)?;
    FisherMatrix::new(params.to_vec(), values)
}

/// Outcome probabilities with one derivative column per parameter, all
/// evaluated at the config's own parameter values.
#[derive(Debug, Clone)]
pub struct DerivativeTable {
    pub n: u32,
    pub params: Vec<ParameterId>,
    pub probabilities: Vec<f64>,
    /// `derivatives[i][m]` = dP_m / d params[i].
    pub derivatives: Vec<Vec<f64>>,
}

impl DerivativeTable {
    pub fn column(&self, param: ParameterId) -> Option<&[f64]> {
        self.params
            .iter()
            .position(|&p| p == param)
            .map(|i| self.derivatives[i].as_slice())
    }
}

fn unitary_generator_values(param: ParameterId, n: u32, convention: JzConvention) -> Vec<f64> {
    match param {
        ParameterId::Alpha => a_values(n),
        ParameterId::Beta => {
            let w = convention.beta_weight();
            m_values(n).into_iter().map(|m| w * m).collect()
        }
        _ => unreachable!("unitary parameters only"),
    }
}

fn dephasing_generator_of(param: ParameterId) -> DephasingGenerator {
    match param {
        ParameterId::DeltaA => DephasingGenerator::A,
        ParameterId::DeltaJz => DephasingGenerator::Jz,
        _ => unreachable!("dephasing parameters only"),
    }
}

/// Analytic probability derivatives.
///
/// Unitary parameters insert the generator next to the mid-circuit state and
/// take `-2 Im` of the recombined diagonal; dephasing magnitudes push the
/// exact d rho / d delta (see [`crate::channels::lindblad_derivative`])
/// through the recombiner. With no dephasing configured everything stays in
/// state-vector form.
pub fn prob_derivatives_analytic(
    config: &ExperimentConfig,
    params: &[ParameterId],
    convention: JzConvention,
) -> Result<DerivativeTable> {
    let pipe = Pipeline::new(config.clone(), convention)?;
    prob_derivatives_for_pipeline(&pipe, params)
}

/// As [`prob_derivatives_analytic`] against an already-built pipeline.
pub fn prob_derivatives_for_pipeline(
    pipe: &Pipeline,
    params: &[ParameterId],
) -> Result<DerivativeTable> {
    let config = pipe.config();
    let convention = pipe.convention();
    let n = config.n;
    let dim = n as usize + 1;

    let (probabilities, derivatives) = match pipe.mid_density() {
        None => {
            // pure path: propagate generator-weighted copies of the state
            let phi = pipe.mid_ket();
            let u = pipe.apply_recombiner(phi.amplitudes());
            let p: Vec<f64> = u.iter().map(|c| c.norm_sqr()).collect();
            let mut cols = Vec::with_capacity(params.len());
            for &param in params {
                let col = match param {
                    ParameterId::Alpha | ParameterId::Beta => {
                        let g = unitary_generator_values(param, n, convention);
                        let weighted: Vec<C64> = phi
                            .amplitudes()
                            .iter()
                            .zip(&g)
                            .map(|(c, &v)| c * v)
                            .collect();
                        let ug = pipe.apply_recombiner(&weighted);
                        u.iter()
                            .zip(&ug)
                            .map(|(um, ugm)| -2.0 * (um.conj() * ugm).im)
                            .collect::<Vec<f64>>()
                    }
                    ParameterId::DeltaA | ParameterId::DeltaJz => {
                        let lam = dephasing_generator_of(param).eigenvalues(n);
                        let l1: Vec<C64> = phi
                            .amplitudes()
                            .iter()
                            .zip(&lam)
                            .map(|(c, &v)| c * v)
                            .collect();
                        let l2: Vec<C64> = phi
                            .amplitudes()
                            .iter()
                            .zip(&lam)
                            .map(|(c, &v)| c * v * v)
                            .collect();
                        let ul1 = pipe.apply_recombiner(&l1);
                        let ul2 = pipe.apply_recombiner(&l2);
                        // dP_m = 2 |(U2 L phi)_m|^2 - 2 Re[(U2 L^2 phi)_m conj(u_m)]
                        (0..dim)
                            .map(|m| 2.0 * ul1[m].norm_sqr() - 2.0 * (u[m].conj() * ul2[m]).re)
                            .collect::<Vec<f64>>()
                    }
                };
                cols.push(col);
            }
            (p, cols)
        }
        Some(rho) => {
            let u2 = pipe.recombiner_dense();
            let rho_f = rho.matrix().conjugate_with(&u2);
            let p: Vec<f64> = rho_f.diagonal().iter().map(|c| c.re).collect();
            let mut cols = Vec::with_capacity(params.len());
            for &param in params {
                let mut m = rho.matrix().clone();
                match param {
                    ParameterId::Alpha | ParameterId::Beta => {
                        let g = unitary_generator_values(param, n, convention);
                        for i in 0..dim {
                            for j in 0..dim {
                                m[(i, j)] *= C64::new(0.0, g[i] - g[j]);
                            }
                        }
                    }
                    ParameterId::DeltaA | ParameterId::DeltaJz => {
                        let lam = dephasing_generator_of(param).eigenvalues(n);
                        for i in 0..dim {
                            for j in 0..dim {
                                let d = lam[i] - lam[j];
                                m[(i, j)] *= -d * d;
                            }
                        }
                    }
                }
                let pushed = m.conjugate_with(&u2);
                cols.push(pushed.diagonal().iter().map(|c| c.re).collect());
            }
            (p, cols)
        }
    };

    Ok(DerivativeTable { n, params: params.to_vec(), probabilities, derivatives })
}

/// Finite-difference derivatives for cross-validation: central stencils for
/// the phases, a one-sided second-order stencil for dephasing magnitudes at
/// the delta = 0 boundary.
pub fn prob_derivatives_fd(
    config: &ExperimentConfig,
    params: &[ParameterId],
    convention: JzConvention,
    step: f64,
) -> Result<DerivativeTable> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::NonPositiveStep(step));
    }
    let probs_at = |cfg: &ExperimentConfig| -> Result<Vec<f64>> {
        Ok(Pipeline::new(cfg.clone(), convention)?.final_probabilities())
    };
    let base_p = probs_at(config)?;
    let mut derivatives = Vec::with_capacity(params.len());
    for &param in params {
        let col = match param {
            ParameterId::Alpha | ParameterId::Beta => {
                let mut up = config.clone();
                let mut dn = config.clone();
                match param {
                    ParameterId::Alpha => {
                        up.gravity.alpha += step;
                        dn.gravity.alpha -= step;
                    }
                    _ => {
                        up.gravity.beta += step;
                        dn.gravity.beta -= step;
                    }
                }
                let pu = probs_at(&up)?;
                let pd = probs_at(&dn)?;
                pu.iter()
                    .zip(&pd)
                    .map(|(a, b)| (a - b) / (2.0 * step))
                    .collect::<Vec<f64>>()
            }
            ParameterId::DeltaA | ParameterId::DeltaJz => {
                let gen = dephasing_generator_of(param);
                let base_delta = config
                    .dephasing
                    .iter()
                    .find(|s| s.generator == gen)
                    .map(|s| s.delta)
                    .unwrap_or(0.0);
                let with_delta = |d: f64| -> ExperimentConfig {
                    let mut cfg = config.clone();
                    if let Some(s) = cfg.dephasing.iter_mut().find(|s| s.generator == gen) {
                        s.delta = d;
                    } else {
                        cfg.dephasing.push(DephasingSpec { generator: gen, delta: d });
                    }
                    cfg
                };
                if base_delta < step {
                    // one-sided second-order stencil on the delta >= 0 domain
                    let p0 = probs_at(&with_delta(base_delta))?;
                    let p1 = probs_at(&with_delta(base_delta + step))?;
                    let p2 = probs_at(&with_delta(base_delta + 2.0 * step))?;
                    (0..p0.len())
                        .map(|m| (-3.0 * p0[m] + 4.0 * p1[m] - p2[m]) / (2.0 * step))
                        .collect::<Vec<f64>>()
                } else {
                    let pu = probs_at(&with_delta(base_delta + step))?;
                    let pd = probs_at(&with_delta(base_delta - step))?;
                    pu.iter()
                        .zip(&pd)
                        .map(|(a, b)| (a - b) / (2.0 * step))
                        .collect::<Vec<f64>>()
                }
            }
        };
        derivatives.push(col);
    }
    Ok(DerivativeTable { n: config.n, params: params.to_vec(), probabilities: base_p, derivatives })
}

/// An outcome whose probability vanished while its derivative did not:
/// formally infinite information, reported instead of summed.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergingTerm {
    pub outcome: usize,
    pub probability: f64,
    pub max_abs_derivative: f64,
}

/// Classical Fisher matrix plus bookkeeping about floored outcomes.
#[derive(Debug, Clone)]
pub struct CfiReport {
    pub matrix: FisherMatrix,
    /// Outcomes dropped for having both probability and derivatives negligible.
    pub skipped: usize,
    pub diverging: Vec<DivergingTerm>,
}

/// `F_ij = sum_m dP_i dP_j / P_m` with floor handling.
///
/// Outcomes with `P_m >= floor` always count. Below the floor an outcome still
/// counts when any derivative exceeds `sqrt(floor)` times that column's peak
/// (the term d^2/P is scale-free in the small-offset regime, so sub-floor
/// probabilities can still carry real information); if such an outcome has no
/// probability left at all it is reported as diverging rather than divided.
pub fn cfi_matrix(table: &DerivativeTable, floor: f64) -> Result<CfiReport> {
    if floor.is_nan() || floor < 0.0 {
        return Err(Error::InvalidInput {
            field: "floor",
            reason: String::from("must be >= 0"),
        });
    }
    let k = table.params.len();
    let outcomes = table.probabilities.len();
    for col in &table.derivatives {
        if col.len() != outcomes {
            return Err(Error::DimensionMismatch { expected: outcomes, got: col.len() });
        }
    }
    for (m, &p) in table.probabilities.iter().enumerate() {
        if p < -1e-12 {
            return Err(Error::InvalidProbability { index: m, value: p });
        }
    }
    let guards: Vec<f64> = table
        .derivatives
        .iter()
        .map(|col| libm::sqrt(floor) * col.iter().fold(0.0f64, |a, &v| a.max(libm::fabs(v))))
        .collect();

    let mut values = vec![0.0f64; k * k];
    let mut skipped = 0usize;
    let mut diverging = Vec::new();
    for m in 0..outcomes {
        let p = table.probabilities[m].max(0.0);
        if p < floor {
            let significant = (0..k)
                .any(|i| guards[i] > 0.0 && libm::fabs(table.derivatives[i][m]) >= guards[i]);
            if !significant {
                skipped += 1;
                continue;
            }
            if p == 0.0 {
                let dmax = (0..k)
                    .map(|i| libm::fabs(table.derivatives[i][m]))
                    .fold(0.0, f64::max);
                diverging.push(DivergingTerm {
                    outcome: m,
                    probability: table.probabilities[m],
                    max_abs_derivative: dmax,
                });
                continue;
            }
            if p < PROB_NOISE_FLOOR {
                skipped += 1;
                continue;
            }
        } else if p == 0.0 {
            // floor == 0 with an exactly-zero probability and zero derivatives
            skipped += 1;
            continue;
        }
        for i in 0..k {
            let di = table.derivatives[i][m];
            for j in i..k {
                let t = di * table.derivatives[j][m] / p;
                values[i * k + j] += t;
                if j != i {
                    values[j * k + i] += t;
                }
            }
        }
    }
    Ok(CfiReport {
        matrix: FisherMatrix::new(table.params.clone(), values)?,
        skipped,
        diverging,
    })
}

/// Cramer–Rao bound after k repetitions.
#[derive(Debug, Clone)]
pub struct CrbReport {
    pub params: Vec<ParameterId>,
    /// `[F^-1]_ii / k` per parameter.
    pub variances: Vec<f64>,
    pub repetitions: u64,
    /// `sqrt([F^-1]_aa / k)` when alpha is among the parameters.
    pub detectable_alpha: Option<f64>,
    pub condition: f64,
    /// Present when a pseudo-inverse was taken (opt-in only).
    pub degenerate_directions: Vec<String>,
}

/// Inverts a Fisher matrix into per-parameter variances. A condition number
/// beyond 1e12 counts as singular; the pseudo-inverse is opt-in and always
/// reports which directions were dropped.
pub fn crb_invert(f: &FisherMatrix, repetitions: u64, allow_pseudo: bool) -> Result<CrbReport> {
    if repetitions == 0 {
        return Err(Error::NonPositiveQuantity { name: "repetitions", value: 0.0 });
    }
    let k = f.dim();
    let inv = linalg::sym_inverse(f.values(), k, allow_pseudo)?;
    if inv.condition > 1e12 && !allow_pseudo {
        return Err(Error::SingularMatrix {
            condition: inv.condition,
            degenerate: String::from(
                "condition number beyond 1e12; rerun with the pseudo-inverse opt-in",
            ),
        });
    }
    let kf = repetitions as f64;
    let variances: Vec<f64> = (0..k).map(|i| inv.inverse[i * k + i] / kf).collect();
    let detectable_alpha = f
        .index_of(ParameterId::Alpha)
        .map(|ia| libm::sqrt(inv.inverse[ia * k + ia] / kf));
    Ok(CrbReport {
        params: f.params().to_vec(),
        variances,
        repetitions,
        detectable_alpha,
        condition: inv.condition,
        degenerate_directions: inv.degenerate,
    })
}

/// One nuisance parameter's coupling to alpha.
#[derive(Debug, Clone)]
pub struct DecouplingRow {
    pub param: ParameterId,
    /// F_{alpha,k} / F_{alpha,alpha} (raw, parameterization-dependent).
    pub raw_ratio: f64,
    /// F_{alpha,k} / sqrt(F_{alpha,alpha} F_{k,k}) (scale-free).
    pub correlation: f64,
    /// Cosine between the derivative profiles dP_alpha and dP_k; near +-1
    /// means the two parameters imprint the same signature on P(J_z).
    pub profile_cosine: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct DecouplingReport {
    pub rows: Vec<DecouplingRow>,
    pub correlation_threshold: f64,
    pub cosine_threshold: f64,
    /// (1 / [F^-1]_{alpha,alpha}) / F_{alpha,alpha}: 1 means the nuisance
    /// parameters cost nothing.
    pub alpha_information_retention: Option<f64>,
}

impl DecouplingReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = libm::sqrt(a.iter().map(|x| x * x).sum());
    let nb = libm::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

/// How strongly each nuisance parameter couples to alpha for a given scheme.
pub fn decoupling_report(
    config: &ExperimentConfig,
    params: &[ParameterId],
    convention: JzConvention,
    floor: f64,
    correlation_threshold: f64,
    cosine_threshold: f64,
) -> Result<DecouplingReport> {
    let ia = params
        .iter()
        .position(|&p| p == ParameterId::Alpha)
        .ok_or(Error::UnsupportedParameter("decoupling report needs alpha among the parameters"))?;
    let table = prob_derivatives_analytic(config, params, convention)?;
    let report = cfi_matrix(&table, floor)?;
    let f = &report.matrix;
    let faa = f.get(ia, ia);
    let mut rows = Vec::new();
    for (k, &param) in params.iter().enumerate() {
        if k == ia {
            continue;
        }
        let fak = f.get(ia, k);
        let fkk = f.get(k, k);
        let correlation = if faa > 0.0 && fkk > 0.0 { fak / libm::sqrt(faa * fkk) } else { 0.0 };
        let profile_cosine = cosine(&table.derivatives[ia], &table.derivatives[k]);
        let flagged = libm::fabs(correlation) > correlation_threshold
            || libm::fabs(profile_cosine) > cosine_threshold;
        rows.push(DecouplingRow {
            param,
            raw_ratio: if faa != 0.0 { fak / faa } else { 0.0 },
            correlation,
            profile_cosine,
            flagged,
        });
    }
    let retention = if params.len() > 1 && faa > 0.0 {
        crb_invert(f, 1, true).ok().and_then(|crb| {
            let v = crb.variances[ia];
            if v > 0.0 {
                Some(1.0 / v / faa)
            } else {
                None
            }
        })
    } else {
        None
    };
    Ok(DecouplingReport {
        rows,
        correlation_threshold,
        cosine_threshold,
        alpha_information_retention: retention,
    })
}
