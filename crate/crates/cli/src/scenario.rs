//! Scenario and sweep file schemas (JSON), with validation that names the
//! offending field, and conversions into the core types.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gravispin_core::channels::{
    DephasingGenerator, DephasingSpec, ExperimentConfig, GravityParams, Recombiner, TwistingSpec,
};
use gravispin_core::dicke::DickeKet;
use gravispin_core::feasibility::{PhysicalConfig, G_CODATA, HBAR};
use gravispin_core::fisher::ParameterId;
use gravispin_core::C64;
use gravispin_core::JzConvention;

use crate::error::{CliError, Result};

/// Wire form of the experiment description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentDto {
    pub n: u32,
    pub chi_tau: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub dephasing: Vec<DephasingDto>,
    #[serde(default)]
    pub recombiner: RecombinerDto,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DephasingDto {
    pub generator: GeneratorDto,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum GeneratorDto {
    A,
    Jz,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
pub enum RecombinerDto {
    #[serde(rename = "U0_DAGGER")]
    #[default]
    U0Dagger,
    #[serde(rename = "U0")]
    U0,
}

/// Wire form of the laboratory parameters (SI units).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicalDto {
    pub mass_kg: f64,
    pub sigma_m: f64,
    #[serde(default = "default_separation_factor")]
    pub separation_m: f64,
    pub time_s: f64,
    pub repetitions: u64,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_g() -> f64 {
    G_CODATA
}

fn default_hbar() -> f64 {
    HBAR
}

fn default_separation_factor() -> f64 {
    // resolved against sigma during conversion
    f64::NAN
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ConventionDto {
    Half,
    Unit,
}

impl From<ConventionDto> for JzConvention {
    fn from(c: ConventionDto) -> Self {
        match c {
            ConventionDto::Half => JzConvention::Half,
            ConventionDto::Unit => JzConvention::Unit,
        }
    }
}

/// Which state a state-consuming product operates on.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum StateSelector {
    Polarized,
    Optimal,
    Cat,
    /// The pipeline-prepared state (twisting applied, or the imported
    /// snapshot when one is configured).
    #[default]
    Prepared,
    /// The fully evolved output; requires a dephasing-free pipeline.
    Final,
}

/// One requested product.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputSpec {
    /// J_z distribution of the final state -> jz.csv
    Jz,
    /// State snapshot -> state_<which>.json
    Snapshot {
        #[serde(default)]
        state: StateSelector,
    },
    /// Quantum Fisher matrix -> qfi.json
    Qfi {
        #[serde(default)]
        state: StateSelector,
        #[serde(default = "default_alpha_beta")]
        params: Vec<String>,
    },
    /// Classical Fisher matrix -> cfi.json
    Cfi {
        #[serde(default = "default_alpha_beta")]
        params: Vec<String>,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Cramer-Rao report -> crb.json
    Crb {
        #[serde(default = "default_alpha_beta")]
        params: Vec<String>,
        #[serde(default)]
        repetitions: Option<u64>,
        #[serde(default)]
        allow_pseudo_inverse: bool,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Probability-derivative table -> derivatives.csv
    Derivatives {
        #[serde(default = "default_all_params")]
        params: Vec<String>,
    },
    /// Alpha-decoupling ratio table -> decoupling.json
    Decoupling {
        #[serde(default = "default_all_params")]
        params: Vec<String>,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Figure panel set -> fig{K}{panel}.csv
    Figure { id: String },
    /// Husimi grid -> husimi.csv
    Husimi {
        #[serde(default)]
        state: StateSelector,
        #[serde(default = "default_grid")]
        theta_points: usize,
        #[serde(default = "default_grid")]
        phi_points: usize,
    },
    /// J_x/J_y/J_z projections -> projections.csv
    Projections {
        #[serde(default)]
        state: StateSelector,
    },
    /// Laboratory feasibility report -> feasibility.json
    Feasibility {
        #[serde(default = "default_mc_samples")]
        mc_samples: u64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_alpha_beta() -> Vec<String> {
    vec!["alpha".into(), "beta".into()]
}

fn default_all_params() -> Vec<String> {
    vec!["alpha".into(), "beta".into(), "delta_A".into(), "delta_Jz".into()]
}

fn default_floor() -> f64 {
    gravispin_core::fisher::DEFAULT_PROB_FLOOR
}

fn default_grid() -> usize {
    201
}

fn default_mc_samples() -> u64 {
    0
}

/// Top-level scenario file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub experiment: ExperimentDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionDto>,
    /// Path to a state snapshot that replaces the twisting preparation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_snapshot: Option<String>,
    pub outputs: Vec<OutputSpec>,
}

/// Sweep axis values: explicit list or generated range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize, spacing: SpacingDto },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SpacingDto {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: SweepValues,
    pub base: ScenarioFile,
}

/// State snapshot wire format: amplitudes as [re, im] pairs, ascending m.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDto {
    pub n: u32,
    pub amplitudes: Vec<(f64, f64)>,
}

impl SnapshotDto {
    pub fn from_ket(ket: &DickeKet) -> Self {
        SnapshotDto {
            n: ket.n(),
            amplitudes: ket.amplitudes().iter().map(|c| (c.re, c.im)).collect(),
        }
    }

    pub fn to_ket(&self) -> Result<DickeKet> {
        DickeKet::new(
            self.n,
            self.amplitudes.iter().map(|&(re, im)| C64::new(re, im)).collect(),
        )
        .map_err(|e| CliError::Config(format!("snapshot: {e}")))
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
    let scenario: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    validate_scenario(&scenario)?;
    Ok(scenario)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec> {
    let text = fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    validate_scenario(&spec.base)?;
    sweep_axis(&spec.axis)?;
    let values = resolve_values(&spec.values)?;
    if values.is_empty() {
        return Err(CliError::Config("sweep values: must be nonempty".into()));
    }
    if spec.axis == "sigma" && spec.base.physical.is_none() {
        return Err(CliError::Config(
            "sweep axis sigma requires the base scenario to carry a physical section".into(),
        ));
    }
    Ok(spec)
}

pub fn load_snapshot(path: &Path) -> Result<DickeKet> {
    let text = fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?;
    let dto: SnapshotDto = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    dto.to_ket()
}

pub const SWEEP_AXES: [&str; 7] =
    ["n", "chi_tau", "alpha", "beta", "delta_A", "delta_Jz", "sigma"];

pub fn sweep_axis(axis: &str) -> Result<()> {
    if SWEEP_AXES.contains(&axis) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "sweep axis: unknown '{axis}' (expected one of {})",
            SWEEP_AXES.join(", ")
        )))
    }
}

pub fn resolve_values(values: &SweepValues) -> Result<Vec<f64>> {
    let out = match values {
        SweepValues::List(v) => v.clone(),
        SweepValues::Range { start, stop, count, spacing } => {
            if *count < 1 {
                return Err(CliError::Config("sweep values: count must be >= 1".into()));
            }
            match spacing {
                SpacingDto::Linear => (0..*count)
                    .map(|i| {
                        if *count == 1 {
                            *start
                        } else {
                            start + (stop - start) * i as f64 / (*count as f64 - 1.0)
                        }
                    })
                    .collect(),
                SpacingDto::Log => {
                    if *start <= 0.0 || *stop <= 0.0 {
                        return Err(CliError::Config(
                            "sweep values: log spacing needs positive endpoints".into(),
                        ));
                    }
                    (0..*count)
                        .map(|i| {
                            if *count == 1 {
                                *start
                            } else {
                                let t = i as f64 / (*count as f64 - 1.0);
                                (start.ln() + (stop.ln() - start.ln()) * t).exp()
                            }
                        })
                        .collect()
                }
            }
        }
    };
    for &v in &out {
        if !v.is_finite() {
            return Err(CliError::Config("sweep values: all values must be finite".into()));
        }
    }
    Ok(out)
}

pub fn validate_scenario(s: &ScenarioFile) -> Result<()> {
    if s.outputs.is_empty() {
        return Err(CliError::Config("outputs: at least one output must be requested".into()));
    }
    if s.experiment.n == 0 {
        return Err(CliError::Config("experiment.n: must be at least 1".into()));
    }
    for field in [
        ("chi_tau", s.experiment.chi_tau),
        ("alpha", s.experiment.alpha),
        ("beta", s.experiment.beta),
        ("gamma", s.experiment.gamma),
    ] {
        if !field.1.is_finite() {
            return Err(CliError::Config(format!("experiment.{}: must be finite", field.0)));
        }
    }
    for d in &s.experiment.dephasing {
        if d.delta.is_nan() || d.delta < 0.0 {
            return Err(CliError::Config(format!(
                "experiment.dephasing.delta: must be >= 0, got {}",
                d.delta
            )));
        }
    }
    for out in &s.outputs {
        validate_output(out, s)?;
    }
    Ok(())
}

fn parse_params(raw: &[String], context: &str) -> Result<Vec<ParameterId>> {
    let mut out = Vec::with_capacity(raw.len());
    for name in raw {
        let p = ParameterId::parse(name).ok_or_else(|| {
            CliError::Config(format!(
                "{context}.params: unknown parameter '{name}' (expected alpha, beta, delta_A, delta_Jz)"
            ))
        })?;
        if out.contains(&p) {
            return Err(CliError::Config(format!("{context}.params: duplicate '{name}'")));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("{context}.params: must be nonempty")));
    }
    Ok(out)
}

fn validate_output(out: &OutputSpec, s: &ScenarioFile) -> Result<()> {
    let needs_even = |state: &StateSelector, what: &str| -> Result<()> {
        if matches!(state, StateSelector::Optimal | StateSelector::Cat) && !s.experiment.n.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "{what}.state: the {} state requires an even particle count (the m = 0 level); got n = {}",
                match state {
                    StateSelector::Optimal => "optimal",
                    _ => "cat",
                },
                s.experiment.n
            )));
        }
        Ok(())
    };
    match out {
        OutputSpec::Jz => Ok(()),
        OutputSpec::Snapshot { state } => needs_even(state, "snapshot"),
        OutputSpec::Qfi { state, params } => {
            needs_even(state, "qfi")?;
            let params = parse_params(params, "qfi")?;
            for p in params {
                if matches!(p, ParameterId::DeltaA | ParameterId::DeltaJz) {
                    return Err(CliError::Config(
                        "qfi.params: dephasing magnitudes have no pure-state QFI; use cfi".into(),
                    ));
                }
            }
            Ok(())
        }
        OutputSpec::Cfi { params, floor } | OutputSpec::Decoupling { params, floor } => {
            parse_params(params, "cfi")?;
            if floor.is_nan() || *floor < 0.0 {
                return Err(CliError::Config("cfi.floor: must be >= 0".into()));
            }
            Ok(())
        }
        OutputSpec::Crb { params, repetitions, floor, .. } => {
            parse_params(params, "crb")?;
            if repetitions == &Some(0) {
                return Err(CliError::Config("crb.repetitions: must be >= 1".into()));
            }
            if floor.is_nan() || *floor < 0.0 {
                return Err(CliError::Config("crb.floor: must be >= 0".into()));
            }
            Ok(())
        }
        OutputSpec::Derivatives { params } => parse_params(params, "derivatives").map(|_| ()),
        OutputSpec::Figure { id } => {
            let known = ["fig2", "fig3", "fig4"];
            if !known.contains(&id.as_str()) {
                return Err(CliError::Config(format!(
                    "figure.id: unknown '{id}' (expected fig2, fig3, fig4)"
                )));
            }
            if !s.experiment.n.is_multiple_of(2) {
                return Err(CliError::Config(format!(
                    "figure.id: figures need the optimal/cat states, which require an even \
                     particle count; got n = {}",
                    s.experiment.n
                )));
            }
            Ok(())
        }
        OutputSpec::Husimi { state, theta_points, phi_points } => {
            needs_even(state, "husimi")?;
            if *theta_points < 2 || *phi_points < 2 {
                return Err(CliError::Config(
                    "husimi.theta_points/phi_points: must be >= 2".into(),
                ));
            }
            Ok(())
        }
        OutputSpec::Projections { state } => needs_even(state, "projections"),
        OutputSpec::Feasibility { .. } => {
            if s.physical.is_none() {
                return Err(CliError::Config(
                    "feasibility: requires the scenario's physical section".into(),
                ));
            }
            Ok(())
        }
    }
}

impl ExperimentDto {
    pub fn to_core(&self) -> Result<ExperimentConfig> {
        let config = ExperimentConfig {
            n: self.n,
            twisting: TwistingSpec { chi_tau: self.chi_tau },
            gravity: GravityParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma },
            dephasing: self
                .dephasing
                .iter()
                .map(|d| {
                    DephasingSpec::new(
                        match d.generator {
                            GeneratorDto::A => DephasingGenerator::A,
                            GeneratorDto::Jz => DephasingGenerator::Jz,
                        },
                        d.delta,
                    )
                })
                .collect::<gravispin_core::error::Result<_>>()?,
            recombiner: match self.recombiner {
                RecombinerDto::U0Dagger => Recombiner::U0Dagger,
                RecombinerDto::U0 => Recombiner::U0,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

impl PhysicalDto {
    pub fn to_core(&self) -> Result<PhysicalConfig> {
        let separation =
            if self.separation_m.is_nan() { 10.0 * self.sigma_m } else { self.separation_m };
        let config = PhysicalConfig {
            mass: self.mass_kg,
            sigma: self.sigma_m,
            separation,
            time: self.time_s,
            repetitions: self.repetitions,
            g: self.g,
            hbar: self.hbar,
        };
        config.validate()?;
        Ok(config)
    }
}

impl ScenarioFile {
    pub fn parse_param_list(raw: &[String]) -> Result<Vec<ParameterId>> {
        parse_params(raw, "output")
    }

    pub fn convention_or(&self, fallback: JzConvention) -> JzConvention {
        self.convention.map(Into::into).unwrap_or(fallback)
    }
}
