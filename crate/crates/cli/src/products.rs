//! Computes each requested product of a scenario and writes its files.

use serde::Serialize;

use gravispin_core::channels::Pipeline;
use gravispin_core::dicke::{cat_state_analytic, optimal_state, polarized_state, DickeKet};
use gravispin_core::distributions::{
    basis_projections, figure_data, husimi_row, jz_distribution, FigureId, FigureOverrides,
    FigurePanel, HusimiGrid, PanelData,
};
use gravispin_core::feasibility::{feasibility_report, kappa_gaussian_analytic, Mode};
use gravispin_core::fisher::{
    cfi_matrix, crb_invert, decoupling_report, prob_derivatives_fd, prob_derivatives_for_pipeline,
    qfi_matrix, DerivativeTable, FisherMatrix, ParameterId, DEFAULT_CORRELATION_THRESHOLD,
    DEFAULT_COSINE_THRESHOLD,
};
use gravispin_core::JzConvention;
use rayon::prelude::*;

use crate::cache;
use crate::error::{CliError, Result};
use crate::mc::kappa_monte_carlo_parallel;
use crate::output::{config_hash, fmt_f64, CsvTable, RunWriter};
use crate::scenario::{
    load_snapshot, OutputSpec, ScenarioFile, SnapshotDto, StateSelector,
};

fn param_column(p: ParameterId) -> &'static str {
    match p {
        ParameterId::Alpha => "dP_dalpha",
        ParameterId::Beta => "dP_dbeta",
        ParameterId::DeltaA => "dP_ddeltaA",
        ParameterId::DeltaJz => "dP_ddeltaJz",
    }
}

fn matrix_rows(f: &FisherMatrix) -> Vec<Vec<f64>> {
    let k = f.dim();
    (0..k).map(|i| (0..k).map(|j| f.get(i, j)).collect()).collect()
}

#[derive(Serialize)]
struct FisherJson {
    state: Option<String>,
    n: u32,
    params: Vec<&'static str>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CfiJson {
    n: u32,
    params: Vec<&'static str>,
    matrix: Vec<Vec<f64>>,
    floor: f64,
    skipped: usize,
    diverging: Vec<DivergingJson>,
}

#[derive(Serialize)]
struct DivergingJson {
    outcome: usize,
    probability: f64,
    max_abs_derivative: f64,
}

#[derive(Serialize)]
struct CrbJson {
    params: Vec<&'static str>,
    variances: Vec<f64>,
    repetitions: u64,
    detectable_alpha: Option<f64>,
    condition: f64,
    degenerate_directions: Vec<String>,
}

#[derive(Serialize)]
struct DecouplingJson {
    params: Vec<&'static str>,
    rows: Vec<DecouplingRowJson>,
    correlation_threshold: f64,
    cosine_threshold: f64,
    alpha_information_retention: Option<f64>,
    any_flagged: bool,
}

#[derive(Serialize)]
struct DecouplingRowJson {
    param: &'static str,
    raw_ratio: f64,
    correlation: f64,
    profile_cosine: f64,
    flagged: bool,
}

#[derive(Serialize)]
pub struct FeasibilityJson {
    pub config: FeasibilityConfigEcho,
    pub alpha_reference_formula: f64,
    pub alpha_first_principles: f64,
    pub alpha_ratio_first_principles_to_formula: f64,
    /// [[aa, ab], [ba, bb]] in Joules.
    pub kappa_matrix: [[f64; 2]; 2],
    pub cross_term_ratio: f64,
    pub n_min: f64,
    pub n_min_first_principles: f64,
    pub density_peak_m3: f64,
    pub density_peak_cm3: f64,
    /// Set when the peak density disagrees with the reference value
    /// 4e13 cm^-3 by more than a factor of ten.
    pub density_flag: bool,
    pub reference_n_min: f64,
    pub n_min_within_factor_two_of_reference: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloJson>,
}

#[derive(Serialize)]
pub struct FeasibilityConfigEcho {
    pub mass_kg: f64,
    pub mass_amu: f64,
    pub sigma_m: f64,
    pub sigma_um: f64,
    pub separation_m: f64,
    pub time_s: f64,
    pub repetitions: u64,
    pub g: f64,
    pub hbar: f64,
}

#[derive(Serialize)]
pub struct MonteCarloJson {
    pub samples: u64,
    pub seed: u64,
    pub kappa_same_cloud_mc: f64,
    pub std_error: f64,
    pub kappa_same_cloud_closed_form: f64,
    pub deviation_std_errors: f64,
}

/// Everything needed while producing one scenario's outputs.
pub struct ScenarioRun {
    pub scenario: ScenarioFile,
    pub convention: JzConvention,
    pipeline: Pipeline,
}

impl ScenarioRun {
    pub fn prepare(scenario: ScenarioFile, fallback: JzConvention) -> Result<Self> {
        let convention = scenario.convention_or(fallback);
        let config = scenario.experiment.to_core()?;
        let initial = match &scenario.initial_snapshot {
            Some(path) => Some(load_snapshot(std::path::Path::new(path))?),
            None => None,
        };
        let pipeline = Pipeline::with_initial(config, convention, initial)?;
        Ok(ScenarioRun { scenario, convention, pipeline })
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn resolve_state(&self, selector: StateSelector) -> Result<DickeKet> {
        let n = self.scenario.experiment.n;
        Ok(match selector {
            StateSelector::Polarized => polarized_state(n)?,
            StateSelector::Optimal => optimal_state(n)?,
            StateSelector::Cat => cat_state_analytic(n)?,
            StateSelector::Prepared => self.pipeline.prepared().clone(),
            StateSelector::Final => self.pipeline.final_ket().ok_or_else(|| {
                CliError::Config(
                    "snapshot/husimi of the final state needs a dephasing-free pipeline".into(),
                )
            })?,
        })
    }

    fn selector_name(selector: StateSelector) -> &'static str {
        match selector {
            StateSelector::Polarized => "polarized",
            StateSelector::Optimal => "optimal",
            StateSelector::Cat => "cat",
            StateSelector::Prepared => "prepared",
            StateSelector::Final => "final",
        }
    }

    pub fn derivative_table(&self, params: &[ParameterId]) -> Result<DerivativeTable> {
        Ok(prob_derivatives_for_pipeline(&self.pipeline, params)?)
    }
}

/// Hash target: the resolved scenario plus the active convention.
#[derive(Serialize)]
struct HashedConfig<'a> {
    scenario: &'a ScenarioFile,
    convention: &'a str,
}

pub fn scenario_hash(scenario: &ScenarioFile, convention: JzConvention) -> String {
    config_hash(&HashedConfig { scenario, convention: convention.name() })
}

pub fn write_figure_panel(writer: &mut RunWriter, panel: &FigurePanel, n: u32) -> Result<()> {
    match &panel.data {
        PanelData::Series { m, values } => {
            let header = writer.csv_header(&panel.name, Some(n), &[]);
            let table = CsvTable {
                columns: vec!["m".into(), panel.quantity.clone()],
                rows: m.iter().zip(values).map(|(&a, &b)| vec![a, b]).collect(),
            };
            writer.write_bytes(&format!("{}.csv", panel.name), table.render(&header).as_bytes())?;
        }
        PanelData::Grid(grid) => {
            write_grid(writer, &format!("{}.csv", panel.name), &panel.name, n, grid)?;
        }
    }
    Ok(())
}

fn write_grid(
    writer: &mut RunWriter,
    filename: &str,
    product: &str,
    n: u32,
    grid: &HusimiGrid,
) -> Result<()> {
    let extra = vec![
        format!("theta: {} points in [0, pi]", grid.thetas().len()),
        format!("phi: {} points in [-pi, pi], both endpoints emitted", grid.phis().len()),
    ];
    let header = writer.csv_header(product, Some(n), &extra);
    let mut rows = Vec::with_capacity(grid.thetas().len() * grid.phis().len());
    for (it, &th) in grid.thetas().iter().enumerate() {
        for (ip, &ph) in grid.phis().iter().enumerate() {
            rows.push(vec![th, ph, grid.value(it, ip)]);
        }
    }
    let table = CsvTable { columns: vec!["theta".into(), "phi".into(), "Q".into()], rows };
    writer.write_bytes(filename, table.render(&header).as_bytes())?;
    Ok(())
}

/// Parallel Husimi grid via row tasks; the row order is fixed, so output
/// bytes do not depend on the worker count.
fn husimi_grid_parallel(state: &DickeKet, theta_points: usize, phi_points: usize) -> Result<HusimiGrid> {
    let eig = cache::jx_eigen(state.n())?;
    let pi = std::f64::consts::PI;
    // same rounding as the single-threaded grid builder
    let lin = |a: f64, b: f64, count: usize| -> Vec<f64> {
        let step = (b - a) / (count as f64 - 1.0);
        (0..count)
            .map(|i| if i + 1 == count { b } else { a + step * i as f64 })
            .collect()
    };
    let thetas = lin(0.0, pi, theta_points);
    let phis = lin(-pi, pi, phi_points);
    let rows: Vec<Vec<f64>> = thetas
        .par_iter()
        .map(|&th| husimi_row(&eig, state, th, &phis).expect("dimensions already checked"))
        .collect();
    Ok(HusimiGrid::from_parts(thetas, phis, rows.concat()))
}

pub fn produce_output(
    run: &ScenarioRun,
    output: &OutputSpec,
    writer: &mut RunWriter,
) -> Result<()> {
    let n = run.scenario.experiment.n;
    match output {
        OutputSpec::Jz => {
            let rho = run.pipeline().final_density();
            let dist = jz_distribution(&rho)?;
            let header = writer.csv_header("jz", Some(n), &[]);
            let table = CsvTable {
                columns: vec!["m".into(), "P".into()],
                rows: dist
                    .m_values()
                    .iter()
                    .zip(dist.probabilities())
                    .map(|(&m, &p)| vec![m, p])
                    .collect(),
            };
            writer.write_bytes("jz.csv", table.render(&header).as_bytes())?;
        }
        OutputSpec::Snapshot { state } => {
            let ket = run.resolve_state(*state)?;
            let name = format!("state_{}.json", ScenarioRun::selector_name(*state));
            writer.write_json_raw(&name, &SnapshotDto::from_ket(&ket))?;
        }
        OutputSpec::Qfi { state, params } => {
            let params = ScenarioFile::parse_param_list(params)?;
            let ket = run.resolve_state(*state)?;
            let f = qfi_matrix(&ket, &params, run.convention)?;
            writer.write_json(
                "qfi.json",
                &FisherJson {
                    state: Some(ScenarioRun::selector_name(*state).into()),
                    n,
                    params: params.iter().map(|p| p.name()).collect(),
                    matrix: matrix_rows(&f),
                },
            )?;
        }
        OutputSpec::Cfi { params, floor } => {
            let params = ScenarioFile::parse_param_list(params)?;
            let table = run.derivative_table(&params)?;
            let report = cfi_matrix(&table, *floor)?;
            writer.write_json(
                "cfi.json",
                &CfiJson {
                    n,
                    params: params.iter().map(|p| p.name()).collect(),
                    matrix: matrix_rows(&report.matrix),
                    floor: *floor,
                    skipped: report.skipped,
                    diverging: report
                        .diverging
                        .iter()
                        .map(|d| DivergingJson {
                            outcome: d.outcome,
                            probability: d.probability,
                            max_abs_derivative: d.max_abs_derivative,
                        })
                        .collect(),
                },
            )?;
        }
        OutputSpec::Crb { params, repetitions, allow_pseudo_inverse, floor } => {
            let params = ScenarioFile::parse_param_list(params)?;
            let table = run.derivative_table(&params)?;
            let report = cfi_matrix(&table, *floor)?;
            let reps = repetitions
                .or_else(|| run.scenario.physical.as_ref().map(|p| p.repetitions))
                .unwrap_or(1);
            let crb = crb_invert(&report.matrix, reps, *allow_pseudo_inverse)?;
            writer.write_json(
                "crb.json",
                &CrbJson {
                    params: crb.params.iter().map(|p| p.name()).collect(),
                    variances: crb.variances.clone(),
                    repetitions: crb.repetitions,
                    detectable_alpha: crb.detectable_alpha,
                    condition: crb.condition,
                    degenerate_directions: crb.degenerate_directions.clone(),
                },
            )?;
        }
        OutputSpec::Derivatives { params } => {
            let params = ScenarioFile::parse_param_list(params)?;
            let table = run.derivative_table(&params)?;
            write_derivative_table(writer, "derivatives.csv", "derivatives", &table)?;
        }
        OutputSpec::Decoupling { params, floor } => {
            let params = ScenarioFile::parse_param_list(params)?;
            let config = run.scenario.experiment.to_core()?;
            let report = decoupling_report(
                &config,
                &params,
                run.convention,
                *floor,
                DEFAULT_CORRELATION_THRESHOLD,
                DEFAULT_COSINE_THRESHOLD,
            )?;
            writer.write_json(
                "decoupling.json",
                &DecouplingJson {
                    params: params.iter().map(|p| p.name()).collect(),
                    rows: report
                        .rows
                        .iter()
                        .map(|r| DecouplingRowJson {
                            param: r.param.name(),
                            raw_ratio: r.raw_ratio,
                            correlation: r.correlation,
                            profile_cosine: r.profile_cosine,
                            flagged: r.flagged,
                        })
                        .collect(),
                    correlation_threshold: report.correlation_threshold,
                    cosine_threshold: report.cosine_threshold,
                    alpha_information_retention: report.alpha_information_retention,
                    any_flagged: report.any_flagged(),
                },
            )?;
        }
        OutputSpec::Figure { id } => {
            let figure = FigureId::parse(id)
                .ok_or_else(|| CliError::Config(format!("figure.id: unknown '{id}'")))?;
            let panels = figure_data(figure, n, FigureOverrides::default(), run.convention)?;
            for panel in &panels {
                write_figure_panel(writer, panel, n)?;
            }
        }
        OutputSpec::Husimi { state, theta_points, phi_points } => {
            let ket = run.resolve_state(*state)?;
            let grid = husimi_grid_parallel(&ket, *theta_points, *phi_points)?;
            write_grid(writer, "husimi.csv", "husimi", n, &grid)?;
        }
        OutputSpec::Projections { state } => {
            let ket = run.resolve_state(*state)?;
            let proj = basis_projections(&ket)?;
            let ms = gravispin_core::dicke::m_values(n);
            let header = writer.csv_header("projections", Some(n), &[]);
            let table = CsvTable {
                columns: vec!["m".into(), "P_Jx".into(), "P_Jy".into(), "P_Jz".into()],
                rows: (0..ms.len())
                    .map(|i| vec![ms[i], proj.x[i], proj.y[i], proj.z[i]])
                    .collect(),
            };
            writer.write_bytes("projections.csv", table.render(&header).as_bytes())?;
        }
        OutputSpec::Feasibility { mc_samples, seed } => {
            let physical = run
                .scenario
                .physical
                .as_ref()
                .ok_or_else(|| CliError::Config("feasibility: physical section missing".into()))?
                .to_core()?;
            let json = feasibility_json(&physical, *mc_samples, *seed)?;
            writer.write_json("feasibility.json", &json)?;
        }
    }
    Ok(())
}

pub fn write_derivative_table(
    writer: &mut RunWriter,
    filename: &str,
    product: &str,
    table: &DerivativeTable,
) -> Result<()> {
    let ms = gravispin_core::dicke::m_values(table.n);
    let mut columns = vec!["m".to_string(), "P".to_string()];
    columns.extend(table.params.iter().map(|&p| param_column(p).to_string()));
    let rows = (0..ms.len())
        .map(|i| {
            let mut row = vec![ms[i], table.probabilities[i]];
            row.extend(table.derivatives.iter().map(|col| col[i]));
            row
        })
        .collect();
    let header = writer.csv_header(product, Some(table.n), &[]);
    let csv = CsvTable { columns, rows };
    writer.write_bytes(filename, csv.render(&header).as_bytes())?;
    Ok(())
}

pub fn feasibility_json(
    physical: &gravispin_core::feasibility::PhysicalConfig,
    mc_samples: u64,
    seed: u64,
) -> Result<FeasibilityJson> {
    let report = feasibility_report(physical)?;
    let kappa_bb = kappa_gaussian_analytic(physical, Mode::B, Mode::B);
    let monte_carlo = if mc_samples > 0 {
        let est = kappa_monte_carlo_parallel(physical, 0.0, mc_samples, seed);
        let exact = report.kappa_aa;
        Some(MonteCarloJson {
            samples: est.samples,
            seed: est.seed,
            kappa_same_cloud_mc: est.mean,
            std_error: est.std_error,
            kappa_same_cloud_closed_form: exact,
            deviation_std_errors: (est.mean - exact).abs() / est.std_error,
        })
    } else {
        None
    };
    let nmin_ratio = report.n_min / 5e9;
    Ok(FeasibilityJson {
        config: FeasibilityConfigEcho {
            mass_kg: physical.mass,
            mass_amu: physical.mass / gravispin_core::feasibility::AMU_KG,
            sigma_m: physical.sigma,
            sigma_um: physical.sigma * 1e6,
            separation_m: physical.separation,
            time_s: physical.time,
            repetitions: physical.repetitions,
            g: physical.g,
            hbar: physical.hbar,
        },
        alpha_reference_formula: report.alpha_reference,
        alpha_first_principles: report.alpha_derived,
        alpha_ratio_first_principles_to_formula: report.alpha_derived / report.alpha_reference,
        kappa_matrix: [[report.kappa_aa, report.kappa_ab], [report.kappa_ab, kappa_bb]],
        cross_term_ratio: report.cross_term_ratio,
        n_min: report.n_min,
        n_min_first_principles: report.n_min_derived,
        density_peak_m3: report.density_peak,
        density_peak_cm3: report.density_peak * 1e-6,
        density_flag: report.density_flag,
        reference_n_min: 5e9,
        n_min_within_factor_two_of_reference: nmin_ratio > 0.5 && nmin_ratio < 2.0,
        monte_carlo,
    })
}

/// Cross-validates the analytic derivative engine against finite differences
/// for every parameter a scenario's outputs touched.
#[derive(Serialize)]
pub struct FdCheckJson {
    pub step_unitary: f64,
    pub step_dephasing: f64,
    pub entries: Vec<FdCheckEntry>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct FdCheckEntry {
    pub param: &'static str,
    pub max_abs_deviation: f64,
    pub derivative_scale: f64,
    pub tolerance: f64,
}

pub fn fd_check(run: &ScenarioRun, params: &[ParameterId]) -> Result<FdCheckJson> {
    const STEP_UNITARY: f64 = 1e-6;
    const STEP_DEPHASING: f64 = 1e-9;
    let analytic = run.derivative_table(params)?;
    let config = run.scenario.experiment.to_core()?;
    let mut entries = Vec::new();
    let mut passed = true;
    for (i, &param) in params.iter().enumerate() {
        let step = match param {
            ParameterId::Alpha | ParameterId::Beta => STEP_UNITARY,
            _ => STEP_DEPHASING,
        };
        let fd = prob_derivatives_fd(&config, &[param], run.convention, step)?;
        let scale = analytic.derivatives[i]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let dev = analytic.derivatives[i]
            .iter()
            .zip(&fd.derivatives[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let tolerance = (1e-4 * scale).max(1e-7);
        if dev > tolerance {
            passed = false;
        }
        entries.push(FdCheckEntry {
            param: param.name(),
            max_abs_deviation: dev,
            derivative_scale: scale,
            tolerance,
        });
    }
    Ok(FdCheckJson {
        step_unitary: STEP_UNITARY,
        step_dephasing: STEP_DEPHASING,
        entries,
        passed,
    })
}

/// Runs a whole scenario: every output, optional finite-difference check,
/// manifest last. Returns the produced file names.
pub fn run_scenario(
    scenario: ScenarioFile,
    out_dir: &std::path::Path,
    force: bool,
    fallback_convention: JzConvention,
    with_fd_check: bool,
) -> Result<Vec<String>> {
    let run = ScenarioRun::prepare(scenario, fallback_convention)?;
    let hash = scenario_hash(&run.scenario, run.convention);
    let seed = run
        .scenario
        .outputs
        .iter()
        .find_map(|o| match o {
            OutputSpec::Feasibility { seed, .. } => Some(*seed),
            _ => None,
        })
        .unwrap_or(0);
    let mut writer = RunWriter::create(out_dir, force, hash, run.convention, seed)?;
    for output in &run.scenario.outputs {
        produce_output(&run, output, &mut writer)?;
    }
    if with_fd_check {
        let mut params: Vec<ParameterId> = Vec::new();
        for output in &run.scenario.outputs {
            let raw = match output {
                OutputSpec::Cfi { params, .. }
                | OutputSpec::Crb { params, .. }
                | OutputSpec::Derivatives { params }
                | OutputSpec::Decoupling { params, .. } => Some(params.clone()),
                // figure derivative panels also come from the analytic engine
                OutputSpec::Figure { id } if id == "fig3" => {
                    Some(vec!["alpha".into(), "beta".into()])
                }
                OutputSpec::Figure { id } if id == "fig4" => Some(vec![
                    "alpha".into(),
                    "beta".into(),
                    "delta_A".into(),
                    "delta_Jz".into(),
                ]),
                _ => None,
            };
            if let Some(raw) = raw {
                for p in ScenarioFile::parse_param_list(&raw)? {
                    if !params.contains(&p) {
                        params.push(p);
                    }
                }
            }
        }
        if !params.is_empty() {
            let check = fd_check(&run, &params)?;
            let passed = check.passed;
            writer.write_json("fd_check.json", &check)?;
            if !passed {
                // still finish the manifest so the report is inspectable
                writer.finish()?;
                return Err(CliError::Numerical(
                    "finite-difference cross-validation failed; see fd_check.json".into(),
                ));
            }
        }
    }
    writer.finish()
}

/// Human-oriented one-line summary used by the feasibility subcommand.
pub fn feasibility_summary(json: &FeasibilityJson) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "mass {} amu | sigma {} um | t {} s | k {}\n",
        fmt_f64(json.config.mass_amu),
        fmt_f64(json.config.sigma_um),
        fmt_f64(json.config.time_s),
        json.config.repetitions
    ));
    out.push_str(&format!(
        "alpha: formula {} | first-principles {} (ratio {})\n",
        fmt_f64(json.alpha_reference_formula),
        fmt_f64(json.alpha_first_principles),
        fmt_f64(json.alpha_ratio_first_principles_to_formula)
    ));
    out.push_str(&format!(
        "N_min: {} (reference 5e9, within 2x: {}) | first-principles {}\n",
        fmt_f64(json.n_min),
        json.n_min_within_factor_two_of_reference,
        fmt_f64(json.n_min_first_principles)
    ));
    out.push_str(&format!(
        "peak density: {} cm^-3{}\n",
        fmt_f64(json.density_peak_cm3),
        if json.density_flag { " [flag: >10x from the 4e13 cm^-3 reference]" } else { "" }
    ));
    if let Some(mc) = &json.monte_carlo {
        out.push_str(&format!(
            "kappa MC ({} samples, seed {}): {} +- {} vs closed form {} ({} SE)\n",
            mc.samples,
            mc.seed,
            fmt_f64(mc.kappa_same_cloud_mc),
            fmt_f64(mc.std_error),
            fmt_f64(mc.kappa_same_cloud_closed_form),
            fmt_f64(mc.deviation_std_errors)
        ));
    }
    out
}
