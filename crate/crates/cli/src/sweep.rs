//! Parameter sweeps: one row of scalar summaries per axis value, computed in
//! a bounded worker pool with deterministic, order-preserving output.

use std::path::Path;

use rayon::prelude::*;

use gravispin_core::feasibility::scaling_separation;
use gravispin_core::fisher::{
    cfi_matrix, crb_invert, decoupling_report, qfi_matrix,
    DEFAULT_CORRELATION_THRESHOLD, DEFAULT_COSINE_THRESHOLD,
};

use crate::error::{CliError, Result};
use crate::output::{fmt_f64, RunWriter};
use crate::products::{scenario_hash, ScenarioRun};
use crate::scenario::{resolve_values, DephasingDto, GeneratorDto, OutputSpec, ScenarioFile, SweepSpec};

/// The scalar columns a sweep emits, fixed up front from the base scenario's
/// requested outputs.
fn column_plan(spec: &SweepSpec) -> Result<Vec<String>> {
    let mut cols: Vec<String> = Vec::new();
    let push = |name: String, cols: &mut Vec<String>| {
        if !cols.contains(&name) {
            cols.push(name);
        }
    };
    for output in &spec.base.outputs {
        match output {
            OutputSpec::Qfi { params, .. } => {
                let params = ScenarioFile::parse_param_list(params)?;
                for (i, a) in params.iter().enumerate() {
                    for b in &params[i..] {
                        push(format!("f_{}_{}", a.name(), b.name()), &mut cols);
                    }
                }
            }
            OutputSpec::Cfi { params, .. } => {
                let params = ScenarioFile::parse_param_list(params)?;
                for (i, a) in params.iter().enumerate() {
                    for b in &params[i..] {
                        push(format!("cfi_{}_{}", a.name(), b.name()), &mut cols);
                    }
                }
            }
            OutputSpec::Crb { params, .. } => {
                push("detectable_alpha".into(), &mut cols);
                let params = ScenarioFile::parse_param_list(params)?;
                for p in &params {
                    push(format!("var_{}", p.name()), &mut cols);
                }
            }
            OutputSpec::Decoupling { .. } => {
                push("max_abs_correlation".into(), &mut cols);
                push("max_abs_cosine".into(), &mut cols);
                push("alpha_info_retention".into(), &mut cols);
            }
            OutputSpec::Feasibility { .. } => {
                push("alpha_reference".into(), &mut cols);
                push("alpha_derived".into(), &mut cols);
                push("n_min".into(), &mut cols);
                push("density_peak_m3".into(), &mut cols);
                if spec.axis == "sigma" {
                    push("gravity_coeff".into(), &mut cols);
                    push("contact_coeff".into(), &mut cols);
                }
            }
            // file-shaped outputs have no scalar summary
            _ => {}
        }
    }
    if cols.is_empty() {
        return Err(CliError::Config(
            "sweep: none of the base outputs yields scalar columns (request qfi, cfi, crb, \
             decoupling, or feasibility)"
                .into(),
        ));
    }
    Ok(cols)
}

fn apply_axis(base: &ScenarioFile, axis: &str, value: f64) -> Result<ScenarioFile> {
    let mut s = base.clone();
    match axis {
        "n" => {
            let rounded = value.round();
            if (value - rounded).abs() > 1e-9 || rounded < 1.0 {
                return Err(CliError::Config(format!(
                    "sweep axis n: value {value} is not a positive integer"
                )));
            }
            s.experiment.n = rounded as u32;
        }
        "chi_tau" => s.experiment.chi_tau = value,
        "alpha" => s.experiment.alpha = value,
        "beta" => s.experiment.beta = value,
        "delta_A" | "delta_Jz" => {
            let gen = if axis == "delta_A" { GeneratorDto::A } else { GeneratorDto::Jz };
            if let Some(d) = s.experiment.dephasing.iter_mut().find(|d| d.generator == gen) {
                d.delta = value;
            } else {
                s.experiment.dephasing.push(DephasingDto { generator: gen, delta: value });
            }
        }
        "sigma" => {
            let phys = s.physical.as_mut().ok_or_else(|| {
                CliError::Config("sweep axis sigma: base scenario has no physical section".into())
            })?;
            phys.sigma_m = value;
        }
        other => return Err(CliError::Config(format!("sweep axis: unknown '{other}'"))),
    }
    Ok(s)
}

fn scalar_row(
    spec: &SweepSpec,
    columns: &[String],
    value: f64,
    sigma_ref: f64,
    fallback: gravispin_core::JzConvention,
) -> Result<Vec<f64>> {
    let scenario = apply_axis(&spec.base, &spec.axis, value)?;
    crate::scenario::validate_scenario(&scenario)?;
    let run = ScenarioRun::prepare(scenario, fallback)?;
    let mut out = vec![f64::NAN; columns.len()];
    let set = |name: &str, v: f64, out: &mut Vec<f64>| {
        if let Some(i) = columns.iter().position(|c| c == name) {
            out[i] = v;
        }
    };
    for output in &run.scenario.outputs {
        match output {
            OutputSpec::Qfi { state, params } => {
                let params = ScenarioFile::parse_param_list(params)?;
                let ket = run.resolve_state(*state)?;
                let f = qfi_matrix(&ket, &params, run.convention)?;
                for (i, a) in params.iter().enumerate() {
                    for (j, b) in params.iter().enumerate().skip(i) {
                        set(&format!("f_{}_{}", a.name(), b.name()), f.get(i, j), &mut out);
                    }
                }
            }
            OutputSpec::Cfi { params, floor } => {
                let params = ScenarioFile::parse_param_list(params)?;
                let table = run.derivative_table(&params)?;
                let report = cfi_matrix(&table, *floor)?;
                for (i, a) in params.iter().enumerate() {
                    for (j, b) in params.iter().enumerate().skip(i) {
                        set(
                            &format!("cfi_{}_{}", a.name(), b.name()),
                            report.matrix.get(i, j),
                            &mut out,
                        );
                    }
                }
            }
            OutputSpec::Crb { params, repetitions, allow_pseudo_inverse, floor } => {
                let params = ScenarioFile::parse_param_list(params)?;
                let table = run.derivative_table(&params)?;
                let report = cfi_matrix(&table, *floor)?;
                let reps = repetitions
                    .or_else(|| run.scenario.physical.as_ref().map(|p| p.repetitions))
                    .unwrap_or(1);
                let crb = crb_invert(&report.matrix, reps, *allow_pseudo_inverse)?;
                if let Some(da) = crb.detectable_alpha {
                    set("detectable_alpha", da, &mut out);
                }
                for (p, v) in crb.params.iter().zip(&crb.variances) {
                    set(&format!("var_{}", p.name()), *v, &mut out);
                }
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
                let max_corr = report
                    .rows
                    .iter()
                    .map(|r| r.correlation.abs())
                    .fold(0.0, f64::max);
                let max_cos = report
                    .rows
                    .iter()
                    .map(|r| r.profile_cosine.abs())
                    .fold(0.0, f64::max);
                set("max_abs_correlation", max_corr, &mut out);
                set("max_abs_cosine", max_cos, &mut out);
                if let Some(r) = report.alpha_information_retention {
                    set("alpha_info_retention", r, &mut out);
                }
            }
            OutputSpec::Feasibility { .. } => {
                let physical = run
                    .scenario
                    .physical
                    .as_ref()
                    .ok_or_else(|| CliError::Config("feasibility: physical section missing".into()))?
                    .to_core()?;
                let report = gravispin_core::feasibility::feasibility_report(&physical)?;
                set("alpha_reference", report.alpha_reference, &mut out);
                set("alpha_derived", report.alpha_derived, &mut out);
                set("n_min", report.n_min, &mut out);
                set("density_peak_m3", report.density_peak, &mut out);
                if spec.axis == "sigma" {
                    let rows = scaling_separation(&physical, &[sigma_ref, physical.sigma])?;
                    set("gravity_coeff", rows[1].gravity_coeff, &mut out);
                    set("contact_coeff", rows[1].contact_coeff, &mut out);
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

pub struct SweepOutcome {
    pub files: Vec<String>,
    pub failed_points: usize,
    pub total_points: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ExperimentDto, RecombinerDto, SweepValues};

    fn base() -> ScenarioFile {
        ScenarioFile {
            experiment: ExperimentDto {
                n: 4,
                chi_tau: 0.785,
                alpha: 0.0,
                beta: 0.0,
                gamma: 0.0,
                dephasing: vec![],
                recombiner: RecombinerDto::U0Dagger,
            },
            physical: None,
            convention: None,
            initial_snapshot: None,
            outputs: vec![OutputSpec::Qfi {
                state: crate::scenario::StateSelector::Optimal,
                params: vec!["alpha".into(), "beta".into()],
            }],
        }
    }

    #[test]
    fn axis_application() {
        let b = base();
        let s = apply_axis(&b, "n", 10.0).unwrap();
        assert_eq!(s.experiment.n, 10);
        assert!(apply_axis(&b, "n", 10.5).is_err());
        let s = apply_axis(&b, "delta_A", 0.25).unwrap();
        assert_eq!(s.experiment.dephasing.len(), 1);
        assert_eq!(s.experiment.dephasing[0].delta, 0.25);
        let s = apply_axis(&s, "delta_A", 0.5).unwrap();
        assert_eq!(s.experiment.dephasing.len(), 1);
        assert!(apply_axis(&b, "sigma", 1e-5).is_err());
    }

    #[test]
    fn qfi_columns_cover_the_upper_triangle() {
        let spec = SweepSpec {
            axis: "n".into(),
            values: SweepValues::List(vec![4.0]),
            base: base(),
        };
        let cols = column_plan(&spec).unwrap();
        assert_eq!(cols, vec!["f_alpha_alpha", "f_alpha_beta", "f_beta_beta"]);
    }

    #[test]
    fn file_only_outputs_yield_no_columns() {
        let mut b = base();
        b.outputs = vec![OutputSpec::Jz];
        let spec =
            SweepSpec { axis: "n".into(), values: SweepValues::List(vec![4.0]), base: b };
        assert!(column_plan(&spec).is_err());
    }
}

/// Runs the sweep and writes `sweep.csv` plus the manifest. Failed points are
/// recorded in-row under the `error` column; the caller turns a nonzero
/// failure count into exit code 1.
pub fn run_sweep(
    spec: SweepSpec,
    out_dir: &Path,
    force: bool,
    fallback: gravispin_core::JzConvention,
) -> Result<SweepOutcome> {
    let values = resolve_values(&spec.values)?;
    let columns = column_plan(&spec)?;
    let convention = spec.base.convention_or(fallback);
    let sigma_ref = if spec.axis == "sigma" {
        values[0]
    } else {
        spec.base.physical.as_ref().map(|p| p.sigma_m).unwrap_or(1.0)
    };

    let rows: Vec<std::result::Result<Vec<f64>, String>> = values
        .par_iter()
        .map(|&v| scalar_row(&spec, &columns, v, sigma_ref, convention).map_err(|e| e.to_string()))
        .collect();

    let hash = scenario_hash(&spec.base, convention);
    let mut writer = RunWriter::create(out_dir, force, hash, convention, 0)?;
    let extra = vec![format!("axis: {}", spec.axis), format!("points: {}", values.len())];
    let header = writer.csv_header("sweep", Some(spec.base.experiment.n), &extra);
    let mut text = header;
    text.push_str(&spec.axis);
    for c in &columns {
        text.push(',');
        text.push_str(c);
    }
    text.push_str(",error\n");
    let mut failed = 0usize;
    for (v, row) in values.iter().zip(&rows) {
        text.push_str(&fmt_f64(*v));
        match row {
            Ok(vals) => {
                for x in vals {
                    text.push(',');
                    text.push_str(&fmt_f64(*x));
                }
                text.push_str(",\n");
            }
            Err(msg) => {
                failed += 1;
                for _ in &columns {
                    text.push(',');
                }
                let clean: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' { ';' } else { c })
                    .collect();
                text.push(',');
                text.push_str(&clean);
                text.push('\n');
            }
        }
    }
    writer.write_bytes("sweep.csv", text.as_bytes())?;
    let files = writer.finish()?;
    Ok(SweepOutcome { files, failed_points: failed, total_points: values.len() })
}
