use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gravispin::error::CliError;
use gravispin::{products, reproduce, scenario, sweep};
use gravispin_core::feasibility::{PhysicalConfig, AMU_KG, RB87_AMU};
use gravispin_core::JzConvention;

#[derive(Parser)]
#[command(
    name = "gravispin",
    version,
    about = "Collective-spin interferometry simulator: scenario runner, figure data, sweeps, feasibility"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory for all generated files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps, grids, and Monte Carlo batches
    /// (0 = all available cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// J_z normalization for the beta generator.
    #[arg(long, global = true, value_enum, default_value_t = ConventionArg::Unit)]
    convention: ConventionArg,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Cross-validate analytic probability derivatives against finite
    /// differences wherever a scenario uses them.
    #[arg(long, global = true)]
    fd_check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Half,
    Unit,
}

impl From<ConventionArg> for JzConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Half => JzConvention::Half,
            ConventionArg::Unit => JzConvention::Unit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write every requested product.
    Run {
        /// Path to a scenario JSON file (see schema/scenario.schema.json).
        scenario: PathBuf,
    },
    /// Regenerate a reference product at its default operating point.
    Reproduce {
        /// One of: fig2, fig3, fig4, qfi-table, feasibility.
        id: String,
        /// Monte Carlo samples for the feasibility cross-check.
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: u64,
        /// Monte Carlo seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a parameter sweep from a sweep-spec JSON file.
    Sweep {
        /// Path to a sweep JSON file (see schema/sweep.schema.json).
        spec: PathBuf,
    },
    /// Laboratory feasibility report for a Gaussian-cloud experiment.
    Feasibility {
        /// Particle mass in atomic mass units.
        #[arg(long, default_value_t = RB87_AMU)]
        mass_amu: f64,
        /// Gaussian cloud width in micrometers.
        #[arg(long, default_value_t = 50.0)]
        sigma_um: f64,
        /// Half separation x0 in micrometers (defaults to 10 sigma).
        #[arg(long)]
        x0_um: Option<f64>,
        /// Interrogation time in seconds.
        #[arg(long, default_value_t = 1.0)]
        time_s: f64,
        /// Number of repetitions k.
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        /// Monte Carlo samples for the integral cross-check (0 disables).
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: u64,
        /// Monte Carlo seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ProcessExit {
    let cli = Cli::parse();
    if cli.common.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.jobs)
            .build_global()
        {
            eprintln!("error: could not size the worker pool: {e}");
            return ProcessExit::from(2);
        }
    }
    match dispatch(cli) {
        Ok(()) => ProcessExit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ProcessExit::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> gravispin::error::Result<()> {
    let convention: JzConvention = cli.common.convention.into();
    match cli.command {
        Command::Run { scenario: path } => {
            let scenario = scenario::load_scenario(&path)?;
            let files = products::run_scenario(
                scenario,
                &cli.common.out,
                cli.common.force,
                convention,
                cli.common.fd_check,
            )?;
            for f in files {
                println!("{}", cli.common.out.join(f).display());
            }
            Ok(())
        }
        Command::Reproduce { id, mc_samples, seed } => {
            let files = reproduce::reproduce(
                &id,
                &cli.common.out,
                cli.common.force,
                convention,
                mc_samples,
                seed,
            )?;
            for f in files {
                println!("{}", cli.common.out.join(f).display());
            }
            Ok(())
        }
        Command::Sweep { spec: path } => {
            let spec = scenario::load_sweep(&path)?;
            let outcome = sweep::run_sweep(spec, &cli.common.out, cli.common.force, convention)?;
            for f in &outcome.files {
                println!("{}", cli.common.out.join(f).display());
            }
            if outcome.failed_points > 0 {
                return Err(CliError::PartialSweep {
                    failed: outcome.failed_points,
                    total: outcome.total_points,
                });
            }
            Ok(())
        }
        Command::Feasibility { mass_amu, sigma_um, x0_um, time_s, reps, mc_samples, seed } => {
            let sigma = sigma_um * 1e-6;
            let config = PhysicalConfig {
                mass: mass_amu * AMU_KG,
                sigma,
                separation: x0_um.map(|x| x * 1e-6).unwrap_or(10.0 * sigma),
                time: time_s,
                repetitions: reps,
                ..PhysicalConfig::rb87_reference()
            };
            config.validate()?;
            let json = products::feasibility_json(&config, mc_samples, seed)?;
            print!("{}", products::feasibility_summary(&json));
            let hash = gravispin::output::config_hash(&json.config);
            let mut writer = gravispin::output::RunWriter::create(
                &cli.common.out,
                cli.common.force,
                hash,
                convention,
                seed,
            )?;
            writer.write_json("feasibility.json", &json)?;
            for f in writer.finish()? {
                println!("{}", cli.common.out.join(f).display());
            }
            Ok(())
        }
    }
}
