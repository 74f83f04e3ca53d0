use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maslov_core::{emit_report, run_experiment, Experiment, ExperimentConfig, Format, VerificationReport};

const DEFAULT_OUT: &str = "results";

#[derive(Parser)]
#[command(name = "maslov", version, about = "Verify Morse/Maslov index identities on discretized Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Experiment name (see `maslov list`).
        #[arg(long)]
        experiment: String,
        /// Output directory. Falls back to MASLOV_OUT_DIR, then the config, then ./results.
        #[arg(long, env = "MASLOV_OUT_DIR")]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output formats; JSON is always written.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [OutFormat::Json, OutFormat::Csv])]
        format: Vec<OutFormat>,
        /// Print the report JSON to stdout as well.
        #[arg(long)]
        print: bool,
    },
    /// List the available experiments.
    List,
}

fn summarize(report: &VerificationReport) {
    for c in &report.checks {
        let tag = if c.pass { "ok  " } else { "FAIL" };
        println!("[{tag}] {}: {} vs {}", c.name, serde_json::to_string(&c.lhs).unwrap_or_default(), serde_json::to_string(&c.rhs).unwrap_or_default());
    }
    let failed = report.failed_checks().count();
    println!("{}: {} ({} checks, {failed} failed)", report.experiment, if report.pass { "PASS" } else { "FAIL" }, report.checks.len());
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: PathBuf,
    experiment: String,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    format: Vec<OutFormat>,
    print: bool,
) -> Result<bool, String> {
    let experiment: Experiment = experiment.parse().map_err(|e| format!("{e}"))?;
    let mut cfg = ExperimentConfig::load(&config).map_err(|e| format!("{}: {e}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let report = run_experiment(&cfg, experiment).map_err(|e| format!("{experiment}: {e}"))?;
    let mut formats = vec![Format::Json];
    if format.iter().any(|f| matches!(f, OutFormat::Csv)) {
        formats.push(Format::Csv);
    }
    let written = emit_report(&report, &dir, &formats).map_err(|e| format!("writing {}: {e}", dir.display()))?;
    summarize(&report);
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    if print {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<22}{}", e.name(), e.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, experiment, out, seed, threads, format, print } => match run(config, experiment, out, seed, threads, format, print) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
        },
    }
}
