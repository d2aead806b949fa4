//! `levylab <experiment> --config cfg.json [--seed N] [--threads K] [--out DIR]`
//!
//! Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
//! failure. Errors are reported on stderr as one JSON object.

use clap::Parser;
use levylab::experiments::{run, ExperimentConfig, ExperimentKind, ExperimentOutput, Table};
use levylab::LabError;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION: &str = env!("LEVYLAB_VERSION");

#[derive(Debug, Parser)]
#[command(name = "levylab", version = VERSION, about = "Simulation and oracle experiments for Lévy exponential functionals and planar Brownian windings")]
struct Args {
    /// One of: spitzer, sectors, dufresne, riccati-density, lyapunov-curve, moments-check, deficit.
    experiment: ExperimentKind,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `base_seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; defaults to the configuration's `output_path`, then ".".
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure {
            code: if e.is_numeric() { 3 } else { 2 },
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn io_failure(kind: &'static str, path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        kind,
        message: format!("{}: {e}", path.display()),
    }
}

fn write_table(path: &Path, table: &Table) -> Result<(), Failure> {
    let fail = |e: csv::Error| io_failure("output", path, e);
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(&table.header).map_err(fail)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(fail)?;
    }
    w.flush().map_err(|e| io_failure("output", path, e))
}

fn write_outputs(dir: &Path, kind: ExperimentKind, out: &ExperimentOutput) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure("output", dir, e))?;
    for table in &out.tables {
        write_table(&dir.join(format!("{kind}_{}.csv", table.name)), table)?;
    }
    let report_path = dir.join(format!("{kind}_report.json"));
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| io_failure("output", &report_path, e))?;
    fs::write(&report_path, json + "\n").map_err(|e| io_failure("output", &report_path, e))?;
    Ok(report_path)
}

fn execute(args: Args) -> Result<PathBuf, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| io_failure("config", &args.config, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| io_failure("config", &args.config, e))?;
    let mut config = ExperimentConfig::from_json(args.experiment, value)?;
    if let Some(seed) = args.seed {
        config.set_base_seed(seed);
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Failure { code: 2, kind: "invalid_parameter", message: "--threads must be positive".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure { code: 2, kind: "invalid_parameter", message: e.to_string() })?;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| config.output_path().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut output = run(&config)?;
    output.report.version = VERSION.to_string();
    write_outputs(&dir, args.experiment, &output)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help, --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure { code: 2, kind: "usage", message: e.to_string().trim().to_string() };
            report_failure(&failure);
            return ExitCode::from(failure.code);
        }
    };
    match execute(args) {
        Ok(report) => {
            println!("{}", report.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            report_failure(&f);
            ExitCode::from(f.code)
        }
    }
}

fn report_failure(f: &Failure) {
    let obj = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    eprintln!("{obj}");
}
