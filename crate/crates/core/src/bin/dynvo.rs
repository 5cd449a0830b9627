use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dynvo::config::{FlowSource, RunConfig};
use dynvo::dataset::{write_sequence, Dataset};
use dynvo::geometry::{relative_pose_error, Trajectory};
use dynvo::run::{format_rpe, format_sweep, run, sweep, RunError};
use dynvo::synth::{render_sequence, SceneSpec};

#[derive(Debug, Parser)]
#[command(name = "dynvo", version, about = "RGB-D visual odometry in scenes with moving objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the camera trajectory of a dataset.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_flow_source)]
        flow_source: Option<FlowSource>,
    },
    /// Run once per value of one parameter and tabulate RPE and runtime.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the table to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_flow_source)]
        flow_source: Option<FlowSource>,
    },
    /// Render a synthetic dataset from a JSON scene description.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative pose error between two TUM trajectories.
    Rpe {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
}

fn parse_flow_source(s: &str) -> Result<FlowSource, String> {
    s.parse()
}

/// Config file if given, else the one next to the dataset, else defaults.
fn load_config(path: Option<&PathBuf>, dataset: &std::path::Path) -> Result<RunConfig, RunError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None if dataset.join("config.txt").is_file() => Ok(RunConfig::load(dataset.join("config.txt"))?),
        None => Ok(RunConfig::default()),
    }
}

fn execute(command: Command) -> Result<(), (i32, String)> {
    let fail = |e: RunError| (e.exit_code(), e.to_string());
    let data = |e: &dyn std::fmt::Display| (2, e.to_string());
    match command {
        Command::Run {
            dataset,
            config,
            out,
            seed,
            flow_source,
        } => {
            let mut cfg = load_config(config.as_ref(), &dataset).map_err(fail)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(f) = flow_source {
                cfg.flow_source = f;
            }
            let ds = Dataset::open(&dataset).map_err(|e| fail(e.into()))?;
            std::fs::create_dir_all(&out).map_err(|e| data(&e))?;
            let report = run(&ds, &cfg, &out).map_err(fail)?;
            println!("frames {}", report.summary.trajectory.len());
            println!("median frame time {:.3} ms", report.summary.timing.median_total);
            match report.rpe {
                Some(r) => println!("rpe rmse {:.6} m/s", r.rmse),
                None if ds.ground_truth.is_some() => println!("rpe unavailable, see rpe.txt"),
                None => println!("rpe: no ground truth"),
            }
        }
        Command::Sweep {
            param,
            values,
            dataset,
            config,
            out,
            flow_source,
        } => {
            let mut cfg = load_config(config.as_ref(), &dataset).map_err(fail)?;
            if let Some(f) = flow_source {
                cfg.flow_source = f;
            }
            let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
            if !RunConfig::KEYS.contains(&param.as_str()) {
                return Err(fail(RunError::UnknownParameter(param)));
            }
            let ds = Dataset::open(&dataset).map_err(|e| fail(e.into()))?;
            let rows = sweep(&ds, &cfg, &param, &values).map_err(fail)?;
            let table = format_sweep(&param, &rows);
            print!("{table}");
            if let Some(p) = out {
                std::fs::write(&p, table).map_err(|e| data(&e))?;
            }
        }
        Command::Synth { spec, out } => {
            let spec = SceneSpec::load(&spec).map_err(|e| data(&e))?;
            let seq = render_sequence(&spec).map_err(|e| data(&e))?;
            write_sequence(&seq, &spec, &out).map_err(|e| data(&e))?;
            println!("wrote {} frames to {}", spec.frames, out.display());
        }
        Command::Rpe { est, gt, delta } => {
            if !(delta > 0.0) {
                return Err((1, "delta must be positive".into()));
            }
            let est = Trajectory::load(&est).map_err(|e| data(&e))?;
            let gt = Trajectory::load(&gt).map_err(|e| data(&e))?;
            let r = relative_pose_error(&est, &gt, delta).map_err(|e| data(&e))?;
            print!("{}", format_rpe(&r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
