use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ifl::cli;
use ifl::landscape::LandscapeParams;
use ifl::Error;

#[derive(Parser)]
#[command(name = "ifl", version, about = "Fuzzy label construction, loss analysis and curriculum training")]
struct Args {
    /// Worker threads. Computation is single-threaded and bit-exact; values
    /// other than 1 are accepted and ignored.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate clean, corrupted and intensity volumes from a JSON spec.
    Synth { spec: PathBuf, out_dir: PathBuf },
    /// Build a fuzzy label volume from a crisp one.
    Fuzzify {
        labels: PathBuf,
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 0.5)]
        rho2: f64,
    },
    /// Train from a JSON run config.
    Train {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic derivatives against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        perturb: Option<String>,
    },
    /// Print loss, gradient and curvature profiles in p as CSV.
    Landscape {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.5)]
        rho1: f64,
        #[arg(long, default_value_t = 0.5)]
        rho2: f64,
        #[arg(long, default_value_t = 99)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a trajectory CSV or run directory.
    Analyze {
        trajectory: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(args: Args) -> Result<u8, Error> {
    match args.cmd {
        Cmd::Synth { spec, out_dir } => {
            let o = cli::cmd_synth(&spec, &out_dir)?;
            for p in [o.clean, o.corrupted, o.intensity] {
                println!("{}", p.display());
            }
        }
        Cmd::Fuzzify { labels, out, radius, rho2 } => cli::cmd_fuzzify(&labels, radius, rho2, &out)?,
        Cmd::Train { config, out } => print_json(&cli::cmd_train(&config, out.as_deref())?)?,
        Cmd::Gradcheck { samples, seed, perturb } => {
            let report = cli::cmd_gradcheck(samples, seed, perturb.as_deref())?;
            print_json(&report)?;
            if !report.passed() {
                return Ok(1);
            }
        }
        Cmd::Landscape { mu, rho1, rho2, grid, out } => {
            let params = LandscapeParams { mu, rho1, rho2, grid };
            match out {
                Some(path) => {
                    let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    cli::cmd_landscape(&params, io::BufWriter::new(f))?
                }
                None => cli::cmd_landscape(&params, io::stdout().lock())?,
            }
        }
        Cmd::Analyze { trajectory, baseline, out } => {
            let traj = cli::trajectory_path(&trajectory);
            let base = baseline.as_deref().map(cli::trajectory_path);
            let out = out.or_else(|| trajectory.is_dir().then(|| trajectory.join("analysis.json")));
            print_json(&cli::cmd_analyze(&traj, base.as_deref(), out.as_deref())?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
