//! Command implementations behind the `ifl` binary.
//!
//! Every command is a plain function so it can be driven from tests and
//! examples without spawning a process. Exit codes follow
//! [`Error::exit_code`](crate::error::Error::exit_code); property failures
//! (a failed gradient check) map to 1.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{canonical_hash, RunConfig};
use crate::error::{Error, Result};
use crate::fuzzy_label::fuzzify;
use crate::gradcheck::{self, Family, GradcheckOptions, GradcheckReport};
use crate::landscape::{landscape, write_landscape_csv, LandscapeParams};
use crate::synth::{generate, SynthSpec};
use crate::trainer::{
    nondominated, pareto_trace, quartile_means, rho_summary, stability_metrics, train, write_pareto_csv,
    RhoSummary, StabilityMetrics, TrainData, TrainingTrajectory, MIN_STABILITY_ROWS,
};
use crate::volume::{read_volume, write_volume, Volume};

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Paths written by [`cmd_synth`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutputs {
    pub clean: PathBuf,
    pub corrupted: PathBuf,
    pub intensity: PathBuf,
}

pub fn cmd_synth(spec: &Path, out_dir: &Path) -> Result<SynthOutputs> {
    let spec: SynthSpec = read_json(spec)?;
    synth_to_dir(&spec, out_dir)
}

pub fn synth_to_dir(spec: &SynthSpec, out_dir: &Path) -> Result<SynthOutputs> {
    let v = generate(spec)?;
    ensure_dir(out_dir)?;
    let out = SynthOutputs {
        clean: out_dir.join("clean.fvol"),
        corrupted: out_dir.join("corrupted.fvol"),
        intensity: out_dir.join("intensity.fvol"),
    };
    write_volume(&v.clean.into(), &out.clean)?;
    write_volume(&v.corrupted.into(), &out.corrupted)?;
    write_volume(&v.intensity.into(), &out.intensity)?;
    Ok(out)
}

pub fn cmd_fuzzify(labels: &Path, radius: usize, rho2: f64, out: &Path) -> Result<()> {
    // Parameter errors take precedence over IO errors.
    if !(rho2 > 0.0 && rho2 <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho2 must lie in (0, 1], got {rho2}")));
    }
    if radius == 0 {
        return Err(Error::InvalidParameter("radius must be >= 1".into()));
    }
    let labels = read_volume(labels)?.into_labels()?;
    write_volume(&fuzzify(&labels, radius, rho2)?.into(), out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config_hash: String,
    pub steps: u64,
    pub rows: usize,
    pub final_loss_total: f64,
    pub final_loss_dice: f64,
    pub final_loss_fuzzy: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Dice of the final argmax prediction per foreground class, against the
    /// reference labels.
    pub dice: Vec<f64>,
    pub mean_dice: f64,
    pub stability: Option<StabilityMetrics>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Materialize the training inputs described by a run config.
pub fn load_train_data(cfg: &RunConfig, base: &Path) -> Result<TrainData> {
    let (labels, reference, intensity) = match &cfg.data {
        Some(paths) => {
            let labels = read_volume(resolve(base, &paths.labels))?.into_labels()?;
            let reference =
                paths.reference.as_ref().map(|p| read_volume(resolve(base, p))?.into_labels()).transpose()?;
            let intensity =
                paths.intensity.as_ref().map(|p| read_volume(resolve(base, p))?.into_scalar()).transpose()?;
            (labels, reference, intensity)
        }
        None => {
            let v = generate(&cfg.synth)?;
            let train_labels = if cfg.train_on_clean { v.clean.clone() } else { v.corrupted };
            (train_labels, Some(v.clean), Some(v.intensity))
        }
    };
    let fuzzy = fuzzify(&labels, cfg.fuzzy.radius, cfg.fuzzy.rho2)?;
    Ok(TrainData { intensity, labels, fuzzy, reference })
}

/// Run a training config, writing `trajectory.csv`, `pareto.csv`,
/// `model.fvol` and `summary.json` into the output directory.
pub fn cmd_train(config: &Path, out_dir: Option<&Path>) -> Result<TrainSummary> {
    let run: RunConfig = read_json(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let out_dir = match (out_dir, &run.out_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => resolve(base, d),
        (None, None) => base.join("out"),
    };
    train_run(&run, base, &out_dir)
}

pub fn train_run(run: &RunConfig, base: &Path, out_dir: &Path) -> Result<TrainSummary> {
    let hash = run.hash()?;
    let run = run.resolved();
    let data = load_train_data(&run, base)?;
    let mut outcome = train(&data, &run.train)?;
    outcome.trajectory.config_hash = hash.clone();

    ensure_dir(out_dir)?;
    let traj = &outcome.trajectory;
    let path = out_dir.join("trajectory.csv");
    let mut w = create(&path)?;
    traj.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = out_dir.join("pareto.csv");
    let mut w = create(&path)?;
    write_pareto_csv(&pareto_trace(traj)?, &hash, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let logits = outcome.logits(&data)?;
    write_volume(&Volume::Logits(logits), out_dir.join("model.fvol"))?;

    let reference = data.reference.as_ref().unwrap_or(&data.labels);
    let dice = outcome.dice_scores(&data, reference)?;
    let last = traj.rows.last().expect("steps >= 1 records row 0");
    let summary = TrainSummary {
        config_hash: hash,
        steps: run.train.steps,
        rows: traj.rows.len(),
        final_loss_total: last.loss_total,
        final_loss_dice: last.loss_dice,
        final_loss_fuzzy: last.loss_fuzzy,
        rho1: outcome.rho.rho1(),
        rho2: outcome.rho.rho2(),
        mean_dice: dice.iter().sum::<f64>() / dice.len() as f64,
        dice,
        stability: (traj.rows.len() >= MIN_STABILITY_ROWS).then(|| stability_metrics(traj)).transpose()?,
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Run the finite-difference suite; `Ok(report)` even when it fails, so the
/// caller can print it before choosing an exit code.
pub fn cmd_gradcheck(samples: usize, seed: u64, perturb: Option<&str>) -> Result<GradcheckReport> {
    let perturb = perturb
        .map(|s| {
            Family::parse(s)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown derivative family `{s}`")))
        })
        .transpose()?;
    gradcheck::run(&GradcheckOptions { samples, seed, perturb })
}

pub fn cmd_landscape<W: Write>(params: &LandscapeParams, out: W) -> Result<()> {
    let rows = landscape(params)?;
    write_landscape_csv(&rows, &canonical_hash(params)?, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSummary {
    pub points: usize,
    pub nondominated: usize,
    pub dice_first_quartile_mean: f64,
    pub dice_last_quartile_mean: f64,
    /// Last-quartile mean Dice loss is no larger than the first-quartile mean.
    pub dice_improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub baseline_config_hash: String,
    pub baseline_stability: StabilityMetrics,
    /// Tail variance of this run divided by that of the baseline.
    pub variance_ratio: f64,
    pub smoother_than_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub config_hash: String,
    pub rows: usize,
    /// Absent when the trajectory has fewer than 20 rows.
    pub stability: Option<StabilityMetrics>,
    pub rho: RhoSummary,
    pub rho2_net_decrease: bool,
    pub pareto: ParetoSummary,
    pub baseline: Option<BaselineComparison>,
}

fn load_trajectory(path: &Path) -> Result<TrainingTrajectory> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    TrainingTrajectory::read_csv(BufReader::new(f))
}

pub fn analyze(traj: &TrainingTrajectory, baseline: Option<&TrainingTrajectory>) -> Result<AnalysisSummary> {
    let rho = rho_summary(traj)?;
    let points = pareto_trace(traj)?;
    let dice: Vec<f64> = points.iter().map(|p| p.loss_dice).collect();
    let (first, last) = quartile_means(&dice).expect("trajectory is non-empty");
    let stability = (traj.rows.len() >= MIN_STABILITY_ROWS).then(|| stability_metrics(traj)).transpose()?;
    let baseline = match baseline {
        Some(b) => {
            let bs = stability_metrics(b)?;
            let own = stability.ok_or_else(|| {
                Error::InsufficientData("trajectory too short for a baseline comparison".into())
            })?;
            Some(BaselineComparison {
                baseline_config_hash: b.config_hash.clone(),
                baseline_stability: bs,
                variance_ratio: own.loss_variance_tail / bs.loss_variance_tail,
                smoother_than_baseline: own.loss_variance_tail < bs.loss_variance_tail,
            })
        }
        None => None,
    };
    Ok(AnalysisSummary {
        config_hash: traj.config_hash.clone(),
        rows: traj.rows.len(),
        stability,
        rho2_net_decrease: rho.rho2_final <= rho.rho2_initial,
        rho,
        pareto: ParetoSummary {
            points: points.len(),
            nondominated: nondominated(&points).len(),
            dice_first_quartile_mean: first,
            dice_last_quartile_mean: last,
            dice_improved: last <= first,
        },
        baseline,
    })
}

/// Analyze a trajectory CSV (optionally against a baseline run's CSV) and
/// write `summary.json` if `out` is given.
pub fn cmd_analyze(
    trajectory: &Path,
    baseline: Option<&Path>,
    out: Option<&Path>,
) -> Result<AnalysisSummary> {
    let traj = load_trajectory(trajectory)?;
    let base = baseline.map(load_trajectory).transpose()?;
    let summary = analyze(&traj, base.as_ref())?;
    if let Some(out) = out {
        write_json(out, &summary)?;
    }
    Ok(summary)
}

/// Accept either a trajectory file or a run directory containing one.
pub fn trajectory_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("trajectory.csv")
    } else {
        p.to_path_buf()
    }
}
