//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ifl::cli::load_train_data;
use ifl::config::RunConfig;
use ifl::curriculum::CurriculumSchedule;
use ifl::fuzzy_label::{compute_membership, fuzzify, FUZZY_TOL};
use ifl::gradcheck::{self, GradcheckOptions};
use ifl::losses::{
    ce_loss, ce_term_curvature, equilibrium_p, fuzzy_loss, fuzzy_term_curvature, fuzzy_term_grad_p,
    softmax_field, RhoPair,
};
use ifl::trainer::{rho_summary, stability_metrics, train, ModelKind, TrainOutcome};
use ifl::volume::{from_bytes, to_bytes, Dims, LabelVolume, LogitField, ProbField, ScalarField, Volume};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn benchmark(seed: u64, model: ModelKind, lr: f64, steps: u64) -> RunConfig {
    let mut run = RunConfig { seed: Some(seed), ..Default::default() };
    run.train.model = model;
    run.train.learning_rate = lr;
    run.train.rho_learning_rate = Some(0.01);
    run.train.steps = steps;
    run.resolved()
}

fn train_run(run: &RunConfig) -> (TrainOutcome, ifl::TrainData) {
    let data = load_train_data(run, Path::new(".")).expect("benchmark data");
    let out = train(&data, &run.train).expect("training run");
    (out, data)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let report = gradcheck::run(&GradcheckOptions { samples: 200, ..Default::default() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let worst = report
        .families
        .iter()
        .map(|f| format!("{}={:.1e}", f.name, f.max_rel_err))
        .collect::<Vec<_>>()
        .join(" ");
    verdict(report.passed() && secs < 10.0, format!("{secs:.2}s, {worst}"))
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dims = Dims::new(rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..5)).unwrap();
        let c = rng.random_range(2..5);
        let z: Vec<f64> = (0..dims.voxels() * c).map(|_| rng.random_range(-6.0..6.0)).collect();
        let p = softmax_field(&LogitField::new(dims, c, z).unwrap()).unwrap();
        let labels = LabelVolume::from_fn(dims, c, |_, _, _| rng.random_range(0..c as u8)).unwrap();
        let y = labels.one_hot();
        let (f, _) = fuzzy_loss(&p, &y, &RhoPair::pinned(1.0, 1.0).unwrap()).unwrap();
        worst = worst.max((f - ce_loss(&p, &y).unwrap()).abs());
    }
    verdict(worst <= 1e-12, format!("max |fuzzy - CE| = {worst:.2e} over 100 instances"))
}

fn brute_force(labels: &LabelVolume, r: usize) -> Vec<f64> {
    let d = labels.dims();
    let c = labels.num_classes();
    let r = r as isize;
    let mut out = vec![0.0; d.voxels() * c];
    for z in 0..d.depth as isize {
        for y in 0..d.height as isize {
            for x in 0..d.width as isize {
                let mut counts = vec![0usize; c];
                let mut total = 0usize;
                for dz in -r..=r {
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let (zz, yy, xx) = (z + dz, y + dy, x + dx);
                            let inside = (0..d.depth as isize).contains(&zz)
                                && (0..d.height as isize).contains(&yy)
                                && (0..d.width as isize).contains(&xx);
                            if (dz, dy, dx) == (0, 0, 0) || !inside {
                                continue;
                            }
                            counts[labels.get(zz as usize, yy as usize, xx as usize) as usize] += 1;
                            total += 1;
                        }
                    }
                }
                let i = d.index(z as usize, y as usize, x as usize);
                for k in 0..c {
                    out[i * c + k] = counts[k] as f64 / total as f64;
                }
            }
        }
    }
    out
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut mismatches, mut violations, mut voxels) = (0usize, 0usize, 0usize);
    for _ in 0..50 {
        let dims = loop {
            let d =
                Dims::new(rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6)).unwrap();
            if d.voxels() > 1 {
                break d;
            }
        };
        let c = rng.random_range(2..=4);
        let r = rng.random_range(1..=2);
        let rho2 = rng.random_range(0.01..=1.0);
        let labels = LabelVolume::from_fn(dims, c, |_, _, _| rng.random_range(0..c as u8)).unwrap();
        if compute_membership(&labels, r).unwrap().data() != brute_force(&labels, r).as_slice() {
            mismatches += 1;
        }
        let f = fuzzify(&labels, r, rho2).unwrap();
        for i in 0..f.mu().len() {
            let (mu, nu, pi) = (f.mu()[i], f.nu()[i], f.pi()[i]);
            let ok = mu + nu <= 1.0 + FUZZY_TOL
                && (pi - (1.0 - mu - nu)).abs() <= 1e-12
                && (nu - rho2 * (1.0 - mu)).abs() <= 1e-12;
            violations += !ok as usize;
        }
        voxels += dims.voxels();
    }
    verdict(
        mismatches == 0 && violations == 0,
        format!("{mismatches} oracle mismatches, {violations} invariant violations, {voxels} voxels"),
    )
}

fn criterion_4() -> Verdict {
    let (mut grad_max, mut curv_max): (f64, f64) = (0.0, 0.0);
    let mut exact_at_one = true;
    for i in 1..=50 {
        let mu = i as f64 / 51.0;
        for j in 1..=10 {
            let rho2 = j as f64 / 10.0;
            let ps = equilibrium_p(mu, rho2);
            grad_max = grad_max.max(fuzzy_term_grad_p(ps, mu, rho2).abs());
            curv_max = curv_max.max(fuzzy_term_curvature(ps, mu, rho2));
        }
        exact_at_one &= equilibrium_p(mu, 1.0) == mu;
    }
    let ce = ce_term_curvature(1e-6, 1.0);
    let ratio = ce / curv_max;
    verdict(
        grad_max < 1e-9 && exact_at_one && curv_max.is_finite() && ce > 1e11 && ratio > 1e6,
        format!("max|grad|={grad_max:.1e}, max fuzzy curvature={curv_max:.3e}, CE curvature={ce:.1e}, ratio={ratio:.2e}"),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let (out, _) = train_run(&benchmark(0, ModelKind::PerVoxel, 1000.0, 2000));
    let secs = start.elapsed().as_secs_f64();
    let s = rho_summary(&out.trajectory).unwrap();
    verdict(
        s.rho1_monotone
            && s.rho1_final >= 0.6
            && s.rho2_final <= 0.4
            && s.rho2_tail_trend < 0.0
            && secs < 60.0,
        format!(
            "rho1 {:.4} -> {:.4} (monotone {}), rho2 {:.4} -> {:.4}, rho2 tail slope {:.2e}, {secs:.2}s",
            s.rho1_initial, s.rho1_final, s.rho1_monotone, s.rho2_initial, s.rho2_final, s.rho2_tail_trend
        ),
    )
}

struct Paired {
    var_fuzzy: f64,
    var_base: f64,
    dice_fuzzy: f64,
    dice_base: f64,
}

fn paired_runs() -> Vec<Paired> {
    (0..5)
        .map(|seed| {
            let fuzzy = benchmark(seed, ModelKind::PerVoxel, 1000.0, 2000);
            let mut base = fuzzy.clone();
            base.train.schedule = Some(CurriculumSchedule::constant(0.0));
            let clean = |o: &TrainOutcome, d: &ifl::TrainData| {
                let s = o.dice_scores(d, d.reference.as_ref().unwrap()).unwrap();
                s.iter().sum::<f64>() / s.len() as f64
            };
            let (of, df) = train_run(&fuzzy);
            let (ob, db) = train_run(&base);
            Paired {
                var_fuzzy: stability_metrics(&of.trajectory).unwrap().loss_variance_tail,
                var_base: stability_metrics(&ob.trajectory).unwrap().loss_variance_tail,
                dice_fuzzy: clean(&of, &df),
                dice_base: clean(&ob, &db),
            }
        })
        .collect()
}

fn criterion_6(runs: &[Paired]) -> Verdict {
    let wins = runs.iter().filter(|r| r.var_fuzzy < r.var_base).count();
    let pairs =
        runs.iter().map(|r| format!("{:.1e}/{:.1e}", r.var_fuzzy, r.var_base)).collect::<Vec<_>>().join(" ");
    verdict(wins == 5, format!("{wins}/5 seeds smoother; tail variance fuzzy/baseline: {pairs}"))
}

fn criterion_7(runs: &[Paired]) -> Verdict {
    let wins = runs.iter().filter(|r| r.dice_fuzzy >= r.dice_base).count();
    let mean = runs.iter().map(|r| r.dice_fuzzy - r.dice_base).sum::<f64>() / runs.len() as f64;
    let pairs =
        runs.iter().map(|r| format!("{:.4}/{:.4}", r.dice_fuzzy, r.dice_base)).collect::<Vec<_>>().join(" ");
    verdict(
        wins >= 4 && mean > 0.0,
        format!("{wins}/5 seeds fuzzy >= baseline, mean improvement {mean:.2e}; clean Dice fuzzy/baseline: {pairs}"),
    )
}

fn criterion_8() -> Verdict {
    let finals: Vec<(f64, f64, f64)> = [0.1, 1.0, 10.0]
        .iter()
        .map(|&lam| {
            let mut run = benchmark(0, ModelKind::PerVoxel, 1000.0, 2000);
            run.train.schedule = Some(CurriculumSchedule::constant(lam));
            let (out, _) = train_run(&run);
            let last = out.trajectory.rows.last().unwrap().clone();
            (lam, last.loss_fuzzy, last.loss_dice)
        })
        .collect();
    let ordered = finals.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].2 >= w[0].2);
    let text = finals
        .iter()
        .map(|(l, f, d)| format!("lambda {l}: fuzzy {f:.4} dice {d:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(ordered, text)
}

fn criterion_9() -> Verdict {
    let (out, _) = train_run(&benchmark(0, ModelKind::TinyConv, 0.01, 500));
    let cos = out.trajectory.column(|r| r.grad_cos);
    let n = (cos.len() / 10).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = mean(&cos[..n]);
    let last = mean(&cos[cos.len() - n..]);
    let flip = cos.iter().position(|&c| c < 0.0);
    verdict(
        first > 0.0,
        format!(
            "first-decile mean cosine {first:+.4}; reported only: last-decile mean {last:+.4}, first negative step {}",
            flip.map_or("none".to_string(), |t| t.to_string())
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                files.insert(key, fs::read(&p).unwrap());
            }
        }
    }
    files
}

/// Runs every subcommand in a fresh directory; returns the files written
/// plus each command's stdout and exit code.
fn cli_session() -> BTreeMap<String, Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), r#"{"seed": 5}"#).unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"seed": 2, "train": {"steps": 40, "learning_rate": 500.0, "rho_learning_rate": 0.01}}"#,
    )
    .unwrap();
    let commands: &[&[&str]] = &[
        &["synth", "spec.json", "synth"],
        &["fuzzify", "synth/corrupted.fvol", "fuzzy.fvol", "--radius", "2", "--rho2", "0.3"],
        &["train", "run.json", "--out", "run"],
        &["gradcheck", "--samples", "20", "--seed", "4"],
        &["landscape", "--mu", "0.3", "--grid", "25", "--out", "landscape.csv"],
        &["landscape", "--mu", "0.7", "--grid", "9"],
        &["analyze", "run"],
    ];
    let mut out = BTreeMap::new();
    for (i, args) in commands.iter().enumerate() {
        let o = Command::new(env!("CARGO_BIN_EXE_ifl")).args(*args).current_dir(dir.path()).output().unwrap();
        out.insert(format!("#{i} {} status", args[0]), format!("{:?}", o.status.code()).into_bytes());
        out.insert(format!("#{i} {} stdout", args[0]), o.stdout);
    }
    out.extend(snapshot(dir.path()));
    out
}

fn random_volume(rng: &mut ChaCha8Rng) -> Volume {
    let dims = Dims::new(rng.random_range(1..6), rng.random_range(1..6), rng.random_range(1..6)).unwrap();
    let c = rng.random_range(2..5);
    let n = dims.voxels();
    let f32s = |rng: &mut ChaCha8Rng, m: usize| {
        (0..m).map(|_| rng.random_range(-1e4f32..1e4) as f64).collect::<Vec<_>>()
    };
    match rng.random_range(0..5) {
        0 => LabelVolume::from_fn(dims, c, |_, _, _| rng.random_range(0..c as u8)).unwrap().into(),
        1 => ScalarField::new(dims, f32s(rng, n)).unwrap().into(),
        2 => LogitField::new(dims, c, f32s(rng, n * c)).unwrap().into(),
        3 => {
            let hot: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let data = hot.iter().flat_map(|&h| (0..c).map(move |k| (k == h) as u8 as f64)).collect();
            ProbField::new(dims, c, data).unwrap().into()
        }
        _ => {
            let dims = Dims::new(dims.depth + 1, dims.height, dims.width).unwrap();
            let labels = LabelVolume::from_fn(dims, c, |_, _, _| rng.random_range(0..c as u8)).unwrap();
            // Fuzzy channels are rounded to f32 on first write.
            let f = fuzzify(&labels, 1, rng.random_range(0.01..=1.0)).unwrap();
            from_bytes(&to_bytes(&f.into()).unwrap()).unwrap()
        }
    }
}

fn criterion_10() -> Verdict {
    let (a, b) = (cli_session(), cli_session());
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let failed: Vec<&String> = a
        .iter()
        .filter(|(k, v)| k.ends_with("status") && v.as_slice() != b"Some(0)")
        .map(|(k, _)| k)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut bad_round_trips = 0;
    for _ in 0..100 {
        let v = random_volume(&mut rng);
        let bytes = to_bytes(&v).unwrap();
        let back = from_bytes(&bytes).unwrap();
        bad_round_trips += (back != v || to_bytes(&back).unwrap() != bytes) as usize;
    }
    verdict(
        differing.is_empty() && failed.is_empty() && a.len() == b.len() && bad_round_trips == 0,
        format!(
            "{} CLI artifacts compared, differing {:?}, nonzero exits {:?}; {bad_round_trips}/100 FVOL round trips not bit-exact",
            a.len(),
            differing,
            failed
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |n, name, v: Verdict| {
        println!("{} criterion {n:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    record(1, "derivative oracles", criterion_1());
    record(2, "degeneration to cross-entropy", criterion_2());
    record(3, "fuzzy-label oracle", criterion_3());
    record(4, "equilibrium and curvature", criterion_4());
    record(5, "rho dynamics", criterion_5());
    let paired = paired_runs();
    record(6, "stability vs baseline", criterion_6(&paired));
    record(7, "clean-label Dice vs baseline", criterion_7(&paired));
    record(8, "Pareto ordering over lambda", criterion_8());
    record(9, "early gradient cooperation", criterion_9());
    record(10, "determinism and FVOL round trip", criterion_10());
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
