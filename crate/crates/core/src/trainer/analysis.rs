//! Diagnostics over probabilities, gradients and recorded trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, ProbField, ScalarField};

use super::trajectory::{ParetoPoint, TrainingTrajectory};

/// Cosine similarity; zero when either vector vanishes.
pub fn grad_cosine(g1: &[f64], g2: &[f64]) -> Result<f64> {
    if g1.len() != g2.len() {
        return Err(Error::ShapeMismatch(format!("gradient lengths differ: {} vs {}", g1.len(), g2.len())));
    }
    let (mut dot, mut n1, mut n2) = (0.0, 0.0, 0.0);
    for (&a, &b) in g1.iter().zip(g2) {
        dot += a * b;
        n1 += a * a;
        n2 += b * b;
    }
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (n1.sqrt() * n2.sqrt())).clamp(-1.0, 1.0))
}

/// `1 - max_c p_c(x)` per voxel.
pub fn uncertainty_map(p: &ProbField) -> ScalarField {
    let data = p
        .data()
        .chunks_exact(p.num_classes())
        .map(|row| 1.0 - row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    ScalarField::new(p.dims(), data).expect("probabilities are finite")
}

/// `2|P n T| / (|P| + |T|)` for class `c`; 1 when both masks are empty.
pub fn dice_score(pred: &LabelVolume, truth: &LabelVolume, c: u8) -> Result<f64> {
    if pred.dims() != truth.dims() {
        return Err(Error::ShapeMismatch("prediction and truth differ in dims".into()));
    }
    let (mut inter, mut np, mut nt) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.data().iter().zip(truth.data()) {
        let (pa, tb) = (a == c, b == c);
        np += pa as usize;
        nt += tb as usize;
        inter += (pa && tb) as usize;
    }
    if np + nt == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (np + nt) as f64)
}

pub fn pareto_trace(traj: &TrainingTrajectory) -> Result<Vec<ParetoPoint>> {
    if traj.rows.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    Ok(traj
        .rows
        .iter()
        .map(|r| ParetoPoint { t: r.t, loss_dice: r.loss_dice, loss_fuzzy: r.loss_fuzzy })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMetrics {
    /// Population variance of the total loss over the last half of the rows.
    pub loss_variance_tail: f64,
    pub max_step_jump: f64,
}

pub const MIN_STABILITY_ROWS: usize = 20;

pub fn stability_metrics(traj: &TrainingTrajectory) -> Result<StabilityMetrics> {
    stability_of(&traj.column(|r| r.loss_total))
}

/// Stability metrics of a raw loss column.
pub fn stability_of(losses: &[f64]) -> Result<StabilityMetrics> {
    if losses.len() < MIN_STABILITY_ROWS {
        return Err(Error::InsufficientData(format!(
            "stability metrics need at least {MIN_STABILITY_ROWS} rows, got {}",
            losses.len()
        )));
    }
    let tail = &losses[losses.len() / 2..];
    // Shifted by the first tail value so a constant tail gives exactly zero.
    let shifted: Vec<f64> = tail.iter().map(|v| v - tail[0]).collect();
    let mean = shifted.iter().sum::<f64>() / tail.len() as f64;
    let var = shifted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    let jump = losses.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(StabilityMetrics { loss_variance_tail: var, max_step_jump: jump })
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_trend(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Rho endpoint and trend summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSummary {
    pub rho1_initial: f64,
    pub rho1_final: f64,
    pub rho2_initial: f64,
    pub rho2_final: f64,
    /// Every recorded step has `rho1(t+1) >= rho1(t)`.
    pub rho1_monotone: bool,
    /// Slope of rho2 against t over the last quarter of the rows.
    pub rho2_tail_trend: f64,
}

pub fn rho_summary(traj: &TrainingTrajectory) -> Result<RhoSummary> {
    let rows = &traj.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InsufficientData("empty trajectory".into())),
    };
    let tail = &rows[rows.len() - (rows.len() / 4).max(2).min(rows.len())..];
    let xs: Vec<f64> = tail.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.rho2).collect();
    Ok(RhoSummary {
        rho1_initial: first.rho1,
        rho1_final: last.rho1,
        rho2_initial: first.rho2,
        rho2_final: last.rho2,
        rho1_monotone: rows.windows(2).all(|w| w[1].rho1 >= w[0].rho1),
        rho2_tail_trend: linear_trend(&xs, &ys),
    })
}

/// Mean of a column over the first and the last quarter of the rows.
pub fn quartile_means(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let q = (values.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&values[..q]), mean(&values[values.len() - q..])))
}

/// Indices of points not weakly dominated in `(loss_dice, loss_fuzzy)`.
pub fn nondominated(points: &[ParetoPoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let a = points[i];
            !points.iter().any(|b| {
                b.loss_dice <= a.loss_dice
                    && b.loss_fuzzy <= a.loss_fuzzy
                    && (b.loss_dice < a.loss_dice || b.loss_fuzzy < a.loss_fuzzy)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::trajectory::TrajectoryRow;
    use crate::volume::Dims;

    fn traj_from(losses: &[f64]) -> TrainingTrajectory {
        TrainingTrajectory {
            rows: losses
                .iter()
                .enumerate()
                .map(|(t, &l)| TrajectoryRow {
                    t: t as u64,
                    lambda: 1.0,
                    rho1: 0.5,
                    rho2: 0.5,
                    loss_total: l,
                    loss_dice: l,
                    loss_fuzzy: 2.0 * l,
                    grad_cos: 0.0,
                    dice: vec![1.0],
                    mean_uncertainty: 0.0,
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn cosine_examples() {
        let g = [1.0, -2.0, 3.0];
        let g2: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        assert!((grad_cosine(&g, &g2).unwrap() - 1.0).abs() < 1e-15);
        assert!((grad_cosine(&g, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(grad_cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(grad_cosine(&[0.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(grad_cosine(&[1.0], &[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn uncertainty_examples() {
        let d = Dims::new(1, 1, 3).unwrap();
        let p = ProbField::new(d, 2, vec![1.0, 0.0, 0.5, 0.5, 0.7, 0.3]).unwrap();
        let u = uncertainty_map(&p);
        assert_eq!(u.data()[0], 0.0);
        assert_eq!(u.data()[1], 0.5);
        assert!((u.data()[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dice_score_examples() {
        let d = Dims::new(1, 1, 8).unwrap();
        let a = LabelVolume::new(d, 2, vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
        let b = LabelVolume::new(d, 2, vec![0, 0, 1, 1, 1, 1, 0, 0]).unwrap();
        let c = LabelVolume::new(d, 2, vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert_eq!(dice_score(&a, &a, 1).unwrap(), 1.0);
        assert_eq!(dice_score(&a, &c, 1).unwrap(), 0.0);
        assert_eq!(dice_score(&a, &b, 1).unwrap(), 0.5);
        let z = LabelVolume::filled(d, 3, 0).unwrap();
        assert_eq!(dice_score(&z, &z, 2).unwrap(), 1.0);
    }

    #[test]
    fn stability_examples() {
        let m = stability_metrics(&traj_from(&[0.7; 20])).unwrap();
        assert_eq!((m.loss_variance_tail, m.max_step_jump), (0.0, 0.0));
        let alt: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let m = stability_metrics(&traj_from(&alt)).unwrap();
        assert_eq!(m.max_step_jump, 1.0);
        assert_eq!(m.loss_variance_tail, 0.25);
        assert!(matches!(stability_metrics(&traj_from(&[1.0; 19])), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn pareto_examples() {
        let tr = traj_from(&[0.4]);
        let pts = pareto_trace(&tr).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!((pts[0].loss_dice, pts[0].loss_fuzzy), (0.4, 0.8));
        assert!(pareto_trace(&TrainingTrajectory::default()).is_err());
        let pts = [
            ParetoPoint { t: 0, loss_dice: 1.0, loss_fuzzy: 0.0 },
            ParetoPoint { t: 1, loss_dice: 0.0, loss_fuzzy: 1.0 },
            ParetoPoint { t: 2, loss_dice: 1.0, loss_fuzzy: 1.0 },
        ];
        assert_eq!(nondominated(&pts), vec![0, 1]);
    }

    #[test]
    fn trend_and_quartiles() {
        assert!((linear_trend(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
        assert_eq!(quartile_means(&[4.0, 3.0, 2.0, 1.0]), Some((4.0, 1.0)));
    }
}
