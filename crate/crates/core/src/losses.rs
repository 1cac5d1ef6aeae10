//! Fuzzy auxiliary loss, soft Dice, cross-entropy and their derivatives.
//!
//! Per voxel-class the fuzzy term is
//!
//! ```text
//! L = -( mu * ln p + rho2 * (1 - mu) * ln(rho1 * (1 - p)) )
//! ```
//!
//! summed over classes and reduced over voxels (mean by default). All
//! pointwise derivatives here are closed form; the finite-difference checks
//! live in [`crate::gradcheck`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy_label::FuzzyLabelVolume;
use crate::volume::{LabelVolume, LogitField, ProbField, ScalarField};

/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` before any logarithm.
pub const P_CLAMP: f64 = 1e-7;

/// Largest raw rho magnitude reachable by [`RhoPair::step_raw`];
/// `sigmoid(36) < 1` in f64.
pub const RAW_LIMIT: f64 = 36.0;

/// Smoothing constant in the soft Dice ratio.
pub const DICE_SMOOTH: f64 = 1e-5;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[inline]
pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// The two learnable loss scalars, kept as unconstrained raw values with
/// `rho_i = sigmoid(raw_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoPair {
    rho1_raw: f64,
    rho2_raw: f64,
    rho1: f64,
    rho2: f64,
}

impl RhoPair {
    pub fn from_raw(rho1_raw: f64, rho2_raw: f64) -> Self {
        RhoPair { rho1_raw, rho2_raw, rho1: sigmoid(rho1_raw), rho2: sigmoid(rho2_raw) }
    }

    /// Constrained values in the open unit interval.
    pub fn new(rho1: f64, rho2: f64) -> Result<Self> {
        for (name, v) in [("rho1", rho1), ("rho2", rho2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must lie in the open interval (0, 1)"
                )));
            }
        }
        Ok(RhoPair { rho1_raw: logit(rho1), rho2_raw: logit(rho2), rho1, rho2 })
    }

    /// Fixed values in `(0, 1]`. A value of exactly 1 has an infinite raw
    /// parameter and must not be trained; used for the cross-entropy limit.
    pub fn pinned(rho1: f64, rho2: f64) -> Result<Self> {
        for (name, v) in [("rho1", rho1), ("rho2", rho2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1]")));
            }
        }
        Ok(RhoPair { rho1_raw: logit(rho1), rho2_raw: logit(rho2), rho1, rho2 })
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    pub fn rho1_raw(&self) -> f64 {
        self.rho1_raw
    }

    pub fn rho2_raw(&self) -> f64 {
        self.rho2_raw
    }

    /// Gradient-descent step on the raw parameters. Raw values are kept in
    /// `[-RAW_LIMIT, RAW_LIMIT]` so the sigmoid stays strictly inside (0, 1).
    pub fn step_raw(&mut self, d_rho1_raw: f64, d_rho2_raw: f64, lr: f64) {
        let step = |raw: f64, d: f64| (raw - lr * d).clamp(-RAW_LIMIT, RAW_LIMIT);
        *self = Self::from_raw(step(self.rho1_raw, d_rho1_raw), step(self.rho2_raw, d_rho2_raw));
    }

    /// `d rho / d raw = rho (1 - rho)` for each component.
    pub fn jacobian(&self) -> (f64, f64) {
        (self.rho1 * (1.0 - self.rho1), self.rho2 * (1.0 - self.rho2))
    }
}

// ---------------------------------------------------------------------------
// Pointwise terms.

/// Fuzzy loss for one voxel-class.
#[inline]
pub fn fuzzy_term(p: f64, mu: f64, rho1: f64, rho2: f64) -> f64 {
    let p = clamp_p(p);
    -(mu * p.ln() + rho2 * (1.0 - mu) * (rho1.ln() + (1.0 - p).ln()))
}

#[inline]
pub fn fuzzy_term_grad_p(p: f64, mu: f64, rho2: f64) -> f64 {
    let p = clamp_p(p);
    -mu / p + rho2 * (1.0 - mu) / (1.0 - p)
}

/// `(dL/d rho1, dL/d rho2)` for one voxel-class.
#[inline]
pub fn fuzzy_term_grad_rho(p: f64, mu: f64, rho1: f64, rho2: f64) -> (f64, f64) {
    let p = clamp_p(p);
    let w = 1.0 - mu;
    (-(rho2 / rho1) * w, -w * (rho1.ln() + (1.0 - p).ln()))
}

#[inline]
pub fn fuzzy_term_curvature(p: f64, mu: f64, rho2: f64) -> f64 {
    let p = clamp_p(p);
    let q = 1.0 - p;
    mu / (p * p) + rho2 * (1.0 - mu) / (q * q)
}

/// Stationary point of the fuzzy term in `p`: `mu / (mu + rho2 (1 - mu))`.
#[inline]
pub fn equilibrium_p(mu: f64, rho2: f64) -> f64 {
    mu / (mu + rho2 * (1.0 - mu))
}

#[inline]
pub fn ce_term(p: f64, y: f64) -> f64 {
    let p = clamp_p(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[inline]
pub fn ce_term_grad(p: f64, y: f64) -> f64 {
    let p = clamp_p(p);
    -y / p + (1.0 - y) / (1.0 - p)
}

#[inline]
pub fn ce_term_curvature(p: f64, y: f64) -> f64 {
    let p = clamp_p(p);
    let q = 1.0 - p;
    y / (p * p) + (1.0 - y) / (q * q)
}

// ---------------------------------------------------------------------------
// Field-level operations.

/// How per-voxel losses are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl Reduction {
    fn scale(self, voxels: usize) -> f64 {
        match self {
            Reduction::Mean => 1.0 / voxels as f64,
            Reduction::Sum => 1.0,
        }
    }
}

/// Max-subtracted softmax of one logit row.
pub fn softmax(row: &[f64]) -> Result<Vec<f64>> {
    if row.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFiniteInput("NaN logit".into()));
    }
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|&z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

pub fn softmax_field(z: &LogitField) -> Result<ProbField> {
    let c = z.num_classes();
    let mut data = Vec::with_capacity(z.data().len());
    for row in z.data().chunks_exact(c) {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("non-finite logit".into()));
        }
        data.extend(softmax(row)?);
    }
    Ok(ProbField::new_unchecked(z.dims(), c, data))
}

/// Pull a gradient w.r.t. probabilities back through the softmax:
/// `dL/dz_k = p_k (g_k - sum_c p_c g_c)`.
pub fn softmax_backward(p: &ProbField, d_p: &[f64]) -> Result<Vec<f64>> {
    check_same_len(p.data().len(), d_p.len(), "probabilities", "upstream gradient")?;
    let c = p.num_classes();
    let mut out = vec![0.0; d_p.len()];
    for ((pr, gr), or) in p.data().chunks_exact(c).zip(d_p.chunks_exact(c)).zip(out.chunks_exact_mut(c)) {
        let dot: f64 = pr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for k in 0..c {
            or[k] = pr[k] * (gr[k] - dot);
        }
    }
    Ok(out)
}

fn check_same_len(a: usize, b: usize, what_a: &str, what_b: &str) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{what_a} hold {a} entries but {what_b} hold {b}")));
    }
    Ok(())
}

/// Reduced fuzzy loss plus its per-voxel values (summed over classes).
pub fn fuzzy_loss(p: &ProbField, mu: &[f64], rho: &RhoPair) -> Result<(f64, ScalarField)> {
    fuzzy_loss_with(p, mu, rho, Reduction::Mean)
}

pub fn fuzzy_loss_with(
    p: &ProbField,
    mu: &[f64],
    rho: &RhoPair,
    reduction: Reduction,
) -> Result<(f64, ScalarField)> {
    check_same_len(p.data().len(), mu.len(), "probabilities", "memberships")?;
    let c = p.num_classes();
    let per_voxel: Vec<f64> = p
        .data()
        .chunks_exact(c)
        .zip(mu.chunks_exact(c))
        .map(|(pr, mr)| pr.iter().zip(mr).map(|(&pc, &mc)| fuzzy_term(pc, mc, rho.rho1(), rho.rho2())).sum())
        .collect();
    let total = per_voxel.iter().sum::<f64>() * reduction.scale(per_voxel.len());
    Ok((total, ScalarField::new(p.dims(), per_voxel)?))
}

/// Pointwise `dL/dp_c`, not scaled by the voxel reduction.
pub fn fuzzy_loss_grad_p(p: &ProbField, mu: &[f64], rho: &RhoPair) -> Result<Vec<f64>> {
    check_same_len(p.data().len(), mu.len(), "probabilities", "memberships")?;
    Ok(p.data().iter().zip(mu).map(|(&pc, &mc)| fuzzy_term_grad_p(pc, mc, rho.rho2())).collect())
}

/// `(dL/d rho1, dL/d rho2)` of the voxel-mean fuzzy loss.
pub fn fuzzy_loss_grad_rho(p: &ProbField, mu: &[f64], rho: &RhoPair) -> Result<(f64, f64)> {
    fuzzy_loss_grad_rho_with(p, mu, rho, Reduction::Mean)
}

pub fn fuzzy_loss_grad_rho_with(
    p: &ProbField,
    mu: &[f64],
    rho: &RhoPair,
    reduction: Reduction,
) -> Result<(f64, f64)> {
    check_same_len(p.data().len(), mu.len(), "probabilities", "memberships")?;
    let (mut d1, mut d2) = (0.0, 0.0);
    for (&pc, &mc) in p.data().iter().zip(mu) {
        let (a, b) = fuzzy_term_grad_rho(pc, mc, rho.rho1(), rho.rho2());
        d1 += a;
        d2 += b;
    }
    let s = reduction.scale(p.dims().voxels());
    Ok((d1 * s, d2 * s))
}

/// Pointwise `d^2 L / dp_c^2`.
pub fn fuzzy_loss_curvature(p: &ProbField, mu: &[f64], rho: &RhoPair) -> Result<Vec<f64>> {
    check_same_len(p.data().len(), mu.len(), "probabilities", "memberships")?;
    Ok(p.data().iter().zip(mu).map(|(&pc, &mc)| fuzzy_term_curvature(pc, mc, rho.rho2())).collect())
}

fn check_one_hot(y: &[f64], c: usize) -> Result<()> {
    for (v, row) in y.chunks_exact(c).enumerate() {
        let ones = row.iter().filter(|&&t| t == 1.0).count();
        let zeros = row.iter().filter(|&&t| t == 0.0).count();
        if ones != 1 || zeros != c - 1 {
            return Err(Error::InvalidTarget(format!("target row at voxel {v} is not one-hot")));
        }
    }
    Ok(())
}

/// Per-class binary cross-entropy, summed over classes, mean over voxels.
pub fn ce_loss(p: &ProbField, y_onehot: &[f64]) -> Result<f64> {
    check_same_len(p.data().len(), y_onehot.len(), "probabilities", "targets")?;
    check_one_hot(y_onehot, p.num_classes())?;
    let s: f64 = p.data().iter().zip(y_onehot).map(|(&pc, &y)| ce_term(pc, y)).sum();
    Ok(s / p.dims().voxels() as f64)
}

pub fn ce_grad(p: &ProbField, y_onehot: &[f64]) -> Result<Vec<f64>> {
    check_same_len(p.data().len(), y_onehot.len(), "probabilities", "targets")?;
    check_one_hot(y_onehot, p.num_classes())?;
    Ok(p.data().iter().zip(y_onehot).map(|(&pc, &y)| ce_term_grad(pc, y)).collect())
}

pub fn ce_curvature(p: &ProbField, y_onehot: &[f64]) -> Result<Vec<f64>> {
    check_same_len(p.data().len(), y_onehot.len(), "probabilities", "targets")?;
    check_one_hot(y_onehot, p.num_classes())?;
    Ok(p.data().iter().zip(y_onehot).map(|(&pc, &y)| ce_term_curvature(pc, y)).collect())
}

/// Soft Dice loss and its gradient w.r.t. `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiceEval {
    pub loss: f64,
    /// Same layout as the probability field; background entries are zero.
    pub grad: Vec<f64>,
    pub per_class: Vec<f64>,
}

/// Squared-denominator soft Dice averaged over foreground classes `1..C`:
/// `1 - (2 sum p t + eps) / (sum p^2 + sum t^2 + eps)`.
pub fn dice_loss(p: &ProbField, target: &[f64]) -> Result<DiceEval> {
    check_same_len(p.data().len(), target.len(), "probabilities", "targets")?;
    let c = p.num_classes();
    let k = (c - 1) as f64;
    let mut inter = vec![0.0; c];
    let mut denom = vec![DICE_SMOOTH; c];
    for (pr, tr) in p.data().chunks_exact(c).zip(target.chunks_exact(c)) {
        for j in 1..c {
            inter[j] += pr[j] * tr[j];
            denom[j] += pr[j] * pr[j] + tr[j] * tr[j];
        }
    }
    let per_class: Vec<f64> = (1..c).map(|j| 1.0 - (2.0 * inter[j] + DICE_SMOOTH) / denom[j]).collect();
    let loss = per_class.iter().sum::<f64>() / k;
    let mut grad = vec![0.0; p.data().len()];
    for ((pr, tr), gr) in p.data().chunks_exact(c).zip(target.chunks_exact(c)).zip(grad.chunks_exact_mut(c)) {
        for j in 1..c {
            let num = 2.0 * inter[j] + DICE_SMOOTH;
            gr[j] = -(2.0 * tr[j] * denom[j] - num * 2.0 * pr[j]) / (denom[j] * denom[j] * k);
        }
    }
    Ok(DiceEval { loss, grad, per_class })
}

// ---------------------------------------------------------------------------
// Combined objective.

/// Which target the Dice branch is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiceTarget {
    /// One-hot crisp labels.
    #[default]
    Hard,
    /// Fuzzy memberships.
    Soft,
}

/// The auxiliary branch weighted by `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxLoss {
    #[default]
    Fuzzy,
    /// Per-class binary cross-entropy against the crisp labels.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub dice_target: DiceTarget,
    pub dice_weight: f64,
    pub aux: AuxLoss,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            dice_target: DiceTarget::Hard,
            dice_weight: 1.0,
            aux: AuxLoss::Fuzzy,
            reduction: Reduction::Mean,
        }
    }
}

/// Loss components. `total = dice_weight * dice + lambda * fuzzy`; with the
/// default unit Dice weight this is `dice + lambda * fuzzy`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub dice: f64,
    pub fuzzy: f64,
    pub lambda: f64,
    pub per_voxel_fuzzy: Option<ScalarField>,
}

/// Gradients of the auxiliary branch alone (before `lambda` weighting).
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGrads {
    pub d_p: Vec<f64>,
    pub d_rho1: f64,
    pub d_rho2: f64,
    pub d_logits: Vec<f64>,
}

/// Full gradient of the combined objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalGrads {
    /// `dL_total / dz`.
    pub d_logits: Vec<f64>,
    /// `dL_dice / dz` (unweighted).
    pub d_logits_dice: Vec<f64>,
    pub fuzzy: FuzzyGrads,
    /// `lambda * dL_fuzzy / d raw_rho`.
    pub d_rho1_raw: f64,
    pub d_rho2_raw: f64,
}

/// Evaluate the curriculum objective and its gradient w.r.t. logits and the
/// raw rho parameters. `lambda` scales every auxiliary-branch gradient.
pub fn total_loss(
    z: &LogitField,
    labels: &LabelVolume,
    fuzzy: &FuzzyLabelVolume,
    rho: &RhoPair,
    lambda: f64,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, TotalGrads)> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if z.dims() != labels.dims()
        || z.dims() != fuzzy.dims()
        || z.num_classes() != labels.num_classes()
        || z.num_classes() != fuzzy.num_classes()
    {
        return Err(Error::ShapeMismatch("logits, labels and fuzzy labels differ in shape".into()));
    }
    let p = softmax_field(z)?;
    let one_hot = labels.one_hot();

    let dice = match cfg.dice_target {
        DiceTarget::Hard => dice_loss(&p, &one_hot)?,
        DiceTarget::Soft => dice_loss(&p, fuzzy.mu())?,
    };
    let d_logits_dice = softmax_backward(&p, &dice.grad)?;

    let scale = cfg.reduction.scale(z.dims().voxels());
    let (aux_value, per_voxel, mut d_p, d_rho1, d_rho2) = match cfg.aux {
        AuxLoss::Fuzzy => {
            let (v, pv) = fuzzy_loss_with(&p, fuzzy.mu(), rho, cfg.reduction)?;
            let g = fuzzy_loss_grad_p(&p, fuzzy.mu(), rho)?;
            let (d1, d2) = fuzzy_loss_grad_rho_with(&p, fuzzy.mu(), rho, cfg.reduction)?;
            (v, Some(pv), g, d1, d2)
        }
        AuxLoss::CrossEntropy => {
            let s: f64 = p.data().iter().zip(&one_hot).map(|(&pc, &y)| ce_term(pc, y)).sum();
            let g = ce_grad(&p, &one_hot)?;
            (s * scale, None, g, 0.0, 0.0)
        }
    };
    d_p.iter_mut().for_each(|g| *g *= scale);
    let d_logits_fuzzy = softmax_backward(&p, &d_p)?;

    let d_logits =
        d_logits_dice.iter().zip(&d_logits_fuzzy).map(|(&a, &b)| cfg.dice_weight * a + lambda * b).collect();
    let (j1, j2) = rho.jacobian();
    let breakdown = LossBreakdown {
        total: cfg.dice_weight * dice.loss + lambda * aux_value,
        dice: dice.loss,
        fuzzy: aux_value,
        lambda,
        per_voxel_fuzzy: per_voxel,
    };
    let grads = TotalGrads {
        d_logits,
        d_logits_dice,
        fuzzy: FuzzyGrads { d_p, d_rho1, d_rho2, d_logits: d_logits_fuzzy },
        d_rho1_raw: lambda * d_rho1 * j1,
        d_rho2_raw: lambda * d_rho2 * j2,
    };
    Ok((breakdown, grads))
}
