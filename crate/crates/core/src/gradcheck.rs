//! Finite-difference verification of every analytic derivative.
//!
//! Each family draws `samples` seeded random instances and compares the
//! closed-form derivative against a five-point central difference of the
//! loss value. The reported error for an entry is
//! `|analytic - numeric| / max(|analytic|, |numeric|, 1e-6)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy_label::fuzzify;
use crate::losses::{
    ce_term, ce_term_curvature, ce_term_grad, dice_loss, fuzzy_term, fuzzy_term_curvature, fuzzy_term_grad_p,
    fuzzy_term_grad_rho, softmax_field, total_loss, DiceTarget, LossConfig, RhoPair,
};
use crate::volume::{Dims, LabelVolume, LogitField, ProbField};

pub const FIRST_ORDER_TOL: f64 = 1e-5;
pub const SECOND_ORDER_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `dL_fuzzy / dp`.
    GradP,
    GradRho1,
    GradRho2,
    /// `d^2 L_fuzzy / dp^2`.
    Curvature,
    CeGrad,
    CeCurvature,
    DiceGrad,
    /// Full objective w.r.t. logits and raw rho.
    LogitChain,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::GradP,
        Family::GradRho1,
        Family::GradRho2,
        Family::Curvature,
        Family::CeGrad,
        Family::CeCurvature,
        Family::DiceGrad,
        Family::LogitChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::GradP => "grad_p",
            Family::GradRho1 => "grad_rho1",
            Family::GradRho2 => "grad_rho2",
            Family::Curvature => "curvature",
            Family::CeGrad => "ce_grad",
            Family::CeCurvature => "ce_curvature",
            Family::DiceGrad => "dice_grad",
            Family::LogitChain => "logit_chain",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Family::Curvature | Family::CeCurvature => SECOND_ORDER_TOL,
            _ => FIRST_ORDER_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub samples: usize,
    pub seed: u64,
    /// Negative-control hook: scale this family's analytic values by `1 + 1e-3`.
    pub perturb: Option<Family>,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { samples: 200, seed: 0, perturb: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub name: String,
    pub entries: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub samples: usize,
    pub seed: u64,
    pub families: Vec<FamilyReport>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.passed)
    }

    pub fn family(&self, f: Family) -> &FamilyReport {
        self.families.iter().find(|r| r.family == f).expect("every family is reported")
    }
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Five-point central first derivative.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Five-point central second derivative.
pub fn central_diff2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

struct Tally {
    entries: usize,
    max: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { entries: 0, max: 0.0 }
    }

    fn push(&mut self, analytic: f64, numeric: f64) {
        self.entries += 1;
        let e = rel_err(analytic, numeric);
        // NaN must surface as a failure.
        if e.is_nan() || e > self.max {
            self.max = if e.is_nan() { f64::INFINITY } else { e };
        }
    }
}

pub fn run(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    if opts.samples == 0 {
        return Err(Error::InsufficientData("gradient check needs at least one sample".into()));
    }
    let bump = |f: Family, v: f64| if opts.perturb == Some(f) { v * (1.0 + 1e-3) } else { v };
    let mut tallies: Vec<(Family, Tally)> = Family::ALL.iter().map(|&f| (f, Tally::new())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for _ in 0..opts.samples {
        let p: f64 = rng.random_range(0.01..=0.99);
        let mu: f64 = rng.random_range(0.0..=1.0);
        let rho1: f64 = rng.random_range(0.05..=0.95);
        let rho2: f64 = rng.random_range(0.05..=0.95);
        let y = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let hp = 1e-3 * p.min(1.0 - p);

        let num = central_diff(|q| fuzzy_term(q, mu, rho1, rho2), p, hp);
        tallies[0].1.push(bump(Family::GradP, fuzzy_term_grad_p(p, mu, rho2)), num);

        let (d1, d2) = fuzzy_term_grad_rho(p, mu, rho1, rho2);
        let n1 = central_diff(|r| fuzzy_term(p, mu, r, rho2), rho1, 1e-3 * rho1.min(1.0 - rho1));
        let n2 = central_diff(|r| fuzzy_term(p, mu, rho1, r), rho2, 1e-3 * rho2.min(1.0 - rho2));
        tallies[1].1.push(bump(Family::GradRho1, d1), n1);
        tallies[2].1.push(bump(Family::GradRho2, d2), n2);

        let h2 = 1e-2 * p.min(1.0 - p);
        let num2 = central_diff2(|q| fuzzy_term(q, mu, rho1, rho2), p, h2);
        tallies[3].1.push(bump(Family::Curvature, fuzzy_term_curvature(p, mu, rho2)), num2);

        let num = central_diff(|q| ce_term(q, y), p, hp);
        tallies[4].1.push(bump(Family::CeGrad, ce_term_grad(p, y)), num);
        let num2 = central_diff2(|q| ce_term(q, y), p, h2);
        tallies[5].1.push(bump(Family::CeCurvature, ce_term_curvature(p, y)), num2);

        check_dice(&mut rng, &mut tallies[6].1, |v| bump(Family::DiceGrad, v))?;
        check_chain(&mut rng, &mut tallies[7].1, |v| bump(Family::LogitChain, v))?;
    }

    Ok(GradcheckReport {
        samples: opts.samples,
        seed: opts.seed,
        families: tallies
            .into_iter()
            .map(|(family, t)| FamilyReport {
                family,
                name: family.name().to_string(),
                entries: t.entries,
                max_rel_err: t.max,
                tolerance: family.tolerance(),
                passed: t.max <= family.tolerance(),
            })
            .collect(),
    })
}

fn random_logits(rng: &mut ChaCha8Rng, dims: Dims, c: usize) -> Result<LogitField> {
    let z = (0..dims.voxels() * c).map(|_| rng.random_range(-2.0..2.0)).collect();
    LogitField::new(dims, c, z)
}

fn random_labels(rng: &mut ChaCha8Rng, dims: Dims, c: usize) -> Result<LabelVolume> {
    let data = (0..dims.voxels()).map(|_| rng.random_range(0..c) as u8).collect();
    LabelVolume::new(dims, c, data)
}

fn check_dice(rng: &mut ChaCha8Rng, tally: &mut Tally, bump: impl Fn(f64) -> f64) -> Result<()> {
    let dims = Dims::cube(3)?;
    let c = rng.random_range(2..=3);
    let p = softmax_field(&random_logits(rng, dims, c)?)?;
    let target = random_labels(rng, dims, c)?.one_hot();
    let analytic = dice_loss(&p, &target)?.grad;
    // Probe a handful of entries per instance, including background ones.
    for _ in 0..6 {
        let k = rng.random_range(0..p.data().len());
        let f = |v: f64| {
            let mut d = p.data().to_vec();
            d[k] = v;
            dice_loss(&ProbField::new_unchecked(dims, c, d), &target).expect("shapes match").loss
        };
        tally.push(bump(analytic[k]), central_diff(f, p.data()[k], 1e-4));
    }
    Ok(())
}

fn check_chain(rng: &mut ChaCha8Rng, tally: &mut Tally, bump: impl Fn(f64) -> f64) -> Result<()> {
    let dims = Dims::cube(3)?;
    let c = 3;
    let z = random_logits(rng, dims, c)?;
    let labels = random_labels(rng, dims, c)?;
    let fuzzy = fuzzify(&labels, 1, rng.random_range(0.05..=1.0))?;
    let rho = RhoPair::new(rng.random_range(0.05..=0.95), rng.random_range(0.05..=0.95))?;
    let lambda = rng.random_range(0.0..=2.0);
    let cfg = LossConfig {
        dice_target: if rng.random::<bool>() { DiceTarget::Hard } else { DiceTarget::Soft },
        ..Default::default()
    };
    let (_, g) = total_loss(&z, &labels, &fuzzy, &rho, lambda, &cfg)?;
    let eval = |z: &LogitField, rho: &RhoPair| {
        total_loss(z, &labels, &fuzzy, rho, lambda, &cfg).expect("shapes match").0.total
    };
    let h = 1e-4;
    for k in 0..z.data().len() {
        let f = |v: f64| {
            let mut zz = z.clone();
            zz.data_mut()[k] = v;
            eval(&zz, &rho)
        };
        tally.push(bump(g.d_logits[k]), central_diff(f, z.data()[k], h));
    }
    let f1 = |v: f64| eval(&z, &RhoPair::from_raw(v, rho.rho2_raw()));
    tally.push(bump(g.d_rho1_raw), central_diff(f1, rho.rho1_raw(), h));
    let f2 = |v: f64| eval(&z, &RhoPair::from_raw(rho.rho1_raw(), v));
    tally.push(bump(g.d_rho2_raw), central_diff(f2, rho.rho2_raw(), h));
    Ok(())
}
