//! Gradient-descent training of logits and raw rho parameters under
//! `L = dice + lambda(t) * L_fuzzy`, with trajectory recording.
//!
//! Each step evaluates the objective at the current parameters, records a
//! trajectory row if `t % record_every == 0`, and then updates
//! `theta -= lr * dL/dtheta` and `raw_rho -= rho_lr * lambda * dL_fuzzy/draw_rho`.

mod analysis;
mod model;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use analysis::{
    dice_score, grad_cosine, linear_trend, nondominated, pareto_trace, quartile_means, rho_summary,
    stability_metrics, stability_of, uncertainty_map, RhoSummary, StabilityMetrics, MIN_STABILITY_ROWS,
};
pub use model::{Model, ModelKind, TinyConvModel};
pub use trajectory::{write_pareto_csv, ParetoPoint, TrainingTrajectory, TrajectoryRow};

pub use crate::volume::LogitField;

use crate::config::canonical_hash;
use crate::curriculum::{make_rho, CurriculumSchedule, CurriculumState};
use crate::error::{DivergenceState, Error, Result};
use crate::fuzzy_label::FuzzyLabelVolume;
use crate::losses::{softmax_field, total_loss, LossConfig, RhoPair};
use crate::volume::{LabelVolume, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Optimizer {
    /// Plain gradient descent.
    #[default]
    Gd,
    /// Heavy-ball momentum on theta. Not covered by the acceptance suite.
    Momentum { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: u64,
    pub learning_rate: f64,
    /// Step size for the raw rho parameters; defaults to `learning_rate`.
    pub rho_learning_rate: Option<f64>,
    /// Defaults to exponential decay from 1 to 0.01 over `steps`.
    pub schedule: Option<CurriculumSchedule>,
    pub rho_init: [f64; 2],
    /// When false, rho stays at `rho_init`, which may then be exactly 1.
    pub learn_rho: bool,
    pub model: ModelKind,
    pub hidden: usize,
    /// Std of the seeded normal initialisation of per-voxel logits.
    pub init_std: f64,
    pub seed: u64,
    pub loss: LossConfig,
    pub optimizer: Optimizer,
    pub record_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 1000,
            learning_rate: 1.0,
            rho_learning_rate: None,
            schedule: None,
            rho_init: [0.5, 0.5],
            learn_rho: true,
            model: ModelKind::PerVoxel,
            hidden: 8,
            init_std: 0.01,
            seed: 0,
            loss: LossConfig::default(),
            optimizer: Optimizer::Gd,
            record_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> CurriculumSchedule {
        self.schedule.unwrap_or_else(|| CurriculumSchedule::exponential_for(self.steps))
    }

    pub fn rho_learning_rate(&self) -> f64 {
        self.rho_learning_rate.unwrap_or(self.learning_rate)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.steps < 1 {
            return bad("steps must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(self.rho_learning_rate() >= 0.0 && self.rho_learning_rate().is_finite()) {
            return bad("rho_learning_rate must be finite and >= 0");
        }
        if self.record_every < 1 {
            return bad("record_every must be >= 1");
        }
        if !(self.init_std >= 0.0) {
            return bad("init_std must be >= 0");
        }
        if let Optimizer::Momentum { beta } = self.optimizer {
            if !(0.0..1.0).contains(&beta) {
                return bad("momentum beta must lie in [0, 1)");
            }
        }
        self.schedule().validate()
    }

    fn initial_rho(&self) -> Result<RhoPair> {
        if self.learn_rho {
            make_rho(self.rho_init[0], self.rho_init[1])
        } else {
            RhoPair::pinned(self.rho_init[0], self.rho_init[1])
        }
    }
}

/// Training inputs. `reference` defaults to `labels` when scoring Dice.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub intensity: Option<ScalarField>,
    pub labels: LabelVolume,
    pub fuzzy: FuzzyLabelVolume,
    pub reference: Option<LabelVolume>,
}

impl TrainData {
    pub fn new(labels: LabelVolume, fuzzy: FuzzyLabelVolume) -> Self {
        TrainData { intensity: None, labels, fuzzy, reference: None }
    }

    fn reference(&self) -> &LabelVolume {
        self.reference.as_ref().unwrap_or(&self.labels)
    }

    fn validate(&self) -> Result<()> {
        let d = self.labels.dims();
        let c = self.labels.num_classes();
        let same = self.fuzzy.dims() == d
            && self.fuzzy.num_classes() == c
            && self.reference().dims() == d
            && self.reference().num_classes() == c
            && self.intensity.as_ref().is_none_or(|i| i.dims() == d);
        if same {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("training inputs differ in shape".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub rho: RhoPair,
    pub trajectory: TrainingTrajectory,
}

impl TrainOutcome {
    /// Logits of the trained model on the training input.
    pub fn logits(&self, data: &TrainData) -> Result<LogitField> {
        self.model.logits(data.intensity.as_ref())
    }

    /// Per-foreground-class Dice of the argmax prediction against `truth`.
    pub fn dice_scores(&self, data: &TrainData, truth: &LabelVolume) -> Result<Vec<f64>> {
        let pred = softmax_field(&self.logits(data)?)?.argmax();
        (1..truth.num_classes()).map(|c| dice_score(&pred, truth, c as u8)).collect()
    }
}

pub fn init_model(data: &TrainData, cfg: &TrainConfig) -> Result<Model> {
    let dims = data.labels.dims();
    let c = data.labels.num_classes();
    Ok(match cfg.model {
        ModelKind::PerVoxel => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let normal =
                Normal::new(0.0, cfg.init_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let z = (0..dims.voxels() * c).map(|_| normal.sample(&mut rng)).collect();
            Model::PerVoxel(LogitField::new(dims, c, z)?)
        }
        ModelKind::TinyConv => {
            if data.intensity.is_none() {
                return Err(Error::InvalidParameter("tiny-conv model needs an intensity image".into()));
            }
            Model::TinyConv(TinyConvModel::new(dims, cfg.hidden, c, cfg.seed)?)
        }
    })
}

/// Run the curriculum training loop from a seeded initialisation.
pub fn train(data: &TrainData, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    let model = init_model(data, cfg)?;
    train_from(model, data, cfg)
}

/// Run the training loop from a given model.
pub fn train_from(mut model: Model, data: &TrainData, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    let mut state = CurriculumState::new(cfg.schedule(), cfg.initial_rho()?)?;
    let input = data.intensity.as_ref();
    let reference = data.reference();
    let lr = cfg.learning_rate;
    let rho_lr = cfg.rho_learning_rate();
    let mut velocity = match cfg.optimizer {
        Optimizer::Momentum { .. } => vec![0.0; model.params().len()],
        Optimizer::Gd => Vec::new(),
    };
    let mut rows = Vec::new();
    let mut last_finite = f64::NAN;

    for t in 0..cfg.steps {
        let lambda = state.lambda();
        let diverged = |loss: f64, rho: &RhoPair| {
            Error::Divergence(Box::new(DivergenceState {
                step: t as usize,
                last_finite_loss: loss,
                rho1: rho.rho1(),
                rho2: rho.rho2(),
                lambda,
            }))
        };
        let z = match model.logits(input) {
            Ok(z) => z,
            Err(Error::NonFiniteInput(_)) => return Err(diverged(last_finite, &state.rho)),
            Err(e) => return Err(e),
        };
        let (loss, grads) = total_loss(&z, &data.labels, &data.fuzzy, &state.rho, lambda, &cfg.loss)?;
        if !loss.total.is_finite() {
            return Err(diverged(last_finite, &state.rho));
        }
        last_finite = loss.total;

        let record = t % cfg.record_every == 0;
        let g_theta = if record {
            let mut g = model.backward_many(input, &[&grads.fuzzy.d_logits, &grads.d_logits_dice])?;
            let g_dice = g.pop().expect("two gradients");
            let g_fuzzy = g.pop().expect("two gradients");
            let p = softmax_field(&z)?;
            let pred = p.argmax();
            rows.push(TrajectoryRow {
                t,
                lambda,
                rho1: state.rho.rho1(),
                rho2: state.rho.rho2(),
                loss_total: loss.total,
                loss_dice: loss.dice,
                loss_fuzzy: loss.fuzzy,
                grad_cos: grad_cosine(&g_fuzzy, &g_dice)?,
                dice: (1..reference.num_classes())
                    .map(|c| dice_score(&pred, reference, c as u8))
                    .collect::<Result<_>>()?,
                mean_uncertainty: uncertainty_map(&p).mean(),
            });
            g_dice.iter().zip(&g_fuzzy).map(|(&d, &f)| cfg.loss.dice_weight * d + lambda * f).collect()
        } else {
            model.backward(input, &grads.d_logits)?
        };

        let params = model.params_mut();
        match cfg.optimizer {
            Optimizer::Gd => {
                for (p, g) in params.iter_mut().zip(&g_theta) {
                    *p -= lr * g;
                }
            }
            Optimizer::Momentum { beta } => {
                for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&g_theta) {
                    *v = beta * *v + g;
                    *p -= lr * *v;
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(diverged(last_finite, &state.rho));
        }
        if cfg.learn_rho {
            state.rho.step_raw(grads.d_rho1_raw, grads.d_rho2_raw, rho_lr);
            if !(state.rho.rho1_raw().is_finite() && state.rho.rho2_raw().is_finite()) {
                return Err(diverged(last_finite, &state.rho));
            }
        }
        state.advance();
    }

    Ok(TrainOutcome {
        model,
        rho: state.rho,
        trajectory: TrainingTrajectory { rows, seed: cfg.seed, config_hash: canonical_hash(cfg)? },
    })
}
