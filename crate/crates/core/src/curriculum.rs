//! Auxiliary-loss weight schedules `lambda(t)` and rho initialisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::RhoPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `lambda0 * exp(-alpha t)`.
    Exponential,
    /// `lambda0 * (1 - t / t_end)`.
    Linear,
    Constant,
    /// `lambda = 1`; annealing is left to the learned rho parameters.
    LearnableOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumSchedule {
    pub kind: ScheduleKind,
    pub lambda0: f64,
    pub alpha: f64,
    pub t_end: u64,
    pub clamp_min: f64,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self::exponential_for(1000)
    }
}

impl CurriculumSchedule {
    /// Exponential decay from 1 to 0.01 over `total_steps`.
    pub fn exponential_for(total_steps: u64) -> Self {
        CurriculumSchedule {
            kind: ScheduleKind::Exponential,
            lambda0: 1.0,
            alpha: 100f64.ln() / total_steps.max(1) as f64,
            t_end: total_steps,
            clamp_min: 0.0,
        }
    }

    pub fn constant(lambda: f64) -> Self {
        CurriculumSchedule {
            kind: ScheduleKind::Constant,
            lambda0: lambda,
            alpha: 0.0,
            t_end: 0,
            clamp_min: 0.0,
        }
    }

    pub fn linear(lambda0: f64, t_end: u64) -> Self {
        CurriculumSchedule { kind: ScheduleKind::Linear, lambda0, alpha: 0.0, t_end, clamp_min: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda0 >= 0.0
            && self.alpha >= 0.0
            && self.clamp_min >= 0.0
            && self.lambda0.is_finite()
            && self.alpha.is_finite()
            && (self.kind != ScheduleKind::Linear || self.t_end > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid schedule {self:?}")))
        }
    }

    pub fn is_decaying(&self) -> bool {
        matches!(self.kind, ScheduleKind::Exponential | ScheduleKind::Linear)
    }
}

/// Evaluate the schedule at optimizer step `t`.
pub fn lambda_at(s: &CurriculumSchedule, t: i64) -> Result<f64> {
    if t < 0 {
        return Err(Error::InvalidStep(t));
    }
    let t = t as f64;
    Ok(match s.kind {
        ScheduleKind::Exponential => (s.lambda0 * (-s.alpha * t).exp()).max(s.clamp_min),
        ScheduleKind::Linear => (s.lambda0 * (1.0 - t / s.t_end as f64)).max(s.clamp_min),
        ScheduleKind::Constant => s.lambda0,
        ScheduleKind::LearnableOnly => 1.0,
    })
}

/// Raw parameters are `logit(init)`, so the constrained values start at the inits.
pub fn make_rho(init1: f64, init2: f64) -> Result<RhoPair> {
    RhoPair::new(init1, init2)
}

/// Schedule position and rho parameters owned by a training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumState {
    schedule: CurriculumSchedule,
    step: u64,
    lambda: f64,
    pub rho: RhoPair,
}

impl CurriculumState {
    pub fn new(schedule: CurriculumSchedule, rho: RhoPair) -> Result<Self> {
        schedule.validate()?;
        let lambda = lambda_at(&schedule, 0)?;
        Ok(CurriculumState { schedule, step: 0, lambda, rho })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn schedule(&self) -> &CurriculumSchedule {
        &self.schedule
    }

    pub fn advance(&mut self) {
        self.step += 1;
        self.lambda = lambda_at(&self.schedule, self.step as i64).expect("step counter is never negative");
    }
}
