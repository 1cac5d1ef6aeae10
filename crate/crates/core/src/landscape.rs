//! One-dimensional loss profiles in `p` for the fuzzy term and cross-entropy.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::format_float as fmt_f64;
use crate::error::{Error, Result};
use crate::losses::{
    ce_term, ce_term_curvature, ce_term_grad, fuzzy_term, fuzzy_term_curvature, fuzzy_term_grad_p,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeParams {
    pub mu: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub p: f64,
    pub fuzzy_loss: f64,
    pub fuzzy_grad: f64,
    pub fuzzy_curvature: f64,
    pub ce_loss: f64,
    pub ce_grad: f64,
    pub ce_curvature: f64,
}

impl LandscapeParams {
    /// Cross-entropy target: the crisp label closest to `mu`.
    pub fn ce_target(&self) -> f64 {
        if self.mu >= 0.5 {
            1.0
        } else {
            0.0
        }
    }
}

/// Evaluate both losses on the interior grid `p_i = (i + 1) / (n + 1)`.
pub fn landscape(params: &LandscapeParams) -> Result<Vec<LandscapeRow>> {
    let LandscapeParams { mu, rho1, rho2, grid } = *params;
    if grid == 0 {
        return Err(Error::InsufficientData("landscape grid needs at least one point".into()));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must lie in [0, 1]")));
    }
    for (name, v) in [("rho1", rho1), ("rho2", rho2)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1]")));
        }
    }
    let y = params.ce_target();
    Ok((0..grid)
        .map(|i| {
            let p = (i + 1) as f64 / (grid + 1) as f64;
            LandscapeRow {
                p,
                fuzzy_loss: fuzzy_term(p, mu, rho1, rho2),
                fuzzy_grad: fuzzy_term_grad_p(p, mu, rho2),
                fuzzy_curvature: fuzzy_term_curvature(p, mu, rho2),
                ce_loss: ce_term(p, y),
                ce_grad: ce_term_grad(p, y),
                ce_curvature: ce_term_curvature(p, y),
            }
        })
        .collect())
}

pub fn write_landscape_csv<W: Write>(rows: &[LandscapeRow], config_hash: &str, mut w: W) -> Result<()> {
    writeln!(w, "# config_hash={config_hash}")?;
    writeln!(w, "p,fuzzy_loss,fuzzy_grad,fuzzy_curvature,ce_loss,ce_grad,ce_curvature")?;
    for r in rows {
        let vals = [r.p, r.fuzzy_loss, r.fuzzy_grad, r.fuzzy_curvature, r.ce_loss, r.ce_grad, r.ce_curvature];
        let line: Vec<String> = vals.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
