//! Per-step training records and their CSV form.
//!
//! Floats are written with 17 significant digits so every `f64` survives a
//! text round trip. The first line of every CSV is `# config_hash=<hex>`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::format_float as fmt_f64;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: u64,
    pub lambda: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub loss_total: f64,
    pub loss_dice: f64,
    pub loss_fuzzy: f64,
    pub grad_cos: f64,
    /// Dice score per foreground class `1..C` against the reference labels.
    pub dice: Vec<f64>,
    pub mean_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrajectory {
    pub rows: Vec<TrajectoryRow>,
    pub seed: u64,
    pub config_hash: String,
}

/// One objective-space point `(L_dice, L_fuzzy)` at step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub t: u64,
    pub loss_dice: f64,
    pub loss_fuzzy: f64,
}

impl TrainingTrajectory {
    pub fn column(&self, f: impl Fn(&TrajectoryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn foreground_classes(&self) -> usize {
        self.rows.first().map_or(0, |r| r.dice.len())
    }

    pub fn csv_header(foreground: usize) -> String {
        let mut cols: Vec<String> =
            ["t", "lambda", "rho1", "rho2", "loss_total", "loss_dice", "loss_fuzzy", "grad_cos"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        cols.extend((1..=foreground).map(|c| format!("dice_c{c}")));
        cols.push("mean_uncertainty".into());
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# config_hash={}", self.config_hash)?;
        writeln!(w, "{}", Self::csv_header(self.foreground_classes()))?;
        for r in &self.rows {
            let mut fields = vec![
                r.t.to_string(),
                fmt_f64(r.lambda),
                fmt_f64(r.rho1),
                fmt_f64(r.rho2),
                fmt_f64(r.loss_total),
                fmt_f64(r.loss_dice),
                fmt_f64(r.loss_fuzzy),
                fmt_f64(r.grad_cos),
            ];
            fields.extend(r.dice.iter().map(|&d| fmt_f64(d)));
            fields.push(fmt_f64(r.mean_uncertainty));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parse a trajectory CSV written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut config_hash = String::new();
        let mut header = None;
        for line in lines.by_ref() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(h) = rest.trim().strip_prefix("config_hash=") {
                    config_hash = h.to_string();
                }
                continue;
            }
            header = Some(line);
            break;
        }
        let header = header.ok_or_else(|| Error::Parse("trajectory CSV has no header".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let fixed = ["t", "lambda", "rho1", "rho2", "loss_total", "loss_dice", "loss_fuzzy", "grad_cos"];
        if cols.len() < fixed.len() + 1
            || cols[..fixed.len()] != fixed
            || cols.last() != Some(&"mean_uncertainty")
        {
            return Err(Error::Parse(format!("unexpected trajectory header `{header}`")));
        }
        let k = cols.len() - fixed.len() - 1;
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Parse(format!("row {n} has {} fields, expected {}", f.len(), cols.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {n}: `{s}`: {e}")))
            };
            rows.push(TrajectoryRow {
                t: f[0].trim().parse().map_err(|e| Error::Parse(format!("row {n}: {e}")))?,
                lambda: num(f[1])?,
                rho1: num(f[2])?,
                rho2: num(f[3])?,
                loss_total: num(f[4])?,
                loss_dice: num(f[5])?,
                loss_fuzzy: num(f[6])?,
                grad_cos: num(f[7])?,
                dice: f[8..8 + k].iter().map(|s| num(s)).collect::<Result<_>>()?,
                mean_uncertainty: num(f[8 + k])?,
            });
        }
        if rows.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvariantViolation("trajectory steps must strictly increase".into()));
        }
        Ok(TrainingTrajectory { rows, seed: 0, config_hash })
    }
}

pub fn write_pareto_csv<W: Write>(points: &[ParetoPoint], config_hash: &str, mut w: W) -> Result<()> {
    writeln!(w, "# config_hash={config_hash}")?;
    writeln!(w, "t,loss_dice,loss_fuzzy")?;
    for p in points {
        writeln!(w, "{},{},{}", p.t, fmt_f64(p.loss_dice), fmt_f64(p.loss_fuzzy))?;
    }
    Ok(())
}
