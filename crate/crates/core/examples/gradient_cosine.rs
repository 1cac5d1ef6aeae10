//! Trace the cosine between the fuzzy and Dice gradients on the tiny conv model.

use std::path::Path;

use ifl::cli::load_train_data;
use ifl::config::RunConfig;
use ifl::trainer::{train, ModelKind};

fn main() -> ifl::Result<()> {
    let mut run = RunConfig::default();
    run.train.model = ModelKind::TinyConv;
    run.train.steps = 300;
    run.train.learning_rate = 0.01;
    run.train.rho_learning_rate = Some(0.01);
    let data = load_train_data(&run, Path::new("."))?;
    let out = train(&data, &run.train)?;
    for r in out.trajectory.rows.iter().step_by(20) {
        let bar = "*".repeat((r.grad_cos.abs() * 40.0) as usize);
        println!("t {:>4}  cos {:+.3} {}{bar}", r.t, r.grad_cos, if r.grad_cos < 0.0 { "-" } else { "+" });
    }
    Ok(())
}
