//! Train on the noisy benchmark and watch lambda, rho1 and rho2 evolve.

use std::path::Path;

use ifl::cli::load_train_data;
use ifl::config::RunConfig;
use ifl::trainer::{rho_summary, train};

fn main() -> ifl::Result<()> {
    let mut run = RunConfig::default();
    run.train.steps = 2000;
    run.train.learning_rate = 1000.0;
    run.train.rho_learning_rate = Some(0.01);
    let data = load_train_data(&run, Path::new("."))?;
    let out = train(&data, &run.train)?;
    println!("{:>5} {:>8} {:>7} {:>7} {:>9}", "t", "lambda", "rho1", "rho2", "L_total");
    for r in out.trajectory.rows.iter().step_by(200) {
        println!("{:>5} {:>8.4} {:>7.4} {:>7.4} {:>9.5}", r.t, r.lambda, r.rho1, r.rho2, r.loss_total);
    }
    let s = rho_summary(&out.trajectory)?;
    println!(
        "rho1 {:.3} -> {:.3} (monotone: {}), rho2 {:.3} -> {:.3}",
        s.rho1_initial, s.rho1_final, s.rho1_monotone, s.rho2_initial, s.rho2_final
    );
    Ok(())
}
