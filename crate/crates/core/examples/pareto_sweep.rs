//! Fixed-lambda runs trace the trade-off between the Dice and fuzzy losses.

use std::path::Path;

use ifl::cli::load_train_data;
use ifl::config::RunConfig;
use ifl::curriculum::CurriculumSchedule;
use ifl::trainer::{nondominated, train, ParetoPoint};

fn main() -> ifl::Result<()> {
    let mut run = RunConfig::default();
    run.train.steps = 1000;
    run.train.learning_rate = 1000.0;
    run.train.rho_learning_rate = Some(0.01);
    let data = load_train_data(&run, Path::new("."))?;
    let mut finals = Vec::new();
    for lambda in [0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0] {
        run.train.schedule = Some(CurriculumSchedule::constant(lambda));
        let out = train(&data, &run.train)?;
        let last = out.trajectory.rows.last().expect("at least one row");
        println!("lambda {lambda:>5}: L_dice {:.5}  L_fuzzy {:.5}", last.loss_dice, last.loss_fuzzy);
        finals.push(ParetoPoint { t: last.t, loss_dice: last.loss_dice, loss_fuzzy: last.loss_fuzzy });
    }
    println!("nondominated runs: {:?}", nondominated(&finals));
    Ok(())
}
