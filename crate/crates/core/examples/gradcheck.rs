//! Run the finite-difference oracle over every derivative family.

use ifl::gradcheck::{run, GradcheckOptions};

fn main() -> ifl::Result<()> {
    let report = run(&GradcheckOptions { samples: 50, seed: 1, perturb: None })?;
    for f in &report.families {
        let status = if f.passed { "ok" } else { "FAILED" };
        println!(
            "{:<14} {:>5} entries  max rel err {:.2e}  (tol {:.0e}) {status}",
            f.name, f.entries, f.max_rel_err, f.tolerance
        );
    }
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
