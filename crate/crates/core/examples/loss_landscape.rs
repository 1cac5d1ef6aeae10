//! Compare the fuzzy and cross-entropy losses along p for a soft target.

use ifl::landscape::{landscape, LandscapeParams};
use ifl::losses::equilibrium_p;

fn main() -> ifl::Result<()> {
    let params = LandscapeParams { mu: 0.7, rho1: 0.5, rho2: 0.4, grid: 9 };
    println!(
        "mu {} rho2 {}: fuzzy minimum at p* = {:.4}",
        params.mu,
        params.rho2,
        equilibrium_p(params.mu, params.rho2)
    );
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "p", "fuzzy", "d fuzzy", "ce", "d ce");
    for r in landscape(&params)? {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.p, r.fuzzy_loss, r.fuzzy_grad, r.ce_loss, r.ce_grad
        );
    }
    Ok(())
}
