//! Build fuzzy labels for a synthetic sphere and report how membership
//! spreads across the boundary band.

use ifl::fuzzy_label::{boundary_mask, fuzzify};
use ifl::synth::{generate, NoiseSpec, SynthSpec};

fn main() -> ifl::Result<()> {
    let vols = generate(&SynthSpec { noise: NoiseSpec::none(), ..Default::default() })?;
    for radius in 1..=3 {
        let fuzzy = fuzzify(&vols.clean, radius, 0.5)?;
        let band = boundary_mask(&fuzzy, &vols.clean)?;
        let n_band = band.data().iter().filter(|&&b| b > 0.0).count();
        let fg_mu: Vec<f64> = (0..fuzzy.dims().voxels())
            .filter(|&i| band.data()[i] > 0.0)
            .map(|i| fuzzy.mu()[i * 2 + 1])
            .collect();
        let mean = fg_mu.iter().sum::<f64>() / fg_mu.len().max(1) as f64;
        println!("radius {radius}: {n_band} boundary voxels, mean foreground mu there {mean:.3}");
    }
    // A slice through the middle of the volume at radius 1.
    let fuzzy = fuzzify(&vols.clean, 1, 0.5)?;
    let z = fuzzy.dims().depth / 2;
    for y in 0..fuzzy.dims().height {
        let row: String = (0..fuzzy.dims().width)
            .map(|x| match fuzzy.mu_at(z, y, x, 1) {
                m if m == 0.0 => '.',
                m if m == 1.0 => '#',
                m if m < 0.5 => '-',
                _ => '+',
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
