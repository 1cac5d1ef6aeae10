//! Generate the noisy-boundary benchmark and write it as FVOL files.

use ifl::synth::{generate, ShapeKind, SynthSpec};
use ifl::trainer::dice_score;
use ifl::volume::read_volume;

fn main() -> ifl::Result<()> {
    let dir = std::env::temp_dir().join("ifl_synth_example");
    for (name, shape) in [("sphere", ShapeKind::Sphere), ("cuboid", ShapeKind::Cuboid)] {
        let spec = SynthSpec { shape, seed: 3, ..Default::default() };
        let v = generate(&spec)?;
        let flipped = v.clean.data().iter().zip(v.corrupted.data()).filter(|(a, b)| a != b).count();
        println!(
            "{name}: {} voxels, {flipped} labels corrupted, Dice(corrupted, clean) {:.4}",
            v.clean.dims().voxels(),
            dice_score(&v.corrupted, &v.clean, 1)?
        );
        let out = ifl::cli::synth_to_dir(&spec, &dir.join(name))?;
        let back = read_volume(&out.corrupted)?;
        assert_eq!(back, v.corrupted.into());
        println!("  wrote {}", out.corrupted.display());
    }
    Ok(())
}
