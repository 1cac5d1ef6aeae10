//! Write and read back each FVOL volume kind.

use ifl::fuzzy_label::fuzzify;
use ifl::losses::softmax_field;
use ifl::volume::{read_volume, to_bytes, write_volume, Dims, LabelVolume, LogitField, ScalarField, Volume};

fn main() -> ifl::Result<()> {
    let dims = Dims::new(2, 3, 4)?;
    let labels = LabelVolume::from_fn(dims, 3, |z, y, x| ((z + y + x) % 3) as u8)?;
    let logits = LogitField::new(dims, 3, (0..72).map(|i| (i as f32 * 0.25 - 9.0) as f64).collect())?;
    let vols: Vec<Volume> = vec![
        labels.clone().into(),
        fuzzify(&labels, 1, 0.5)?.into(),
        logits.clone().into(),
        softmax_field(&logits)?.into(),
        ScalarField::new(dims, (0..24).map(f64::from).collect())?.into(),
    ];
    let dir = tempfile_dir();
    for (i, v) in vols.iter().enumerate() {
        let path = dir.join(format!("v{i}.fvol"));
        write_volume(v, &path)?;
        let back = read_volume(&path)?;
        let bytes = std::fs::read(&path).map_err(|e| ifl::Error::io(&path, e))?;
        // Real channels are stored as f32, so compare the re-encoded bytes.
        println!(
            "{:<7} {:>5} bytes  bit-exact on rewrite: {}",
            format!("{:?}", v.kind()),
            bytes.len(),
            to_bytes(&back)? == bytes
        );
    }
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join("ifl_fvol_example");
    std::fs::create_dir_all(&d).expect("temp dir");
    d
}
