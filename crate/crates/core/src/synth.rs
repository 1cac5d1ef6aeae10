//! Seeded synthetic label volumes with controlled annotation noise.
//!
//! Two corruption mechanisms are applied to the clean rasterization, in
//! this order:
//!
//! 1. boundary jitter: each voxel, with probability `jitter_prob`, copies the
//!    clean label of a uniformly chosen neighbour within Chebyshev distance
//!    `boundary_jitter_voxels`. Only voxels near a label change can flip.
//! 2. slice flips: each z-slice is, with probability `slice_flip_prob`,
//!    either erased (foreground set to background) or dilated by one voxel
//!    in-plane, chosen by a fair coin.
//!
//! The intensity image follows the clean labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Sphere,
    Cuboid,
    TwoBlob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub slice_flip_prob: f64,
    pub boundary_jitter_voxels: usize,
    pub jitter_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { slice_flip_prob: 0.2, boundary_jitter_voxels: 1, jitter_prob: 0.5 }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { slice_flip_prob: 0.0, boundary_jitter_voxels: 0, jitter_prob: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntensitySpec {
    pub class_means: Vec<f64>,
    pub noise_sigma: f64,
}

impl Default for IntensitySpec {
    fn default() -> Self {
        IntensitySpec { class_means: vec![0.0, 1.0], noise_sigma: 0.25 }
    }
}

/// Geometry, noise and intensity description of one synthetic case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub dims: Vec<usize>,
    pub classes: usize,
    pub shape: ShapeKind,
    /// Defaults to `dims / 2` (integer voxel centre).
    pub center: Option<[f64; 3]>,
    /// One radius (sphere, two-blob) or half-extent (cuboid) per foreground
    /// class. Classes are painted in order, so decreasing extents nest.
    pub extents: Vec<f64>,
    pub noise: NoiseSpec,
    pub intensity: IntensitySpec,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            dims: vec![16, 16, 16],
            classes: 2,
            shape: ShapeKind::Sphere,
            center: None,
            extents: vec![5.0],
            noise: NoiseSpec::default(),
            intensity: IntensitySpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVolumes {
    pub clean: LabelVolume,
    pub corrupted: LabelVolume,
    pub intensity: ScalarField,
}

/// A painted region in voxel coordinates.
#[derive(Debug, Clone, Copy)]
enum Region {
    Ball { c: [f64; 3], r: f64 },
    Box { c: [f64; 3], h: f64 },
}

impl Region {
    fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            Region::Ball { c, r } => (0..3).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>() <= r * r,
            Region::Box { c, h } => (0..3).all(|i| (p[i] - c[i]).abs() <= h),
        }
    }

    fn fits(&self, dims: &Dims) -> bool {
        let (c, r) = match *self {
            Region::Ball { c, r } => (c, r),
            Region::Box { c, h } => (c, h),
        };
        let n = dims.as_array();
        (0..3).all(|i| c[i] - r >= 0.0 && c[i] + r <= (n[i] - 1) as f64)
    }
}

impl SynthSpec {
    pub fn dims(&self) -> Result<Dims> {
        match self.dims.as_slice() {
            &[d, h, w] if d > 0 && h > 0 && w > 0 => Ok(Dims { depth: d, height: h, width: w }),
            other => Err(Error::InvalidSpec(format!("dims must be three positive sizes, got {other:?}"))),
        }
    }

    fn center(&self, dims: &Dims) -> [f64; 3] {
        self.center.unwrap_or_else(|| {
            let n = dims.as_array();
            [(n[0] / 2) as f64, (n[1] / 2) as f64, (n[2] / 2) as f64]
        })
    }

    /// Regions in paint order. Sphere and cuboid region `i` carries class
    /// `i + 1`; the second two-blob sphere carries the last class.
    fn regions(&self, dims: &Dims) -> Vec<(u8, Region)> {
        let c = self.center(dims);
        match self.shape {
            ShapeKind::Sphere => self
                .extents
                .iter()
                .enumerate()
                .map(|(i, &r)| ((i + 1) as u8, Region::Ball { c, r }))
                .collect(),
            ShapeKind::Cuboid => {
                self.extents.iter().enumerate().map(|(i, &h)| ((i + 1) as u8, Region::Box { c, h })).collect()
            }
            ShapeKind::TwoBlob => {
                let ra = self.extents[0];
                let rb = *self.extents.last().unwrap();
                let d = ra.max(rb) + 1.0;
                vec![
                    (1, Region::Ball { c: [c[0], c[1], c[2] - d], r: ra }),
                    ((self.classes - 1) as u8, Region::Ball { c: [c[0], c[1], c[2] + d], r: rb }),
                ]
            }
        }
    }

    pub fn validate(&self) -> Result<Dims> {
        let dims = self.dims()?;
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(2..=256).contains(&self.classes) {
            return bad(format!("classes must be in [2, 256], got {}", self.classes));
        }
        if self.extents.len() != self.classes - 1 {
            return bad(format!(
                "need {} extents (one per foreground class), got {}",
                self.classes - 1,
                self.extents.len()
            ));
        }
        if self.extents.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("extents must be finite and non-negative".into());
        }
        for (_, region) in self.regions(&dims) {
            if !region.fits(&dims) {
                return bad(format!("geometry {region:?} exceeds dims {dims:?}"));
            }
        }
        let prob = 0.0..=1.0;
        if !prob.contains(&self.noise.slice_flip_prob) || !prob.contains(&self.noise.jitter_prob) {
            return bad("noise probabilities must lie in [0, 1]".into());
        }
        if self.intensity.class_means.len() != self.classes {
            return bad("intensity.class_means needs one entry per class".into());
        }
        if !(self.intensity.noise_sigma >= 0.0 && self.intensity.noise_sigma.is_finite()) {
            return bad("intensity.noise_sigma must be finite and >= 0".into());
        }
        Ok(dims)
    }
}

const STREAM_JITTER: u64 = 1;
const STREAM_SLICES: u64 = 2;
const STREAM_INTENSITY: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rasterize, corrupt and render a synthetic case.
pub fn generate(spec: &SynthSpec) -> Result<SynthVolumes> {
    let dims = spec.validate()?;
    let regions = spec.regions(&dims);
    let clean = LabelVolume::from_fn(dims, spec.classes, |z, y, x| {
        let p = [z as f64, y as f64, x as f64];
        regions.iter().filter(|(_, r)| r.contains(p)).last().map_or(0, |&(c, _)| c)
    })?;

    let mut labels = clean.data().to_vec();
    jitter_boundary(&clean, spec, &mut labels);
    flip_slices(dims, spec, &mut labels);
    let corrupted = LabelVolume::new(dims, spec.classes, labels)?;

    let mut rng = rng_for(spec.seed, STREAM_INTENSITY);
    let normal =
        Normal::new(0.0, spec.intensity.noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let intensity = clean
        .data()
        .iter()
        .map(|&c| spec.intensity.class_means[c as usize] + normal.sample(&mut rng))
        .collect();
    let intensity = ScalarField::new(dims, intensity)?;

    Ok(SynthVolumes { clean, corrupted, intensity })
}

fn jitter_boundary(clean: &LabelVolume, spec: &SynthSpec, out: &mut [u8]) {
    let r = spec.noise.boundary_jitter_voxels;
    if r == 0 || spec.noise.jitter_prob == 0.0 {
        return;
    }
    let dims = clean.dims();
    let src = clean.data();
    let mut rng = rng_for(spec.seed, STREAM_JITTER);
    let mut hood = Vec::new();
    for (i, slot) in out.iter_mut().enumerate() {
        if rng.random::<f64>() >= spec.noise.jitter_prob {
            continue;
        }
        hood.clear();
        hood.extend(dims.neighbors(dims.coords(i), r));
        if hood.is_empty() {
            continue;
        }
        *slot = src[hood[rng.random_range(0..hood.len())]];
    }
}

fn flip_slices(dims: Dims, spec: &SynthSpec, labels: &mut [u8]) {
    if spec.noise.slice_flip_prob == 0.0 {
        return;
    }
    let mut rng = rng_for(spec.seed, STREAM_SLICES);
    let plane = dims.height * dims.width;
    for z in 0..dims.depth {
        if rng.random::<f64>() >= spec.noise.slice_flip_prob {
            continue;
        }
        let erase = rng.random::<bool>();
        let slice = &mut labels[z * plane..(z + 1) * plane];
        if erase {
            slice.iter_mut().for_each(|v| *v = 0);
        } else {
            dilate_slice(slice, dims.height, dims.width);
        }
    }
}

/// One-voxel 8-connected in-plane dilation; grown voxels take the largest
/// neighbouring foreground class.
fn dilate_slice(slice: &mut [u8], h: usize, w: usize) {
    let before = slice.to_vec();
    for y in 0..h {
        for x in 0..w {
            if before[y * w + x] != 0 {
                continue;
            }
            let mut best = 0u8;
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    best = best.max(before[yy * w + xx]);
                }
            }
            slice[y * w + x] = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_noise_is_identity() {
        let spec = SynthSpec { noise: NoiseSpec::none(), ..Default::default() };
        let out = generate(&spec).unwrap();
        assert_eq!(out.clean, out.corrupted);
    }

    #[test]
    fn zero_radius_sphere_is_one_voxel() {
        let spec = SynthSpec { extents: vec![0.0], noise: NoiseSpec::none(), ..Default::default() };
        let out = generate(&spec).unwrap();
        let fg: Vec<_> = out.clean.data().iter().enumerate().filter(|(_, &v)| v == 1).collect();
        assert_eq!(fg.len(), 1);
        assert_eq!(out.clean.dims().coords(fg[0].0), (8, 8, 8));
    }

    #[test]
    fn invalid_specs() {
        let empty = SynthSpec { dims: vec![], ..Default::default() };
        assert!(matches!(generate(&empty), Err(Error::InvalidSpec(_))));
        let big = SynthSpec { extents: vec![9.0], ..Default::default() };
        assert!(matches!(generate(&big), Err(Error::InvalidSpec(_))));
        let p = SynthSpec {
            noise: NoiseSpec { slice_flip_prob: 1.5, ..Default::default() },
            ..Default::default()
        };
        assert!(matches!(generate(&p), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn slice_flips_are_deterministic() {
        let spec = SynthSpec {
            noise: NoiseSpec { slice_flip_prob: 0.2, boundary_jitter_voxels: 0, jitter_prob: 0.0 },
            seed: 7,
            ..Default::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let d = a.clean.dims();
        let plane = d.height * d.width;
        let fg_slices: Vec<usize> = (0..d.depth)
            .filter(|z| a.clean.data()[z * plane..(z + 1) * plane].iter().any(|&v| v != 0))
            .collect();
        let changed: Vec<usize> = (0..d.depth)
            .filter(|z| {
                a.clean.data()[z * plane..(z + 1) * plane] != a.corrupted.data()[z * plane..(z + 1) * plane]
            })
            .collect();
        assert!(!changed.is_empty());
        assert!(changed.iter().all(|z| fg_slices.contains(z)));
    }

    #[test]
    fn two_blob_and_nested_classes() {
        let spec = SynthSpec {
            shape: ShapeKind::TwoBlob,
            extents: vec![3.0],
            noise: NoiseSpec::none(),
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        assert_eq!(out.clean.get(8, 8, 4), 1);
        assert_eq!(out.clean.get(8, 8, 12), 1);
        assert_eq!(out.clean.get(8, 8, 8), 0);

        let spec = SynthSpec {
            classes: 3,
            extents: vec![5.0, 2.0],
            intensity: IntensitySpec { class_means: vec![0.0, 1.0, 2.0], noise_sigma: 0.1 },
            noise: NoiseSpec::none(),
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        assert_eq!(out.clean.get(8, 8, 8), 2);
        assert_eq!(out.clean.get(8, 8, 12), 1);
        assert_eq!(out.clean.get(0, 0, 0), 0);
    }
}
