//! Intuitionistic fuzzy labels built from crisp label volumes.
//!
//! The membership of voxel `x` in class `c` is the fraction of its
//! Chebyshev-radius-`r` neighbours (centre excluded, clipped to the volume)
//! that carry label `c`. Non-membership is `(1 - mu) * rho2` and hesitation
//! is whatever is left, `1 - mu - nu`.

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, ScalarField};

/// Tolerance used when validating fuzzy-label invariants.
pub const FUZZY_TOL: f64 = 1e-6;

/// Per-voxel, per-class membership `mu_c(x)`, laid out `(z, y, x, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipField {
    dims: Dims,
    num_classes: usize,
    radius: usize,
    data: Vec<f64>,
}

impl MembershipField {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, z: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.dims.index(z, y, x) * self.num_classes + c]
    }
}

/// Membership, non-membership and hesitation channels for every voxel-class.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyLabelVolume {
    dims: Dims,
    num_classes: usize,
    radius: usize,
    rho2: f64,
    mu: Vec<f64>,
    nu: Vec<f64>,
    pi: Vec<f64>,
}

impl FuzzyLabelVolume {
    /// Assemble from raw channels, checking every invariant.
    pub fn from_parts(
        dims: Dims,
        num_classes: usize,
        radius: usize,
        rho2: f64,
        mu: Vec<f64>,
        nu: Vec<f64>,
        pi: Vec<f64>,
    ) -> Result<Self> {
        let v = FuzzyLabelVolume { dims, num_classes, radius, rho2, mu, nu, pi };
        v.validate()?;
        Ok(v)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvariantViolation(msg));
        if self.radius == 0 {
            return bad("neighbourhood radius must be >= 1".into());
        }
        if !(self.rho2 > 0.0 && self.rho2 <= 1.0) {
            return bad(format!("rho2 snapshot {} outside (0, 1]", self.rho2));
        }
        let n = self.dims.voxels() * self.num_classes;
        if self.num_classes < 2 || [&self.mu, &self.nu, &self.pi].iter().any(|ch| ch.len() != n) {
            return bad(format!("channel lengths do not match {n} voxel-classes"));
        }
        let unit = -FUZZY_TOL..=1.0 + FUZZY_TOL;
        for i in 0..n {
            let (mu, nu, pi) = (self.mu[i], self.nu[i], self.pi[i]);
            if !(unit.contains(&mu) && unit.contains(&nu) && unit.contains(&pi)) {
                return bad(format!("channel value outside [0, 1] at entry {i}"));
            }
            if mu + nu > 1.0 + FUZZY_TOL {
                return bad(format!("mu + nu = {} > 1 at entry {i}", mu + nu));
            }
            if (pi - (1.0 - mu - nu)).abs() > FUZZY_TOL {
                return bad(format!("pi != 1 - mu - nu at entry {i}"));
            }
            if (nu - (1.0 - mu) * self.rho2).abs() > FUZZY_TOL {
                return bad(format!("nu != (1 - mu) * rho2 at entry {i}"));
            }
        }
        for (v, row) in self.mu.chunks_exact(self.num_classes).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > FUZZY_TOL {
                return bad(format!("memberships at voxel {v} sum to {s}"));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// The `rho2` value the stored `nu`/`pi` channels were computed with.
    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn mu_at(&self, z: usize, y: usize, x: usize, c: usize) -> f64 {
        self.mu[self.dims.index(z, y, x) * self.num_classes + c]
    }
}

/// Fraction of each voxel's neighbours carrying each class label.
pub fn compute_membership(labels: &LabelVolume, radius: usize) -> Result<MembershipField> {
    if radius == 0 {
        return Err(Error::InvalidParameter("neighbourhood radius must be >= 1".into()));
    }
    let dims = labels.dims();
    if dims.voxels() == 1 {
        return Err(Error::DegenerateVolume("a 1x1x1 volume has no neighbours to agree with".into()));
    }
    let c = labels.num_classes();
    let src = labels.data();
    let mut data = vec![0.0; dims.voxels() * c];
    let mut counts = vec![0u32; c];
    for (i, out) in data.chunks_exact_mut(c).enumerate() {
        counts.iter_mut().for_each(|k| *k = 0);
        let mut total = 0u32;
        for j in dims.neighbors(dims.coords(i), radius) {
            counts[src[j] as usize] += 1;
            total += 1;
        }
        for (o, &k) in out.iter_mut().zip(&counts) {
            *o = k as f64 / total as f64;
        }
    }
    Ok(MembershipField { dims, num_classes: c, radius, data })
}

/// Build the full `(mu, nu, pi)` fuzzy label volume with a snapshot `rho2`.
pub fn fuzzify(labels: &LabelVolume, radius: usize, rho2: f64) -> Result<FuzzyLabelVolume> {
    if !(rho2 > 0.0 && rho2 <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho2 must lie in (0, 1], got {rho2}")));
    }
    let m = compute_membership(labels, radius)?;
    let nu: Vec<f64> = m.data.iter().map(|&mu| (1.0 - mu) * rho2).collect();
    let pi = m.data.iter().zip(&nu).map(|(&mu, &nu)| 1.0 - mu - nu).collect();
    Ok(FuzzyLabelVolume { dims: m.dims, num_classes: m.num_classes, radius, rho2, mu: m.data, nu, pi })
}

/// Mark voxels where at least one neighbour disagrees with the crisp label,
/// i.e. `mu_{y_x}(x) < 1`.
pub fn boundary_mask(fuzzy: &FuzzyLabelVolume, labels: &LabelVolume) -> Result<ScalarField> {
    if fuzzy.dims() != labels.dims() || fuzzy.num_classes() != labels.num_classes() {
        return Err(Error::ShapeMismatch("fuzzy volume and labels differ in shape".into()));
    }
    let c = fuzzy.num_classes();
    let data = labels
        .data()
        .iter()
        .enumerate()
        .map(|(i, &y)| if fuzzy.mu[i * c + y as usize] < 1.0 - 1e-9 { 1.0 } else { 0.0 })
        .collect();
    ScalarField::new(fuzzy.dims(), data)
}
