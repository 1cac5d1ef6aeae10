//! Trainable models mapping an optional intensity image to class logits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, LogitField, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// theta is the logit field itself.
    #[default]
    PerVoxel,
    TinyConv,
}

/// Two 3x3x3 zero-padded convolutions with a tanh in between:
/// `1 -> hidden -> classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyConvModel {
    dims: Dims,
    hidden: usize,
    classes: usize,
    params: Vec<f64>,
}

const K: usize = 27;

/// Zero-padded flat layout: each plane is `(D+2)(H+2)(W+2)` with a one-voxel
/// zero border, so every tap is a constant flat shift.
#[derive(Debug, Clone, Copy)]
struct Padded {
    dims: Dims,
    hp: usize,
    wp: usize,
    len: usize,
    lo: usize,
    hi: usize,
}

impl Padded {
    fn new(dims: Dims) -> Self {
        let (hp, wp) = (dims.height + 2, dims.width + 2);
        let len = (dims.depth + 2) * hp * wp;
        let at = |z: usize, y: usize, x: usize| (z * hp + y) * wp + x;
        Padded { dims, hp, wp, len, lo: at(1, 1, 1), hi: at(dims.depth, dims.height, dims.width) + 1 }
    }

    fn shift(&self, o: usize) -> isize {
        let (dz, dy, dx) = ((o / 9) as isize - 1, ((o / 3) % 3) as isize - 1, (o % 3) as isize - 1);
        (dz * self.hp as isize + dy) * self.wp as isize + dx
    }

    fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let d = self.dims;
        (0..d.voxels()).map(move |i| {
            let (z, y, x) = d.coords(i);
            ((z + 1) * self.hp + y + 1) * self.wp + x + 1
        })
    }

    fn pad(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (i, p) in self.interior().enumerate() {
            out[p] = v[i];
        }
        out
    }

    fn mask(&self) -> Vec<f64> {
        self.pad(&vec![1.0; self.dims.voxels()])
    }

    /// `dst[i] = bias + sum_(p, o) w(p, o) * srcs[p][i + sign * shift(o)]`
    /// over the interior span, processed in cache-sized blocks.
    fn stencil(
        &self,
        srcs: &[&[f64]],
        w: impl Fn(usize, usize) -> f64,
        sign: isize,
        bias: f64,
        dst: &mut [f64],
    ) {
        let shifts: Vec<isize> = (0..K).map(|o| sign * self.shift(o)).collect();
        let mut buf = [0.0; BLOCK];
        let mut start = self.lo;
        while start < self.hi {
            let len = BLOCK.min(self.hi - start);
            let buf = &mut buf[..len];
            buf.fill(bias);
            for (p, src) in srcs.iter().enumerate() {
                for (o, &s) in shifts.iter().enumerate() {
                    let wt = w(p, o);
                    let j = (start as isize + s) as usize;
                    for (a, b) in buf.iter_mut().zip(&src[j..j + len]) {
                        *a += wt * b;
                    }
                }
            }
            dst[start..start + len].copy_from_slice(buf);
            start += len;
        }
    }

    /// `out[o] = sum_i a[i] * b[i + shift(o)]` over the interior span.
    fn stencil_dots(&self, a: &[f64], b: &[f64]) -> [f64; K] {
        let shifts: Vec<isize> = (0..K).map(|o| self.shift(o)).collect();
        let mut out = [0.0; K];
        let mut start = self.lo;
        while start < self.hi {
            let len = BLOCK.min(self.hi - start);
            let blk = &a[start..start + len];
            for (o, &s) in shifts.iter().enumerate() {
                let j = (start as isize + s) as usize;
                out[o] += dot4(blk, &b[j..j + len]);
            }
            start += len;
        }
        out
    }
}

const BLOCK: usize = 256;

/// Dot product with four interleaved accumulators so it vectorizes.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl TinyConvModel {
    pub fn param_count(hidden: usize, classes: usize) -> usize {
        hidden * K + hidden + classes * hidden * K + classes
    }

    /// He-style normal initialisation of weights; zero biases.
    pub fn new(dims: Dims, hidden: usize, classes: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidParameter("tiny-conv hidden width must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1 = Normal::new(0.0, (1.0 / K as f64).sqrt()).unwrap();
        let n2 = Normal::new(0.0, (1.0 / (K * hidden) as f64).sqrt()).unwrap();
        let mut params = Vec::with_capacity(Self::param_count(hidden, classes));
        params.extend((0..hidden * K).map(|_| n1.sample(&mut rng)));
        params.extend(std::iter::repeat_n(0.0, hidden));
        params.extend((0..classes * hidden * K).map(|_| n2.sample(&mut rng)));
        params.extend(std::iter::repeat_n(0.0, classes));
        Ok(TinyConvModel { dims, hidden, classes, params })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (h, c) = (self.hidden, self.classes);
        let (w1, rest) = self.params.split_at(h * K);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(c * h * K);
        (w1, b1, w2, b2)
    }

    /// Forward pass returning padded hidden activations `(hidden, padded voxel)`
    /// and voxel-major logits `(voxel, class)`.
    fn forward_full(&self, input: &ScalarField) -> Result<(Vec<f64>, Vec<f64>)> {
        if input.dims() != self.dims {
            return Err(Error::ShapeMismatch("intensity image does not match model dims".into()));
        }
        let (h, c) = (self.hidden, self.classes);
        let (w1, b1, w2, b2) = self.split();
        let pd = Padded::new(self.dims);
        let (np, n) = (pd.len, self.dims.voxels());
        let x = pd.pad(input.data());
        let mask = pd.mask();
        let mut act = vec![0.0; h * np];
        for (k, plane) in act.chunks_mut(np).enumerate() {
            pd.stencil(&[&x], |_, o| w1[k * K + o], 1, b1[k], plane);
            for (v, m) in plane.iter_mut().zip(&mask) {
                *v = v.tanh() * m;
            }
        }
        let mut out = vec![0.0; n * c];
        let mut plane = vec![0.0; np];
        let hidden: Vec<&[f64]> = act.chunks(np).collect();
        for cc in 0..c {
            pd.stencil(&hidden, |k, o| w2[(cc * h + k) * K + o], 1, b2[cc], &mut plane);
            for (i, p) in pd.interior().enumerate() {
                out[i * c + cc] = plane[p];
            }
        }
        Ok((act, out))
    }

    pub fn forward(&self, input: &ScalarField) -> Result<LogitField> {
        let (_, out) = self.forward_full(input)?;
        LogitField::new(self.dims, self.classes, out)
    }

    /// Gradient of a scalar loss w.r.t. every parameter, given `dL/dlogits`.
    pub fn backward(&self, input: &ScalarField, d_out: &[f64]) -> Result<Vec<f64>> {
        let (act, _) = self.forward_full(input)?;
        self.backward_from(&act, input, d_out)
    }

    /// [`backward`](Self::backward) for several upstream gradients, sharing
    /// one forward pass.
    pub fn backward_many(&self, input: &ScalarField, d_outs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let (act, _) = self.forward_full(input)?;
        d_outs.iter().map(|d| self.backward_from(&act, input, d)).collect()
    }

    fn backward_from(&self, act: &[f64], input: &ScalarField, d_out: &[f64]) -> Result<Vec<f64>> {
        let (h, c) = (self.hidden, self.classes);
        let (_, _, w2, _) = self.split();
        let pd = Padded::new(self.dims);
        let (np, n) = (pd.len, self.dims.voxels());
        if d_out.len() != n * c {
            return Err(Error::ShapeMismatch("logit gradient length".into()));
        }
        let x = pd.pad(input.data());
        let mask = pd.mask();
        let mut g = vec![0.0; self.params.len()];
        let (gw1, rest) = g.split_at_mut(h * K);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(c * h * K);

        let mut dps = vec![0.0; c * np];
        for (cc, dp) in dps.chunks_mut(np).enumerate() {
            for (i, p) in pd.interior().enumerate() {
                dp[p] = d_out[i * c + cc];
            }
            gb2[cc] = dp.iter().sum();
            for k in 0..h {
                let base = (cc * h + k) * K;
                gw2[base..base + K].copy_from_slice(&pd.stencil_dots(dp, &act[k * np..(k + 1) * np]));
            }
        }
        // Hidden gradients are only needed on the interior; the border is
        // fixed zero padding.
        let dp_planes: Vec<&[f64]> = dps.chunks(np).collect();
        let mut d_act = vec![0.0; np];
        for k in 0..h {
            pd.stencil(&dp_planes, |cc, o| w2[(cc * h + k) * K + o], -1, 0.0, &mut d_act);
            let a = &act[k * np..(k + 1) * np];
            for ((g, a), m) in d_act.iter_mut().zip(a).zip(&mask) {
                *g *= (1.0 - a * a) * m;
            }
            gb1[k] = d_act.iter().sum();
            gw1[k * K..(k + 1) * K].copy_from_slice(&pd.stencil_dots(&d_act, &x));
        }
        Ok(g)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

/// The trainable parameter set theta.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    PerVoxel(LogitField),
    TinyConv(TinyConvModel),
}

impl Model {
    pub fn logits(&self, input: Option<&ScalarField>) -> Result<LogitField> {
        match self {
            Model::PerVoxel(z) => Ok(z.clone()),
            Model::TinyConv(m) => {
                m.forward(input.ok_or_else(|| {
                    Error::InvalidParameter("tiny-conv model needs an intensity image".into())
                })?)
            }
        }
    }

    /// Chain `dL/dlogits` back to `dL/dtheta`.
    pub fn backward(&self, input: Option<&ScalarField>, d_logits: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::PerVoxel(_) => Ok(d_logits.to_vec()),
            Model::TinyConv(m) => m.backward(
                input.ok_or_else(|| {
                    Error::InvalidParameter("tiny-conv model needs an intensity image".into())
                })?,
                d_logits,
            ),
        }
    }

    pub fn backward_many(&self, input: Option<&ScalarField>, d: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        match self {
            Model::PerVoxel(_) => Ok(d.iter().map(|g| g.to_vec()).collect()),
            Model::TinyConv(m) => m.backward_many(
                input.ok_or_else(|| {
                    Error::InvalidParameter("tiny-conv model needs an intensity image".into())
                })?,
                d,
            ),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Model::PerVoxel(z) => z.data(),
            Model::TinyConv(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Model::PerVoxel(z) => z.data_mut(),
            Model::TinyConv(m) => m.params_mut(),
        }
    }
}
