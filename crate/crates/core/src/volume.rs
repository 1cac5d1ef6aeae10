//! Voxel-grid data model and the FVOL container format.
//!
//! Every volume is stored in C-order `(z, y, x[, c])`. Label grids hold one
//! `u8` class index per voxel; real-valued channels are held as `f64` in
//! memory and written as little-endian IEEE-754 `f32`.
//!
//! An FVOL file is laid out as:
//!
//! ```text
//! b"FVOL" | u32 LE header length N | N bytes UTF-8 JSON header | payload
//! ```
//!
//! The JSON header always carries `kind`, `dims` and `dtype`; `classes` is
//! present for every kind except `scalar`. Fuzzy volumes additionally record
//! the neighbourhood `radius` and the `rho2` snapshot they were built with,
//! and store `(mu, nu, pi)` per voxel-class.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy_label::FuzzyLabelVolume;

pub const MAGIC: &[u8; 4] = b"FVOL";

/// Tolerance on per-voxel probability sums.
pub const PROB_SUM_TOL: f64 = 1e-6;

/// Grid extent as `(depth, height, width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 3]", try_from = "[usize; 3]")]
pub struct Dims {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub fn new(depth: usize, height: usize, width: usize) -> Result<Self> {
        if depth == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidParameter(format!(
                "dims must be positive, got {depth}x{height}x{width}"
            )));
        }
        Ok(Dims { depth, height, width })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn voxels(&self) -> usize {
        self.depth * self.height * self.width
    }

    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.height + y) * self.width + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let x = i % self.width;
        let y = (i / self.width) % self.height;
        let z = i / (self.width * self.height);
        (z, y, x)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.depth, self.height, self.width]
    }

    /// Iterate over in-bounds voxels within Chebyshev distance `r` of
    /// `(z, y, x)`, excluding the centre itself. Order is C-order.
    pub fn neighbors(&self, (z, y, x): (usize, usize, usize), r: usize) -> impl Iterator<Item = usize> + '_ {
        let span = |c: usize, n: usize| (c.saturating_sub(r), (c + r).min(n - 1));
        let (z0, z1) = span(z, self.depth);
        let (y0, y1) = span(y, self.height);
        let (x0, x1) = span(x, self.width);
        (z0..=z1).flat_map(move |zz| {
            (y0..=y1).flat_map(move |yy| {
                (x0..=x1).filter(move |&xx| (zz, yy, xx) != (z, y, x)).map(move |xx| self.index(zz, yy, xx))
            })
        })
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        d.as_array()
    }
}

impl TryFrom<[usize; 3]> for Dims {
    type Error = Error;

    fn try_from(a: [usize; 3]) -> Result<Self> {
        Dims::new(a[0], a[1], a[2])
    }
}

fn check_classes(num_classes: usize) -> Result<()> {
    if !(2..=256).contains(&num_classes) {
        return Err(Error::InvalidParameter(format!("class count must be in [2, 256], got {num_classes}")));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::ShapeMismatch(format!(
            "{what}: data length {got} does not match expected {want}"
        )));
    }
    Ok(())
}

/// Crisp integer class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVolume {
    dims: Dims,
    num_classes: usize,
    data: Vec<u8>,
}

impl LabelVolume {
    pub fn new(dims: Dims, num_classes: usize, data: Vec<u8>) -> Result<Self> {
        check_classes(num_classes)?;
        check_len("labels", data.len(), dims.voxels())?;
        if let Some((i, &v)) = data.iter().enumerate().find(|(_, &v)| v as usize >= num_classes) {
            return Err(Error::InvariantViolation(format!(
                "label {v} at voxel {i} is outside [0, {num_classes})"
            )));
        }
        Ok(LabelVolume { dims, num_classes, data })
    }

    pub fn filled(dims: Dims, num_classes: usize, value: u8) -> Result<Self> {
        Self::new(dims, num_classes, vec![value; dims.voxels()])
    }

    /// Build from a closure evaluated at every `(z, y, x)`.
    pub fn from_fn(
        dims: Dims,
        num_classes: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let data = (0..dims.voxels())
            .map(|i| {
                let (z, y, x) = dims.coords(i);
                f(z, y, x)
            })
            .collect();
        Self::new(dims, num_classes, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> u8 {
        self.data[self.dims.index(z, y, x)]
    }

    /// One-hot encoding laid out as `(z, y, x, c)`.
    pub fn one_hot(&self) -> Vec<f64> {
        let c = self.num_classes;
        let mut out = vec![0.0; self.data.len() * c];
        for (i, &v) in self.data.iter().enumerate() {
            out[i * c + v as usize] = 1.0;
        }
        out
    }
}

/// A single real channel per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dims: Dims,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        check_len("scalar field", data.len(), dims.voxels())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(format!("scalar field value at voxel {i} is not finite")));
        }
        Ok(ScalarField { dims, data })
    }

    pub fn zeros(dims: Dims) -> Self {
        ScalarField { dims, data: vec![0.0; dims.voxels()] }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> f64 {
        self.data[self.dims.index(z, y, x)]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Per-voxel class probabilities, `(z, y, x, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbField {
    dims: Dims,
    num_classes: usize,
    data: Vec<f64>,
}

impl ProbField {
    pub fn new(dims: Dims, num_classes: usize, data: Vec<f64>) -> Result<Self> {
        check_classes(num_classes)?;
        check_len("prob field", data.len(), dims.voxels() * num_classes)?;
        for (v, row) in data.chunks_exact(num_classes).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvariantViolation(format!("probability outside [0, 1] at voxel {v}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::InvariantViolation(format!("probabilities at voxel {v} sum to {s}")));
            }
        }
        Ok(ProbField { dims, num_classes, data })
    }

    /// Skip validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(dims: Dims, num_classes: usize, data: Vec<f64>) -> Self {
        ProbField { dims, num_classes, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn voxel(&self, i: usize) -> &[f64] {
        &self.data[i * self.num_classes..(i + 1) * self.num_classes]
    }

    /// Hard prediction by per-voxel argmax (first maximum wins).
    pub fn argmax(&self) -> LabelVolume {
        let data = self
            .data
            .chunks_exact(self.num_classes)
            .map(|row| {
                let mut best = 0;
                for (c, &p) in row.iter().enumerate() {
                    if p > row[best] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect();
        LabelVolume { dims: self.dims, num_classes: self.num_classes, data }
    }
}

/// Per-voxel real logits `z_c(x)`, `(z, y, x, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitField {
    dims: Dims,
    num_classes: usize,
    data: Vec<f64>,
}

impl LogitField {
    pub fn new(dims: Dims, num_classes: usize, data: Vec<f64>) -> Result<Self> {
        check_classes(num_classes)?;
        check_len("logit field", data.len(), dims.voxels() * num_classes)?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!("logit entry {i} is not finite")));
        }
        Ok(LogitField { dims, num_classes, data })
    }

    pub fn zeros(dims: Dims, num_classes: usize) -> Result<Self> {
        Self::new(dims, num_classes, vec![0.0; dims.voxels() * num_classes])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Any volume that can live in an FVOL file.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Labels(LabelVolume),
    Fuzzy(FuzzyLabelVolume),
    Logits(LogitField),
    Prob(ProbField),
    Scalar(ScalarField),
}

impl Volume {
    pub fn kind(&self) -> Kind {
        match self {
            Volume::Labels(_) => Kind::Labels,
            Volume::Fuzzy(_) => Kind::Fuzzy,
            Volume::Logits(_) => Kind::Logits,
            Volume::Prob(_) => Kind::Prob,
            Volume::Scalar(_) => Kind::Scalar,
        }
    }

    pub fn dims(&self) -> Dims {
        match self {
            Volume::Labels(v) => v.dims(),
            Volume::Fuzzy(v) => v.dims(),
            Volume::Logits(v) => v.dims(),
            Volume::Prob(v) => v.dims(),
            Volume::Scalar(v) => v.dims(),
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            Volume::Labels(v) => Ok(v),
            other => Err(Error::Parse(format!("expected labels, found {:?}", other.kind()))),
        }
    }

    pub fn into_fuzzy(self) -> Result<FuzzyLabelVolume> {
        match self {
            Volume::Fuzzy(v) => Ok(v),
            other => Err(Error::Parse(format!("expected fuzzy, found {:?}", other.kind()))),
        }
    }

    pub fn into_logits(self) -> Result<LogitField> {
        match self {
            Volume::Logits(v) => Ok(v),
            other => Err(Error::Parse(format!("expected logits, found {:?}", other.kind()))),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            Volume::Scalar(v) => Ok(v),
            other => Err(Error::Parse(format!("expected scalar, found {:?}", other.kind()))),
        }
    }
}

macro_rules! impl_from_volume {
    ($($variant:ident => $ty:ty),*) => {
        $(impl From<$ty> for Volume {
            fn from(v: $ty) -> Self {
                Volume::$variant(v)
            }
        })*
    };
}

impl_from_volume!(
    Labels => LabelVolume,
    Fuzzy => FuzzyLabelVolume,
    Logits => LogitField,
    Prob => ProbField,
    Scalar => ScalarField
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Labels,
    Fuzzy,
    Logits,
    Prob,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    F32,
}

/// JSON header. Field order here is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: Kind,
    pub dims: [usize; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    pub dtype: Dtype,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
}

impl Header {
    fn channels(&self) -> usize {
        let c = self.classes.unwrap_or(1);
        match self.kind {
            Kind::Labels | Kind::Scalar => 1,
            Kind::Logits | Kind::Prob => c,
            Kind::Fuzzy => 3 * c,
        }
    }

    fn payload_bytes(&self) -> usize {
        let elem = match self.dtype {
            Dtype::U8 => 1,
            Dtype::F32 => 4,
        };
        self.dims.iter().product::<usize>() * self.channels() * elem
    }
}

fn f32_payload(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(|v| (v as f32).to_le_bytes()).collect()
}

fn validate_for_write(vol: &Volume) -> Result<()> {
    match vol {
        Volume::Labels(v) => LabelVolume::new(v.dims, v.num_classes, v.data.clone()).map(drop),
        Volume::Fuzzy(v) => v.validate(),
        Volume::Logits(v) => LogitField::new(v.dims, v.num_classes, v.data.clone()).map(drop),
        Volume::Prob(v) => {
            // Re-check after the f32 narrowing the file will see.
            let narrowed = v.data.iter().map(|&p| p as f32 as f64).collect();
            ProbField::new(v.dims, v.num_classes, v.data.clone())?;
            ProbField::new(v.dims, v.num_classes, narrowed).map(drop)
        }
        Volume::Scalar(v) => ScalarField::new(v.dims, v.data.clone()).map(drop),
    }
}

/// Serialize a volume to FVOL bytes. Invariants are checked before encoding.
pub fn to_bytes(vol: &Volume) -> Result<Vec<u8>> {
    validate_for_write(vol)?;
    let dims = vol.dims().as_array();
    let (header, payload) = match vol {
        Volume::Labels(v) => (
            Header {
                kind: Kind::Labels,
                dims,
                classes: Some(v.num_classes),
                dtype: Dtype::U8,
                radius: None,
                rho2: None,
            },
            v.data.clone(),
        ),
        Volume::Fuzzy(v) => {
            let values = (0..v.mu().len()).flat_map(|i| [v.mu()[i], v.nu()[i], v.pi()[i]]);
            (
                Header {
                    kind: Kind::Fuzzy,
                    dims,
                    classes: Some(v.num_classes()),
                    dtype: Dtype::F32,
                    radius: Some(v.radius()),
                    rho2: Some(v.rho2()),
                },
                f32_payload(values),
            )
        }
        Volume::Logits(v) => (
            Header {
                kind: Kind::Logits,
                dims,
                classes: Some(v.num_classes),
                dtype: Dtype::F32,
                radius: None,
                rho2: None,
            },
            f32_payload(v.data.iter().copied()),
        ),
        Volume::Prob(v) => (
            Header {
                kind: Kind::Prob,
                dims,
                classes: Some(v.num_classes),
                dtype: Dtype::F32,
                radius: None,
                rho2: None,
            },
            f32_payload(v.data.iter().copied()),
        ),
        Volume::Scalar(v) => (
            Header { kind: Kind::Scalar, dims, classes: None, dtype: Dtype::F32, radius: None, rho2: None },
            f32_payload(v.data.iter().copied()),
        ),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Parse FVOL bytes, checking header/payload consistency and type invariants.
pub fn from_bytes(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Parse("missing FVOL magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let json =
        bytes.get(8..8 + n).ok_or_else(|| Error::Parse(format!("header length {n} exceeds file size")))?;
    let header: Header = serde_json::from_slice(json)?;
    let dims = Dims::try_from(header.dims).map_err(|e| Error::Parse(e.to_string()))?;

    let expected_dtype = match header.kind {
        Kind::Labels => Dtype::U8,
        _ => Dtype::F32,
    };
    if header.dtype != expected_dtype {
        return Err(Error::Parse(format!("kind {:?} requires dtype {:?}", header.kind, expected_dtype)));
    }
    let classes = match (header.kind, header.classes) {
        (Kind::Scalar, _) => 0,
        (_, Some(c)) => c,
        (kind, None) => return Err(Error::Parse(format!("kind {kind:?} requires `classes`"))),
    };

    let payload = &bytes[8 + n..];
    let expected = header.payload_bytes();
    if payload.len() != expected {
        return Err(Error::CorruptPayload { expected, found: payload.len() });
    }
    let floats = || {
        payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect::<Vec<_>>()
    };
    let nonfinite = |v: &[f64]| {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvariantViolation("payload holds non-finite values".into()))
        }
    };

    Ok(match header.kind {
        Kind::Labels => Volume::Labels(LabelVolume::new(dims, classes, payload.to_vec())?),
        Kind::Scalar => Volume::Scalar(ScalarField::new(dims, floats())?),
        Kind::Prob => Volume::Prob(ProbField::new(dims, classes, floats())?),
        Kind::Logits => {
            let data = floats();
            nonfinite(&data)?;
            Volume::Logits(LogitField::new(dims, classes, data)?)
        }
        Kind::Fuzzy => {
            let data = floats();
            nonfinite(&data)?;
            let radius =
                header.radius.ok_or_else(|| Error::Parse("fuzzy volume requires `radius`".into()))?;
            let rho2 = header.rho2.ok_or_else(|| Error::Parse("fuzzy volume requires `rho2`".into()))?;
            let mut mu = Vec::with_capacity(data.len() / 3);
            let mut nu = Vec::with_capacity(data.len() / 3);
            let mut pi = Vec::with_capacity(data.len() / 3);
            for t in data.chunks_exact(3) {
                mu.push(t[0]);
                nu.push(t[1]);
                pi.push(t[2]);
            }
            Volume::Fuzzy(FuzzyLabelVolume::from_parts(dims, classes, radius, rho2, mu, nu, pi)?)
        }
    })
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// Write `vol` to `path`. Nothing is written if the volume violates its invariants.
pub fn write_volume(vol: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(vol)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy_label::fuzzify;

    fn header_len(bytes: &[u8]) -> usize {
        u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize
    }

    #[test]
    fn zeros_roundtrip() {
        let v = LabelVolume::filled(Dims::cube(2).unwrap(), 2, 0).unwrap();
        let back = from_bytes(&to_bytes(&v.clone().into()).unwrap()).unwrap();
        assert_eq!(back, Volume::Labels(v));
    }

    #[test]
    fn single_voxel_payload_is_one_byte() {
        let v = LabelVolume::filled(Dims::cube(1).unwrap(), 2, 0).unwrap();
        let bytes = to_bytes(&v.into()).unwrap();
        assert_eq!(bytes.len(), 8 + header_len(&bytes) + 1);
        assert_eq!(*bytes.last().unwrap(), 0);
        let json = std::str::from_utf8(&bytes[8..8 + header_len(&bytes)]).unwrap();
        assert_eq!(json, r#"{"kind":"labels","dims":[1,1,1],"classes":2,"dtype":"u8"}"#);
    }

    #[test]
    fn short_payload_is_corrupt() {
        let v = LabelVolume::filled(Dims::cube(2).unwrap(), 2, 1).unwrap();
        let mut bytes = to_bytes(&v.into()).unwrap();
        bytes.pop();
        match from_bytes(&bytes) {
            Err(Error::CorruptPayload { expected: 8, found: 7 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_label_rejected() {
        let v = LabelVolume::filled(Dims::cube(2).unwrap(), 2, 1).unwrap();
        let mut bytes = to_bytes(&v.into()).unwrap();
        *bytes.last_mut().unwrap() = 2;
        assert!(matches!(from_bytes(&bytes), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn bad_magic_and_header() {
        assert!(matches!(from_bytes(b"NOPE\0\0\0\0"), Err(Error::Parse(_))));
        let mut bytes = b"FVOL".to_vec();
        bytes.extend_from_slice(&100u32.to_le_bytes());
        bytes.extend_from_slice(b"{}");
        assert!(matches!(from_bytes(&bytes), Err(Error::Parse(_))));
        let json = br#"{"kind":"labels","dims":[1,1,1],"dtype":"f32","classes":2}"#;
        let mut bytes = b"FVOL".to_vec();
        bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
        bytes.extend_from_slice(json);
        bytes.extend_from_slice(&[0; 4]);
        assert!(matches!(from_bytes(&bytes), Err(Error::Parse(_))));
    }

    #[test]
    fn fuzzy_payload_layout() {
        let dims = Dims::cube(2).unwrap();
        let labels = LabelVolume::from_fn(dims, 2, |z, _, _| (z == 1) as u8).unwrap();
        let f = fuzzify(&labels, 1, 0.5).unwrap();
        let bytes = to_bytes(&f.clone().into()).unwrap();
        let payload = bytes.len() - 8 - header_len(&bytes);
        assert_eq!(payload, 2 * 3 * 8 * 4);
        // First voxel, class 0: (mu, nu, pi).
        let p = &bytes[8 + header_len(&bytes)..];
        let first: Vec<f32> = p[..12].chunks(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        assert_eq!(first, vec![f.mu()[0] as f32, f.nu()[0] as f32, f.pi()[0] as f32]);
    }

    #[test]
    fn bad_prob_field_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.fvol");
        let dims = Dims::cube(1).unwrap();
        let bad = ProbField::new_unchecked(dims, 2, vec![0.7, 0.7]);
        assert!(matches!(write_volume(&bad.into(), &path), Err(Error::InvariantViolation(_))));
        assert!(!path.exists());
    }

    #[test]
    fn neighbors_count_and_exclusion() {
        let d = Dims::cube(4).unwrap();
        assert_eq!(d.neighbors((1, 1, 1), 1).count(), 26);
        assert_eq!(d.neighbors((0, 0, 0), 1).count(), 7);
        assert_eq!(d.neighbors((0, 0, 0), 5).count(), 63);
        assert!(d.neighbors((2, 2, 2), 1).all(|i| i != d.index(2, 2, 2)));
    }
}
