//! Dense third-order tensors, observation masks and mode-n unfoldings.
//!
//! Storage is column-major with the first index varying fastest: element
//! `(i1, i2, i3)` (0-based) lives at `i1 + n1 * i2 + n1 * n2 * i3`.
//!
//! The mode-k unfolding has `n_k` rows. Its columns enumerate the two remaining
//! indices with the lower-numbered mode varying fastest, so for mode 2 the
//! column of `(i1, i3)` is `i1 + n1 * i3`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor dimensions `(n1, n2, n3)`, all positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 3]", into = "[usize; 3]")]
pub struct Dims(pub [usize; 3]);

impl TryFrom<[usize; 3]> for Dims {
    type Error = Error;

    fn try_from(d: [usize; 3]) -> Result<Self> {
        Dims::new(d[0], d[1], d[2])
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        d.0
    }
}

impl Dims {
    pub fn new(n1: usize, n2: usize, n3: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::Parameter(format!(
                "dimensions must be positive, got {n1}x{n2}x{n3}"
            )));
        }
        n1.checked_mul(n2)
            .and_then(|p| p.checked_mul(n3))
            .ok_or_else(|| Error::Parameter("dimension product overflows".into()))?;
        Ok(Dims([n1, n2, n3]))
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.0[0] * self.0[1] * self.0[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mode: Mode) -> usize {
        self.0[mode.index()]
    }

    pub fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        debug_assert!(i1 < self.0[0] && i2 < self.0[1] && i3 < self.0[2]);
        i1 + self.0[0] * (i2 + self.0[1] * i3)
    }

    /// Inverse of [`Dims::offset`].
    pub fn index(&self, offset: usize) -> [usize; 3] {
        let [n1, n2, _] = self.0;
        [offset % n1, (offset / n1) % n2, offset / (n1 * n2)]
    }

    /// Shape `(rows, cols)` of the mode-k unfolding.
    pub fn unfolded_shape(&self, mode: Mode) -> (usize, usize) {
        let rows = self.get(mode);
        (rows, self.len() / rows)
    }

    /// Smallest side of the mode-k unfolding, i.e. its number of singular values.
    pub fn unfolded_rank_bound(&self, mode: Mode) -> usize {
        let (r, c) = self.unfolded_shape(mode);
        r.min(c)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.0[0], self.0[1], self.0[2])
    }
}

/// One of the three tensor modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// 0-based position of the mode.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    /// The two other modes, lower-numbered first.
    fn others(self) -> (usize, usize) {
        match self {
            Mode::One => (1, 2),
            Mode::Two => (0, 2),
            Mode::Three => (0, 1),
        }
    }
}

/// Dense real third-order tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Tensor3 {
            dims,
            data: vec![0.0; dims.len()],
        }
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        Tensor3 {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// Wraps `data` laid out first-index-fastest. Rejects wrong lengths and
    /// non-finite values.
    pub fn from_vec(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} values supplied for a {dims} tensor",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite value at offset {pos} (index {:?})",
                dims.index(pos)
            )));
        }
        Ok(Tensor3 { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let data = (0..dims.len())
            .map(|o| {
                let [i, j, k] = dims.index(o);
                f(i, j, k)
            })
            .collect();
        Tensor3 { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.data[self.dims.offset(i1, i2, i3)]
    }

    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, value: f64) {
        let o = self.dims.offset(i1, i2, i3);
        self.data[o] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two tensors.
    ///
    /// # Panics
    /// If the dimensions differ.
    pub fn zip_map(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Tensor3 {
        assert_eq!(self.dims, other.dims, "elementwise op on mismatched dims");
        Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        self.map(|v| c * v)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Tensor3) {
        assert_eq!(self.dims, other.dims, "axpy on mismatched dims");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self)
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn unfold(&self, mode: Mode) -> UnfoldedMatrix {
        unfold(self, mode)
    }
}

/// Boolean tensor marking observed entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    dims: Dims,
    flags: Vec<bool>,
}

impl ObservationMask {
    pub fn full(dims: Dims) -> Self {
        ObservationMask {
            dims,
            flags: vec![true; dims.len()],
        }
    }

    pub fn empty(dims: Dims) -> Self {
        ObservationMask {
            dims,
            flags: vec![false; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} flags supplied for a {dims} mask",
                flags.len()
            )));
        }
        Ok(ObservationMask { dims, flags })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let flags = (0..dims.len())
            .map(|o| {
                let [i, j, k] = dims.index(o);
                f(i, j, k)
            })
            .collect();
        ObservationMask { dims, flags }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.flags
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.flags
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> bool {
        self.flags[self.dims.offset(i1, i2, i3)]
    }

    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, observed: bool) {
        let o = self.dims.offset(i1, i2, i3);
        self.flags[o] = observed;
    }

    pub fn is_observed(&self, offset: usize) -> bool {
        self.flags[offset]
    }

    pub fn observed_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn missing_count(&self) -> usize {
        self.flags.len() - self.observed_count()
    }

    /// Offsets of observed entries in ascending order.
    pub fn observed_offsets(&self) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter_map(|(o, &f)| f.then_some(o))
            .collect()
    }

    pub fn complement(&self) -> ObservationMask {
        ObservationMask {
            dims: self.dims,
            flags: self.flags.iter().map(|f| !f).collect(),
        }
    }

    pub fn union(&self, other: &ObservationMask) -> Result<ObservationMask> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ObservationMask) -> Result<ObservationMask> {
        self.combine(other, |a, b| a && b)
    }

    pub fn is_disjoint(&self, other: &ObservationMask) -> bool {
        self.dims == other.dims && self.flags.iter().zip(&other.flags).all(|(&a, &b)| !(a && b))
    }

    fn combine(&self, other: &ObservationMask, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        check_dims(self.dims, other.dims, "mask combination")?;
        Ok(ObservationMask {
            dims: self.dims,
            flags: self
                .flags
                .iter()
                .zip(&other.flags)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// A mode-k unfolding: `n_k` rows by `N / n_k` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedMatrix {
    pub mode: Mode,
    pub matrix: DMatrix<f64>,
}

impl UnfoldedMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn fold(&self, dims: Dims) -> Result<Tensor3> {
        fold(&self.matrix, self.mode, dims)
    }
}

pub(crate) fn check_dims(a: Dims, b: Dims, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Column of element `(i1, i2, i3)` in the mode-k unfolding.
fn unfolded_column(dims: Dims, mode: Mode, idx: [usize; 3]) -> usize {
    let (a, b) = mode.others();
    idx[a] + dims.0[a] * idx[b]
}

pub fn unfold(x: &Tensor3, mode: Mode) -> UnfoldedMatrix {
    let dims = x.dims;
    let (rows, cols) = dims.unfolded_shape(mode);
    let matrix = if mode == Mode::One {
        // Mode-1 unfolding shares the tensor's column-major layout.
        DMatrix::from_column_slice(rows, cols, &x.data)
    } else {
        let mut m = DMatrix::zeros(rows, cols);
        for (o, &v) in x.data.iter().enumerate() {
            let idx = dims.index(o);
            m[(idx[mode.index()], unfolded_column(dims, mode, idx))] = v;
        }
        m
    };
    UnfoldedMatrix { mode, matrix }
}

/// Inverse of [`unfold`].
pub fn fold(m: &DMatrix<f64>, mode: Mode, dims: Dims) -> Result<Tensor3> {
    let (rows, cols) = dims.unfolded_shape(mode);
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Shape(format!(
            "{}x{} matrix is not a mode-{} unfolding of a {dims} tensor (expected {rows}x{cols})",
            m.nrows(),
            m.ncols(),
            mode.index() + 1
        )));
    }
    if mode == Mode::One {
        return Ok(Tensor3 {
            dims,
            data: m.as_slice().to_vec(),
        });
    }
    let data = (0..dims.len())
        .map(|o| {
            let idx = dims.index(o);
            m[(idx[mode.index()], unfolded_column(dims, mode, idx))]
        })
        .collect();
    Ok(Tensor3 { dims, data })
}

/// Keeps observed entries of `x` and zeroes the rest.
pub fn project(x: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    check_dims(x.dims, mask.dims, "projection")?;
    Ok(Tensor3 {
        dims: x.dims,
        data: x
            .data
            .iter()
            .zip(&mask.flags)
            .map(|(&v, &f)| if f { v } else { 0.0 })
            .collect(),
    })
}

/// Overwrites the observed entries of `m` with those of `y`.
pub fn apply_constraint(m: &Tensor3, y: &Tensor3, mask: &ObservationMask) -> Result<Tensor3> {
    check_dims(m.dims, y.dims, "constraint")?;
    check_dims(m.dims, mask.dims, "constraint mask")?;
    Ok(Tensor3 {
        dims: m.dims,
        data: m
            .data
            .iter()
            .zip(&y.data)
            .zip(&mask.flags)
            .map(|((&mv, &yv), &f)| if f { yv } else { mv })
            .collect(),
    })
}

pub fn frobenius(x: &Tensor3) -> f64 {
    x.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}
