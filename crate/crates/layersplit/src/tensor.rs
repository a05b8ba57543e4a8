//! Dense tensors of order 2 through 4 in row-major (C) storage, plus the
//! axis unfold/refold primitives and flat-vector views used by the solver.
//!
//! Layout conventions, fixed once for the whole crate:
//! * storage is row-major: the **last** axis varies fastest;
//! * the canonical vectorization of a tensor is its raw storage order;
//! * `unfold(t, k)` produces a `dims[k] x (len / dims[k])` matrix whose rows
//!   are indexed by the coordinate along axis `k` and whose columns enumerate
//!   the remaining axes in increasing axis order, last remaining axis fastest.
//!
//! `fold` is the exact inverse of `unfold`: both are pure permutations of the
//! storage, so a round trip is bitwise.

use crate::error::{Error, Result};
use crate::exec;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 4;

/// Dense real tensor, immutable through the public API after construction.
/// Every constructor rejects NaN and infinite entries, so downstream code can
/// rely on finite values without rescanning.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn check_finite(data: &[f64]) -> Result<()> {
    for (index, &value) in data.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
    }
    Ok(())
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < MIN_ORDER || dims.len() > MAX_ORDER {
        return Err(Error::InvalidShape(format!(
            "tensor order must be {MIN_ORDER}..={MAX_ORDER}, got {}",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape(format!("zero extent in dims {dims:?}")));
    }
    Ok(())
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::InvalidShape(format!(
                "dims {dims:?} need {expected} elements, got {}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let len = dims.iter().product();
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, walked in
    /// canonical order.
    pub fn from_fn<F>(dims: &[usize], mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        check_dims(dims)?;
        let len: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for a in (0..dims.len()).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self::new(dims.to_vec(), data)
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row-major strides; the last axis has stride 1.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for a in (0..self.dims.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.dims[a + 1];
        }
        s
    }

    pub fn offset_of(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let strides = self.strides();
        idx.iter().zip(strides.iter()).map(|(&i, &s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset_of(idx)]
    }

    /// Frobenius norm, summed sequentially in storage order.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    /// Entrywise l1 norm, summed sequentially in storage order.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|&x| x.abs()).sum()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut out = self.data.clone();
        exec::map_inplace(&mut out, |x| *x *= s);
        Self::new(self.dims.clone(), out)
    }

    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let mut out = self.data.clone();
        exec::map_inplace(&mut out, |x| *x = f(*x));
        Self::new(self.dims.clone(), out)
    }

    pub fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.check_same_dims(other)?;
        let a = &self.data;
        let b = &other.data;
        let mut out = vec![0.0; a.len()];
        exec::fill_indexed(&mut out, |i| f(a[i], b[i]));
        Self::new(self.dims.clone(), out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dims.len() {
            return Err(Error::AxisOutOfRange {
                axis,
                order: self.dims.len(),
            });
        }
        Ok(())
    }

    /// Mode-`axis` unfolding. Rows follow the coordinate along `axis`;
    /// columns enumerate the remaining axes in increasing order with the
    /// last remaining axis fastest.
    pub fn unfold(&self, axis: usize) -> Result<UnfoldedMatrix> {
        self.check_axis(axis)?;
        let rows = self.dims[axis];
        let cols = self.len() / rows;
        let strides = self.strides();
        let col_mul = column_multipliers(&self.dims, axis);
        let mut out = vec![0.0; self.len()];
        let data = &self.data;
        exec::fill_indexed(&mut out, |m| {
            // m = row * cols + col; invert to the source offset.
            let row = m / cols;
            let mut col = m % cols;
            let mut offset = row * strides[axis];
            for (a, &mul) in col_mul.iter().enumerate() {
                if a == axis {
                    continue;
                }
                let coord = col / mul;
                col %= mul;
                offset += coord * strides[a];
            }
            data[offset]
        });
        Ok(UnfoldedMatrix {
            rows,
            cols,
            data: out,
        })
    }

    /// Whether every entry lies in the closed unit interval.
    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|&x| (0.0..=1.0).contains(&x))
    }

    pub fn clamped_unit(&self) -> Self {
        let mut out = self.data.clone();
        exec::map_inplace(&mut out, |x| *x = x.clamp(0.0, 1.0));
        Self {
            dims: self.dims.clone(),
            data: out,
        }
    }

    /// Canonical vectorization (a copy of the raw storage).
    pub fn to_flat(&self) -> FlatVector {
        FlatVector {
            data: self.data.clone(),
        }
    }

    pub fn from_flat(flat: &FlatVector, dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), flat.data.clone())
    }
}

/// Per-axis multiplier of the column index contributed by each non-unfold
/// axis: the product of the extents of the later remaining axes.
fn column_multipliers(dims: &[usize], axis: usize) -> Vec<usize> {
    let mut mul = vec![1usize; dims.len()];
    let mut acc = 1usize;
    for a in (0..dims.len()).rev() {
        if a == axis {
            continue;
        }
        mul[a] = acc;
        acc *= dims[a];
    }
    mul
}

/// Row-major dense matrix produced by `DenseTensor::unfold`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl UnfoldedMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }
}

/// Refolds a mode-`axis` unfolding back into a tensor of shape `dims`.
/// Exact inverse of `unfold`; pure permutation, no arithmetic.
pub fn fold(m: &UnfoldedMatrix, axis: usize, dims: &[usize]) -> Result<DenseTensor> {
    check_dims(dims)?;
    if axis >= dims.len() {
        return Err(Error::AxisOutOfRange {
            axis,
            order: dims.len(),
        });
    }
    let len: usize = dims.iter().product();
    if m.rows != dims[axis] || m.rows * m.cols != len {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{} does not refold to dims {dims:?} along axis {axis}",
            m.rows, m.cols
        )));
    }
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let col_mul = column_multipliers(dims, axis);
    let cols = m.cols;
    let mdata = &m.data;
    let mut out = vec![0.0; len];
    exec::fill_indexed(&mut out, |offset| {
        let mut rem = offset;
        let mut row = 0usize;
        let mut col = 0usize;
        for a in 0..dims.len() {
            let coord = rem / strides[a];
            rem %= strides[a];
            if a == axis {
                row = coord;
            } else {
                col += coord * col_mul[a];
            }
        }
        mdata[row * cols + col]
    });
    DenseTensor::new(dims.to_vec(), out)
}

/// Flat vector in canonical (row-major) ordering. Same finiteness contract
/// as `DenseTensor`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatVector {
    data: Vec<f64>,
}

impl FlatVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Self { data })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|&x| x.abs()).sum()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn check_same_len(&self, other: &Self) -> Result<()> {
        if self.data.len() != other.data.len() {
            return Err(Error::DimensionMismatch(format!(
                "flat lengths {} vs {}",
                self.data.len(),
                other.data.len()
            )));
        }
        Ok(())
    }

    /// `self + s * other`, elementwise.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.check_same_len(other)?;
        let a = &self.data;
        let b = &other.data;
        let mut out = vec![0.0; a.len()];
        exec::fill_indexed(&mut out, |i| a[i] + s * b[i]);
        Self::new(out)
    }
}
