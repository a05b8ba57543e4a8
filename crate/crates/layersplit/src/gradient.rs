//! Circular difference operators along selected tensor axes, their exact
//! adjoints, and the stacked multi-axis gradient used by the solver.
//!
//! A derivative filter is a short tap vector applied with periodic wrap:
//!
//! ```text
//! response[i] = sum_j taps[j] * x[(i + j - anchor) mod L]
//! ```
//!
//! along each fiber of the chosen axis. The default forward difference has
//! taps `[-1, 1]` with anchor 0, so `response[i] = x[i+1] - x[i]` with the
//! last entry wrapping to the front. The adjoint reverses the index shift:
//!
//! ```text
//! adjoint[i] = sum_j taps[j] * y[(i - (j - anchor)) mod L]
//! ```
//!
//! Both directions are linear, and `<Fx, y> == <x, F^T y>` holds to rounding
//! for every axis and filter; the test suite checks this against dense
//! matrices assembled independently from the index formulas.

use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::{DenseTensor, FlatVector};
use rustfft::num_complex::Complex;

/// Short zero-sum tap vector applied circularly along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeFilter {
    taps: Vec<f64>,
    anchor: usize,
}

impl DerivativeFilter {
    /// Forward difference: taps `[-1, 1]`, anchor 0.
    pub fn forward_difference() -> Self {
        Self {
            taps: vec![-1.0, 1.0],
            anchor: 0,
        }
    }

    pub fn new(taps: Vec<f64>, anchor: usize) -> Result<Self> {
        if taps.len() < 2 {
            return Err(Error::InvalidFilter(format!(
                "need at least two taps, got {}",
                taps.len()
            )));
        }
        if anchor >= taps.len() {
            return Err(Error::InvalidFilter(format!(
                "anchor {anchor} outside taps of length {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidFilter("non-finite tap".into()));
        }
        let sum: f64 = taps.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(Error::InvalidFilter(format!(
                "taps must sum to zero (a derivative kills constants), sum = {sum:e}"
            )));
        }
        Ok(Self { taps, anchor })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// DFT symbol of the filter on a circle of length `l`:
    /// `H(w) = sum_j taps[j] * exp(+2 pi i w (j - anchor) / l)`.
    /// Diagonalizes the circular convolution: applying the filter multiplies
    /// DFT bin `w` by `H(w)`.
    pub fn frequency_response(&self, l: usize) -> Vec<Complex<f64>> {
        let mut h = vec![Complex::new(0.0, 0.0); l];
        for (w, hw) in h.iter_mut().enumerate() {
            for (j, &tap) in self.taps.iter().enumerate() {
                let shift = j as f64 - self.anchor as f64;
                let angle = 2.0 * std::f64::consts::PI * w as f64 * shift / l as f64;
                *hw += Complex::new(tap * angle.cos(), tap * angle.sin());
            }
        }
        h
    }
}

fn wrap(i: isize, l: usize) -> usize {
    let l = l as isize;
    (((i % l) + l) % l) as usize
}

fn check_axis_extent(t: &DenseTensor, axis: usize, f: &DerivativeFilter) -> Result<()> {
    t.check_axis(axis)?;
    if f.len() > t.dims()[axis] {
        return Err(Error::InvalidFilter(format!(
            "filter of length {} longer than axis {} extent {}",
            f.len(),
            axis,
            t.dims()[axis]
        )));
    }
    Ok(())
}

/// Offsets of each tap relative to the output position, for the forward
/// direction (`+(j - anchor)`) or the adjoint (`-(j - anchor)`).
fn tap_offsets(f: &DerivativeFilter, adjoint: bool) -> Vec<isize> {
    f.taps()
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let d = j as isize - f.anchor() as isize;
            if adjoint {
                -d
            } else {
                d
            }
        })
        .collect()
}

fn apply_along_axis(
    t: &DenseTensor,
    axis: usize,
    f: &DerivativeFilter,
    adjoint: bool,
) -> Result<DenseTensor> {
    check_axis_extent(t, axis, f)?;
    let dims = t.dims();
    let l = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let block = l * inner;
    let offsets = tap_offsets(f, adjoint);
    let taps = f.taps();
    let src = t.data();
    let mut out = vec![0.0; t.len()];
    exec::for_each_chunk_mut(&mut out, block, |o, chunk| {
        let base = &src[o * block..(o + 1) * block];
        for p in 0..l {
            let dst = &mut chunk[p * inner..(p + 1) * inner];
            for (tap, &off) in taps.iter().zip(offsets.iter()) {
                let q = wrap(p as isize + off, l);
                let s = &base[q * inner..(q + 1) * inner];
                for (d, &v) in dst.iter_mut().zip(s.iter()) {
                    *d += tap * v;
                }
            }
        }
    });
    DenseTensor::new(dims.to_vec(), out)
}

/// Circular derivative of `t` along `axis`.
pub fn derivative_response(t: &DenseTensor, axis: usize, f: &DerivativeFilter) -> Result<DenseTensor> {
    apply_along_axis(t, axis, f, false)
}

/// Adjoint of `derivative_response` along the same axis.
pub fn derivative_adjoint(t: &DenseTensor, axis: usize, f: &DerivativeFilter) -> Result<DenseTensor> {
    apply_along_axis(t, axis, f, true)
}

/// One derivative response per gradient axis, kept in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    responses: Vec<DenseTensor>,
    axes: Vec<usize>,
}

pub fn check_axes(axes: &[usize], order: usize) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::InvalidConfig("empty gradient axis set".into()));
    }
    for pair in axes.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidConfig(format!(
                "gradient axes must be strictly increasing, got {axes:?}"
            )));
        }
    }
    if let Some(&last) = axes.last() {
        if last >= order {
            return Err(Error::AxisOutOfRange { axis: last, order });
        }
    }
    Ok(())
}

impl GradientField {
    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn responses(&self) -> &[DenseTensor] {
        &self.responses
    }

    pub fn response(&self, j: usize) -> &DenseTensor {
        &self.responses[j]
    }

    pub fn response_count(&self) -> usize {
        self.responses.len()
    }

    pub fn dims(&self) -> &[usize] {
        self.responses[0].dims()
    }

    /// Concatenates the canonical vectorizations of the responses in axis
    /// order into one flat vector of length `axes.len() * tensor_len`.
    pub fn stack(&self) -> FlatVector {
        let n = self.responses[0].len();
        let mut data = Vec::with_capacity(n * self.responses.len());
        for r in &self.responses {
            data.extend_from_slice(r.data());
        }
        FlatVector::new(data).expect("responses are finite")
    }

    /// Splits a stacked vector back into per-axis responses.
    pub fn from_stacked(v: &FlatVector, dims: &[usize], axes: &[usize]) -> Result<Self> {
        check_axes(axes, dims.len())?;
        let n: usize = dims.iter().product();
        if v.len() != n * axes.len() {
            return Err(Error::DimensionMismatch(format!(
                "stacked length {} vs {} axes x {} elements",
                v.len(),
                axes.len(),
                n
            )));
        }
        let mut responses = Vec::with_capacity(axes.len());
        for (j, _) in axes.iter().enumerate() {
            let part = v.data()[j * n..(j + 1) * n].to_vec();
            responses.push(DenseTensor::new(dims.to_vec(), part)?);
        }
        Ok(Self {
            responses,
            axes: axes.to_vec(),
        })
    }
}

/// Derivative responses of `t` along every axis in `axes`.
pub fn gradient(t: &DenseTensor, axes: &[usize], f: &DerivativeFilter) -> Result<GradientField> {
    check_axes(axes, t.order())?;
    let mut responses = Vec::with_capacity(axes.len());
    for &axis in axes {
        responses.push(derivative_response(t, axis, f)?);
    }
    Ok(GradientField {
        responses,
        axes: axes.to_vec(),
    })
}

/// Adjoint of `gradient`: sums the per-axis adjoints back into one tensor.
pub fn gradient_adjoint(field: &GradientField, f: &DerivativeFilter) -> Result<DenseTensor> {
    let mut acc = DenseTensor::zeros(field.dims())?;
    for (r, &axis) in field.responses().iter().zip(field.axes().iter()) {
        acc = acc.add(&derivative_adjoint(r, axis, f)?)?;
    }
    Ok(acc)
}

/// Adjoint applied directly to a stacked vector.
pub fn adjoint_of_stacked(
    v: &FlatVector,
    dims: &[usize],
    axes: &[usize],
    f: &DerivativeFilter,
) -> Result<DenseTensor> {
    let field = GradientField::from_stacked(v, dims, axes)?;
    gradient_adjoint(&field, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f64]) -> DenseTensor {
        DenseTensor::new(vec![1, values.len()], values.to_vec()).unwrap()
    }

    #[test]
    fn forward_difference_on_unit_impulse() {
        // x = [0,1,0,0]  ->  [1,-1,0,0] with circular wrap.
        let t = row(&[0.0, 1.0, 0.0, 0.0]);
        let f = DerivativeFilter::forward_difference();
        let r = derivative_response(&t, 1, &f).unwrap();
        assert_eq!(r.data(), &[1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_input_gives_zero_response() {
        let t = DenseTensor::new(vec![3, 4], vec![0.7; 12]).unwrap();
        let f = DerivativeFilter::forward_difference();
        for axis in 0..2 {
            let r = derivative_response(&t, axis, &f).unwrap();
            assert!(r.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn wrap_hits_the_boundary() {
        let t = row(&[1.0, 2.0, 4.0]);
        let f = DerivativeFilter::forward_difference();
        let r = derivative_response(&t, 1, &f).unwrap();
        assert_eq!(r.data(), &[1.0, 2.0, -3.0]);
    }

    #[test]
    fn filter_must_sum_to_zero() {
        assert!(DerivativeFilter::new(vec![1.0, 1.0], 0).is_err());
        assert!(DerivativeFilter::new(vec![-0.5, 0.5], 0).is_ok());
        assert!(DerivativeFilter::new(vec![1.0], 0).is_err());
        assert!(DerivativeFilter::new(vec![-1.0, 1.0], 2).is_err());
    }

    #[test]
    fn filter_longer_than_axis_rejected() {
        let t = row(&[1.0, 2.0]);
        let f = DerivativeFilter::new(vec![-1.0, 0.0, 0.0, 1.0], 0).unwrap();
        assert!(derivative_response(&t, 1, &f).is_err());
    }

    #[test]
    fn axes_validation() {
        assert!(check_axes(&[0, 1], 2).is_ok());
        assert!(check_axes(&[0, 0], 2).is_err());
        assert!(check_axes(&[1, 0], 2).is_err());
        assert!(check_axes(&[0, 2], 2).is_err());
        assert!(check_axes(&[], 2).is_err());
    }

    #[test]
    fn stack_roundtrip_is_bitwise() {
        let t = DenseTensor::from_fn(&[3, 4], |idx| (idx[0] * 4 + idx[1]) as f64 * 0.1).unwrap();
        let f = DerivativeFilter::forward_difference();
        let g = gradient(&t, &[0, 1], &f).unwrap();
        let flat = g.stack();
        assert_eq!(flat.len(), 2 * t.len());
        let back = GradientField::from_stacked(&flat, t.dims(), &[0, 1]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let t = DenseTensor::zeros(&[2, 3, 4]).unwrap();
        let f = DerivativeFilter::forward_difference();
        let g = gradient(&t, &[0, 1, 2], &f).unwrap();
        assert!(g.stack().data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn frequency_response_of_forward_difference() {
        let f = DerivativeFilter::forward_difference();
        let h = f.frequency_response(4);
        // H(w) = -1 + exp(2 pi i w / 4): w=0 -> 0, w=1 -> -1+i, w=2 -> -2.
        assert!((h[0].re).abs() < 1e-15 && (h[0].im).abs() < 1e-15);
        assert!((h[1].re + 1.0).abs() < 1e-15 && (h[1].im - 1.0).abs() < 1e-15);
        assert!((h[2].re + 2.0).abs() < 1e-15 && (h[2].im).abs() < 1e-15);
    }
}
