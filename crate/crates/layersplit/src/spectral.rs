//! FFT-diagonalized solves of the circulant normal equations
//! `(F^T F + shift * I) x = b`, where `F` stacks circular derivative
//! operators along the gradient axes.
//!
//! With periodic wrap every per-axis derivative is circulant, so the
//! multi-axis DFT diagonalizes `F^T F` with eigenvalues
//! `sum_j |H_j(w_j)|^2` on the frequency grid, where `H_j` is the filter's
//! DFT symbol along axis `j`. A solve is therefore: forward transform the
//! right-hand side over the gradient axes, divide each bin by
//! `sum_j |H_j|^2 + shift`, transform back. The denominator is real and at
//! least `shift`, so the system is uniformly well conditioned for any
//! positive shift.
//!
//! Transforms run only over the gradient axes; all remaining axes are
//! batched, which keeps channels and frames independent unless an axis is
//! explicitly selected (as the temporal axis is for video).

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::exec;
use crate::gradient::{check_axes, DerivativeFilter};
use crate::tensor::DenseTensor;

/// Largest imaginary magnitude tolerated (and discarded) after the inverse
/// transform of a real-input solve.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Real spectral denominator `sum_j |H_j(w)|^2 + shift` tabulated on the
/// full element grid.
#[derive(Debug, Clone)]
pub struct SpectralDenominator {
    dims: Vec<usize>,
    axes: Vec<usize>,
    shift: f64,
    values: Vec<f64>,
}

impl SpectralDenominator {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_shift(shift: f64) -> Result<()> {
    if !(shift.is_finite() && shift > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "spectral shift must be positive and finite, got {shift}"
        )));
    }
    Ok(())
}

/// Squared modulus of the filter symbol per frequency along one axis.
/// Computed as `norm_sqr` of the complex response, so entries are
/// non-negative by construction.
fn axis_energy(f: &DerivativeFilter, l: usize) -> Vec<f64> {
    f.frequency_response(l).iter().map(|h| h.norm_sqr()).collect()
}

/// `sum_j |H_j(w_j)|^2` tabulated over the full grid, no shift.
pub fn filter_energy_spectrum(
    dims: &[usize],
    axes: &[usize],
    f: &DerivativeFilter,
) -> Result<Vec<f64>> {
    check_axes(axes, dims.len())?;
    for &axis in axes {
        if f.len() > dims[axis] {
            return Err(Error::InvalidFilter(format!(
                "filter of length {} longer than axis {axis} extent {}",
                f.len(),
                dims[axis]
            )));
        }
    }
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let per_axis: Vec<(usize, usize, Vec<f64>)> = axes
        .iter()
        .map(|&a| (strides[a], dims[a], axis_energy(f, dims[a])))
        .collect();
    let len: usize = dims.iter().product();
    let mut out = vec![0.0; len];
    exec::fill_indexed(&mut out, |offset| {
        per_axis
            .iter()
            .map(|(stride, extent, energy)| energy[(offset / stride) % extent])
            .sum()
    });
    Ok(out)
}

pub fn build_denominator(
    dims: &[usize],
    axes: &[usize],
    f: &DerivativeFilter,
    shift: f64,
) -> Result<SpectralDenominator> {
    check_shift(shift)?;
    let mut values = filter_energy_spectrum(dims, axes, f)?;
    exec::map_inplace(&mut values, |v| *v += shift);
    Ok(SpectralDenominator {
        dims: dims.to_vec(),
        axes: axes.to_vec(),
        shift,
        values,
    })
}

/// Caches FFT plans and the filter energy spectrum for one tensor shape and
/// axis set, so repeated solves only pay for transforms.
pub struct SpectralSolver {
    dims: Vec<usize>,
    axes: Vec<usize>,
    energy: Vec<f64>,
    plans: Vec<AxisPlan>,
    inv_scale: f64,
}

struct AxisPlan {
    axis: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralSolver {
    pub fn new(dims: &[usize], axes: &[usize], f: &DerivativeFilter) -> Result<Self> {
        let energy = filter_energy_spectrum(dims, axes, f)?;
        let mut planner = FftPlanner::new();
        let mut fwd_cache: HashMap<usize, Arc<dyn Fft<f64>>> = HashMap::new();
        let mut inv_cache: HashMap<usize, Arc<dyn Fft<f64>>> = HashMap::new();
        let mut plans = Vec::with_capacity(axes.len());
        let mut transformed = 1usize;
        for &axis in axes {
            let l = dims[axis];
            transformed *= l;
            let forward = fwd_cache
                .entry(l)
                .or_insert_with(|| planner.plan_fft_forward(l))
                .clone();
            let inverse = inv_cache
                .entry(l)
                .or_insert_with(|| planner.plan_fft_inverse(l))
                .clone();
            plans.push(AxisPlan {
                axis,
                forward,
                inverse,
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            axes: axes.to_vec(),
            energy,
            plans,
            inv_scale: 1.0 / transformed as f64,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    /// Solves `(F^T F + shift * I) x = rhs`.
    pub fn solve_shifted(&self, rhs: &DenseTensor, shift: f64) -> Result<DenseTensor> {
        check_shift(shift)?;
        if rhs.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "rhs dims {:?} vs solver dims {:?}",
                rhs.dims(),
                self.dims
            )));
        }
        let src = rhs.data();
        let mut buf = vec![Complex::new(0.0, 0.0); src.len()];
        exec::fill_indexed(&mut buf, |i| Complex::new(src[i], 0.0));

        for plan in &self.plans {
            fft_axis(&mut buf, &self.dims, plan.axis, plan.forward.as_ref());
        }
        let inv_scale = self.inv_scale;
        exec::zip_apply(&mut buf, &self.energy, |c, &e| *c /= e + shift);
        for plan in &self.plans {
            fft_axis(&mut buf, &self.dims, plan.axis, plan.inverse.as_ref());
        }

        let mut residue = 0.0f64;
        for c in &buf {
            residue = residue.max((c.im * inv_scale).abs());
        }
        if residue > IMAG_RESIDUE_TOL {
            return Err(Error::ImaginaryResidue { residue });
        }
        let mut out = vec![0.0; src.len()];
        exec::fill_indexed(&mut out, |i| buf[i].re * inv_scale);
        DenseTensor::new(self.dims.clone(), out)
    }
}

/// In-place FFT of every fiber along `axis`. Fibers are gathered into
/// contiguous scratch when the axis is strided, transformed, and scattered
/// back; the contiguous (last-axis) case runs directly on the buffer.
fn fft_axis(buf: &mut [Complex<f64>], dims: &[usize], axis: usize, plan: &dyn Fft<f64>) {
    let l = dims[axis];
    if l == 1 {
        return;
    }
    let inner: usize = dims[axis + 1..].iter().product();
    let scratch_len = plan.get_inplace_scratch_len();
    if inner == 1 {
        exec::for_each_chunk_mut_with(
            buf,
            l,
            || vec![Complex::new(0.0, 0.0); scratch_len],
            |_, fiber, scratch| plan.process_with_scratch(fiber, scratch),
        );
        return;
    }
    let block = l * inner;
    exec::for_each_chunk_mut_with(
        buf,
        block,
        || {
            (
                vec![Complex::new(0.0, 0.0); block],
                vec![Complex::new(0.0, 0.0); scratch_len],
            )
        },
        |_, chunk, (temp, scratch)| {
            for i in 0..inner {
                for p in 0..l {
                    temp[i * l + p] = chunk[p * inner + i];
                }
            }
            for fiber in temp.chunks_mut(l) {
                plan.process_with_scratch(fiber, scratch);
            }
            for i in 0..inner {
                for p in 0..l {
                    chunk[p * inner + i] = temp[i * l + p];
                }
            }
        },
    );
}
