//! Elementwise soft-thresholding with spatially varying thresholds, and the
//! two coupled gradient-split updates built on it.
//!
//! The scalar rule is `S_w[a] = sgn(a) * max(|a| - w, 0)` with `w >= 0`.
//! The two split variables alternate: the intrinsic-side threshold couples
//! to the magnitude of the artifact-side split and vice versa, which is what
//! lets strong blocking structure migrate into the artifact layer while the
//! intrinsic gradients keep only what the observation supports.

use crate::error::{Error, Result};
use crate::exec;
use crate::solver::{SolverConfig, SolverState};
use crate::tensor::FlatVector;

/// Per-element non-negative shrinkage thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdField {
    data: Vec<f64>,
}

impl ThresholdField {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "negative shrinkage threshold {value} at index {index}"
                )));
            }
        }
        Ok(Self { data })
    }

    pub fn uniform(len: usize, w: f64) -> Result<Self> {
        Self::new(vec![w; len])
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
}

pub fn shrink_scalar(a: f64, w: f64) -> f64 {
    let m = a.abs() - w;
    if m > 0.0 {
        a.signum() * m
    } else {
        0.0
    }
}

/// Elementwise soft-thresholding of `a` by `w`.
pub fn shrink(a: &FlatVector, w: &ThresholdField) -> Result<FlatVector> {
    if a.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} vs threshold length {}",
            a.len(),
            w.len()
        )));
    }
    let av = a.data();
    let wv = w.data();
    let mut out = vec![0.0; av.len()];
    exec::fill_indexed(&mut out, |i| shrink_scalar(av[i], wv[i]));
    FlatVector::new(out)
}

fn check_split_lengths(state: &SolverState, grad: &FlatVector) -> Result<()> {
    let n = state.obs_grad.len();
    if grad.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "gradient stack length {} vs observation gradient length {n}",
            grad.len()
        )));
    }
    Ok(())
}

/// Updated intrinsic-side split: shrink the weighted combination of the
/// observation gradient (less the artifact split) and the current intrinsic
/// layer gradient, with per-element threshold `(alpha + beta |v|) / mu`.
///
/// `grad_intrinsic` must be the stacked gradient of the intrinsic layer
/// already refreshed this iteration.
pub fn update_grad_split_intrinsic(
    state: &SolverState,
    config: &SolverConfig,
    grad_intrinsic: &FlatVector,
) -> Result<FlatVector> {
    check_split_lengths(state, grad_intrinsic)?;
    let mu = state.penalty;
    let denom = 2.0 * config.gamma + mu;
    let g = state.obs_grad.data();
    let v = state.grad_split_artifact.data();
    let y1 = state.grad_dual_intrinsic.data();
    let fl = grad_intrinsic.data();

    let mut centers = vec![0.0; fl.len()];
    exec::fill_indexed(&mut centers, |i| {
        (2.0 * config.gamma * (g[i] - v[i]) + mu * fl[i] - y1[i]) / denom
    });
    let mut thresholds = vec![0.0; fl.len()];
    exec::fill_indexed(&mut thresholds, |i| {
        (config.alpha + config.beta * v[i].abs()) / mu
    });
    shrink(&FlatVector::new(centers)?, &ThresholdField::new(thresholds)?)
}

/// Updated artifact-side split, mirroring `update_grad_split_intrinsic` with
/// threshold `beta |u| / mu`. Reads the intrinsic split already updated this
/// iteration from the state (the two updates are deliberately sequential).
pub fn update_grad_split_artifact(
    state: &SolverState,
    config: &SolverConfig,
    grad_artifact: &FlatVector,
) -> Result<FlatVector> {
    check_split_lengths(state, grad_artifact)?;
    let mu = state.penalty;
    let denom = 2.0 * config.gamma + mu;
    let g = state.obs_grad.data();
    let u = state.grad_split_intrinsic.data();
    let y2 = state.grad_dual_artifact.data();
    let fl = grad_artifact.data();

    let mut centers = vec![0.0; fl.len()];
    exec::fill_indexed(&mut centers, |i| {
        (2.0 * config.gamma * (g[i] - u[i]) + mu * fl[i] - y2[i]) / denom
    });
    let mut thresholds = vec![0.0; fl.len()];
    exec::fill_indexed(&mut thresholds, |i| config.beta * u[i].abs() / mu);
    shrink(&FlatVector::new(centers)?, &ThresholdField::new(thresholds)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_shrink_hand_values() {
        assert_eq!(shrink_scalar(1.2, 0.5), 0.7);
        assert_eq!(shrink_scalar(-0.3, 0.5), 0.0);
        assert_eq!(shrink_scalar(-1.2, 0.5), -0.7);
        assert_eq!(shrink_scalar(0.0, 0.5), 0.0);
        assert_eq!(shrink_scalar(0.5, 0.5), 0.0);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let a = FlatVector::new(vec![0.3, -1.7, 0.0, 2.5]).unwrap();
        let w = ThresholdField::uniform(4, 0.0).unwrap();
        let s = shrink(&a, &w).unwrap();
        assert_eq!(s.data(), a.data());
    }

    #[test]
    fn threshold_must_be_non_negative() {
        assert!(ThresholdField::new(vec![0.1, -0.2]).is_err());
        assert!(ThresholdField::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn shrink_never_grows_magnitude_or_flips_sign() {
        let a = FlatVector::new(vec![0.9, -0.4, 0.05, -2.0, 0.0]).unwrap();
        let w = ThresholdField::new(vec![0.5, 0.5, 0.1, 0.25, 1.0]).unwrap();
        let s = shrink(&a, &w).unwrap();
        for (x, y) in a.data().iter().zip(s.data().iter()) {
            assert!(y.abs() <= x.abs());
            assert!(*y == 0.0 || y.signum() == x.signum());
        }
    }

    #[test]
    fn length_mismatch_errors() {
        let a = FlatVector::new(vec![1.0, 2.0]).unwrap();
        let w = ThresholdField::uniform(3, 0.1).unwrap();
        assert!(shrink(&a, &w).is_err());
    }
}
