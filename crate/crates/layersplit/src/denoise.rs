//! Spatial prefilters used by the two-stage pipelines: a median filter for
//! impulse noise and a bilateral filter for broadband noise.
//!
//! Strength follows the convention of noise levels quoted on the 0..255
//! sample scale: the bilateral range sigma is `strength / 255`, and the
//! median interprets the strength (rounded up, capped at 8) as a pass
//! count. Strength 0 is the identity for both kinds. Filtering is always
//! per spatial plane; channels and frames are never mixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiserKind {
    Median,
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Denoiser {
    pub kind: DenoiserKind,
    pub strength: f64,
}

impl Denoiser {
    pub fn median(strength: f64) -> Self {
        Self {
            kind: DenoiserKind::Median,
            strength,
        }
    }

    pub fn bilateral(strength: f64) -> Self {
        Self {
            kind: DenoiserKind::Bilateral,
            strength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "denoiser strength must be finite and non-negative, got {}",
                self.strength
            )));
        }
        Ok(())
    }
}

const BILATERAL_RADIUS: usize = 3;
const BILATERAL_SPATIAL_SIGMA: f64 = 2.0;
const MEDIAN_MAX_PASSES: usize = 8;

fn median_pass(src: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    exec::fill_indexed(&mut out, |i| {
        let r = (i / w) as isize;
        let c = (i % w) as isize;
        let mut window = [0.0f64; 9];
        let mut k = 0;
        for dr in -1..=1 {
            for dc in -1..=1 {
                let rr = (r + dr).clamp(0, h as isize - 1) as usize;
                let cc = (c + dc).clamp(0, w as isize - 1) as usize;
                window[k] = src[rr * w + cc];
                k += 1;
            }
        }
        window.sort_by(|a, b| a.partial_cmp(b).unwrap());
        window[4]
    });
    out
}

fn bilateral_pass(src: &[f64], h: usize, w: usize, range_sigma: f64) -> Vec<f64> {
    let r2 = 2.0 * range_sigma * range_sigma;
    let s2 = 2.0 * BILATERAL_SPATIAL_SIGMA * BILATERAL_SPATIAL_SIGMA;
    let rad = BILATERAL_RADIUS as isize;
    let mut spatial = Vec::new();
    for dr in -rad..=rad {
        for dc in -rad..=rad {
            spatial.push((-((dr * dr + dc * dc) as f64) / s2).exp());
        }
    }
    let side = 2 * BILATERAL_RADIUS + 1;
    let mut out = vec![0.0; h * w];
    exec::fill_indexed(&mut out, |i| {
        let r = (i / w) as isize;
        let c = (i % w) as isize;
        let center = src[i];
        let mut num = 0.0;
        let mut den = 0.0;
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                let rr = (r + dr).clamp(0, h as isize - 1) as usize;
                let cc = (c + dc).clamp(0, w as isize - 1) as usize;
                let v = src[rr * w + cc];
                let dv = v - center;
                let wgt = spatial[((dr + rad) * side as isize + dc + rad) as usize]
                    * (-(dv * dv) / r2).exp();
                num += wgt * v;
                den += wgt;
            }
        }
        num / den
    });
    out
}

fn denoise_plane(plane: &mut Vec<f64>, h: usize, w: usize, d: &Denoiser) {
    match d.kind {
        DenoiserKind::Median => {
            let passes = (d.strength.ceil() as usize).clamp(1, MEDIAN_MAX_PASSES);
            for _ in 0..passes {
                *plane = median_pass(plane, h, w);
            }
        }
        DenoiserKind::Bilateral => {
            let range_sigma = (d.strength / 255.0).max(1e-6);
            *plane = bilateral_pass(plane, h, w, range_sigma);
        }
    }
}

/// Applies the prefilter to every spatial plane of the tensor.
pub fn denoise(t: &DenseTensor, d: &Denoiser) -> Result<DenseTensor> {
    d.validate()?;
    if d.strength == 0.0 {
        return Ok(t.clone());
    }
    let dims = t.dims().to_vec();
    let (h, w) = (dims[0], dims[1]);
    let channels = if dims.len() >= 3 { dims[2] } else { 1 };
    let frames = if dims.len() == 4 { dims[3] } else { 1 };
    let mut out = vec![0.0; t.len()];
    for f in 0..frames {
        for ch in 0..channels {
            let mut plane = vec![0.0; h * w];
            for r in 0..h {
                for c in 0..w {
                    let off = match dims.len() {
                        2 => r * w + c,
                        3 => (r * w + c) * channels + ch,
                        _ => ((r * w + c) * channels + ch) * frames + f,
                    };
                    plane[r * w + c] = t.data()[off];
                }
            }
            denoise_plane(&mut plane, h, w, d);
            for r in 0..h {
                for c in 0..w {
                    let off = match dims.len() {
                        2 => r * w + c,
                        3 => (r * w + c) * channels + ch,
                        _ => ((r * w + c) * channels + ch) * frames + f,
                    };
                    out[off] = plane[r * w + c];
                }
            }
        }
    }
    DenseTensor::new(dims, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_strength_is_identity() {
        let t = DenseTensor::from_fn(&[8, 8], |idx| ((idx[0] * 8 + idx[1]) as f64 * 0.37).fract())
            .unwrap();
        for kind in [Denoiser::median(0.0), Denoiser::bilateral(0.0)] {
            assert_eq!(denoise(&t, &kind).unwrap(), t);
        }
    }

    #[test]
    fn median_removes_an_impulse() {
        let mut data = vec![0.5; 81];
        data[4 * 9 + 4] = 1.0;
        let t = DenseTensor::new(vec![9, 9], data).unwrap();
        let out = denoise(&t, &Denoiser::median(1.0)).unwrap();
        assert_eq!(out.get(&[4, 4]), 0.5);
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn bilateral_reduces_noise_energy() {
        // Smooth ramp plus deterministic oscillation standing in for noise.
        let clean = DenseTensor::from_fn(&[24, 24], |idx| {
            0.2 + 0.6 * (idx[0] + idx[1]) as f64 / 48.0
        })
        .unwrap();
        let noisy = DenseTensor::from_fn(&[24, 24], |idx| {
            clean.get(idx) + 0.04 * (((idx[0] * 31 + idx[1] * 17) % 7) as f64 / 3.0 - 1.0)
        })
        .unwrap()
        .clamped_unit();
        let out = denoise(&noisy, &Denoiser::bilateral(25.0)).unwrap();
        let err_before: f64 = clean
            .data()
            .iter()
            .zip(noisy.data().iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        let err_after: f64 = clean
            .data()
            .iter()
            .zip(out.data().iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        assert!(
            err_after < 0.5 * err_before,
            "noise energy {err_after} not well below {err_before}"
        );
    }

    #[test]
    fn planes_stay_independent() {
        let t = DenseTensor::from_fn(&[10, 10, 2], |idx| {
            if idx[2] == 0 {
                0.25
            } else {
                ((idx[0] * 10 + idx[1]) as f64 * 0.41).fract()
            }
        })
        .unwrap();
        let out = denoise(&t, &Denoiser::bilateral(25.0)).unwrap();
        for r in 0..10 {
            for c in 0..10 {
                assert!((out.get(&[r, c, 0]) - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_strength_rejected() {
        let t = DenseTensor::zeros(&[8, 8]).unwrap();
        assert!(denoise(&t, &Denoiser::median(-1.0)).is_err());
        assert!(denoise(&t, &Denoiser::bilateral(f64::NAN)).is_err());
    }
}
