//! Structural similarity (SSIM) and gradient coherence (GC) between a
//! reference tensor and a recovered one, with channel and frame dispatch.
//!
//! SSIM uses the standard 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
//! K2 = 0.03) on unit-range data and averages over valid window positions.
//! Planes smaller than the window fall back to one global-statistics value,
//! reported through `global_ssim_window`.
//!
//! GC is the squared Frobenius distance between the stacked gradients of
//! the two tensors, divided by the tensor element count. Lower is better;
//! zero means the gradients agree exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::gradient::{self, DerivativeFilter};
use crate::tensor::DenseTensor;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Dynamic range of the unit-scaled samples.
pub const SSIM_L: f64 = 1.0;

const C1: f64 = (SSIM_K1 * SSIM_L) * (SSIM_K1 * SSIM_L);
const C2: f64 = (SSIM_K2 * SSIM_L) * (SSIM_K2 * SSIM_L);

#[derive(Debug, Clone, Serialize)]
pub struct ChannelMetrics {
    pub channel: usize,
    pub ssim: f64,
    pub gc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub ssim: f64,
    pub gc: f64,
    /// True when any compared plane was smaller than the 11x11 window and
    /// global statistics replaced windowed ones.
    pub global_ssim_window: bool,
    /// Per-channel breakdown for multi-channel inputs; empty otherwise.
    pub per_channel: Vec<ChannelMetrics>,
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (k, t) in taps.iter_mut().enumerate() {
        let d = k as f64 - mid;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *t;
    }
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// Separable valid-mode blur: horizontal then vertical pass, each shrinking
/// the plane by `SSIM_WINDOW - 1`.
fn blur_valid(src: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let wv = w - (SSIM_WINDOW - 1);
    let hv = h - (SSIM_WINDOW - 1);
    let mut horiz = vec![0.0; h * wv];
    exec::fill_indexed(&mut horiz, |i| {
        let r = i / wv;
        let c = i % wv;
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            acc += t * src[r * w + c + k];
        }
        acc
    });
    let mut out = vec![0.0; hv * wv];
    exec::fill_indexed(&mut out, |i| {
        let r = i / wv;
        let c = i % wv;
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            acc += t * horiz[(r + k) * wv + c];
        }
        acc
    });
    out
}

/// Windowed SSIM between two equally sized planes. Returns the score and
/// whether the global fallback was used.
pub fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize) -> Result<(f64, bool)> {
    if a.len() != h * w || b.len() != h * w {
        return Err(Error::DimensionMismatch(format!(
            "plane buffers {}x{} vs lengths {} and {}",
            h,
            w,
            a.len(),
            b.len()
        )));
    }
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        let n = (h * w) as f64;
        let mean_a = a.iter().sum::<f64>() / n;
        let mean_b = b.iter().sum::<f64>() / n;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        let mut cov = 0.0;
        for i in 0..a.len() {
            let da = a[i] - mean_a;
            let db = b[i] - mean_b;
            var_a += da * da;
            var_b += db * db;
            cov += da * db;
        }
        var_a /= n;
        var_b /= n;
        cov /= n;
        let s = ((2.0 * mean_a * mean_b + C1) * (2.0 * cov + C2))
            / ((mean_a * mean_a + mean_b * mean_b + C1) * (var_a + var_b + C2));
        return Ok((s, true));
    }

    let taps = gaussian_taps();
    let sq = |x: &[f64]| {
        let mut out = vec![0.0; x.len()];
        exec::fill_indexed(&mut out, |i| x[i] * x[i]);
        out
    };
    let prod = {
        let mut out = vec![0.0; a.len()];
        exec::fill_indexed(&mut out, |i| a[i] * b[i]);
        out
    };
    let mu_a = blur_valid(a, h, w, &taps);
    let mu_b = blur_valid(b, h, w, &taps);
    let e_aa = blur_valid(&sq(a), h, w, &taps);
    let e_bb = blur_valid(&sq(b), h, w, &taps);
    let e_ab = blur_valid(&prod, h, w, &taps);

    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let ma = mu_a[i];
        let mb = mu_b[i];
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cab = e_ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + C1) * (2.0 * cab + C2))
            / ((ma * ma + mb * mb + C1) * (va + vb + C2));
    }
    Ok((sum / mu_a.len() as f64, false))
}

/// SSIM between two order-2 tensors.
pub fn ssim(reference: &DenseTensor, recovered: &DenseTensor) -> Result<f64> {
    reference.check_same_dims(recovered)?;
    if reference.order() != 2 {
        return Err(Error::InvalidShape(format!(
            "ssim expects an order-2 tensor, got order {}; use evaluate for channel dispatch",
            reference.order()
        )));
    }
    let (h, w) = (reference.dims()[0], reference.dims()[1]);
    ssim_plane(reference.data(), recovered.data(), h, w).map(|(s, _)| s)
}

/// Gradient coherence: `||grad(reference) - grad(recovered)||_F^2` divided
/// by the tensor element count.
pub fn gc(
    reference: &DenseTensor,
    recovered: &DenseTensor,
    axes: &[usize],
    filter: &DerivativeFilter,
) -> Result<f64> {
    reference.check_same_dims(recovered)?;
    let ga = gradient::gradient(reference, axes, filter)?.stack();
    let gb = gradient::gradient(recovered, axes, filter)?.stack();
    let mut sum = 0.0;
    for (x, y) in ga.data().iter().zip(gb.data().iter()) {
        let d = x - y;
        sum += d * d;
    }
    Ok(sum / reference.len() as f64)
}

/// Extracts the `[h, w]` plane at channel `c` (order 3) or channel `c`,
/// frame `t` (order 4).
fn plane_at(t: &DenseTensor, c: usize, frame: usize) -> Vec<f64> {
    let dims = t.dims();
    let (h, w) = (dims[0], dims[1]);
    let mut out = vec![0.0; h * w];
    match t.order() {
        3 => {
            for r in 0..h {
                for q in 0..w {
                    out[r * w + q] = t.get(&[r, q, c]);
                }
            }
        }
        4 => {
            for r in 0..h {
                for q in 0..w {
                    out[r * w + q] = t.get(&[r, q, c, frame]);
                }
            }
        }
        _ => unreachable!("plane_at used on order-2 tensor"),
    }
    out
}

/// Luma plane: Rec.601 weights for three channels, channel mean otherwise.
fn luma_plane(t: &DenseTensor, frame: usize) -> Vec<f64> {
    let dims = t.dims();
    let channels = dims[2];
    let (h, w) = (dims[0], dims[1]);
    if channels == 3 {
        let r = plane_at(t, 0, frame);
        let g = plane_at(t, 1, frame);
        let b = plane_at(t, 2, frame);
        let mut out = vec![0.0; h * w];
        exec::fill_indexed(&mut out, |i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
        out
    } else {
        let mut out = vec![0.0; h * w];
        for c in 0..channels {
            let p = plane_at(t, c, frame);
            for (o, &x) in out.iter_mut().zip(p.iter()) {
                *o += x;
            }
        }
        for o in out.iter_mut() {
            *o /= channels as f64;
        }
        out
    }
}

/// Channel sub-tensor with the same order and a channel extent of one.
fn channel_slice(t: &DenseTensor, c: usize) -> Result<DenseTensor> {
    let dims = t.dims();
    match t.order() {
        3 => DenseTensor::from_fn(&[dims[0], dims[1], 1], |idx| t.get(&[idx[0], idx[1], c])),
        4 => DenseTensor::from_fn(&[dims[0], dims[1], 1, dims[3]], |idx| {
            t.get(&[idx[0], idx[1], c, idx[3]])
        }),
        _ => unreachable!("channel_slice used on order-2 tensor"),
    }
}

/// Full report: SSIM with channel/frame dispatch, GC over the gradient
/// axes, and a per-channel breakdown for multi-channel inputs.
///
/// * order 2: one plane, straight SSIM and GC.
/// * order 3 `[h, w, c]`: SSIM on the luma plane, GC on the full tensor.
/// * order 4 `[h, w, c, t]`: SSIM averaged over per-frame luma planes, GC
///   on the full tensor (including the temporal axis if selected).
pub fn evaluate(
    reference: &DenseTensor,
    recovered: &DenseTensor,
    axes: &[usize],
    filter: &DerivativeFilter,
) -> Result<MetricsReport> {
    reference.check_same_dims(recovered)?;
    let dims = reference.dims();
    let (h, w) = (dims[0], dims[1]);
    let gc_all = gc(reference, recovered, axes, filter)?;

    match reference.order() {
        2 => {
            let (s, global) = ssim_plane(reference.data(), recovered.data(), h, w)?;
            Ok(MetricsReport {
                ssim: s,
                gc: gc_all,
                global_ssim_window: global,
                per_channel: Vec::new(),
            })
        }
        3 | 4 => {
            let channels = dims[2];
            let frames = if reference.order() == 4 { dims[3] } else { 1 };
            let mut global = false;
            let mut ssim_sum = 0.0;
            for f in 0..frames {
                let (s, g) = ssim_plane(&luma_plane(reference, f), &luma_plane(recovered, f), h, w)?;
                ssim_sum += s;
                global |= g;
            }
            let mut per_channel = Vec::new();
            if channels > 1 {
                for c in 0..channels {
                    let ref_c = channel_slice(reference, c)?;
                    let rec_c = channel_slice(recovered, c)?;
                    let mut cs = 0.0;
                    for f in 0..frames {
                        let (s, g) = ssim_plane(
                            &plane_at(reference, c, f),
                            &plane_at(recovered, c, f),
                            h,
                            w,
                        )?;
                        cs += s;
                        global |= g;
                    }
                    per_channel.push(ChannelMetrics {
                        channel: c,
                        ssim: cs / frames as f64,
                        gc: gc(&ref_c, &rec_c, axes, filter)?,
                    });
                }
            }
            Ok(MetricsReport {
                ssim: ssim_sum / frames as f64,
                gc: gc_all,
                global_ssim_window: global,
                per_channel,
            })
        }
        _ => unreachable!("tensor order outside 2..=4"),
    }
}
