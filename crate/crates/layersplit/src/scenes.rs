//! Deterministic procedural scenes for tests, benchmarks, and demos.
//!
//! Everything here is a pure function of its arguments: the noise comes
//! from an integer hash, so the same call returns the same tensor on every
//! platform and run. The scenes split into two families used throughout
//! the test suite: plainly synthetic content (flat patches, geometric
//! shapes, ramps) and photographic-style content (landscapes and portraits
//! with smooth shading plus fine texture).

use crate::tensor::DenseTensor;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash2(ix: i64, iy: i64, seed: u64) -> u64 {
    splitmix(seed ^ splitmix(ix as u64 ^ splitmix(iy as u64)))
}

/// Uniform value in [0, 1) from a lattice point.
fn lattice(ix: i64, iy: i64, seed: u64) -> f64 {
    (hash2(ix, iy, seed) >> 11) as f64 / (1u64 << 53) as f64
}

fn smootherstep(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Bilinear value noise at continuous coordinates, lattice spacing `cell`.
fn value_noise(x: f64, y: f64, cell: f64, seed: u64) -> f64 {
    let gx = x / cell;
    let gy = y / cell;
    let ix = gx.floor() as i64;
    let iy = gy.floor() as i64;
    let fx = smootherstep(gx - gx.floor());
    let fy = smootherstep(gy - gy.floor());
    let v00 = lattice(ix, iy, seed);
    let v10 = lattice(ix + 1, iy, seed);
    let v01 = lattice(ix, iy + 1, seed);
    let v11 = lattice(ix + 1, iy + 1, seed);
    let a = v00 + (v10 - v00) * fx;
    let b = v01 + (v11 - v01) * fx;
    a + (b - a) * fy
}

/// Several octaves of value noise, normalized to roughly [0, 1].
pub fn fbm(x: f64, y: f64, base_cell: f64, octaves: usize, seed: u64) -> f64 {
    let mut amp = 1.0;
    let mut cell = base_cell;
    let mut sum = 0.0;
    let mut norm = 0.0;
    for o in 0..octaves {
        sum += amp * value_noise(x, y, cell, seed.wrapping_add(o as u64 * 0x51ed));
        norm += amp;
        amp *= 0.5;
        cell *= 0.5;
    }
    sum / norm
}

/// Diagonal ramp with a gentle sinusoidal swell; entirely smooth.
pub fn smooth_ramp(h: usize, w: usize) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 / h as f64;
        let x = idx[1] as f64 / w as f64;
        0.15 + 0.55 * (0.6 * x + 0.4 * y) + 0.12 * (3.1 * x).sin() * (2.3 * y).cos() + 0.12
    })
    .unwrap()
    .clamped_unit()
}

/// Piecewise-constant rectangles of random gray levels; hard edges off the
/// 8-grid so compression seams are distinguishable from content.
pub fn flat_patches(h: usize, w: usize, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let zr = idx[0] / 11;
        let zc = idx[1] / 13;
        0.1 + 0.8 * lattice(zr as i64, zc as i64, seed)
    })
    .unwrap()
}

/// Circles, stripes, and a checker corner on a mid-gray ground.
pub fn geometric(h: usize, w: usize) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 + 0.5;
        let x = idx[1] as f64 + 0.5;
        let hh = h as f64;
        let ww = w as f64;
        let mut v = 0.45;
        let d1 = ((x - 0.3 * ww).powi(2) + (y - 0.35 * hh).powi(2)).sqrt();
        if d1 < 0.18 * ww.min(hh) {
            v = 0.9;
        }
        let d2 = ((x - 0.72 * ww).powi(2) + (y - 0.62 * hh).powi(2)).sqrt();
        if d2 < 0.13 * ww.min(hh) {
            v = 0.12;
        }
        if y > 0.8 * hh && (x / 6.0) as usize % 2 == 0 {
            v = 0.7;
        }
        if x > 0.78 * ww && y < 0.22 * hh {
            v = if ((x / 5.0) as usize + (y / 5.0) as usize) % 2 == 0 {
                0.25
            } else {
                0.75
            };
        }
        v
    })
    .unwrap()
}

/// Low-contrast rectangles with soft edges: a gentler cousin of
/// `flat_patches` whose zone borders ramp over a few pixels.
pub fn soft_patches(h: usize, w: usize, seed: u64) -> DenseTensor {
    let ramp = 4.0;
    DenseTensor::from_fn(&[h, w], |idx| {
        let fy = idx[0] as f64 / 21.0;
        let fx = idx[1] as f64 / 26.0;
        let zr = fy.floor();
        let zc = fx.floor();
        // Blend the four surrounding zone levels with smooth weights so the
        // borders are ramps of width ~`ramp` pixels instead of steps.
        let wy = smootherstep(((fy - zr) * 21.0 / ramp).clamp(0.0, 1.0));
        let wx = smootherstep(((fx - zc) * 26.0 / ramp).clamp(0.0, 1.0));
        let level = |r: f64, c: f64| lattice(r as i64, c as i64, seed);
        let top = level(zr - 1.0, zc - 1.0) * (1.0 - wx) + level(zr - 1.0, zc) * wx;
        let bot = level(zr, zc - 1.0) * (1.0 - wx) + level(zr, zc) * wx;
        0.38 + 0.24 * (top * (1.0 - wy) + bot * wy)
    })
    .unwrap()
}

/// Smooth radial bumps of varying size and sign over a sloped ground.
pub fn soft_blobs(h: usize, w: usize, seed: u64) -> DenseTensor {
    let mut centers = Vec::new();
    let mut key = splitmix(seed ^ 0x0b10b5);
    for _ in 0..6 {
        let cx = (key >> 13) as f64 / (1u64 << 51) as f64;
        key = splitmix(key);
        let cy = (key >> 13) as f64 / (1u64 << 51) as f64;
        key = splitmix(key);
        let r = 0.08 + 0.1 * ((key >> 13) as f64 / (1u64 << 51) as f64);
        key = splitmix(key);
        let amp = if key & 1 == 0 { 0.3 } else { -0.22 };
        key = splitmix(key);
        centers.push((cx, cy, r, amp));
    }
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 / h as f64;
        let x = idx[1] as f64 / w as f64;
        let mut v = 0.35 + 0.2 * x + 0.1 * y;
        for &(cx, cy, r, amp) in &centers {
            let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            if d < r {
                v += amp * smootherstep(1.0 - d / r);
            }
        }
        v
    })
    .unwrap()
    .clamped_unit()
}

/// Geometric shapes with antialiased borders a few pixels wide and
/// moderate contrast, on a sloped ground.
pub fn soft_geometric(h: usize, w: usize) -> DenseTensor {
    let hh = h as f64;
    let ww = w as f64;
    let edge = 4.0;
    // Signed-distance blend toward `target` within `edge` pixels of d = 0.
    let blend = |v: f64, target: f64, d: f64| {
        let t = smootherstep(((-d / edge) * 0.5 + 0.5).clamp(0.0, 1.0));
        v + (target - v) * t
    };
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 + 0.5;
        let x = idx[1] as f64 + 0.5;
        let mut v = 0.42 + 0.12 * (x / ww) + 0.06 * (y / hh);
        let d1 = ((x - 0.3 * ww).powi(2) + (y - 0.35 * hh).powi(2)).sqrt() - 0.2 * ww.min(hh);
        v = blend(v, 0.72, d1);
        let d2 = ((x - 0.7 * ww).powi(2) + (y - 0.68 * hh).powi(2)).sqrt() - 0.14 * ww.min(hh);
        v = blend(v, 0.26, d2);
        let d3 = (y - 0.85 * hh).abs() - 0.05 * hh;
        v = blend(v, 0.60, d3);
        v
    })
    .unwrap()
    .clamped_unit()
}

/// Regular lattice of smooth bumps over a tilted ground.
pub fn bump_grid(h: usize, w: usize) -> DenseTensor {
    let period = 52.0;
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64;
        let x = idx[1] as f64;
        let cy = (y / period).fract() - 0.5;
        let cx = (x / period).fract() - 0.5;
        let d = (cx * cx + cy * cy).sqrt() * 2.2;
        let bump = smootherstep((1.0 - d).clamp(0.0, 1.0));
        0.35 + 0.1 * (x / w as f64) + 0.08 * (y / h as f64) + 0.2 * bump
    })
    .unwrap()
    .clamped_unit()
}

/// Two crossed smooth wave systems: band-limited, edge-free content.
pub fn waves(h: usize, w: usize) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64;
        let x = idx[1] as f64;
        let a = (0.31 * x + 0.13 * y) * std::f64::consts::TAU / 24.0;
        let b = (0.09 * x - 0.24 * y) * std::f64::consts::TAU / 31.0;
        0.5 + 0.16 * a.sin() + 0.12 * b.sin() + 0.06 * (a + b).cos()
    })
    .unwrap()
    .clamped_unit()
}

/// Photographic-style dune field: layered smooth ridges under raking
/// light, with a faint large-scale undulation on the slopes.
pub fn dunes(h: usize, w: usize, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 / h as f64;
        let px = idx[1] as f64;
        let py = idx[0] as f64;
        let crest = value_noise(px + 31.0 * py / h as f64, 3.0, w as f64 / 2.5, seed ^ 0xd1);
        let phase = 6.28 * (1.8 * y + 0.7 * crest);
        // Asymmetric ridge profile: slow lit slope, faster shaded slope.
        let s = phase.sin();
        let profile = if s > 0.0 { s.powf(0.85) } else { -(-s).powf(1.3) };
        let slope = 0.08 * value_noise(px, py * 0.3, w as f64 / 5.0, seed ^ 0xd2);
        (0.52 + 0.16 * profile + 0.12 * (1.0 - y) + slope).clamp(0.0, 1.0)
    })
    .unwrap()
}

/// Band-limited multi-octave texture around mid-gray.
pub fn texture_field(h: usize, w: usize, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64;
        let x = idx[1] as f64;
        0.2 + 0.6 * fbm(x, y, 24.0, 4, seed)
    })
    .unwrap()
    .clamped_unit()
}

/// Photographic-style landscape: sky gradient, a noisy ridge line, darker
/// terrain with fine texture, and a soft bright disk in the sky.
pub fn landscape(h: usize, w: usize, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 / h as f64;
        let x = idx[1] as f64 / w as f64;
        let px = idx[1] as f64;
        let ridge = 0.45
            + 0.12 * value_noise(px, 0.0, w as f64 / 3.0, seed ^ 0xa5a5)
            + 0.05 * value_noise(px, 7.0, w as f64 / 9.0, seed ^ 0x5a5a);
        // Sky: bright near the horizon, darker overhead.
        let sky = 0.82 - 0.32 * (ridge - y).max(0.0) / ridge;
        // Terrain: haze-lifted at the horizon, darker with depth, mildly
        // textured. The grain sits at a scale block compression mostly
        // spares; anything finer is gone from the observation either way.
        let tex = value_noise(px, idx[0] as f64, 26.0, seed);
        let ground = 0.56 - 0.30 * (y - ridge).max(0.0) + 0.035 * tex;
        // The horizon transitions over a few pixels, as a band-limited
        // capture would; a pixel-sharp step here is a scanner artifact,
        // not optics.
        let soft = 2.0 / h as f64;
        let t = smootherstep(((y - ridge + soft) / (2.0 * soft)).clamp(0.0, 1.0));
        let mut v = sky + (ground - sky) * t;
        let dx = x - 0.75;
        let dy = y - 0.18;
        let d = (dx * dx + dy * dy).sqrt();
        if d < 0.09 {
            v += 0.25 * (1.0 - d / 0.09);
        }
        v
    })
    .unwrap()
    .clamped_unit()
}

/// Photographic-style portrait: a soft elliptical subject over a vignetted
/// background, with mild skin-scale texture and a hair-side shadow.
pub fn portrait(h: usize, w: usize, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(&[h, w], |idx| {
        let y = idx[0] as f64 / h as f64;
        let x = idx[1] as f64 / w as f64;
        let dx = (x - 0.5) / 0.28;
        let dy = (y - 0.42) / 0.38;
        let r = (dx * dx + dy * dy).sqrt();
        let bg = 0.28 + 0.1 * (1.0 - ((x - 0.5).abs() + (y - 0.5).abs()))
            + 0.05 * fbm(idx[1] as f64, idx[0] as f64, 40.0, 3, seed ^ 0x77);
        let subject = 0.72 - 0.1 * r
            + 0.05 * fbm(idx[1] as f64, idx[0] as f64, 9.0, 3, seed)
            - if x < 0.38 && y < 0.55 { 0.22 } else { 0.0 };
        let blend = smootherstep((1.15 - r).clamp(0.0, 1.0));
        bg + (subject - bg) * blend
    })
    .unwrap()
    .clamped_unit()
}

/// Three-channel landscape: correlated channels with a warm sky and cool
/// terrain, shaped `[h, w, 3]`.
pub fn color_landscape(h: usize, w: usize, seed: u64) -> DenseTensor {
    let base = landscape(h, w, seed);
    DenseTensor::from_fn(&[h, w, 3], |idx| {
        let v = base.get(&[idx[0], idx[1]]);
        let y = idx[0] as f64 / h as f64;
        match idx[2] {
            0 => (v * 1.08 + 0.04 * (1.0 - y)).min(1.0),
            1 => v,
            _ => (v * 0.92 + 0.08 * y).min(1.0),
        }
    })
    .unwrap()
    .clamped_unit()
}

/// Adds zero-mean Gaussian noise of the given standard deviation (unit
/// scale) and clamps back to the unit range.
pub fn with_noise(t: &DenseTensor, sigma: f64, seed: u64) -> DenseTensor {
    DenseTensor::from_fn(t.dims(), |idx| {
        let mut key = seed;
        for &i in idx {
            key = splitmix(key ^ i as u64);
        }
        let u1 = ((splitmix(key) >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
        let u2 = (splitmix(key ^ 0xdead_beef) >> 11) as f64 / (1u64 << 53) as f64;
        let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        t.get(idx) + sigma * n
    })
    .unwrap()
    .clamped_unit()
}
