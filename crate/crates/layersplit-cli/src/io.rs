//! Image and frame-directory codecs. Everything decodes to unit-range
//! f64 tensors ([h, w] gray, [h, w, 3] color, [h, w, c, t] video) and
//! encodes back through 8-bit or 16-bit PNG.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb};
use layersplit::tensor::DenseTensor;

/// Decoded still image plus what it was.
pub struct LoadedImage {
    pub tensor: DenseTensor,
    pub color: bool,
}

pub fn load_image(path: &Path) -> Result<LoadedImage> {
    let img = ImageReader::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?
        .decode()
        .with_context(|| format!("cannot decode {}", path.display()))?;
    decode(img).with_context(|| format!("unsupported content in {}", path.display()))
}

fn decode(img: DynamicImage) -> Result<LoadedImage> {
    let color = match img.color() {
        image::ColorType::L8 | image::ColorType::L16 => false,
        _ => true,
    };
    let deep = matches!(
        img.color(),
        image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    let tensor = match (color, deep) {
        (true, false) => {
            let rgb = img.to_rgb8();
            DenseTensor::from_fn(&[h, w, 3], |idx| {
                rgb.get_pixel(idx[1] as u32, idx[0] as u32).0[idx[2]] as f64 / 255.0
            })?
        }
        (true, true) => {
            let rgb = img.to_rgb16();
            DenseTensor::from_fn(&[h, w, 3], |idx| {
                rgb.get_pixel(idx[1] as u32, idx[0] as u32).0[idx[2]] as f64 / 65535.0
            })?
        }
        (false, false) => {
            let gray = img.to_luma8();
            DenseTensor::from_fn(&[h, w], |idx| {
                gray.get_pixel(idx[1] as u32, idx[0] as u32).0[0] as f64 / 255.0
            })?
        }
        (false, true) => {
            let gray = img.to_luma16();
            DenseTensor::from_fn(&[h, w], |idx| {
                gray.get_pixel(idx[1] as u32, idx[0] as u32).0[0] as f64 / 65535.0
            })?
        }
    };
    Ok(LoadedImage { tensor, color })
}

/// Frame files of a video directory in numeric-then-lexical order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read frame directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg" | "pgm" | "ppm"))
                .unwrap_or(false)
        })
        .collect();
    if frames.is_empty() {
        bail!("no frames found in {}", dir.display());
    }
    // Numbered frames sort by their number so frame_10 follows frame_9.
    let key = |p: &PathBuf| -> (u64, String) {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
        let n = digits.chars().rev().collect::<String>().parse().unwrap_or(u64::MAX);
        (n, stem)
    };
    frames.sort_by_key(key);
    Ok(frames)
}

/// Stacks a frame directory into an order-4 tensor [h, w, c, t]; grayscale
/// video keeps a channel extent of one. Mixed sizes or modes are an error.
pub fn load_video(dir: &Path) -> Result<LoadedImage> {
    let frames = list_frames(dir)?;
    let first = load_image(&frames[0])?;
    let (h, w) = (first.tensor.dims()[0], first.tensor.dims()[1]);
    let c = if first.color { 3 } else { 1 };
    let mut planes = Vec::with_capacity(frames.len());
    for f in &frames {
        let img = load_image(f)?;
        if img.color != first.color || img.tensor.dims()[..2] != [h, w] {
            bail!(
                "frame {} does not match the first frame's size or mode",
                f.display()
            );
        }
        planes.push(img.tensor);
    }
    let t = planes.len();
    let tensor = DenseTensor::from_fn(&[h, w, c, t], |idx| {
        let p = &planes[idx[3]];
        if first.color {
            p.get(&[idx[0], idx[1], idx[2]])
        } else {
            p.get(&[idx[0], idx[1]])
        }
    })?;
    Ok(LoadedImage {
        tensor,
        color: first.color,
    })
}

fn to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn to_u16(x: f64) -> u16 {
    (x.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// 8-bit PNG of a [h, w] or [h, w, 3] tensor.
pub fn save_image8(t: &DenseTensor, path: &Path) -> Result<()> {
    let dims = t.dims();
    let (h, w) = (dims[0] as u32, dims[1] as u32);
    match t.order() {
        2 => {
            let buf = ImageBuffer::from_fn(w, h, |x, y| {
                Luma([to_u8(t.get(&[y as usize, x as usize]))])
            });
            buf.save(path)?;
        }
        3 => {
            let buf = ImageBuffer::from_fn(w, h, |x, y| {
                Rgb([
                    to_u8(t.get(&[y as usize, x as usize, 0])),
                    to_u8(t.get(&[y as usize, x as usize, 1])),
                    to_u8(t.get(&[y as usize, x as usize, 2])),
                ])
            });
            buf.save(path)?;
        }
        _ => bail!("cannot encode an order-{} tensor as one image", t.order()),
    }
    Ok(())
}

/// 16-bit PNG, same shapes.
pub fn save_image16(t: &DenseTensor, path: &Path) -> Result<()> {
    let dims = t.dims();
    let (h, w) = (dims[0] as u32, dims[1] as u32);
    match t.order() {
        2 => {
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
                Luma([to_u16(t.get(&[y as usize, x as usize]))])
            });
            buf.save(path)?;
        }
        3 => {
            let buf: ImageBuffer<Rgb<u16>, Vec<u16>> = ImageBuffer::from_fn(w, h, |x, y| {
                Rgb([
                    to_u16(t.get(&[y as usize, x as usize, 0])),
                    to_u16(t.get(&[y as usize, x as usize, 1])),
                    to_u16(t.get(&[y as usize, x as usize, 2])),
                ])
            });
            buf.save(path)?;
        }
        _ => bail!("cannot encode an order-{} tensor as one image", t.order()),
    }
    Ok(())
}

/// One frame of an order-4 tensor as an order-2/3 view.
pub fn frame_of(t: &DenseTensor, frame: usize, color: bool) -> Result<DenseTensor> {
    let dims = t.dims();
    let out = if color {
        DenseTensor::from_fn(&[dims[0], dims[1], 3], |idx| t.get(&[idx[0], idx[1], idx[2], frame]))?
    } else {
        DenseTensor::from_fn(&[dims[0], dims[1]], |idx| t.get(&[idx[0], idx[1], 0, frame]))?
    };
    Ok(out)
}

/// Writes every frame of an order-4 tensor as `frame_NNN.png` under `dir`,
/// 8-bit or 16-bit per `deep`.
pub fn save_video(t: &DenseTensor, dir: &Path, color: bool, deep: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let frames = t.dims()[3];
    let mut written = Vec::with_capacity(frames);
    for f in 0..frames {
        let frame = frame_of(t, f, color)?;
        let path = dir.join(format!("frame_{f:03}.png"));
        if deep {
            save_image16(&frame, &path)?;
        } else {
            save_image8(&frame, &path)?;
        }
        written.push(path);
    }
    Ok(written)
}
