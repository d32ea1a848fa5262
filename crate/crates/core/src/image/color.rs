//! Full-range JFIF YCbCr. Chroma is offset to 0.5 on the unit scale.
//!
//! The forward transform is written in its defining form
//! (`Cb = (B − Y) / (2(1 − Kb)) + ½`) rather than with the rounded decimal
//! matrix, so the inverse below is exact up to float rounding.

use super::ImageF32;
use crate::error::{Error, Result};

pub const KR: f64 = 0.299;
pub const KG: f64 = 0.587;
pub const KB: f64 = 0.114;

#[inline]
pub(crate) fn rgb_to_ycc(r: f64, g: f64, b: f64, offset: f64) -> [f64; 3] {
    let y = KR * r + KG * g + KB * b;
    let cb = (b - y) / (2.0 * (1.0 - KB)) + offset;
    let cr = (r - y) / (2.0 * (1.0 - KR)) + offset;
    [y, cb, cr]
}

#[inline]
pub(crate) fn ycc_to_rgb(y: f64, cb: f64, cr: f64, offset: f64) -> [f64; 3] {
    let r = y + 2.0 * (1.0 - KR) * (cr - offset);
    let b = y + 2.0 * (1.0 - KB) * (cb - offset);
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

fn map3(img: &ImageF32, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Result<ImageF32> {
    if img.channels != 3 {
        return Err(Error::InvalidChannels {
            expected: "3",
            actual: img.channels,
        });
    }
    let mut data = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(3) {
        let out = f(px[0] as f64, px[1] as f64, px[2] as f64);
        data.extend(out.iter().map(|&v| v as f32));
    }
    Ok(ImageF32 {
        data,
        ..img.clone()
    })
}

pub fn rgb_to_ycbcr(img: &ImageF32) -> Result<ImageF32> {
    map3(img, |r, g, b| rgb_to_ycc(r, g, b, 0.5))
}

pub fn ycbcr_to_rgb(img: &ImageF32) -> Result<ImageF32> {
    map3(img, |y, cb, cr| ycc_to_rgb(y, cb, cr, 0.5))
}
