use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageF32;

/// Sliding p×p windows over an image. Anchors are (row, col) of the top
/// left corner, row-major; the last anchor on each axis sits flush with
/// the border.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
    pub stride: usize,
    pub anchors: Vec<(usize, usize)>,
    /// Number of patches covering each pixel, row-major.
    pub counts: Vec<u32>,
}

fn axis_anchors(dim: usize, p: usize, r: usize) -> Vec<usize> {
    let last = dim - p;
    let mut out: Vec<usize> = (0..=last).step_by(r).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch: usize, stride: usize) -> Result<Self> {
        if stride == 0 || patch <= stride {
            return Err(Error::param(format!(
                "need patch > stride >= 1, got patch {patch}, stride {stride}"
            )));
        }
        if width < patch || height < patch {
            return Err(Error::ImageTooSmall {
                width,
                height,
                min: patch,
            });
        }
        let rows = axis_anchors(height, patch, stride);
        let cols = axis_anchors(width, patch, stride);
        let anchors: Vec<(usize, usize)> = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
            .collect();
        let mut counts = vec![0u32; width * height];
        for &(r, c) in &anchors {
            for y in r..r + patch {
                for n in &mut counts[y * width + c..y * width + c + patch] {
                    *n += 1;
                }
            }
        }
        Ok(Self {
            width,
            height,
            patch,
            stride,
            anchors,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn crop(&self, img: &ImageF32, k: usize) -> ImageF32 {
        let (r, c) = self.anchors[k];
        img.crop(c, r, self.patch, self.patch)
    }
}

pub fn extract_patches(img: &ImageF32, patch: usize, stride: usize) -> Result<PatchGrid> {
    PatchGrid::new(img.width, img.height, patch, stride)
}

/// Per-pixel mean of the patch estimates covering it. Sums run in patch
/// index order.
pub fn fuse_noise_estimates(patch_eps: &[ImageF32], g: &PatchGrid) -> Result<ImageF32> {
    if patch_eps.len() != g.len() {
        return Err(Error::param(format!(
            "{} patch estimates for {} patches",
            patch_eps.len(),
            g.len()
        )));
    }
    let ch = patch_eps.first().map_or(1, |e| e.channels);
    let mut acc = vec![0.0f64; g.width * g.height * ch];
    for (e, &(r, c)) in patch_eps.iter().zip(&g.anchors) {
        if e.dims() != (g.patch, g.patch, ch) {
            return Err(Error::DimensionMismatch {
                left: e.dims(),
                right: (g.patch, g.patch, ch),
            });
        }
        for y in 0..g.patch {
            let dst = ((r + y) * g.width + c) * ch;
            let src = y * g.patch * ch;
            for (a, &v) in acc[dst..dst + g.patch * ch]
                .iter_mut()
                .zip(&e.data[src..src + g.patch * ch])
            {
                *a += v as f64;
            }
        }
    }
    let data = acc
        .iter()
        .enumerate()
        .map(|(i, &s)| (s / g.counts[i / ch] as f64) as f32)
        .collect();
    ImageF32::new(g.width, g.height, ch, data)
}

/// Writes one scalar per patch through the same overlap average, giving a
/// per-pixel field.
pub fn fuse_patch_scalars(values: &[f64], g: &PatchGrid) -> Result<Vec<f64>> {
    if values.len() != g.len() {
        return Err(Error::param(format!(
            "{} patch values for {} patches",
            values.len(),
            g.len()
        )));
    }
    let mut acc = vec![0.0f64; g.width * g.height];
    for (&v, &(r, c)) in values.iter().zip(&g.anchors) {
        for y in r..r + g.patch {
            for a in &mut acc[y * g.width + c..y * g.width + c + g.patch] {
                *a += v;
            }
        }
    }
    Ok(acc
        .iter()
        .zip(&g.counts)
        .map(|(s, &n)| s / n as f64)
        .collect())
}
