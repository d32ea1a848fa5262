//! Whole-image JPEG round trip: color transform, level shift, blockwise
//! DCT, quantization and the matching reconstruction. Chroma is never
//! subsampled, and partial edge blocks are filled by edge replication.

use rayon::prelude::*;

use super::dct::{dct2d, idct2d, Block8, BLOCK};
use super::quant::{
    dequantize, quant_table_for_qf, quantize, CoeffBlock, QuantTable, Rounding, TableKind,
};
use crate::error::{Error, Result};
use crate::image::color::{rgb_to_ycc, ycc_to_rgb};
use crate::image::{to_u8_sample, ImageU8};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JpegOptions {
    pub qf: u8,
    pub rounding: Rounding,
}

impl JpegOptions {
    pub fn new(qf: u8) -> Self {
        Self {
            qf,
            rounding: Rounding::Floor,
        }
    }
}

/// Quantized blocks of one component, row-major over the block grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffGrid {
    /// Index into [`JpegCoefficients::quant_tables`].
    pub table: usize,
    pub blocks_wide: usize,
    pub blocks_high: usize,
    pub blocks: Vec<CoeffBlock>,
}

impl CoeffGrid {
    pub fn block(&self, bx: usize, by: usize) -> &CoeffBlock {
        &self.blocks[by * self.blocks_wide + bx]
    }
}

/// Quantized DCT representation of an image: what a baseline JPEG file
/// stores, minus the entropy coding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JpegCoefficients {
    pub width: usize,
    pub height: usize,
    pub quant_tables: Vec<QuantTable>,
    pub components: Vec<CoeffGrid>,
}

#[derive(Debug, Clone)]
pub struct SimulatedJpeg {
    pub image: ImageU8,
    pub coefficients: JpegCoefficients,
}

pub(crate) fn block_grid(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(BLOCK), height.div_ceil(BLOCK))
}

/// Splits a plane into level-shifted 8×8 blocks, replicating the last
/// row/column into the padding.
fn plane_blocks(plane: &[f64], width: usize, height: usize) -> Vec<Block8> {
    let (bw, bh) = block_grid(width, height);
    let mut blocks = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut b = Block8::default();
            for r in 0..BLOCK {
                let y = (by * BLOCK + r).min(height - 1);
                for c in 0..BLOCK {
                    let x = (bx * BLOCK + c).min(width - 1);
                    b.0[r * BLOCK + c] = plane[y * width + x] - 128.0;
                }
            }
            blocks.push(b);
        }
    }
    blocks
}

pub fn simulate_jpeg(img: &ImageU8, opts: JpegOptions) -> Result<SimulatedJpeg> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::Empty("image"));
    }
    let luma = quant_table_for_qf(opts.qf, TableKind::Luma)?;
    let (planes, tables) = match img.channels {
        1 => (
            vec![img.data.iter().map(|&v| v as f64).collect::<Vec<_>>()],
            vec![luma],
        ),
        3 => {
            let mut planes: Vec<Vec<f64>> = (0..3)
                .map(|_| Vec::with_capacity(img.width * img.height))
                .collect();
            for px in img.data.chunks_exact(3) {
                let ycc = rgb_to_ycc(px[0] as f64, px[1] as f64, px[2] as f64, 128.0);
                for (p, v) in planes.iter_mut().zip(ycc) {
                    p.push(v);
                }
            }
            (
                planes,
                vec![luma, quant_table_for_qf(opts.qf, TableKind::Chroma)?],
            )
        }
        n => {
            return Err(Error::InvalidChannels {
                expected: "1 or 3",
                actual: n,
            })
        }
    };
    let (bw, bh) = block_grid(img.width, img.height);
    let components = planes
        .iter()
        .enumerate()
        .map(|(ci, plane)| {
            let table = usize::from(ci > 0);
            let q = &tables[table];
            let blocks = plane_blocks(plane, img.width, img.height)
                .par_iter()
                .map(|b| quantize(&dct2d(b), q, opts.rounding))
                .collect();
            CoeffGrid {
                table,
                blocks_wide: bw,
                blocks_high: bh,
                blocks,
            }
        })
        .collect();
    let coefficients = JpegCoefficients {
        width: img.width,
        height: img.height,
        quant_tables: tables,
        components,
    };
    let image = reconstruct(&coefficients)?;
    Ok(SimulatedJpeg {
        image,
        coefficients,
    })
}

/// Dequantize → IDCT → undo level shift → inverse color transform → round
/// and clamp. This is the decoder half of [`simulate_jpeg`].
pub fn reconstruct(coeffs: &JpegCoefficients) -> Result<ImageU8> {
    let (w, h) = (coeffs.width, coeffs.height);
    let nc = coeffs.components.len();
    if nc != 1 && nc != 3 {
        return Err(Error::InvalidChannels {
            expected: "1 or 3",
            actual: nc,
        });
    }
    let mut planes = Vec::with_capacity(nc);
    for grid in &coeffs.components {
        let q = coeffs
            .quant_tables
            .get(grid.table)
            .ok_or_else(|| Error::param(format!("missing quantization table {}", grid.table)))?;
        if grid.blocks_wide * BLOCK < w || grid.blocks_high * BLOCK < h {
            return Err(Error::param("coefficient grid does not cover the image"));
        }
        let spatial: Vec<Block8> = grid
            .blocks
            .par_iter()
            .map(|c| idct2d(&dequantize(c, q)))
            .collect();
        let mut plane = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let b = &spatial[(y / BLOCK) * grid.blocks_wide + x / BLOCK];
                plane[y * w + x] = b.at(y % BLOCK, x % BLOCK) + 128.0;
            }
        }
        planes.push(plane);
    }
    let mut data = Vec::with_capacity(w * h * nc);
    if nc == 1 {
        data.extend(planes[0].iter().map(|&v| to_u8_sample(v)));
    } else {
        for i in 0..w * h {
            let rgb = ycc_to_rgb(planes[0][i], planes[1][i], planes[2][i], 128.0);
            data.extend(rgb.iter().map(|&v| to_u8_sample(v)));
        }
    }
    ImageU8::new(w, h, nc, data)
}

/// Per-channel absolute difference on the unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl LossMap {
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
    }

    /// Mean over channels at each pixel.
    pub fn pixel_means(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.channels)
            .map(|px| px.iter().map(|&v| v as f64).sum::<f64>() / self.channels as f64)
            .collect()
    }

    pub fn to_image(&self) -> crate::image::ImageF32 {
        crate::image::ImageF32 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.clone(),
        }
    }
}

pub fn loss_map(orig: &ImageU8, compressed: &ImageU8) -> Result<LossMap> {
    if orig.dims() != compressed.dims() {
        return Err(Error::DimensionMismatch {
            left: orig.dims(),
            right: compressed.dims(),
        });
    }
    Ok(LossMap {
        width: orig.width,
        height: orig.height,
        channels: orig.channels,
        data: orig
            .data
            .iter()
            .zip(&compressed.data)
            .map(|(&a, &b)| (a as f32 - b as f32).abs() / 255.0)
            .collect(),
    })
}
