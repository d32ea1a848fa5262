//! Log-domain DCT representation of images and the split of a compressed
//! image into a compression-effect spectrum and a corrected image.
//!
//! A compressed image is modelled as an elementwise product
//! `I_c + δ = φ ⊙ (I + δ)`. After the logarithm and the fixed affine
//! normalization the product becomes a sum, so blockwise DCTs add:
//! `D(I_c) = D(φ) + D(I)`. The spectrum `D(φ)` is normalized by the scale
//! alone (no offset), which keeps the sum exact on every band.

use std::path::PathBuf;
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageF32, Tensor};
use crate::jpeg::{dct2d, idct2d, simulate_jpeg, Block8, JpegOptions, BLOCK};

pub const DELTA: f64 = 1.0 / 255.0;
pub const CHARBONNIER_EPS: f64 = 1e-3;
/// Largest off-DC violation of D₁ = D₂ + D₃ a decomposer may produce.
pub const INTERFACE_TOLERANCE: f64 = 1e-3;
pub const PHI_MIN: f64 = 1.0 / 64.0;
pub const PHI_MAX: f64 = 64.0;

/// Normalization constants of the log domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNorm {
    pub delta: f64,
    pub offset: f64,
    pub scale: f64,
}

impl Default for LogNorm {
    fn default() -> Self {
        let offset = DELTA.ln();
        Self {
            delta: DELTA,
            offset,
            scale: (1.0 + DELTA).ln() - offset,
        }
    }
}

impl LogNorm {
    /// Same scale, zero offset: used for ratio fields such as φ.
    pub fn ratio(&self) -> Self {
        Self {
            offset: 0.0,
            ..*self
        }
    }

    #[inline]
    fn forward(&self, x: f64) -> f64 {
        ((x + self.delta).ln() - self.offset) / self.scale
    }

    #[inline]
    fn inverse(&self, v: f64) -> f64 {
        (v * self.scale + self.offset).exp() - self.delta
    }
}

/// Blockwise DCT of a normalized log field, one block grid per channel.
/// Blocks are ordered by channel, then block row, then block column.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDctTensor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub blocks_wide: usize,
    pub blocks_high: usize,
    pub blocks: Vec<Block8>,
    pub norm: LogNorm,
}

/// Log-DCT of the compression factor φ.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionSpectrum(pub LogDctTensor);

impl CompressionSpectrum {
    pub fn zeros_like(t: &LogDctTensor) -> Self {
        Self(LogDctTensor {
            blocks: vec![Block8::default(); t.blocks.len()],
            norm: t.norm.ratio(),
            ..t.clone()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.0.blocks.iter().all(|b| b.0.iter().all(|&v| v == 0.0))
    }

    pub fn tensor(&self) -> &LogDctTensor {
        &self.0
    }
}

/// JSON sidecar written next to serialized spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSidecar {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub scale: f64,
    pub offset: f64,
    pub delta: f64,
    pub qf: Option<u8>,
}

impl LogDctTensor {
    pub fn same_shape(&self, other: &LogDctTensor) -> bool {
        (self.width, self.height, self.channels) == (other.width, other.height, other.channels)
    }

    fn check_shape(&self, other: &LogDctTensor) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch {
                left: (self.width, self.height, self.channels),
                right: (other.width, other.height, other.channels),
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &LogDctTensor,
        norm: LogNorm,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<LogDctTensor> {
        self.check_shape(other)?;
        Ok(LogDctTensor {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| {
                    let mut out = Block8::default();
                    for i in 0..64 {
                        out.0[i] = f(a.0[i], b.0[i]);
                    }
                    out
                })
                .collect(),
            norm,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &LogDctTensor) -> Result<LogDctTensor> {
        let offset = self.norm.offset + other.norm.offset;
        self.zip_with(
            other,
            LogNorm {
                offset,
                ..self.norm
            },
            |a, b| a + b,
        )
    }

    pub fn sub(&self, other: &LogDctTensor) -> Result<LogDctTensor> {
        let offset = self.norm.offset - other.norm.offset;
        self.zip_with(
            other,
            LogNorm {
                offset,
                ..self.norm
            },
            |a, b| a - b,
        )
    }

    /// Largest absolute coefficient outside the DC band.
    pub fn max_abs_ac(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.0[1..].iter())
            .fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn block(&self, c: usize, bx: usize, by: usize) -> &Block8 {
        &self.blocks[(c * self.blocks_high + by) * self.blocks_wide + bx]
    }

    /// Coefficient image: each block written into its own 8×8 tile, dims
    /// [channels, 8·blocks_high, 8·blocks_wide].
    pub fn to_tensor(&self) -> Tensor {
        let (pw, ph) = (self.blocks_wide * BLOCK, self.blocks_high * BLOCK);
        let mut data = vec![0f32; self.channels * pw * ph];
        for c in 0..self.channels {
            for by in 0..self.blocks_high {
                for bx in 0..self.blocks_wide {
                    let b = self.block(c, bx, by);
                    for r in 0..BLOCK {
                        for k in 0..BLOCK {
                            data[(c * ph + by * BLOCK + r) * pw + bx * BLOCK + k] =
                                b.0[r * BLOCK + k] as f32;
                        }
                    }
                }
            }
        }
        Tensor {
            dims: vec![self.channels, ph, pw],
            data,
        }
    }

    pub fn from_tensor(t: &Tensor, sidecar: &SpectrumSidecar) -> Result<LogDctTensor> {
        let (bw, bh) = (
            sidecar.width.div_ceil(BLOCK),
            sidecar.height.div_ceil(BLOCK),
        );
        let expected = vec![sidecar.channels, bh * BLOCK, bw * BLOCK];
        if t.dims != expected {
            return Err(Error::param(format!(
                "coefficient tensor dims {:?}, expected {expected:?}",
                t.dims
            )));
        }
        let (pw, ph) = (bw * BLOCK, bh * BLOCK);
        let mut blocks = Vec::with_capacity(sidecar.channels * bw * bh);
        for c in 0..sidecar.channels {
            for by in 0..bh {
                for bx in 0..bw {
                    let mut b = Block8::default();
                    for r in 0..BLOCK {
                        for k in 0..BLOCK {
                            b.0[r * BLOCK + k] =
                                t.data[(c * ph + by * BLOCK + r) * pw + bx * BLOCK + k] as f64;
                        }
                    }
                    blocks.push(b);
                }
            }
        }
        Ok(LogDctTensor {
            width: sidecar.width,
            height: sidecar.height,
            channels: sidecar.channels,
            blocks_wide: bw,
            blocks_high: bh,
            blocks,
            norm: LogNorm {
                delta: sidecar.delta,
                offset: sidecar.offset,
                scale: sidecar.scale,
            },
        })
    }

    pub fn sidecar(&self, qf: Option<u8>) -> SpectrumSidecar {
        SpectrumSidecar {
            width: self.width,
            height: self.height,
            channels: self.channels,
            scale: self.norm.scale,
            offset: self.norm.offset,
            delta: self.norm.delta,
            qf,
        }
    }
}

/// Applies `f` per sample, splits each channel into edge-replicated 8×8
/// blocks and transforms them.
fn blockwise_dct(
    width: usize,
    height: usize,
    channels: usize,
    sample: impl Fn(usize, usize, usize) -> f64 + Sync,
    norm: LogNorm,
) -> LogDctTensor {
    let (bw, bh) = (width.div_ceil(BLOCK), height.div_ceil(BLOCK));
    let blocks = (0..channels * bw * bh)
        .into_par_iter()
        .map(|i| {
            let (c, rest) = (i / (bw * bh), i % (bw * bh));
            let (by, bx) = (rest / bw, rest % bw);
            let mut b = Block8::default();
            for r in 0..BLOCK {
                let y = (by * BLOCK + r).min(height - 1);
                for k in 0..BLOCK {
                    let x = (bx * BLOCK + k).min(width - 1);
                    b.0[r * BLOCK + k] = sample(x, y, c);
                }
            }
            dct2d(&b)
        })
        .collect();
    LogDctTensor {
        width,
        height,
        channels,
        blocks_wide: bw,
        blocks_high: bh,
        blocks,
        norm,
    }
}

fn check_image(img: &ImageF32) -> Result<()> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::Empty("image"));
    }
    if let Some(&neg) = img.data.iter().find(|&&v| v < 0.0) {
        return Err(Error::NegativeSample(neg));
    }
    Ok(())
}

pub fn to_log_dct(img: &ImageF32) -> Result<LogDctTensor> {
    check_image(img)?;
    let norm = LogNorm::default();
    Ok(blockwise_dct(
        img.width,
        img.height,
        img.channels,
        |x, y, c| norm.forward(img.get(x, y, c) as f64),
        norm,
    ))
}

/// Inverse of [`to_log_dct`]; the result is clamped to the unit range.
pub fn from_log_dct(t: &LogDctTensor) -> Result<ImageF32> {
    let spatial: Vec<Block8> = t.blocks.par_iter().map(idct2d).collect();
    let mut out = ImageF32::zeros(t.width, t.height, t.channels);
    for c in 0..t.channels {
        for y in 0..t.height {
            for x in 0..t.width {
                let (bx, by) = (x / BLOCK, y / BLOCK);
                let b = &spatial[(c * t.blocks_high + by) * t.blocks_wide + bx];
                let v = t.norm.inverse(b.0[(y % BLOCK) * BLOCK + x % BLOCK]);
                out.set(x, y, c, v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    if out.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("log-DCT tensor decodes to non-finite samples"));
    }
    Ok(out)
}

/// Log-DCT of φ = (I_c + δ) ⊘ (I + δ), ratios clamped to [1/64, 64].
pub fn compression_spectrum(
    compressed: &ImageF32,
    reference: &ImageF32,
) -> Result<CompressionSpectrum> {
    compressed.ensure_same_dims(reference)?;
    check_image(compressed)?;
    check_image(reference)?;
    let norm = LogNorm::default();
    Ok(CompressionSpectrum(blockwise_dct(
        reference.width,
        reference.height,
        reference.channels,
        |x, y, c| {
            let phi = (compressed.get(x, y, c) as f64 + norm.delta)
                / (reference.get(x, y, c) as f64 + norm.delta);
            phi.clamp(PHI_MIN, PHI_MAX).ln() / norm.scale
        },
        norm.ratio(),
    )))
}

/// Number of samples whose ratio φ falls outside [1/64, 64]. The spectrum
/// is only exactly additive where this is zero.
pub fn clamped_ratios(compressed: &ImageF32, reference: &ImageF32) -> Result<usize> {
    compressed.ensure_same_dims(reference)?;
    Ok(compressed
        .data
        .iter()
        .zip(&reference.data)
        .filter(|(&c, &r)| {
            let phi = (c as f64 + DELTA) / (r as f64 + DELTA);
            !(PHI_MIN..=PHI_MAX).contains(&phi)
        })
        .count())
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub compressed: ImageF32,
    /// D₁: log-DCT of the compressed image.
    pub observed: LogDctTensor,
    pub spectrum: CompressionSpectrum,
    pub corrected: LogDctTensor,
    pub clamped: usize,
}

/// Compresses `hazy` at `qf` and derives the target spectrum and corrected
/// tensor from the pair.
pub fn ground_truth_pair(hazy: &ImageF32, qf: u8) -> Result<GroundTruth> {
    check_image(hazy)?;
    let compressed = simulate_jpeg(&hazy.to_u8(), JpegOptions::new(qf))?
        .image
        .to_f32();
    Ok(GroundTruth {
        observed: to_log_dct(&compressed)?,
        spectrum: compression_spectrum(&compressed, hazy)?,
        corrected: to_log_dct(hazy)?,
        clamped: clamped_ratios(&compressed, hazy)?,
        compressed,
    })
}

/// max |D₁ − (D₂ + D₃)| over all non-DC coefficients.
pub fn additive_residual(
    d1: &LogDctTensor,
    d2: &CompressionSpectrum,
    d3: &LogDctTensor,
) -> Result<f64> {
    d1.check_shape(&d2.0)?;
    d1.check_shape(d3)?;
    let mut worst = 0.0f64;
    for ((a, b), c) in d1.blocks.iter().zip(&d2.0.blocks).zip(&d3.blocks) {
        for i in 1..64 {
            worst = worst.max((a.0[i] - b.0[i] - c.0[i]).abs());
        }
    }
    Ok(worst)
}

fn flat(t: &LogDctTensor) -> impl Iterator<Item = f64> + '_ {
    t.blocks.iter().flat_map(|b| b.0.iter().copied())
}

/// Mean of √(Δ² + ε²) over paired samples.
pub fn charbonnier_mean(
    pred: impl IntoIterator<Item = f64>,
    gt: impl IntoIterator<Item = f64>,
) -> Result<f64> {
    let eps2 = CHARBONNIER_EPS * CHARBONNIER_EPS;
    let mut pred = pred.into_iter();
    let mut gt = gt.into_iter();
    let (mut sum, mut n) = (0.0, 0usize);
    loop {
        match (pred.next(), gt.next()) {
            (Some(x), Some(y)) => {
                sum += ((x - y) * (x - y) + eps2).sqrt();
                n += 1;
            }
            (None, None) => break,
            _ => return Err(Error::param("prediction and target lengths differ")),
        }
    }
    if n == 0 {
        return Err(Error::Empty("tensor"));
    }
    Ok(sum / n as f64)
}

/// Mean Charbonnier penalty on the spectrum plus that on the corrected
/// tensor.
pub fn charbonnier_loss(
    d2_pred: &CompressionSpectrum,
    d2_gt: &CompressionSpectrum,
    d3_pred: &LogDctTensor,
    d3_gt: &LogDctTensor,
) -> Result<f64> {
    d2_pred.0.check_shape(&d2_gt.0)?;
    d3_pred.check_shape(d3_gt)?;
    Ok(charbonnier_mean(flat(&d2_pred.0), flat(&d2_gt.0))?
        + charbonnier_mean(flat(d3_pred), flat(d3_gt))?)
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub spectrum: CompressionSpectrum,
    pub corrected: LogDctTensor,
}

/// Splits D₁ into a compression spectrum and a corrected tensor.
pub trait Decomposer: Send + Sync {
    fn decompose(&self, observed: &LogDctTensor) -> Result<Decomposition>;

    /// Image-domain view of the corrected tensor.
    fn corrected_image(&self, _input: &ImageF32, d: &Decomposition) -> Result<ImageF32> {
        from_log_dct(&d.corrected)
    }
}

/// Returns a zero spectrum and leaves the input untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassthroughDecomposer;

impl Decomposer for PassthroughDecomposer {
    fn decompose(&self, observed: &LogDctTensor) -> Result<Decomposition> {
        Ok(Decomposition {
            spectrum: CompressionSpectrum::zeros_like(observed),
            corrected: observed.clone(),
        })
    }

    fn corrected_image(&self, input: &ImageF32, _d: &Decomposition) -> Result<ImageF32> {
        Ok(input.clone())
    }
}

/// Knows the uncompressed reference and returns the exact split.
#[derive(Debug, Clone)]
pub struct OracleDecomposer {
    reference: ImageF32,
    corrected: LogDctTensor,
}

impl OracleDecomposer {
    pub fn new(reference: ImageF32) -> Result<Self> {
        let corrected = to_log_dct(&reference)?;
        Ok(Self {
            reference,
            corrected,
        })
    }

    pub fn from_optional(reference: Option<ImageF32>) -> Result<Self> {
        Self::new(reference.ok_or_else(|| {
            Error::Decomposer("the oracle decomposer needs the uncompressed reference".into())
        })?)
    }

    pub fn reference(&self) -> &ImageF32 {
        &self.reference
    }
}

impl Decomposer for OracleDecomposer {
    fn decompose(&self, observed: &LogDctTensor) -> Result<Decomposition> {
        let d2 = observed.sub(&self.corrected)?;
        Ok(Decomposition {
            spectrum: CompressionSpectrum(LogDctTensor {
                norm: observed.norm.ratio(),
                ..d2
            }),
            corrected: self.corrected.clone(),
        })
    }
}

/// Delegates to an external program invoked as
/// `program [args..] <d1.fdgt> <d2_out.fdgt> <d3_out.fdgt>`.
/// Tensors use the coefficient-image layout of [`LogDctTensor::to_tensor`].
#[derive(Debug, Clone)]
pub struct ExternalDecomposer {
    pub program: String,
    pub args: Vec<String>,
    pub workdir: PathBuf,
}

impl Decomposer for ExternalDecomposer {
    fn decompose(&self, observed: &LogDctTensor) -> Result<Decomposition> {
        let d1 = self.workdir.join("d1.fdgt");
        let d2 = self.workdir.join("d2.fdgt");
        let d3 = self.workdir.join("d3.fdgt");
        observed.to_tensor().save(&d1)?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&d1)
            .arg(&d2)
            .arg(&d3)
            .status()
            .map_err(|e| Error::Decomposer(format!("cannot run {}: {e}", self.program)))?;
        if !status.success() {
            return Err(Error::Decomposer(format!(
                "{} exited with {status}",
                self.program
            )));
        }
        let side = observed.sidecar(None);
        let spectrum = LogDctTensor::from_tensor(
            &Tensor::load(&d2)?,
            &SpectrumSidecar {
                offset: 0.0,
                ..side.clone()
            },
        )?;
        let corrected = LogDctTensor::from_tensor(&Tensor::load(&d3)?, &side)?;
        Ok(Decomposition {
            spectrum: CompressionSpectrum(spectrum),
            corrected,
        })
    }
}

/// Runs a decomposer on a compressed image and enforces the additive
/// contract.
pub fn decompose(
    compressed_hazy: &ImageF32,
    d: &dyn Decomposer,
) -> Result<(CompressionSpectrum, ImageF32)> {
    let observed = to_log_dct(compressed_hazy)?;
    let out = d.decompose(&observed)?;
    let residual = additive_residual(&observed, &out.spectrum, &out.corrected)?;
    if residual.is_nan() || residual > INTERFACE_TOLERANCE {
        return Err(Error::Decomposer(format!(
            "decomposition violates additivity by {residual:.3e}"
        )));
    }
    let corrected = d.corrected_image(compressed_hazy, &out)?;
    Ok((out.spectrum, corrected))
}
