//! Raster containers shared by every stage of the pipeline.
//!
//! Samples are stored row-major and channel-interleaved. Float images use the
//! unit interval as their nominal range; 8-bit boundaries are crossed with
//! round-half-away-from-zero.

pub(crate) mod color;
mod io;
mod metrics;

pub use color::{rgb_to_ycbcr, ycbcr_to_rgb, KB, KG, KR};
pub use io::{load_ppm, load_tensor, read_ppm, save_ppm, save_tensor, write_ppm, Tensor};
pub use metrics::{mse, psnr, ssim, MetricReport};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageF32 {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Single-channel H×W field in double precision (transmission maps, dark
/// channels, per-pixel coefficient fields).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

fn check_layout(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidChannels {
            expected: "1 or 3",
            actual: channels,
        });
    }
    let expected = width * height * channels;
    if len != expected {
        return Err(Error::Truncated {
            expected,
            found: len,
        });
    }
    Ok(())
}

impl ImageU8 {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_layout(width, height, channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn to_f32(&self) -> ImageF32 {
        ImageF32 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }
}

impl ImageF32 {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_layout(width, height, channels, data.len())?;
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite sample {bad}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn ensure_same_dims(&self, other: &ImageF32) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    pub fn clamped(&self) -> ImageF32 {
        ImageF32 {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..self.clone()
        }
    }

    /// Quantizes to 8 bits after clamping to the unit range.
    pub fn to_u8(&self) -> ImageU8 {
        ImageU8 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }

    /// Extracts one channel as a double-precision plane.
    pub fn channel(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .skip(c)
                .step_by(self.channels)
                .map(|&v| v as f64)
                .collect(),
        }
    }

    /// Luma plane: the image itself for grayscale, Y of the JFIF transform
    /// otherwise.
    pub fn luma(&self) -> Result<ImageF32> {
        match self.channels {
            1 => Ok(self.clone()),
            3 => {
                let ycc = rgb_to_ycbcr(self)?;
                Ok(ImageF32 {
                    width: self.width,
                    height: self.height,
                    channels: 1,
                    data: ycc.data.iter().step_by(3).copied().collect(),
                })
            }
            n => Err(Error::InvalidChannels {
                expected: "1 or 3",
                actual: n,
            }),
        }
    }

    /// Copies the `w`×`h` window anchored at (`x`, `y`).
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> ImageF32 {
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        ImageF32 {
            width: w,
            height: h,
            channels: self.channels,
            data,
        }
    }
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Truncated {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn to_image(&self) -> ImageF32 {
        ImageF32 {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Round-half-away-from-zero conversion of a 0..255-scaled value.
#[inline]
pub fn to_u8_sample(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
