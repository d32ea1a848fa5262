//! High-frequency compensation: Haar subbands of feature maps attended
//! against the compression spectrum.

mod attention;
mod haar;
mod hfcm;

pub use attention::{attention_maps, cross_attention, AttentionManifest, AttentionWeights};
pub use haar::{extract_high_freq, haar_dwt2, haar_idwt2, WaveletSubbands};
pub use hfcm::{hfcm_forward, pool_spectrum, HfcmMode};

use crate::error::{Error, Result};
use crate::image::ImageF32;

/// Channel-major C×H×W activations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Truncated {
                expected: channels * height * width,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("feature map holds non-finite values"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn tokens(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.tokens();
        &self.data[c * n..(c + 1) * n]
    }

    /// Token-major copy: row t holds the C features of spatial position t.
    pub fn token_matrix(&self) -> Vec<f64> {
        let n = self.tokens();
        let mut out = vec![0.0; n * self.channels];
        for c in 0..self.channels {
            for t in 0..n {
                out[t * self.channels + c] = self.data[c * n + t];
            }
        }
        out
    }

    pub fn from_token_matrix(channels: usize, height: usize, width: usize, m: &[f64]) -> Self {
        let n = height * width;
        let mut data = vec![0.0; n * channels];
        for t in 0..n {
            for c in 0..channels {
                data[c * n + t] = m[t * channels + c];
            }
        }
        Self {
            channels,
            height,
            width,
            data,
        }
    }

    /// Nearest-neighbour resize.
    pub fn resize_nearest(&self, height: usize, width: usize) -> Self {
        let mut out = Self::zeros(self.channels, height, width);
        for c in 0..self.channels {
            for y in 0..height {
                let sy = y * self.height / height;
                for x in 0..width {
                    let sx = x * self.width / width;
                    out.set(c, y, x, self.get(c, sy, sx));
                }
            }
        }
        out
    }

    pub fn from_image(img: &ImageF32) -> Self {
        let mut out = Self::zeros(img.channels, img.height, img.width);
        for y in 0..img.height {
            for x in 0..img.width {
                for c in 0..img.channels {
                    out.set(c, y, x, img.get(x, y, c) as f64);
                }
            }
        }
        out
    }
}
