use serde::{Deserialize, Serialize};

use super::{cross_attention, extract_high_freq, AttentionWeights, FeatureMap};
use crate::decomposition::CompressionSpectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HfcmMode {
    /// x + CA(x)
    #[default]
    Residual,
    /// CA(x) alone
    Replace,
}

/// Mean AC magnitude of every spectrum block, one plane per spectrum
/// channel, resampled (nearest) onto an `height`×`width` grid.
pub fn pool_spectrum(spectrum: &CompressionSpectrum, height: usize, width: usize) -> FeatureMap {
    let t = spectrum.tensor();
    let mut pooled = FeatureMap::zeros(t.channels, t.blocks_high, t.blocks_wide);
    for c in 0..t.channels {
        for by in 0..t.blocks_high {
            for bx in 0..t.blocks_wide {
                let b = t.block(c, bx, by);
                let m = b.0[1..].iter().map(|v| v.abs()).sum::<f64>() / 63.0;
                pooled.set(c, by, bx, m);
            }
        }
    }
    pooled.resize_nearest(height, width)
}

/// Sums the LH, HL and HH planes of each channel after upsampling.
fn project_high_freq(x_h: &FeatureMap, channels: usize, height: usize, width: usize) -> FeatureMap {
    let up = x_h.resize_nearest(height, width);
    let n = height * width;
    let mut out = FeatureMap::zeros(channels, height, width);
    for band in 0..3 {
        for c in 0..channels {
            let src = up.channel(band * channels + c);
            for (o, s) in out.data[c * n..(c + 1) * n].iter_mut().zip(src) {
                *o += s;
            }
        }
    }
    out
}

/// Spectrum channel `c mod S` feeds feature channel `c`.
fn project_spectrum(pooled: &FeatureMap, channels: usize) -> FeatureMap {
    let n = pooled.tokens();
    let mut out = FeatureMap::zeros(channels, pooled.height, pooled.width);
    if pooled.channels == 0 {
        return out;
    }
    for c in 0..channels {
        let s = c % pooled.channels;
        out.data[c * n..(c + 1) * n].copy_from_slice(pooled.channel(s));
    }
    out
}

/// High-frequency compensation of a skip-connection feature map.
pub fn hfcm_forward(
    x: &FeatureMap,
    spectrum: &CompressionSpectrum,
    w: &AttentionWeights,
    mode: HfcmMode,
) -> Result<FeatureMap> {
    if x.tokens() == 0 {
        return Err(Error::Empty("feature map"));
    }
    let x_h = project_high_freq(&extract_high_freq(x)?, x.channels, x.height, x.width);
    let x_d = project_spectrum(&pool_spectrum(spectrum, x.height, x.width), x.channels);
    let ca = cross_attention(x, &x_h, &x_d, w)?;
    Ok(match mode {
        HfcmMode::Replace => ca,
        HfcmMode::Residual => FeatureMap {
            data: x.data.iter().zip(&ca.data).map(|(a, b)| a + b).collect(),
            ..ca
        },
    })
}
