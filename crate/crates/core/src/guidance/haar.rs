use super::FeatureMap;
use crate::error::{Error, Result};
use crate::image::Plane;

/// One level of the orthonormal 2-D Haar transform. `width`/`height` are
/// those of the input; odd inputs were padded by replicating the last
/// row/column.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSubbands {
    pub width: usize,
    pub height: usize,
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

pub fn haar_dwt2(plane: &Plane) -> Result<WaveletSubbands> {
    let (w, h) = (plane.width, plane.height);
    if w == 0 || h == 0 {
        return Err(Error::Empty("plane"));
    }
    let (hw, hh_) = (w.div_ceil(2), h.div_ceil(2));
    let px = |x: usize, y: usize| plane.get(x.min(w - 1), y.min(h - 1));
    let mut bands = [(); 4].map(|_| Plane::filled(hw, hh_, 0.0));
    for by in 0..hh_ {
        for bx in 0..hw {
            let (a, b) = (px(2 * bx, 2 * by), px(2 * bx + 1, 2 * by));
            let (c, d) = (px(2 * bx, 2 * by + 1), px(2 * bx + 1, 2 * by + 1));
            bands[0].set(bx, by, (a + b + c + d) / 2.0);
            bands[1].set(bx, by, (a + b - c - d) / 2.0);
            bands[2].set(bx, by, (a - b + c - d) / 2.0);
            bands[3].set(bx, by, (a - b - c + d) / 2.0);
        }
    }
    let [ll, lh, hl, hh] = bands;
    Ok(WaveletSubbands {
        width: w,
        height: h,
        ll,
        lh,
        hl,
        hh,
    })
}

/// Inverse transform, cropped back to the original size.
pub fn haar_idwt2(sb: &WaveletSubbands) -> Result<Plane> {
    let (hw, hh_) = (sb.width.div_ceil(2), sb.height.div_ceil(2));
    for p in [&sb.ll, &sb.lh, &sb.hl, &sb.hh] {
        if (p.width, p.height) != (hw, hh_) {
            return Err(Error::DimensionMismatch {
                left: (p.width, p.height, 1),
                right: (hw, hh_, 1),
            });
        }
    }
    let mut out = Plane::filled(sb.width, sb.height, 0.0);
    for by in 0..hh_ {
        for bx in 0..hw {
            let (ll, lh, hl, hh) = (
                sb.ll.get(bx, by),
                sb.lh.get(bx, by),
                sb.hl.get(bx, by),
                sb.hh.get(bx, by),
            );
            let quad = [
                (0, 0, (ll + lh + hl + hh) / 2.0),
                (1, 0, (ll + lh - hl - hh) / 2.0),
                (0, 1, (ll - lh + hl - hh) / 2.0),
                (1, 1, (ll - lh - hl + hh) / 2.0),
            ];
            for (dx, dy, v) in quad {
                let (x, y) = (2 * bx + dx, 2 * by + dy);
                if x < sb.width && y < sb.height {
                    out.set(x, y, v);
                }
            }
        }
    }
    Ok(out)
}

/// LH, HL and HH of every channel stacked as 3C channels at half
/// resolution, in that band order.
pub fn extract_high_freq(x: &FeatureMap) -> Result<FeatureMap> {
    let (hw, hh) = (x.width.div_ceil(2), x.height.div_ceil(2));
    let mut out = FeatureMap::zeros(3 * x.channels, hh, hw);
    let n = hw * hh;
    for c in 0..x.channels {
        let plane = Plane {
            width: x.width,
            height: x.height,
            data: x.channel(c).to_vec(),
        };
        let sb = haar_dwt2(&plane)?;
        for (band, p) in [&sb.lh, &sb.hl, &sb.hh].into_iter().enumerate() {
            let dst = (band * x.channels + c) * n;
            out.data[dst..dst + n].copy_from_slice(&p.data);
        }
    }
    Ok(out)
}
