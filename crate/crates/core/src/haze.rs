//! Atmospheric scattering synthesis and dark-channel transmission
//! estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageF32, Plane};

pub const DEFAULT_OMEGA: f64 = 0.95;
pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_T_MIN: f64 = 0.05;

/// Per-pixel transmission, every value in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap(Plane);

impl TransmissionMap {
    pub fn new(plane: Plane) -> Result<Self> {
        if let Some(bad) = plane.data.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::param(format!("transmission {bad} outside (0, 1]")));
        }
        Ok(Self(plane))
    }

    pub fn uniform(width: usize, height: usize, t: f64) -> Result<Self> {
        Self::new(Plane::filled(width, height, t))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }

    /// Mean over the `w`×`h` window anchored at (`x`, `y`).
    pub fn window_mean(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        let mut acc = 0.0;
        for row in y..y + h {
            acc += self.0.data[row * self.0.width + x..row * self.0.width + x + w]
                .iter()
                .sum::<f64>();
        }
        acc / (w * h) as f64
    }
}

/// Airlight color. Grayscale images use the first entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Airlight(pub [f64; 3]);

impl Airlight {
    pub fn gray(a: f64) -> Self {
        Self([a; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::param(format!(
                "airlight {:?} outside [0, 1]",
                self.0
            )));
        }
        Ok(())
    }

    /// Luminance projection under the JFIF weights.
    pub fn luma(&self) -> f64 {
        use crate::image::{KB, KG, KR};
        KR * self.0[0] + KG * self.0[1] + KB * self.0[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HazeParams {
    pub beta: f64,
    pub omega: f64,
    pub window: usize,
    pub t_min: f64,
}

impl Default for HazeParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            omega: DEFAULT_OMEGA,
            window: DEFAULT_WINDOW,
            t_min: DEFAULT_T_MIN,
        }
    }
}

impl HazeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::param(format!(
                "omega must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(Error::param(format!(
                "t_min must lie in (0, 1], got {}",
                self.t_min
            )));
        }
        check_window(self.window)
    }
}

fn check_window(window: usize) -> Result<()> {
    if window.is_multiple_of(2) {
        return Err(Error::param(format!("window must be odd, got {window}")));
    }
    Ok(())
}

/// clear·t + a·(1−t) per sample, clamped to the unit range.
pub fn apply_asm(clear: &ImageF32, t: &TransmissionMap, a: &Airlight) -> Result<ImageF32> {
    if (clear.width, clear.height) != (t.width(), t.height()) {
        return Err(Error::DimensionMismatch {
            left: clear.dims(),
            right: (t.width(), t.height(), 1),
        });
    }
    let ch = clear.channels;
    let data = clear
        .data
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let tv = t.0.data[i / ch];
            let av = a.0[i % ch];
            (y as f64 * tv + av * (1.0 - tv)).clamp(0.0, 1.0) as f32
        })
        .collect();
    ImageF32::new(clear.width, clear.height, ch, data)
}

/// Sliding minimum along one axis with the window clipped at the borders.
fn min_filter_1d(src: &[f64], radius: usize, out: &mut [f64]) {
    let n = src.len();
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(n);
        *o = src[lo..hi].iter().copied().fold(f64::INFINITY, f64::min);
    }
}

/// Box minimum of a plane; separable because min over a rectangle is a
/// min of row minima.
fn min_filter(plane: &Plane, window: usize) -> Plane {
    let (w, h) = (plane.width, plane.height);
    let r = window / 2;
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w.max(1))
        .zip(plane.data.par_chunks(w.max(1)))
        .for_each(|(out, src)| min_filter_1d(src, r, out));
    let mut out = vec![0.0; w * h];
    let cols: Vec<Vec<f64>> = (0..w)
        .into_par_iter()
        .map(|x| {
            let col: Vec<f64> = (0..h).map(|y| rows[y * w + x]).collect();
            let mut o = vec![0.0; h];
            min_filter_1d(&col, r, &mut o);
            o
        })
        .collect();
    for (x, col) in cols.iter().enumerate() {
        for (y, &v) in col.iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

fn channel_min(img: &ImageF32) -> Plane {
    Plane {
        width: img.width,
        height: img.height,
        data: img
            .data
            .chunks_exact(img.channels)
            .map(|px| px.iter().fold(f64::INFINITY, |m, &v| m.min(v as f64)))
            .collect(),
    }
}

/// Windowed minimum of the per-pixel channel minimum.
pub fn dark_channel(img: &ImageF32, window: usize) -> Result<Plane> {
    check_window(window)?;
    if img.width == 0 || img.height == 0 {
        return Err(Error::Empty("image"));
    }
    Ok(min_filter(&channel_min(img), window))
}

/// Airlight as the mean color of the brightest 0.1% of the dark channel.
/// Pixels tied with the cutoff value are all included.
pub fn estimate_airlight(img: &ImageF32) -> Result<Airlight> {
    estimate_airlight_with(img, DEFAULT_WINDOW)
}

pub fn estimate_airlight_with(img: &ImageF32, window: usize) -> Result<Airlight> {
    let dark = dark_channel(img, window)?;
    let n = dark.data.len();
    let k = ((n as f64 * 0.001).ceil() as usize).clamp(1, n);
    let mut sorted = dark.data.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[k - 1];
    let mut acc = [0.0f64; 3];
    let mut count = 0usize;
    for (i, &d) in dark.data.iter().enumerate() {
        if d >= cutoff {
            count += 1;
            let px = &img.data[i * img.channels..(i + 1) * img.channels];
            for (c, a) in acc.iter_mut().enumerate() {
                *a += px[c.min(img.channels - 1)] as f64;
            }
        }
    }
    Ok(Airlight(acc.map(|a| a / count as f64)))
}

/// t = 1 − ω·dark(img ⊘ a), clamped to [t_min, 1].
pub fn estimate_transmission(
    img: &ImageF32,
    a: &Airlight,
    p: &HazeParams,
) -> Result<TransmissionMap> {
    check_window(p.window)?;
    let ch = img.channels;
    if a.0[..ch.min(3)].iter().any(|&v| v <= 0.0) {
        return Err(Error::param(format!(
            "airlight {:?} has a zero channel",
            a.0
        )));
    }
    let ratio = ImageF32 {
        data: img
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| (v as f64 / a.0[i % ch]) as f32)
            .collect(),
        ..img.clone()
    };
    let dark = dark_channel(&ratio, p.window)?;
    let data = dark
        .data
        .iter()
        .map(|&d| (1.0 - p.omega * d).clamp(p.t_min, 1.0))
        .collect();
    TransmissionMap::new(Plane {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Beer–Lambert attenuation exp(−β·depth).
pub fn transmission_from_depth(depth: &Plane, beta: f64) -> Result<TransmissionMap> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be >= 0, got {beta}")));
    }
    let data = depth
        .data
        .iter()
        .map(|&d| (-beta * d).exp().clamp(f64::MIN_POSITIVE, 1.0))
        .collect();
    TransmissionMap::new(Plane {
        width: depth.width,
        height: depth.height,
        data,
    })
}
