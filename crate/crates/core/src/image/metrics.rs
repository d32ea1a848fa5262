use serde::{Serialize, Serializer};

use super::ImageF32;
use crate::error::{Error, Result};

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    /// Decibels; `+inf` when the inputs are identical.
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    pub ssim: f64,
}

/// JSON has no infinity, so an exact match is written as the string "inf".
fn serialize_db<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl MetricReport {
    pub fn compute(a: &ImageF32, b: &ImageF32) -> Result<Self> {
        Ok(Self {
            psnr: psnr(a, b)?,
            ssim: ssim(a, b)?,
        })
    }
}

pub fn mse(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if a.data.is_empty() {
        return Err(Error::Empty("image"));
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data.len() as f64)
}

/// Peak signal-to-noise ratio with a peak of 1.0 (255 on 8-bit data).
pub fn psnr(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "valid" Gaussian filter: output is (w-10)×(h-10).
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&line[x..]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity on luma with an 11×11 Gaussian window
/// (σ = 1.5), K₁ = 0.01, K₂ = 0.03 and a dynamic range of 1.0.
pub fn ssim(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    a.ensure_same_dims(b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: a.width,
            height: a.height,
            min: SSIM_WINDOW,
        });
    }
    let la = a.luma()?.channel(0).data;
    let lb = b.luma()?.channel(0).data;
    let (w, h) = (a.width, a.height);
    let k = gaussian_kernel();

    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_a = filter_valid(&la, w, h, &k);
    let mu_b = filter_valid(&lb, w, h, &k);
    let e_aa = filter_valid(&prod(&la, &la), w, h, &k);
    let e_bb = filter_valid(&prod(&lb, &lb), w, h, &k);
    let e_ab = filter_valid(&prod(&la, &lb), w, h, &k);

    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total +=
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> ImageF32 {
        let mut data = Vec::new();
        for y in 0..h {
            for x in 0..w {
                data.push(f(x, y));
            }
        }
        ImageF32::new(w, h, 1, data).unwrap()
    }

    fn texture(w: usize, h: usize) -> ImageF32 {
        ramp(w, h, |x, y| {
            0.5 + 0.3 * ((x as f32 * 0.7).sin() * (y as f32 * 0.4).cos())
        })
    }

    /// Windowed SSIM evaluated directly from the definition, one window at
    /// a time, with a 2-D kernel built independently.
    fn ssim_direct(a: &ImageF32, b: &ImageF32) -> f64 {
        let mut w2 = [[0.0f64; 11]; 11];
        let mut s = 0.0;
        for (i, row) in w2.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(di * di + dj * dj) / 4.5).exp();
                s += *v;
            }
        }
        let c1 = 1e-4;
        let c2 = 9e-4;
        let mut total = 0.0;
        let mut count = 0;
        for y0 in 0..=a.height - 11 {
            for x0 in 0..=a.width - 11 {
                let (mut ma, mut mb) = (0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wt = w2[i][j] / s;
                        ma += wt * a.get(x0 + j, y0 + i, 0) as f64;
                        mb += wt * b.get(x0 + j, y0 + i, 0) as f64;
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wt = w2[i][j] / s;
                        let da = a.get(x0 + j, y0 + i, 0) as f64 - ma;
                        let db = b.get(x0 + j, y0 + i, 0) as f64 - mb;
                        va += wt * da * da;
                        vb += wt * db * db;
                        cov += wt * da * db;
                    }
                }
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn psnr_cases() {
        let a = ImageF32::filled(8, 8, 3, 0.25);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);

        let b = ImageF32::filled(8, 8, 3, 0.25 + 1.0 / 255.0);
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-3);

        let zero = ImageF32::zeros(4, 4, 1);
        let one = ImageF32::filled(4, 4, 1, 1.0);
        assert!(psnr(&zero, &one).unwrap().abs() < 1e-12);

        assert!(matches!(
            psnr(&zero, &ImageF32::zeros(4, 5, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psnr_decreases_with_noise_scale() {
        let base = texture(32, 32);
        let mut last = f64::INFINITY;
        for scale in [0.001f32, 0.01, 0.05, 0.1] {
            let noisy = ImageF32 {
                data: base
                    .data
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + scale * ((i as f32 * 12.9898).sin()))
                    .collect(),
                ..base.clone()
            };
            let p = psnr(&base, &noisy).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn ssim_identity_and_negation() {
        let a = texture(24, 20);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);

        let neg = ImageF32 {
            data: a.data.iter().map(|v| 1.0 - v).collect(),
            ..a.clone()
        };
        let s = ssim(&a, &neg).unwrap();
        assert!((-1.0..0.0).contains(&s), "{s}");
    }

    #[test]
    fn ssim_matches_direct_formula() {
        let a = texture(23, 19);
        let b = ramp(23, 19, |x, y| {
            0.45 + 0.25 * ((x as f32 * 0.5).cos() * (y as f32 * 0.3 + 1.0).sin())
        });
        let fast = ssim(&a, &b).unwrap();
        let direct = ssim_direct(&a, &b);
        assert!((fast - direct).abs() < 1e-6, "{fast} vs {direct}");
    }

    #[test]
    fn ssim_window_too_large() {
        let a = ImageF32::zeros(10, 20, 1);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn report_serializes_infinity() {
        let r = MetricReport {
            psnr: f64::INFINITY,
            ssim: 1.0,
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"psnr":"inf","ssim":1.0}"#
        );
    }
}
