use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predictor::{DEFAULT_KAPPA, DEFAULT_MAX_OFFSET};
use super::{
    fuse_noise_estimates, fuse_patch_scalars, initial_noise, make_schedule, reverse_step,
    step_noise, Denoiser, NoiseSchedule, PatchGrid, PredictorKind, TimestepPredictor,
};
use crate::decomposition::{decompose, CompressionSpectrum, Decomposer};
use crate::error::{Error, Result};
use crate::haze::{
    estimate_airlight_with, estimate_transmission, Airlight, HazeParams, TransmissionMap,
};
use crate::image::ImageF32;

/// Image the DADTP transmission statistics are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionSource {
    #[default]
    Corrected,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub patch: usize,
    pub stride: usize,
    pub seed: u64,
    pub predictor: PredictorKind,
    pub kappa: f64,
    pub max_offset: usize,
    /// Keep the stochastic term on the final step.
    pub last_step_noise: bool,
    pub transmission_source: TransmissionSource,
    pub haze: HazeParams,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            beta_min: 1e-4,
            beta_max: 0.02,
            patch: 64,
            stride: 16,
            seed: 0,
            predictor: PredictorKind::Zero,
            kappa: DEFAULT_KAPPA,
            max_offset: DEFAULT_MAX_OFFSET,
            last_step_noise: false,
            transmission_source: TransmissionSource::Corrected,
            haze: HazeParams::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.patch <= self.stride {
            return Err(Error::param(format!(
                "need patch > stride >= 1, got patch {}, stride {}",
                self.patch, self.stride
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        self.haze.validate()?;
        self.schedule().map(|_| ())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        make_schedule(self.steps, self.beta_min, self.beta_max)
    }
}

/// One DDPM update for a single sample.
#[inline]
pub fn reverse_pixel(j: f64, eps: f64, alpha: f64, gamma: f64, z: f64) -> f64 {
    (j - (1.0 - alpha) / (1.0 - gamma).sqrt() * eps) / alpha.sqrt() + (1.0 - alpha).sqrt() * z
}

fn noise_image(v: Vec<f64>, like: &ImageF32) -> ImageF32 {
    ImageF32 {
        data: v.into_iter().map(|x| x as f32).collect(),
        ..like.clone()
    }
}

/// Plain ancestral sampling over the whole image at the global step.
pub fn sample_unpatched(
    cond: &ImageF32,
    denoiser: &dyn Denoiser,
    s: &NoiseSchedule,
    seed: u64,
    last_step_noise: bool,
    spectrum: Option<&CompressionSpectrum>,
) -> Result<ImageF32> {
    let n = cond.data.len();
    let mut j = noise_image(initial_noise(seed, n), cond);
    for t in (1..=s.steps()).rev() {
        let eps = denoiser.estimate(cond, &j, s.gamma(t), spectrum)?;
        j.ensure_same_dims(&eps)?;
        j = if t == 1 && last_step_noise {
            let z = noise_image(step_noise(seed, t, n), cond);
            let (a, g) = (s.alpha(t), s.gamma(t));
            if g >= 1.0 {
                return Err(Error::ScheduleDegenerate(t));
            }
            ImageF32 {
                data: (0..n)
                    .map(|i| {
                        reverse_pixel(j.data[i] as f64, eps.data[i] as f64, a, g, z.data[i] as f64)
                            as f32
                    })
                    .collect(),
                ..j
            }
        } else {
            let z = (t > 1).then(|| noise_image(step_noise(seed, t, n), cond));
            reverse_step(&j, &eps, t, s, z.as_ref())?
        };
    }
    Ok(j)
}

#[derive(Debug, Clone)]
pub struct RestoreOutput {
    /// J₀ clamped to the unit range.
    pub image: ImageF32,
    pub corrected: ImageF32,
    pub spectrum: CompressionSpectrum,
    pub airlight: Airlight,
    pub transmission: TransmissionMap,
    pub grid: PatchGrid,
    /// Mean transmission per patch, in grid order.
    pub patch_transmission: Vec<f64>,
}

pub fn restore(
    compressed_hazy: &ImageF32,
    decomposer: &dyn Decomposer,
    denoiser: &dyn Denoiser,
    predictor: &dyn TimestepPredictor,
    cfg: &SamplerConfig,
) -> Result<RestoreOutput> {
    restore_with_observer(
        compressed_hazy,
        decomposer,
        denoiser,
        predictor,
        cfg,
        &mut |_, _| Ok(()),
    )
}

/// As [`restore`], calling `observer(t − 1, J_{t−1})` after every step.
pub fn restore_with_observer(
    compressed_hazy: &ImageF32,
    decomposer: &dyn Decomposer,
    denoiser: &dyn Denoiser,
    predictor: &dyn TimestepPredictor,
    cfg: &SamplerConfig,
    observer: &mut dyn FnMut(usize, &ImageF32) -> Result<()>,
) -> Result<RestoreOutput> {
    cfg.validate()?;
    let s = cfg.schedule()?;
    let grid = PatchGrid::new(
        compressed_hazy.width,
        compressed_hazy.height,
        cfg.patch,
        cfg.stride,
    )?;
    let (spectrum, corrected) = decompose(compressed_hazy, decomposer)?;
    let source = match cfg.transmission_source {
        TransmissionSource::Corrected => &corrected,
        TransmissionSource::Input => compressed_hazy,
    };
    let airlight = estimate_airlight_with(source, cfg.haze.window)?;
    let transmission = estimate_transmission(source, &airlight, &cfg.haze)?;
    let patch_transmission: Vec<f64> = grid
        .anchors
        .iter()
        .map(|&(r, c)| transmission.window_mean(c, r, grid.patch, grid.patch))
        .collect();

    let n = corrected.data.len();
    let cond_patches: Vec<ImageF32> = (0..grid.len()).map(|k| grid.crop(&corrected, k)).collect();
    let mut j = noise_image(initial_noise(cfg.seed, n), &corrected);
    let ch = corrected.channels;
    for t in (1..=s.steps()).rev() {
        let t_hat: Vec<usize> = patch_transmission
            .iter()
            .map(|&m| predictor.predict(m, t, s.steps()).clamp(1, s.steps()))
            .collect();
        let eps_patches = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                denoiser.estimate(
                    &cond_patches[k],
                    &grid.crop(&j, k),
                    s.gamma(t_hat[k]),
                    Some(&spectrum),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let eps = fuse_noise_estimates(&eps_patches, &grid)?;
        let alpha = fuse_patch_scalars(
            &t_hat.iter().map(|&k| s.alpha(k)).collect::<Vec<_>>(),
            &grid,
        )?;
        let gamma = fuse_patch_scalars(
            &t_hat.iter().map(|&k| s.gamma(k)).collect::<Vec<_>>(),
            &grid,
        )?;
        if gamma.iter().any(|&g| g >= 1.0) {
            return Err(Error::ScheduleDegenerate(t));
        }
        let z = (t > 1 || cfg.last_step_noise).then(|| step_noise(cfg.seed, t, n));
        for (i, v) in j.data.iter_mut().enumerate() {
            let zi = z.as_ref().map_or(0.0, |z| z[i] as f32 as f64);
            *v = reverse_pixel(
                *v as f64,
                eps.data[i] as f64,
                alpha[i / ch],
                gamma[i / ch],
                zi,
            ) as f32;
        }
        observer(t - 1, &j)?;
    }
    Ok(RestoreOutput {
        image: j.clamped(),
        corrected,
        spectrum,
        airlight,
        transmission,
        grid,
        patch_transmission,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::PassthroughDecomposer;
    use crate::diffusion::{AnalyticGaussianDenoiser, HeuristicPredictor, ZeroOffsetPredictor};

    fn small_cfg(patch: usize, stride: usize) -> SamplerConfig {
        SamplerConfig {
            steps: 40,
            beta_min: 1e-3,
            beta_max: 0.2,
            patch,
            stride,
            seed: 17,
            haze: HazeParams {
                window: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn smooth(w: usize, h: usize) -> ImageF32 {
        let mut img = ImageF32::zeros(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    img.set(x, y, c, 0.3 + 0.4 * (x + y + c) as f32 / (w + h) as f32);
                }
            }
        }
        img
    }

    #[test]
    fn gaussian_recovery() {
        let d = AnalyticGaussianDenoiser::new(0.3, 0.1).unwrap();
        let s = make_schedule(1000, 1e-4, 0.02).unwrap();
        let cond = ImageF32::zeros(100, 100, 1);
        let out = sample_unpatched(&cond, &d, &s, 5, false, None).unwrap();
        let n = out.data.len() as f64;
        let mean = out.data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let std = (out
            .data
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        assert!((mean - 0.3).abs() < 0.03 * 0.3, "{mean}");
        assert!((std - 0.1).abs() < 0.05 * 0.1, "{std}");
    }

    #[test]
    fn full_patch_reproduces_unpatched() {
        let img = smooth(24, 24);
        let d = AnalyticGaussianDenoiser::new(0.5, 0.2).unwrap();
        for last in [false, true] {
            let cfg = SamplerConfig {
                last_step_noise: last,
                ..small_cfg(24, 8)
            };
            let out =
                restore(&img, &PassthroughDecomposer, &d, &ZeroOffsetPredictor, &cfg).unwrap();
            let vanilla = sample_unpatched(
                &out.corrected,
                &d,
                &cfg.schedule().unwrap(),
                cfg.seed,
                last,
                None,
            )
            .unwrap();
            assert_eq!(out.image, vanilla.clamped());
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let img = smooth(40, 32);
        let d = AnalyticGaussianDenoiser::new(0.5, 0.2).unwrap();
        let p = HeuristicPredictor::default();
        let cfg = small_cfg(16, 8);
        let a = restore(&img, &PassthroughDecomposer, &d, &p, &cfg).unwrap();
        let b = restore(&img, &PassthroughDecomposer, &d, &p, &cfg).unwrap();
        assert_eq!(a.image, b.image);
        let c = restore(
            &img,
            &PassthroughDecomposer,
            &d,
            &p,
            &SamplerConfig {
                seed: 18,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_ne!(a.image, c.image);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let e = single
            .install(|| restore(&img, &PassthroughDecomposer, &d, &p, &cfg))
            .unwrap();
        assert_eq!(a.image, e.image);
    }

    #[test]
    fn observer_sees_every_step() {
        let img = smooth(16, 16);
        let d = AnalyticGaussianDenoiser::new(0.5, 0.2).unwrap();
        let mut seen = Vec::new();
        restore_with_observer(
            &img,
            &PassthroughDecomposer,
            &d,
            &ZeroOffsetPredictor,
            &small_cfg(16, 4),
            &mut |t, _| {
                seen.push(t);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, (0..40).rev().collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        let d = AnalyticGaussianDenoiser::new(0.5, 0.2).unwrap();
        let small = smooth(10, 10);
        assert!(matches!(
            restore(
                &small,
                &PassthroughDecomposer,
                &d,
                &ZeroOffsetPredictor,
                &small_cfg(16, 4)
            ),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(small_cfg(16, 16).validate().is_err());
        let cfg: std::result::Result<SamplerConfig, _> =
            serde_json::from_str(r#"{"steps": 3, "bogus": 1}"#);
        assert!(cfg.is_err());
        let cfg: SamplerConfig =
            serde_json::from_str(r#"{"steps": 3, "predictor": "heuristic"}"#).unwrap();
        assert_eq!(cfg.predictor, PredictorKind::Heuristic);
        assert_eq!(cfg.patch, 64);
    }
}
