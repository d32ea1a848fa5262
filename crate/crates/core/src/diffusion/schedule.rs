use crate::error::{Error, Result};
use crate::image::ImageF32;

/// Retention factors α_t and their running products γ_t, indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alpha: Vec<f64>,
    gamma: Vec<f64>,
}

/// β linearly spaced from `beta_min` to `beta_max`, α = 1 − β.
pub fn make_schedule(steps: usize, beta_min: f64, beta_max: f64) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::param("schedule needs at least one step"));
    }
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::param(format!(
            "need 0 < beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"
        )));
    }
    let alpha = (0..steps)
        .map(|i| {
            let frac = if steps == 1 {
                0.0
            } else {
                i as f64 / (steps - 1) as f64
            };
            1.0 - (beta_min + (beta_max - beta_min) * frac)
        })
        .collect();
    NoiseSchedule::from_alphas(alpha)
}

impl NoiseSchedule {
    /// Accepts α_t ∈ (0, 1]; α_t = 1 yields the degenerate schedules used
    /// in tests.
    pub fn from_alphas(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::param("schedule needs at least one step"));
        }
        if let Some(a) = alpha.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::param(format!("alpha {a} outside (0, 1]")));
        }
        let mut gamma = Vec::with_capacity(alpha.len());
        let mut g = 1.0;
        for &a in &alpha {
            g *= a;
            gamma.push(g);
        }
        Ok(Self { alpha, gamma })
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    /// α_t for t in 1..=T.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// γ_t for t in 1..=T.
    pub fn gamma(&self, t: usize) -> f64 {
        self.gamma[t - 1]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::param(format!(
                "timestep {t} outside 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }
}

/// √γ_t·J₀ + √(1−γ_t)·ε
pub fn forward_sample(
    j0: &ImageF32,
    t: usize,
    eps: &ImageF32,
    s: &NoiseSchedule,
) -> Result<ImageF32> {
    j0.ensure_same_dims(eps)?;
    s.check_step(t)?;
    let g = s.gamma(t);
    let (a, b) = (g.sqrt(), (1.0 - g).sqrt());
    Ok(ImageF32 {
        data: j0
            .data
            .iter()
            .zip(&eps.data)
            .map(|(&x, &e)| (a * x as f64 + b * e as f64) as f32)
            .collect(),
        ..j0.clone()
    })
}

/// One ancestral step from t̂ to t̂−1. The stochastic term is dropped at
/// t̂ = 1 or when `noise` is `None`.
pub fn reverse_step(
    j: &ImageF32,
    eps_hat: &ImageF32,
    t_hat: usize,
    s: &NoiseSchedule,
    noise: Option<&ImageF32>,
) -> Result<ImageF32> {
    j.ensure_same_dims(eps_hat)?;
    s.check_step(t_hat)?;
    let (alpha, gamma) = (s.alpha(t_hat), s.gamma(t_hat));
    if gamma >= 1.0 {
        return Err(Error::ScheduleDegenerate(t_hat));
    }
    let noise = if t_hat == 1 { None } else { noise };
    if let Some(n) = noise {
        j.ensure_same_dims(n)?;
    }
    Ok(ImageF32 {
        data: (0..j.data.len())
            .map(|i| {
                let z = noise.map_or(0.0, |n| n.data[i] as f64);
                super::reverse_pixel(j.data[i] as f64, eps_hat.data[i] as f64, alpha, gamma, z)
                    as f32
            })
            .collect(),
        ..j.clone()
    })
}
