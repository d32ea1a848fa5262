use std::path::PathBuf;
use std::process::Command;

use super::{forward_sample, NoiseSchedule};
use crate::decomposition::CompressionSpectrum;
use crate::error::{Error, Result};
use crate::image::{load_tensor, save_tensor, ImageF32};

/// Noise predictor: (condition, noisy state, γ) → ε̂ shaped like the state.
/// The compression spectrum is passed through as optional side
/// information.
pub trait Denoiser: Send + Sync {
    fn estimate(
        &self,
        cond: &ImageF32,
        noisy: &ImageF32,
        gamma: f64,
        spectrum: Option<&CompressionSpectrum>,
    ) -> Result<ImageF32>;
}

/// Exact posterior-mean noise prediction for data drawn i.i.d. from
/// N(μ, σ²). Ignores the condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticGaussianDenoiser {
    pub mu: f64,
    pub sigma: f64,
}

impl AnalyticGaussianDenoiser {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::param(format!(
                "need finite mu and sigma >= 0, got ({mu}, {sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// E[J₀ | J_t] under the Gaussian prior.
    pub fn posterior_mean(&self, jt: f64, gamma: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let gain = gamma.sqrt() * s2 / (gamma * s2 + 1.0 - gamma);
        self.mu + gain * (jt - gamma.sqrt() * self.mu)
    }

    pub fn eps_hat(&self, jt: f64, gamma: f64) -> f64 {
        (jt - gamma.sqrt() * self.posterior_mean(jt, gamma)) / (1.0 - gamma).sqrt()
    }
}

impl Denoiser for AnalyticGaussianDenoiser {
    fn estimate(
        &self,
        _cond: &ImageF32,
        noisy: &ImageF32,
        gamma: f64,
        _s: Option<&CompressionSpectrum>,
    ) -> Result<ImageF32> {
        if gamma >= 1.0 {
            return Err(Error::Denoiser(
                "gamma = 1 leaves no noise to estimate".into(),
            ));
        }
        Ok(ImageF32 {
            data: noisy
                .data
                .iter()
                .map(|&v| self.eps_hat(v as f64, gamma) as f32)
                .collect(),
            ..noisy.clone()
        })
    }
}

/// Always predicts zero noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDenoiser;

impl Denoiser for ZeroDenoiser {
    fn estimate(
        &self,
        _cond: &ImageF32,
        noisy: &ImageF32,
        _gamma: f64,
        _s: Option<&CompressionSpectrum>,
    ) -> Result<ImageF32> {
        Ok(ImageF32::zeros(noisy.width, noisy.height, noisy.channels))
    }
}

/// Runs `program [args..] <cond.fdgt> <noisy.fdgt> <gamma> <out.fdgt>` per
/// evaluation and reads ε̂ back from `out.fdgt`.
#[derive(Debug, Clone)]
pub struct ExternalDenoiser {
    pub program: String,
    pub args: Vec<String>,
    pub workdir: PathBuf,
}

impl Denoiser for ExternalDenoiser {
    fn estimate(
        &self,
        cond: &ImageF32,
        noisy: &ImageF32,
        gamma: f64,
        _s: Option<&CompressionSpectrum>,
    ) -> Result<ImageF32> {
        let tag = format!("{:?}", std::thread::current().id())
            .chars()
            .filter(char::is_ascii_digit)
            .collect::<String>();
        let c = self.workdir.join(format!("cond_{tag}.fdgt"));
        let n = self.workdir.join(format!("noisy_{tag}.fdgt"));
        let o = self.workdir.join(format!("eps_{tag}.fdgt"));
        save_tensor(cond, &c)?;
        save_tensor(noisy, &n)?;
        let status = Command::new(&self.program)
            .args(&self.args)
            .arg(&c)
            .arg(&n)
            .arg(format!("{gamma:.17e}"))
            .arg(&o)
            .status()
            .map_err(|e| Error::Denoiser(format!("cannot run {}: {e}", self.program)))?;
        if !status.success() {
            return Err(Error::Denoiser(format!(
                "{} exited with {status}",
                self.program
            )));
        }
        let eps = load_tensor(&o)?;
        if eps.dims() != noisy.dims() {
            return Err(Error::Denoiser(format!(
                "estimate has dims {:?}, expected {:?}",
                eps.dims(),
                noisy.dims()
            )));
        }
        Ok(eps)
    }
}

/// Mean |d(cond, J_t, γ_t) − ε| with J_t drawn by the forward process.
pub fn training_loss(
    d: &dyn Denoiser,
    cond: &ImageF32,
    j0: &ImageF32,
    t: usize,
    eps: &ImageF32,
    s: &NoiseSchedule,
) -> Result<f64> {
    let jt = forward_sample(j0, t, eps, s)?;
    let pred = d.estimate(cond, &jt, s.gamma(t), None)?;
    pred.ensure_same_dims(eps)?;
    if eps.data.is_empty() {
        return Err(Error::Empty("noise field"));
    }
    Ok(pred
        .data
        .iter()
        .zip(&eps.data)
        .map(|(a, b)| (*a as f64 - *b as f64).abs())
        .sum::<f64>()
        / eps.data.len() as f64)
}
