//! Frequency-domain analysis and guided diffusion restoration of
//! JPEG-compressed hazy images.
//!
//! The crate covers the full degradation chain (atmospheric scattering,
//! blockwise DCT quantization, baseline JFIF coding), the log-DCT spectrum
//! decomposition, wavelet/cross-attention high-frequency compensation and a
//! patch-based diffusion sampler with per-patch timestep offsets. Learned
//! components are reached through traits ([`decomposition::Decomposer`],
//! [`diffusion::Denoiser`], [`diffusion::TimestepPredictor`]) with analytic
//! implementations supplied here.

pub mod cli;
pub mod decomposition;
pub mod diffusion;
pub mod error;
pub mod guidance;
pub mod haze;
pub mod image;
pub mod jfif;
pub mod jpeg;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use image::{ImageF32, ImageU8, Plane};
