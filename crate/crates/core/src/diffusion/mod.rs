//! Ancestral diffusion sampling over overlapping patches with per-patch
//! timestep offsets.

mod denoiser;
mod noise;
mod patches;
mod predictor;
mod sampler;
mod schedule;

pub use denoiser::{
    training_loss, AnalyticGaussianDenoiser, Denoiser, ExternalDenoiser, ZeroDenoiser,
};
pub use noise::{initial_noise, step_noise, NoiseSource};
pub use patches::{extract_patches, fuse_noise_estimates, fuse_patch_scalars, PatchGrid};
pub use predictor::{
    dadtp_heuristic, HeuristicPredictor, PredictorKind, TimestepPredictor, ZeroOffsetPredictor,
};
pub use sampler::{
    restore, restore_with_observer, reverse_pixel, sample_unpatched, RestoreOutput, SamplerConfig,
    TransmissionSource,
};
pub use schedule::{forward_sample, make_schedule, reverse_step, NoiseSchedule};
