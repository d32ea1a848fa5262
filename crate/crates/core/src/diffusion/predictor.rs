use serde::{Deserialize, Serialize};

pub const DEFAULT_KAPPA: f64 = 20.0;
pub const DEFAULT_MAX_OFFSET: usize = 50;

/// Maps a patch's mean transmission and the global step t to the step t̂
/// the patch is denoised at.
pub trait TimestepPredictor: Send + Sync {
    fn predict(&self, mean_t: f64, t: usize, steps: usize) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOffsetPredictor;

impl TimestepPredictor for ZeroOffsetPredictor {
    fn predict(&self, _mean_t: f64, t: usize, _steps: usize) -> usize {
        t
    }
}

/// Denser haze pushes the patch to a noisier step. Offsets are never
/// negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicPredictor {
    pub kappa: f64,
    pub max_offset: usize,
}

impl Default for HeuristicPredictor {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            max_offset: DEFAULT_MAX_OFFSET,
        }
    }
}

impl TimestepPredictor for HeuristicPredictor {
    fn predict(&self, mean_t: f64, t: usize, steps: usize) -> usize {
        dadtp_heuristic(mean_t, t, steps, self.kappa, self.max_offset)
    }
}

/// t̂ = min(t + clamp(round(κ(1 − mean_t)), 0, max_offset), T)
pub fn dadtp_heuristic(
    mean_t: f64,
    t: usize,
    steps: usize,
    kappa: f64,
    max_offset: usize,
) -> usize {
    let raw = (kappa * (1.0 - mean_t)).round();
    let delta = if raw.is_nan() || raw <= 0.0 {
        0
    } else {
        (raw.min(max_offset as f64)) as usize
    };
    (t + delta).min(steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    #[default]
    Zero,
    Heuristic,
}

impl std::str::FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(PredictorKind::Zero),
            "heuristic" => Ok(PredictorKind::Heuristic),
            other => Err(format!(
                "unknown predictor '{other}' (expected zero or heuristic)"
            )),
        }
    }
}

impl PredictorKind {
    pub fn build(self, kappa: f64, max_offset: usize) -> Box<dyn TimestepPredictor> {
        match self {
            PredictorKind::Zero => Box::new(ZeroOffsetPredictor),
            PredictorKind::Heuristic => Box::new(HeuristicPredictor { kappa, max_offset }),
        }
    }
}
