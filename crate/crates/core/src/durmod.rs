//! Synthesis-time duration modification.
//!
//! Two schemes are supported: a constant factor applied to every
//! duration, and per-phoneme factors taken from a mean-centred Gaussian
//! random walk. Fractional durations exist only inside this module;
//! results are always rounded half away from zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Gaussian};
use crate::utterance::AlignedUtterance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomWalkConfig {
    /// Standard deviation of each walk step.
    pub sigma: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub seed: u64,
    pub min_duration: u32,
}

impl Default for RandomWalkConfig {
    fn default() -> Self {
        Self {
            sigma: 0.025,
            clip_lo: 0.9,
            clip_hi: 1.2,
            seed: 0,
            min_duration: 0,
        }
    }
}

impl RandomWalkConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.clip_lo <= 1.0 && 1.0 <= self.clip_hi) {
            return Err(Error::invalid(format!(
                "clip range [{}, {}] must contain 1",
                self.clip_lo, self.clip_hi
            )));
        }
        Ok(())
    }
}

/// Per-phoneme scale factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSequence {
    /// `1 + α'_n − mean(α')`, before clipping.
    pub centered: Vec<f64>,
    /// Clipped factors actually applied.
    pub alphas: Vec<f64>,
}

/// Draws `n` scale factors from `rng`.
///
/// The walk starts at zero and takes one Gaussian step per phoneme, so
/// the `n` factors are built from `α'_1..α'_n` and centred over exactly
/// those values.
pub fn random_walk_scales_with<R: rand::RngCore>(
    n: usize,
    cfg: &RandomWalkConfig,
    gauss: &mut Gaussian<R>,
) -> Result<ScaleSequence> {
    if n == 0 {
        return Err(Error::invalid("random walk needs at least one phoneme"));
    }
    cfg.check()?;
    let mut walk = Vec::with_capacity(n);
    let mut pos = 0.0;
    for _ in 0..n {
        pos += cfg.sigma * gauss.standard();
        walk.push(pos);
    }
    let mean = walk.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = walk.iter().map(|a| 1.0 + (a - mean)).collect();
    let alphas = centered
        .iter()
        .map(|a| a.clamp(cfg.clip_lo, cfg.clip_hi))
        .collect();
    Ok(ScaleSequence { centered, alphas })
}

/// Scale factors from the stream named by `cfg.seed` alone.
pub fn random_walk_scales(n: usize, cfg: &RandomWalkConfig) -> Result<ScaleSequence> {
    let mut g = Gaussian::new(rng::stream(cfg.seed, "random-walk"));
    random_walk_scales_with(n, cfg, &mut g)
}

/// Integer rounding used for every scaled duration.
pub fn round_duration(x: f64, min_duration: u32) -> u32 {
    // f64::round is half-away-from-zero; durations are non-negative.
    let r = x.round().max(0.0);
    (r.min(f64::from(u32::MAX)) as u32).max(min_duration)
}

pub fn constant_scale(u: &AlignedUtterance, alpha: f64, min_duration: u32) -> Result<AlignedUtterance> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let durations = u
        .durations()
        .iter()
        .map(|&d| round_duration(f64::from(d) * alpha, min_duration))
        .collect();
    u.with_durations(durations)
}

/// Stream name for an utterance's walk.
fn walk_stream_name(utterance_id: &str) -> String {
    format!("random-walk/{utterance_id}")
}

/// Random-walk modification; the walk depends only on `(cfg.seed, id)`.
pub fn apply_random_walk(u: &AlignedUtterance, cfg: &RandomWalkConfig) -> Result<AlignedUtterance> {
    cfg.check()?;
    if u.is_empty() {
        return Ok(u.clone());
    }
    let mut g = Gaussian::new(rng::stream(cfg.seed, &walk_stream_name(u.id())));
    let scales = random_walk_scales_with(u.len(), cfg, &mut g)?;
    let durations = u
        .durations()
        .iter()
        .zip(&scales.alphas)
        .map(|(&d, &a)| round_duration(f64::from(d) * a, cfg.min_duration))
        .collect();
    u.with_durations(durations)
}

/// Replaces predicted durations with reference ones.
pub fn substitute_oracle(
    predicted: &AlignedUtterance,
    reference: &AlignedUtterance,
) -> Result<AlignedUtterance> {
    if predicted.phonemes() != reference.phonemes() {
        return Err(Error::SequenceMismatch(predicted.id().to_string()));
    }
    predicted.with_durations(reference.durations().to_vec())
}
