//! Synthetic duration corpora and modification sweeps.
//!
//! A reference corpus stands in for aligner output; a prediction corpus
//! stands in for a duration predictor that is slightly too fast and too
//! confident. Sweeps apply constant and random-walk modification to the
//! predictions and score each setting against the reference.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::durmod::{apply_random_walk, constant_scale, substitute_oracle, RandomWalkConfig};
use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory, ARPABET, SILENCE, SPACE};
use crate::rng;
use crate::stats::{build_histograms, kld, length_ratio, KldOptions};
use crate::utterance::{total_audio_hours, AlignedUtterance, DEFAULT_FRAME_SHIFT_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DurationFamily {
    /// Gamma-Poisson mixture with variance `μ + δ²μ²`.
    NegativeBinomial,
    /// Rounded log-normal with coefficient of variation `δ`.
    LogNormal,
}

/// Which aligner the reference imitates; sets the duration floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignerStyle {
    /// Three frames per phoneme, skippable word boundaries.
    Hmm,
    /// One frame per token.
    Ctc,
}

impl AlignerStyle {
    pub fn min_duration(self) -> u32 {
        match self {
            AlignerStyle::Hmm => 3,
            AlignerStyle::Ctc => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of distinct phonemes, taken from the start of ARPABET.
    pub phonemes: usize,
    pub family: DurationFamily,
    pub style: AlignerStyle,
    /// Explicit per-phoneme means in frames; drawn from `mean_range` when empty.
    pub phoneme_means: Vec<f64>,
    pub mean_range: [f64; 2],
    pub dispersion: f64,
    /// Mean duration of a word boundary when it is not skipped.
    pub space_mean: f64,
    /// Probability that an HMM-style boundary has zero frames.
    pub space_skip_prob: f64,
    pub mean_shrink: f64,
    pub variance_shrink: f64,
    pub utterances: usize,
    /// Phonemes per utterance, not counting word boundaries.
    pub utterance_length: usize,
    pub word_length: [usize; 2],
    pub frame_shift_ms: f64,
    pub seed: u64,
    pub sigmas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub kld_epsilon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            phonemes: 39,
            family: DurationFamily::NegativeBinomial,
            style: AlignerStyle::Hmm,
            phoneme_means: Vec::new(),
            mean_range: [6.0, 14.0],
            dispersion: 0.3,
            space_mean: 4.0,
            space_skip_prob: 0.5,
            mean_shrink: 0.92,
            variance_shrink: 0.5,
            utterances: 2000,
            utterance_length: 50,
            word_length: [2, 6],
            frame_shift_ms: DEFAULT_FRAME_SHIFT_MS,
            seed: 0,
            sigmas: vec![0.0, 0.0125, 0.025, 0.0375, 0.05],
            alphas: vec![1.0, 1.2],
            clip_lo: 0.9,
            clip_hi: 1.2,
            kld_epsilon: crate::stats::DEFAULT_KLD_EPSILON,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.phonemes == 0 || self.phonemes > ARPABET.len() {
            return bad(format!("phonemes must be in 1..={}, got {}", ARPABET.len(), self.phonemes));
        }
        if self.utterances == 0 || self.utterance_length == 0 {
            return bad("utterances and utterance_length must be positive".into());
        }
        for (name, v) in [("mean_shrink", self.mean_shrink), ("variance_shrink", self.variance_shrink)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        if !self.phoneme_means.is_empty() && self.phoneme_means.len() != self.phonemes {
            return bad(format!(
                "{} phoneme means for {} phonemes",
                self.phoneme_means.len(),
                self.phonemes
            ));
        }
        let floor = f64::from(self.style.min_duration());
        let [lo, hi] = self.mean_range;
        if !(floor <= lo && lo <= hi && hi.is_finite()) {
            return bad(format!("mean range [{lo}, {hi}] must be ordered and at least {floor}"));
        }
        if let Some(m) = self.phoneme_means.iter().find(|&&m| !(m.is_finite() && m >= floor)) {
            return bad(format!("phoneme mean {m} is below the duration floor {floor}"));
        }
        if !(self.dispersion.is_finite() && self.dispersion >= 0.0) {
            return bad(format!("dispersion must be >= 0, got {}", self.dispersion));
        }
        if !(self.space_mean.is_finite() && self.space_mean >= 1.0) {
            return bad(format!("space_mean must be >= 1, got {}", self.space_mean));
        }
        if !(0.0..=1.0).contains(&self.space_skip_prob) {
            return bad(format!("space_skip_prob must be in [0, 1], got {}", self.space_skip_prob));
        }
        let [wl, wh] = self.word_length;
        if wl == 0 || wl > wh {
            return bad(format!("word length range [{wl}, {wh}] is invalid"));
        }
        if !(self.frame_shift_ms.is_finite() && self.frame_shift_ms > 0.0) {
            return bad(format!("frame shift must be positive, got {}", self.frame_shift_ms));
        }
        if !(self.kld_epsilon.is_finite() && self.kld_epsilon > 0.0) {
            return bad(format!("kld_epsilon must be positive, got {}", self.kld_epsilon));
        }
        if self.alphas.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
            return bad("alphas must be positive".into());
        }
        self.walk(0.0).check()?;
        for &s in &self.sigmas {
            self.walk(s).check()?;
        }
        Ok(())
    }

    /// Inventory used by every simulated corpus.
    pub fn inventory(&self) -> PhonemeInventory {
        let mut symbols: Vec<&str> = ARPABET[..self.phonemes].to_vec();
        symbols.extend([SPACE, SILENCE]);
        PhonemeInventory::new(&symbols, SPACE, SILENCE).expect("ARPABET subset is a valid inventory")
    }

    /// Configured mean of each phoneme, indexed by phoneme id.
    pub fn means(&self) -> Vec<f64> {
        if !self.phoneme_means.is_empty() {
            return self.phoneme_means.clone();
        }
        let mut r = rng::stream(self.seed, "sim/means");
        let [lo, hi] = self.mean_range;
        (0..self.phonemes)
            .map(|_| lo + (hi - lo) * rng::uniform(&mut r))
            .collect()
    }

    fn walk(&self, sigma: f64) -> RandomWalkConfig {
        RandomWalkConfig {
            sigma,
            clip_lo: self.clip_lo,
            clip_hi: self.clip_hi,
            seed: self.seed,
            min_duration: 0,
        }
    }
}

/// Duration distribution of a single token type.
#[derive(Debug, Clone, Copy)]
struct TokenLaw {
    family: DurationFamily,
    mean: f64,
    floor: u32,
    dispersion: f64,
    skip_prob: f64,
}

impl TokenLaw {
    /// Mean of a non-skipped draw.
    fn mean(&self) -> f64 {
        self.mean
    }

    fn draw(&self, r: &mut ChaCha20Rng) -> Result<u32> {
        if self.skip_prob > 0.0 && rng::uniform(r) < self.skip_prob {
            return Ok(0);
        }
        let excess = self.mean - f64::from(self.floor);
        let extra = if excess <= 0.0 || self.dispersion == 0.0 {
            excess.max(0.0).round()
        } else {
            match self.family {
                DurationFamily::NegativeBinomial => {
                    let shape = 1.0 / (self.dispersion * self.dispersion);
                    let lambda = Gamma::new(shape, excess / shape)
                        .map_err(|e| Error::invalid(format!("gamma: {e}")))?
                        .sample(r);
                    if lambda <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(lambda)
                            .map_err(|e| Error::invalid(format!("poisson: {e}")))?
                            .sample(r)
                    }
                }
                DurationFamily::LogNormal => {
                    let s2 = (1.0 + self.dispersion * self.dispersion).ln();
                    LogNormal::new(excess.ln() - s2 / 2.0, s2.sqrt())
                        .map_err(|e| Error::invalid(format!("log-normal: {e}")))?
                        .sample(r)
                        .round()
                }
            }
        };
        Ok(self.floor + extra.min(f64::from(u32::MAX / 2)) as u32)
    }
}

struct Laws {
    phone: Vec<TokenLaw>,
    space: TokenLaw,
    space_id: PhonemeId,
}

impl Laws {
    fn new(cfg: &SimConfig, inv: &PhonemeInventory) -> Self {
        let floor = cfg.style.min_duration();
        let phone = cfg
            .means()
            .into_iter()
            .map(|mean| TokenLaw {
                family: cfg.family,
                mean,
                floor,
                dispersion: cfg.dispersion,
                skip_prob: 0.0,
            })
            .collect();
        let space = TokenLaw {
            family: cfg.family,
            mean: cfg.space_mean,
            floor: 1,
            dispersion: cfg.dispersion,
            skip_prob: match cfg.style {
                AlignerStyle::Hmm => cfg.space_skip_prob,
                AlignerStyle::Ctc => 0.0,
            },
        };
        Self {
            phone,
            space,
            space_id: inv.space(),
        }
    }

    fn law(&self, p: PhonemeId) -> &TokenLaw {
        if p == self.space_id {
            &self.space
        } else {
            &self.phone[p.index()]
        }
    }
}

fn utterance_id(i: usize) -> String {
    format!("sim-{i:05}")
}

/// Reference corpus: random word sequences with durations drawn per token.
pub fn generate_reference(cfg: &SimConfig) -> Result<Vec<AlignedUtterance>> {
    cfg.check()?;
    let inv = cfg.inventory();
    let laws = Laws::new(cfg, &inv);
    (0..cfg.utterances)
        .into_par_iter()
        .map(|i| {
            let id = utterance_id(i);
            let mut r = rng::stream(cfg.seed, &format!("sim/reference/{id}"));
            let [wl, wh] = cfg.word_length;
            let mut phonemes = Vec::new();
            let mut left = cfg.utterance_length;
            while left > 0 {
                if !phonemes.is_empty() {
                    phonemes.push(inv.space());
                }
                let word = r.random_range(wl..=wh).min(left);
                for _ in 0..word {
                    phonemes.push(PhonemeId(r.random_range(0..cfg.phonemes)));
                }
                left -= word;
            }
            let durations = phonemes
                .iter()
                .map(|&p| laws.law(p).draw(&mut r))
                .collect::<Result<_>>()?;
            AlignedUtterance::new(id, phonemes, durations, cfg.frame_shift_ms)
        })
        .collect()
}

/// Prediction corpus with the same token sequences as `reference`.
///
/// Each duration is an independent draw `x` from the token's reference law
/// mapped to `round(m·μ + √v·(x − μ))`, so the mean shrinks by `m` and the
/// variance by `v`. Phonemes keep at least one frame.
pub fn generate_predictions(reference: &[AlignedUtterance], cfg: &SimConfig) -> Result<Vec<AlignedUtterance>> {
    cfg.check()?;
    let inv = cfg.inventory();
    let laws = Laws::new(cfg, &inv);
    let scale = cfg.variance_shrink.sqrt();
    reference
        .par_iter()
        .map(|u| {
            let mut r = rng::stream(cfg.seed, &format!("sim/prediction/{}", u.id()));
            let durations = u
                .phonemes()
                .iter()
                .map(|&p| {
                    if !inv.contains(p) || (p.index() >= cfg.phonemes && p != inv.space()) {
                        return Err(Error::UnknownPhonemeId(p.index()));
                    }
                    let law = laws.law(p);
                    let x = f64::from(law.draw(&mut r)?);
                    if p == inv.space() && x == 0.0 {
                        return Ok(0);
                    }
                    let mu = law.mean();
                    let y = (cfg.mean_shrink * mu + scale * (x - mu)).round().max(1.0);
                    Ok(y as u32)
                })
                .collect::<Result<_>>()?;
            u.with_durations(durations)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Prediction,
    Oracle,
    Constant,
    Walk,
}

impl SweepMode {
    fn as_str(self) -> &'static str {
        match self {
            SweepMode::Prediction => "prediction",
            SweepMode::Oracle => "oracle",
            SweepMode::Constant => "constant",
            SweepMode::Walk => "walk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mode: SweepMode,
    /// `α` for constant scaling, `σ` for the walk, `None` otherwise.
    pub parameter: Option<f64>,
    pub data_hours: f64,
    pub length_ratio: f64,
    pub kld: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub reference_hours: f64,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "mode,parameter,data_hours,length_ratio,kld";

impl SweepReport {
    pub fn row(&self, mode: SweepMode, parameter: Option<f64>) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.mode == mode && r.parameter == parameter)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let param = r.parameter.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.mode.as_str(),
                param,
                r.data_hours,
                r.length_ratio,
                r.kld
            );
        }
        out
    }
}

/// Scores unmodified predictions, oracle substitution, each constant `α`
/// and each walk `σ` against the reference. Every walk uses the same
/// seed, so settings differ only by `σ`.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    reference: &[AlignedUtterance],
    predictions: &[AlignedUtterance],
    inv: &PhonemeInventory,
    sigmas: &[f64],
    alphas: &[f64],
    walk: &RandomWalkConfig,
    kld_opts: &KldOptions,
) -> Result<SweepReport> {
    if reference.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "{} reference utterances but {} predictions",
            reference.len(),
            predictions.len()
        )));
    }
    for (r, p) in reference.iter().zip(predictions) {
        if r.phonemes() != p.phonemes() {
            return Err(Error::SequenceMismatch(p.id().to_string()));
        }
    }
    let ref_hist = build_histograms(reference);
    let mut settings: Vec<(SweepMode, Option<f64>)> = vec![(SweepMode::Prediction, None), (SweepMode::Oracle, None)];
    settings.extend(alphas.iter().map(|&a| (SweepMode::Constant, Some(a))));
    settings.extend(sigmas.iter().map(|&s| (SweepMode::Walk, Some(s))));
    let rows = settings
        .par_iter()
        .map(|&(mode, parameter)| {
            let modified: Vec<AlignedUtterance> = match (mode, parameter) {
                (SweepMode::Prediction, _) => predictions.to_vec(),
                (SweepMode::Oracle, _) => predictions
                    .iter()
                    .zip(reference)
                    .map(|(p, r)| substitute_oracle(p, r))
                    .collect::<Result<_>>()?,
                (SweepMode::Constant, Some(a)) => predictions
                    .iter()
                    .map(|p| constant_scale(p, a, walk.min_duration))
                    .collect::<Result<_>>()?,
                (SweepMode::Walk, Some(s)) => {
                    let cfg = RandomWalkConfig { sigma: s, ..walk.clone() };
                    predictions
                        .iter()
                        .map(|p| apply_random_walk(p, &cfg))
                        .collect::<Result<_>>()?
                }
                _ => unreachable!("parameterised modes always carry a value"),
            };
            let report = kld(&build_histograms(&modified), &ref_hist, inv, kld_opts)?;
            Ok(SweepRow {
                mode,
                parameter,
                data_hours: total_audio_hours(&modified),
                length_ratio: length_ratio(&modified, reference)?,
                kld: report.mean,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        reference_hours: total_audio_hours(reference),
        rows,
    })
}

/// Generates both corpora from `cfg` and runs its sweep.
pub fn simulate(cfg: &SimConfig) -> Result<SweepReport> {
    let reference = generate_reference(cfg)?;
    let predictions = generate_predictions(&reference, cfg)?;
    let opts = KldOptions {
        epsilon: cfg.kld_epsilon,
        ..Default::default()
    };
    run_sweep(
        &reference,
        &predictions,
        &cfg.inventory(),
        &cfg.sigmas,
        &cfg.alphas,
        &cfg.walk(0.0),
        &opts,
    )
}
