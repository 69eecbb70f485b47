//! Per-phoneme duration distributions and the mean-KLd metric.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};
use crate::utterance::{total_audio_hours, AlignedUtterance};

pub const DEFAULT_KLD_EPSILON: f64 = 0.5;

/// `phoneme → duration → count`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DurationHistogram {
    counts: BTreeMap<PhonemeId, BTreeMap<u32, u64>>,
}

impl DurationHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, phoneme: PhonemeId, duration: u32) {
        *self
            .counts
            .entry(phoneme)
            .or_default()
            .entry(duration)
            .or_insert(0) += 1;
    }

    pub fn add_utterance(&mut self, u: &AlignedUtterance) {
        for (p, d) in u.pairs() {
            self.add(p, d);
        }
    }

    /// Commutative, associative merge of partial histograms.
    pub fn merge(&mut self, other: &DurationHistogram) {
        for (&p, bins) in &other.counts {
            let mine = self.counts.entry(p).or_default();
            for (&d, &c) in bins {
                *mine.entry(d).or_insert(0) += c;
            }
        }
    }

    pub fn phoneme(&self, p: PhonemeId) -> Option<&BTreeMap<u32, u64>> {
        self.counts.get(&p)
    }

    pub fn phonemes(&self) -> impl Iterator<Item = PhonemeId> + '_ {
        self.counts.keys().copied()
    }

    pub fn occurrences(&self, p: PhonemeId) -> u64 {
        self.counts.get(&p).map_or(0, |b| b.values().sum())
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PhonemeId, &BTreeMap<u32, u64>)> {
        self.counts.iter().map(|(&p, b)| (p, b))
    }
}

pub fn build_histograms(corpus: &[AlignedUtterance]) -> DurationHistogram {
    let mut h = DurationHistogram::new();
    for u in corpus {
        h.add_utterance(u);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KldWeighting {
    /// Every phoneme counts once.
    Unweighted,
    /// Phonemes weighted by their reference occurrence count.
    Occurrence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KldOptions {
    pub epsilon: f64,
    pub weighting: KldWeighting,
    /// Also score `[space]` and silence tokens.
    pub include_boundaries: bool,
}

impl Default for KldOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_KLD_EPSILON,
            weighting: KldWeighting::Unweighted,
            include_boundaries: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KldReport {
    /// `KL(pred ‖ ref)` per scored phoneme symbol.
    pub per_phoneme: BTreeMap<String, f64>,
    pub mean: f64,
    pub epsilon: f64,
    pub weighting: KldWeighting,
    /// Reference phonemes with no predicted occurrence (not scored).
    pub missing_in_pred: Vec<String>,
    /// Predicted phonemes never seen in the reference (not scored).
    pub missing_in_ref: Vec<String>,
}

/// Smoothed `KL(P_pred ‖ P_ref)` for one phoneme over the union support.
pub fn kl_divergence_smoothed(
    pred: &BTreeMap<u32, u64>,
    reference: &BTreeMap<u32, u64>,
    epsilon: f64,
) -> f64 {
    let mut support: Vec<u32> = pred.keys().chain(reference.keys()).copied().collect();
    support.sort_unstable();
    support.dedup();
    let k = support.len() as f64;
    let np = pred.values().sum::<u64>() as f64 + epsilon * k;
    let nr = reference.values().sum::<u64>() as f64 + epsilon * k;
    let mut kl = 0.0;
    for d in support {
        let p = (pred.get(&d).copied().unwrap_or(0) as f64 + epsilon) / np;
        let q = (reference.get(&d).copied().unwrap_or(0) as f64 + epsilon) / nr;
        kl += p * (p / q).ln();
    }
    // Rounding can leave a tiny negative residue.
    kl.max(0.0)
}

pub fn kld(
    pred: &DurationHistogram,
    reference: &DurationHistogram,
    inv: &PhonemeInventory,
    opts: &KldOptions,
) -> Result<KldReport> {
    if !(opts.epsilon.is_finite() && opts.epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    let scored = |p: PhonemeId| opts.include_boundaries || !inv.is_boundary(p);
    if !reference.phonemes().any(scored) {
        return Err(Error::invalid("reference histogram is empty"));
    }
    let mut per_phoneme = BTreeMap::new();
    let mut missing_in_pred = Vec::new();
    let (mut total, mut weight_sum) = (0.0, 0.0);
    for (p, ref_bins) in reference.iter().filter(|(p, _)| scored(*p)) {
        let symbol = inv.symbol(p)?.to_string();
        let Some(pred_bins) = pred.phoneme(p) else {
            missing_in_pred.push(symbol);
            continue;
        };
        let kl = kl_divergence_smoothed(pred_bins, ref_bins, opts.epsilon);
        let w = match opts.weighting {
            KldWeighting::Unweighted => 1.0,
            KldWeighting::Occurrence => reference.occurrences(p) as f64,
        };
        total += w * kl;
        weight_sum += w;
        per_phoneme.insert(symbol, kl);
    }
    let missing_in_ref = pred
        .phonemes()
        .filter(|&p| scored(p) && reference.phoneme(p).is_none())
        .map(|p| inv.symbol(p).map(str::to_string))
        .collect::<Result<_>>()?;
    Ok(KldReport {
        per_phoneme,
        mean: if weight_sum > 0.0 { total / weight_sum } else { 0.0 },
        epsilon: opts.epsilon,
        weighting: opts.weighting,
        missing_in_pred,
        missing_in_ref,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhonemeStats {
    pub count: u64,
    pub mean: f64,
    /// Population variance in frames².
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationStats {
    pub per_phoneme: BTreeMap<String, PhonemeStats>,
    pub utterances: usize,
    pub phonemes: u64,
    pub total_frames: u64,
    pub hours: f64,
    pub mean_duration: f64,
}

pub fn summary(corpus: &[AlignedUtterance], inv: &PhonemeInventory) -> Result<DurationStats> {
    let hist = build_histograms(corpus);
    let mut per_phoneme = BTreeMap::new();
    for (p, bins) in hist.iter() {
        let count: u64 = bins.values().sum();
        let n = count as f64;
        let mean = bins.iter().map(|(&d, &c)| f64::from(d) * c as f64).sum::<f64>() / n;
        let variance = bins
            .iter()
            .map(|(&d, &c)| (f64::from(d) - mean).powi(2) * c as f64)
            .sum::<f64>()
            / n;
        per_phoneme.insert(
            inv.symbol(p)?.to_string(),
            PhonemeStats { count, mean, variance },
        );
    }
    let phonemes: u64 = corpus.iter().map(|u| u.len() as u64).sum();
    let total_frames = total_frames(corpus);
    Ok(DurationStats {
        per_phoneme,
        utterances: corpus.len(),
        phonemes,
        total_frames,
        hours: total_audio_hours(corpus),
        mean_duration: if phonemes > 0 {
            total_frames as f64 / phonemes as f64
        } else {
            0.0
        },
    })
}

pub fn total_frames(corpus: &[AlignedUtterance]) -> u64 {
    corpus.iter().map(AlignedUtterance::total_frames).sum()
}

/// `frames(a) / frames(b)`.
pub fn length_ratio(a: &[AlignedUtterance], b: &[AlignedUtterance]) -> Result<f64> {
    let denom = total_frames(b);
    if denom == 0 {
        return Err(Error::invalid("length ratio against an empty corpus"));
    }
    Ok(total_frames(a) as f64 / denom as f64)
}

pub const HISTOGRAM_CSV_HEADER: &str = "duration,count";

/// `duration,count` rows sorted by duration, preceded by a header row.
pub fn export_histogram_csv(
    h: &DurationHistogram,
    inv: &PhonemeInventory,
    phoneme: &str,
) -> Result<String> {
    let id = inv.id(phoneme)?;
    let mut out = String::from(HISTOGRAM_CSV_HEADER);
    out.push('\n');
    if let Some(bins) = h.phoneme(id) {
        for (d, c) in bins {
            out.push_str(&format!("{d},{c}\n"));
        }
    }
    Ok(out)
}

pub fn parse_histogram_csv(text: &str) -> Result<BTreeMap<u32, u64>> {
    let mut bins = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == HISTOGRAM_CSV_HEADER) {
            continue;
        }
        let parse_err = |m: String| Error::Parse {
            path: "<histogram>".into(),
            line: i + 1,
            message: m,
        };
        let (d, c) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected duration,count".into()))?;
        let d = d.trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        let c = c.trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        bins.insert(d, c);
    }
    Ok(bins)
}
