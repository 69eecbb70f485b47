use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};

pub const DEFAULT_FRAME_SHIFT_MS: f64 = 12.5;

const MS_PER_HOUR: f64 = 3.6e6;

/// One line of the JSON-lines alignment format.
///
/// `durations` may be absent when the record is only a transcript (CTC
/// label input). Durations are read as signed integers so that negative
/// values surface as a validation error rather than a parse failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub phonemes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<Vec<i64>>,
    #[serde(default = "default_shift")]
    pub frame_shift_ms: f64,
}

fn default_shift() -> f64 {
    DEFAULT_FRAME_SHIFT_MS
}

/// Phoneme sequence with integer frame durations.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedUtterance {
    id: String,
    phonemes: Vec<PhonemeId>,
    durations: Vec<u32>,
    frame_shift_ms: f64,
}

impl AlignedUtterance {
    pub fn new(
        id: impl Into<String>,
        phonemes: Vec<PhonemeId>,
        durations: Vec<u32>,
        frame_shift_ms: f64,
    ) -> Result<Self> {
        let id = id.into();
        if phonemes.len() != durations.len() {
            return Err(Error::LengthMismatch {
                id,
                len_phonemes: phonemes.len(),
                len_durations: durations.len(),
            });
        }
        if !(frame_shift_ms.is_finite() && frame_shift_ms > 0.0) {
            return Err(Error::invalid(format!(
                "utterance {id}: frame shift must be positive, got {frame_shift_ms}"
            )));
        }
        Ok(Self {
            id,
            phonemes,
            durations,
            frame_shift_ms,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn phonemes(&self) -> &[PhonemeId] {
        &self.phonemes
    }

    pub fn durations(&self) -> &[u32] {
        &self.durations
    }

    pub fn frame_shift_ms(&self) -> f64 {
        self.frame_shift_ms
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    /// Total frame count `T`.
    pub fn total_frames(&self) -> u64 {
        self.durations.iter().map(|&d| u64::from(d)).sum()
    }

    /// Same phonemes and shift with new durations.
    pub fn with_durations(&self, durations: Vec<u32>) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.phonemes.clone(),
            durations,
            self.frame_shift_ms,
        )
    }

    pub fn pairs(&self) -> impl Iterator<Item = (PhonemeId, u32)> + '_ {
        self.phonemes
            .iter()
            .copied()
            .zip(self.durations.iter().copied())
    }

    /// Checks membership of every phoneme id in `inv`.
    pub fn validate(self, inv: &PhonemeInventory) -> Result<Self> {
        if let Some(p) = self.phonemes.iter().find(|p| !inv.contains(**p)) {
            return Err(Error::UnknownPhonemeId(p.0));
        }
        Ok(self)
    }

    /// HMM-derived alignments may only give zero frames to `[space]` or
    /// silence.
    pub fn validate_hmm_derived(&self, inv: &PhonemeInventory) -> Result<()> {
        for (i, (p, d)) in self.pairs().enumerate() {
            if d == 0 && !inv.is_boundary(p) {
                return Err(Error::invalid(format!(
                    "utterance {}: phoneme {} at position {i} has zero duration",
                    self.id,
                    inv.symbol(p)?
                )));
            }
        }
        Ok(())
    }

    pub fn to_record(&self, inv: &PhonemeInventory) -> Result<UtteranceRecord> {
        Ok(UtteranceRecord {
            id: self.id.clone(),
            phonemes: self
                .phonemes
                .iter()
                .map(|&p| inv.symbol(p).map(str::to_string))
                .collect::<Result<_>>()?,
            durations: Some(self.durations.iter().map(|&d| i64::from(d)).collect()),
            frame_shift_ms: self.frame_shift_ms,
        })
    }
}

/// A phoneme sequence without durations.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub id: String,
    pub phonemes: Vec<PhonemeId>,
    pub frame_shift_ms: f64,
}

impl Transcript {
    pub fn from_record(rec: &UtteranceRecord, inv: &PhonemeInventory) -> Result<Self> {
        Ok(Self {
            id: rec.id.clone(),
            phonemes: inv.ids(&rec.phonemes)?,
            frame_shift_ms: rec.frame_shift_ms,
        })
    }
}

impl From<&AlignedUtterance> for Transcript {
    fn from(u: &AlignedUtterance) -> Self {
        Transcript {
            id: u.id.clone(),
            phonemes: u.phonemes.clone(),
            frame_shift_ms: u.frame_shift_ms,
        }
    }
}

/// Turns a file record into a checked utterance.
pub fn validate_utterance(rec: &UtteranceRecord, inv: &PhonemeInventory) -> Result<AlignedUtterance> {
    let durations = rec.durations.as_deref().unwrap_or(&[]);
    if rec.phonemes.len() != durations.len() {
        return Err(Error::LengthMismatch {
            id: rec.id.clone(),
            len_phonemes: rec.phonemes.len(),
            len_durations: durations.len(),
        });
    }
    let phonemes = inv.ids(&rec.phonemes)?;
    let durations = durations
        .iter()
        .enumerate()
        .map(|(position, &value)| {
            u32::try_from(value).map_err(|_| {
                if value < 0 {
                    Error::NegativeDuration {
                        id: rec.id.clone(),
                        position,
                        value,
                    }
                } else {
                    Error::invalid(format!("utterance {}: duration {value} too large", rec.id))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AlignedUtterance::new(rec.id.clone(), phonemes, durations, rec.frame_shift_ms)?.validate(inv)
}

/// Corpus length in hours: `Σ T · shift / 3.6e6`.
pub fn total_audio_hours(corpus: &[AlignedUtterance]) -> f64 {
    corpus
        .iter()
        .map(|u| u.total_frames() as f64 * u.frame_shift_ms)
        .sum::<f64>()
        / MS_PER_HOUR
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(phonemes: &[&str], durations: &[i64]) -> UtteranceRecord {
        UtteranceRecord {
            id: "u".into(),
            phonemes: phonemes.iter().map(|s| s.to_string()).collect(),
            durations: Some(durations.to_vec()),
            frame_shift_ms: 12.5,
        }
    }

    #[test]
    fn minimal_valid_utterance() {
        let inv = PhonemeInventory::arpabet();
        let u = validate_utterance(&rec(&["AH"], &[3]), &inv).unwrap();
        assert_eq!(u.durations(), [3]);
        assert_eq!(u.total_frames(), 3);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let inv = PhonemeInventory::arpabet();
        let err = validate_utterance(&rec(&["AH"], &[3, 1]), &inv).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn negative_duration_is_rejected() {
        let inv = PhonemeInventory::arpabet();
        let err = validate_utterance(&rec(&["AH"], &[-1]), &inv).unwrap_err();
        assert!(matches!(err, Error::NegativeDuration { value: -1, .. }));
    }

    #[test]
    fn unknown_phoneme_is_rejected() {
        let inv = PhonemeInventory::arpabet();
        assert!(matches!(
            validate_utterance(&rec(&["QQ"], &[1]), &inv),
            Err(Error::UnknownPhoneme(_))
        ));
        let bad = AlignedUtterance::new("x", vec![PhonemeId(999)], vec![1], 12.5).unwrap();
        assert!(bad.validate(&inv).is_err());
    }

    #[test]
    fn validation_is_idempotent() {
        let inv = PhonemeInventory::arpabet();
        let u = validate_utterance(&rec(&["AH", "[space]", "SH"], &[3, 0, 7]), &inv).unwrap();
        let again = validate_utterance(&u.to_record(&inv).unwrap(), &inv).unwrap();
        assert_eq!(u, again);
    }

    #[test]
    fn hours() {
        let inv = PhonemeInventory::arpabet();
        let ah = inv.id("AH").unwrap();
        let one = AlignedUtterance::new("a", vec![ah], vec![288_000], 12.5).unwrap();
        assert_eq!(total_audio_hours(&[one]), 1.0);
        assert_eq!(total_audio_hours(&[]), 0.0);
        let half = AlignedUtterance::new("b", vec![ah], vec![144_000], 12.5).unwrap();
        assert_eq!(total_audio_hours(&[half.clone(), half]), 1.0);
    }

    #[test]
    fn hours_scale_with_frame_shift() {
        let inv = PhonemeInventory::arpabet();
        let ah = inv.id("AH").unwrap();
        let a = AlignedUtterance::new("a", vec![ah], vec![1000], 12.5).unwrap();
        let b = AlignedUtterance::new("a", vec![ah], vec![1000], 25.0).unwrap();
        assert_eq!(total_audio_hours(&[b]), 2.0 * total_audio_hours(&[a]));
    }

    #[test]
    fn zero_duration_rule_for_hmm_alignments() {
        let inv = PhonemeInventory::arpabet();
        let ok = validate_utterance(&rec(&["AH", "[space]", "SH"], &[3, 0, 3]), &inv).unwrap();
        assert!(ok.validate_hmm_derived(&inv).is_ok());
        let bad = validate_utterance(&rec(&["AH", "SH"], &[0, 3]), &inv).unwrap();
        assert!(bad.validate_hmm_derived(&inv).is_err());
    }
}
