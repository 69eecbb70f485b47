//! Monophone HMM-GMM forced aligner.

mod gmm;
mod init;
mod model;
mod topology;
mod train;
mod trim;
mod viterbi;

use serde::{Deserialize, Serialize};

pub use gmm::{Component, HmmState};
pub use init::linear_segment_init;
pub use model::{HmmModel, MODEL_FORMAT, MODEL_VERSION, STATES_PER_PHONEME};
pub use topology::StateLabel;
pub use train::{
    em_iteration, init_model, split_mixtures, train_monophone, PhaseReport, TrainConfig,
    TrainReport, TrainingUtterance,
};
pub use trim::{silent_frames, trim_range, trim_silence, DEFAULT_SILENCE_DB};
pub use viterbi::viterbi_align;

use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};
use crate::utterance::AlignedUtterance;

/// A contiguous run of frames on one transcript token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    /// Transcript position, `None` for unattached silence.
    pub token: Option<usize>,
    pub start: usize,
    pub duration: usize,
}

/// Per-frame state labels for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment {
    pub utterance_id: String,
    pub transcript: Vec<PhonemeId>,
    pub frames: Vec<StateLabel>,
    pub frame_shift_ms: f64,
    /// Best-path score; `None` for the linear initial segmentation.
    pub log_likelihood: Option<f64>,
}

impl FrameAlignment {
    /// Maximal runs of frames sharing a token; tiles `[0, T)`.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for (t, label) in self.frames.iter().enumerate() {
            let token = label.token();
            match out.last_mut() {
                Some(s) if s.token == token => s.duration += 1,
                _ => out.push(Segment {
                    token,
                    start: t,
                    duration: 1,
                }),
            }
        }
        out
    }

    pub fn to_record(&self, inv: &PhonemeInventory) -> Result<FrameAlignmentRecord> {
        Ok(FrameAlignmentRecord {
            id: self.utterance_id.clone(),
            phonemes: self
                .transcript
                .iter()
                .map(|&p| inv.symbol(p).map(str::to_string))
                .collect::<Result<_>>()?,
            frame_tokens: self.frames.iter().map(|l| l.token()).collect(),
            frame_states: self
                .frames
                .iter()
                .map(|l| match l {
                    StateLabel::Phone { sub, .. } => Some(*sub),
                    StateLabel::Silence { .. } => None,
                })
                .collect(),
            frame_shift_ms: self.frame_shift_ms,
            log_likelihood: self.log_likelihood,
        })
    }

    pub fn from_record(rec: &FrameAlignmentRecord, inv: &PhonemeInventory) -> Result<Self> {
        let transcript = inv.ids(&rec.phonemes)?;
        if rec.frame_tokens.len() != rec.frame_states.len() {
            return Err(Error::invalid(format!(
                "alignment {}: frame_tokens and frame_states differ in length",
                rec.id
            )));
        }
        let frames = rec
            .frame_tokens
            .iter()
            .zip(&rec.frame_states)
            .map(|(&token, &sub)| {
                if let Some(tok) = token {
                    if tok >= transcript.len() {
                        return Err(Error::invalid(format!(
                            "alignment {}: token {tok} outside transcript",
                            rec.id
                        )));
                    }
                }
                match (token, sub) {
                    (Some(token), Some(sub)) if (sub as usize) < STATES_PER_PHONEME => {
                        Ok(StateLabel::Phone { token, sub })
                    }
                    (token, None) => Ok(StateLabel::Silence { token }),
                    _ => Err(Error::invalid(format!("alignment {}: bad frame state", rec.id))),
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            utterance_id: rec.id.clone(),
            transcript,
            frames,
            frame_shift_ms: rec.frame_shift_ms,
            log_likelihood: rec.log_likelihood,
        })
    }
}

/// JSON-lines form of a [`FrameAlignment`]: per frame, the transcript
/// token index and the emitting sub-state (`null` for silence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAlignmentRecord {
    pub id: String,
    pub phonemes: Vec<String>,
    pub frame_tokens: Vec<Option<usize>>,
    pub frame_states: Vec<Option<u8>>,
    pub frame_shift_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
}

/// Per-token durations. Every transcript token appears in the output;
/// a `[space]` whose silence was skipped gets zero frames. Unattached
/// silence frames (initial segmentation only) join the preceding token,
/// or the first token when they lead the utterance.
pub fn extract_durations(a: &FrameAlignment, inv: &PhonemeInventory) -> Result<AlignedUtterance> {
    let mut durations = vec![0u32; a.transcript.len()];
    let mut last: Option<usize> = None;
    let mut leading = 0u32;
    for label in &a.frames {
        match label.token().or(last) {
            Some(tok) => {
                durations[tok] += 1;
                last = Some(tok);
            }
            None => leading += 1,
        }
    }
    if leading > 0 {
        if durations.is_empty() {
            return Err(Error::invalid(format!("alignment {} has no tokens", a.utterance_id)));
        }
        durations[0] += leading;
    }
    AlignedUtterance::new(
        a.utterance_id.clone(),
        a.transcript.clone(),
        durations,
        a.frame_shift_ms,
    )?
    .validate(inv)
}
