use super::model::STATES_PER_PHONEME;
use super::topology::{phone_count, StateLabel};
use super::trim::silent_frames;
use super::FrameAlignment;
use crate::error::{Error, Result};
use crate::inventory::PhonemeInventory;
use crate::matrix::FeatureMatrix;
use crate::utterance::Transcript;

/// Initial alignment: non-silent frames are split into equal runs (±1)
/// over the emitting states in transcript order; silent frames go to the
/// silence state without a transcript token.
pub fn linear_segment_init(
    f: &FeatureMatrix,
    transcript: &Transcript,
    inv: &PhonemeInventory,
    energy_dim: usize,
    threshold_db: f64,
) -> Result<FrameAlignment> {
    let silent = silent_frames(f, energy_dim, threshold_db)?;
    let speech: Vec<usize> = (0..silent.len()).filter(|&t| !silent[t]).collect();
    let phones: Vec<usize> = transcript
        .phonemes
        .iter()
        .enumerate()
        .filter(|(_, &p)| !inv.is_boundary(p))
        .map(|(i, _)| i)
        .collect();
    debug_assert_eq!(phones.len(), phone_count(&transcript.phonemes, inv));
    let n_states = phones.len() * STATES_PER_PHONEME;
    if n_states == 0 {
        return Err(Error::Infeasible(format!(
            "utterance {} has no phonemes to segment",
            transcript.id
        )));
    }
    if n_states > speech.len() {
        return Err(Error::Infeasible(format!(
            "utterance {}: {} non-silent frames for {} states",
            transcript.id,
            speech.len(),
            n_states
        )));
    }
    let mut labels = vec![StateLabel::Silence { token: None }; silent.len()];
    let frames = speech.len();
    for k in 0..n_states {
        let lo = k * frames / n_states;
        let hi = (k + 1) * frames / n_states;
        let label = StateLabel::Phone {
            token: phones[k / STATES_PER_PHONEME],
            sub: (k % STATES_PER_PHONEME) as u8,
        };
        for &t in &speech[lo..hi] {
            labels[t] = label;
        }
    }
    Ok(FrameAlignment {
        utterance_id: transcript.id.clone(),
        transcript: transcript.phonemes.clone(),
        frames: labels,
        frame_shift_ms: transcript.frame_shift_ms,
        log_likelihood: None,
    })
}
