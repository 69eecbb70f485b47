//! CTC-topology scoring and forced alignment over emission log-posteriors.
//!
//! Labels are expanded to `blank, y1, blank, y2, …, yN, blank`. A path may
//! stay, advance by one, or skip a blank between two distinct labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::PhonemeId;
use crate::matrix::{EmissionMatrix, Matrix};
use crate::utterance::AlignedUtterance;

/// Log-domain zero.
pub const LOG_ZERO: f64 = -1.0e30;
pub const DEFAULT_BLANK_FLOOR: f64 = 1e-8;

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi <= LOG_ZERO {
        return LOG_ZERO;
    }
    if lo <= LOG_ZERO {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Blank-interleaved label sequence and its legal transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcLattice {
    /// Column index of each expanded position.
    pub expanded: Vec<usize>,
    blank: usize,
}

impl CtcLattice {
    pub fn new(labels: &[usize], blank: usize) -> Result<Self> {
        if labels.contains(&blank) {
            return Err(Error::invalid("label sequence contains the blank index"));
        }
        let mut expanded = Vec::with_capacity(2 * labels.len() + 1);
        expanded.push(blank);
        for &l in labels {
            expanded.push(l);
            expanded.push(blank);
        }
        Ok(Self { expanded, blank })
    }

    pub fn len(&self) -> usize {
        self.expanded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expanded.is_empty()
    }

    pub fn is_blank(&self, s: usize) -> bool {
        self.expanded[s] == self.blank
    }

    /// Whether position `s` may be entered from `s − 2`.
    pub fn can_skip_into(&self, s: usize) -> bool {
        s >= 2 && !self.is_blank(s) && self.expanded[s] != self.expanded[s - 2]
    }

    /// Fewest frames any legal path needs: one per label plus one blank
    /// between each pair of repeated labels.
    pub fn min_frames(&self) -> usize {
        let labels = self.len() / 2;
        let repeats = (1..labels)
            .filter(|&i| self.expanded[2 * i + 1] == self.expanded[2 * i - 1])
            .count();
        labels + repeats
    }

    fn final_states(&self) -> impl Iterator<Item = usize> {
        let last = self.len() - 1;
        std::iter::once(last).chain((last > 0).then(|| last - 1))
    }
}

fn check_scores(scores: &Matrix, labels: &[usize]) -> Result<()> {
    if let Some(&l) = labels.iter().find(|&&l| l >= scores.cols()) {
        return Err(Error::invalid(format!(
            "label index {l} outside {} emission columns",
            scores.cols()
        )));
    }
    Ok(())
}

fn feasibility(lattice: &CtcLattice, frames: usize) -> Result<()> {
    let need = lattice.min_frames();
    if frames < need {
        return Err(Error::Infeasible(format!(
            "{frames} frames cannot carry {} labels (need {need})",
            lattice.len() / 2
        )));
    }
    Ok(())
}

/// `log P(labels | emissions)` summed over all legal paths.
pub fn ctc_forward_logprob(e: &EmissionMatrix, labels: &[usize]) -> Result<f64> {
    forward_score(e.log_probs(), labels, e.blank())
}

/// Forward recursion on an arbitrary score matrix.
pub fn forward_score(scores: &Matrix, labels: &[usize], blank: usize) -> Result<f64> {
    check_scores(scores, labels)?;
    let lattice = CtcLattice::new(labels, blank)?;
    feasibility(&lattice, scores.rows())?;
    let s_len = lattice.len();
    let mut prev = vec![LOG_ZERO; s_len];
    let mut cur = vec![LOG_ZERO; s_len];
    prev[0] = scores.get(0, lattice.expanded[0]);
    if s_len > 1 {
        prev[1] = scores.get(0, lattice.expanded[1]);
    }
    for t in 1..scores.rows() {
        let row = scores.row(t);
        for s in 0..s_len {
            let mut acc = prev[s];
            if s >= 1 {
                acc = log_add(acc, prev[s - 1]);
            }
            if lattice.can_skip_into(s) {
                acc = log_add(acc, prev[s - 2]);
            }
            cur[s] = if acc <= LOG_ZERO { LOG_ZERO } else { acc + row[lattice.expanded[s]] };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let total = lattice
        .final_states()
        .map(|s| prev[s])
        .fold(LOG_ZERO, log_add);
    if !total.is_finite() {
        return Err(Error::NonFinite("forward score".into()));
    }
    Ok(total)
}

/// Best single path through the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcPath {
    /// Expanded-lattice position per frame.
    pub states: Vec<usize>,
    /// Emission column per frame.
    pub columns: Vec<usize>,
    /// Sum of the path's scores in frame order.
    pub score: f64,
}

/// Viterbi best path on an arbitrary score matrix.
pub fn viterbi_path(scores: &Matrix, labels: &[usize], blank: usize) -> Result<CtcPath> {
    check_scores(scores, labels)?;
    let lattice = CtcLattice::new(labels, blank)?;
    feasibility(&lattice, scores.rows())?;
    let (frames, s_len) = (scores.rows(), lattice.len());
    let mut prev = vec![LOG_ZERO; s_len];
    let mut cur = vec![LOG_ZERO; s_len];
    // 0 stay, 1 from s-1, 2 from s-2
    let mut back = vec![0u8; frames * s_len];
    prev[0] = scores.get(0, lattice.expanded[0]);
    if s_len > 1 {
        prev[1] = scores.get(0, lattice.expanded[1]);
    }
    for t in 1..frames {
        let row = scores.row(t);
        for s in 0..s_len {
            let (mut best, mut step) = (prev[s], 0u8);
            if s >= 1 && prev[s - 1] > best {
                best = prev[s - 1];
                step = 1;
            }
            if lattice.can_skip_into(s) && prev[s - 2] > best {
                best = prev[s - 2];
                step = 2;
            }
            back[t * s_len + s] = step;
            cur[s] = if best <= LOG_ZERO { LOG_ZERO } else { best + row[lattice.expanded[s]] };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let end = lattice
        .final_states()
        .max_by(|&a, &b| prev[a].total_cmp(&prev[b]).then(b.cmp(&a)))
        .expect("lattice is non-empty");
    let score = prev[end];
    if score <= LOG_ZERO || !score.is_finite() {
        return Err(Error::NonFinite("viterbi score".into()));
    }
    let mut states = vec![0; frames];
    let mut s = end;
    for t in (0..frames).rev() {
        states[t] = s;
        if t > 0 {
            s -= back[t * s_len + s] as usize;
        }
    }
    let columns = states.iter().map(|&s| lattice.expanded[s]).collect();
    Ok(CtcPath { states, columns, score })
}

/// Replaces the blank column by `ln(blank_floor)`; rows are no longer
/// normalized afterwards.
pub fn floor_blank(e: &EmissionMatrix, blank_floor: f64) -> Result<Matrix> {
    check_floor(blank_floor)?;
    let mut m = e.log_probs().clone();
    let v = blank_floor.ln();
    m.map_column(e.blank(), |_| v);
    Ok(m)
}

fn check_floor(blank_floor: f64) -> Result<()> {
    if !(blank_floor > 0.0 && blank_floor <= 1.0) {
        return Err(Error::invalid(format!(
            "blank floor must lie in (0, 1], got {blank_floor}"
        )));
    }
    Ok(())
}

/// Where runs of blank frames go once the path is decoded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlankAttachment {
    /// Into the following label; a trailing run joins the last label.
    #[default]
    Forward,
    /// Into the preceding label; a leading run joins the first label.
    Backward,
}

/// Per-label frame counts from a decoded path.
pub fn label_durations(path: &CtcPath, n_labels: usize, attach: BlankAttachment) -> Vec<u32> {
    let mut durations = vec![0u32; n_labels];
    let mut pending = 0u32;
    let mut last_label: Option<usize> = None;
    let mut seen_label = false;
    for &s in &path.states {
        if s % 2 == 0 {
            pending += 1;
            continue;
        }
        let label = (s - 1) / 2;
        match attach {
            BlankAttachment::Forward => durations[label] += pending,
            BlankAttachment::Backward => match last_label {
                Some(prev) => durations[prev] += pending,
                None => durations[label] += pending,
            },
        }
        pending = 0;
        durations[label] += 1;
        last_label = Some(label);
        seen_label = true;
    }
    if seen_label && pending > 0 {
        durations[n_labels - 1] += pending;
    }
    durations
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtcAlignConfig {
    pub blank_floor: f64,
    pub attach: BlankAttachment,
}

impl Default for CtcAlignConfig {
    fn default() -> Self {
        Self {
            blank_floor: DEFAULT_BLANK_FLOOR,
            attach: BlankAttachment::Forward,
        }
    }
}

/// Floors the blank, decodes the best path and turns it into durations
/// where every label (including `[space]`) gets at least one frame.
///
/// `labels` are emission columns; `phonemes` are the matching inventory
/// ids written to the output.
pub fn ctc_viterbi_align(
    id: &str,
    e: &EmissionMatrix,
    labels: &[usize],
    phonemes: &[PhonemeId],
    frame_shift_ms: f64,
    cfg: &CtcAlignConfig,
) -> Result<AlignedUtterance> {
    if labels.len() != phonemes.len() {
        return Err(Error::invalid("labels and phonemes differ in length"));
    }
    if labels.is_empty() {
        return Err(Error::Infeasible(format!("utterance {id} has no labels")));
    }
    let floored = floor_blank(e, cfg.blank_floor)?;
    let path = viterbi_path(&floored, labels, e.blank())?;
    let durations = label_durations(&path, labels.len(), cfg.attach);
    AlignedUtterance::new(id, phonemes.to_vec(), durations, frame_shift_ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(frames: usize, cols: usize) -> EmissionMatrix {
        let v = (1.0 / cols as f64).ln();
        EmissionMatrix::new(Matrix::new(frames, cols, vec![v; frames * cols]).unwrap(), 0).unwrap()
    }

    #[test]
    fn single_frame_single_label() {
        let e = uniform(1, 2);
        let lp = ctc_forward_logprob(&e, &[1]).unwrap();
        assert!((lp - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_labels_is_the_all_blank_path() {
        let rows = vec![vec![0.7f64.ln(), 0.3f64.ln()], vec![0.4f64.ln(), 0.6f64.ln()]];
        let e = EmissionMatrix::new(Matrix::from_rows(&rows).unwrap(), 0).unwrap();
        let lp = ctc_forward_logprob(&e, &[]).unwrap();
        assert!((lp - (0.7f64.ln() + 0.4f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn two_frames_three_paths() {
        let rows = vec![vec![0.2f64.ln(), 0.8f64.ln()], vec![0.6f64.ln(), 0.4f64.ln()]];
        let e = EmissionMatrix::new(Matrix::from_rows(&rows).unwrap(), 0).unwrap();
        // aa, a-, -a
        let expected = (0.8 * 0.4 + 0.8 * 0.6 + 0.2 * 0.4f64).ln();
        assert!((ctc_forward_logprob(&e, &[1]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_invalid_inputs() {
        let e = uniform(2, 3);
        assert!(matches!(ctc_forward_logprob(&e, &[1, 2, 1]), Err(Error::Infeasible(_))));
        assert!(matches!(ctc_forward_logprob(&e, &[1, 1]), Err(Error::Infeasible(_))));
        assert!(ctc_forward_logprob(&e, &[0]).is_err());
        assert!(ctc_forward_logprob(&e, &[5]).is_err());
        assert!(floor_blank(&e, 0.0).is_err());
        assert!(floor_blank(&e, 1.5).is_err());
    }

    #[test]
    fn repeated_labels_need_a_blank() {
        let e = uniform(3, 2);
        let path = viterbi_path(e.log_probs(), &[1, 1], 0).unwrap();
        assert_eq!(path.columns, [1, 0, 1]);
        assert_eq!(label_durations(&path, 2, BlankAttachment::Forward), [1, 2]);
        assert_eq!(label_durations(&path, 2, BlankAttachment::Backward), [2, 1]);
    }

    #[test]
    fn frames_equal_labels_gives_unit_durations() {
        let e = EmissionMatrix::from_logits(
            &Matrix::from_rows(&[vec![3.0, 0.0, 1.0], vec![0.0, 2.0, 0.5], vec![1.0, 1.0, 1.0]])
                .unwrap(),
            0,
        )
        .unwrap();
        let ids = [PhonemeId(4), PhonemeId(7), PhonemeId(4)];
        let u = ctc_viterbi_align("u", &e, &[1, 2, 1], &ids, 12.5, &CtcAlignConfig::default())
            .unwrap();
        assert_eq!(u.durations(), [1, 1, 1]);
    }

    #[test]
    fn floor_sets_constant_blank_column() {
        let e = EmissionMatrix::from_logits(&Matrix::from_rows(&[vec![0.3, 0.1], vec![-2.0, 1.0]]).unwrap(), 1)
            .unwrap();
        let f = floor_blank(&e, 1e-8).unwrap();
        assert_eq!(f.get(0, 1), 1e-8f64.ln());
        assert_eq!(f.get(1, 1), 1e-8f64.ln());
        assert_eq!(f.get(0, 0), e.log_probs().get(0, 0));

        let certain = EmissionMatrix::new(Matrix::from_rows(&[vec![0.0]]).unwrap(), 0).unwrap();
        assert_eq!(floor_blank(&certain, 1.0).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn blank_heavy_emissions_still_label_every_frame() {
        // Blank dominates everywhere; after flooring the path uses labels.
        let rows: Vec<Vec<f64>> = (0..6).map(|_| vec![5.0, 0.0, 0.1]).collect();
        let e = EmissionMatrix::from_logits(&Matrix::from_rows(&rows).unwrap(), 0).unwrap();
        let raw = viterbi_path(e.log_probs(), &[1, 2], 0).unwrap();
        assert!(raw.columns.iter().filter(|&&c| c == 0).count() >= 4);
        let floored = viterbi_path(&floor_blank(&e, 1e-8).unwrap(), &[1, 2], 0).unwrap();
        assert!(floored.columns.iter().all(|&c| c != 0));
    }
}
