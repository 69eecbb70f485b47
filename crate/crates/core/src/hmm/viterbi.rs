use super::model::HmmModel;
use super::topology::Topology;
use super::FrameAlignment;
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::utterance::Transcript;

/// Max-probability path through the transcript graph.
///
/// The path score is the sum of per-frame emission scores (max over
/// mixture components) and the log transition taken between consecutive
/// frames: the source state's loop probability when staying, its forward
/// probability when advancing or skipping an optional silence. There is
/// no entry or exit cost.
pub fn viterbi_align(
    model: &HmmModel,
    f: &FeatureMatrix,
    transcript: &Transcript,
    allow_optional_silence: bool,
) -> Result<FrameAlignment> {
    let topo = Topology::build(model, &transcript.phonemes, allow_optional_silence)?;
    let (path, score) = best_path(model, f, &topo)?;
    Ok(FrameAlignment {
        utterance_id: transcript.id.clone(),
        transcript: transcript.phonemes.clone(),
        frames: path.iter().map(|&p| topo.positions[p].label).collect(),
        frame_shift_ms: transcript.frame_shift_ms,
        log_likelihood: Some(score),
    })
}

/// Position index per frame plus the path score.
pub(crate) fn best_path(
    model: &HmmModel,
    f: &FeatureMatrix,
    topo: &Topology,
) -> Result<(Vec<usize>, f64)> {
    if f.cols() != model.dim() {
        return Err(Error::Shape(format!(
            "features have {} dims, model expects {}",
            f.cols(),
            model.dim()
        )));
    }
    let frames = f.rows();
    let need = topo.min_frames();
    if frames < need {
        return Err(Error::Infeasible(format!(
            "{frames} frames but the transcript needs at least {need}"
        )));
    }
    let n = topo.len();

    // Emission scores per distinct model state.
    let mut column_of = vec![usize::MAX; model.states().len()];
    let mut distinct = Vec::new();
    for p in &topo.positions {
        if column_of[p.state] == usize::MAX {
            column_of[p.state] = distinct.len();
            distinct.push(p.state);
        }
    }
    let mut emit = vec![0.0; frames * distinct.len()];
    for (t, x) in f.iter_rows().enumerate() {
        for (c, &s) in distinct.iter().enumerate() {
            emit[t * distinct.len() + c] = model.state(s).log_emission(x);
        }
    }
    let em = |t: usize, p: usize| emit[t * distinct.len() + column_of[topo.positions[p].state]];
    let log_loop: Vec<f64> = topo.positions.iter().map(|p| model.state(p.state).log_loop()).collect();
    let log_fwd: Vec<f64> = topo.positions.iter().map(|p| model.state(p.state).log_forward()).collect();

    let mut prev = vec![f64::NEG_INFINITY; n];
    let mut cur = vec![f64::NEG_INFINITY; n];
    let mut back = vec![0u32; frames * n];
    for s in topo.starts() {
        prev[s] = em(0, s);
    }
    for t in 1..frames {
        for q in 0..n {
            let mut best = prev[q] + log_loop[q];
            let mut from = q;
            for p in topo.predecessors(q) {
                let cand = prev[p] + log_fwd[p];
                if cand > best {
                    best = cand;
                    from = p;
                }
            }
            back[t * n + q] = from as u32;
            cur[q] = best + em(t, q);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let mut end = None;
    let mut score = f64::NEG_INFINITY;
    for e in topo.ends() {
        if prev[e] > score {
            score = prev[e];
            end = Some(e);
        }
    }
    let Some(mut q) = end else {
        return Err(Error::Infeasible("no path reaches the end of the transcript".into()));
    };
    if !score.is_finite() {
        return Err(Error::NonFinite("viterbi score".into()));
    }
    let mut path = vec![0usize; frames];
    for t in (0..frames).rev() {
        path[t] = q;
        if t > 0 {
            q = back[t * n + q] as usize;
        }
    }
    Ok((path, score))
}
