//! Viterbi (hard-assignment) EM training of the monophone model.
//!
//! Every E-step picks the best state path and, per frame, the best mixture
//! component; every M-step re-estimates weights, means, floored variances
//! and clamped loop probabilities in closed form. Both steps maximize the
//! same objective, so its per-frame value never decreases while the
//! mixture sizes stay fixed.

use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::{Component, ComponentStats, HmmState};
use super::init::linear_segment_init;
use super::model::{HmmModel, STATES_PER_PHONEME};
use super::topology::{StateLabel, Topology};
use super::trim::DEFAULT_SILENCE_DB;
use super::viterbi::best_path;
use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};
use crate::matrix::FeatureMatrix;
use crate::rng;
use crate::utterance::Transcript;

/// Utterances per accumulation chunk. Fixed so that reductions do not
/// depend on the worker count.
const CHUNK: usize = 8;
const MIN_LOOP_PROB: f64 = 0.01;
const MAX_LOOP_PROB: f64 = 0.99;
const INITIAL_LOOP_PROB: f64 = 0.5;
const SPLIT_OFFSET: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub em_iters: usize,
    pub split_iters: usize,
    /// EM iterations after each split.
    pub reest_iters: usize,
    pub max_mixtures: usize,
    pub energy_dim: usize,
    pub threshold_db: f64,
    pub allow_optional_silence: bool,
    /// Variance floor as a fraction of the global per-dimension variance.
    pub variance_floor_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            em_iters: 10,
            split_iters: 3,
            reest_iters: 2,
            max_mixtures: 8,
            energy_dim: 0,
            threshold_db: DEFAULT_SILENCE_DB,
            allow_optional_silence: true,
            variance_floor_scale: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingUtterance {
    pub transcript: Transcript,
    pub features: FeatureMatrix,
}

/// Objective trace of one training phase (fixed mixture sizes).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    /// Largest mixture size in the phase.
    pub max_mixtures: usize,
    /// Mixture sizes right after the split that opened the phase.
    pub mixture_sizes: Vec<usize>,
    /// Per-frame objective at each E-step.
    pub objective_per_frame: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub frames: usize,
    pub phases: Vec<PhaseReport>,
}

impl TrainReport {
    /// Largest drop of the per-frame objective between consecutive
    /// iterations within any phase (0 when monotone).
    pub fn worst_decrease(&self) -> f64 {
        self.phases
            .iter()
            .flat_map(|p| p.objective_per_frame.windows(2).map(|w| w[0] - w[1]))
            .fold(0.0, f64::max)
    }
}

fn check_corpus(corpus: &[TrainingUtterance], inv: &PhonemeInventory) -> Result<usize> {
    let first = corpus
        .first()
        .ok_or_else(|| Error::DegenerateCorpus("no utterances".into()))?;
    let dim = first.features.cols();
    for u in corpus {
        if u.features.cols() != dim {
            return Err(Error::Shape(format!(
                "utterance {} has {} feature dims, expected {dim}",
                u.transcript.id,
                u.features.cols()
            )));
        }
        if let Some(p) = u.transcript.phonemes.iter().find(|p| !inv.contains(**p)) {
            return Err(Error::UnknownPhonemeId(p.0));
        }
    }
    Ok(dim)
}

fn global_moments(corpus: &[TrainingUtterance], dim: usize) -> ComponentStats {
    let mut s = ComponentStats::new(dim);
    for u in corpus {
        for x in u.features.iter_rows() {
            s.add(x);
        }
    }
    s
}

fn variance_floor(global: &ComponentStats, scale: f64) -> Vec<f64> {
    let (_, var) = global.estimate(&vec![0.0; global.sum.len()]);
    var.iter().map(|v| (scale * v).max(1e-10)).collect()
}

/// Model estimated from the linear initial segmentation alone.
pub fn init_model(
    corpus: &[TrainingUtterance],
    inv: &PhonemeInventory,
    cfg: &TrainConfig,
) -> Result<HmmModel> {
    let dim = check_corpus(corpus, inv)?;
    let global = global_moments(corpus, dim);
    let floor = variance_floor(&global, cfg.variance_floor_scale);

    let alignments = corpus
        .par_iter()
        .map(|u| linear_segment_init(&u.features, &u.transcript, inv, cfg.energy_dim, cfg.threshold_db))
        .collect::<Result<Vec<_>>>()?;

    let mut phone_stats: BTreeMap<PhonemeId, Vec<ComponentStats>> = BTreeMap::new();
    let mut silence = ComponentStats::new(dim);
    for (u, a) in corpus.iter().zip(&alignments) {
        for (x, label) in u.features.iter_rows().zip(&a.frames) {
            match *label {
                StateLabel::Phone { token, sub } => {
                    let p = a.transcript[token];
                    phone_stats
                        .entry(p)
                        .or_insert_with(|| vec![ComponentStats::new(dim); STATES_PER_PHONEME])
                        [sub as usize]
                        .add(x);
                }
                StateLabel::Silence { .. } => silence.add(x),
            }
        }
    }
    let single = |s: &ComponentStats| {
        let (mean, var) = s.estimate(&floor);
        HmmState {
            loop_prob: INITIAL_LOOP_PROB,
            components: vec![Component::new(1.0, mean, var)],
        }
    };
    let phones = phone_stats
        .iter()
        .map(|(&p, states)| {
            let triple: [HmmState; STATES_PER_PHONEME] =
                [single(&states[0]), single(&states[1]), single(&states[2])];
            (p, triple)
        })
        .collect();
    // No silent frames anywhere: start silence from the global moments.
    let silence_state = if silence.count > 0.0 { single(&silence) } else { single(&global) };
    HmmModel::assemble(inv.clone(), dim, floor, phones, silence_state)
}

#[derive(Debug, Clone)]
struct StateAcc {
    components: Vec<ComponentStats>,
    loops: f64,
    exits: f64,
}

#[derive(Debug, Clone)]
struct Accumulator {
    states: Vec<StateAcc>,
    objective: f64,
    frames: usize,
}

impl Accumulator {
    fn new(model: &HmmModel) -> Self {
        let states = model
            .states()
            .iter()
            .map(|s| StateAcc {
                components: vec![ComponentStats::new(model.dim()); s.components.len()],
                loops: 0.0,
                exits: 0.0,
            })
            .collect();
        Self {
            states,
            objective: 0.0,
            frames: 0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.states.iter_mut().zip(&other.states) {
            for (ca, cb) in a.components.iter_mut().zip(&b.components) {
                ca.merge(cb);
            }
            a.loops += b.loops;
            a.exits += b.exits;
        }
        self.objective += other.objective;
        self.frames += other.frames;
    }

    fn add_utterance(&mut self, model: &HmmModel, u: &TrainingUtterance, allow_optional: bool) -> Result<()> {
        let topo = Topology::build(model, &u.transcript.phonemes, allow_optional)?;
        let (path, score) = best_path(model, &u.features, &topo)
            .map_err(|e| Error::DegenerateCorpus(format!("utterance {}: {e}", u.transcript.id)))?;
        for (t, x) in u.features.iter_rows().enumerate() {
            let state = topo.positions[path[t]].state;
            let (comp, _) = model.state(state).best_component(x);
            self.states[state].components[comp].add(x);
            if t > 0 {
                let from = topo.positions[path[t - 1]].state;
                if path[t] == path[t - 1] {
                    self.states[from].loops += 1.0;
                } else {
                    self.states[from].exits += 1.0;
                }
            }
        }
        self.objective += score;
        self.frames += u.features.rows();
        Ok(())
    }
}

fn e_step(model: &HmmModel, corpus: &[TrainingUtterance], allow_optional: bool) -> Result<Accumulator> {
    let partials = corpus
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Accumulator::new(model);
            for u in chunk {
                acc.add_utterance(model, u, allow_optional)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Accumulator::new(model);
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}

fn m_step(model: &HmmModel, acc: &Accumulator) -> Result<HmmModel> {
    let mut next = model.clone();
    let floor = model.variance_floor().to_vec();
    for (state, sa) in next.states.iter_mut().zip(&acc.states) {
        let total: f64 = sa.components.iter().map(|c| c.count).sum();
        if total > 0.0 {
            state.components = state
                .components
                .iter()
                .zip(&sa.components)
                .map(|(old, stats)| {
                    if stats.count > 0.0 {
                        let (mean, var) = stats.estimate(&floor);
                        Component::new(stats.count / total, mean, var)
                    } else {
                        Component::new(0.0, old.mean().to_vec(), old.variance().to_vec())
                    }
                })
                .collect();
        }
        let visits = sa.loops + sa.exits;
        if visits > 0.0 {
            state.loop_prob = (sa.loops / visits).clamp(MIN_LOOP_PROB, MAX_LOOP_PROB);
        }
    }
    Ok(next)
}

/// One E-step plus M-step. Returns the new model and the per-frame
/// objective of the E-step (the old model's best-path score).
pub fn em_iteration(
    model: &HmmModel,
    corpus: &[TrainingUtterance],
    allow_optional_silence: bool,
) -> Result<(HmmModel, f64)> {
    let acc = e_step(model, corpus, allow_optional_silence)?;
    let objective = acc.objective / acc.frames as f64;
    Ok((m_step(model, &acc)?, objective))
}

/// Doubles each state's mixture (up to `cap`) by duplicating the heaviest
/// components and moving the copies ±0.2 standard deviations apart along
/// a random sign pattern.
pub fn split_mixtures(model: &HmmModel, cap: usize, rng: &mut impl RngCore) -> HmmModel {
    let mut next = model.clone();
    for state in &mut next.states {
        let m = state.components.len();
        let target = (2 * m).min(cap.max(m));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            state.components[b]
                .weight()
                .total_cmp(&state.components[a].weight())
                .then(a.cmp(&b))
        });
        let chosen: Vec<bool> = {
            let mut c = vec![false; m];
            for &i in order.iter().take(target - m) {
                c[i] = true;
            }
            c
        };
        let mut components = Vec::with_capacity(target);
        for (i, c) in state.components.iter().enumerate() {
            if !chosen[i] {
                components.push(c.clone());
                continue;
            }
            let signs: Vec<f64> = (0..c.mean().len())
                .map(|_| if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            let shifted = |dir: f64| -> Vec<f64> {
                c.mean()
                    .iter()
                    .zip(c.variance())
                    .zip(&signs)
                    .map(|((m, v), s)| m + dir * s * SPLIT_OFFSET * v.sqrt())
                    .collect()
            };
            let w = c.weight() / 2.0;
            components.push(Component::new(w, shifted(1.0), c.variance().to_vec()));
            components.push(Component::new(w, shifted(-1.0), c.variance().to_vec()));
        }
        state.components = components;
    }
    next
}

/// Linear initialization, `em_iters` single-Gaussian EM iterations, then
/// `split_iters` rounds of mixture splitting each followed by
/// `reest_iters` EM iterations.
pub fn train_monophone(
    corpus: &[TrainingUtterance],
    inv: &PhonemeInventory,
    cfg: &TrainConfig,
) -> Result<(HmmModel, TrainReport)> {
    if cfg.max_mixtures == 0 {
        return Err(Error::invalid("max_mixtures must be at least 1"));
    }
    let mut model = init_model(corpus, inv, cfg)?;
    let frames = corpus.iter().map(|u| u.features.rows()).sum();
    let mut phases = Vec::new();

    let run_phase = |model: &mut HmmModel, iters: usize| -> Result<PhaseReport> {
        let sizes = model.mixture_sizes();
        let mut objective = Vec::with_capacity(iters);
        for _ in 0..iters {
            let (next, j) = em_iteration(model, corpus, cfg.allow_optional_silence)?;
            *model = next;
            objective.push(j);
        }
        Ok(PhaseReport {
            max_mixtures: sizes.iter().copied().max().unwrap_or(1),
            mixture_sizes: sizes,
            objective_per_frame: objective,
        })
    };

    phases.push(run_phase(&mut model, cfg.em_iters)?);
    let mut split_rng = rng::stream(cfg.seed, "hmm/split");
    for _ in 0..cfg.split_iters {
        model = split_mixtures(&model, cfg.max_mixtures, &mut split_rng);
        phases.push(run_phase(&mut model, cfg.reest_iters)?);
    }
    Ok((model, TrainReport { frames, phases }))
}
