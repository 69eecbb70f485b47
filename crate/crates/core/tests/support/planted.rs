//! Synthetic corpora drawn from a known 3-state-per-phoneme HMM.
//!
//! Column 0 is frame energy in dB: about -20 for speech and -80 for
//! silence. The remaining columns carry one Gaussian per state with unit
//! variance and means at least `MIN_SEPARATION` apart.

#![allow(dead_code)]

use phonedur::hmm::{StateLabel, TrainingUtterance};
use phonedur::rng::{self, Gaussian, StreamRng};
use phonedur::{Matrix, PhonemeId, PhonemeInventory, Transcript};

pub const DIM: usize = 4;
pub const MIN_SEPARATION: f64 = 4.0;

pub struct PlantedCorpus {
    pub inventory: PhonemeInventory,
    pub utterances: Vec<TrainingUtterance>,
    /// True state label of every frame.
    pub truth: Vec<Vec<StateLabel>>,
    /// True frames per transcript token.
    pub durations: Vec<Vec<u32>>,
}

fn index(r: &mut StreamRng, n: usize) -> usize {
    ((rng::uniform(r) * n as f64) as usize).min(n - 1)
}

/// `phonemes` distinct phonemes; utterances of `words` words with
/// optional silence between them and at both edges.
pub fn planted_corpus(seed: u64, utterances: usize, phonemes: usize, words: usize) -> PlantedCorpus {
    let symbols: Vec<String> = (0..phonemes)
        .map(|i| format!("P{i}"))
        .chain(["[space]".to_string(), "[sil]".to_string()])
        .collect();
    let inventory = PhonemeInventory::new(&symbols, "[space]", "[sil]").unwrap();

    // One mean per emitting state plus silence, rejection-sampled apart.
    let mut g = Gaussian::new(rng::stream(seed, "planted/means"));
    let n_states = 3 * phonemes + 1;
    let mut means: Vec<Vec<f64>> = Vec::new();
    while means.len() < n_states {
        let cand: Vec<f64> = (1..DIM).map(|_| g.sample(0.0, 6.0)).collect();
        let far = means.iter().all(|m| {
            m.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= MIN_SEPARATION
        });
        if far {
            means.push(cand);
        }
    }
    let silence = n_states - 1;

    let mut out = PlantedCorpus {
        inventory: inventory.clone(),
        utterances: Vec::new(),
        truth: Vec::new(),
        durations: Vec::new(),
    };
    for u in 0..utterances {
        let id = format!("utt{u:04}");
        let mut g = Gaussian::new(rng::stream(seed, &format!("planted/{id}")));
        let mut tokens: Vec<PhonemeId> = vec![inventory.space()];
        for w in 0..words {
            if w > 0 {
                tokens.push(inventory.space());
            }
            let len = 1 + index(g.rng_mut(), 3);
            for _ in 0..len {
                tokens.push(PhonemeId(index(g.rng_mut(), phonemes)));
            }
        }
        tokens.push(inventory.space());

        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut durations = Vec::new();
        let mut emit = |g: &mut Gaussian<StreamRng>, state: usize, label: StateLabel, rows: &mut Vec<Vec<f64>>| {
            let energy = if state == silence { -80.0 } else { -20.0 };
            let mut x = vec![g.sample(energy, 1.0)];
            x.extend(means[state].iter().map(|&m| g.sample(m, 1.0)));
            rows.push(x);
            labels.push(label);
        };
        for (i, &p) in tokens.iter().enumerate() {
            if p == inventory.space() {
                let edge = i == 0 || i + 1 == tokens.len();
                let frames = if rng::uniform(g.rng_mut()) < if edge { 0.2 } else { 0.5 } {
                    0
                } else {
                    3 + index(g.rng_mut(), 6)
                };
                for _ in 0..frames {
                    emit(&mut g, silence, StateLabel::Silence { token: Some(i) }, &mut rows);
                }
                durations.push(frames as u32);
            } else {
                let mut total = 0;
                for sub in 0..3u8 {
                    let frames = 1 + index(g.rng_mut(), 4);
                    for _ in 0..frames {
                        let state = 3 * p.index() + sub as usize;
                        emit(&mut g, state, StateLabel::Phone { token: i, sub }, &mut rows);
                    }
                    total += frames;
                }
                durations.push(total as u32);
            }
        }
        out.utterances.push(TrainingUtterance {
            transcript: Transcript {
                id,
                phonemes: tokens,
                frame_shift_ms: 12.5,
            },
            features: Matrix::from_rows(&rows).unwrap(),
        });
        out.truth.push(labels);
        out.durations.push(durations);
    }
    out
}

pub fn frame_accuracy(truth: &[Vec<StateLabel>], decoded: &[Vec<StateLabel>]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (t, d) in truth.iter().zip(decoded) {
        assert_eq!(t.len(), d.len());
        hit += t.iter().zip(d).filter(|(a, b)| a == b).count();
        total += t.len();
    }
    hit as f64 / total as f64
}
