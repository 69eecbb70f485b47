#[path = "support/planted.rs"]
mod planted;

use phonedur::hmm::{extract_durations, train_monophone, viterbi_align, StateLabel, TrainConfig};
use planted::{frame_accuracy, planted_corpus};

fn config() -> TrainConfig {
    TrainConfig {
        em_iters: 10,
        split_iters: 0,
        ..Default::default()
    }
}

#[test]
fn recovers_planted_states() {
    let corpus = planted_corpus(1, 120, 6, 3);
    let (model, report) = train_monophone(&corpus.utterances, &corpus.inventory, &config()).unwrap();
    assert!(report.worst_decrease() <= 1e-6, "{:?}", report.phases);
    let decoded: Vec<Vec<StateLabel>> = corpus
        .utterances
        .iter()
        .map(|u| viterbi_align(&model, &u.features, &u.transcript, true).unwrap().frames)
        .collect();
    let acc = frame_accuracy(&corpus.truth, &decoded);
    assert!(acc >= 0.95, "frame accuracy {acc}");
}

#[test]
fn two_phoneme_boundaries_within_one_frame() {
    let corpus = planted_corpus(2, 40, 2, 2);
    let inv = &corpus.inventory;
    let (model, _) = train_monophone(&corpus.utterances, inv, &config()).unwrap();
    for (u, truth) in corpus.utterances.iter().zip(&corpus.durations) {
        let a = viterbi_align(&model, &u.features, &u.transcript, true).unwrap();
        let got = extract_durations(&a, inv).unwrap();
        let mut end_true = 0i64;
        let mut end_got = 0i64;
        for (&t, &g) in truth.iter().zip(got.durations()) {
            end_true += i64::from(t);
            end_got += i64::from(g);
            assert!((end_true - end_got).abs() <= 1, "{}: {truth:?} vs {:?}", u.transcript.id, got.durations());
        }
    }
}

#[test]
fn aligned_durations_obey_topology() {
    let corpus = planted_corpus(3, 60, 5, 4);
    let inv = &corpus.inventory;
    let (model, _) = train_monophone(&corpus.utterances, inv, &config()).unwrap();
    let mut skipped = 0;
    for u in &corpus.utterances {
        let a = viterbi_align(&model, &u.features, &u.transcript, true).unwrap();
        let d = extract_durations(&a, inv).unwrap();
        d.validate_hmm_derived(inv).unwrap();
        assert_eq!(d.total_frames() as usize, u.features.rows());
        assert_eq!(d.len(), u.transcript.phonemes.len());
        skipped += d.pairs().filter(|&(p, n)| p == inv.space() && n == 0).count();
    }
    assert!(skipped > 0);
}

#[test]
fn split_training_stays_monotone_and_deterministic() {
    let corpus = planted_corpus(4, 48, 4, 3);
    let cfg = TrainConfig {
        em_iters: 3,
        split_iters: 2,
        reest_iters: 2,
        max_mixtures: 4,
        seed: 5,
        ..Default::default()
    };
    let (a, ra) = train_monophone(&corpus.utterances, &corpus.inventory, &cfg).unwrap();
    let (b, _) = train_monophone(&corpus.utterances, &corpus.inventory, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(ra.worst_decrease() <= 1e-6, "{:?}", ra.phases);
    assert!(a.mixture_sizes().iter().all(|&m| m <= 4));
}
