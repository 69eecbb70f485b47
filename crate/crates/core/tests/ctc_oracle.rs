use phonedur::ctc::{
    ctc_forward_logprob, ctc_viterbi_align, floor_blank, forward_score, viterbi_path, BlankAttachment,
    CtcAlignConfig, DEFAULT_BLANK_FLOOR,
};
use phonedur::rng::{self, Gaussian, StreamRng};
use phonedur::{EmissionMatrix, Error, Matrix, PhonemeId};

#[path = "support/ctc_enum.rs"]
mod ctc_enum;

use ctc_enum::{collapse, enumerate};

fn index(r: &mut StreamRng, n: usize) -> usize {
    ((rng::uniform(r) * n as f64) as usize).min(n - 1)
}

fn random_emissions(g: &mut Gaussian<StreamRng>, frames: usize, symbols: usize, blank: usize) -> EmissionMatrix {
    let scale = 0.5 + 3.0 * rng::uniform(g.rng_mut());
    let logits = (0..frames * symbols).map(|_| g.sample(0.0, scale)).collect();
    EmissionMatrix::from_logits(&Matrix::new(frames, symbols, logits).unwrap(), blank).unwrap()
}

struct Instance {
    e: EmissionMatrix,
    labels: Vec<usize>,
}

fn instance(g: &mut Gaussian<StreamRng>) -> Instance {
    let symbols = 2 + index(g.rng_mut(), 3);
    let frames = 1 + index(g.rng_mut(), 6);
    let blank = index(g.rng_mut(), symbols);
    let n = index(g.rng_mut(), 4).min(frames);
    let non_blank: Vec<usize> = (0..symbols).filter(|&s| s != blank).collect();
    let labels = (0..n).map(|_| non_blank[index(g.rng_mut(), non_blank.len())]).collect();
    Instance {
        e: random_emissions(g, frames, symbols, blank),
        labels,
    }
}

#[test]
fn forward_and_viterbi_match_enumeration() {
    let mut g = Gaussian::new(rng::stream(17, "ctc-oracle"));
    let (mut checked, mut infeasible) = (0, 0);
    for _ in 0..3000 {
        let inst = instance(&mut g);
        for scores in [inst.e.log_probs().clone(), floor_blank(&inst.e, 1e-3).unwrap()] {
            let oracle = enumerate(&scores, &inst.labels, inst.e.blank());
            let fwd = forward_score(&scores, &inst.labels, inst.e.blank());
            let vit = viterbi_path(&scores, &inst.labels, inst.e.blank());
            if oracle.count == 0 {
                assert!(matches!(fwd, Err(Error::Infeasible(_))), "{:?}", inst.labels);
                assert!(matches!(vit, Err(Error::Infeasible(_))));
                infeasible += 1;
                continue;
            }
            let fwd = fwd.unwrap();
            let vit = vit.unwrap();
            assert!((fwd - oracle.sum).abs() <= 1e-6, "{fwd} vs {}", oracle.sum);
            assert_eq!(vit.score, oracle.max);
            let mut rescored = 0.0;
            for (t, &c) in vit.columns.iter().enumerate() {
                rescored += scores.get(t, c);
            }
            assert_eq!(rescored, vit.score);
            assert_eq!(collapse(&vit.columns, inst.e.blank()), inst.labels);
            assert!(vit.score <= fwd + 1e-12);
            checked += 1;
        }
    }
    assert!(checked >= 1000, "{checked}");
    assert!(infeasible > 0);
}

#[test]
fn empty_labels_score_the_all_blank_path() {
    let mut g = Gaussian::new(rng::stream(3, "ctc-empty"));
    let e = random_emissions(&mut g, 5, 3, 0);
    let want: f64 = (0..5).map(|t| e.log_probs().get(t, 0)).sum();
    assert!((ctc_forward_logprob(&e, &[]).unwrap() - want).abs() < 1e-12);
}

#[test]
fn decoded_durations_cover_every_frame() {
    let mut g = Gaussian::new(rng::stream(5, "ctc-durations"));
    let mut decodes = 0;
    for _ in 0..2000 {
        let inst = instance(&mut g);
        if inst.labels.is_empty() {
            continue;
        }
        let phonemes: Vec<PhonemeId> = inst.labels.iter().map(|&l| PhonemeId(l)).collect();
        for attach in [BlankAttachment::Forward, BlankAttachment::Backward] {
            let cfg = CtcAlignConfig { attach, ..Default::default() };
            match ctc_viterbi_align("u", &inst.e, &inst.labels, &phonemes, 12.5, &cfg) {
                Ok(u) => {
                    assert!(u.durations().iter().all(|&d| d >= 1), "{:?}", u.durations());
                    assert_eq!(u.total_frames() as usize, inst.e.frames());
                    if inst.e.frames() == inst.labels.len() {
                        assert!(u.durations().iter().all(|&d| d == 1));
                    }
                    decodes += 1;
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
    assert!(decodes > 1000);
}

#[test]
fn flooring_never_reduces_non_blank_frames() {
    let mut g = Gaussian::new(rng::stream(9, "ctc-floor"));
    let mut compared = 0;
    for _ in 0..2000 {
        let inst = instance(&mut g);
        let blank = inst.e.blank();
        let Ok(before) = viterbi_path(inst.e.log_probs(), &inst.labels, blank) else {
            continue;
        };
        let floored = floor_blank(&inst.e, DEFAULT_BLANK_FLOOR).unwrap();
        let after = viterbi_path(&floored, &inst.labels, blank).unwrap();
        let non_blank = |p: &[usize]| p.iter().filter(|&&c| c != blank).count();
        assert!(non_blank(&after.columns) >= non_blank(&before.columns));
        compared += 1;
    }
    assert!(compared > 1000);
}

#[test]
fn forward_is_invariant_under_label_permutation_of_uniform_emissions() {
    let symbols = 4;
    let frames = 7;
    let e = EmissionMatrix::new(
        Matrix::new(frames, symbols, vec![-(symbols as f64).ln(); frames * symbols]).unwrap(),
        0,
    )
    .unwrap();
    let base = ctc_forward_logprob(&e, &[1, 2, 3]).unwrap();
    for perm in [[1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]] {
        assert!((ctc_forward_logprob(&e, &perm).unwrap() - base).abs() < 1e-12);
    }
    let rep = ctc_forward_logprob(&e, &[1, 1, 2]).unwrap();
    for perm in [[2, 2, 3], [3, 3, 1]] {
        assert!((ctc_forward_logprob(&e, &perm).unwrap() - rep).abs() < 1e-12);
    }
}

#[test]
fn invalid_floor_is_rejected() {
    let mut g = Gaussian::new(rng::stream(1, "ctc-bad-floor"));
    let e = random_emissions(&mut g, 3, 3, 0);
    for floor in [0.0, -1.0, 1.5, f64::NAN] {
        assert!(floor_blank(&e, floor).is_err());
    }
}
