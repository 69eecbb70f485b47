//! Exhaustive CTC path enumeration over every `S^T` frame labelling.

#![allow(dead_code)]

use phonedur::Matrix;

/// Every frame-level path over `symbols` columns, as digit sequences.
pub fn all_paths(frames: usize, symbols: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..symbols.pow(frames as u32)).map(move |mut code| {
        (0..frames)
            .map(|_| {
                let s = code % symbols;
                code /= symbols;
                s
            })
            .collect()
    })
}

/// Merge repeats, then drop blanks.
pub fn collapse(path: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &s in path {
        if Some(s) != prev && s != blank {
            out.push(s);
        }
        prev = Some(s);
    }
    out
}

pub struct Oracle {
    pub sum: f64,
    pub max: f64,
    pub count: usize,
}

pub fn enumerate(scores: &Matrix, labels: &[usize], blank: usize) -> Oracle {
    let mut matching = Vec::new();
    let mut max = f64::NEG_INFINITY;
    for path in all_paths(scores.rows(), scores.cols()) {
        if collapse(&path, blank) == labels {
            let mut s = 0.0;
            for (t, &c) in path.iter().enumerate() {
                s += scores.get(t, c);
            }
            max = max.max(s);
            matching.push(s);
        }
    }
    let sum = if matching.is_empty() {
        f64::NEG_INFINITY
    } else {
        max + matching.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
    };
    Oracle {
        sum,
        max,
        count: matching.len(),
    }
}

