//! Gaussian upsampling of phoneme-level vectors to frame level.
//!
//! Phoneme `n` is centred at `c_n = Σ_{k≤n} d_k − d_n/2`; frame `t` is
//! sampled at `t + 0.5` and attends to phonemes with weights
//! `∝ exp(−(t + 0.5 − c_n)² / 2σ²)`, normalized over phonemes.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_SIGMA_G: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct UpsampleWeights {
    /// `T × N`, rows sum to one.
    pub weights: Matrix,
    pub centers: Vec<f64>,
}

impl UpsampleWeights {
    pub fn frames(&self) -> usize {
        self.weights.rows()
    }

    pub fn phonemes(&self) -> usize {
        self.weights.cols()
    }
}

pub fn gaussian_upsample_weights(durations: &[u32], sigma_g: f64) -> Result<UpsampleWeights> {
    if !(sigma_g.is_finite() && sigma_g > 0.0) {
        return Err(Error::invalid(format!("sigma_g must be positive, got {sigma_g}")));
    }
    let total: u64 = durations.iter().map(|&d| u64::from(d)).sum();
    if total == 0 {
        return Err(Error::invalid("upsampling needs at least one frame"));
    }
    let mut centers = Vec::with_capacity(durations.len());
    let mut end = 0.0;
    for &d in durations {
        end += f64::from(d);
        centers.push(end - f64::from(d) / 2.0);
    }
    let frames = total as usize;
    let n = durations.len();
    let inv_two_var = 1.0 / (2.0 * sigma_g * sigma_g);
    let mut data = Vec::with_capacity(frames * n);
    let mut logits = vec![0.0; n];
    for t in 0..frames {
        let pos = t as f64 + 0.5;
        for (l, c) in logits.iter_mut().zip(&centers) {
            *l = -(pos - c).powi(2) * inv_two_var;
        }
        // Subtracting the max keeps the nearest centre at weight exp(0).
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = data.len();
        data.extend(logits.iter().map(|l| (l - max).exp()));
        let z: f64 = data[start..].iter().sum();
        data[start..].iter_mut().for_each(|w| *w /= z);
    }
    Ok(UpsampleWeights {
        weights: Matrix::new(frames, n, data)?,
        centers,
    })
}

/// `T × D` output with row `t = Σ_n W[t][n] · h[n]`.
pub fn upsample_states(h: &Matrix, w: &UpsampleWeights) -> Result<Matrix> {
    if h.rows() != w.phonemes() {
        return Err(Error::Shape(format!(
            "{} phoneme vectors but weights cover {} phonemes",
            h.rows(),
            w.phonemes()
        )));
    }
    let d = h.cols();
    let mut out = vec![0.0; w.frames() * d];
    for (t, row) in w.weights.iter_rows().enumerate() {
        let dst = &mut out[t * d..(t + 1) * d];
        for (n, &wt) in row.iter().enumerate() {
            if wt == 0.0 {
                continue;
            }
            for (o, x) in dst.iter_mut().zip(h.row(n)) {
                *o += wt * x;
            }
        }
    }
    Matrix::new(w.frames(), d, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_phoneme() {
        let w = gaussian_upsample_weights(&[1], 0.7).unwrap();
        assert_eq!(w.weights.data(), [1.0]);
        assert_eq!(w.centers, [0.5]);
    }

    #[test]
    fn narrow_gaussian_is_nearest_centre() {
        let w = gaussian_upsample_weights(&[2, 2], 1e-3).unwrap();
        assert_eq!(w.weights.get(0, 0), 1.0);
        assert_eq!(w.weights.get(3, 1), 1.0);
    }

    #[test]
    fn errors() {
        assert!(gaussian_upsample_weights(&[0, 0], 1.0).is_err());
        assert!(gaussian_upsample_weights(&[], 1.0).is_err());
        assert!(gaussian_upsample_weights(&[3], 0.0).is_err());
        let w = gaussian_upsample_weights(&[3, 5], 1.0).unwrap();
        let h = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(upsample_states(&h, &w), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_duration_phoneme_takes_no_frames() {
        let w = gaussian_upsample_weights(&[0, 4], 1.0).unwrap();
        assert_eq!(w.frames(), 4);
        assert_eq!(w.centers, [0.0, 2.0]);
        assert!(w.weights.get(0, 0) > 0.0);
    }

    #[test]
    fn identical_rows_are_preserved() {
        let w = gaussian_upsample_weights(&[2, 3, 1], 1.5).unwrap();
        let h = Matrix::from_rows(&vec![vec![0.25, -4.0]; 3]).unwrap();
        let out = upsample_states(&h, &w).unwrap();
        for row in out.iter_rows() {
            assert!((row[0] - 0.25).abs() < 1e-12 && (row[1] + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_weights_gather() {
        let w = gaussian_upsample_weights(&[2, 1], 1e-4).unwrap();
        let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let out = upsample_states(&h, &w).unwrap();
        assert_eq!(out.data(), [1.0, 2.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
