use crate::error::{Error, Result};

/// Dense row-major `rows × cols` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Frame-level features, `T × D`.
pub type FeatureMatrix = Matrix;

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {}) = {}",
                i / cols,
                i % cols,
                data[i]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    /// Keeps rows `range`.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.rows {
            return Err(Error::Shape(format!(
                "row range {range:?} out of 0..{}",
                self.rows
            )));
        }
        Self::new(
            range.len(),
            self.cols,
            self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        )
    }

    pub(crate) fn map_column(&mut self, col: usize, f: impl Fn(f64) -> f64) {
        for r in 0..self.rows {
            let v = &mut self.data[r * self.cols + col];
            *v = f(*v);
        }
    }
}

/// Normalization tolerance for emission rows (log-sum-exp ≈ 0).
pub const EMISSION_NORM_TOL: f64 = 1e-3;

/// Frame-level CTC log-posteriors, `T × S`, with a declared blank column.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    log_probs: Matrix,
    blank: usize,
}

impl EmissionMatrix {
    pub fn new(log_probs: Matrix, blank: usize) -> Result<Self> {
        if blank >= log_probs.cols() {
            return Err(Error::invalid(format!(
                "blank index {blank} outside {} columns",
                log_probs.cols()
            )));
        }
        for (t, row) in log_probs.iter_rows().enumerate() {
            let lse = log_sum_exp(row);
            if lse.abs() > EMISSION_NORM_TOL {
                return Err(Error::invalid(format!(
                    "emission row {t} is not normalized (log-sum-exp {lse:.6})"
                )));
            }
        }
        Ok(Self { log_probs, blank })
    }

    /// Row-wise log-softmax of arbitrary logits.
    pub fn from_logits(logits: &Matrix, blank: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(logits.data().len());
        for row in logits.iter_rows() {
            let lse = log_sum_exp(row);
            data.extend(row.iter().map(|v| v - lse));
        }
        Self::new(Matrix::new(logits.rows(), logits.cols(), data)?, blank)
    }

    pub fn log_probs(&self) -> &Matrix {
        &self.log_probs
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn frames(&self) -> usize {
        self.log_probs.rows()
    }

    pub fn labels(&self) -> usize {
        self.log_probs.cols()
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Matrix::new(0, 3, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn emission_normalization_is_checked() {
        let m = Matrix::from_rows(&[vec![0.5f64.ln(), 0.5f64.ln()]]).unwrap();
        assert!(EmissionMatrix::new(m, 0).is_ok());
        let bad = Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(EmissionMatrix::new(bad.clone(), 0).is_err());
        let fixed = EmissionMatrix::from_logits(&bad, 1).unwrap();
        assert!((fixed.log_probs().get(0, 0) - 0.5f64.ln()).abs() < 1e-12);
        assert!(EmissionMatrix::from_logits(&bad, 2).is_err());
    }
}
