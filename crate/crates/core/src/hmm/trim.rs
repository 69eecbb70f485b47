//! Energy-based silence detection.
//!
//! The energy column is read in decibels. A frame is silent when its level
//! relative to the reference is below the threshold; the reference is the
//! louder of the utterance peak and 0 dB full scale, so an utterance that
//! never rises above the threshold is all silence.

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_SILENCE_DB: f64 = -50.0;

pub fn silent_frames(f: &FeatureMatrix, energy_dim: usize, threshold_db: f64) -> Result<Vec<bool>> {
    if energy_dim >= f.cols() {
        return Err(Error::invalid(format!(
            "energy dimension {energy_dim} outside {} feature columns",
            f.cols()
        )));
    }
    let peak = f
        .iter_rows()
        .map(|r| r[energy_dim])
        .fold(f64::NEG_INFINITY, f64::max);
    let reference = peak.max(0.0);
    Ok(f.iter_rows()
        .map(|r| r[energy_dim] - reference < threshold_db)
        .collect())
}

/// Range of frames kept after dropping leading and trailing silence.
pub fn trim_range(
    f: &FeatureMatrix,
    energy_dim: usize,
    threshold_db: f64,
) -> Result<std::ops::Range<usize>> {
    let silent = silent_frames(f, energy_dim, threshold_db)?;
    let start = silent.iter().position(|s| !s).ok_or(Error::EmptyAfterTrim)?;
    let end = silent.iter().rposition(|s| !s).expect("non-silent frame exists") + 1;
    Ok(start..end)
}

pub fn trim_silence(f: &FeatureMatrix, energy_dim: usize, threshold_db: f64) -> Result<FeatureMatrix> {
    let range = trim_range(f, energy_dim, threshold_db)?;
    f.slice_rows(range)
}
