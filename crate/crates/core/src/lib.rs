//! Phoneme-duration toolkit: forced alignment (HMM-GMM and CTC),
//! duration statistics, duration modification, Gaussian upsampling and a
//! simulation harness.

pub mod ctc;
pub mod durmod;
pub mod error;
pub mod hmm;
pub mod inventory;
pub mod io;
pub mod matrix;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod upsample;
pub mod utterance;

pub use error::{Error, Result};
pub use inventory::{PhonemeId, PhonemeInventory};
pub use matrix::{EmissionMatrix, FeatureMatrix, Matrix};
pub use utterance::{AlignedUtterance, Transcript, UtteranceRecord};
