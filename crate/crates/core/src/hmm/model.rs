use serde::{Deserialize, Serialize};

use super::gmm::HmmState;
use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};

pub const STATES_PER_PHONEME: usize = 3;
pub const MODEL_FORMAT: &str = "phonedur-hmm";
pub const MODEL_VERSION: u32 = 1;

/// Monophone HMM with three left-to-right emitting states per phoneme and
/// one shared silence state.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    inventory: PhonemeInventory,
    dim: usize,
    variance_floor: Vec<f64>,
    pub(crate) states: Vec<HmmState>,
    phone_states: Vec<Option<[usize; STATES_PER_PHONEME]>>,
    silence_state: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    dim: usize,
    variance_floor: Vec<f64>,
    silence: HmmState,
    phonemes: Vec<PhonemeEntry>,
}

#[derive(Serialize, Deserialize)]
struct PhonemeEntry {
    symbol: String,
    states: Vec<HmmState>,
}

impl HmmModel {
    /// `phones` lists each modelled phoneme with its three states.
    pub(crate) fn assemble(
        inventory: PhonemeInventory,
        dim: usize,
        variance_floor: Vec<f64>,
        phones: Vec<(PhonemeId, [HmmState; STATES_PER_PHONEME])>,
        silence: HmmState,
    ) -> Result<Self> {
        let mut states = Vec::with_capacity(phones.len() * STATES_PER_PHONEME + 1);
        let mut phone_states = vec![None; inventory.len()];
        for (p, triple) in phones {
            if inventory.is_boundary(p) || !inventory.contains(p) {
                return Err(Error::invalid(format!("cannot model boundary or unknown phoneme {p}")));
            }
            let base = states.len();
            states.extend(triple);
            phone_states[p.0] = Some([base, base + 1, base + 2]);
        }
        let silence_state = states.len();
        states.push(silence);
        let model = Self {
            inventory,
            dim,
            variance_floor,
            states,
            phone_states,
            silence_state,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.variance_floor.len() != self.dim || self.variance_floor.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("variance floor must be positive per dimension"));
        }
        for s in &self.states {
            s.check(self.dim, &self.variance_floor)?;
        }
        Ok(())
    }

    pub fn inventory(&self) -> &PhonemeInventory {
        &self.inventory
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variance_floor(&self) -> &[f64] {
        &self.variance_floor
    }

    pub fn states(&self) -> &[HmmState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &HmmState {
        &self.states[index]
    }

    pub fn silence_state(&self) -> usize {
        self.silence_state
    }

    pub fn phone_states(&self, p: PhonemeId) -> Result<[usize; STATES_PER_PHONEME]> {
        self.phone_states
            .get(p.0)
            .copied()
            .flatten()
            .ok_or_else(|| match self.inventory.symbol(p) {
                Ok(s) => Error::UnseenPhoneme(s.to_string()),
                Err(e) => e,
            })
    }

    pub fn modelled_phonemes(&self) -> impl Iterator<Item = PhonemeId> + '_ {
        self.phone_states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|_| PhonemeId(i)))
    }

    pub fn mixture_sizes(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.components.len()).collect()
    }

    /// JSON dump; floats are written with round-trip precision.
    pub fn to_json(&self) -> String {
        let phonemes = self
            .modelled_phonemes()
            .map(|p| {
                let idx = self.phone_states[p.0].expect("modelled");
                PhonemeEntry {
                    symbol: self.inventory.symbol(p).expect("valid id").to_string(),
                    states: idx.iter().map(|&i| self.states[i].clone()).collect(),
                }
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dim: self.dim,
            variance_floor: self.variance_floor.clone(),
            silence: self.states[self.silence_state].clone(),
            phonemes,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str, inventory: &PhonemeInventory) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<model>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        let mut phones = Vec::with_capacity(file.phonemes.len());
        for entry in file.phonemes {
            let p = inventory.id(&entry.symbol)?;
            let triple: [HmmState; STATES_PER_PHONEME] = entry.states.try_into().map_err(|_| {
                Error::invalid(format!("phoneme {} needs exactly 3 states", entry.symbol))
            })?;
            phones.push((p, triple));
        }
        Self::assemble(
            inventory.clone(),
            file.dim,
            file.variance_floor,
            phones,
            file.silence,
        )
    }
}
