use super::model::{HmmModel, STATES_PER_PHONEME};
use crate::error::{Error, Result};
use crate::inventory::{PhonemeId, PhonemeInventory};

/// What a frame is aligned to, independent of model state numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Emitting state `sub` (0..3) of transcript token `token`.
    Phone { token: usize, sub: u8 },
    /// Silence realized at transcript token `token` (a `[space]` or
    /// silence label), or unattached silence during initialization.
    Silence { token: Option<usize> },
}

impl StateLabel {
    pub fn token(self) -> Option<usize> {
        match self {
            StateLabel::Phone { token, .. } => Some(token),
            StateLabel::Silence { token } => token,
        }
    }
}

/// One node of the linear alignment graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Position {
    pub label: StateLabel,
    pub state: usize,
    pub optional: bool,
}

/// Left-to-right graph for one transcript: three states per phoneme,
/// a silence node per `[space]` (optional when allowed) and per explicit
/// silence label (mandatory).
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub positions: Vec<Position>,
}

impl Topology {
    pub fn build(
        model: &HmmModel,
        transcript: &[PhonemeId],
        allow_optional_silence: bool,
    ) -> Result<Self> {
        let inv = model.inventory();
        if transcript.is_empty() {
            return Err(Error::Infeasible("empty transcript".into()));
        }
        let mut positions = Vec::with_capacity(transcript.len() * STATES_PER_PHONEME);
        for (token, &p) in transcript.iter().enumerate() {
            if p == inv.space() {
                positions.push(Position {
                    label: StateLabel::Silence { token: Some(token) },
                    state: model.silence_state(),
                    optional: allow_optional_silence,
                });
            } else if p == inv.silence() {
                positions.push(Position {
                    label: StateLabel::Silence { token: Some(token) },
                    state: model.silence_state(),
                    optional: false,
                });
            } else {
                let states = model.phone_states(p)?;
                for (sub, &state) in states.iter().enumerate() {
                    positions.push(Position {
                        label: StateLabel::Phone { token, sub: sub as u8 },
                        state,
                        optional: false,
                    });
                }
            }
        }
        Ok(Self { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn min_frames(&self) -> usize {
        let mandatory = self.positions.iter().filter(|p| !p.optional).count();
        mandatory.max(1)
    }

    /// Positions a path may start in.
    pub fn starts(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, p) in self.positions.iter().enumerate() {
            out.push(i);
            if !p.optional {
                break;
            }
        }
        out
    }

    /// Positions a path may end in.
    pub fn ends(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, p) in self.positions.iter().enumerate().rev() {
            out.push(i);
            if !p.optional {
                break;
            }
        }
        out
    }

    /// Predecessors of `q` other than itself: `q − 1` and any earlier
    /// position reachable by skipping optional nodes.
    pub fn predecessors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        let mut k = q;
        let mut done = q == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            k -= 1;
            let p = k;
            done = k == 0 || !self.positions[k].optional;
            Some(p)
        })
    }
}

/// Number of non-boundary tokens.
pub(crate) fn phone_count(transcript: &[PhonemeId], inv: &PhonemeInventory) -> usize {
    transcript.iter().filter(|&&p| !inv.is_boundary(p)).count()
}
