use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// The 39 stress-free ARPABET phonemes of the CMU dictionary.
pub const ARPABET: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

/// Word-boundary pseudo-phoneme.
pub const SPACE: &str = "[space]";
/// Dedicated silence label used by HMM-style inventories.
pub const SILENCE: &str = "[silence]";

/// Dense index of a symbol inside a [`PhonemeInventory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhonemeId(pub usize);

impl PhonemeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PhonemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug)]
struct Inner {
    symbols: Vec<String>,
    lookup: HashMap<String, PhonemeId>,
    space: PhonemeId,
    silence: PhonemeId,
}

/// Closed, ordered label set with stable integer ids.
///
/// Cloning is cheap; the symbol table is shared and never mutated.
#[derive(Debug, Clone)]
pub struct PhonemeInventory {
    inner: Arc<Inner>,
}

impl PartialEq for PhonemeInventory {
    fn eq(&self, other: &Self) -> bool {
        self.inner.symbols == other.inner.symbols
            && self.inner.space == other.inner.space
            && self.inner.silence == other.inner.silence
    }
}

impl PhonemeInventory {
    /// Builds an inventory from an ordered symbol list. `space` and
    /// `silence` name symbols in the list and may be the same symbol.
    pub fn new<S: AsRef<str>>(symbols: &[S], space: &str, silence: &str) -> Result<Self> {
        let mut lookup = HashMap::with_capacity(symbols.len());
        let mut owned = Vec::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            let s = s.as_ref();
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInventory(format!("bad symbol {s:?}")));
            }
            if lookup.insert(s.to_string(), PhonemeId(i)).is_some() {
                return Err(Error::InvalidInventory(format!("duplicate symbol {s:?}")));
            }
            owned.push(s.to_string());
        }
        let find = |name: &str| {
            lookup
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidInventory(format!("missing symbol {name:?}")))
        };
        let space = find(space)?;
        let silence = find(silence)?;
        Ok(Self {
            inner: Arc::new(Inner {
                symbols: owned,
                lookup,
                space,
                silence,
            }),
        })
    }

    /// ARPABET plus `[space]` and a separate `[silence]` label.
    pub fn arpabet() -> Self {
        let mut symbols: Vec<&str> = ARPABET.to_vec();
        symbols.push(SPACE);
        symbols.push(SILENCE);
        Self::new(&symbols, SPACE, SILENCE).expect("builtin inventory is valid")
    }

    /// ARPABET plus `[space]`, where `[space]` doubles as silence.
    pub fn arpabet_ctc() -> Self {
        let mut symbols: Vec<&str> = ARPABET.to_vec();
        symbols.push(SPACE);
        Self::new(&symbols, SPACE, SPACE).expect("builtin inventory is valid")
    }

    /// Parses a plain-text inventory: one symbol per line, blank lines and
    /// `#` comments ignored. The file must contain `space` and `silence`.
    pub fn parse(text: &str, space: &str, silence: &str) -> Result<Self> {
        let symbols: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::new(&symbols, space, silence)
    }

    pub fn len(&self) -> usize {
        self.inner.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.inner.symbols
    }

    pub fn space(&self) -> PhonemeId {
        self.inner.space
    }

    pub fn silence(&self) -> PhonemeId {
        self.inner.silence
    }

    /// `[space]` or the silence label.
    pub fn is_boundary(&self, id: PhonemeId) -> bool {
        id == self.inner.space || id == self.inner.silence
    }

    pub fn contains(&self, id: PhonemeId) -> bool {
        id.0 < self.inner.symbols.len()
    }

    pub fn id(&self, symbol: &str) -> Result<PhonemeId> {
        self.inner
            .lookup
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownPhoneme(symbol.to_string()))
    }

    pub fn symbol(&self, id: PhonemeId) -> Result<&str> {
        self.inner
            .symbols
            .get(id.0)
            .map(String::as_str)
            .ok_or(Error::UnknownPhonemeId(id.0))
    }

    pub fn ids<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Vec<PhonemeId>> {
        symbols.iter().map(|s| self.id(s.as_ref())).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PhonemeId, &str)> {
        self.inner
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (PhonemeId(i), s.as_str()))
    }
}
