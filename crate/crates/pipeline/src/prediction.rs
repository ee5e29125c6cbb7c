//! Atom sequence plus scored bond matrix, and the JSON wire format external predictors speak.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use skelgraph_core::codec::{AtomSeq, Binning, SeqToken, Vocabulary};
use skelgraph_core::smiles::{tokenize_with, ParseOptions, TokenKind};
use skelgraph_core::BondType;

/// One ordered-pair entry: a bond type or `None` for no bond, with a confidence in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondEntry {
    pub kind: Option<BondType>,
    pub score: f64,
}

impl BondEntry {
    pub const NONE: BondEntry = BondEntry { kind: None, score: 1.0 };
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictionError {
    #[error("bond matrix has {matrix} atoms but the sequence has {atoms}")]
    Dimension { atoms: usize, matrix: usize },
    #[error("pair ({0}, {0}) is on the diagonal")]
    Diagonal(usize),
    #[error("pair ({i}, {j}) is outside a {size}x{size} matrix")]
    OutOfRange { i: usize, j: usize, size: usize },
    #[error("score {0} is outside [0, 1]")]
    Score(f64),
}

/// Scores for every ordered atom pair. Unset entries read as none@1.0 but do not compete
/// with a set entry in the other direction; the diagonal stays none.
#[derive(Debug, Clone, PartialEq)]
pub struct BondMatrix {
    size: usize,
    entries: Vec<Option<BondEntry>>,
}

impl BondMatrix {
    pub fn new(size: usize) -> BondMatrix {
        BondMatrix {
            size,
            entries: vec![None; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> BondEntry {
        self.entry(i, j).unwrap_or(BondEntry::NONE)
    }

    /// The entry as set, if it was.
    pub fn entry(&self, i: usize, j: usize) -> Option<BondEntry> {
        self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, kind: Option<BondType>, score: f64) -> Result<(), PredictionError> {
        if i >= self.size || j >= self.size {
            return Err(PredictionError::OutOfRange { i, j, size: self.size });
        }
        if i == j {
            return Err(PredictionError::Diagonal(i));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(PredictionError::Score(score));
        }
        self.entries[i * self.size + j] = Some(BondEntry { kind, score });
        Ok(())
    }

    /// Sets both directions of a bond. A wedge gets full score from its narrow end `i` and
    /// `reverse_score` from the other side.
    pub fn set_bond(&mut self, i: usize, j: usize, kind: Option<BondType>, reverse_score: f64) -> Result<(), PredictionError> {
        self.set(i, j, kind, 1.0)?;
        let back = if kind.is_some_and(BondType::is_wedge) { reverse_score } else { 1.0 };
        self.set(j, i, kind, back)
    }

    /// The bond kept for each unordered pair: the higher-scoring direction, (i, j) with
    /// i < j on ties, the set one if only one is set. Wedges keep the winning direction, so
    /// the first index is the narrow end.
    pub fn resolve(&self) -> Vec<(usize, usize, BondType)> {
        let mut out = Vec::new();
        for i in 0..self.size {
            for j in i + 1..self.size {
                let (a, b, e) = match (self.entry(i, j), self.entry(j, i)) {
                    (None, None) => continue,
                    (Some(f), None) => (i, j, f),
                    (None, Some(r)) => (j, i, r),
                    (Some(f), Some(r)) if r.score > f.score => (j, i, r),
                    (Some(f), Some(_)) => (i, j, f),
                };
                if let Some(kind) = e.kind {
                    if kind.is_wedge() {
                        out.push((a, b, kind));
                    } else {
                        out.push((i, j, kind));
                    }
                }
            }
        }
        out
    }
}

/// Model output for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub atom_seq: AtomSeq,
    pub bond_matrix: BondMatrix,
}

/// Number of atoms in a sequence: lexemes followed by a coordinate pair.
pub fn atom_count(seq: &AtomSeq) -> usize {
    seq.tokens.iter().filter(|t| matches!(t, SeqToken::X(_))).count()
}

impl Prediction {
    pub fn new(atom_seq: AtomSeq, bond_matrix: BondMatrix) -> Result<Prediction, PredictionError> {
        let atoms = atom_count(&atom_seq);
        if atoms != bond_matrix.size() {
            return Err(PredictionError::Dimension {
                atoms,
                matrix: bond_matrix.size(),
            });
        }
        Ok(Prediction { atom_seq, bond_matrix })
    }

    /// Wire form; unset entries are left out.
    pub fn to_wire(&self) -> WirePrediction {
        let t = &self.atom_seq.tokens;
        let mut atoms = Vec::new();
        for k in 0..t.len() {
            if let (SeqToken::Lexeme(label), Some(SeqToken::X(x)), Some(SeqToken::Y(y))) = (&t[k], t.get(k + 1), t.get(k + 2)) {
                atoms.push(WireAtom {
                    label: label.clone(),
                    x_bin: *x,
                    y_bin: *y,
                });
            }
        }
        let mut bonds = Vec::new();
        let m = self.bond_matrix.size();
        for i in 0..m {
            for j in 0..m {
                if let Some(e) = self.bond_matrix.entry(i, j) {
                    bonds.push(WireBond {
                        i,
                        j,
                        kind: e.kind.map_or(NONE_TYPE, BondType::name).to_string(),
                        score: e.score,
                    });
                }
            }
        }
        WirePrediction { atoms, bonds }
    }
}

pub const NONE_TYPE: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAtom {
    pub label: String,
    pub x_bin: u32,
    pub y_bin: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireBond {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "type")]
    pub kind: String,
    pub score: f64,
}

/// `{"atoms": [...], "bonds": [...]}`. Unknown keys are ignored so producers may attach
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePrediction {
    pub atoms: Vec<WireAtom>,
    #[serde(default)]
    pub bonds: Vec<WireBond>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WireError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("atom {index}: {label:?} is not a single atom lexeme")]
    Label { index: usize, label: String },
    #[error("atom {index}: {label:?} is not in the vocabulary")]
    OutOfVocabulary { index: usize, label: String },
    #[error("atom {index}: {axis} bin {bin} is outside [0, {bins})")]
    Bin { index: usize, axis: char, bin: u32, bins: u32 },
    #[error("bond ({i}, {j}): index out of range for {atoms} atoms")]
    BondIndex { i: usize, j: usize, atoms: usize },
    #[error("bond ({i}, {i}) is on the diagonal")]
    SelfPair { i: usize },
    #[error("bond ({i}, {j}): unknown type {kind:?}")]
    BondType { i: usize, j: usize, kind: String },
    #[error("bond ({i}, {j}): score {score} is outside [0, 1]")]
    Score { i: usize, j: usize, score: f64 },
    #[error("bond ({i}, {j}) is listed twice")]
    DuplicatePair { i: usize, j: usize },
}

impl WirePrediction {
    pub fn from_json(text: &str) -> Result<WirePrediction, WireError> {
        serde_json::from_str(text).map_err(|e| WireError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    /// Checks every field and builds the in-memory prediction. With a vocabulary, labels
    /// must be vocabulary tokens; otherwise any single atom lexeme is accepted.
    pub fn validate(
        &self,
        binning: Binning,
        opts: &ParseOptions,
        vocab: Option<&Vocabulary>,
    ) -> Result<Prediction, WireError> {
        let bins = binning.bins();
        let mut tokens = vec![SeqToken::Bos];
        for (index, a) in self.atoms.iter().enumerate() {
            let single_atom = tokenize_with(&a.label, opts)
                .ok()
                .is_some_and(|t| t.len() == 1 && matches!(t[0].kind, TokenKind::Atom(_)));
            if !single_atom {
                return Err(WireError::Label {
                    index,
                    label: a.label.clone(),
                });
            }
            if vocab.is_some_and(|v| !v.contains(&a.label)) {
                return Err(WireError::OutOfVocabulary {
                    index,
                    label: a.label.clone(),
                });
            }
            for (axis, bin) in [('x', a.x_bin), ('y', a.y_bin)] {
                if bin >= bins {
                    return Err(WireError::Bin { index, axis, bin, bins });
                }
            }
            tokens.push(SeqToken::Lexeme(a.label.clone()));
            tokens.push(SeqToken::X(a.x_bin));
            tokens.push(SeqToken::Y(a.y_bin));
        }
        tokens.push(SeqToken::Eos);

        let m = self.atoms.len();
        let mut matrix = BondMatrix::new(m);
        let mut seen = std::collections::HashSet::new();
        for b in &self.bonds {
            let (i, j) = (b.i, b.j);
            if i >= m || j >= m {
                return Err(WireError::BondIndex { i, j, atoms: m });
            }
            if i == j {
                return Err(WireError::SelfPair { i });
            }
            let kind = if b.kind == NONE_TYPE {
                None
            } else {
                Some(BondType::from_name(&b.kind).ok_or_else(|| WireError::BondType {
                    i,
                    j,
                    kind: b.kind.clone(),
                })?)
            };
            if !(0.0..=1.0).contains(&b.score) {
                return Err(WireError::Score { i, j, score: b.score });
            }
            if !seen.insert((i, j)) {
                return Err(WireError::DuplicatePair { i, j });
            }
            matrix.set(i, j, kind, b.score).expect("checked above");
        }
        Ok(Prediction::new(AtomSeq { tokens }, matrix).expect("one matrix row per atom"))
    }
}

/// Parses and validates one wire-format line.
pub fn validate_wire(
    text: &str,
    binning: Binning,
    opts: &ParseOptions,
    vocab: Option<&Vocabulary>,
) -> Result<Prediction, WireError> {
    WirePrediction::from_json(text)?.validate(binning, opts, vocab)
}
