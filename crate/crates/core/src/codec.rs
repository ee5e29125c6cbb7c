//! Coordinate-token sequences: a pseudo-SMILES token stream where every atom token is
//! followed by one x-bin token and one y-bin token.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::augment::RuleTable;
use crate::element::Element;
use crate::molgraph::{AtomLabel, Chirality, MolGraph, Point};
use crate::smiles::{
    parse_with, tokenize_with, write_tokens, ParseOptions, SmilesError, TokenKind, WriteError,
    RGROUP_LABELS,
};

pub const DEFAULT_BINS: u32 = 64;

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("coordinate {0} is not a finite non-negative number")]
    InvalidCoordinate(f64),
    #[error("bin {bin} is outside [0, {bins})")]
    BinOutOfRange { bin: u32, bins: u32 },
    #[error("bin count must be positive")]
    ZeroBins,
    #[error("atom {0} has no coordinates")]
    MissingCoordinates(usize),
    #[error("malformed sequence at token {position}: {reason}")]
    Malformed { position: usize, reason: String },
    #[error("token {token:?} at position {position} is not in the vocabulary")]
    OutOfVocabulary { position: usize, token: String },
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error("invalid vocabulary file: {0}")]
    Vocabulary(String),
    #[error("vocabulary io: {0}")]
    Io(String),
}

/// Uniform binning of normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Binning {
    bins: u32,
}

impl Default for Binning {
    fn default() -> Self {
        Binning { bins: DEFAULT_BINS }
    }
}

impl Binning {
    pub fn new(bins: u32) -> Result<Self, CodecError> {
        if bins == 0 {
            return Err(CodecError::ZeroBins);
        }
        Ok(Binning { bins })
    }

    pub fn bins(self) -> u32 {
        self.bins
    }

    /// floor(c * bins), with inputs at or slightly above 1 clamped into the top bin.
    pub fn bin(self, c: f64) -> Result<u32, CodecError> {
        if !c.is_finite() || c < 0.0 {
            return Err(CodecError::InvalidCoordinate(c));
        }
        Ok(((c * self.bins as f64).floor() as u64).min(self.bins as u64 - 1) as u32)
    }

    /// Center of bin `b`.
    pub fn unbin(self, b: u32) -> Result<f64, CodecError> {
        if b >= self.bins {
            return Err(CodecError::BinOutOfRange {
                bin: b,
                bins: self.bins,
            });
        }
        Ok((b as f64 + 0.5) / self.bins as f64)
    }
}

/// One element of an atom sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SeqToken {
    /// A SMILES lexeme: atom, bond symbol, parenthesis, ring digit or dot.
    Lexeme(String),
    X(u32),
    Y(u32),
    Bos,
    Eos,
    Pad,
}

impl fmt::Display for SeqToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqToken::Lexeme(s) => f.write_str(s),
            SeqToken::X(b) => write!(f, "<x{b}>"),
            SeqToken::Y(b) => write!(f, "<y{b}>"),
            SeqToken::Bos => f.write_str(BOS),
            SeqToken::Eos => f.write_str(EOS),
            SeqToken::Pad => f.write_str(PAD),
        }
    }
}

impl SeqToken {
    /// Inverse of `Display`.
    pub fn from_text(text: &str) -> SeqToken {
        match text {
            PAD => return SeqToken::Pad,
            BOS => return SeqToken::Bos,
            EOS => return SeqToken::Eos,
            _ => {}
        }
        let coord = |prefix: &str| {
            text.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix('>'))
                .and_then(|d| d.parse::<u32>().ok())
        };
        if let Some(b) = coord("<x") {
            SeqToken::X(b)
        } else if let Some(b) = coord("<y") {
            SeqToken::Y(b)
        } else {
            SeqToken::Lexeme(text.to_string())
        }
    }
}

/// Token sequence for one molecule, wrapped in BOS/EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSeq {
    pub tokens: Vec<SeqToken>,
}

impl AtomSeq {
    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(ToString::to_string).collect()
    }

    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> AtomSeq {
        AtomSeq {
            tokens: texts.iter().map(|t| SeqToken::from_text(t.as_ref())).collect(),
        }
    }

    /// The pseudo-SMILES obtained by dropping coordinate and control tokens.
    pub fn stripped_smiles(&self) -> String {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                SeqToken::Lexeme(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }
}

/// An encoded graph plus the graph atom index behind each sequence atom.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub seq: AtomSeq,
    pub atom_order: Vec<usize>,
}

/// Serializes a graph that carries coordinates on every atom.
pub fn encode(g: &MolGraph, binning: Binning) -> Result<Encoded, CodecError> {
    for (i, a) in g.atoms().iter().enumerate() {
        if a.coords.is_none() {
            return Err(CodecError::MissingCoordinates(i));
        }
    }
    let mut tokens = vec![SeqToken::Bos];
    let mut atom_order = Vec::new();
    for t in write_tokens(g, None)? {
        tokens.push(SeqToken::Lexeme(t.text));
        if let Some(atom) = t.atom {
            let p = g.atom(atom).coords.expect("checked above");
            tokens.push(SeqToken::X(binning.bin(p.x)?));
            tokens.push(SeqToken::Y(binning.bin(p.y)?));
            atom_order.push(atom);
        }
    }
    tokens.push(SeqToken::Eos);
    Ok(Encoded {
        seq: AtomSeq { tokens },
        atom_order,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAtom {
    pub label: AtomLabel,
    /// Chirality mark written in the atom token; geometry, not this mark, decides final parity.
    pub token_chirality: Option<Chirality>,
    pub x_bin: u32,
    pub y_bin: u32,
    pub coords: Point,
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub atoms: Vec<DecodedAtom>,
    /// The pseudo-SMILES spelled by the non-coordinate tokens.
    pub smiles: String,
    /// Connectivity implied by that pseudo-SMILES. Advisory only: bonds come from the
    /// bond predictor.
    pub skeleton: Result<MolGraph, SmilesError>,
}

/// Reads an atom sequence back into labeled atoms with bin-center coordinates.
///
/// A leading BOS is optional; decoding stops at EOS; PAD tokens are ignored. Positions in
/// errors index `seq.tokens`.
pub fn decode(seq: &AtomSeq, binning: Binning, opts: &ParseOptions) -> Result<Decoded, CodecError> {
    let malformed = |position: usize, reason: &str| CodecError::Malformed {
        position,
        reason: reason.to_string(),
    };
    let toks = &seq.tokens;
    let mut atoms = Vec::new();
    let mut smiles = String::new();
    let mut i = 0;
    while i < toks.len() {
        match &toks[i] {
            SeqToken::Pad => i += 1,
            SeqToken::Bos if i == 0 => i += 1,
            SeqToken::Bos => return Err(malformed(i, "BOS after the start")),
            SeqToken::Eos => {
                if let Some(j) = (i + 1..toks.len()).find(|&j| toks[j] != SeqToken::Pad) {
                    return Err(malformed(j, "tokens after EOS"));
                }
                break;
            }
            SeqToken::X(_) | SeqToken::Y(_) => {
                return Err(malformed(i, "coordinate token without an atom"))
            }
            SeqToken::Lexeme(text) => {
                let lexed = tokenize_with(text, opts)
                    .ok()
                    .filter(|t| t.len() == 1)
                    .ok_or_else(|| malformed(i, "not a single SMILES lexeme"))?;
                smiles.push_str(text);
                if let TokenKind::Atom(atom) = &lexed[0].kind {
                    let x = match toks.get(i + 1) {
                        Some(SeqToken::X(b)) => *b,
                        _ => return Err(malformed(i + 1, "expected an x coordinate token")),
                    };
                    let y = match toks.get(i + 2) {
                        Some(SeqToken::Y(b)) => *b,
                        _ => return Err(malformed(i + 2, "expected a y coordinate token")),
                    };
                    let coords = Point::new(binning.unbin(x)?, binning.unbin(y)?);
                    atoms.push(DecodedAtom {
                        label: atom.label.clone(),
                        token_chirality: atom.chirality,
                        x_bin: x,
                        y_bin: y,
                        coords,
                    });
                    i += 3;
                } else {
                    i += 1;
                }
            }
        }
    }
    let skeleton = parse_with(&smiles, opts);
    Ok(Decoded {
        atoms,
        smiles,
        skeleton,
    })
}

/// Elements enumerated as bracket atoms in the vocabulary.
const BRACKET_ELEMENTS: [&str; 30] = [
    "H", "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "As", "Se", "Br", "I", "Li", "Na", "K",
    "Mg", "Ca", "Al", "Zn", "Fe", "Cu", "Co", "Ni", "Pd", "Pt", "Sn", "Ge", "Te",
];
const AROMATIC_BRACKET: [&str; 8] = ["b", "c", "n", "o", "p", "s", "se", "as"];

pub(crate) fn isotopes_for(symbol: &str) -> &'static [u16] {
    match symbol {
        "H" => &[2, 3],
        "C" | "c" => &[11, 13, 14],
        "N" | "n" => &[15],
        "O" => &[17, 18],
        "F" => &[18],
        "P" => &[32],
        "S" => &[35],
        "Cl" => &[36, 37],
        "Br" => &[76, 79, 81],
        "I" => &[123, 125, 131],
        _ => &[],
    }
}

/// The closed token vocabulary: control tokens, structural lexemes, atom lexemes,
/// pseudo-atom labels, then x-bin and y-bin tokens in disjoint ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    bins: u32,
}

impl Vocabulary {
    /// Vocabulary for `bins` coordinate bins and the given pseudo-atom labels.
    pub fn new<S: AsRef<str>>(bins: u32, pseudo_labels: &[S]) -> Vocabulary {
        let mut tokens: Vec<String> = vec![PAD.into(), BOS.into(), EOS.into()];
        for s in ["(", ")", "-", "=", "#", ":", "/", "\\", "."] {
            tokens.push(s.into());
        }
        for d in 1..10 {
            tokens.push(d.to_string());
        }
        for d in 10..100 {
            tokens.push(format!("%{d}"));
        }
        for s in [
            "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "b", "c", "n", "o", "p", "s", "*",
        ] {
            tokens.push(s.into());
        }
        let symbols = BRACKET_ELEMENTS.iter().chain(AROMATIC_BRACKET.iter());
        for &sym in symbols {
            let isotopes = std::iter::once(None).chain(isotopes_for(sym).iter().copied().map(Some));
            for iso in isotopes {
                for chir in ["", "@", "@@"] {
                    for h in ["", "H", "H2", "H3", "H4"] {
                        for charge in ["", "+", "-", "+2", "-2"] {
                            let iso = iso.map(|i| i.to_string()).unwrap_or_default();
                            tokens.push(format!("[{iso}{sym}{chir}{h}{charge}]"));
                        }
                    }
                }
            }
        }
        for label in pseudo_labels {
            tokens.push(format!("[{}]", label.as_ref()));
        }
        for b in 0..bins {
            tokens.push(SeqToken::X(b).to_string());
        }
        for b in 0..bins {
            tokens.push(SeqToken::Y(b).to_string());
        }
        Self::from_tokens(tokens).expect("generated vocabulary is well formed")
    }

    /// Default vocabulary: built-in abbreviations plus R-group labels.
    pub fn standard(bins: u32) -> Vocabulary {
        Self::new(bins, &pseudo_labels(&RuleTable::builtin()))
    }

    fn from_tokens(raw: Vec<String>) -> Result<Vocabulary, CodecError> {
        let mut tokens = Vec::with_capacity(raw.len());
        let mut index = HashMap::new();
        for t in raw {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(CodecError::Vocabulary(format!("bad token {t:?}")));
            }
            if !index.contains_key(&t) {
                index.insert(t.clone(), tokens.len());
                tokens.push(t);
            }
        }
        for special in [PAD, BOS, EOS] {
            if !index.contains_key(special) {
                return Err(CodecError::Vocabulary(format!("missing {special}")));
            }
        }
        let xs = tokens
            .iter()
            .filter(|t| matches!(SeqToken::from_text(t), SeqToken::X(_)))
            .count() as u32;
        let ys = tokens
            .iter()
            .filter(|t| matches!(SeqToken::from_text(t), SeqToken::Y(_)))
            .count() as u32;
        if xs != ys || xs == 0 {
            return Err(CodecError::Vocabulary(format!(
                "{xs} x-bin tokens but {ys} y-bin tokens"
            )));
        }
        for b in 0..xs {
            for t in [SeqToken::X(b), SeqToken::Y(b)] {
                if !index.contains_key(&t.to_string()) {
                    return Err(CodecError::Vocabulary(format!("missing {t}")));
                }
            }
        }
        Ok(Vocabulary {
            tokens,
            index,
            bins: xs,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Token ids for a sequence; fails on the first out-of-vocabulary token.
    pub fn ids(&self, seq: &AtomSeq) -> Result<Vec<usize>, CodecError> {
        seq.tokens
            .iter()
            .enumerate()
            .map(|(position, t)| {
                let text = t.to_string();
                self.id(&text)
                    .ok_or(CodecError::OutOfVocabulary { position, token: text })
            })
            .collect()
    }

    /// One token per line, in id order.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Vocabulary, CodecError> {
        let raw: Vec<String> = text.lines().filter(|l| !l.is_empty()).map(String::from).collect();
        let n = raw.len();
        let v = Self::from_tokens(raw)?;
        if v.len() != n {
            return Err(CodecError::Vocabulary("duplicate tokens".into()));
        }
        Ok(v)
    }

    pub fn write_file(&self, path: &Path) -> Result<(), CodecError> {
        std::fs::write(path, self.to_text()).map_err(|e| CodecError::Io(e.to_string()))
    }

    pub fn read_file(path: &Path) -> Result<Vocabulary, CodecError> {
        let text = std::fs::read_to_string(path).map_err(|e| CodecError::Io(e.to_string()))?;
        Self::from_text(&text)
    }
}

/// Pseudo-atom labels covered by the vocabulary: rule-table abbreviations and R-groups.
pub fn pseudo_labels(rules: &RuleTable) -> Vec<String> {
    let mut labels: Vec<String> = rules.abbreviations().map(String::from).collect();
    labels.extend(RGROUP_LABELS.iter().map(|s| s.to_string()));
    labels
}

/// Whether an element symbol appears among the vocabulary's bracket atoms.
pub fn is_vocabulary_element(e: Element) -> bool {
    BRACKET_ELEMENTS.contains(&e.symbol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::BondType;

    fn b() -> Binning {
        Binning::default()
    }

    #[test]
    fn bin_examples() {
        assert_eq!(b().bin(0.0), Ok(0));
        assert_eq!(b().bin(0.5), Ok(32));
        assert_eq!(b().bin(0.999), Ok(63));
        assert_eq!(b().bin(1.0), Ok(63));
        assert!(b().bin(f64::NAN).is_err());
        assert!(b().bin(-0.1).is_err());
        assert_eq!(b().unbin(0), Ok(0.0078125));
        assert_eq!(b().unbin(32), Ok(0.5078125));
        assert!(b().unbin(64).is_err());
    }

    fn texts(seq: &AtomSeq) -> Vec<String> {
        seq.texts()
    }

    #[test]
    fn encode_examples() {
        let mut g = MolGraph::new();
        g.add_atom(AtomLabel::organic("C"), Some(Point::new(0.5, 0.5)))
            .unwrap();
        let e = encode(&g, b()).unwrap();
        assert_eq!(texts(&e.seq), ["<bos>", "C", "<x32>", "<y32>", "<eos>"]);

        let mut g = MolGraph::new();
        g.add_atom(AtomLabel::organic("C"), Some(Point::new(0.25, 0.5)))
            .unwrap();
        g.add_atom(AtomLabel::organic("C"), Some(Point::new(0.75, 0.5)))
            .unwrap();
        g.add_bond(0, 1, BondType::Single).unwrap();
        let e = encode(&g, b()).unwrap();
        assert_eq!(
            texts(&e.seq),
            ["<bos>", "C", "<x16>", "<y32>", "C", "<x48>", "<y32>", "<eos>"]
        );

        g.add_atom(AtomLabel::organic("O"), None).unwrap();
        assert_eq!(encode(&g, b()).unwrap_err(), CodecError::MissingCoordinates(2));
    }

    #[test]
    fn decode_examples() {
        let opts = ParseOptions::default();
        let d = decode(&AtomSeq::from_texts(&["C", "<x32>", "<y32>"]), b(), &opts).unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert_eq!(d.atoms[0].coords, Point::new(0.5078125, 0.5078125));

        let seq = AtomSeq::from_texts(&["C", "<x16>", "<y32>", "C", "<x48>", "<y32>"]);
        let d = decode(&seq, b(), &opts).unwrap();
        assert_eq!(d.atoms.len(), 2);
        let sk = d.skeleton.unwrap();
        assert_eq!(sk.bond_count(), 1);
        assert_eq!(sk.bond(0).kind, BondType::Single);

        let err = decode(&AtomSeq::from_texts(&["C", "<x32>"]), b(), &opts).unwrap_err();
        assert!(matches!(err, CodecError::Malformed { position: 2, .. }));
        let err = decode(&AtomSeq::from_texts(&["C", "<y3>", "<x3>"]), b(), &opts).unwrap_err();
        assert!(matches!(err, CodecError::Malformed { position: 1, .. }));
        let err = decode(&AtomSeq::from_texts(&["<x3>"]), b(), &opts).unwrap_err();
        assert!(matches!(err, CodecError::Malformed { position: 0, .. }));
    }

    #[test]
    fn vocabulary_file_roundtrip() {
        let v = Vocabulary::standard(64);
        assert_eq!(v.id(PAD), Some(0));
        assert!(v.contains("[C@@H]") && v.contains("[Me]") && v.contains("[R12]"));
        assert!(v.contains("<x63>") && !v.contains("<x64>"));
        let back = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.bins(), 64);
        assert!(Vocabulary::from_text("<pad>\n<bos>\n<eos>\n<x0>\n").is_err());
    }
}
