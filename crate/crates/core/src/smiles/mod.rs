//! SMILES and pseudo-SMILES: tokenizer, parser, writer and canonical form.
//!
//! The accepted grammar is written out in `grammar/smiles.ebnf` at the crate root.

mod canon;
mod lexer;
mod parser;
mod writer;

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::molgraph::GraphError;

pub use canon::{canonical_ranks, canonical_smiles, canonicalize, canonicalize_with};
pub use lexer::{tokenize, tokenize_with, AtomToken, BondSymbol, SmilesToken, TokenKind};
pub use parser::{parse, parse_with};
pub use writer::{write, write_ranked, write_tokens, WriteError, WrittenToken};

/// Placeholder labels for unspecified substituents, in sampling order.
pub const RGROUP_LABELS: [&str; 22] = [
    "R", "R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "R11", "R12", "Ra", "Rb",
    "Rc", "Rd", "X", "Y", "Z", "A", "Ar",
];

/// Whether `text` is an R-group placeholder. These take precedence over the element symbols
/// they collide with (Y, Ar, Ra, Rb) when reading bracket atoms.
pub fn is_rgroup_label(text: &str) -> bool {
    RGROUP_LABELS.contains(&text)
}

/// Parser configuration.
///
/// In lenient mode bracket text that is not a valid bracket atom becomes an abbreviation
/// pseudo-atom carrying the text verbatim, and invalid stereo marks are dropped. Strict mode
/// rejects pseudo-atoms, invalid stereo and valence violations.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub strict: bool,
    /// Bracket texts that always read as abbreviations, even when they also spell a valid
    /// bracket atom (e.g. "Pr", "Ac", "NH2").
    pub abbreviations: Option<Arc<HashSet<String>>>,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions {
            strict: true,
            abbreviations: None,
        }
    }

    pub fn with_abbreviations(names: impl IntoIterator<Item = String>) -> Self {
        ParseOptions {
            strict: false,
            abbreviations: Some(Arc::new(names.into_iter().collect())),
        }
    }

    fn is_abbreviation(&self, text: &str) -> bool {
        self.abbreviations
            .as_ref()
            .is_some_and(|set| set.contains(text))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalCharacter { offset: usize, ch: char },
    #[error("unbalanced bracket at offset {0}")]
    UnbalancedBracket(usize),
    #[error("invalid bracket atom {text:?} at offset {offset}")]
    InvalidBracketAtom { offset: usize, text: String },
    #[error("pseudo-atom {text:?} at offset {offset} is not allowed in strict mode")]
    PseudoAtom { offset: usize, text: String },
    #[error("malformed ring-closure number at offset {0}")]
    InvalidRingNumber(usize),
    #[error("ring closure {digit} opened at offset {offset} is never closed")]
    UnmatchedRingDigit { offset: usize, digit: u8 },
    #[error("ring closure {digit} at offset {offset} has conflicting bond symbols")]
    ConflictingRingBond { offset: usize, digit: u8 },
    #[error("bond symbol at offset {0} is not followed by an atom")]
    DanglingBond(usize),
    #[error("unbalanced parenthesis at offset {0}")]
    UnbalancedParenthesis(usize),
    #[error("empty branch at offset {0}")]
    EmptyBranch(usize),
    #[error("token at offset {0} needs a preceding atom")]
    MissingAtom(usize),
    #[error("at offset {offset}: {source}")]
    Graph { offset: usize, source: GraphError },
    #[error("invalid stereo on atom {atom} at offset {offset}")]
    InvalidStereo { offset: usize, atom: usize },
    #[error("atom {atom} ({symbol}) at offset {offset} exceeds its valence")]
    Valence {
        offset: usize,
        atom: usize,
        symbol: String,
    },
}

impl SmilesError {
    /// Byte offset into the input where the problem was detected.
    pub fn offset(&self) -> usize {
        match self {
            SmilesError::Empty => 0,
            SmilesError::IllegalCharacter { offset, .. }
            | SmilesError::InvalidBracketAtom { offset, .. }
            | SmilesError::PseudoAtom { offset, .. }
            | SmilesError::UnmatchedRingDigit { offset, .. }
            | SmilesError::ConflictingRingBond { offset, .. }
            | SmilesError::Graph { offset, .. }
            | SmilesError::InvalidStereo { offset, .. }
            | SmilesError::Valence { offset, .. } => *offset,
            SmilesError::UnbalancedBracket(o)
            | SmilesError::InvalidRingNumber(o)
            | SmilesError::DanglingBond(o)
            | SmilesError::UnbalancedParenthesis(o)
            | SmilesError::EmptyBranch(o)
            | SmilesError::MissingAtom(o) => *o,
        }
    }
}
