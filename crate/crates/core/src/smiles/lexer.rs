use crate::element::Element;
use crate::molgraph::{AtomLabel, Chirality, LabelKind};

use super::{is_rgroup_label, ParseOptions, SmilesError};

/// A bond lexeme. `Up`/`Down` are the directional `/` and `\` marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSymbol {
    pub fn text(self) -> &'static str {
        match self {
            BondSymbol::Single => "-",
            BondSymbol::Double => "=",
            BondSymbol::Triple => "#",
            BondSymbol::Aromatic => ":",
            BondSymbol::Up => "/",
            BondSymbol::Down => "\\",
        }
    }
}

/// Payload of an atom token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomToken {
    pub label: AtomLabel,
    pub chirality: Option<Chirality>,
    pub bracket: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Atom(AtomToken),
    Bond(BondSymbol),
    OpenParen,
    CloseParen,
    RingDigit(u8),
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmilesToken {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offset of the lexeme in the input.
    pub offset: usize,
}

impl SmilesToken {
    pub fn atom(&self) -> Option<&AtomToken> {
        match &self.kind {
            TokenKind::Atom(a) => Some(a),
            _ => None,
        }
    }
}

/// Splits a SMILES or pseudo-SMILES string into lexemes using lenient defaults.
pub fn tokenize(text: &str) -> Result<Vec<SmilesToken>, SmilesError> {
    tokenize_with(text, &ParseOptions::default())
}

pub fn tokenize_with(text: &str, opts: &ParseOptions) -> Result<Vec<SmilesToken>, SmilesError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let c = bytes[i];
        let kind = match c {
            b'[' => {
                let close = text[i..]
                    .find(']')
                    .map(|p| i + p)
                    .ok_or(SmilesError::UnbalancedBracket(i))?;
                let inner = &text[i + 1..close];
                if inner.contains('[') {
                    return Err(SmilesError::UnbalancedBracket(i));
                }
                i = close + 1;
                TokenKind::Atom(bracket_atom(inner, start, opts)?)
            }
            b']' => return Err(SmilesError::UnbalancedBracket(i)),
            b'(' => {
                i += 1;
                TokenKind::OpenParen
            }
            b')' => {
                i += 1;
                TokenKind::CloseParen
            }
            b'.' => {
                i += 1;
                TokenKind::Dot
            }
            b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                i += 1;
                TokenKind::Bond(match c {
                    b'-' => BondSymbol::Single,
                    b'=' => BondSymbol::Double,
                    b'#' => BondSymbol::Triple,
                    b':' => BondSymbol::Aromatic,
                    b'/' => BondSymbol::Up,
                    _ => BondSymbol::Down,
                })
            }
            b'0'..=b'9' => {
                i += 1;
                TokenKind::RingDigit(c - b'0')
            }
            b'%' => {
                let digits = bytes.get(i + 1..i + 3).ok_or(SmilesError::InvalidRingNumber(i))?;
                if !digits.iter().all(u8::is_ascii_digit) {
                    return Err(SmilesError::InvalidRingNumber(i));
                }
                i += 3;
                TokenKind::RingDigit((digits[0] - b'0') * 10 + (digits[1] - b'0'))
            }
            b'*' => {
                i += 1;
                TokenKind::Atom(AtomToken {
                    label: AtomLabel::wildcard(),
                    chirality: None,
                    bracket: false,
                })
            }
            _ => {
                let (symbol, aromatic, len) = organic_symbol(&bytes[i..]).ok_or_else(|| {
                    SmilesError::IllegalCharacter {
                        offset: i,
                        ch: text[i..].chars().next().unwrap_or('?'),
                    }
                })?;
                i += len;
                let element = Element::from_symbol(symbol).expect("organic table holds elements");
                let label = if aromatic {
                    AtomLabel::aromatic(element)
                } else {
                    AtomLabel::element(element)
                };
                TokenKind::Atom(AtomToken {
                    label,
                    chirality: None,
                    bracket: false,
                })
            }
        };
        out.push(SmilesToken {
            kind,
            text: text[start..i].to_string(),
            offset: start,
        });
    }
    Ok(out)
}

/// Organic-subset atom at the start of `s`: (element symbol, aromatic, lexeme length).
fn organic_symbol(s: &[u8]) -> Option<(&'static str, bool, usize)> {
    match s {
        [b'C', b'l', ..] => Some(("Cl", false, 2)),
        [b'B', b'r', ..] => Some(("Br", false, 2)),
        [c, ..] => {
            let (sym, arom) = match c {
                b'B' => ("B", false),
                b'C' => ("C", false),
                b'N' => ("N", false),
                b'O' => ("O", false),
                b'P' => ("P", false),
                b'S' => ("S", false),
                b'F' => ("F", false),
                b'I' => ("I", false),
                b'b' => ("B", true),
                b'c' => ("C", true),
                b'n' => ("N", true),
                b'o' => ("O", true),
                b'p' => ("P", true),
                b's' => ("S", true),
                _ => return None,
            };
            Some((sym, arom, 1))
        }
        [] => None,
    }
}

/// Interprets the text between `[` and `]`.
fn bracket_atom(inner: &str, offset: usize, opts: &ParseOptions) -> Result<AtomToken, SmilesError> {
    let pseudo = |kind: LabelKind| {
        let label = match kind {
            LabelKind::RGroup => AtomLabel::rgroup(inner),
            LabelKind::Wildcard => AtomLabel::wildcard(),
            _ => AtomLabel::abbreviation(inner),
        };
        AtomToken {
            label,
            chirality: None,
            bracket: true,
        }
    };
    let reject = |text: &str| SmilesError::PseudoAtom {
        offset,
        text: text.to_string(),
    };
    if inner == "*" {
        return Ok(pseudo(LabelKind::Wildcard));
    }
    if opts.is_abbreviation(inner) {
        if opts.strict {
            return Err(reject(inner));
        }
        return Ok(pseudo(LabelKind::Abbreviation));
    }
    if is_rgroup_label(inner) {
        if opts.strict {
            return Err(reject(inner));
        }
        return Ok(pseudo(LabelKind::RGroup));
    }
    if let Some(atom) = bracket_grammar(inner) {
        return Ok(atom);
    }
    if opts.strict {
        return Err(reject(inner));
    }
    if inner.is_empty() || inner.contains(|c: char| c.is_whitespace() || c == ']') {
        return Err(SmilesError::InvalidBracketAtom {
            offset,
            text: inner.to_string(),
        });
    }
    Ok(pseudo(LabelKind::Abbreviation))
}

/// isotope? symbol chiral? hcount? charge? class?; `None` unless all of `inner` is consumed.
fn bracket_grammar(inner: &str) -> Option<AtomToken> {
    let b = inner.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let isotope = if i > 0 {
        let v: u16 = inner[..i].parse().ok()?;
        (v > 0).then_some(v)?;
        Some(v)
    } else {
        None
    };

    // Try the longest symbol first and fall back to one letter if the rest does not parse.
    for len in [2usize, 1] {
        let Some(sym) = inner.get(i..i + len) else {
            continue;
        };
        let parsed = bracket_symbol(sym).and_then(|(element, aromatic)| {
            let rest = bracket_tail(&inner[i + len..])?;
            Some((element, aromatic, rest))
        });
        if let Some((element, aromatic, (chirality, h, charge))) = parsed {
            let mut label = if aromatic {
                AtomLabel::aromatic(element)
            } else {
                AtomLabel::element(element)
            };
            label.isotope = isotope;
            label.explicit_h = Some(h);
            label.charge = charge;
            return Some(AtomToken {
                label,
                chirality,
                bracket: true,
            });
        }
    }
    None
}

fn bracket_symbol(sym: &str) -> Option<(Element, bool)> {
    match sym {
        "c" | "n" | "o" | "p" | "s" | "b" | "se" | "as" => {
            let mut upper = sym.to_string();
            upper[..1].make_ascii_uppercase();
            Element::from_symbol(&upper).map(|e| (e, true))
        }
        _ if sym.as_bytes()[0].is_ascii_uppercase() => Element::from_symbol(sym).map(|e| (e, false)),
        _ => None,
    }
}

/// chiral? hcount? charge? class?
fn bracket_tail(s: &str) -> Option<(Option<Chirality>, u8, i8)> {
    let b = s.as_bytes();
    let mut i = 0;
    let chirality = if b[i..].starts_with(b"@@") {
        i += 2;
        Some(Chirality::Cw)
    } else if b[i..].starts_with(b"@") {
        i += 1;
        Some(Chirality::Ccw)
    } else {
        None
    };
    let mut h = 0u8;
    if b.get(i) == Some(&b'H') {
        i += 1;
        h = 1;
        if let Some(d) = b.get(i).filter(|d| d.is_ascii_digit()) {
            h = d - b'0';
            i += 1;
        }
    }
    let mut charge = 0i8;
    if let Some(&sign) = b.get(i).filter(|c| **c == b'+' || **c == b'-') {
        let unit: i8 = if sign == b'+' { 1 } else { -1 };
        i += 1;
        charge = unit;
        if let Some(d) = b.get(i).filter(|d| d.is_ascii_digit()) {
            charge = unit * (d - b'0') as i8;
            i += 1;
            if b.get(i).is_some_and(u8::is_ascii_digit) {
                return None;
            }
        } else {
            while b.get(i) == Some(&sign) {
                charge += unit;
                i += 1;
            }
        }
    }
    if b.get(i) == Some(&b':') {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return None;
        }
    }
    (i == b.len()).then_some((chirality, h, charge))
}
