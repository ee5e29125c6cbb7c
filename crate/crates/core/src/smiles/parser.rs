use std::collections::BTreeMap;

use crate::molgraph::{BondMark, BondType, Chirality, MolGraph, NeighborRef};

use super::lexer::{tokenize_with, BondSymbol, SmilesToken, TokenKind};
use super::{ParseOptions, SmilesError};

/// Parses with lenient defaults: pseudo-atoms allowed, invalid stereo marks dropped.
pub fn parse(text: &str) -> Result<MolGraph, SmilesError> {
    parse_with(text, &ParseOptions::default())
}

const PLACEHOLDER: NeighborRef = NeighborRef::Atom(usize::MAX);

struct OpenRing {
    atom: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
    /// Position of the placeholder in the opening atom's neighbor order.
    slot: usize,
}

struct AtomState {
    offset: usize,
    chirality: Option<Chirality>,
    has_preceding: bool,
    order: Vec<NeighborRef>,
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<MolGraph, SmilesError> {
    let tokens = tokenize_with(text, opts)?;
    if tokens.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        graph: MolGraph::new(),
        states: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    for (idx, tok) in tokens.iter().enumerate() {
        p.step(tok, tokens.get(idx + 1))?;
    }
    if let Some((_, offset)) = p.pending {
        return Err(SmilesError::DanglingBond(offset));
    }
    if let Some(&(_, offset)) = p.branches.last() {
        return Err(SmilesError::UnbalancedParenthesis(offset));
    }
    if let Some((&digit, ring)) = p.rings.iter().next() {
        return Err(SmilesError::UnmatchedRingDigit {
            offset: ring.offset,
            digit,
        });
    }
    p.finish(opts)
}

struct Parser {
    graph: MolGraph,
    states: Vec<AtomState>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
    branches: Vec<(Option<usize>, usize)>,
    rings: BTreeMap<u8, OpenRing>,
}

impl Parser {
    fn step(&mut self, tok: &SmilesToken, next: Option<&SmilesToken>) -> Result<(), SmilesError> {
        let offset = tok.offset;
        match &tok.kind {
            TokenKind::Atom(atom) => {
                let idx = self
                    .graph
                    .add_atom(atom.label.clone(), None)
                    .map_err(|source| SmilesError::Graph { offset, source })?;
                let mut state = AtomState {
                    offset,
                    chirality: atom.chirality,
                    has_preceding: false,
                    order: Vec::new(),
                };
                if let Some(prev) = self.prev {
                    let symbol = self.pending.take().map(|(s, _)| s);
                    self.bond(prev, idx, symbol, offset)?;
                    self.states[prev].order.push(NeighborRef::Atom(idx));
                    state.order.push(NeighborRef::Atom(prev));
                    state.has_preceding = true;
                } else if let Some((_, o)) = self.pending {
                    return Err(SmilesError::DanglingBond(o));
                }
                self.states.push(state);
                self.prev = Some(idx);
            }
            TokenKind::Bond(symbol) => {
                if self.prev.is_none() || self.pending.is_some() {
                    return Err(SmilesError::DanglingBond(offset));
                }
                self.pending = Some((*symbol, offset));
            }
            TokenKind::OpenParen => {
                if self.prev.is_none() || self.pending.is_some() {
                    return Err(SmilesError::MissingAtom(offset));
                }
                if matches!(next.map(|t| &t.kind), Some(TokenKind::CloseParen)) {
                    return Err(SmilesError::EmptyBranch(offset));
                }
                self.branches.push((self.prev, offset));
            }
            TokenKind::CloseParen => {
                if let Some((_, o)) = self.pending {
                    return Err(SmilesError::DanglingBond(o));
                }
                let (restore, _) = self
                    .branches
                    .pop()
                    .ok_or(SmilesError::UnbalancedParenthesis(offset))?;
                self.prev = restore;
            }
            TokenKind::Dot => {
                if let Some((_, o)) = self.pending {
                    return Err(SmilesError::DanglingBond(o));
                }
                if self.prev.is_none() {
                    return Err(SmilesError::MissingAtom(offset));
                }
                self.prev = None;
            }
            TokenKind::RingDigit(digit) => {
                let atom = self.prev.ok_or(SmilesError::MissingAtom(offset))?;
                let symbol = self.pending.take().map(|(s, _)| s);
                if let Some(open) = self.rings.remove(digit) {
                    let symbol = match (open.symbol, symbol) {
                        (Some(a), Some(b)) if !compatible(a, b) => {
                            return Err(SmilesError::ConflictingRingBond {
                                offset,
                                digit: *digit,
                            })
                        }
                        (Some(a), _) => Some(a),
                        (None, b) => b.map(reverse_direction),
                    };
                    self.bond(open.atom, atom, symbol, offset)?;
                    self.states[open.atom].order[open.slot] = NeighborRef::Atom(atom);
                    self.states[atom].order.push(NeighborRef::Atom(open.atom));
                } else {
                    let slot = self.states[atom].order.len();
                    self.states[atom].order.push(PLACEHOLDER);
                    self.rings.insert(
                        *digit,
                        OpenRing {
                            atom,
                            symbol,
                            offset,
                            slot,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    fn bond(
        &mut self,
        a: usize,
        b: usize,
        symbol: Option<BondSymbol>,
        offset: usize,
    ) -> Result<(), SmilesError> {
        let both_aromatic = self.graph.atom(a).label.aromatic && self.graph.atom(b).label.aromatic;
        let (kind, mark) = match symbol {
            None if both_aromatic => (BondType::Aromatic, None),
            None | Some(BondSymbol::Single) => (BondType::Single, None),
            Some(BondSymbol::Double) => (BondType::Double, None),
            Some(BondSymbol::Triple) => (BondType::Triple, None),
            Some(BondSymbol::Aromatic) => (BondType::Aromatic, None),
            Some(BondSymbol::Up) => (BondType::Single, Some(BondMark::Up)),
            Some(BondSymbol::Down) => (BondType::Single, Some(BondMark::Down)),
        };
        self.graph
            .add_marked_bond(a, b, kind, mark)
            .map(|_| ())
            .map_err(|source| SmilesError::Graph { offset, source })
    }

    fn finish(mut self, opts: &ParseOptions) -> Result<MolGraph, SmilesError> {
        let offsets: Vec<usize> = self.states.iter().map(|s| s.offset).collect();
        for (atom, state) in std::mem::take(&mut self.states).into_iter().enumerate() {
            let Some(chirality) = state.chirality else {
                continue;
            };
            let mut order = state.order;
            if order.len() == 3 {
                let slot = usize::from(state.has_preceding);
                order.insert(slot, NeighborRef::ImplicitH);
            }
            if self.graph.set_stereo(atom, chirality, order).is_err() && opts.strict {
                return Err(SmilesError::InvalidStereo {
                    offset: state.offset,
                    atom,
                });
            }
        }
        if opts.strict {
            if let Some(v) = self.graph.validate_valence().into_iter().next() {
                return Err(SmilesError::Valence {
                    offset: offsets[v.atom],
                    atom: v.atom,
                    symbol: v.symbol,
                });
            }
        }
        Ok(self.graph)
    }
}

/// Ring-closure bond symbols written on both ends must agree; directional marks are
/// compatible when they describe the same direction from the two sides.
fn compatible(open: BondSymbol, close: BondSymbol) -> bool {
    match (open, close) {
        (BondSymbol::Up, BondSymbol::Down) | (BondSymbol::Down, BondSymbol::Up) => true,
        (BondSymbol::Up | BondSymbol::Down, BondSymbol::Single)
        | (BondSymbol::Single, BondSymbol::Up | BondSymbol::Down) => true,
        (a, b) => a == b,
    }
}

/// A mark written at the closing end describes the closing→opening direction.
fn reverse_direction(s: BondSymbol) -> BondSymbol {
    match s {
        BondSymbol::Up => BondSymbol::Down,
        BondSymbol::Down => BondSymbol::Up,
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::molgraph::LabelKind;

    #[test]
    fn cyclohexane_and_carbonyl() {
        let g = parse("C1CCCCC1").unwrap();
        assert_eq!((g.atom_count(), g.bond_count()), (6, 6));
        let g = parse("CC=O").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bond(g.bond_between(1, 2).unwrap()).kind, BondType::Double);
    }

    #[test]
    fn alanine_stereo_order() {
        let g = parse("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(g.atom_count(), 6);
        let stereo = g.atom(1).stereo.as_ref().unwrap();
        assert_eq!(stereo.chirality, Chirality::Cw);
        assert_eq!(
            stereo.neighbors,
            vec![
                NeighborRef::Atom(0),
                NeighborRef::ImplicitH,
                NeighborRef::Atom(2),
                NeighborRef::Atom(3),
            ]
        );
    }

    #[test]
    fn leading_hydrogen_slot_and_ring_order() {
        let g = parse("[C@@H](N)(C)C(=O)O").unwrap();
        assert_eq!(
            g.atom(0).stereo.as_ref().unwrap().neighbors,
            vec![
                NeighborRef::ImplicitH,
                NeighborRef::Atom(1),
                NeighborRef::Atom(2),
                NeighborRef::Atom(3),
            ]
        );
        // The ring bond opened at the stereocenter takes the digit's slot.
        let g = parse("F[C@]1(Cl)CCO1").unwrap();
        assert_eq!(
            g.atom(1).stereo.as_ref().unwrap().neighbors,
            vec![
                NeighborRef::Atom(0),
                NeighborRef::Atom(5),
                NeighborRef::Atom(2),
                NeighborRef::Atom(3),
            ]
        );
    }

    #[test]
    fn invalid_stereo_is_dropped_or_rejected() {
        let g = parse("C[C@H2]C").unwrap();
        assert!(g.atom(1).stereo.is_none());
        assert!(matches!(
            parse_with("C[C@H2]C", &ParseOptions::strict()),
            Err(SmilesError::InvalidStereo { atom: 1, .. })
        ));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse("C1CC"),
            Err(SmilesError::UnmatchedRingDigit { digit: 1, offset: 1 })
        ));
        assert_eq!(parse("CC="), Err(SmilesError::DanglingBond(2)));
        assert_eq!(parse("C(=)C"), Err(SmilesError::DanglingBond(2)));
        assert_eq!(parse("C(C"), Err(SmilesError::UnbalancedParenthesis(1)));
        assert_eq!(parse("CC)"), Err(SmilesError::UnbalancedParenthesis(2)));
        assert_eq!(parse("C()C"), Err(SmilesError::EmptyBranch(1)));
        assert_eq!(parse("(C)"), Err(SmilesError::MissingAtom(0)));
        assert_eq!(parse(""), Err(SmilesError::Empty));
        assert!(matches!(parse("C11"), Err(SmilesError::Graph { .. })));
        assert!(matches!(
            parse("C=1CC#1"),
            Err(SmilesError::ConflictingRingBond { digit: 1, .. })
        ));
    }

    #[test]
    fn aromatic_and_marks() {
        let g = parse("c1ccccc1").unwrap();
        assert!(g.bonds().iter().all(|b| b.kind == BondType::Aromatic));
        assert_eq!(g.hydrogen_count(0), 1);
        let g = parse("F/C=C\\F").unwrap();
        assert_eq!(g.bond(0).mark, Some(BondMark::Up));
        assert_eq!(g.bond(2).mark, Some(BondMark::Down));
        let g = parse("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bond(g.bond_between(5, 6).unwrap()).kind, BondType::Single);
    }

    #[test]
    fn pseudo_and_strict() {
        let g = parse("CC[Me]").unwrap();
        assert_eq!(g.atom(2).label.kind, LabelKind::Abbreviation);
        assert!(parse_with("C(C)(C)(C)(C)C", &ParseOptions::strict()).is_err());
        let g = parse_with("OS(=O)(=O)C", &ParseOptions::strict()).unwrap();
        assert_eq!(g.atom(1).label.element, Some(Element::S));
    }
}
