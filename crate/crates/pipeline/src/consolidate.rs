//! Graph construction from a prediction: decode atoms, resolve bonds, re-derive parity from
//! wedges, expand pseudo-atoms and emit SMILES.

use thiserror::Error;

use skelgraph_core::augment::{expand, ExpandError, RuleTable};
use skelgraph_core::chirality::overwrite_all;
use skelgraph_core::codec::{decode, Binning, CodecError};
use skelgraph_core::molgraph::ValenceViolation;
use skelgraph_core::smiles::{canonical_smiles, write, WriteError};
use skelgraph_core::MolGraph;

use crate::prediction::Prediction;

#[derive(Debug, Clone, Error)]
pub enum ConsolidateError {
    #[error("malformed atom sequence: {0}")]
    Malformed(#[from] CodecError),
    #[error("bond matrix has {matrix} atoms but the sequence decodes to {atoms}")]
    Dimension { atoms: usize, matrix: usize },
    #[error("graph construction failed: {reason}")]
    Graph { reason: String, partial: Box<MolGraph> },
    #[error("expansion failed: {source}")]
    Expansion {
        source: ExpandError,
        partial: Box<MolGraph>,
    },
    #[error("SMILES output failed: {source}")]
    Write { source: WriteError, partial: Box<MolGraph> },
}

impl ConsolidateError {
    /// The graph as far as it got, for diagnostics.
    pub fn partial(&self) -> Option<&MolGraph> {
        match self {
            ConsolidateError::Graph { partial, .. }
            | ConsolidateError::Expansion { partial, .. }
            | ConsolidateError::Write { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consolidated {
    /// The predicted graph before expansion, atoms in sequence order, parities from wedges.
    pub pseudo_graph: MolGraph,
    /// After expansion of abbreviations and R-groups.
    pub graph: MolGraph,
    pub smiles: String,
    pub canonical_smiles: String,
    pub valence_violations: Vec<ValenceViolation>,
    /// Stereocenters that could not be decided from the drawing.
    pub stereo_warnings: Vec<String>,
}

/// Builds the molecule a prediction describes. Pure: equal inputs give equal outputs.
pub fn consolidate(pred: &Prediction, rules: &RuleTable, binning: Binning) -> Result<Consolidated, ConsolidateError> {
    let decoded = decode(&pred.atom_seq, binning, &rules.parse_options())?;
    let m = pred.bond_matrix.size();
    if decoded.atoms.len() != m {
        return Err(ConsolidateError::Dimension {
            atoms: decoded.atoms.len(),
            matrix: m,
        });
    }
    let mut g = MolGraph::new();
    for a in &decoded.atoms {
        if let Err(e) = g.add_atom(a.label.clone(), Some(a.coords)) {
            return Err(ConsolidateError::Graph {
                reason: e.to_string(),
                partial: Box::new(g),
            });
        }
    }
    for (i, j, kind) in pred.bond_matrix.resolve() {
        if let Err(e) = g.add_bond(i, j, kind) {
            return Err(ConsolidateError::Graph {
                reason: e.to_string(),
                partial: Box::new(g),
            });
        }
    }
    let stereo_warnings = overwrite_all(&mut g);
    let expanded = match expand(&g, rules) {
        Ok(x) => x,
        Err(source) => {
            return Err(ConsolidateError::Expansion {
                source,
                partial: Box::new(g),
            })
        }
    };
    let text = write(&expanded).and_then(|s| Ok((s, canonical_smiles(&expanded)?)));
    let (smiles, canonical) = match text {
        Ok(t) => t,
        Err(source) => {
            return Err(ConsolidateError::Write {
                source,
                partial: Box::new(expanded),
            })
        }
    };
    Ok(Consolidated {
        valence_violations: expanded.validate_valence(),
        pseudo_graph: g,
        graph: expanded,
        smiles,
        canonical_smiles: canonical,
        stereo_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::{BondMatrix, WirePrediction};
    use skelgraph_core::codec::AtomSeq;
    use skelgraph_core::smiles::canonicalize;
    use skelgraph_core::BondType;

    fn seq(atoms: &[(&str, u32, u32)]) -> AtomSeq {
        let mut t = vec!["<bos>".to_string()];
        for (l, x, y) in atoms {
            t.push(l.to_string());
            t.push(format!("<x{x}>"));
            t.push(format!("<y{y}>"));
        }
        t.push("<eos>".into());
        AtomSeq::from_texts(&t)
    }

    #[test]
    fn ethanol_with_abbreviation() {
        let rules = RuleTable::builtin();
        let mut m = BondMatrix::new(2);
        m.set_bond(0, 1, Some(BondType::Single), 1.0).unwrap();
        let p = Prediction::new(seq(&[("[Et]", 10, 10), ("O", 20, 10)]), m).unwrap();
        let c = consolidate(&p, &rules, Binning::default()).unwrap();
        assert_eq!(c.canonical_smiles, canonicalize("CCO").unwrap());
        assert!(c.valence_violations.is_empty());
        assert_eq!(consolidate(&p, &rules, Binning::default()).unwrap(), c);
    }

    #[test]
    fn rgroups_become_wildcards() {
        let rules = RuleTable::builtin();
        let mut m = BondMatrix::new(2);
        m.set_bond(0, 1, Some(BondType::Single), 1.0).unwrap();
        let p = Prediction::new(seq(&[("[R1]", 10, 10), ("O", 20, 10)]), m).unwrap();
        let c = consolidate(&p, &rules, Binning::default()).unwrap();
        assert_eq!(c.smiles, "*O");
    }

    #[test]
    fn wedge_sets_parity_from_geometry() {
        // Alanine drawn with N up-left, CH3 right, COOH down-left, wedge to CH3.
        let rules = RuleTable::builtin();
        let atoms = [("C", 32, 32), ("N", 24, 24), ("C", 44, 32), ("C", 24, 40), ("O", 16, 40), ("O", 24, 50)];
        let mut m = BondMatrix::new(6);
        m.set_bond(0, 1, Some(BondType::Single), 1.0).unwrap();
        m.set_bond(0, 2, Some(BondType::SolidWedge), 0.5).unwrap();
        m.set_bond(0, 3, Some(BondType::Single), 1.0).unwrap();
        m.set_bond(3, 4, Some(BondType::Double), 1.0).unwrap();
        m.set_bond(3, 5, Some(BondType::Single), 1.0).unwrap();
        let solid = consolidate(&Prediction::new(seq(&atoms), m.clone()).unwrap(), &rules, Binning::default()).unwrap();
        m.set_bond(0, 2, Some(BondType::DashedWedge), 0.5).unwrap();
        let dashed = consolidate(&Prediction::new(seq(&atoms), m).unwrap(), &rules, Binning::default()).unwrap();
        assert!(solid.canonical_smiles.contains('@'));
        assert_ne!(solid.canonical_smiles, dashed.canonical_smiles);
        // Token chirality is ignored; only geometry counts.
        let mut relabeled = seq(&atoms);
        relabeled.tokens[1] = skelgraph_core::codec::SeqToken::Lexeme("[C@@H]".into());
        let mut m2 = BondMatrix::new(6);
        for (i, j, k) in solid.pseudo_graph.bonds().iter().map(|b| (b.begin, b.end, b.kind)) {
            m2.set_bond(i, j, Some(k), 0.5).unwrap();
        }
        let again = consolidate(&Prediction::new(relabeled, m2).unwrap(), &rules, Binning::default()).unwrap();
        assert_eq!(again.canonical_smiles, solid.canonical_smiles);
    }

    #[test]
    fn errors_carry_partial_graph() {
        let rules = RuleTable::builtin();
        let p = Prediction::new(seq(&[("[Nope]", 1, 1)]), BondMatrix::new(1)).unwrap();
        let e = consolidate(&p, &rules, Binning::default()).unwrap_err();
        assert!(matches!(e, ConsolidateError::Expansion { .. }));
        assert_eq!(e.partial().unwrap().atom_count(), 1);

        let bad = AtomSeq::from_texts(&["<bos>", "C", "<x1>"]);
        let e = consolidate(&Prediction { atom_seq: bad, bond_matrix: BondMatrix::new(1) }, &rules, Binning::default());
        assert!(matches!(e, Err(ConsolidateError::Malformed(_))));
    }

    #[test]
    fn valence_is_reported_not_repaired() {
        let rules = RuleTable::builtin();
        let wire = r#"{"atoms":[{"label":"C","x_bin":1,"y_bin":1},{"label":"F","x_bin":2,"y_bin":1},{"label":"C","x_bin":3,"y_bin":1}],
            "bonds":[{"i":0,"j":1,"type":"single","score":1},{"i":1,"j":2,"type":"single","score":1}]}"#;
        let p = WirePrediction::from_json(wire).unwrap().validate(Binning::default(), &rules.parse_options(), None).unwrap();
        let c = consolidate(&p, &rules, Binning::default()).unwrap();
        assert_eq!(c.smiles, "CFC");
        assert_eq!(c.valence_violations.len(), 1);
    }
}
