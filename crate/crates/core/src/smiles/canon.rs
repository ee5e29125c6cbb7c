use thiserror::Error;

use crate::molgraph::{LabelKind, MolGraph};
use crate::rings::ring_atoms;

use super::parser::parse_with;
use super::writer::{write_ranked, WriteError};
use super::{ParseOptions, SmilesError};

/// Upper bound on explored tie-break leaves. Past it the search keeps the best leaf found so
/// far, so only extremely symmetric inputs can lose exactness.
const LEAF_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanonError {
    #[error(transparent)]
    Parse(#[from] SmilesError),
    #[error(transparent)]
    Write(#[from] WriteError),
}

/// Parses `text` leniently, drops cis/trans marks and writes the canonical form.
pub fn canonicalize(text: &str) -> Result<String, CanonError> {
    canonicalize_with(text, &ParseOptions::default())
}

pub fn canonicalize_with(text: &str, opts: &ParseOptions) -> Result<String, CanonError> {
    let g = parse_with(text, opts)?;
    Ok(canonical_smiles(&g)?)
}

/// Canonical string for a graph. Directional bond marks are ignored.
pub fn canonical_smiles(g: &MolGraph) -> Result<String, WriteError> {
    Ok(search(g)?.0)
}

/// A unique rank per atom such that writing the graph in rank order gives its canonical
/// string.
pub fn canonical_ranks(g: &MolGraph) -> Result<Vec<usize>, WriteError> {
    Ok(search(g)?.1)
}

/// Atom invariant used to seed refinement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Invariant {
    kind: LabelKind,
    atomic_number: u8,
    text: String,
    aromatic: bool,
    charge: i8,
    isotope: u16,
    degree: usize,
    hydrogens: u8,
    in_ring: bool,
}

struct Search {
    graph: MolGraph,
    /// Neighbor lists with a bond code per entry.
    nbrs: Vec<Vec<(usize, u8)>>,
    best: Option<(String, Vec<usize>)>,
    leaves: usize,
}

fn search(g: &MolGraph) -> Result<(String, Vec<usize>), WriteError> {
    let mut graph = g.clone();
    graph.clear_bond_marks();
    let n = graph.atom_count();
    if n == 0 {
        return Ok((String::new(), Vec::new()));
    }
    let ring = ring_atoms(&graph);
    let keys: Vec<Invariant> = (0..n)
        .map(|i| {
            let label = &graph.atom(i).label;
            Invariant {
                kind: label.kind,
                atomic_number: label.element.map_or(0, |e| e.atomic_number()),
                text: if label.is_pseudo() {
                    label.text.clone()
                } else {
                    String::new()
                },
                aromatic: label.aromatic,
                charge: label.charge,
                isotope: label.isotope.unwrap_or(0),
                degree: graph.degree(i),
                hydrogens: graph.hydrogen_count(i),
                in_ring: ring[i],
            }
        })
        .collect();
    let nbrs = (0..n)
        .map(|i| {
            graph
                .neighbors(i)
                .map(|(v, b)| (v, graph.bond(b).kind.connectivity() as u8))
                .collect()
        })
        .collect();
    let mut s = Search {
        graph,
        nbrs,
        best: None,
        leaves: 0,
    };
    let ranks = s.refine(ranks_from_keys(&keys));
    s.descend(ranks)?;
    Ok(s.best.expect("at least one leaf is visited"))
}

/// Rank of each item = number of items with a strictly smaller key.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    for k in 1..order.len() {
        let (prev, cur) = (order[k - 1], order[k]);
        ranks[cur] = if keys[cur] == keys[prev] { ranks[prev] } else { k };
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    let mut seen = vec![false; ranks.len()];
    ranks.iter().filter(|&&r| !std::mem::replace(&mut seen[r], true)).count()
}

impl Search {
    /// Iterates neighbor-multiset refinement until the partition stops splitting.
    fn refine(&self, mut ranks: Vec<usize>) -> Vec<usize> {
        let mut classes = class_count(&ranks);
        loop {
            let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..ranks.len())
                .map(|i| {
                    let mut env: Vec<(usize, u8)> =
                        self.nbrs[i].iter().map(|&(v, code)| (ranks[v], code)).collect();
                    env.sort_unstable();
                    (ranks[i], env)
                })
                .collect();
            let next = ranks_from_keys(&keys);
            let next_classes = class_count(&next);
            if next_classes == classes {
                return ranks;
            }
            ranks = next;
            classes = next_classes;
        }
    }

    /// Individualizes each member of the first tied cell in turn and keeps the
    /// lexicographically smallest string over all discrete leaves.
    fn descend(&mut self, ranks: Vec<usize>) -> Result<(), WriteError> {
        let n = ranks.len();
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let Some(cell_rank) = (0..n).find(|&r| counts[r] > 1) else {
            let s = write_ranked(&self.graph, &ranks)?;
            self.leaves += 1;
            if self.best.as_ref().is_none_or(|(b, _)| s < *b) {
                self.best = Some((s, ranks));
            }
            return Ok(());
        };
        let cell: Vec<usize> = (0..n).filter(|&i| ranks[i] == cell_rank).collect();

        // Terminal twins on the same non-stereo parent are interchangeable.
        let mut candidates = Vec::new();
        let mut parents_seen = Vec::new();
        for &a in &cell {
            if self.graph.degree(a) == 1 {
                let parent = self.nbrs[a][0].0;
                if self.graph.atom(parent).stereo.is_none() {
                    if parents_seen.contains(&parent) {
                        continue;
                    }
                    parents_seen.push(parent);
                }
            }
            candidates.push(a);
        }

        for a in candidates {
            if self.leaves >= LEAF_LIMIT && self.best.is_some() {
                break;
            }
            let mut next = ranks.clone();
            for &x in &cell {
                if x != a {
                    next[x] = cell_rank + 1;
                }
            }
            let next = self.refine(next);
            self.descend(next)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse;

    fn canon(s: &str) -> String {
        canonicalize(s).unwrap()
    }

    #[test]
    fn permutation_equivalent_inputs() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("N[C@@H](C)C(=O)O"), canon("C[C@H](N)C(=O)O"));
        assert_ne!(canon("N[C@@H](C)C(=O)O"), canon("N[C@H](C)C(=O)O"));
        assert_eq!(canon("F/C=C/F"), canon("F/C=C\\F"));
        assert_eq!(canon("c1ccccc1C"), canon("Cc1ccccc1"));
        assert_ne!(canon("CCO"), canon("CCN"));
    }

    #[test]
    fn idempotent() {
        for s in ["CC(=O)Oc1ccccc1C(=O)O", "C[C@H](N)C(=O)O", "C1CC2CCC1CC2", "[Na+].[Cl-]"] {
            let once = canon(s);
            assert_eq!(canon(&once), once);
        }
    }

    #[test]
    fn ranks_are_a_permutation() {
        let g = parse("CC(C)(C)c1ccc(O)cc1").unwrap();
        let mut r = canonical_ranks(&g).unwrap();
        r.sort();
        assert_eq!(r, (0..g.atom_count()).collect::<Vec<_>>());
    }

    #[test]
    fn ethane_tie_is_broken() {
        let g = parse("CC").unwrap();
        let r = canonical_ranks(&g).unwrap();
        assert_ne!(r[0], r[1]);
        assert_eq!(canonical_smiles(&g).unwrap(), "CC");
    }

    #[test]
    fn meso_and_enantiomers() {
        // meso-tartaric acid written two ways
        assert_eq!(
            canon("O[C@H](C(=O)O)[C@@H](O)C(=O)O"),
            canon("O[C@@H](C(=O)O)[C@H](O)C(=O)O")
        );
        // L- and D-tartaric acid differ
        assert_ne!(
            canon("O[C@H](C(=O)O)[C@H](O)C(=O)O"),
            canon("O[C@@H](C(=O)O)[C@@H](O)C(=O)O")
        );
    }
}
