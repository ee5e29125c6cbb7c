use thiserror::Error;

use crate::molgraph::{BondMark, BondType, Chirality, LabelKind, MolGraph, NeighborRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WriteError {
    #[error("more than 99 ring closures open at once")]
    TooManyRingClosures,
}

/// One emitted lexeme; `atom` is set for atom lexemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenToken {
    pub text: String,
    pub atom: Option<usize>,
}

/// Writes the graph in atom-index order.
pub fn write(g: &MolGraph) -> Result<String, WriteError> {
    Ok(concat(&write_tokens(g, None)?))
}

/// Writes the graph with traversal driven by `ranks` (lower rank visited first).
pub fn write_ranked(g: &MolGraph, ranks: &[usize]) -> Result<String, WriteError> {
    Ok(concat(&write_tokens(g, Some(ranks))?))
}

fn concat(tokens: &[WrittenToken]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

/// Depth-first writer. Each component starts at its lowest-ranked atom; neighbors are
/// visited in ascending rank; the last child continues the main chain and earlier children
/// become parenthesized branches; non-tree bonds become ring-closure digits.
pub fn write_tokens(g: &MolGraph, ranks: Option<&[usize]>) -> Result<Vec<WrittenToken>, WriteError> {
    let n = g.atom_count();
    let rank = |i: usize| ranks.map_or(i, |r| r[i]);

    let mut sorted_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|u| {
            let mut v: Vec<(usize, usize)> = g.neighbors(u).collect();
            v.sort_by_key(|&(a, _)| rank(a));
            v
        })
        .collect();

    // Pass 1: spanning forest and ring-closure bonds.
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut ring_bonds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut is_closure = vec![false; g.bond_count()];
    let mut roots = Vec::new();

    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&i| rank(i));
    for start in starts {
        if visited[start] {
            continue;
        }
        roots.push(start);
        visited[start] = true;
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(start, None, 0)];
        while let Some(top) = stack.last_mut() {
            let (u, parent_bond, cursor) = (top.0, top.1, top.2);
            if cursor == sorted_nbrs[u].len() {
                stack.pop();
                continue;
            }
            top.2 += 1;
            let (v, b) = sorted_nbrs[u][cursor];
            if Some(b) == parent_bond {
                continue;
            }
            if visited[v] {
                if !is_closure[b] {
                    is_closure[b] = true;
                    ring_bonds[u].push((v, b));
                    ring_bonds[v].push((u, b));
                }
            } else {
                visited[v] = true;
                children[u].push((v, b));
                stack.push((v, Some(b), 0));
            }
        }
    }
    sorted_nbrs.clear();

    let mut w = Writer {
        g,
        rank: &rank,
        children,
        ring_bonds,
        emitted: vec![usize::MAX; n],
        counter: 0,
        digit_of_bond: vec![0; g.bond_count()],
        in_use: [false; 100],
        out: Vec::new(),
    };
    for (k, &root) in roots.iter().enumerate() {
        if k > 0 {
            w.push(".", None);
        }
        w.emit(root, None)?;
    }
    Ok(w.out)
}

struct Writer<'a, R: Fn(usize) -> usize> {
    g: &'a MolGraph,
    rank: &'a R,
    children: Vec<Vec<(usize, usize)>>,
    ring_bonds: Vec<Vec<(usize, usize)>>,
    emitted: Vec<usize>,
    counter: usize,
    digit_of_bond: Vec<u8>,
    in_use: [bool; 100],
    out: Vec<WrittenToken>,
}

impl<R: Fn(usize) -> usize> Writer<'_, R> {
    fn push(&mut self, text: impl Into<String>, atom: Option<usize>) {
        self.out.push(WrittenToken {
            text: text.into(),
            atom,
        });
    }

    fn emit(&mut self, u: usize, parent: Option<(usize, usize)>) -> Result<(), WriteError> {
        if let Some((p, b)) = parent {
            let sym = bond_symbol(self.g, b, p, u);
            if !sym.is_empty() {
                self.push(sym, None);
            }
        }
        self.emitted[u] = self.counter;
        self.counter += 1;

        // Ring closures at this atom: closings (partner already written) first, in the
        // order their digits were opened, then openings by partner rank.
        let mut closings = Vec::new();
        let mut openings = Vec::new();
        for &(v, b) in &self.ring_bonds[u] {
            if self.emitted[v] != usize::MAX && v != u {
                closings.push((v, b));
            } else {
                openings.push((v, b));
            }
        }
        closings.sort_by_key(|&(v, _)| self.emitted[v]);
        openings.sort_by_key(|&(v, _)| (self.rank)(v));

        let mut out_order: Vec<NeighborRef> = Vec::with_capacity(4);
        if let Some((p, _)) = parent {
            out_order.push(NeighborRef::Atom(p));
        }
        let stereo = self.g.atom(u).stereo.as_ref();
        if stereo.is_some_and(|s| s.neighbors.contains(&NeighborRef::ImplicitH)) {
            out_order.push(NeighborRef::ImplicitH);
        }
        for &(v, _) in closings.iter().chain(&openings) {
            out_order.push(NeighborRef::Atom(v));
        }
        let children = std::mem::take(&mut self.children[u]);
        for &(v, _) in &children {
            out_order.push(NeighborRef::Atom(v));
        }
        let chirality = stereo.and_then(|s| s.chirality_for_order(&out_order));
        self.push(atom_text(self.g, u, chirality), Some(u));

        let mut freed = Vec::new();
        for &(_, b) in &closings {
            let d = self.digit_of_bond[b];
            self.push(digit_text(d), None);
            freed.push(d);
        }
        for &(v, b) in &openings {
            let d = (1..100u8)
                .find(|&d| !self.in_use[d as usize])
                .ok_or(WriteError::TooManyRingClosures)?;
            self.in_use[d as usize] = true;
            self.digit_of_bond[b] = d;
            let sym = bond_symbol(self.g, b, u, v);
            self.push(format!("{sym}{}", digit_text(d)), None);
        }
        for d in freed {
            self.in_use[d as usize] = false;
        }

        let last = children.len().saturating_sub(1);
        for (k, &(v, b)) in children.iter().enumerate() {
            if k < last {
                self.push("(", None);
                self.emit(v, Some((u, b)))?;
                self.push(")", None);
            } else {
                self.emit(v, Some((u, b)))?;
            }
        }
        Ok(())
    }
}

fn digit_text(d: u8) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d}")
    }
}

/// Bond lexeme for bond `b` written from `from` to `to`.
fn bond_symbol(g: &MolGraph, b: usize, from: usize, to: usize) -> &'static str {
    let bond = g.bond(b);
    let both_aromatic = g.atom(from).label.aromatic && g.atom(to).label.aromatic;
    match bond.kind {
        BondType::Double => "=",
        BondType::Triple => "#",
        BondType::Aromatic => {
            if both_aromatic {
                ""
            } else {
                ":"
            }
        }
        BondType::Single | BondType::SolidWedge | BondType::DashedWedge => {
            let mark = bond
                .mark
                .map(|m| if bond.begin == from { m } else { m.reversed() });
            match mark {
                Some(BondMark::Up) => "/",
                Some(BondMark::Down) => "\\",
                None if both_aromatic => "-",
                None => "",
            }
        }
    }
}

/// Atom lexeme: organic-subset form when nothing needs a bracket, bracket form otherwise.
pub(crate) fn atom_text(g: &MolGraph, u: usize, chirality: Option<Chirality>) -> String {
    let label = &g.atom(u).label;
    match label.kind {
        LabelKind::Wildcard => return "*".to_string(),
        LabelKind::Abbreviation | LabelKind::RGroup => return format!("[{}]", label.text),
        LabelKind::Element => {}
    }
    let element = label.element.expect("element label carries an element");
    let hydrogens = g.hydrogen_count(u);
    let organic = element.is_organic_subset()
        && (!label.aromatic || matches!(element.symbol(), "B" | "C" | "N" | "O" | "P" | "S"))
        && label.charge == 0
        && label.isotope.is_none()
        && chirality.is_none()
        && label.explicit_h.is_none_or(|h| h == g.valence_hydrogens(u));
    let symbol = label.symbol();
    if organic {
        return symbol;
    }
    let mut s = String::from("[");
    if let Some(iso) = label.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&symbol);
    if let Some(c) = chirality {
        s.push_str(c.symbol());
    }
    match hydrogens {
        0 => {}
        1 => s.push('H'),
        h => {
            s.push('H');
            s.push_str(&h.to_string());
        }
    }
    match label.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::AtomLabel;
    use crate::smiles::parse;

    fn roundtrip(s: &str) -> String {
        write(&parse(s).unwrap()).unwrap()
    }

    #[test]
    fn simple_forms() {
        let mut g = MolGraph::new();
        g.add_atom(AtomLabel::organic("C"), None).unwrap();
        assert_eq!(write(&g).unwrap(), "C");
        assert_eq!(roundtrip("CC(=O)O"), "CC(=O)O");
        assert_eq!(roundtrip("C1CCCCC1"), "C1CCCCC1");
        assert_eq!(roundtrip("c1ccccc1"), "c1ccccc1");
        assert_eq!(roundtrip("CC.O"), "CC.O");
        assert_eq!(roundtrip("[NH4+]"), "[NH4+]");
        assert_eq!(roundtrip("[13CH4]"), "[13CH4]");
        assert_eq!(roundtrip("[CH4]"), "C");
        assert_eq!(roundtrip("C[Me]"), "C[Me]");
        assert_eq!(roundtrip("c1ccccc1-c1ccccc1"), "c1ccccc1-c1ccccc1");
        assert_eq!(roundtrip("c1cc[nH]c1"), "c1cc[nH]c1");
        assert_eq!(roundtrip("F/C=C/F"), "F/C=C/F");
    }

    #[test]
    fn stereo_is_rederived() {
        assert_eq!(roundtrip("N[C@@H](C)C(=O)O"), "N[C@@H](C)C(=O)O");
        let g = parse("N[C@@H](C)C(=O)O").unwrap();
        // Starting at the methyl carbon changes the neighbor order around the center.
        let s = write_ranked(&g, &[1, 2, 0, 3, 4, 5]).unwrap();
        assert_eq!(s, "C[C@H](N)C(=O)O");
    }

    #[test]
    fn ring_bond_symbols_and_digit_reuse() {
        assert_eq!(roundtrip("C=1CCCCC=1"), "C=1CCCCC1");
        assert_eq!(roundtrip("C1CC1C1CC1"), "C1CC1C1CC1");
    }

    #[test]
    fn too_many_rings() {
        // A center bonded to 100 ring members forces 100 open digits at once.
        let mut g = MolGraph::new();
        let hub = g.add_atom(AtomLabel::organic("C"), None).unwrap();
        let first = g.add_atom(AtomLabel::organic("C"), None).unwrap();
        g.add_bond(hub, first, BondType::Single).unwrap();
        let mut prev = first;
        for _ in 0..101 {
            let a = g.add_atom(AtomLabel::organic("C"), None).unwrap();
            g.add_bond(prev, a, BondType::Single).unwrap();
            g.add_bond(hub, a, BondType::Single).unwrap();
            prev = a;
        }
        assert_eq!(write(&g), Err(WriteError::TooManyRingClosures));
    }
}
