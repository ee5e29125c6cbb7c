//! The 2D molecular graph: labeled atoms with optional normalized coordinates, typed bonds,
//! and tetrahedral parity stored relative to an explicit neighbor order.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::element::Element;

/// Largest formal charge magnitude accepted on an atom.
pub const MAX_CHARGE: i8 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("coordinates ({x}, {y}) are outside [0, 1)")]
    CoordinateOutOfRange { x: f64, y: f64 },
    #[error("formal charge {0} is outside [-4, 4]")]
    ChargeOutOfRange(i8),
    #[error("atom {0} cannot bond to itself")]
    SelfBond(usize),
    #[error("atoms {0} and {1} are already bonded")]
    DuplicateBond(usize, usize),
    #[error("atom index {0} is out of range")]
    InvalidIndex(usize),
    #[error("atom {0} is a pseudo-atom; {1} is not defined for it")]
    NotApplicable(usize, &'static str),
    #[error("invalid stereo annotation on atom {atom}: {reason}")]
    InvalidStereo { atom: usize, reason: String },
    #[error("atom {0} has no coordinates")]
    MissingCoordinates(usize),
}

/// A normalized image position: x to the right, y downward, both fractions of the image extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn in_unit_square(self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && (0.0..1.0).contains(&self.x)
            && (0.0..1.0).contains(&self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKind {
    Element,
    Abbreviation,
    RGroup,
    Wildcard,
}

/// What an atom node stands for: a real element or one of the pseudo-atom kinds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomLabel {
    pub kind: LabelKind,
    pub element: Option<Element>,
    pub aromatic: bool,
    pub charge: i8,
    pub isotope: Option<u16>,
    /// Hydrogen count written inside brackets. `None` means the count is implied by valence.
    pub explicit_h: Option<u8>,
    /// Display text for pseudo-atoms ("Me", "R1", "*"); the element symbol otherwise.
    pub text: String,
}

impl AtomLabel {
    pub fn element(element: Element) -> Self {
        AtomLabel {
            kind: LabelKind::Element,
            element: Some(element),
            aromatic: false,
            charge: 0,
            isotope: None,
            explicit_h: None,
            text: element.symbol().to_string(),
        }
    }

    /// Organic-subset atom by symbol, e.g. `AtomLabel::organic("Cl")`.
    ///
    /// Panics on an unknown symbol; meant for literals.
    pub fn organic(symbol: &str) -> Self {
        let element = Element::from_symbol(symbol)
            .unwrap_or_else(|| panic!("unknown element symbol {symbol:?}"));
        Self::element(element)
    }

    pub fn aromatic(element: Element) -> Self {
        AtomLabel {
            aromatic: true,
            ..Self::element(element)
        }
    }

    pub fn abbreviation(text: impl Into<String>) -> Self {
        Self::pseudo(LabelKind::Abbreviation, text.into())
    }

    pub fn rgroup(text: impl Into<String>) -> Self {
        Self::pseudo(LabelKind::RGroup, text.into())
    }

    pub fn wildcard() -> Self {
        Self::pseudo(LabelKind::Wildcard, "*".to_string())
    }

    fn pseudo(kind: LabelKind, text: String) -> Self {
        AtomLabel {
            kind,
            element: None,
            aromatic: false,
            charge: 0,
            isotope: None,
            explicit_h: None,
            text,
        }
    }

    pub fn with_charge(mut self, charge: i8) -> Self {
        self.charge = charge;
        self
    }

    pub fn with_isotope(mut self, isotope: u16) -> Self {
        self.isotope = Some(isotope);
        self
    }

    pub fn with_explicit_h(mut self, h: u8) -> Self {
        self.explicit_h = Some(h);
        self
    }

    pub fn is_element(&self) -> bool {
        self.kind == LabelKind::Element
    }

    pub fn is_pseudo(&self) -> bool {
        self.kind != LabelKind::Element
    }

    /// Element symbol as it would appear in SMILES (lowercase when aromatic).
    pub fn symbol(&self) -> String {
        match (self.element, self.aromatic) {
            (Some(e), true) => e.symbol().to_ascii_lowercase(),
            (Some(e), false) => e.symbol().to_string(),
            (None, _) => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chirality {
    /// `@`
    Ccw,
    /// `@@`
    Cw,
}

impl Chirality {
    pub fn flipped(self) -> Self {
        match self {
            Chirality::Ccw => Chirality::Cw,
            Chirality::Cw => Chirality::Ccw,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Chirality::Ccw => "@",
            Chirality::Cw => "@@",
        }
    }
}

/// Tetrahedral parity of an atom, including the unassigned state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    None,
    Ccw,
    Cw,
}

impl Parity {
    pub fn flipped(self) -> Self {
        match self {
            Parity::None => Parity::None,
            Parity::Ccw => Parity::Cw,
            Parity::Cw => Parity::Ccw,
        }
    }
}

impl From<Option<Chirality>> for Parity {
    fn from(c: Option<Chirality>) -> Self {
        match c {
            None => Parity::None,
            Some(Chirality::Ccw) => Parity::Ccw,
            Some(Chirality::Cw) => Parity::Cw,
        }
    }
}

impl From<Parity> for Option<Chirality> {
    fn from(p: Parity) -> Self {
        match p {
            Parity::None => None,
            Parity::Ccw => Some(Chirality::Ccw),
            Parity::Cw => Some(Chirality::Cw),
        }
    }
}

/// One slot in a stereo neighbor order: a bonded atom, or the implicit hydrogen / lone pair
/// that completes a three-connected center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NeighborRef {
    Atom(usize),
    ImplicitH,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stereo {
    pub chirality: Chirality,
    pub neighbors: Vec<NeighborRef>,
}

impl Stereo {
    /// The chirality this center has when its neighbors are listed in `order`.
    ///
    /// Returns `None` if `order` is not a permutation of the stored neighbors.
    pub fn chirality_for_order(&self, order: &[NeighborRef]) -> Option<Chirality> {
        let odd = permutation_is_odd(&self.neighbors, order)?;
        Some(if odd {
            self.chirality.flipped()
        } else {
            self.chirality
        })
    }
}

/// Parity of the permutation taking `from` to `to`; `None` if they hold different elements.
pub fn permutation_is_odd<T: PartialEq>(from: &[T], to: &[T]) -> Option<bool> {
    if from.len() != to.len() {
        return None;
    }
    let mut perm = Vec::with_capacity(from.len());
    for item in to {
        let pos = from.iter().position(|f| f == item)?;
        if perm.contains(&pos) {
            return None;
        }
        perm.push(pos);
    }
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    Some(transpositions % 2 == 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub label: AtomLabel,
    pub coords: Option<Point>,
    pub stereo: Option<Stereo>,
}

impl Atom {
    pub fn parity(&self) -> Parity {
        self.stereo.as_ref().map(|s| s.chirality).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondType {
    Single,
    Double,
    Triple,
    Aromatic,
    SolidWedge,
    DashedWedge,
}

impl BondType {
    pub const ALL: [BondType; 6] = [
        BondType::Single,
        BondType::Double,
        BondType::Triple,
        BondType::Aromatic,
        BondType::SolidWedge,
        BondType::DashedWedge,
    ];

    /// Bond order in half units, so aromatic bonds count 3 (1.5).
    pub fn half_order(self) -> u32 {
        match self {
            BondType::Single | BondType::SolidWedge | BondType::DashedWedge => 2,
            BondType::Double => 4,
            BondType::Triple => 6,
            BondType::Aromatic => 3,
        }
    }

    pub fn is_wedge(self) -> bool {
        matches!(self, BondType::SolidWedge | BondType::DashedWedge)
    }

    /// Wedges collapse to single bonds once stereo has been moved onto atoms.
    pub fn connectivity(self) -> BondType {
        if self.is_wedge() {
            BondType::Single
        } else {
            self
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondType::Single => "single",
            BondType::Double => "double",
            BondType::Triple => "triple",
            BondType::Aromatic => "aromatic",
            BondType::SolidWedge => "solid_wedge",
            BondType::DashedWedge => "dashed_wedge",
        }
    }

    pub fn from_name(name: &str) -> Option<BondType> {
        BondType::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for BondType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Directional `/` or `\` marker, relative to the bond's begin→end direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondMark {
    Up,
    Down,
}

impl BondMark {
    pub fn reversed(self) -> Self {
        match self {
            BondMark::Up => BondMark::Down,
            BondMark::Down => BondMark::Up,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub kind: BondType,
    pub mark: Option<BondMark>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }

    pub fn touches(&self, atom: usize) -> bool {
        self.begin == atom || self.end == atom
    }
}

/// An atom whose bond order sum exceeds what its element allows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValenceViolation {
    pub atom: usize,
    pub symbol: String,
    pub bond_order_sum: u32,
    pub allowed: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, index: usize) -> &Atom {
        &self.atoms[index]
    }

    pub fn atom_mut(&mut self, index: usize) -> &mut Atom {
        &mut self.atoms[index]
    }

    pub fn bond(&self, index: usize) -> &Bond {
        &self.bonds[index]
    }

    /// Appends an atom and returns its index.
    pub fn add_atom(&mut self, label: AtomLabel, coords: Option<Point>) -> Result<usize, GraphError> {
        if label.charge.abs() > MAX_CHARGE {
            return Err(GraphError::ChargeOutOfRange(label.charge));
        }
        if let Some(p) = coords {
            if !p.in_unit_square() {
                return Err(GraphError::CoordinateOutOfRange { x: p.x, y: p.y });
            }
        }
        self.atoms.push(Atom {
            label,
            coords,
            stereo: None,
        });
        self.adjacency.push(Vec::new());
        Ok(self.atoms.len() - 1)
    }

    /// Adds a bond; `begin` is the narrow end for wedge types.
    pub fn add_bond(&mut self, begin: usize, end: usize, kind: BondType) -> Result<usize, GraphError> {
        self.add_marked_bond(begin, end, kind, None)
    }

    pub fn add_marked_bond(
        &mut self,
        begin: usize,
        end: usize,
        kind: BondType,
        mark: Option<BondMark>,
    ) -> Result<usize, GraphError> {
        let n = self.atoms.len();
        if begin >= n {
            return Err(GraphError::InvalidIndex(begin));
        }
        if end >= n {
            return Err(GraphError::InvalidIndex(end));
        }
        if begin == end {
            return Err(GraphError::SelfBond(begin));
        }
        if self.bond_between(begin, end).is_some() {
            return Err(GraphError::DuplicateBond(begin, end));
        }
        let idx = self.bonds.len();
        self.bonds.push(Bond {
            begin,
            end,
            kind,
            mark,
        });
        self.adjacency[begin].push((end, idx));
        self.adjacency[end].push((begin, idx));
        Ok(idx)
    }

    /// `(neighbor, bond index)` pairs in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency[atom].iter().copied()
    }

    pub fn neighbor_atoms(&self, atom: usize) -> Vec<usize> {
        self.adjacency[atom].iter().map(|&(n, _)| n).collect()
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, idx)| idx)
    }

    pub fn set_bond_type(&mut self, bond: usize, kind: BondType) {
        self.bonds[bond].kind = kind;
    }

    /// Reverses a bond's begin/end (used to point a wedge's narrow end at a stereocenter).
    pub fn reverse_bond(&mut self, bond: usize) {
        let b = &mut self.bonds[bond];
        std::mem::swap(&mut b.begin, &mut b.end);
        b.mark = b.mark.map(BondMark::reversed);
    }

    pub fn clear_bond_marks(&mut self) {
        for b in &mut self.bonds {
            b.mark = None;
        }
    }

    /// Sum of bond orders in half units.
    pub fn half_bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].kind.half_order())
            .sum()
    }

    /// Bond order sum. Two or more aromatic bonds contribute one each plus one shared
    /// pi electron, unless an exocyclic double or triple bond already takes it; a lone
    /// aromatic bond counts as one.
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        let (sigma, pi) = self.split_order_sum(atom);
        sigma + pi
    }

    /// (bond order sum without the aromatic pi share, the aromatic pi share).
    fn split_order_sum(&self, atom: usize) -> (u32, u32) {
        let mut aromatic = 0;
        let mut other = 0;
        let mut multiple = false;
        for &(_, b) in &self.adjacency[atom] {
            match self.bonds[b].kind {
                BondType::Aromatic => aromatic += 1,
                kind => {
                    let order = kind.half_order() / 2;
                    multiple |= order > 1;
                    other += order;
                }
            }
        }
        let pi = u32::from(aromatic >= 2 && !multiple);
        (other + aromatic, pi)
    }

    /// Hydrogens implied by valence, or the bracket count when one was given.
    pub fn implicit_hydrogens(&self, atom: usize) -> Result<u8, GraphError> {
        let a = self.atoms.get(atom).ok_or(GraphError::InvalidIndex(atom))?;
        if a.label.is_pseudo() {
            return Err(GraphError::NotApplicable(atom, "implicit hydrogen count"));
        }
        if let Some(h) = a.label.explicit_h {
            return Ok(h);
        }
        Ok(self.valence_hydrogens(atom))
    }

    /// Hydrogen count a bare (unbracketed) atom would receive from the valence model.
    pub fn valence_hydrogens(&self, atom: usize) -> u8 {
        let label = &self.atoms[atom].label;
        let Some(element) = label.element else {
            return 0;
        };
        let Some(base) = element.default_valence() else {
            return 0;
        };
        let valence = element.charged_valence(base, label.charge) as i64;
        (valence - self.bond_order_sum(atom) as i64).max(0) as u8
    }

    /// Hydrogen count for any atom; pseudo-atoms carry none.
    pub fn hydrogen_count(&self, atom: usize) -> u8 {
        self.implicit_hydrogens(atom).unwrap_or(0)
    }

    /// Atoms whose bond order sum (including hydrogens) exceeds their allowed valence.
    /// Pseudo-atoms and elements without a valence model are never reported.
    pub fn validate_valence(&self) -> Vec<ValenceViolation> {
        let mut out = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            let Some(element) = atom.label.element else {
                continue;
            };
            let Some(max) = element.max_valence() else {
                continue;
            };
            let allowed = element.charged_valence(max, atom.label.charge) as u32;
            // The aromatic pi share is left out: in pyrrole- and furan-type rings it is a lone
            // pair rather than a bond.
            let sum = self.split_order_sum(i).0 + atom.label.explicit_h.unwrap_or(0) as u32;
            if sum > allowed {
                out.push(ValenceViolation {
                    atom: i,
                    symbol: atom.label.symbol(),
                    bond_order_sum: sum,
                    allowed,
                });
            }
        }
        out
    }

    /// Neighbor slots a stereo annotation on `atom` must cover.
    pub fn stereo_slots(&self, atom: usize) -> Vec<NeighborRef> {
        let mut slots: Vec<NeighborRef> = self
            .neighbor_atoms(atom)
            .into_iter()
            .map(NeighborRef::Atom)
            .collect();
        if slots.len() == 3 {
            slots.push(NeighborRef::ImplicitH);
        }
        slots
    }

    /// Whether `atom` can carry tetrahedral parity: three or four explicit neighbors and, in the
    /// three-neighbor case, at most one hydrogen filling the fourth slot.
    pub fn can_hold_stereo(&self, atom: usize) -> bool {
        let degree = self.degree(atom);
        let h = self.hydrogen_count(atom);
        (degree == 4 && h == 0) || (degree == 3 && h <= 1)
    }

    pub fn set_stereo(
        &mut self,
        atom: usize,
        chirality: Chirality,
        neighbors: Vec<NeighborRef>,
    ) -> Result<(), GraphError> {
        let stereo = Stereo {
            chirality,
            neighbors,
        };
        self.check_stereo(atom, &stereo)?;
        self.atoms[atom].stereo = Some(stereo);
        Ok(())
    }

    pub fn clear_stereo(&mut self, atom: usize) {
        self.atoms[atom].stereo = None;
    }

    pub fn clear_all_stereo(&mut self) {
        for a in &mut self.atoms {
            a.stereo = None;
        }
    }

    fn check_stereo(&self, atom: usize, stereo: &Stereo) -> Result<(), GraphError> {
        let fail = |reason: &str| GraphError::InvalidStereo {
            atom,
            reason: reason.to_string(),
        };
        if !self.can_hold_stereo(atom) {
            return Err(fail("needs 3 or 4 neighbors counting one implicit hydrogen"));
        }
        let slots = self.stereo_slots(atom);
        if permutation_is_odd(&slots, &stereo.neighbors).is_none() {
            return Err(fail("neighbor order does not match the bonded atoms"));
        }
        Ok(())
    }

    /// Replaces one slot of `atom`'s stereo order, e.g. when a neighbor is swapped for a
    /// pseudo-atom or an implicit hydrogen becomes a real substituent.
    pub fn replace_stereo_ref(&mut self, atom: usize, old: NeighborRef, new: NeighborRef) {
        if let Some(stereo) = self.atoms[atom].stereo.as_mut() {
            for slot in &mut stereo.neighbors {
                if *slot == old {
                    *slot = new;
                }
            }
        }
    }

    /// Removes the given atoms and every bond touching them. Returns the old→new index map.
    /// Stereo annotations referring to a removed atom are dropped.
    pub fn remove_atoms(&mut self, remove: &HashSet<usize>) -> Vec<Option<usize>> {
        let mut map = vec![None; self.atoms.len()];
        let mut next = 0;
        for (i, slot) in map.iter_mut().enumerate() {
            if !remove.contains(&i) {
                *slot = Some(next);
                next += 1;
            }
        }
        let old_atoms = std::mem::take(&mut self.atoms);
        let old_bonds = std::mem::take(&mut self.bonds);
        self.adjacency.clear();
        for (i, mut atom) in old_atoms.into_iter().enumerate() {
            if map[i].is_none() {
                continue;
            }
            if let Some(stereo) = atom.stereo.take() {
                let remapped: Option<Vec<NeighborRef>> = stereo
                    .neighbors
                    .iter()
                    .map(|r| match r {
                        NeighborRef::Atom(a) => map[*a].map(NeighborRef::Atom),
                        NeighborRef::ImplicitH => Some(NeighborRef::ImplicitH),
                    })
                    .collect();
                atom.stereo = remapped.map(|neighbors| Stereo {
                    chirality: stereo.chirality,
                    neighbors,
                });
            }
            self.atoms.push(atom);
            self.adjacency.push(Vec::new());
        }
        for bond in old_bonds {
            if let (Some(b), Some(e)) = (map[bond.begin], map[bond.end]) {
                let idx = self.bonds.len();
                self.adjacency[b].push((e, idx));
                self.adjacency[e].push((b, idx));
                self.bonds.push(Bond {
                    begin: b,
                    end: e,
                    ..bond
                });
            }
        }
        for i in 0..self.atoms.len() {
            if let Some(stereo) = &self.atoms[i].stereo {
                if self.check_stereo(i, stereo).is_err() {
                    self.atoms[i].stereo = None;
                }
            }
        }
        map
    }

    pub fn remove_bond(&mut self, bond: usize) -> Bond {
        let removed = self.bonds.remove(bond);
        self.rebuild_adjacency();
        removed
    }

    fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.atoms.len()];
        for (idx, b) in self.bonds.iter().enumerate() {
            self.adjacency[b.begin].push((b.end, idx));
            self.adjacency[b.end].push((b.begin, idx));
        }
    }

    /// Returns a copy with atom `i` moved to position `perm[i]`. Bond insertion order is
    /// shuffled along with the atoms so adjacency order does not leak the old numbering.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length mismatch");
        let mut atoms: Vec<Option<Atom>> = vec![None; self.atoms.len()];
        for (i, atom) in self.atoms.iter().enumerate() {
            let mut atom = atom.clone();
            if let Some(stereo) = atom.stereo.as_mut() {
                for r in &mut stereo.neighbors {
                    if let NeighborRef::Atom(a) = r {
                        *a = perm[*a];
                    }
                }
            }
            atoms[perm[i]] = Some(atom);
        }
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond {
                begin: perm[b.begin],
                end: perm[b.end],
                ..b.clone()
            })
            .collect();
        bonds.sort_by_key(|b| (b.begin.min(b.end), b.begin.max(b.end)));
        let mut out = MolGraph {
            atoms: atoms.into_iter().map(|a| a.expect("perm is a bijection")).collect(),
            bonds,
            adjacency: Vec::new(),
        };
        out.rebuild_adjacency();
        out
    }

    /// Connected components, each listed in ascending atom order; components are ordered
    /// by their smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let a = comp[i];
                for &(nb, _) in &self.adjacency[a] {
                    if !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn has_coordinates(&self) -> bool {
        !self.atoms.is_empty() && self.atoms.iter().all(|a| a.coords.is_some())
    }

    pub fn set_coords(&mut self, atom: usize, p: Point) -> Result<(), GraphError> {
        if !p.in_unit_square() {
            return Err(GraphError::CoordinateOutOfRange { x: p.x, y: p.y });
        }
        self.atoms[atom].coords = Some(p);
        Ok(())
    }

    pub fn clear_coords(&mut self) {
        for a in &mut self.atoms {
            a.coords = None;
        }
    }

    pub fn replace_label(&mut self, atom: usize, label: AtomLabel) {
        self.atoms[atom].label = label;
    }

    /// Checks every structural invariant of the graph.
    pub fn verify(&self) -> Result<(), GraphError> {
        let n = self.atoms.len();
        let mut pairs = HashSet::new();
        for b in &self.bonds {
            if b.begin >= n {
                return Err(GraphError::InvalidIndex(b.begin));
            }
            if b.end >= n {
                return Err(GraphError::InvalidIndex(b.end));
            }
            if b.begin == b.end {
                return Err(GraphError::SelfBond(b.begin));
            }
            if !pairs.insert((b.begin.min(b.end), b.begin.max(b.end))) {
                return Err(GraphError::DuplicateBond(b.begin, b.end));
            }
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.label.charge.abs() > MAX_CHARGE {
                return Err(GraphError::ChargeOutOfRange(atom.label.charge));
            }
            if let Some(p) = atom.coords {
                if !p.in_unit_square() {
                    return Err(GraphError::CoordinateOutOfRange { x: p.x, y: p.y });
                }
            }
            if let Some(stereo) = &atom.stereo {
                self.check_stereo(i, stereo)?;
            }
        }
        Ok(())
    }

    /// Molecular formula as (symbol, count) pairs including implicit hydrogens, Hill order.
    /// Pseudo-atoms are counted under their display text.
    pub fn formula(&self) -> Vec<(String, usize)> {
        let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
        let mut h = 0usize;
        for (i, atom) in self.atoms.iter().enumerate() {
            let key = match atom.label.element {
                Some(e) => e.symbol().to_string(),
                None => atom.label.text.clone(),
            };
            *counts.entry(key).or_default() += 1;
            h += self.hydrogen_count(i) as usize;
        }
        if h > 0 {
            *counts.entry("H".to_string()).or_default() += h;
        }
        let mut out = Vec::new();
        for first in ["C", "H"] {
            if let Some(c) = counts.remove(first) {
                out.push((first.to_string(), c));
            }
        }
        out.extend(counts);
        out
    }
}
