//! Functional-group abbreviation and R-group augmentation, and the inverse expansion.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::molgraph::{AtomLabel, BondType, LabelKind, MolGraph, NeighborRef, Point};
use crate::smiles::{parse, ParseOptions, RGROUP_LABELS};

/// Environment variable naming a rule-table file to use instead of the built-in table.
pub const RULES_ENV: &str = "SKELGRAPH_RULES";

const BUILTIN_RULES: &str = include_str!("../data/abbreviations.tsv");

/// Default probability of abbreviating matched groups in a molecule.
pub const DEFAULT_ABBREV_PROB: f64 = 0.5;
/// Default probability of adding one R-group to a molecule.
pub const DEFAULT_RGROUP_PROB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("line {line}: expected `abbreviation<TAB>fragment`")]
    Format { line: usize },
    #[error("line {line}: fragment {fragment:?} does not parse: {reason}")]
    Fragment {
        line: usize,
        fragment: String,
        reason: String,
    },
    #[error("line {line}: fragment needs exactly one `*` bonded to exactly one atom")]
    Attachment { line: usize },
    #[error("line {line}: duplicate abbreviation {0:?}", .abbreviation)]
    Duplicate { line: usize, abbreviation: String },
    #[error("line {line}: abbreviation {abbreviation:?} contains reserved characters")]
    Label { line: usize, abbreviation: String },
    #[error("cannot read rule table {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpandError {
    #[error("unknown abbreviation {0:?}")]
    UnknownAbbreviation(String),
}

/// An abbreviation and the fragment it stands for.
#[derive(Debug, Clone)]
pub struct SubstitutionRule {
    pub abbreviation: String,
    pub fragment: String,
    /// Fragment graph including the `*` placeholder for the attachment neighbor.
    template: MolGraph,
    star: usize,
    /// Template atom bonded to `*`.
    attachment: usize,
    pub attachment_bond: BondType,
}

impl SubstitutionRule {
    pub fn new(abbreviation: &str, fragment: &str) -> Result<Self, RuleError> {
        Self::at_line(abbreviation, fragment, 0)
    }

    fn at_line(abbreviation: &str, fragment: &str, line: usize) -> Result<Self, RuleError> {
        if abbreviation.is_empty()
            || abbreviation.contains(|c: char| c.is_whitespace() || "[]()*".contains(c))
        {
            return Err(RuleError::Label {
                line,
                abbreviation: abbreviation.to_string(),
            });
        }
        let template = parse(fragment).map_err(|e| RuleError::Fragment {
            line,
            fragment: fragment.to_string(),
            reason: e.to_string(),
        })?;
        let stars: Vec<usize> = (0..template.atom_count())
            .filter(|&i| template.atom(i).label.kind == LabelKind::Wildcard)
            .collect();
        let [star] = stars[..] else {
            return Err(RuleError::Attachment { line });
        };
        if template.degree(star) != 1 || template.components().len() != 1 {
            return Err(RuleError::Attachment { line });
        }
        let (attachment, bond) = template.neighbors(star).next().expect("degree 1");
        if !template.validate_valence().is_empty() {
            return Err(RuleError::Fragment {
                line,
                fragment: fragment.to_string(),
                reason: "valence exceeded".to_string(),
            });
        }
        Ok(SubstitutionRule {
            abbreviation: abbreviation.to_string(),
            fragment: fragment.to_string(),
            attachment_bond: template.bond(bond).kind,
            template,
            star,
            attachment,
        })
    }

    /// Number of real atoms the abbreviation stands for.
    pub fn fragment_size(&self) -> usize {
        self.template.atom_count() - 1
    }

    /// Every clean-cut occurrence of the fragment in `g`, deduplicated by atom set.
    pub fn find(&self, g: &MolGraph) -> Vec<Match> {
        let t = &self.template;
        // Template atoms in BFS order from the attachment atom, each with an earlier parent.
        let mut order = vec![(self.attachment, usize::MAX)];
        let mut seen = vec![false; t.atom_count()];
        seen[self.attachment] = true;
        seen[self.star] = true;
        let mut k = 0;
        while k < order.len() {
            let u = order[k].0;
            for v in t.neighbor_atoms(u) {
                if !seen[v] {
                    seen[v] = true;
                    order.push((v, u));
                }
            }
            k += 1;
        }

        let mut out = Vec::new();
        let mut seen_sets: HashSet<(usize, Vec<usize>)> = HashSet::new();
        for start in 0..g.atom_count() {
            if !self.atom_matches(g, start, self.attachment) {
                continue;
            }
            for (anchor, b) in g.neighbors(start) {
                if g.bond(b).kind.connectivity() != self.attachment_bond.connectivity() {
                    continue;
                }
                let mut map = vec![usize::MAX; t.atom_count()];
                map[self.star] = anchor;
                map[self.attachment] = start;
                let mut found = Vec::new();
                self.extend(g, &order, 1, &mut map, &mut found);
                for m in found {
                    let mut atoms: Vec<usize> = (0..t.atom_count())
                        .filter(|&i| i != self.star)
                        .map(|i| m[i])
                        .collect();
                    atoms.sort_unstable();
                    if seen_sets.insert((anchor, atoms.clone())) {
                        out.push(Match {
                            anchor,
                            attachment: start,
                            atoms,
                        });
                    }
                }
            }
        }
        out
    }

    fn extend(
        &self,
        g: &MolGraph,
        order: &[(usize, usize)],
        k: usize,
        map: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if k == order.len() {
            found.push(map.clone());
            return;
        }
        let (t_atom, t_parent) = order[k];
        let g_parent = map[t_parent];
        let t = &self.template;
        for (cand, _) in g.neighbors(g_parent) {
            if map.contains(&cand) || !self.atom_matches(g, cand, t_atom) {
                continue;
            }
            let consistent = t.neighbors(t_atom).all(|(tn, tb)| {
                let gn = map[tn];
                gn == usize::MAX
                    || g.bond_between(cand, gn).is_some_and(|gb| {
                        g.bond(gb).kind.connectivity() == t.bond(tb).kind.connectivity()
                    })
            });
            if !consistent {
                continue;
            }
            map[t_atom] = cand;
            self.extend(g, order, k + 1, map, found);
            map[t_atom] = usize::MAX;
        }
    }

    fn atom_matches(&self, g: &MolGraph, ga: usize, ta: usize) -> bool {
        let (a, t) = (g.atom(ga), self.template.atom(ta));
        a.label.kind == LabelKind::Element
            && a.stereo.is_none()
            && a.label.element == t.label.element
            && a.label.aromatic == t.label.aromatic
            && a.label.charge == t.label.charge
            && a.label.isotope == t.label.isotope
            && g.degree(ga) == self.template.degree(ta)
            && g.hydrogen_count(ga) == self.template.hydrogen_count(ta)
    }
}

/// One occurrence of a rule's fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    /// Atom outside the fragment that the fragment hangs from.
    pub anchor: usize,
    /// Fragment atom bonded to the anchor.
    pub attachment: usize,
    /// All fragment atoms, sorted.
    pub atoms: Vec<usize>,
}

/// Ordered collection of substitution rules with unique abbreviations.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<SubstitutionRule>,
    by_name: HashMap<String, usize>,
}

impl RuleTable {
    /// Parses the tab-separated rule format; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<RuleTable, RuleError> {
        let mut rules = Vec::new();
        let mut by_name = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end();
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let (abbr, fragment) = trimmed.split_once('\t').ok_or(RuleError::Format { line })?;
            let rule = SubstitutionRule::at_line(abbr.trim(), fragment.trim(), line)?;
            if by_name.insert(rule.abbreviation.clone(), rules.len()).is_some() {
                return Err(RuleError::Duplicate {
                    line,
                    abbreviation: rule.abbreviation,
                });
            }
            rules.push(rule);
        }
        Ok(RuleTable { rules, by_name })
    }

    /// The table shipped with the crate.
    pub fn builtin() -> RuleTable {
        static TABLE: OnceLock<RuleTable> = OnceLock::new();
        TABLE
            .get_or_init(|| RuleTable::parse(BUILTIN_RULES).expect("built-in rule table is valid"))
            .clone()
    }

    pub fn load(path: &Path) -> Result<RuleTable, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|e| RuleError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        RuleTable::parse(&text)
    }

    /// The file named by `SKELGRAPH_RULES` when set, the built-in table otherwise.
    pub fn from_env() -> Result<RuleTable, RuleError> {
        match std::env::var_os(RULES_ENV) {
            Some(p) => RuleTable::load(Path::new(&p)),
            None => Ok(RuleTable::builtin()),
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[SubstitutionRule] {
        &self.rules
    }

    pub fn get(&self, abbreviation: &str) -> Option<&SubstitutionRule> {
        self.by_name.get(abbreviation).map(|&i| &self.rules[i])
    }

    pub fn abbreviations(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.abbreviation.as_str())
    }

    /// Lenient parse options that read this table's labels as abbreviations.
    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions::with_abbreviations(self.abbreviations().map(String::from))
    }
}

/// Every match of every rule, tagged with the rule index.
pub fn find_all(g: &MolGraph, rules: &RuleTable) -> Vec<(usize, Match)> {
    rules
        .rules()
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.find(g).into_iter().map(move |m| (i, m)))
        .collect()
}

/// Replaces fragments with abbreviation pseudo-atoms.
///
/// All matches are shuffled; each is then taken with probability `p` unless it overlaps a
/// fragment or anchor already taken. The pseudo-atom reuses the attachment atom's index, so
/// stereo on the anchor stays valid, and sits at the centroid of the removed atoms.
pub fn substitute<R: Rng + ?Sized>(g: &MolGraph, rules: &RuleTable, p: f64, rng: &mut R) -> MolGraph {
    let mut matches = find_all(g, rules);
    matches.shuffle(rng);
    let mut used: HashSet<usize> = HashSet::new();
    let mut chosen = Vec::new();
    for (rule, m) in matches {
        let take = rng.random::<f64>() < p;
        if !take || used.contains(&m.anchor) || m.atoms.iter().any(|a| used.contains(a)) {
            continue;
        }
        used.insert(m.anchor);
        used.extend(m.atoms.iter().copied());
        chosen.push((rule, m));
    }
    if chosen.is_empty() {
        return g.clone();
    }
    let mut out = g.clone();
    let mut remove = HashSet::new();
    for (rule, m) in &chosen {
        let coords: Vec<Point> = m.atoms.iter().filter_map(|&a| g.atom(a).coords).collect();
        let centroid = (coords.len() == m.atoms.len()).then(|| {
            let n = coords.len() as f64;
            Point::new(
                coords.iter().map(|p| p.x).sum::<f64>() / n,
                coords.iter().map(|p| p.y).sum::<f64>() / n,
            )
        });
        let label = AtomLabel::abbreviation(rules.rules()[*rule].abbreviation.clone());
        out.replace_label(m.attachment, label);
        out.clear_stereo(m.attachment);
        out.atom_mut(m.attachment).coords = centroid;
        remove.extend(m.atoms.iter().copied().filter(|&a| a != m.attachment));
    }
    out.remove_atoms(&remove);
    out
}

/// Replaces abbreviation pseudo-atoms by their fragments and R-groups by `*`.
///
/// The fragment's attachment atom takes over the pseudo-atom's index, bonds and coordinates;
/// the remaining fragment atoms are appended without coordinates.
pub fn expand(g: &MolGraph, rules: &RuleTable) -> Result<MolGraph, ExpandError> {
    let mut out = g.clone();
    for atom in 0..g.atom_count() {
        let label = &g.atom(atom).label;
        match label.kind {
            LabelKind::RGroup => out.replace_label(atom, AtomLabel::wildcard()),
            LabelKind::Abbreviation => {
                let rule = rules
                    .get(&label.text)
                    .ok_or_else(|| ExpandError::UnknownAbbreviation(label.text.clone()))?;
                let t = &rule.template;
                let mut map = vec![usize::MAX; t.atom_count()];
                map[rule.attachment] = atom;
                out.replace_label(atom, t.atom(rule.attachment).label.clone());
                out.clear_stereo(atom);
                for ti in 0..t.atom_count() {
                    if ti == rule.star || ti == rule.attachment {
                        continue;
                    }
                    map[ti] = out
                        .add_atom(t.atom(ti).label.clone(), None)
                        .expect("template labels are valid");
                }
                for b in t.bonds() {
                    if b.begin == rule.star || b.end == rule.star {
                        continue;
                    }
                    out.add_bond(map[b.begin], map[b.end], b.kind)
                        .expect("template bonds are new");
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// What [`add_rgroup`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RGroupOutcome {
    Added { atom: usize, label: String },
    /// The probability draw declined.
    Skipped,
    /// No atom carries a hydrogen to replace.
    NoEligibleAtom,
}

/// With probability `p`, bonds a new R-group pseudo-atom to a uniformly chosen atom that has
/// at least one hydrogen; the label is drawn uniformly from `labels`.
pub fn add_rgroup<R: Rng + ?Sized>(
    g: &MolGraph,
    labels: &[&str],
    p: f64,
    rng: &mut R,
) -> (MolGraph, RGroupOutcome) {
    if rng.random::<f64>() >= p {
        return (g.clone(), RGroupOutcome::Skipped);
    }
    let eligible: Vec<usize> = (0..g.atom_count())
        .filter(|&a| g.atom(a).label.is_element() && g.hydrogen_count(a) >= 1)
        .collect();
    if eligible.is_empty() || labels.is_empty() {
        return (g.clone(), RGroupOutcome::NoEligibleAtom);
    }
    let host = eligible[rng.random_range(0..eligible.len())];
    let label = labels[rng.random_range(0..labels.len())].to_string();

    let mut out = g.clone();
    let coords = g.atom(host).coords.map(|c| place_substituent(g, host, c));
    let r = out
        .add_atom(AtomLabel::rgroup(label.clone()), coords)
        .expect("placement stays in the unit square");
    out.add_bond(host, r, BondType::Single).expect("new atom");
    if let Some(h) = out.atom(host).label.explicit_h {
        out.atom_mut(host).label.explicit_h = Some(h - 1);
    }
    out.replace_stereo_ref(host, NeighborRef::ImplicitH, NeighborRef::Atom(r));
    (out, RGroupOutcome::Added { atom: r, label })
}

/// add_rgroup with the standard label list.
pub fn add_standard_rgroup<R: Rng + ?Sized>(g: &MolGraph, p: f64, rng: &mut R) -> (MolGraph, RGroupOutcome) {
    add_rgroup(g, &RGROUP_LABELS, p, rng)
}

/// Position one bond length from `host`, opposite the mean direction of its neighbors.
fn place_substituent(g: &MolGraph, host: usize, c: Point) -> Point {
    let lengths: Vec<f64> = g
        .bonds()
        .iter()
        .filter_map(|b| Some(g.atom(b.begin).coords?.distance(g.atom(b.end).coords?)))
        .collect();
    let length = if lengths.is_empty() {
        0.1
    } else {
        lengths.iter().sum::<f64>() / lengths.len() as f64
    };
    let (mut dx, mut dy, mut n) = (0.0, 0.0, 0.0);
    for v in g.neighbor_atoms(host) {
        if let Some(p) = g.atom(v).coords {
            dx += p.x - c.x;
            dy += p.y - c.y;
            n += 1.0;
        }
    }
    let (mut ux, mut uy) = if n > 0.0 { (-dx / n, -dy / n) } else { (1.0, 0.0) };
    let norm = (ux * ux + uy * uy).sqrt();
    if norm < 1e-12 {
        // Balanced neighbors: go perpendicular to the first one.
        let first = g.neighbor_atoms(host).into_iter().find_map(|v| g.atom(v).coords);
        (ux, uy) = match first {
            Some(p) => (-(p.y - c.y), p.x - c.x),
            None => (1.0, 0.0),
        };
    }
    let norm = (ux * ux + uy * uy).sqrt().max(1e-12);
    let clamp = |v: f64| v.clamp(0.0, 0.999_999);
    Point::new(clamp(c.x + ux / norm * length), clamp(c.y + uy / norm * length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::{canonical_smiles, write};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rules() -> RuleTable {
        RuleTable::builtin()
    }

    #[test]
    fn builtin_table_size() {
        let t = rules();
        assert!(t.len() >= 51);
        let fragments: HashSet<&str> = t.rules().iter().map(|r| r.fragment.as_str()).collect();
        assert_eq!(fragments.len(), t.len());
    }

    #[test]
    fn methyl_matches() {
        let me = rules().get("Me").unwrap().clone();
        assert_eq!(me.find(&parse("CC").unwrap()).len(), 2);
        assert_eq!(me.find(&parse("c1ccccc1").unwrap()).len(), 0);
        assert_eq!(me.find(&parse("C1CCCCC1").unwrap()).len(), 0);
        let cf3 = rules().get("CF3").unwrap().clone();
        assert_eq!(cf3.find(&parse("FC(F)(F)c1ccccc1").unwrap()).len(), 1);
    }

    #[test]
    fn ester_matches_once() {
        // 21 heavy atoms with exactly one methyl ester.
        let g = parse("COC(=O)c1ccc(cc1)C(N)Cc1ccc(O)c(Cl)c1").unwrap();
        assert_eq!(g.atom_count(), 21);
        let rule = rules().get("CO2Me").unwrap().clone();
        assert_eq!(rule.find(&g).len(), 1);
    }

    #[test]
    fn substitute_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = parse("CCO").unwrap();
        assert_eq!(substitute(&g, &rules(), 0.0, &mut rng), g);
        let me = RuleTable::parse("Me\t*C\n").unwrap();
        let s = substitute(&g, &me, 1.0, &mut rng);
        assert_eq!(s.atom_count(), g.atom_count());
        assert_eq!(write(&s).unwrap(), "[Me]CO");
    }

    #[test]
    fn expand_examples() {
        let g = parse("CC[Me]").unwrap();
        let e = expand(&g, &rules()).unwrap();
        assert_eq!(canonical_smiles(&e).unwrap(), canonical_smiles(&parse("CCC").unwrap()).unwrap());
        assert_eq!(e.formula(), parse("CCC").unwrap().formula());

        let g = parse("CC[R1]").unwrap();
        let e = expand(&g, &rules()).unwrap();
        assert_eq!(write(&e).unwrap(), "CC*");

        let err = expand(&parse("C[Foo]").unwrap(), &rules()).unwrap_err();
        assert_eq!(err, ExpandError::UnknownAbbreviation("Foo".into()));
    }

    #[test]
    fn substitute_then_expand_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "CC(C)(C)c1ccc(OC)cc1",
            "FC(F)(F)c1ccc(cc1)[N+](=O)[O-]",
            "C[C@H](N)C(=O)OC",
        ] {
            let g = parse(s).unwrap();
            let sub = substitute(&g, &rules(), 1.0, &mut rng);
            assert!(sub.atoms().iter().any(|a| a.label.kind == LabelKind::Abbreviation), "{s}");
            let back = expand(&sub, &rules()).unwrap();
            assert_eq!(canonical_smiles(&back).unwrap(), canonical_smiles(&g).unwrap(), "{s}");
        }
    }

    #[test]
    fn rgroup_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = parse("C").unwrap();
        let (same, outcome) = add_standard_rgroup(&g, 0.0, &mut rng);
        assert_eq!(same, g);
        assert_eq!(outcome, RGroupOutcome::Skipped);
        let (out, outcome) = add_standard_rgroup(&g, 1.0, &mut rng);
        assert_eq!((out.atom_count(), out.bond_count()), (2, 1));
        let RGroupOutcome::Added { label, .. } = outcome else {
            panic!("expected an R-group");
        };
        assert!(RGROUP_LABELS.contains(&label.as_str()));
        let (_, outcome) = add_standard_rgroup(&parse("C(F)(F)(F)F").unwrap(), 1.0, &mut rng);
        assert_eq!(outcome, RGroupOutcome::NoEligibleAtom);
    }

    #[test]
    fn rule_table_errors() {
        assert!(matches!(RuleTable::parse("Me *C"), Err(RuleError::Format { line: 1 })));
        assert!(matches!(
            RuleTable::parse("Me\tCC"),
            Err(RuleError::Attachment { .. })
        ));
        assert!(matches!(
            RuleTable::parse("Me\t*C\nMe\t*CC"),
            Err(RuleError::Duplicate { line: 2, .. })
        ));
        assert!(RuleTable::parse("# comment\n\nEt\t*CC\n").unwrap().get("Et").is_some());
    }
}
