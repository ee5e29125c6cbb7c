//! Seeded random generator of small, valence-correct molecules whose SMILES stays inside the
//! standard vocabulary.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::augment::{expand, RuleTable};
use crate::chirality::{EnvNeighbor, StereoEnvironment, Wedge};
use crate::codec::isotopes_for;
use crate::element::Element;
use crate::molgraph::{AtomLabel, BondType, Chirality, MolGraph, Point};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Chance that a growth step attaches a ring instead of a single atom.
    pub ring_prob: f64,
    /// Chance that a new chain atom is a heteroatom.
    pub hetero_prob: f64,
    /// Chance that a new chain bond is double (when valence allows).
    pub double_prob: f64,
    /// Per eligible atom chance of tetrahedral stereo.
    pub stereo_prob: f64,
    /// Per molecule chance of one charged site.
    pub charge_prob: f64,
    /// Per molecule chance of one isotope label.
    pub isotope_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            min_atoms: 6,
            max_atoms: 24,
            ring_prob: 0.25,
            hetero_prob: 0.3,
            double_prob: 0.15,
            stereo_prob: 0.3,
            charge_prob: 0.1,
            isotope_prob: 0.05,
        }
    }
}

const HETERO: [(&str, u32); 6] = [("N", 5), ("O", 5), ("F", 2), ("Cl", 2), ("S", 1), ("Br", 1)];

/// Ring templates as (element, aromatic) per ring position.
const RINGS: [&[(&str, bool)]; 6] = [
    &[("C", true); 6],
    &[("N", true), ("C", true), ("C", true), ("C", true), ("C", true), ("C", true)],
    &[("C", false); 6],
    &[("C", false); 5],
    &[("N", false), ("C", false), ("C", false), ("C", false), ("C", false), ("C", false)],
    &[("O", false), ("C", false), ("C", false), ("C", false), ("C", false)],
];

/// Builds one random connected molecule.
pub fn generate<R: Rng + ?Sized>(config: &GenConfig, rng: &mut R) -> MolGraph {
    let target = rng.random_range(config.min_atoms.max(1)..=config.max_atoms.max(config.min_atoms.max(1)));
    let mut g = MolGraph::new();
    if rng.random::<f64>() < config.ring_prob {
        add_ring(&mut g, None, rng);
    } else {
        g.add_atom(AtomLabel::element(Element::C), None).expect("new atom");
    }
    let mut attempts = 0;
    while g.atom_count() < target && attempts < 10 * target {
        attempts += 1;
        let hosts: Vec<usize> = (0..g.atom_count()).filter(|&a| g.hydrogen_count(a) > 0).collect();
        let Some(&host) = hosts.choose(rng) else {
            break;
        };
        let room = target - g.atom_count();
        if room >= 5 && rng.random::<f64>() < config.ring_prob {
            add_ring(&mut g, Some(host), rng);
            continue;
        }
        let symbol = if rng.random::<f64>() < config.hetero_prob {
            HETERO.choose_weighted(rng, |h| h.1).expect("non-empty").0
        } else {
            "C"
        };
        let label = AtomLabel::organic(symbol);
        let capacity = label.element.and_then(|e| e.default_valence()).unwrap_or(1);
        let mut kind = BondType::Single;
        if capacity >= 2
            && g.hydrogen_count(host) >= 2
            && !g.atom(host).label.aromatic
            && rng.random::<f64>() < config.double_prob
        {
            kind = if capacity >= 3 && g.hydrogen_count(host) >= 3 && rng.random::<f64>() < 0.2 {
                BondType::Triple
            } else {
                BondType::Double
            };
        }
        let a = g.add_atom(label, None).expect("new atom");
        g.add_bond(host, a, kind).expect("new bond");
    }
    if rng.random::<f64>() < config.charge_prob {
        add_charge(&mut g, rng);
    }
    if rng.random::<f64>() < config.isotope_prob {
        add_isotope(&mut g, rng);
    }
    for a in 0..g.atom_count() {
        if !g.atom(a).label.aromatic
            && g.can_hold_stereo(a)
            && g.neighbors(a).all(|(_, b)| g.bond(b).kind == BondType::Single)
            && rng.random::<f64>() < config.stereo_prob
        {
            let chirality = if rng.random() { Chirality::Ccw } else { Chirality::Cw };
            let slots = g.stereo_slots(a);
            g.set_stereo(a, chirality, slots).expect("slots match neighbors");
        }
    }
    g
}

fn add_ring<R: Rng + ?Sized>(g: &mut MolGraph, host: Option<usize>, rng: &mut R) {
    let template = *RINGS.choose(rng).expect("non-empty");
    let offset = rng.random_range(0..template.len());
    let start = g.atom_count();
    for i in 0..template.len() {
        let (symbol, aromatic) = template[(i + offset) % template.len()];
        let element = Element::from_symbol(symbol).expect("known symbol");
        let label = if aromatic {
            AtomLabel::aromatic(element)
        } else {
            AtomLabel::element(element)
        };
        g.add_atom(label, None).expect("new atom");
    }
    for i in 0..template.len() {
        let (a, b) = (start + i, start + (i + 1) % template.len());
        let kind = if template[0].1 {
            BondType::Aromatic
        } else {
            BondType::Single
        };
        g.add_bond(a, b, kind).expect("new bond");
    }
    if let Some(host) = host {
        // Attach through a ring atom that still carries a hydrogen.
        let ring_atom = (start..g.atom_count())
            .find(|&a| g.hydrogen_count(a) > 0)
            .expect("ring has a CH");
        g.add_bond(host, ring_atom, BondType::Single).expect("new bond");
    }
}

fn add_charge<R: Rng + ?Sized>(g: &mut MolGraph, rng: &mut R) {
    let sites: Vec<(usize, i8)> = (0..g.atom_count())
        .filter_map(|a| {
            let label = &g.atom(a).label;
            if label.aromatic || label.charge != 0 {
                return None;
            }
            let all_single = g.neighbors(a).all(|(_, b)| g.bond(b).kind == BondType::Single);
            match label.element {
                Some(e) if e == Element::N && all_single && g.degree(a) >= 1 => Some((a, 1)),
                Some(e) if e == Element::O && all_single && g.degree(a) == 1 => Some((a, -1)),
                _ => None,
            }
        })
        .collect();
    if let Some(&(atom, charge)) = sites.choose(rng) {
        g.atom_mut(atom).label.charge = charge;
    }
}

fn add_isotope<R: Rng + ?Sized>(g: &mut MolGraph, rng: &mut R) {
    let sites: Vec<(usize, &'static [u16])> = (0..g.atom_count())
        .filter_map(|a| {
            let isotopes = isotopes_for(&g.atom(a).label.symbol());
            (!isotopes.is_empty()).then_some((a, isotopes))
        })
        .collect();
    if let Some(&(atom, isotopes)) = sites.choose(rng) {
        let iso = *isotopes.choose(rng).expect("non-empty");
        g.atom_mut(atom).label.isotope = Some(iso);
    }
}

/// A generated molecule with `groups` rule-table fragments grafted onto atoms that carry a
/// hydrogen and no stereo. Fewer groups are added when hosts run out.
pub fn generate_with_groups<R: Rng + ?Sized>(
    config: &GenConfig,
    rules: &RuleTable,
    groups: usize,
    rng: &mut R,
) -> MolGraph {
    let mut g = generate(config, rng);
    for _ in 0..groups {
        let Some(rule) = rules.rules().choose(rng) else {
            break;
        };
        let need = rule.attachment_bond.half_order().div_ceil(2) as u8;
        let hosts: Vec<usize> = (0..g.atom_count())
            .filter(|&a| {
                g.atom(a).label.is_element()
                    && g.atom(a).stereo.is_none()
                    && g.hydrogen_count(a) >= need
                    && (need == 1 || !g.atom(a).label.aromatic)
            })
            .collect();
        let Some(&host) = hosts.choose(rng) else {
            break;
        };
        let p = g
            .add_atom(AtomLabel::abbreviation(rule.abbreviation.clone()), None)
            .expect("new atom");
        g.add_bond(host, p, rule.attachment_bond).expect("new bond");
        g = expand(&g, rules).expect("label comes from the table");
    }
    g
}

/// A random environment with 3 or 4 neighbors spread around the center, at least one
/// wedge, and (with 3 neighbors) a random implicit-hydrogen slot.
pub fn stereo_environment<R: Rng + ?Sized>(rng: &mut R) -> StereoEnvironment {
    let n = rng.random_range(3..=4usize);
    let center = Point::new(rng.random_range(0.3..0.7), rng.random_range(0.3..0.7));
    // Angles at least 40 degrees apart so no three vectors are nearly planar.
    let mut angles: Vec<f64> = Vec::new();
    while angles.len() < n {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let clear = angles.iter().all(|&b: &f64| {
            let d = (a - b).rem_euclid(std::f64::consts::TAU);
            d.min(std::f64::consts::TAU - d) > 40f64.to_radians()
        });
        if clear {
            angles.push(a);
        }
    }
    let wedged = rng.random_range(0..n);
    let neighbors = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let r = rng.random_range(0.08..0.2);
            let wedge = if i == wedged || rng.random::<f64>() < 0.2 {
                if rng.random() { Wedge::Solid } else { Wedge::Dashed }
            } else {
                Wedge::None
            };
            EnvNeighbor {
                atom: i + 1,
                coords: Point::new(center.x + r * a.cos(), center.y + r * a.sin()),
                wedge,
            }
        })
        .collect();
    StereoEnvironment {
        center,
        neighbors,
        implicit_h: (n == 3).then(|| rng.random_range(0..=3)),
    }
}

/// A wedged environment whose neighbors all lie on one line through the center.
pub fn collinear_environment<R: Rng + ?Sized>(rng: &mut R) -> StereoEnvironment {
    let center = Point::new(0.5, 0.5);
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let (dx, dy) = (angle.cos(), angle.sin());
    let n = rng.random_range(3..=4usize);
    let neighbors = (0..n)
        .map(|i| {
            let t = [0.1, -0.1, 0.2, -0.2][i];
            EnvNeighbor {
                atom: i + 1,
                coords: Point::new(center.x + t * dx, center.y + t * dy),
                wedge: Wedge::None,
            }
        })
        .collect();
    StereoEnvironment {
        center,
        neighbors,
        implicit_h: None,
    }
}
