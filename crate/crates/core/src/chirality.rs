//! Tetrahedral parity from 2D coordinates and wedge bonds.
//!
//! Neighbors are lifted to 3D (solid wedge z = +1, dashed z = -1, plain bonds z = 0), a
//! missing fourth neighbor is placed opposite the mean of the others, and the sign of the
//! signed volume of the four vectors in stereo order gives `@` (positive) or `@@`.

use thiserror::Error;

use crate::molgraph::{BondType, Chirality, MolGraph, NeighborRef, Parity, Point};

/// Signed volumes with magnitude below this are treated as planar.
pub const DEGENERACY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChiralityError {
    #[error("a stereocenter needs 3 or 4 neighbors, found {0}")]
    NotAStereocenter(usize),
    #[error("atom {0} has no coordinates")]
    MissingCoordinates(usize),
}

/// Out-of-plane hint on a bond whose narrow end sits at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wedge {
    None,
    Solid,
    Dashed,
}

impl Wedge {
    fn z(self) -> f64 {
        match self {
            Wedge::None => 0.0,
            Wedge::Solid => 1.0,
            Wedge::Dashed => -1.0,
        }
    }

    pub fn flipped(self) -> Wedge {
        match self {
            Wedge::None => Wedge::None,
            Wedge::Solid => Wedge::Dashed,
            Wedge::Dashed => Wedge::Solid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvNeighbor {
    pub atom: usize,
    pub coords: Point,
    pub wedge: Wedge,
}

/// A candidate stereocenter and its neighbors in stereo order.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoEnvironment {
    pub center: Point,
    pub neighbors: Vec<EnvNeighbor>,
    /// Slot of the implicit hydrogen (or lone pair) in the stereo order, if any. With three
    /// neighbors and no slot given, the phantom goes last.
    pub implicit_h: Option<usize>,
}

impl StereoEnvironment {
    /// The stereo order this environment describes, as graph neighbor references.
    pub fn order(&self) -> Vec<NeighborRef> {
        let mut order: Vec<NeighborRef> =
            self.neighbors.iter().map(|n| NeighborRef::Atom(n.atom)).collect();
        if self.neighbors.len() == 3 {
            let slot = self.implicit_h.unwrap_or(3).min(3);
            order.insert(slot, NeighborRef::ImplicitH);
        }
        order
    }

    /// Applies `f` to every coordinate (center included).
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> StereoEnvironment {
        StereoEnvironment {
            center: f(self.center),
            neighbors: self
                .neighbors
                .iter()
                .map(|n| EnvNeighbor {
                    coords: f(n.coords),
                    ..*n
                })
                .collect(),
            implicit_h: self.implicit_h,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perception {
    pub parity: Parity,
    /// Signed volume behind the decision.
    pub volume: f64,
    pub warning: Option<String>,
}

/// Decides the parity of one environment.
pub fn perceive(env: &StereoEnvironment) -> Result<Perception, ChiralityError> {
    let n = env.neighbors.len();
    if !(3..=4).contains(&n) || (n == 4 && env.implicit_h.is_some()) {
        return Err(ChiralityError::NotAStereocenter(n));
    }
    if env.neighbors.iter().all(|nb| nb.wedge == Wedge::None) {
        return Ok(Perception {
            parity: Parity::None,
            volume: 0.0,
            warning: None,
        });
    }
    let mut vectors: Vec<[f64; 3]> = env
        .neighbors
        .iter()
        .map(|nb| {
            [
                nb.coords.x - env.center.x,
                nb.coords.y - env.center.y,
                nb.wedge.z(),
            ]
        })
        .collect();
    if n == 3 {
        let mean_x = vectors.iter().map(|v| v[0]).sum::<f64>() / 3.0;
        let mean_y = vectors.iter().map(|v| v[1]).sum::<f64>() / 3.0;
        let sum_z = vectors.iter().map(|v| v[2]).sum::<f64>();
        let slot = env.implicit_h.unwrap_or(3).min(3);
        vectors.insert(slot, [-mean_x, -mean_y, -sum_z]);
    }
    let volume = signed_volume(&vectors);
    if volume.abs() < DEGENERACY_EPSILON {
        return Ok(Perception {
            parity: Parity::None,
            volume,
            warning: Some(format!(
                "degenerate stereocenter layout (signed volume {volume:.3e})"
            )),
        });
    }
    Ok(Perception {
        parity: if volume > 0.0 { Parity::Ccw } else { Parity::Cw },
        volume,
        warning: None,
    })
}

/// det[v2 - v1, v3 - v1, v4 - v1].
pub fn signed_volume(v: &[[f64; 3]]) -> f64 {
    let d = |i: usize| {
        [
            v[i][0] - v[0][0],
            v[i][1] - v[0][1],
            v[i][2] - v[0][2],
        ]
    };
    let (a, b, c) = (d(1), d(2), d(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Environment of `center` in `g`, with neighbors in index order and the hydrogen slot after
/// the first neighbor when that neighbor precedes the center, first otherwise (the order a
/// SMILES writer walking atoms by index would produce).
///
/// Only wedges whose narrow end is at `center` carry z; a wedge seen from its wide end is
/// flat for this center.
pub fn environment(g: &MolGraph, center: usize) -> Result<StereoEnvironment, ChiralityError> {
    let c = g.atom(center).coords.ok_or(ChiralityError::MissingCoordinates(center))?;
    let mut nbrs: Vec<(usize, usize)> = g.neighbors(center).collect();
    nbrs.sort_unstable();
    if !(3..=4).contains(&nbrs.len()) {
        return Err(ChiralityError::NotAStereocenter(nbrs.len()));
    }
    let mut neighbors = Vec::with_capacity(4);
    for (v, b) in nbrs {
        let coords = g.atom(v).coords.ok_or(ChiralityError::MissingCoordinates(v))?;
        let bond = g.bond(b);
        let wedge = match bond.kind {
            BondType::SolidWedge if bond.begin == center => Wedge::Solid,
            BondType::DashedWedge if bond.begin == center => Wedge::Dashed,
            _ => Wedge::None,
        };
        neighbors.push(EnvNeighbor {
            atom: v,
            coords,
            wedge,
        });
    }
    let implicit_h = (neighbors.len() == 3).then(|| usize::from(neighbors[0].atom < center));
    Ok(StereoEnvironment {
        center: c,
        neighbors,
        implicit_h,
    })
}

/// Whether `atom` is the narrow end of at least one wedge.
pub fn has_wedge_at(g: &MolGraph, atom: usize) -> bool {
    g.neighbors(atom)
        .any(|(_, b)| g.bond(b).kind.is_wedge() && g.bond(b).begin == atom)
}

/// Replaces every atom's parity with the one perceived from coordinates and wedges.
/// Atoms without a wedge starting at them lose any parity they had. Returns warnings for
/// centers that could not be decided.
pub fn overwrite_all(g: &mut MolGraph) -> Vec<String> {
    let mut warnings = Vec::new();
    for atom in 0..g.atom_count() {
        g.clear_stereo(atom);
        if !has_wedge_at(g, atom) {
            continue;
        }
        let degree = g.degree(atom);
        if !(3..=4).contains(&degree) {
            warnings.push(format!("atom {atom}: wedge on an atom with {degree} neighbors"));
            continue;
        }
        if !g.can_hold_stereo(atom) {
            warnings.push(format!("atom {atom}: wedge on an atom that cannot be a stereocenter"));
            continue;
        }
        let env = match environment(g, atom) {
            Ok(env) => env,
            Err(e) => {
                warnings.push(format!("atom {atom}: {e}"));
                continue;
            }
        };
        let perception = perceive(&env).expect("environment has 3 or 4 neighbors");
        if let Some(w) = perception.warning {
            warnings.push(format!("atom {atom}: {w}"));
        }
        if let Some(chirality) = Option::<Chirality>::from(perception.parity) {
            g.set_stereo(atom, chirality, env.order())
                .expect("environment order covers the neighbors");
        }
    }
    warnings
}

/// Picks wedge bonds so that [`overwrite_all`] reproduces every stored parity. Each
/// stereocenter gets one wedge on an incident single bond (preferring acyclic bonds to
/// atoms that are not themselves wedged centers) with the largest signed-volume margin.
/// Centers that admit no consistent wedge lose their parity; their indices are returned.
pub fn assign_wedges(g: &mut MolGraph) -> Vec<usize> {
    let ring = crate::rings::ring_bonds(g);
    let mut dropped = Vec::new();
    let centers: Vec<usize> = (0..g.atom_count())
        .filter(|&a| g.atom(a).stereo.is_some())
        .collect();
    for &center in &centers {
        let stereo = g.atom(center).stereo.clone().expect("filtered");
        let mut best: Option<(bool, f64, usize, BondType)> = None;
        let nbrs: Vec<(usize, usize)> = g.neighbors(center).collect();
        for (v, b) in nbrs {
            let bond = g.bond(b).clone();
            if bond.kind != BondType::Single {
                continue;
            }
            let preferred = !ring[b] && g.atom(v).stereo.is_none();
            for kind in [BondType::SolidWedge, BondType::DashedWedge] {
                let mut trial = g.clone();
                if trial.bond(b).begin != center {
                    trial.reverse_bond(b);
                }
                trial.set_bond_type(b, kind);
                // Only this center's own wedges matter for its environment.
                for (_, other) in trial.neighbors(center).collect::<Vec<_>>() {
                    if other != b && trial.bond(other).kind.is_wedge() && trial.bond(other).begin == center {
                        trial.set_bond_type(other, BondType::Single);
                    }
                }
                let Ok(env) = environment(&trial, center) else {
                    continue;
                };
                let Ok(p) = perceive(&env) else {
                    continue;
                };
                let wanted = Parity::from(stereo.chirality_for_order(&env.order()));
                if p.parity == Parity::None || p.parity != wanted {
                    continue;
                }
                let score = (preferred, p.volume.abs(), b, kind);
                if best.is_none_or(|cur| (score.0, score.1) > (cur.0, cur.1)) {
                    best = Some(score);
                }
            }
        }
        match best {
            Some((_, _, b, kind)) => {
                if g.bond(b).begin != center {
                    g.reverse_bond(b);
                }
                g.set_bond_type(b, kind);
            }
            None => {
                g.clear_stereo(center);
                dropped.push(center);
            }
        }
    }
    dropped
}
