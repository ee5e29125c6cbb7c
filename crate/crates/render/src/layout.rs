//! 2D coordinates for graphs that have none: regular-polygon ring templates, zigzag chains,
//! and a final fit into the image's central region.

use std::collections::VecDeque;
use std::f64::consts::PI;

use thiserror::Error;

use skelgraph_core::rings::sssr;
use skelgraph_core::{BondType, MolGraph, Point};

/// Laid-out drawings are fitted into `[MARGIN, 1 - MARGIN]` on both axes.
pub const MARGIN: f64 = 0.1;
/// Upper bound on the normalized bond length, so tiny molecules are not drawn huge.
pub const MAX_BOND_LENGTH: f64 = 0.25;

/// Minimum distance (in bond lengths) between a newly placed ring atom and any placed atom.
const RING_CLASH: f64 = 0.35;
const CHAIN_CLEARANCE: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("{missing} of {total} atoms lack coordinates; supply all or none")]
    PartialCoordinates { missing: usize, total: usize },
    #[error("cannot place bridged ring system around atoms {0:?}")]
    Bridged(Vec<usize>),
}

type V = (f64, f64);

fn add(a: V, b: V) -> V {
    (a.0 + b.0, a.1 + b.1)
}

fn sub(a: V, b: V) -> V {
    (a.0 - b.0, a.1 - b.1)
}

fn scale(a: V, s: f64) -> V {
    (a.0 * s, a.1 * s)
}

fn norm(a: V) -> f64 {
    a.0.hypot(a.1)
}

fn unit_at(angle: f64) -> V {
    (angle.cos(), angle.sin())
}

fn angle_of(a: V) -> f64 {
    a.1.atan2(a.0)
}

fn rotate(a: V, theta: f64) -> V {
    let (s, c) = theta.sin_cos();
    (c * a.0 - s * a.1, s * a.0 + c * a.1)
}

/// Returns a copy of `g` with coordinates on every atom. Graphs that already carry
/// coordinates on every atom are returned unchanged.
pub fn layout(g: &MolGraph) -> Result<MolGraph, LayoutError> {
    let n = g.atom_count();
    let missing = g.atoms().iter().filter(|a| a.coords.is_none()).count();
    if missing == 0 {
        return Ok(g.clone());
    }
    if missing != n {
        return Err(LayoutError::PartialCoordinates { missing, total: n });
    }
    let mut lay = Layout::new(g);
    let mut offset_x = 0.0;
    for component in g.components() {
        lay.place_component(component[0])?;
        // Pack components left to right with a gap of 1.5 bond lengths.
        let (min_x, min_y, max_x, max_y) =
            bbox(component.iter().map(|&a| lay.pos[a].expect("placed")));
        let shift = (offset_x - min_x, -(min_y + max_y) / 2.0);
        for &a in &component {
            lay.pos[a] = lay.pos[a].map(|p| add(p, shift));
        }
        offset_x += max_x - min_x + 1.5;
    }
    let points: Vec<V> = lay.pos.iter().map(|p| p.expect("every component placed")).collect();
    let (min_x, min_y, max_x, max_y) = bbox(points.iter().copied());
    let extent = (max_x - min_x).max(max_y - min_y);
    let s = if extent > 0.0 {
        ((1.0 - 2.0 * MARGIN) / extent).min(MAX_BOND_LENGTH)
    } else {
        1.0
    };
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    let mut out = g.clone();
    for (i, p) in points.iter().enumerate() {
        let q = Point::new(0.5 + (p.0 - cx) * s, 0.5 + (p.1 - cy) * s);
        out.set_coords(i, q).expect("fitted inside the unit square");
    }
    Ok(out)
}

fn bbox(points: impl Iterator<Item = V>) -> (f64, f64, f64, f64) {
    points.fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.0), b.min(p.1), c.max(p.0), d.max(p.1)),
    )
}

struct Layout<'a> {
    g: &'a MolGraph,
    pos: Vec<Option<V>>,
    /// Zigzag side for chain continuation, +1 or -1.
    turn: Vec<f64>,
    /// Ring system index per atom.
    system_of: Vec<Option<usize>>,
    /// Rings (cyclic atom order) per system.
    systems: Vec<Vec<Vec<usize>>>,
}

impl<'a> Layout<'a> {
    fn new(g: &'a MolGraph) -> Self {
        let n = g.atom_count();
        let rings = sssr(g);
        // Union rings that share atoms into systems.
        let mut parent: Vec<usize> = (0..rings.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for (r, ring) in rings.iter().enumerate() {
            for &a in ring {
                match owner[a] {
                    Some(o) => {
                        let (x, y) = (find(&mut parent, o), find(&mut parent, r));
                        parent[x] = y;
                    }
                    None => owner[a] = Some(r),
                }
            }
        }
        let mut system_index: Vec<Option<usize>> = vec![None; rings.len()];
        let mut systems: Vec<Vec<Vec<usize>>> = Vec::new();
        for r in 0..rings.len() {
            let root = find(&mut parent, r);
            let s = *system_index[root].get_or_insert_with(|| {
                systems.push(Vec::new());
                systems.len() - 1
            });
            systems[s].push(rings[r].clone());
        }
        let mut system_of = vec![None; n];
        for (s, sys) in systems.iter().enumerate() {
            for ring in sys {
                for &a in ring {
                    system_of[a] = Some(s);
                }
            }
        }
        Layout {
            g,
            pos: vec![None; n],
            turn: vec![-1.0; n],
            system_of,
            systems,
        }
    }

    fn place_component(&mut self, start: usize) -> Result<(), LayoutError> {
        let mut queue = VecDeque::new();
        match self.system_of[start] {
            Some(s) => {
                let local = self.system_coords(s)?;
                for (a, p) in local {
                    self.pos[a] = Some(p);
                    queue.push_back(a);
                }
            }
            None => {
                self.pos[start] = Some((0.0, 0.0));
                queue.push_back(start);
            }
        }
        while let Some(u) = queue.pop_front() {
            let children: Vec<usize> = self
                .g
                .neighbor_atoms(u)
                .into_iter()
                .filter(|&v| self.pos[v].is_none())
                .collect();
            if children.is_empty() {
                continue;
            }
            let dirs = self.child_directions(u, children.len());
            let pu = self.pos[u].expect("queued atoms are placed");
            for (v, preferred) in children.into_iter().zip(dirs) {
                if self.pos[v].is_some() {
                    // Reached earlier through its own ring system.
                    continue;
                }
                let dir = self.clear_direction(pu, preferred);
                let target = add(pu, unit_at(dir));
                match self.system_of[v] {
                    Some(s) => {
                        let local = self.system_coords(s)?;
                        let anchor = local.iter().find(|(a, _)| *a == v).expect("v in system").1;
                        let centroid = scale(
                            local.iter().fold((0.0, 0.0), |acc, (_, p)| add(acc, *p)),
                            1.0 / local.len() as f64,
                        );
                        let spin = dir - angle_of(sub(centroid, anchor));
                        for (a, p) in &local {
                            self.pos[*a] = Some(add(target, rotate(sub(*p, anchor), spin)));
                        }
                        queue.push_back(v);
                        for (a, _) in local {
                            if a != v {
                                queue.push_back(a);
                            }
                        }
                    }
                    None => {
                        self.pos[v] = Some(target);
                        self.turn[v] = -self.turn[u];
                        queue.push_back(v);
                    }
                }
            }
        }
        Ok(())
    }

    /// Angles for `k` new bonds out of `u`, given its placed neighbors.
    fn child_directions(&self, u: usize, k: usize) -> Vec<f64> {
        let pu = self.pos[u].expect("placed");
        let mut taken: Vec<f64> = self
            .g
            .neighbor_atoms(u)
            .into_iter()
            .filter_map(|v| self.pos[v].map(|p| angle_of(sub(p, pu))))
            .collect();
        if taken.is_empty() {
            // Chain start: first bond rises 30 degrees, the rest spread evenly.
            return (0..k)
                .map(|i| -PI / 6.0 + i as f64 * 2.0 * PI / k as f64)
                .collect();
        }
        if taken.len() == 1 && self.system_of[u].is_none() {
            let straight = taken[0] + PI;
            let linear = self.g.neighbors(u).any(|(_, b)| self.g.bond(b).kind == BondType::Triple)
                || self
                    .g
                    .neighbors(u)
                    .filter(|&(_, b)| self.g.bond(b).kind == BondType::Double)
                    .count()
                    == 2;
            let t = self.turn[u];
            return match k {
                1 if linear => vec![straight],
                1 => vec![straight + t * PI / 3.0],
                2 => vec![straight + t * PI / 3.0, straight - t * PI / 3.0],
                3 => vec![straight + PI / 2.0, straight, straight - PI / 2.0],
                _ => spread_in_gap(&mut taken, k),
            };
        }
        spread_in_gap(&mut taken, k)
    }

    /// `preferred` if it keeps clear of placed atoms, otherwise the nearby angle with the
    /// most room.
    fn clear_direction(&self, from: V, preferred: f64) -> f64 {
        let room = |angle: f64| {
            let p = add(from, unit_at(angle));
            self.pos
                .iter()
                .flatten()
                .map(|&q| norm(sub(p, q)))
                .fold(f64::INFINITY, f64::min)
        };
        if room(preferred) >= CHAIN_CLEARANCE {
            return preferred;
        }
        let mut best = (room(preferred), preferred);
        for step in 1..12 {
            for sign in [1.0, -1.0] {
                let a = preferred + sign * step as f64 * PI / 12.0;
                let r = room(a);
                if r >= CHAIN_CLEARANCE {
                    return a;
                }
                if r > best.0 {
                    best = (r, a);
                }
            }
        }
        best.1
    }

    /// Local coordinates of every atom of ring system `s`, unit bond length.
    fn system_coords(&self, s: usize) -> Result<Vec<(usize, V)>, LayoutError> {
        let rings = &self.systems[s];
        let n = self.g.atom_count();
        let mut pos: Vec<Option<V>> = vec![None; n];
        let mut done = vec![false; rings.len()];
        let first = (0..rings.len()).max_by_key(|&r| (rings[r].len(), usize::MAX - r)).expect("non-empty");
        let ring = &rings[first];
        let m = ring.len();
        let radius = 0.5 / (PI / m as f64).sin();
        for (i, &a) in ring.iter().enumerate() {
            let angle = PI / 2.0 + PI / m as f64 + 2.0 * PI * i as f64 / m as f64;
            pos[a] = Some(scale(unit_at(angle), radius));
        }
        done[first] = true;
        while let Some(r) = (0..rings.len())
            .filter(|&r| !done[r] && rings[r].iter().any(|&a| pos[a].is_some()))
            .max_by_key(|&r| rings[r].iter().filter(|&&a| pos[a].is_some()).count())
        {
            done[r] = true;
            place_ring(&rings[r], &mut pos, self.g)?;
        }
        Ok(pos
            .into_iter()
            .enumerate()
            .filter_map(|(a, p)| p.map(|p| (a, p)))
            .collect())
    }
}

/// Bisects the widest free sector around an atom into `k` directions.
fn spread_in_gap(taken: &mut [f64], k: usize) -> Vec<f64> {
    taken.sort_by(f64::total_cmp);
    let mut best = (0.0, 0.0);
    for i in 0..taken.len() {
        let from = taken[i];
        let to = if i + 1 < taken.len() {
            taken[i + 1]
        } else {
            taken[0] + 2.0 * PI
        };
        if to - from > best.1 {
            best = (from, to - from);
        }
    }
    (1..=k)
        .map(|i| best.0 + best.1 * i as f64 / (k + 1) as f64)
        .collect()
}

/// Places the unplaced atoms of one ring next to already placed ones (fused or spiro).
fn place_ring(ring: &[usize], pos: &mut [Option<V>], g: &MolGraph) -> Result<(), LayoutError> {
    let m = ring.len();
    let placed: Vec<bool> = ring.iter().map(|&a| pos[a].is_some()).collect();
    let k = placed.iter().filter(|&&p| p).count();
    if k == m {
        return Ok(());
    }
    // Rotate so the placed atoms form the prefix; they must be one contiguous run.
    let start = (0..m)
        .find(|&i| placed[i] && !placed[(i + m - 1) % m])
        .expect("some placed, some not");
    let order: Vec<usize> = (0..m).map(|i| ring[(start + i) % m]).collect();
    if order[..k].iter().any(|&a| pos[a].is_none()) {
        return Err(LayoutError::Bridged(ring.to_vec()));
    }
    let p0 = pos[order[0]].expect("placed");
    let step = 2.0 * PI / m as f64;
    let radius = 0.5 / (PI / m as f64).sin();
    let (center, a0, dir) = if k == 1 {
        // Spiro: grow away from the placed neighbors.
        let away = g
            .neighbor_atoms(order[0])
            .into_iter()
            .filter_map(|v| pos[v].map(|p| sub(p0, p)))
            .fold((0.0, 0.0), add);
        let u = if norm(away) > 1e-9 { scale(away, 1.0 / norm(away)) } else { (1.0, 0.0) };
        let c = add(p0, scale(u, radius));
        (c, angle_of(sub(p0, c)), 1.0)
    } else {
        let p1 = pos[order[1]].expect("placed");
        let mid = scale(add(p0, p1), 0.5);
        let edge = sub(p1, p0);
        let normal = scale((-edge.1, edge.0), 1.0 / norm(edge));
        let apothem = 0.5 / (PI / m as f64).tan();
        let candidates = [add(mid, scale(normal, apothem)), add(mid, scale(normal, -apothem))];
        let score = |c: V| -> f64 {
            if k >= 3 {
                // The polygon must pass through the third placed atom.
                let a = angle_of(sub(p0, c));
                let d = spin_to(c, a, p1);
                let predicted = add(c, scale(unit_at(a + 2.0 * d * step), radius));
                -norm(sub(predicted, pos[order[2]].expect("placed")))
            } else {
                // Fused on one edge: the side away from the rest of the system.
                pos.iter().flatten().map(|&q| norm(sub(c, q))).sum::<f64>()
            }
        };
        let c = if score(candidates[0]) >= score(candidates[1]) {
            candidates[0]
        } else {
            candidates[1]
        };
        let a = angle_of(sub(p0, c));
        (c, a, spin_to(c, a, p1))
    };
    let placed_points: Vec<V> = pos.iter().flatten().copied().collect();
    for (i, &atom) in order.iter().enumerate().skip(k) {
        let p = add(center, scale(unit_at(a0 + dir * step * i as f64), radius));
        if placed_points.iter().any(|&q| norm(sub(p, q)) < RING_CLASH) {
            return Err(LayoutError::Bridged(ring.to_vec()));
        }
        pos[atom] = Some(p);
    }
    Ok(())
}

/// +1 if going from angle `a` to point `p1` around `c` is counterclockwise, else -1.
fn spin_to(c: V, a: f64, p1: V) -> f64 {
    let d = (angle_of(sub(p1, c)) - a).rem_euclid(2.0 * PI);
    if d < PI {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelgraph_core::smiles::parse;

    fn laid(s: &str) -> MolGraph {
        layout(&parse(s).unwrap()).unwrap()
    }

    fn dist(g: &MolGraph, a: usize, b: usize) -> f64 {
        g.atom(a).coords.unwrap().distance(g.atom(b).coords.unwrap())
    }

    fn bond_lengths(g: &MolGraph) -> Vec<f64> {
        g.bonds().iter().map(|b| dist(g, b.begin, b.end)).collect()
    }

    #[test]
    fn two_atoms() {
        let g = laid("CO");
        let d = dist(&g, 0, 1);
        assert!((d - MAX_BOND_LENGTH).abs() < 1e-9 || d <= MAX_BOND_LENGTH);
        for a in g.atoms() {
            let p = a.coords.unwrap();
            assert!((MARGIN..=1.0 - MARGIN).contains(&p.x) && (MARGIN..=1.0 - MARGIN).contains(&p.y));
        }
    }

    #[test]
    fn benzene_is_a_regular_hexagon() {
        let g = laid("c1ccccc1");
        let lengths = bond_lengths(&g);
        let l = lengths[0];
        assert!(lengths.iter().all(|x| (x - l).abs() < 1e-6));
        // Opposite vertices are two bond lengths apart.
        for i in 0..3 {
            assert!((dist(&g, i, i + 3) - 2.0 * l).abs() < 1e-6);
        }
    }

    #[test]
    fn hexane_zigzags() {
        let g = laid("CCCCCC");
        let mut signs = Vec::new();
        for b in g.bonds() {
            let (p, q) = (g.atom(b.begin).coords.unwrap(), g.atom(b.end).coords.unwrap());
            let angle = (q.y - p.y).atan2(q.x - p.x).to_degrees();
            assert!((angle.abs() - 30.0).abs() < 1e-6, "{angle}");
            signs.push(angle.signum());
        }
        assert!(signs.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn fused_and_substituted_systems_have_unit_bonds() {
        for s in [
            "c1ccc2ccccc2c1",
            "CC(=O)Oc1ccccc1C(=O)O",
            "C1CCC2(CC1)CCCC2",
            "c1ccc2c(c1)oc1ccccc12",
            "c1cc2ccc3cccc4ccc(c1)c2c34",
        ] {
            let g = laid(s);
            let lengths = bond_lengths(&g);
            let l = lengths[0];
            for x in &lengths {
                assert!((x - l).abs() / l < 1e-6, "{s}: {lengths:?}");
            }
            for i in 0..g.atom_count() {
                for j in i + 1..g.atom_count() {
                    assert!(dist(&g, i, j) > 0.3 * l, "{s}: atoms {i} and {j} overlap");
                }
            }
        }
    }

    #[test]
    fn bridged_system_is_an_error() {
        let err = layout(&parse("C1CC2CCC1C2").unwrap()).unwrap_err();
        assert!(matches!(err, LayoutError::Bridged(_)));
    }

    #[test]
    fn existing_and_partial_coordinates() {
        let g = laid("CCO");
        assert_eq!(layout(&g).unwrap(), g);
        let mut partial = g.clone();
        partial.atom_mut(1).coords = None;
        assert_eq!(
            layout(&partial).unwrap_err(),
            LayoutError::PartialCoordinates { missing: 1, total: 3 }
        );
    }

    #[test]
    fn disconnected_components_do_not_overlap() {
        let g = laid("[Na+].[Cl-].CCO");
        for i in 0..g.atom_count() {
            for j in i + 1..g.atom_count() {
                assert!(dist(&g, i, j) > 0.05);
            }
        }
    }
}
