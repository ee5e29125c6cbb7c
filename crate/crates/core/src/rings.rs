//! Ring membership and smallest-set-of-smallest-rings perception.

use std::collections::VecDeque;

use crate::molgraph::MolGraph;

/// Flags every bond that lies on at least one cycle (i.e. is not a bridge).
pub fn ring_bonds(g: &MolGraph) -> Vec<bool> {
    let n = g.atom_count();
    let mut in_ring = vec![true; g.bond_count()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter it, neighbor cursor)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (u, parent_bond, ref mut cursor)) = stack.last_mut() {
            let nbrs: Vec<(usize, usize)> = g.neighbors(u).collect();
            if *cursor < nbrs.len() {
                let (v, b) = nbrs[*cursor];
                *cursor += 1;
                if Some(b) == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, Some(b), 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let (Some(b), Some(&(p, _, _))) = (parent_bond, stack.last()) {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        in_ring[b] = false;
                    }
                }
            }
        }
    }
    in_ring
}

/// Flags every atom that has at least one ring bond.
pub fn ring_atoms(g: &MolGraph) -> Vec<bool> {
    let rb = ring_bonds(g);
    let mut out = vec![false; g.atom_count()];
    for (b, &r) in rb.iter().enumerate() {
        if r {
            out[g.bond(b).begin] = true;
            out[g.bond(b).end] = true;
        }
    }
    out
}

/// Number of independent cycles: bonds - atoms + components.
pub fn cycle_rank(g: &MolGraph) -> usize {
    (g.bond_count() + g.components().len()).saturating_sub(g.atom_count())
}

/// Smallest set of smallest rings. Each ring is listed as atoms in cyclic order.
///
/// Candidates are the shortest cycles through each ring bond, accepted smallest first
/// when linearly independent (over GF(2)) of the rings already chosen.
pub fn sssr(g: &MolGraph) -> Vec<Vec<usize>> {
    let target = cycle_rank(g);
    if target == 0 {
        return Vec::new();
    }
    let rb = ring_bonds(g);
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for (b, &r) in rb.iter().enumerate() {
        if !r {
            continue;
        }
        let bond = g.bond(b);
        if let Some(path) = shortest_path_avoiding(g, bond.begin, bond.end, b) {
            candidates.push(path);
        }
    }
    candidates.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let words = g.bond_count().div_ceil(64);
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut rings = Vec::new();
    for cycle in candidates {
        let mut vec = vec![0u64; words];
        for i in 0..cycle.len() {
            let a = cycle[i];
            let b = cycle[(i + 1) % cycle.len()];
            let bond = g.bond_between(a, b).expect("cycle follows bonds");
            vec[bond / 64] |= 1 << (bond % 64);
        }
        if reduce(&mut vec, &basis) {
            basis.push(vec);
            rings.push(cycle);
            if rings.len() == target {
                break;
            }
        }
    }
    rings
}

/// Reduces `v` against an echelon basis; returns true (and keeps `v` reduced) if independent.
fn reduce(v: &mut [u64], basis: &[Vec<u64>]) -> bool {
    for row in basis {
        let pivot = leading_bit(row).expect("basis rows are nonzero");
        if v[pivot / 64] & (1 << (pivot % 64)) != 0 {
            for (x, r) in v.iter_mut().zip(row) {
                *x ^= r;
            }
        }
    }
    leading_bit(v).is_some()
}

fn leading_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Atoms of the shortest path from `from` to `to` that does not use bond `skip`, as a cycle
/// starting at `from`.
fn shortest_path_avoiding(g: &MolGraph, from: usize, to: usize, skip: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; g.atom_count()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for (v, b) in g.neighbors(u) {
            if b == skip || prev[v] != usize::MAX {
                continue;
            }
            prev[v] = u;
            queue.push_back(v);
        }
    }
    if prev[to] == usize::MAX {
        return None;
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some(path)
}
