//! Partition of a lattice set by coordinate parity.

use serde::Serialize;

use crate::pointset::LatticePointSet;

/// Buckets `X_j = X ∩ (c_j + 2Λ)`, indexed by `(u1 mod 2) + 2 (u2 mod 2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueDecomposition {
    pub buckets: [Vec<[i64; 2]>; 4],
}

impl ResidueDecomposition {
    pub fn sizes(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|j| self.buckets[j].len())
    }

    pub fn total(&self) -> usize {
        self.sizes().iter().sum()
    }

    pub fn max_size(&self) -> usize {
        self.sizes().into_iter().max().unwrap_or(0)
    }

    pub fn nonempty(&self) -> usize {
        self.sizes().iter().filter(|&&m| m > 0).count()
    }
}

pub fn residue_index(p: [i64; 2]) -> usize {
    (p[0].rem_euclid(2) + 2 * p[1].rem_euclid(2)) as usize
}

pub fn residue_decompose_coords(points: &[[i64; 2]]) -> ResidueDecomposition {
    let mut buckets: [Vec<[i64; 2]>; 4] = Default::default();
    for &p in points {
        buckets[residue_index(p)].push(p);
    }
    ResidueDecomposition { buckets }
}

pub fn residue_decompose(x: &LatticePointSet) -> ResidueDecomposition {
    residue_decompose_coords(x.points())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(l: i64) -> Vec<[i64; 2]> {
        (0..l).flat_map(|a| (0..l).map(move |b| [a, b])).collect()
    }

    #[test]
    fn small_grids() {
        assert_eq!(residue_decompose_coords(&grid(2)).sizes(), [1, 1, 1, 1]);
        let mut s = residue_decompose_coords(&grid(3)).sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(s, [4, 2, 2, 1]);
        let even = residue_decompose_coords(&[[0, 0], [2, -4], [-6, 8]]);
        assert_eq!(even.nonempty(), 1);
        assert_eq!(even.max_size(), 3);
    }

    #[test]
    fn negative_coordinates() {
        assert_eq!(residue_index([-1, -1]), 3);
        assert_eq!(residue_index([-2, 1]), 2);
    }
}
