//! Lines spanned by a point set and their occupancies.

use std::collections::HashMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::half_plane;

/// A line through lattice points: primitive direction in the upper half
/// plane plus the integer anchor `dir.y * x - dir.x * y`, constant along it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineKey {
    pub dir: [i64; 2],
    pub anchor: i128,
}

impl LineKey {
    pub fn through(p: [i64; 2], dir: [i64; 2]) -> LineKey {
        LineKey { dir, anchor: dir[1] as i128 * p[0] as i128 - dir[0] as i128 * p[1] as i128 }
    }

    pub fn contains(&self, p: [i64; 2]) -> bool {
        LineKey::through(p, self.dir).anchor == self.anchor
    }
}

/// Primitive representative of the direction of `v != 0`, in the upper half plane.
pub fn primitive_direction(v: [i64; 2]) -> [i64; 2] {
    let g = v[0].gcd(&v[1]);
    half_plane([v[0] / g, v[1] / g])
}

/// Occupancy `s_ℓ` of every line containing at least two points.
#[derive(Clone, Debug)]
pub struct LineHistogram {
    n: usize,
    lines: HashMap<LineKey, u64>,
}

impl LineHistogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn get(&self, key: &LineKey) -> u64 {
        self.lines.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LineKey, u64)> {
        self.lines.iter().map(|(k, s)| (k, *s))
    }

    /// Most populated line; ties go to the smallest key.
    pub fn heaviest(&self) -> Option<(LineKey, u64)> {
        self.lines.iter().map(|(k, s)| (*k, *s)).max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    /// `Σ_ℓ C(s_ℓ, 2)`.
    pub fn pair_total(&self) -> u128 {
        self.lines.values().map(|&s| (s as u128) * (s as u128 - 1) / 2).sum()
    }

    /// Whether `Σ_ℓ C(s_ℓ, 2) = C(n, 2)`.
    pub fn identity_holds(&self) -> bool {
        let n = self.n as u128;
        self.pair_total() == n * n.saturating_sub(1) / 2
    }

    /// `Σ s_ℓ (s_ℓ - 1)` over lines parallel to `dir`.
    pub fn directional_mass(&self, dir: [i64; 2]) -> u128 {
        let d = primitive_direction(dir);
        self.lines.iter().filter(|(k, _)| k.dir == d).map(|(_, &s)| (s as u128) * (s as u128 - 1)).sum()
    }
}

/// Groups the other points by direction as seen from each point.
///
/// A line with `s` points shows up from each of its members with `s - 1`
/// companions, so `s` is read off locally and the total pair count is left
/// as an independent check.
pub fn line_histogram_of_coords(points: &[[i64; 2]]) -> LineHistogram {
    let lines = (0..points.len())
        .into_par_iter()
        .fold(HashMap::new, |mut acc: HashMap<LineKey, u64>, i| {
            let p = points[i];
            let mut dirs: HashMap<[i64; 2], u64> = HashMap::new();
            for (j, q) in points.iter().enumerate() {
                if j != i {
                    *dirs.entry(primitive_direction([q[0] - p[0], q[1] - p[1]])).or_insert(0) += 1;
                }
            }
            for (d, c) in dirs {
                acc.entry(LineKey::through(p, d)).or_insert(c + 1);
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return b.into_iter().chain(a).collect();
            }
            a.extend(b);
            a
        });
    LineHistogram { n: points.len(), lines }
}

pub fn line_histogram(x: &crate::pointset::LatticePointSet) -> LineHistogram {
    line_histogram_of_coords(x.points())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_triple_is_one_line() {
        let h = line_histogram_of_coords(&[[0, 0], [1, 0], [2, 0]]);
        assert_eq!(h.len(), 1);
        assert_eq!(h.heaviest().unwrap().1, 3);
        assert!(h.identity_holds());
    }

    #[test]
    fn unit_square_has_six_lines() {
        let h = line_histogram_of_coords(&[[0, 0], [1, 0], [0, 1], [1, 1]]);
        assert_eq!(h.len(), 6);
        assert!(h.iter().all(|(_, s)| s == 2));
        assert!(h.identity_holds());
        assert_eq!(h.directional_mass([1, 0]), 4);
        assert_eq!(h.directional_mass([-2, 0]), 4);
    }

    #[test]
    fn general_position() {
        let pts = [[0, 0], [1, 3], [4, 1], [7, 9], [2, 11]];
        let h = line_histogram_of_coords(&pts);
        assert_eq!(h.len(), 10);
        assert!(h.identity_holds());
    }

    #[test]
    fn line_membership() {
        let k = LineKey::through([1, 1], primitive_direction([2, 4]));
        assert_eq!(k.dir, [1, 2]);
        assert!(k.contains([2, 3]));
        assert!(!k.contains([2, 2]));
    }
}
