//! Direct isometries between congruent ordered pairs: the `O(n^4)` oracle.
//!
//! In lattice coordinates a rotation preserving the form
//! `F = A x^2 + B x y + C y^2` and taking `d` to `d'` (with `F(d) = F(d')`) is
//!
//! ```text
//! 2F(d) M = [[P - B D, -2 C D], [2 A D, P + B D]]
//! ```
//!
//! where `P = 2A d1 d1' + B (d1 d2' + d2 d1') + 2C d2 d2'` and
//! `D = d1 d2' - d2 d1'`. The translation follows from `g(p) = p'`. Both are
//! kept as integers over the common denominator `2F(d)` and normalized by
//! their gcd, which gives an exact, canonical key.

use std::collections::{HashMap, HashSet};

use num_integer::Integer;
use serde::Serialize;

use super::{distance_spectrum, shift_histogram};
use crate::error::{Error, Result};
use crate::lattice::QuadForm;
use crate::pointset::LatticePointSet;

pub const DEFAULT_ORACLE_CAP: usize = 80;

/// `g(x) = (N x + t) / den`, normalized so that `gcd(N, t, den) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IsometryKey {
    pub n: [[i128; 2]; 2],
    pub t: [i128; 2],
    pub den: i128,
}

impl IsometryKey {
    /// The direct isometry with `g(p) = p2` and `g(q) = q2`, if the pairs are congruent.
    pub fn from_pairs(form: &QuadForm, p: [i64; 2], q: [i64; 2], p2: [i64; 2], q2: [i64; 2]) -> Option<IsometryKey> {
        let d = [(q[0] - p[0]) as i128, (q[1] - p[1]) as i128];
        let e = [(q2[0] - p2[0]) as i128, (q2[1] - p2[1]) as i128];
        let k = form.eval([q[0] - p[0], q[1] - p[1]]);
        if k == 0 || k != form.eval([q2[0] - p2[0], q2[1] - p2[1]]) {
            return None;
        }
        let (a, b, c) = (form.a as i128, form.b as i128, form.c as i128);
        let pp = 2 * a * d[0] * e[0] + b * (d[0] * e[1] + d[1] * e[0]) + 2 * c * d[1] * e[1];
        let dd = d[0] * e[1] - d[1] * e[0];
        let den = 2 * k;
        let n = [[pp - b * dd, -2 * c * dd], [2 * a * dd, pp + b * dd]];
        let np = [n[0][0] * p[0] as i128 + n[0][1] * p[1] as i128, n[1][0] * p[0] as i128 + n[1][1] * p[1] as i128];
        let t = [den * p2[0] as i128 - np[0], den * p2[1] as i128 - np[1]];
        Some(IsometryKey { n, t, den }.normalized())
    }

    fn normalized(self) -> IsometryKey {
        let g = [self.n[0][0], self.n[0][1], self.n[1][0], self.n[1][1], self.t[0], self.t[1]]
            .iter()
            .fold(self.den, |g, &v| g.gcd(&v));
        IsometryKey {
            n: [[self.n[0][0] / g, self.n[0][1] / g], [self.n[1][0] / g, self.n[1][1] / g]],
            t: [self.t[0] / g, self.t[1] / g],
            den: self.den / g,
        }
    }

    /// Image of an integer point, if it is again integral.
    pub fn apply(&self, x: [i64; 2]) -> Option<[i64; 2]> {
        let (x0, x1) = (x[0] as i128, x[1] as i128);
        let y0 = self.n[0][0] * x0 + self.n[0][1] * x1 + self.t[0];
        let y1 = self.n[1][0] * x0 + self.n[1][1] * x1 + self.t[1];
        if y0 % self.den != 0 || y1 % self.den != 0 {
            return None;
        }
        Some([(y0 / self.den) as i64, (y1 / self.den) as i64])
    }

    pub fn is_translation(&self) -> bool {
        self.n == [[self.den, 0], [0, self.den]]
    }

    pub fn is_identity(&self) -> bool {
        self.is_translation() && self.t == [0, 0]
    }
}

/// Isometry counts `r_g = |{x ∈ X : g(x) ∈ X}|` for every `g` with `r_g >= 2`.
#[derive(Clone, Debug, Serialize)]
pub struct IsometrySpectrum {
    pub n: usize,
    /// `Σ m_t^2` from the distance spectrum.
    pub q_ord: u128,
    /// `r_id (r_id - 1) = n (n - 1)`.
    pub identity_term: u128,
    /// Nontrivial translations: count, `Σ r_g (r_g - 1)`, `Σ r_g^2`.
    pub translation_count: usize,
    pub translation_pair_sum: u128,
    pub translation_sq_sum: u128,
    /// Non-translations: count, `Σ r_g (r_g - 1)`, `Σ r_g^2`.
    pub rotation_count: usize,
    pub rotation_pair_sum: u128,
    pub rotation_sq_sum: u128,
    /// `Σ_g r_g` over all of `𝒢`, identity included.
    pub r_sum: u128,
    /// Largest number of isometries in `𝒢` taking one given point to another.
    pub max_isometries_per_pair: u64,
    #[serde(skip)]
    pub counts: HashMap<IsometryKey, u64>,
}

impl IsometrySpectrum {
    /// `Σ_g r_g (r_g - 1)` over all of `𝒢`.
    pub fn quadruple_total(&self) -> u128 {
        self.identity_term + self.translation_pair_sum + self.rotation_pair_sum
    }

    /// The quadruple identity `Q_ord = Σ_g r_g (r_g - 1)`.
    pub fn identity_holds(&self) -> bool {
        self.quadruple_total() == self.q_ord
    }
}

/// Enumerates every isometry determined by two congruent ordered pairs and
/// counts its incidences directly. Refuses inputs above `cap` points.
pub fn isometry_spectrum(x: &LatticePointSet, cap: usize) -> Result<IsometrySpectrum> {
    let n = x.len();
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    if n < 2 {
        return Err(Error::precondition("isometry spectrum needs at least two points"));
    }
    let form = x.model().input_form;
    let pts = x.points();
    let mut by_key: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, q) in pts.iter().enumerate() {
            if i != j {
                by_key.entry(form.key([q[0] - p[0], q[1] - p[1]])).or_default().push((i, j));
            }
        }
    }
    let mut group: HashSet<IsometryKey> = HashSet::new();
    for pairs in by_key.values() {
        for &(i, j) in pairs {
            for &(i2, j2) in pairs {
                let g = IsometryKey::from_pairs(&form, pts[i], pts[j], pts[i2], pts[j2])
                    .ok_or(Error::Overflow("isometry construction"))?;
                group.insert(g);
            }
        }
    }

    let members: HashMap<[i64; 2], usize> = pts.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut per_pair = vec![0u64; n * n];
    let mut counts = HashMap::with_capacity(group.len());
    let mut out = IsometrySpectrum {
        n,
        q_ord: distance_spectrum(x)?.q_ord().value,
        identity_term: 0,
        translation_count: 0,
        translation_pair_sum: 0,
        translation_sq_sum: 0,
        rotation_count: 0,
        rotation_pair_sum: 0,
        rotation_sq_sum: 0,
        r_sum: 0,
        max_isometries_per_pair: 0,
        counts: HashMap::new(),
    };
    for g in group {
        let mut r = 0u64;
        for (i, p) in pts.iter().enumerate() {
            if let Some(j) = g.apply(*p).and_then(|y| members.get(&y)) {
                r += 1;
                per_pair[i * n + j] += 1;
            }
        }
        let r128 = r as u128;
        out.r_sum += r128;
        if g.is_identity() {
            out.identity_term = r128 * (r128 - 1);
        } else if g.is_translation() {
            out.translation_count += 1;
            out.translation_pair_sum += r128 * (r128 - 1);
            out.translation_sq_sum += r128 * r128;
        } else {
            out.rotation_count += 1;
            out.rotation_pair_sum += r128 * (r128 - 1);
            out.rotation_sq_sum += r128 * r128;
        }
        counts.insert(g, r);
    }
    out.max_isometries_per_pair = per_pair.into_iter().max().unwrap_or(0);
    out.counts = counts;
    Ok(out)
}

/// `Σ_{v != 0} r(v) (r(v) - 1)`, the translation side of the identity.
pub fn translation_pair_sum_from_shifts(x: &LatticePointSet) -> u128 {
    shift_histogram(x).iter().map(|(_, r)| (r as u128) * (r as u128 - 1)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeModel;
    use std::sync::Arc;

    fn set(label: &str, pts: Vec<[i64; 2]>) -> LatticePointSet {
        LatticePointSet::from_points(Arc::new(LatticeModel::builtin(label).unwrap()), pts).unwrap()
    }

    #[test]
    fn two_points() {
        let s = isometry_spectrum(&set("Z2", vec![[0, 0], [2, 1]]), 80).unwrap();
        assert_eq!(s.q_ord, 4);
        assert!(s.identity_holds());
        // identity and the half turn swapping the points
        assert_eq!(s.rotation_count, 1);
        assert_eq!(s.translation_count, 0);
    }

    #[test]
    fn unit_square() {
        let s = isometry_spectrum(&set("Z2", vec![[0, 0], [1, 0], [0, 1], [1, 1]]), 80).unwrap();
        assert_eq!(s.q_ord, 80);
        assert_eq!(s.quadruple_total(), 80);
    }

    #[test]
    fn rotation_maps_pairs() {
        let f = QuadForm { a: 1, b: 1, c: 1 };
        // 60 degree rotation about the origin on the hexagonal lattice
        let g = IsometryKey::from_pairs(&f, [0, 0], [1, 0], [0, 0], [0, 1]).unwrap();
        assert_eq!(g.apply([1, 0]), Some([0, 1]));
        assert_eq!(g.apply([0, 1]), Some([-1, 1]));
        assert!(!g.is_translation());
        let t = IsometryKey::from_pairs(&f, [0, 0], [1, 0], [3, 2], [4, 2]).unwrap();
        assert!(t.is_translation());
        assert_eq!(t.apply([5, 5]), Some([8, 7]));
    }

    #[test]
    fn grid_translation_part() {
        let pts: Vec<[i64; 2]> = (0..4).flat_map(|a| (0..4).map(move |b| [a, b])).collect();
        let x = set("Z2", pts);
        let s = isometry_spectrum(&x, 80).unwrap();
        assert!(s.identity_holds());
        assert_eq!(s.translation_pair_sum, translation_pair_sum_from_shifts(&x));
        let h = shift_histogram(&x);
        let singles = h.iter().filter(|(_, r)| *r == 1).count() as u128;
        assert_eq!(s.translation_sq_sum + singles, h.energy().energy_offdiagonal);
    }

    #[test]
    fn cap_is_enforced() {
        let pts: Vec<[i64; 2]> = (0..9).flat_map(|a| (0..9).map(move |b| [a, b])).collect();
        assert!(matches!(isometry_spectrum(&set("Z2", pts), 80), Err(Error::OracleCap { n: 81, cap: 80 })));
    }
}
