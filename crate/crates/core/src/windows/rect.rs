//! Λ-rectangles `{a0 + i v1 + j v2 : 0 <= i < L1, 0 <= j < L2}` in `(v1, v2)`
//! coordinates, and the rectangle toolkit.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LambdaRectangle {
    pub a0: [i64; 2],
    pub l1: u64,
    pub l2: u64,
}

impl LambdaRectangle {
    pub fn new(a0: [i64; 2], l1: u64, l2: u64) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::precondition("rectangle sides must be positive"));
        }
        Ok(LambdaRectangle { a0, l1, l2 })
    }

    /// Smallest rectangle containing the points.
    pub fn bounding(points: &[[i64; 2]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::precondition("bounding rectangle of an empty set"));
        }
        let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
        for p in points {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        LambdaRectangle::new(lo, (hi[0] - lo[0] + 1) as u64, (hi[1] - lo[1] + 1) as u64)
    }

    pub fn is_proper(&self) -> bool {
        self.l1 >= 2 && self.l2 >= 2
    }

    pub fn size(&self) -> u128 {
        self.l1 as u128 * self.l2 as u128
    }

    pub fn contains(&self, p: [i64; 2]) -> bool {
        let (i, j) = (p[0] - self.a0[0], p[1] - self.a0[1]);
        i >= 0 && j >= 0 && (i as u64) < self.l1 && (j as u64) < self.l2
    }

    pub fn points(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        (0..self.l2 as i64).flat_map(move |j| (0..self.l1 as i64).map(move |i| [self.a0[0] + i, self.a0[1] + j]))
    }

    /// Same cells with the two axes exchanged.
    pub fn transposed(&self) -> LambdaRectangle {
        LambdaRectangle { a0: [self.a0[1], self.a0[0]], l1: self.l2, l2: self.l1 }
    }
}

/// `Σ_{|d| < L} (L - |d|)^2 = (2L^3 + L) / 3`.
fn line_energy(l: u64) -> u128 {
    let l = l as u128;
    (2 * l * l * l + l) / 3
}

/// Additive energy of a full `L1 x L2` rectangle, diagonal included.
pub fn rect_energy_exact(l1: u64, l2: u64) -> u128 {
    line_energy(l1) * line_energy(l2)
}

/// `r_W(u) = max(0, L1 - |u1|) * max(0, L2 - |u2|)`.
pub fn rect_rep_count(l1: u64, l2: u64, u1: i64, u2: i64) -> u128 {
    let side = |l: u64, u: i64| (l as i128 - u.unsigned_abs() as i128).max(0) as u128;
    side(l1, u1) * side(l2, u2)
}

/// Best shifts along each axis of a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyShifts {
    pub s: u64,
    pub eps1: i8,
    /// `|A ∩ (A + ε1 s v1)|`.
    pub overlap1: u64,
    pub t: u64,
    pub eps2: i8,
    pub overlap2: u64,
    pub a_size: u64,
    /// `overlap >= max(0, (β L - 1) / (2 (L - 1))) |A|` for each axis, `β = |A| / |P|`.
    pub bound1_holds: bool,
    pub bound2_holds: bool,
}

/// `overlap * 2 (L - 1) * M >= (|A| - M) |A|`, with `M` the other side.
fn averaging_bound_holds(overlap: u64, a: u64, l: u64, other: u64) -> bool {
    let lhs = overlap as i128 * 2 * (l as i128 - 1) * other as i128;
    let rhs = (a as i128 - other as i128) * a as i128;
    lhs >= rhs.max(0)
}

/// Scans every axis shift and returns the argmax per axis; ties go to the
/// smallest `(s, sign)` with `-1 < +1`.
pub fn find_heavy_shifts(a: &[[i64; 2]], rect: &LambdaRectangle) -> Result<HeavyShifts> {
    if a.is_empty() || !rect.is_proper() {
        return Err(Error::precondition("need a nonempty set inside a proper rectangle"));
    }
    if let Some(p) = a.iter().find(|p| !rect.contains(**p)) {
        return Err(Error::precondition(format!("point {p:?} lies outside the rectangle")));
    }
    let set: HashSet<[i64; 2]> = a.iter().copied().collect();
    let overlap = |v: [i64; 2]| a.iter().filter(|p| set.contains(&[p[0] - v[0], p[1] - v[1]])).count() as u64;
    let best = |axis: usize, len: u64| -> (u64, i8, u64) {
        let mut best = (1, -1i8, 0u64);
        let mut first = true;
        for s in 1..len {
            for eps in [-1i8, 1] {
                let mut v = [0i64; 2];
                v[axis] = eps as i64 * s as i64;
                let o = overlap(v);
                if first || o > best.2 {
                    best = (s, eps, o);
                    first = false;
                }
            }
        }
        best
    };
    let (s, eps1, overlap1) = best(0, rect.l1);
    let (t, eps2, overlap2) = best(1, rect.l2);
    let n = set.len() as u64;
    Ok(HeavyShifts {
        s,
        eps1,
        overlap1,
        t,
        eps2,
        overlap2,
        a_size: n,
        bound1_holds: averaging_bound_holds(overlap1, n, rect.l1, rect.l2),
        bound2_holds: averaging_bound_holds(overlap2, n, rect.l2, rect.l1),
    })
}

/// An `L2 x L2` sub-window of a long rectangle holding at least half the average density.
#[derive(Clone, Debug, Serialize)]
pub struct SquareWindow {
    pub window: LambdaRectangle,
    /// `|A ∩ W|`.
    pub count: u64,
    pub density: f64,
    /// `|A ∩ W| / |W| >= β / 2`, checked exactly.
    pub guarantee_holds: bool,
    /// Whether the best cyclic window wrapped around.
    pub wrapped: bool,
}

/// Cyclic-window averaging over column sums, as in the density argument.
pub fn extract_square_window(a: &[[i64; 2]], rect: &LambdaRectangle) -> Result<SquareWindow> {
    if rect.l1 < rect.l2 || rect.l2 < 2 {
        return Err(Error::precondition("need L1 >= L2 >= 2"));
    }
    if let Some(p) = a.iter().find(|p| !rect.contains(**p)) {
        return Err(Error::precondition(format!("point {p:?} lies outside the rectangle")));
    }
    let (l1, l2) = (rect.l1 as usize, rect.l2 as usize);
    let mut cols = vec![0u64; l1];
    for p in a {
        cols[(p[0] - rect.a0[0]) as usize] += 1;
    }
    let block = |start: usize| (0..l2).map(|j| cols[(start + j) % l1]).sum::<u64>();
    let mut best = (0usize, block(0));
    let mut cur = best.1;
    for s in 1..l1 {
        cur = cur - cols[s - 1] + cols[(s + l2 - 1) % l1];
        if cur > best.1 {
            best = (s, cur);
        }
    }
    let wrapped = best.0 + l2 > l1;
    let (start, count) = if wrapped {
        let prefix = block(0);
        let suffix = block(l1 - l2);
        if suffix > prefix {
            (l1 - l2, suffix)
        } else {
            (0, prefix)
        }
    } else {
        best
    };
    let window = LambdaRectangle { a0: [rect.a0[0] + start as i64, rect.a0[1]], l1: rect.l2, l2: rect.l2 };
    let total = a.len() as u128;
    Ok(SquareWindow {
        window,
        count,
        density: count as f64 / (l2 * l2) as f64,
        guarantee_holds: 2 * count as u128 * l1 as u128 >= total * l2 as u128,
        wrapped,
    })
}

/// Rectangle containing every translate `t + P`, `t ∈ T`.
#[derive(Clone, Debug, Serialize)]
pub struct GapHull {
    pub hull: LambdaRectangle,
    pub delta_alpha: u64,
    pub delta_gamma: u64,
}

impl GapHull {
    /// `|P★| = |P| + Δα L2 + Δγ L1 + Δα Δγ`.
    pub fn size_identity_holds(&self, p: &LambdaRectangle) -> bool {
        let (da, dg) = (self.delta_alpha as u128, self.delta_gamma as u128);
        self.hull.size() == p.size() + da * p.l2 as u128 + dg * p.l1 as u128 + da * dg
    }

    /// Exhaustive membership of every translate.
    pub fn contains_translates(&self, p: &LambdaRectangle, t: &[[i64; 2]]) -> bool {
        t.iter().all(|v| p.points().all(|q| self.hull.contains([q[0] + v[0], q[1] + v[1]])))
    }
}

pub fn gap_hull(p: &LambdaRectangle, t: &[[i64; 2]]) -> Result<GapHull> {
    if t.is_empty() {
        return Err(Error::precondition("translate set must be nonempty"));
    }
    let lo = [0, 1].map(|i| t.iter().map(|v| v[i]).min().unwrap());
    let hi = [0, 1].map(|i| t.iter().map(|v| v[i]).max().unwrap());
    let (da, dg) = ((hi[0] - lo[0]) as u64, (hi[1] - lo[1]) as u64);
    Ok(GapHull {
        hull: LambdaRectangle { a0: [p.a0[0] + lo[0], p.a0[1] + lo[1]], l1: p.l1 + da, l2: p.l2 + dg },
        delta_alpha: da,
        delta_gamma: dg,
    })
}
