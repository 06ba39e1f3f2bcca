//! Top-cap mass split and quantile localization.

use serde::Serialize;

use crate::rational::isqrt_u128;
use crate::spectrum::DistanceSpectrum;

/// Mass of the `L` largest keys against `sqrt(Q_ord L)`.
#[derive(Clone, Debug, Serialize)]
pub struct TopCap {
    pub l: usize,
    pub top_mass: u64,
    /// `floor(sqrt(Q_ord L))`.
    pub bound_floor: u128,
    pub bottom_mass: u64,
    /// `top_mass^2 <= Q_ord L`, exactly.
    pub holds: bool,
}

/// `L = ⌊θ k⌋`.
pub fn top_cap_len(k: usize, theta: f64) -> usize {
    if theta <= 0.0 {
        return 0;
    }
    let x = theta * k as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * (1.0 + x.abs()) {
        r as usize
    } else {
        x.floor() as usize
    }
    .min(k)
}

pub fn top_cap_split(spec: &DistanceSpectrum, l: usize) -> TopCap {
    let l = l.min(spec.k());
    let top_mass: u64 = spec.entries.iter().rev().take(l).map(|e| e.m).sum();
    let q = spec.q_ord().value;
    let total = spec.total_mass();
    TopCap {
        l,
        top_mass,
        bound_floor: isqrt_u128(q * l as u128),
        bottom_mass: total - top_mass,
        holds: (top_mass as u128) * (top_mass as u128) <= q * l as u128,
    }
}

/// A point whose closed ball of key radius `t★` holds the most points.
#[derive(Clone, Debug, Serialize)]
pub enum Localization {
    Found { z_index: usize, z: [i64; 2], count: usize },
    /// Pair mass at keys `<= t★` falls short of `(1-η) n (n-1)` by `deficit`.
    Fail { deficit: f64 },
}

/// Ordered pairs at key `<= t★` compared with `(1-η) n (n-1)`.
pub fn localization_deficit(spec: &DistanceSpectrum, t_star: u64, eta: f64) -> f64 {
    let n = spec.n as f64;
    (1.0 - eta) * n * (n - 1.0) - spec.mass_at_most(t_star) as f64
}

/// Closed-ball counts around every point; the first maximizer wins.
pub fn ball_counts(points: &[[i64; 2]], key: impl Fn([i64; 2]) -> u64 + Sync, t_star: u64) -> Vec<usize> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|z| points.iter().filter(|p| key([p[0] - z[0], p[1] - z[1]]) <= t_star).count())
        .collect()
}

pub fn localize(
    points: &[[i64; 2]],
    spec: &DistanceSpectrum,
    key: impl Fn([i64; 2]) -> u64 + Sync,
    t_star: u64,
    eta: f64,
) -> Localization {
    let deficit = localization_deficit(spec, t_star, eta);
    if deficit > 0.0 {
        return Localization::Fail { deficit };
    }
    let counts = ball_counts(points, key, t_star);
    let (mut best, mut z_index) = (0, 0);
    for (i, &c) in counts.iter().enumerate() {
        if c > best {
            best = c;
            z_index = i;
        }
    }
    Localization::Found { z_index, z: points[z_index], count: best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::QuadForm;
    use crate::spectrum::spectrum_of_coords;

    const Z2: QuadForm = QuadForm { a: 1, b: 0, c: 1 };

    #[test]
    fn cap_edges() {
        let sq = spectrum_of_coords(&[[0, 0], [1, 0], [0, 1], [1, 1]], &Z2).unwrap();
        let c = top_cap_split(&sq, 0);
        assert_eq!((c.top_mass, c.bound_floor), (0, 0));
        let c = top_cap_split(&sq, 1);
        assert_eq!(c.top_mass, 4);
        assert_eq!(c.bound_floor, 8);
        assert!(c.holds);
        assert_eq!(c.bottom_mass, 8);
        assert_eq!(top_cap_len(10, 0.3), 3);
    }

    #[test]
    fn complete_and_failing() {
        let pts = [[0, 0], [1, 0], [0, 1], [1, 1]];
        let sq = spectrum_of_coords(&pts, &Z2).unwrap();
        match localize(&pts, &sq, |v| Z2.key(v), 2, 0.25) {
            Localization::Found { count, z_index, .. } => assert_eq!((count, z_index), (4, 0)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(localize(&pts, &sq, |v| Z2.key(v), 1, 0.25), Localization::Fail { deficit } if deficit > 0.0));
    }

    #[test]
    fn barbell() {
        // Two tight clusters of unequal size far apart.
        let mut pts: Vec<[i64; 2]> = (0..5).flat_map(|a| (0..5).map(move |b| [a, b])).collect();
        pts.extend((0..3).map(|a| [1000 + a, 0]));
        let spec = spectrum_of_coords(&pts, &Z2).unwrap();
        let t_star = 32;
        let eta = 0.25;
        assert!(localization_deficit(&spec, t_star, eta) <= 0.0);
        match localize(&pts, &spec, |v| Z2.key(v), t_star, eta) {
            Localization::Found { count, .. } => assert!(count as f64 >= 0.75 * pts.len() as f64),
            other => panic!("{other:?}"),
        }
    }
}
