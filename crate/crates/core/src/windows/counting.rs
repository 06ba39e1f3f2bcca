//! Lattice-point counts in lenses and convex regions against their areas.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::disk::build_disk_window;
use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, RationalVec2};
use crate::rational::{ceil_i128, floor_i128, int, to_f64, Rational};

/// Exact count compared with `area / covolume`.
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub count: u64,
    pub area: f64,
    /// `area / covolume`.
    pub predicted: f64,
    pub perimeter: f64,
    /// `count - predicted`.
    pub residual: f64,
    /// `|residual| / (1 + perimeter)`.
    pub normalized_residual: f64,
}

impl CountReport {
    fn new(count: u64, area: f64, covolume: f64, perimeter: f64) -> CountReport {
        let predicted = area / covolume;
        let residual = count as f64 - predicted;
        CountReport { count, area, predicted, perimeter, residual, normalized_residual: residual.abs() / (1.0 + perimeter) }
    }
}

/// Area of `B(0, ρ) ∩ B(u, ρ)` for `|u| <= 2ρ`.
pub fn lens_area(rho: f64, dist: f64) -> f64 {
    if dist >= 2.0 * rho {
        return 0.0;
    }
    2.0 * rho * rho * (dist / (2.0 * rho)).acos() - dist / 2.0 * (4.0 * rho * rho - dist * dist).sqrt()
}

/// Points of `τ + Λ` in `B(z, ρ) ∩ (B(z, ρ) - u)`; the perimeter slot holds `4πρ`.
pub fn lens_count(
    model: Arc<LatticeModel>,
    tau: &RationalVec2,
    z: &RationalVec2,
    rho_sq: &Rational,
    u: [i64; 2],
    budget_bytes: u64,
) -> Result<CountReport> {
    let rho = to_f64(rho_sq).sqrt();
    let covolume = model.covolume();
    let q = model.norm_sq(u);
    if q > int(4) * rho_sq {
        return Ok(CountReport::new(0, 0.0, covolume, 4.0 * PI * rho));
    }
    let w = build_disk_window(model, tau, z, rho_sq, budget_bytes)?;
    let members: HashSet<[i64; 2]> = w.points().iter().copied().collect();
    let count = w.points().iter().filter(|p| members.contains(&[p[0] + u[0], p[1] + u[1]])).count() as u64;
    Ok(CountReport::new(count, lens_area(rho, to_f64(&q).sqrt()), covolume, 4.0 * PI * rho))
}

/// A bounded convex region, in input lattice coordinates.
#[derive(Clone, Debug)]
pub enum ConvexRegion {
    /// Vertices in order (either orientation); one or two vertices allowed.
    Polygon(Vec<RationalVec2>),
    Disk { z: RationalVec2, r_sq: Rational },
}

fn cross(o: &RationalVec2, a: &RationalVec2, b: &RationalVec2) -> Rational {
    (&a.x - &o.x) * (&b.y - &o.y) - (&a.y - &o.y) * (&b.x - &o.x)
}

fn in_polygon(v: &[RationalVec2], p: &RationalVec2, orientation: &Rational) -> bool {
    if orientation.is_zero() {
        // Degenerate: a point or a segment (collinear vertices).
        let collinear = v.windows(2).all(|w| cross(&w[0], &w[1], p).is_zero()) && v.iter().all(|q| cross(&v[0], q, p).is_zero());
        let within = |f: fn(&RationalVec2) -> &Rational| {
            let lo = v.iter().map(f).min().unwrap();
            let hi = v.iter().map(f).max().unwrap();
            lo <= f(p) && f(p) <= hi
        };
        return collinear && within(|q| &q.x) && within(|q| &q.y);
    }
    (0..v.len()).all(|i| {
        let c = cross(&v[i], &v[(i + 1) % v.len()], p);
        c.is_zero() || c.is_positive() == orientation.is_positive()
    })
}

/// Exact count of `(τ + Λ) ∩ K` (closed) against `area(K) / covolume`.
pub fn convex_count_error(model: Arc<LatticeModel>, tau: &RationalVec2, region: &ConvexRegion, budget_bytes: u64) -> Result<CountReport> {
    match region {
        ConvexRegion::Disk { z, r_sq } => {
            let w = build_disk_window(model.clone(), tau, z, r_sq, budget_bytes)?;
            let r = to_f64(r_sq).sqrt();
            Ok(CountReport::new(w.len() as u64, PI * r * r, model.covolume(), 2.0 * PI * r))
        }
        ConvexRegion::Polygon(v) => {
            if v.is_empty() {
                return Err(Error::precondition("polygon needs at least one vertex"));
            }
            let mut twice_area = Rational::zero();
            for i in 0..v.len() {
                let (a, b) = (&v[i], &v[(i + 1) % v.len()]);
                twice_area += &a.x * &b.y - &a.y * &b.x;
            }
            let lo_x = ceil_i128(&(v.iter().map(|p| &p.x).min().unwrap() - &tau.x))?;
            let hi_x = floor_i128(&(v.iter().map(|p| &p.x).max().unwrap() - &tau.x))?;
            let lo_y = ceil_i128(&(v.iter().map(|p| &p.y).min().unwrap() - &tau.y))?;
            let hi_y = floor_i128(&(v.iter().map(|p| &p.y).max().unwrap() - &tau.y))?;
            let cells = (hi_x - lo_x + 1).max(0) as u128 * (hi_y - lo_y + 1).max(0) as u128;
            if cells > budget_bytes as u128 {
                return Err(Error::Budget { what: format!("polygon scan of {cells} cells"), required: cells, budget: budget_bytes as u128 });
            }
            let mut count = 0u64;
            for y in lo_y..=hi_y {
                for x in lo_x..=hi_x {
                    let p = RationalVec2::new(int(x as i64) + &tau.x, int(y as i64) + &tau.y);
                    if in_polygon(v, &p, &twice_area) {
                        count += 1;
                    }
                }
            }
            let coord_area = to_f64(&twice_area.abs()) / 2.0;
            let perimeter: f64 = if v.len() < 2 {
                0.0
            } else {
                (0..v.len()).map(|i| to_f64(&model.gram.eval_rational(&v[(i + 1) % v.len()].sub(&v[i]))).sqrt()).sum()
            };
            let covolume = model.covolume();
            Ok(CountReport::new(count, coord_area * covolume, covolume, perimeter))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::windows::DEFAULT_BUDGET_BYTES;

    fn z2() -> Arc<LatticeModel> {
        Arc::new(LatticeModel::builtin("Z2").unwrap())
    }

    #[test]
    fn lens_limits() {
        assert!((lens_area(3.0, 0.0) - PI * 9.0).abs() < 1e-12);
        assert_eq!(lens_area(3.0, 6.0), 0.0);
        let o = RationalVec2::zero();
        let full = lens_count(z2(), &o, &o, &int(100), [0, 0], DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(full.count, 317);
        let far = lens_count(z2(), &o, &o, &int(4), [5, 0], DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(far.count, 0);
        let edge = lens_count(z2(), &o, &o, &int(4), [4, 0], DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(edge.area, 0.0);
        assert_eq!(edge.count, 1);
    }

    #[test]
    fn lens_against_box_scan() {
        let o = RationalVec2::zero();
        let rep = lens_count(z2(), &o, &o, &int(100), [10, 0], DEFAULT_BUDGET_BYTES).unwrap();
        let mut want = 0;
        for x in -10i64..=10 {
            for y in -10i64..=10 {
                if x * x + y * y <= 100 && (x + 10) * (x + 10) + y * y <= 100 {
                    want += 1;
                }
            }
        }
        assert_eq!(rep.count, want);
        let area = 200.0 * (0.5f64).acos() - 5.0 * 300f64.sqrt();
        assert!((rep.area - area).abs() < 1e-9);
        assert!(rep.normalized_residual < 2.0);
    }

    #[test]
    fn convex_regions() {
        let o = RationalVec2::zero();
        let sq = ConvexRegion::Polygon(vec![
            RationalVec2::from_ints(0, 0),
            RationalVec2::from_ints(1, 0),
            RationalVec2::from_ints(1, 1),
            RationalVec2::from_ints(0, 1),
        ]);
        let r = convex_count_error(z2(), &o, &sq, DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(r.count, 4);
        assert!(r.residual.abs() <= 4.0);
        let disk = ConvexRegion::Disk { z: o.clone(), r_sq: int(2500) };
        let r = convex_count_error(z2(), &o, &disk, DEFAULT_BUDGET_BYTES).unwrap();
        assert!(r.residual.abs() <= 2.0 * (1.0 + 100.0 * PI));
        let pt = ConvexRegion::Polygon(vec![RationalVec2::new(rat(1, 2), int(0))]);
        assert_eq!(convex_count_error(z2(), &o, &pt, DEFAULT_BUDGET_BYTES).unwrap().count, 0);
        let pt = ConvexRegion::Polygon(vec![RationalVec2::from_ints(3, -2)]);
        let r = convex_count_error(z2(), &o, &pt, DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!((r.count, r.area), (1, 0.0));
        let seg = ConvexRegion::Polygon(vec![RationalVec2::from_ints(0, 0), RationalVec2::from_ints(4, 2)]);
        assert_eq!(convex_count_error(z2(), &o, &seg, DEFAULT_BUDGET_BYTES).unwrap().count, 3);
    }
}
