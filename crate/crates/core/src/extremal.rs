//! Largest disk windows with at most `k` distinct distances, and the
//! constant-tracking tables around them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::census::invert_k_to_t;
use crate::error::{Error, Result};
use crate::lattice::{s_star, LatticeModel, RationalVec2};
use crate::rational::{to_f64, RatStr, Rational};
use crate::spectrum::distinct_distance_count;
use crate::windows::{disk_window_by_bound, DiskWindow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterChoice {
    /// Center on a lattice point (`z = τ = 0`).
    Lattice,
    /// Center on a deep hole of the lattice.
    DeepHole,
}

impl std::str::FromStr for CenterChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(CenterChoice::Lattice),
            "deephole" | "deep-hole" => Ok(CenterChoice::DeepHole),
            other => Err(Error::parse(format!("unknown center {other:?} (expected lattice or deephole)"))),
        }
    }
}

impl CenterChoice {
    pub fn point(&self, model: &LatticeModel) -> RationalVec2 {
        match self {
            CenterChoice::Lattice => RationalVec2::zero(),
            CenterChoice::DeepHole => model.deep_hole(),
        }
    }
}

/// Largest window found for a target `k`.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremalWitness {
    pub k: usize,
    pub center: CenterChoice,
    pub center_point: [RatStr; 2],
    /// Membership bound `F(den u - num) <= bound`.
    pub bound: i128,
    pub r_sq: RatStr,
    pub n: usize,
    pub k_actual: usize,
    /// `|D|` of the window at the next realizable radius.
    pub k_next: usize,
    pub maximal: bool,
    /// `n / (k sqrt(log k))`.
    pub ratio_n: f64,
    /// `(π/4) S*` from the supplied Bernays estimate.
    pub ratio_pred_a: f64,
    /// `π / (3 C)`.
    pub ratio_pred_b: f64,
    pub bernays_estimate: f64,
    /// Predicted `R^2 = s T / 4` with `T` from the scale inversion, Gram units.
    pub predicted_r_sq: f64,
    #[serde(skip)]
    pub window: Option<DiskWindow>,
}

fn distinct_at(model: &Arc<LatticeModel>, z: &RationalVec2, bound: i128, budget: u64) -> Result<(usize, Option<DiskWindow>)> {
    match disk_window_by_bound(model.clone(), &RationalVec2::zero(), z, bound, budget) {
        Ok(w) => Ok((distinct_distance_count(&w.set)?, Some(w))),
        Err(Error::Precondition(_)) => Ok((0, None)),
        Err(e) => Err(e),
    }
}

/// Monotone bisection on the integer membership bound: `|D(W)|` only grows
/// with the radius, so the largest admissible bound is found exactly.
pub fn construct_for_k(
    model: Arc<LatticeModel>,
    k: usize,
    center: CenterChoice,
    bernays_estimate: f64,
    budget_bytes: u64,
) -> Result<ExtremalWitness> {
    if k < 2 {
        return Err(Error::precondition("k must be at least 2"));
    }
    if !(bernays_estimate > 0.0) {
        return Err(Error::precondition("Bernays estimate must be positive"));
    }
    let z = center.point(&model);
    let (_, den) = z.common_form()?;
    let d2 = (den as f64).powi(2);
    let t_est = if k >= 3 { invert_k_to_t(k as f64, bernays_estimate)?.t } else { 4.0 };
    let guess = ((t_est / 4.0) * d2).max(1.0) as i128;

    let eval = |b: i128| distinct_at(&model, &z, b, budget_bytes).map(|r| r.0);
    let mut lo = guess / 2;
    while lo > 0 && eval(lo)? > k {
        lo /= 2;
    }
    let mut hi = (guess * 2).max(lo + 1);
    while eval(hi)? <= k {
        lo = hi;
        hi *= 2;
    }
    // invariant: D(lo) <= k < D(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid)? <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (k_actual, window) = distinct_at(&model, &z, lo, budget_bytes)?;
    let window = window.ok_or_else(|| Error::precondition("no window with at most k distances is nonempty"))?;
    // Snap to the largest value actually attained.
    let bound = window.points().iter().map(|&u| window.scaled_distance(u)).max().unwrap_or(0);
    let k_next = eval(hi)?;
    let r_sq = &model.scale_s * Rational::new(BigInt::from(bound), BigInt::from(den as i128 * den as i128));
    let n = window.len();
    let kf = k as f64;
    let star = s_star(&model, bernays_estimate)?;
    Ok(ExtremalWitness {
        k,
        center,
        center_point: z.to_strings(),
        bound,
        r_sq: RatStr(r_sq),
        n,
        k_actual,
        k_next,
        maximal: k_actual <= k && k_next > k,
        ratio_n: n as f64 / (kf * kf.ln().sqrt()),
        ratio_pred_a: star.lower_bound_constant(),
        ratio_pred_b: PI / (3.0 * bernays_estimate),
        bernays_estimate,
        predicted_r_sq: to_f64(&model.scale_s) * t_est / 4.0,
        window: Some(window),
    })
}

/// One row of the lower-bound table.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub k: usize,
    pub n: usize,
    pub k_actual: usize,
    pub r_sq: RatStr,
    pub ratio_n: f64,
    pub ratio_pred_a: f64,
    pub ratio_pred_b: f64,
    /// Realized `R^2` at covolume one.
    pub r_sq_unimodular: f64,
    pub predicted_r_sq: f64,
}

pub fn lower_bound_table(
    model: Arc<LatticeModel>,
    ks: &[usize],
    center: CenterChoice,
    bernays_estimate: f64,
    budget_bytes: u64,
) -> Result<Vec<TableRow>> {
    let covolume = model.covolume();
    ks.iter()
        .map(|&k| {
            let w = construct_for_k(model.clone(), k, center, bernays_estimate, budget_bytes)?;
            Ok(TableRow {
                k,
                n: w.n,
                k_actual: w.k_actual,
                r_sq_unimodular: to_f64(&w.r_sq.0) / covolume,
                r_sq: w.r_sq,
                ratio_n: w.ratio_n,
                ratio_pred_a: w.ratio_pred_a,
                ratio_pred_b: w.ratio_pred_b,
                predicted_r_sq: w.predicted_r_sq,
            })
        })
        .collect()
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("k,n,k_actual,R_sq,ratio_n,ratio_pred_a,ratio_pred_b,R_sq_unimodular,R_sq_predicted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.9},{:.9},{:.9},{:.6},{:.6}\n",
            r.k, r.n, r.k_actual, r.r_sq, r.ratio_n, r.ratio_pred_a, r.ratio_pred_b, r.r_sq_unimodular, r.predicted_r_sq
        ));
    }
    out
}

/// The bound `n < M = 2 C1 k log k` next to the largest root of `x = C1 k log x`.
#[derive(Clone, Debug, Serialize)]
pub struct UpperBoundPoint {
    pub k: f64,
    /// `max(2 C1 k log k, 2 C1 k)`.
    pub m_closed: f64,
    /// Largest root of `x = C1 k log x`; absent when `C1 k <= e`.
    pub fixed_point: Option<f64>,
    pub dominates: bool,
}

pub fn upper_bound_curve(ks: &[f64], c1: f64) -> Result<Vec<UpperBoundPoint>> {
    if !(c1 > 0.0) {
        return Err(Error::precondition("C1 must be positive"));
    }
    ks.iter()
        .map(|&k| {
            let a = c1 * k;
            let m_closed = (2.0 * a * k.ln()).max(2.0 * a);
            let fixed_point = if a > std::f64::consts::E {
                // Above the largest root the map x -> a log x decreases toward it.
                let mut x = m_closed.max(a * a.ln() * 4.0).max(a * 2.0);
                let mut converged = false;
                for _ in 0..10_000 {
                    let next = a * x.ln();
                    if (next - x).abs() <= 1e-13 * x {
                        x = next;
                        converged = true;
                        break;
                    }
                    x = next;
                }
                if !converged {
                    return Err(Error::NonConvergence(format!("fixed point of x = {a} log x")));
                }
                Some(x)
            } else {
                None
            };
            Ok(UpperBoundPoint { k, m_closed, fixed_point, dominates: fixed_point.is_none_or(|x| m_closed >= x) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::distance_spectrum;
    use crate::windows::DEFAULT_BUDGET_BYTES;

    fn model(label: &str) -> Arc<LatticeModel> {
        Arc::new(LatticeModel::builtin(label).unwrap())
    }

    /// Largest bound with at most k distances, by linear scan.
    fn scan(m: &Arc<LatticeModel>, z: &RationalVec2, k: usize, upto: i128) -> i128 {
        let mut best = 0;
        for b in 0..=upto {
            if distinct_at(m, z, b, DEFAULT_BUDGET_BYTES).unwrap().0 <= k {
                best = b;
            }
        }
        best
    }

    #[test]
    fn z2_k3() {
        let w = construct_for_k(model("Z2"), 3, CenterChoice::Lattice, 0.76, DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(w.bound, 1);
        assert_eq!(w.n, 5);
        assert!(w.maximal);
        let keys: Vec<u64> = distance_spectrum(&w.window.as_ref().unwrap().set).unwrap().keys().collect();
        assert_eq!(keys, vec![1, 2, 4]);
    }

    #[test]
    fn bisection_matches_scan() {
        for label in ["Z2", "hex"] {
            let m = model(label);
            for center in [CenterChoice::Lattice, CenterChoice::DeepHole] {
                let z = center.point(&m);
                for k in [2usize, 3, 5, 8, 13, 30] {
                    let w = construct_for_k(m.clone(), k, center, 0.7, DEFAULT_BUDGET_BYTES).unwrap();
                    let b = scan(&m, &z, k, w.bound * 2 + 40);
                    let snapped = distinct_at(&m, &z, b, DEFAULT_BUDGET_BYTES).unwrap().1.unwrap();
                    assert_eq!(w.n, snapped.len(), "{label} {center:?} k={k}");
                    assert!(w.k_actual <= k && w.maximal);
                }
            }
        }
    }

    #[test]
    fn upper_curve() {
        let pts = upper_bound_curve(&[1.0, 1e3, 1e4, 10f64.exp(), 1e6], 1.0).unwrap();
        assert!(pts[0].fixed_point.is_none());
        assert_eq!(pts[0].m_closed, 2.0);
        let x = pts[3].fixed_point.unwrap();
        assert!((x - 10f64.exp() * x.ln()).abs() < 1e-6 * x);
        assert!(pts.iter().skip(1).all(|p| p.dominates));
        assert!(pts.windows(2).all(|w| w[0].m_closed < w[1].m_closed));
    }
}
