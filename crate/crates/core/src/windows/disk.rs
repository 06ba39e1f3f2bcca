//! Disk windows `(τ + Λ) ∩ B(z, R)` and their certificates.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, QuadForm, RationalVec2};
use crate::pointset::LatticePointSet;
use crate::rational::{floor_i128, floor_sq_root_diff_over, int, isqrt_u128, le_sq_root_diff, to_f64, RatStr, Rational};
use crate::spectrum::{difference_support, shift_histogram_of_coords};

pub const DEFAULT_BUDGET_BYTES: u64 = 4 << 30;

const BYTES_PER_POINT: u128 = 16;

/// Integer points `u` with `F(den * u - num) <= bound`, sorted by `(y, x)`.
pub(crate) fn ellipse_points(form: &QuadForm, num: [i64; 2], den: i64, bound: i128) -> Vec<[i64; 2]> {
    if bound < 0 {
        return Vec::new();
    }
    let (a, b, c) = (form.a as i128, form.b as i128, form.c as i128);
    let disc = form.discriminant_abs();
    let den = den as i128;
    let (nx, ny) = (num[0] as i128, num[1] as i128);
    let big_y = isqrt_u128((4 * a * bound / disc) as u128) as i128;
    let y_lo = (ny - big_y).div_euclid(den) + 1;
    let y_hi = (ny + big_y).div_euclid(den);
    let eval = |x: i128, y: i128| -> i128 {
        let (xx, yy) = (den * x - nx, den * y - ny);
        a * xx * xx + b * xx * yy + c * yy * yy
    };
    let rows: Vec<Vec<[i64; 2]>> = ((y_lo - 1)..=y_hi)
        .into_par_iter()
        .map(|y| {
            let yy = den * y - ny;
            // Real minimizer in x; the nearest integer minimizes the row.
            let xm_real = (-(b * yy) as f64 / (2 * a) as f64 + nx as f64) / den as f64;
            let mut xm = xm_real.round() as i128;
            for cand in [xm - 1, xm + 1] {
                if eval(cand, y) < eval(xm, y) {
                    xm = cand;
                }
            }
            if eval(xm, y) > bound {
                return Vec::new();
            }
            let d = (4 * a * bound - disc * yy * yy) as f64;
            let half = d.max(0.0).sqrt() / (2 * a) as f64 / den as f64;
            let mut lo = (xm_real - half).ceil() as i128;
            let mut hi = (xm_real + half).floor() as i128;
            lo = lo.min(xm);
            hi = hi.max(xm);
            while eval(lo - 1, y) <= bound {
                lo -= 1;
            }
            while eval(lo, y) > bound {
                lo += 1;
            }
            while eval(hi + 1, y) <= bound {
                hi += 1;
            }
            while eval(hi, y) > bound {
                hi -= 1;
            }
            (lo..=hi).map(|x| [x as i64, y as i64]).collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// `(τ + Λ) ∩ B(z, R)` with exact closed-ball membership.
#[derive(Clone, Debug)]
pub struct DiskWindow {
    pub center: RationalVec2,
    pub r_sq: Rational,
    /// `z - τ = center_num / den` in input coordinates.
    pub center_num: [i64; 2],
    pub den: i64,
    /// Membership is `F(den * u - center_num) <= bound`.
    pub bound: i128,
    pub set: LatticePointSet,
}

impl DiskWindow {
    pub fn model(&self) -> &LatticeModel {
        self.set.model()
    }

    pub fn points(&self) -> &[[i64; 2]] {
        self.set.points()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// `den^2 * Q(u + τ - z) / s` as an integer.
    pub fn scaled_distance(&self, u: [i64; 2]) -> i128 {
        let f = self.model().input_form;
        let d = self.den as i128;
        let (x, y) = (d * u[0] as i128 - self.center_num[0] as i128, d * u[1] as i128 - self.center_num[1] as i128);
        f.a as i128 * x * x + f.b as i128 * x * y + f.c as i128 * y * y
    }

    /// Exact `Q(u + τ - z)`.
    pub fn distance_sq(&self, u: [i64; 2]) -> Rational {
        let m = self.model();
        Rational::new(BigInt::from(self.scaled_distance(u)), BigInt::from(self.den as i128 * self.den as i128)) * &m.scale_s
    }

    pub fn radius(&self) -> f64 {
        to_f64(&self.r_sq).sqrt()
    }
}

/// Predicted number of lattice points of an ellipse `F(den u - num) <= bound`.
fn predicted_count(form: &QuadForm, den: i64, bound: i128) -> u128 {
    let disc = form.discriminant_abs() as f64;
    let area = 2.0 * PI * bound.max(0) as f64 / (disc.sqrt() * (den as f64).powi(2));
    let r = area.sqrt();
    (area + 8.0 * r + 8.0).ceil() as u128
}

/// Window with membership bound `F(den u - num) <= bound` given directly.
pub fn disk_window_by_bound(
    model: Arc<LatticeModel>,
    tau: &RationalVec2,
    z: &RationalVec2,
    bound: i128,
    budget_bytes: u64,
) -> Result<DiskWindow> {
    let (num, den) = z.sub(tau).common_form()?;
    let predicted = predicted_count(&model.input_form, den, bound);
    if predicted * BYTES_PER_POINT > budget_bytes as u128 {
        return Err(Error::Budget {
            what: format!("disk window of about {predicted} points"),
            required: predicted * BYTES_PER_POINT,
            budget: budget_bytes as u128,
        });
    }
    let points = ellipse_points(&model.input_form, num, den, bound);
    if points.is_empty() {
        return Err(Error::precondition("disk window contains no lattice point"));
    }
    let r_sq = &model.scale_s * Rational::new(BigInt::from(bound), BigInt::from(den as i128 * den as i128));
    let set = LatticePointSet::from_unique(model, tau.clone(), points);
    Ok(DiskWindow { center: z.clone(), r_sq, center_num: num, den, bound, set })
}

/// `(τ + Λ) ∩ B(z, R)` with `R^2 = r_sq` in the units of the Gram matrix.
pub fn build_disk_window(
    model: Arc<LatticeModel>,
    tau: &RationalVec2,
    z: &RationalVec2,
    r_sq: &Rational,
    budget_bytes: u64,
) -> Result<DiskWindow> {
    if !r_sq.is_positive() {
        return Err(Error::precondition("R_sq must be positive"));
    }
    let (_, den) = z.sub(tau).common_form()?;
    let d2 = Rational::from_integer(BigInt::from(den as i128 * den as i128));
    let bound = floor_i128(&(r_sq * d2 / &model.scale_s))?;
    let mut w = disk_window_by_bound(model, tau, z, bound, budget_bytes)?;
    w.r_sq = r_sq.clone();
    Ok(w)
}

/// Coordinates of the point in the reduced basis.
fn reduced_coords(model: &LatticeModel, u: [i64; 2]) -> [i64; 2] {
    model.change_of_basis.apply_inverse(u)
}

/// Side lengths of the bounding rectangle in reduced coordinates.
pub fn reduced_bounding_sides(model: &LatticeModel, points: &[[i64; 2]]) -> [u64; 2] {
    let mut lo = [i64::MAX; 2];
    let mut hi = [i64::MIN; 2];
    for &p in points {
        let r = reduced_coords(model, p);
        for i in 0..2 {
            lo[i] = lo[i].min(r[i]);
            hi[i] = hi[i].max(r[i]);
        }
    }
    [(hi[0] - lo[0] + 1) as u64, (hi[1] - lo[1] + 1) as u64]
}

/// Inner-regularity data `(c, R; 𝒜₀)` of a window, checked exhaustively.
#[derive(Clone, Debug, Serialize)]
pub struct InnerRegularCert {
    pub c: RatStr,
    pub r_sq: RatStr,
    /// `((1 - c) R)^2`.
    pub inner_r_sq: RatStr,
    /// Measured on the bounding rectangle in reduced coordinates.
    pub aspect_bound: f64,
    pub sides: [u64; 2],
}

/// Certifies `B(z, (1-c)R) ∩ (τ+Λ) ⊆ W ⊆ B(z, R)` and `(1-c) R > μ`.
pub fn certify_inner_regular(w: &DiskWindow, c: &Rational) -> Result<InnerRegularCert> {
    if c.is_negative() || c >= &Rational::one() {
        return Err(Error::precondition("c must lie in [0, 1)"));
    }
    let model = w.model();
    let one_minus = Rational::one() - c;
    let inner_r_sq = &one_minus * &one_minus * &w.r_sq;
    if inner_r_sq <= model.covering_radius_sq {
        return Err(Error::precondition("(1 - c) R must exceed the covering radius"));
    }
    let d2 = Rational::from_integer(BigInt::from(w.den as i128 * w.den as i128));
    let outer = floor_i128(&(&w.r_sq * &d2 / &model.scale_s))?;
    let inner = floor_i128(&(&inner_r_sq * &d2 / &model.scale_s))?;
    let members: HashSet<[i64; 2]> = w.points().iter().copied().collect();
    if w.points().iter().any(|&u| w.scaled_distance(u) > outer) {
        return Err(Error::precondition("window has a point outside B(z, R)"));
    }
    let inner_pts = ellipse_points(&model.input_form, w.center_num, w.den, inner);
    if inner_pts.iter().any(|u| !members.contains(u)) {
        return Err(Error::precondition("window misses a point of the inner ball"));
    }
    let sides = reduced_bounding_sides(model, w.points());
    let aspect_bound = sides[0].max(sides[1]) as f64 / sides[0].min(sides[1]) as f64;
    Ok(InnerRegularCert { c: RatStr(c.clone()), r_sq: RatStr(w.r_sq.clone()), inner_r_sq: RatStr(inner_r_sq), aspect_bound, sides })
}

/// Result of checking that small lattice vectors are window differences.
#[derive(Clone, Debug, Serialize)]
pub struct CoveringReport {
    /// Largest key guaranteed: `s * key <= (2R - 2μ)^2`, absent when `R <= μ`.
    pub guaranteed_key: Option<u64>,
    pub vectors_checked: usize,
    pub uncovered: Vec<[i64; 2]>,
    /// All vectors with key at most this are covered.
    pub largest_covered_key: u64,
    pub largest_covered_radius: f64,
    pub guaranteed_radius: f64,
    pub holds: bool,
}

/// Every `λ` with `|λ| <= 2R - 2μ` must be a difference of two window points.
pub fn verify_diffset_covering(w: &DiskWindow) -> Result<CoveringReport> {
    let model = w.model();
    let four = int(4);
    let a = &four * &w.r_sq;
    let b = &four * &model.covering_radius_sq;
    let guaranteed = floor_sq_root_diff_over(&a, &b, &model.scale_s)?;
    let support = difference_support(w.points());
    let form = model.input_form;
    let mut uncovered = Vec::new();
    let mut checked = 0;
    if let Some(k) = guaranteed {
        for v in ellipse_points(&form, [0, 0], 1, k) {
            checked += 1;
            if !support.contains(v) {
                uncovered.push(v);
            }
        }
    }
    // Smallest key of a vector that is not a difference. Vectors beyond the
    // support box are never differences; the box edge bounds their keys.
    let h = support.height() as i64;
    let wd = support.width();
    let box_min = [[wd + 1, 0], [0, h], [wd + 1, h - 1], [-(wd + 1), h - 1]]
        .iter()
        .map(|&v| form.key(v))
        .min()
        .unwrap_or(u64::MAX);
    let mut first_gap = box_min;
    for v in ellipse_points(&form, [0, 0], 1, box_min as i128) {
        if !support.contains(v) {
            first_gap = first_gap.min(form.key(v));
        }
    }
    let largest_covered_key = first_gap - 1;
    let s = to_f64(&model.scale_s);
    Ok(CoveringReport {
        guaranteed_key: guaranteed.map(|k| k as u64),
        vectors_checked: checked,
        holds: uncovered.is_empty(),
        uncovered,
        largest_covered_key,
        largest_covered_radius: (s * largest_covered_key as f64).sqrt(),
        guaranteed_radius: (2.0 * w.radius() - 2.0 * model.covering_radius()).max(0.0),
    })
}

/// `W_in = B(z, (1-c)R - Δ) ∩ (τ+Λ)` and its shift stability.
#[derive(Clone, Debug, Serialize)]
pub struct InnerCore {
    #[serde(skip)]
    pub points: Vec<[i64; 2]>,
    pub core_size: usize,
    pub removed: usize,
    pub removed_over_sqrt_n: f64,
    /// `W_in + t ⊆ W` for `t ∈ {0, v1, v2, v1 + v2}`.
    pub shift_stable: bool,
}

pub fn inner_core(w: &DiskWindow, cert: &InnerRegularCert) -> Result<InnerCore> {
    let model = w.model();
    let r = &model.reduced_gram;
    let two = int(2);
    let delta_sq = [r.g11.clone(), r.g22.clone(), &r.g11 + &two * &r.g12 + &r.g22].into_iter().max().unwrap();
    let a = &cert.inner_r_sq.0;
    if a <= &delta_sq {
        return Err(Error::precondition("inner core is empty: (1 - c) R <= Δ"));
    }
    let points: Vec<[i64; 2]> =
        w.points().iter().copied().filter(|&u| le_sq_root_diff(&w.distance_sq(u), a, &delta_sq)).collect();
    let members: HashSet<[i64; 2]> = w.points().iter().copied().collect();
    let v1 = model.change_of_basis.column(0);
    let v2 = model.change_of_basis.column(1);
    let shifts = [[0, 0], v1, v2, [v1[0] + v2[0], v1[1] + v2[1]]];
    let shift_stable =
        points.iter().all(|p| shifts.iter().all(|t| members.contains(&[p[0] + t[0], p[1] + t[1]])));
    let removed = w.len() - points.len();
    Ok(InnerCore {
        core_size: points.len(),
        removed,
        removed_over_sqrt_n: removed as f64 / (w.len() as f64).sqrt(),
        shift_stable,
        points,
    })
}

/// Pair-count lower bound `r_W(λ) >= κ R^2` for short `λ`, plus the deletion bound.
#[derive(Clone, Debug, Serialize)]
pub struct PairCountReport {
    pub rho_eps: f64,
    /// Largest key with `|λ| <= (2 - δ) ρ_ε`.
    pub key_bound: u64,
    pub vectors_checked: usize,
    pub min_r: u64,
    /// `min_λ r_W(λ) / R^2`.
    pub kappa_floor: f64,
    pub deleted: usize,
    pub deletion_violations: usize,
    pub holds: bool,
}

pub fn verify_inner_regular_pairs(
    w: &DiskWindow,
    cert: &InnerRegularCert,
    eps: &Rational,
    delta: &Rational,
    deletions: usize,
    seed: u64,
) -> Result<PairCountReport> {
    let model = w.model();
    let one = Rational::one();
    let lead = &one - &cert.c.0 - eps;
    let two_minus = int(2) - delta;
    if !lead.is_positive() || !two_minus.is_positive() || eps.is_negative() || delta.is_negative() {
        return Err(Error::precondition("need 1 - c - ε > 0 and 0 <= δ < 2"));
    }
    // ρ_ε = sqrt(lead^2 R^2) - μ; (2 - δ) ρ_ε = sqrt(a) - sqrt(b)
    let scale = &two_minus * &two_minus;
    let a = &scale * &lead * &lead * &w.r_sq;
    let b = &scale * &model.covering_radius_sq;
    if a <= b {
        return Err(Error::precondition("ρ_ε = (1 - c - ε) R - μ must be positive"));
    }
    let key_bound = floor_sq_root_diff_over(&a, &b, &model.scale_s)?.unwrap_or(0) as u64;
    let hist = shift_histogram_of_coords(w.points());
    let vectors: Vec<[i64; 2]> =
        ellipse_points(&model.input_form, [0, 0], 1, key_bound as i128).into_iter().filter(|v| *v != [0, 0]).collect();
    let min_r = vectors.iter().map(|&v| hist.get(v)).min().unwrap_or(0);
    let r_sq = to_f64(&w.r_sq);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept: Vec<[i64; 2]> = w.points().to_vec();
    kept.shuffle(&mut rng);
    let deleted = deletions.min(kept.len().saturating_sub(1));
    kept.truncate(kept.len() - deleted);
    let sub = shift_histogram_of_coords(&kept);
    let deletion_violations =
        vectors.iter().filter(|&&v| (sub.get(v) as i128) < hist.get(v) as i128 - 2 * deleted as i128).count();

    let rho_eps = to_f64(&lead) * w.radius() - model.covering_radius();
    Ok(PairCountReport {
        rho_eps,
        key_bound,
        vectors_checked: vectors.len(),
        min_r,
        kappa_floor: if vectors.is_empty() { f64::INFINITY } else { min_r as f64 / r_sq },
        deleted,
        deletion_violations,
        holds: (vectors.is_empty() || min_r > 0) && deletion_violations == 0,
    })
}
