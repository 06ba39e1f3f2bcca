//! Popular shifts, the two-shift rectangle pipeline and the residue energy check.
//!
//! The pipeline is a constructive surrogate for the Balog-Szemerédi-Gowers
//! and Freiman steps: the two most popular nonparallel differences span a
//! sublattice, the set is read in that basis, a dense square window is cut
//! out and the conclusions are checked on it exactly.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::lattice::QuadForm;
use crate::spectrum::{energy_of_coords, half_plane, residue_decompose_coords, ShiftHistogram};
use crate::windows::{extract_square_window, find_heavy_shifts, HeavyShifts, LambdaRectangle};

/// Popular differences `r(v) >= ρ★ n`, one representative per `±v`.
#[derive(Clone, Debug, Serialize)]
pub struct PopularShifts {
    pub threshold: u64,
    /// Sorted by decreasing `r`, then increasing key, then coordinates.
    pub shifts: Vec<([i64; 2], u64)>,
    /// Most popular vector and the most popular one not parallel to it.
    pub pair: Option<(([i64; 2], u64), ([i64; 2], u64))>,
    /// Common direction when every popular shift is parallel.
    pub direction: Option<[i64; 2]>,
    /// `Σ_{v ∥ u, v != 0} r(v)` for that direction.
    pub directional_mass: Option<u128>,
}

pub(crate) fn parallel(a: [i64; 2], b: [i64; 2]) -> bool {
    a[0] as i128 * b[1] as i128 == a[1] as i128 * b[0] as i128
}

pub fn popular_shift_analysis(hist: &ShiftHistogram, form: &QuadForm, rho: f64) -> PopularShifts {
    let n = hist.n() as f64;
    let threshold = (rho * n).ceil().max(1.0) as u64;
    let mut shifts: Vec<([i64; 2], u64)> =
        hist.iter().filter(|&(v, r)| r >= threshold && half_plane(v) == v).collect();
    shifts.sort_by(|a, b| b.1.cmp(&a.1).then(form.key(a.0).cmp(&form.key(b.0))).then(a.0.cmp(&b.0)));
    let pair = shifts.first().and_then(|&top| shifts.iter().find(|s| !parallel(s.0, top.0)).map(|&s| (top, s)));
    let (direction, directional_mass) = match (pair, shifts.first()) {
        (None, Some(&(u, _))) => {
            let mass = hist.iter().filter(|&(v, _)| parallel(v, u)).map(|(_, r)| r as u128).sum();
            (Some(u), Some(mass))
        }
        _ => (None, None),
    };
    PopularShifts { threshold, shifts, pair, direction, directional_mass }
}

/// Coordinates of `p - origin` in the basis `(v1, v2)`, if integral.
pub fn basis_coords(p: [i64; 2], origin: [i64; 2], v1: [i64; 2], v2: [i64; 2]) -> Option<[i64; 2]> {
    let d = v1[0] as i128 * v2[1] as i128 - v1[1] as i128 * v2[0] as i128;
    let (x, y) = ((p[0] - origin[0]) as i128, (p[1] - origin[1]) as i128);
    let a = x * v2[1] as i128 - y * v2[0] as i128;
    let b = v1[0] as i128 * y - v1[1] as i128 * x;
    (a % d == 0 && b % d == 0).then(|| [(a / d) as i64, (b / d) as i64])
}

/// Both sides of `E₊ <= 4 N^2 max_j m_j` and the residue consequence.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResidueEnergyReport {
    pub n: u64,
    pub sizes: [usize; 4],
    pub energy_with_diagonal: u128,
    /// `4 N^2 max_j m_j`.
    pub energy_bound: u128,
    pub bound_holds: bool,
    pub alpha: f64,
    /// Whether `E₊ >= α N^3`.
    pub energy_large: bool,
    /// `max_j m_j >= (α/4) N`; vacuous when the energy is not large.
    pub residue_holds: bool,
}

/// Energy and parity classes of a set given in sublattice coordinates.
pub fn energy_residue_check(coords: &[[i64; 2]], alpha: f64) -> ResidueEnergyReport {
    let n = coords.len() as u64;
    let sizes = residue_decompose_coords(coords).sizes();
    let max = *sizes.iter().max().unwrap_or(&0) as u128;
    let e = energy_of_coords(coords).energy_with_diagonal;
    let bound = 4 * (n as u128) * (n as u128) * max;
    let nf = n as f64;
    let energy_large = e as f64 >= alpha * nf * nf * nf;
    ResidueEnergyReport {
        n,
        sizes,
        energy_with_diagonal: e,
        energy_bound: bound,
        bound_holds: e <= bound,
        alpha,
        energy_large,
        residue_holds: !energy_large || max as f64 >= alpha / 4.0 * nf,
    }
}

/// Everything needed to re-check the two-shift conclusion from raw points.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TwoShiftCertificate {
    pub label: String,
    /// Basis of `Λ'` in input coordinates.
    pub v1: [i64; 2],
    pub v2: [i64; 2],
    pub r_v1: u64,
    pub r_v2: u64,
    /// Coset representative; rectangle coordinates are taken relative to it.
    pub origin: [i64; 2],
    /// Points outside the chosen coset of `Λ'`.
    pub set_aside: usize,
    /// Bounding rectangle and extracted square window, in `(v1, v2)` coordinates.
    pub rectangle: LambdaRectangle,
    pub window: LambdaRectangle,
    /// `A = X ∩ W`, input coordinates.
    pub a: Vec<[i64; 2]>,
    pub density: f64,
    /// `|A ∩ (A + v_i)|`.
    pub overlap_v1: u64,
    pub overlap_v2: u64,
    pub heavy_shifts: HeavyShifts,
    pub residue: ResidueEnergyReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoShiftFailure {
    NoNonparallelShifts,
    DegenerateRectangle,
    WindowDensityBelowThreshold,
    ShiftOverlapBelowThreshold,
}

impl TwoShiftFailure {
    pub fn reason(&self) -> &'static str {
        match self {
            TwoShiftFailure::NoNonparallelShifts => "no-nonparallel-shifts",
            TwoShiftFailure::DegenerateRectangle => "degenerate-rectangle",
            TwoShiftFailure::WindowDensityBelowThreshold => "window-density-below-threshold",
            TwoShiftFailure::ShiftOverlapBelowThreshold => "shift-overlap-below-threshold",
        }
    }
}

pub(crate) fn overlap(set: &HashSet<[i64; 2]>, a: &[[i64; 2]], v: [i64; 2]) -> u64 {
    a.iter().filter(|p| set.contains(&[p[0] - v[0], p[1] - v[1]])).count() as u64
}

pub fn two_shift_pipeline(
    points: &[[i64; 2]],
    hist: &ShiftHistogram,
    form: &QuadForm,
    c_shift: f64,
    alpha: f64,
) -> Result<TwoShiftCertificate, TwoShiftFailure> {
    let popular = popular_shift_analysis(hist, form, c_shift);
    let ((v1, r_v1), (v2, r_v2)) = popular.pair.ok_or(TwoShiftFailure::NoNonparallelShifts)?;

    // Group by coset of Λ' = Z v1 + Z v2 and keep the most populous one.
    let d = (v1[0] as i128 * v2[1] as i128 - v1[1] as i128 * v2[0] as i128).abs();
    let coset_of = |p: [i64; 2]| -> [i128; 2] {
        let (x, y) = (p[0] as i128, p[1] as i128);
        [(x * v2[1] as i128 - y * v2[0] as i128).rem_euclid(d), (v1[0] as i128 * y - v1[1] as i128 * x).rem_euclid(d)]
    };
    let mut cosets: HashMap<[i128; 2], (usize, usize)> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        let e = cosets.entry(coset_of(p)).or_insert((0, i));
        e.0 += 1;
    }
    let (_, &(size, first)) = cosets.iter().max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1))).unwrap();
    let origin = points[first];
    let mut coords: Vec<([i64; 2], [i64; 2])> =
        points.iter().filter_map(|&p| basis_coords(p, origin, v1, v2).map(|c| (c, p))).collect();
    debug_assert_eq!(coords.len(), size);

    let (mut v1, mut v2, mut r_v1, mut r_v2) = (v1, v2, r_v1, r_v2);
    let cs: Vec<[i64; 2]> = coords.iter().map(|c| c.0).collect();
    let mut rect = LambdaRectangle::bounding(&cs).map_err(|_| TwoShiftFailure::DegenerateRectangle)?;
    if rect.l1 < rect.l2 {
        rect = rect.transposed();
        std::mem::swap(&mut v1, &mut v2);
        std::mem::swap(&mut r_v1, &mut r_v2);
        for c in coords.iter_mut() {
            c.0 = [c.0[1], c.0[0]];
        }
    }
    if rect.l2 < 2 {
        return Err(TwoShiftFailure::DegenerateRectangle);
    }
    let cs: Vec<[i64; 2]> = coords.iter().map(|c| c.0).collect();
    let square = extract_square_window(&cs, &rect).map_err(|_| TwoShiftFailure::DegenerateRectangle)?;
    if square.density < c_shift {
        return Err(TwoShiftFailure::WindowDensityBelowThreshold);
    }
    let inside: Vec<([i64; 2], [i64; 2])> = coords.into_iter().filter(|c| square.window.contains(c.0)).collect();
    let a_coords: Vec<[i64; 2]> = inside.iter().map(|c| c.0).collect();
    let a: Vec<[i64; 2]> = inside.iter().map(|c| c.1).collect();
    let set: HashSet<[i64; 2]> = a.iter().copied().collect();
    let overlap_v1 = overlap(&set, &a, v1);
    let overlap_v2 = overlap(&set, &a, v2);
    let need = c_shift * a.len() as f64;
    if (overlap_v1 as f64) < need || (overlap_v2 as f64) < need {
        return Err(TwoShiftFailure::ShiftOverlapBelowThreshold);
    }
    let heavy_shifts = find_heavy_shifts(&a_coords, &square.window).map_err(|_| TwoShiftFailure::DegenerateRectangle)?;
    let residue = energy_residue_check(&a_coords, alpha);
    Ok(TwoShiftCertificate {
        label: "constructive surrogate".into(),
        v1,
        v2,
        r_v1,
        r_v2,
        origin,
        set_aside: points.len() - size,
        rectangle: rect,
        window: square.window,
        density: square.density,
        a,
        overlap_v1,
        overlap_v2,
        heavy_shifts,
        residue,
    })
}
