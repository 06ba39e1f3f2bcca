//! Exact distance spectra, energies and pair statistics.

mod engine;
pub mod isometry;
pub mod lines;
pub mod residue;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::QuadForm;
use crate::pointset::LatticePointSet;
use crate::rational::{RatStr, Rational};

pub use engine::half_plane;
pub(crate) use engine::{prefer_rows, Rows};
pub use isometry::{isometry_spectrum, IsometrySpectrum, DEFAULT_ORACLE_CAP};
pub use lines::{line_histogram, line_histogram_of_coords, LineHistogram, LineKey};
pub use residue::{residue_decompose, residue_decompose_coords, ResidueDecomposition};

/// Dense key tables above this many slots switch to hashing.
const DENSE_KEY_LIMIT: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SpectrumEntry {
    pub key: u64,
    /// Ordered pairs at this distance.
    pub m: u64,
}

/// Sorted distance keys with ordered multiplicities.
///
/// A key is the integral form value of a difference vector; the squared
/// distance is `s * key`, so distinct keys are distinct distances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceSpectrum {
    pub entries: Vec<SpectrumEntry>,
    pub n: usize,
}

/// `Σ m_t^2` with the Cauchy-Schwarz floor `n^2 (n-1)^2 / k`.
#[derive(Clone, Debug, Serialize)]
pub struct QOrd {
    pub value: u128,
    pub floor: RatStr,
    pub floor_f64: f64,
}

impl DistanceSpectrum {
    /// Number of distinct distances.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.key)
    }

    pub fn total_mass(&self) -> u64 {
        self.entries.iter().map(|e| e.m).sum()
    }

    pub fn q_ord(&self) -> QOrd {
        let value = self.entries.iter().map(|e| (e.m as u128) * (e.m as u128)).sum();
        let n = self.n as i128;
        let num = BigInt::from(n * n) * BigInt::from((n - 1) * (n - 1));
        let floor = if self.k() == 0 {
            Rational::from_integer(BigInt::from(0))
        } else {
            Rational::new(num, BigInt::from(self.k()))
        };
        let floor_f64 = crate::rational::to_f64(&floor);
        QOrd { value, floor: RatStr(floor), floor_f64 }
    }

    /// The `⌊(1-θ)k⌋`-th smallest key (1-based).
    pub fn quantile_key(&self, theta: f64) -> Result<u64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::precondition(format!("quantile parameter {theta} not in (0,1)")));
        }
        let idx = quantile_index(self.k(), theta);
        if idx == 0 {
            return Err(Error::precondition(format!("quantile index underflow: floor((1-{theta}) * {}) = 0", self.k())));
        }
        Ok(self.entries[idx - 1].key)
    }

    /// Multiplicity of a key, zero if absent.
    pub fn m(&self, key: u64) -> u64 {
        self.entries.binary_search_by_key(&key, |e| e.key).map_or(0, |i| self.entries[i].m)
    }

    /// Ordered-pair mass at keys `<= key`.
    pub fn mass_at_most(&self, key: u64) -> u64 {
        self.entries.iter().take_while(|e| e.key <= key).map(|e| e.m).sum()
    }

    /// CSV with columns `key,m,distance_sq_numer,distance_sq_denom`.
    pub fn to_csv(&self, scale_s: &Rational) -> String {
        let mut out = String::from("key,m,distance_sq_numer,distance_sq_denom\n");
        for e in &self.entries {
            let d = scale_s * Rational::from_integer(BigInt::from(e.key));
            out.push_str(&format!("{},{},{},{}\n", e.key, e.m, d.numer(), d.denom()));
        }
        out
    }
}

/// `⌊(1-θ)k⌋`, computed so that exact products such as `0.7 * 10` land on 7.
pub fn quantile_index(k: usize, theta: f64) -> usize {
    let x = (1.0 - theta) * k as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * (1.0 + x.abs()) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// Largest form value over the difference box `[-w, w] x [0, h]`.
fn key_bound(form: &QuadForm, w: i64, h: i64) -> u128 {
    [[w, h], [-w, h], [w, 0]].iter().map(|&v| form.eval(v) as u128).max().unwrap_or(0)
}

/// Distance spectrum of a set of integer coordinates under `form`.
pub fn spectrum_of_coords(points: &[[i64; 2]], form: &QuadForm) -> Result<DistanceSpectrum> {
    let n = points.len();
    if n < 2 {
        return Err(Error::precondition("distance spectrum needs at least two points"));
    }
    let mut counts: Vec<(u64, u64)> = if prefer_rows(points) {
        let rows = Rows::new(points);
        let bound = key_bound(form, rows.width(), rows.height() as i64 - 1);
        if bound < DENSE_KEY_LIMIT as u128 {
            let table: Vec<AtomicU64> = (0..=bound).map(|_| AtomicU64::new(0)).collect();
            rows.fold_rows(
                || (),
                |_, d2, d1_min, buf| {
                    for (i, &r) in buf.iter().enumerate() {
                        let d1 = d1_min + i as i64;
                        if r == 0 || (d2 == 0 && d1 <= 0) {
                            continue;
                        }
                        table[form.key([d1, d2]) as usize].fetch_add(2 * r as u64, Ordering::Relaxed);
                    }
                },
                |_, _| (),
            );
            table
                .into_iter()
                .enumerate()
                .filter_map(|(k, c)| {
                    let c = c.into_inner();
                    (c > 0).then_some((k as u64, c))
                })
                .collect()
        } else {
            let map = rows.fold_rows(
                HashMap::new,
                |acc: &mut HashMap<u64, u64>, d2, d1_min, buf| {
                    for (i, &r) in buf.iter().enumerate() {
                        let d1 = d1_min + i as i64;
                        if r == 0 || (d2 == 0 && d1 <= 0) {
                            continue;
                        }
                        *acc.entry(form.key([d1, d2])).or_insert(0) += 2 * r as u64;
                    }
                },
                merge_maps,
            );
            map.into_iter().collect()
        }
    } else {
        let map = engine::fold_pairs(
            points,
            HashMap::new,
            |acc: &mut HashMap<u64, u64>, v| *acc.entry(form.key(v)).or_insert(0) += 2,
            merge_maps,
        );
        map.into_iter().collect()
    };
    counts.sort_unstable();
    let entries: Vec<SpectrumEntry> = counts.into_iter().map(|(key, m)| SpectrumEntry { key, m }).collect();
    debug_assert_eq!(entries.iter().map(|e| e.m).sum::<u64>(), (n * (n - 1)) as u64);
    Ok(DistanceSpectrum { entries, n })
}

fn merge_maps<K: std::hash::Hash + Eq>(mut a: HashMap<K, u64>, b: HashMap<K, u64>) -> HashMap<K, u64> {
    if a.len() < b.len() {
        return merge_maps(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

pub fn distance_spectrum(x: &LatticePointSet) -> Result<DistanceSpectrum> {
    spectrum_of_coords(x.points(), &x.model().input_form)
}

/// `|D(X)|` alone, via a key bitset; cheaper than the full spectrum.
pub fn distinct_distance_count(x: &LatticePointSet) -> Result<usize> {
    let points = x.points();
    if points.len() < 2 {
        return Ok(0);
    }
    let form = &x.model().input_form;
    if !prefer_rows(points) {
        return Ok(spectrum_of_coords(points, form)?.k());
    }
    let rows = Rows::new(points);
    let bound = key_bound(form, rows.width(), rows.height() as i64 - 1);
    if bound >= (DENSE_KEY_LIMIT as u128) * 64 {
        return Ok(spectrum_of_coords(points, form)?.k());
    }
    let words: Vec<AtomicU64> = (0..(bound / 64 + 1)).map(|_| AtomicU64::new(0)).collect();
    rows.fold_rows(
        || (),
        |_, d2, d1_min, buf| {
            for (i, &r) in buf.iter().enumerate() {
                let d1 = d1_min + i as i64;
                if r == 0 || (d2 == 0 && d1 <= 0) {
                    continue;
                }
                let k = form.key([d1, d2]);
                words[(k / 64) as usize].fetch_or(1 << (k % 64), Ordering::Relaxed);
            }
        },
        |_, _| (),
    );
    Ok(words.into_iter().map(|w| w.into_inner().count_ones() as usize).sum())
}

/// Additive energy, with the diagonal `v = 0` term reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Energy {
    /// `Σ_v r(v)^2` over all `v`, including `v = 0`.
    pub energy_with_diagonal: u128,
    /// The same sum over `v != 0`.
    pub energy_offdiagonal: u128,
    /// `r(0)^2 = n^2`.
    pub diagonal: u128,
}

impl Energy {
    fn from_offdiagonal(n: usize, off: u128) -> Energy {
        let diagonal = (n as u128) * (n as u128);
        Energy { energy_with_diagonal: off + diagonal, energy_offdiagonal: off, diagonal }
    }
}

/// Energy of integer coordinates; streams difference rows without storing them.
pub fn energy_of_coords(points: &[[i64; 2]]) -> Energy {
    let n = points.len();
    if n < 2 {
        return Energy::from_offdiagonal(n, 0);
    }
    let half: u128 = if prefer_rows(points) {
        Rows::new(points).fold_rows(
            || 0u128,
            |acc, d2, d1_min, buf| {
                for (i, &r) in buf.iter().enumerate() {
                    let d1 = d1_min + i as i64;
                    if r != 0 && (d2 > 0 || d1 > 0) {
                        *acc += (r as u128) * (r as u128);
                    }
                }
            },
            |a, b| a + b,
        )
    } else {
        let map = engine::fold_pairs(
            points,
            HashMap::new,
            |acc: &mut HashMap<[i64; 2], u64>, v| *acc.entry(v).or_insert(0) += 1,
            merge_maps,
        );
        map.values().map(|&r| (r as u128) * (r as u128)).sum()
    };
    Energy::from_offdiagonal(n, 2 * half)
}

/// Counts `r_X(v)` of every nonzero difference vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftHistogram {
    n: usize,
    counts: HashMap<[i64; 2], u64>,
}

impl ShiftHistogram {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `r_X(v)`; `r_X(0) = n`.
    pub fn get(&self, v: [i64; 2]) -> u64 {
        if v == [0, 0] {
            return self.n as u64;
        }
        self.counts.get(&v).copied().unwrap_or(0)
    }

    /// Nonzero vectors with their counts, unordered.
    pub fn iter(&self) -> impl Iterator<Item = ([i64; 2], u64)> + '_ {
        self.counts.iter().map(|(v, c)| (*v, *c))
    }

    /// Number of distinct nonzero differences.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn energy(&self) -> Energy {
        let off = self.counts.values().map(|&r| (r as u128) * (r as u128)).sum();
        Energy::from_offdiagonal(self.n, off)
    }
}

pub fn shift_histogram_of_coords(points: &[[i64; 2]]) -> ShiftHistogram {
    let n = points.len();
    let half: HashMap<[i64; 2], u64> = if n < 2 {
        HashMap::new()
    } else if prefer_rows(points) {
        Rows::new(points).fold_rows(
            HashMap::new,
            |acc: &mut HashMap<[i64; 2], u64>, d2, d1_min, buf| {
                for (i, &r) in buf.iter().enumerate() {
                    let d1 = d1_min + i as i64;
                    if r != 0 && (d2 > 0 || d1 > 0) {
                        acc.insert([d1, d2], r as u64);
                    }
                }
            },
            merge_maps,
        )
    } else {
        engine::fold_pairs(
            points,
            HashMap::new,
            |acc: &mut HashMap<[i64; 2], u64>, v| *acc.entry(v).or_insert(0) += 1,
            merge_maps,
        )
    };
    let mut counts = HashMap::with_capacity(2 * half.len());
    for (v, r) in half {
        counts.insert(v, r);
        counts.insert([-v[0], -v[1]], r);
    }
    ShiftHistogram { n, counts }
}

pub fn shift_histogram(x: &LatticePointSet) -> ShiftHistogram {
    shift_histogram_of_coords(x.points())
}

/// Energy together with the full difference histogram.
pub fn additive_energy(x: &LatticePointSet) -> (Energy, ShiftHistogram) {
    let hist = shift_histogram(x);
    (hist.energy(), hist)
}

/// Which difference vectors `y - x` occur in a set, stored densely.
#[derive(Clone, Debug)]
pub struct DifferenceSupport {
    d1_min: i64,
    row_len: usize,
    /// Half plane rows `d2 = 0, 1, ...`; bit `d1 - d1_min` set when `r(d1, d2) > 0`.
    rows: Vec<Vec<bool>>,
}

impl DifferenceSupport {
    pub fn contains(&self, v: [i64; 2]) -> bool {
        if v == [0, 0] {
            return true;
        }
        let h = half_plane(v);
        let Some(row) = self.rows.get(h[1] as usize) else {
            return false;
        };
        let i = h[0] - self.d1_min;
        i >= 0 && (i as usize) < self.row_len && row[i as usize]
    }

    /// Every nonzero difference in the half plane `d2 > 0 or (d2 = 0, d1 > 0)`.
    pub fn iter_half(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        self.rows.iter().enumerate().flat_map(move |(d2, row)| {
            row.iter().enumerate().filter_map(move |(i, &b)| {
                let v = [self.d1_min + i as i64, d2 as i64];
                (b && (v[1] > 0 || v[0] > 0)).then_some(v)
            })
        })
    }

    pub fn height(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> i64 {
        -self.d1_min
    }
}

/// Dense difference support of a compact set.
pub fn difference_support(points: &[[i64; 2]]) -> DifferenceSupport {
    let rows = Rows::new(points);
    let mut out: Vec<(i64, Vec<bool>)> = rows.fold_rows(
        Vec::new,
        |acc: &mut Vec<(i64, Vec<bool>)>, d2, _, buf| acc.push((d2, buf.iter().map(|&r| r > 0).collect())),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    out.sort_unstable_by_key(|r| r.0);
    let row_len = out.first().map_or(0, |r| r.1.len());
    DifferenceSupport { d1_min: rows.d1_min(), row_len, rows: out.into_iter().map(|r| r.1).collect() }
}

/// `|A ∩ (A + v)|` for a set of coordinates.
pub fn overlap_count(points: &[[i64; 2]], v: [i64; 2]) -> usize {
    let set: std::collections::HashSet<[i64; 2]> = points.iter().copied().collect();
    points.iter().filter(|p| set.contains(&[p[0] - v[0], p[1] - v[1]])).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeModel;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn set(label: &str, pts: Vec<[i64; 2]>) -> LatticePointSet {
        LatticePointSet::from_points(Arc::new(LatticeModel::builtin(label).unwrap()), pts).unwrap()
    }

    /// All ordered pairs, no cleverness.
    fn oracle_spectrum(pts: &[[i64; 2]], f: &QuadForm) -> Vec<(u64, u64)> {
        let mut m = BTreeMap::new();
        for p in pts {
            for q in pts {
                if p != q {
                    *m.entry(f.key([q[0] - p[0], q[1] - p[1]])).or_insert(0u64) += 1;
                }
            }
        }
        m.into_iter().collect()
    }

    fn as_pairs(s: &DistanceSpectrum) -> Vec<(u64, u64)> {
        s.entries.iter().map(|e| (e.key, e.m)).collect()
    }

    fn hex7() -> Vec<[i64; 2]> {
        vec![[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [1, -1], [-1, 1]]
    }

    #[test]
    fn unit_square_spectrum() {
        let x = set("Z2", vec![[0, 0], [1, 0], [0, 1], [1, 1]]);
        let s = distance_spectrum(&x).unwrap();
        assert_eq!(as_pairs(&s), vec![(1, 8), (2, 4)]);
        assert_eq!(s.k(), 2);
        let q = s.q_ord();
        assert_eq!(q.value, 80);
        assert_eq!(q.floor.0, crate::rational::int(72));
    }

    #[test]
    fn two_points_and_singleton() {
        let x = set("Z2", vec![[0, 0], [3, 1]]);
        let s = distance_spectrum(&x).unwrap();
        assert_eq!(as_pairs(&s), vec![(10, 2)]);
        assert_eq!(s.q_ord().value, 4);
        assert_eq!(s.q_ord().floor.0, crate::rational::int(4));
        assert!(matches!(distance_spectrum(&set("Z2", vec![[0, 0]])), Err(Error::Precondition(_))));
    }

    #[test]
    fn hex_seven_point_window() {
        let x = set("hex", hex7());
        let s = distance_spectrum(&x).unwrap();
        let oracle = oracle_spectrum(&hex7(), &QuadForm { a: 1, b: 1, c: 1 });
        assert_eq!(as_pairs(&s), oracle);
        // Frozen from the all-pairs oracle: 24 unit pairs, 12 at sqrt 3, 6 at 2.
        assert_eq!(oracle, vec![(1, 24), (3, 12), (4, 6)]);
    }

    #[test]
    fn collinear_triple() {
        let s = distance_spectrum(&set("Z2", vec![[0, 0], [1, 0], [2, 0]])).unwrap();
        assert_eq!(as_pairs(&s), vec![(1, 4), (4, 2)]);
        assert_eq!(s.q_ord().value, 20);
        assert_eq!(s.q_ord().floor.0, crate::rational::int(18));
    }

    #[test]
    fn quantiles() {
        let pts: Vec<[i64; 2]> = vec![[0, 0], [1, 0], [0, 1], [1, 1]];
        let s = distance_spectrum(&set("Z2", pts)).unwrap();
        assert_eq!(s.quantile_key(0.5).unwrap(), 1);
        assert_eq!(s.quantile_key(1e-9).unwrap(), 2);
        assert!(s.quantile_key(0.9).is_err());
        assert_eq!(quantile_index(10, 0.3), 7);
        let ten = DistanceSpectrum {
            entries: (1..=10).map(|k| SpectrumEntry { key: k, m: 2 }).collect(),
            n: 5,
        };
        assert_eq!(ten.quantile_key(0.3).unwrap(), 7);
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        let pts = vec![[0, 0], [1, 0], [5_000_000, 3], [2, 2], [-7, 4_000_000]];
        assert!(!prefer_rows(&pts));
        let f = QuadForm { a: 2, b: 2, c: 3 };
        let s = spectrum_of_coords(&pts, &f).unwrap();
        assert_eq!(as_pairs(&s), oracle_spectrum(&pts, &f));
    }

    #[test]
    fn energy_examples() {
        let e = energy_of_coords(&[[0, 0], [1, 0], [0, 1], [1, 1]]);
        assert_eq!(e.energy_with_diagonal, 36);
        assert_eq!(e.energy_offdiagonal, 20);
        assert_eq!(e.diagonal, 16);
        assert_eq!(energy_of_coords(&[[4, 4]]).energy_offdiagonal, 0);
        let (e2, h) = additive_energy(&set("Z2", vec![[0, 0], [1, 0], [0, 1], [1, 1]]));
        assert_eq!(e2, e);
        assert_eq!(h.get([1, 0]), 2);
        assert_eq!(h.get([1, 1]), 1);
        assert_eq!(h.get([0, 0]), 4);
        assert_eq!(h.total(), 12);
    }

    #[test]
    fn distinct_count_matches_spectrum() {
        let x = set("hex", (0..9).flat_map(|a| (0..7).map(move |b| [a, b])).collect());
        assert_eq!(distinct_distance_count(&x).unwrap(), distance_spectrum(&x).unwrap().k());
    }

    #[test]
    fn csv_export() {
        let x = LatticePointSet::from_points(
            Arc::new(LatticeModel::from_gram("s", crate::lattice::GramMatrix::from_ints(9, 0, 9).unwrap()).unwrap()),
            vec![[0, 0], [1, 0], [0, 1], [1, 1]],
        )
        .unwrap();
        let csv = distance_spectrum(&x).unwrap().to_csv(&x.model().scale_s);
        assert_eq!(csv, "key,m,distance_sq_numer,distance_sq_denom\n1,8,9,1\n2,4,18,1\n");
    }
}
