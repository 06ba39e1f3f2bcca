//! Values represented by a binary quadratic form, the empirical Bernays
//! constant, the palette sandwich for disk windows and the scale inversion.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{gauss_reduce, GramMatrix, QuadForm};
use crate::rational::{floor_i128, floor_sq_root_diff_over, int, isqrt_u128, rat, to_i64};
use crate::spectrum::distinct_distance_count;
use crate::windows::{DiskWindow, InnerRegularCert};

const CACHE_MAGIC: &[u8; 8] = b"DLCENSUS";
const CACHE_VERSION: u32 = 1;

/// Bit `n` set iff `F(x, y) = n` for some integer `(x, y) != 0`, for `1 <= n <= T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepTable {
    pub form: QuadForm,
    pub t: u64,
    words: Vec<u64>,
    /// `cumulative[i]` = set bits in words `0..i`.
    cumulative: Vec<u64>,
}

impl RepTable {
    fn from_words(form: QuadForm, t: u64, words: Vec<u64>) -> RepTable {
        let mut cumulative = Vec::with_capacity(words.len() + 1);
        let mut acc = 0u64;
        cumulative.push(0);
        for w in &words {
            acc += w.count_ones() as u64;
            cumulative.push(acc);
        }
        RepTable { form, t, words, cumulative }
    }

    pub fn is_represented(&self, n: u64) -> bool {
        n >= 1 && n <= self.t && self.words[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    /// `ℛ_F(T)` for the table bound.
    pub fn count(&self) -> u64 {
        self.count_upto(self.t as i128)
    }

    /// `ℛ_F(x)` for any `x <= T`; zero for `x < 1`.
    pub fn count_upto(&self, x: i128) -> u64 {
        if x < 1 {
            return 0;
        }
        assert!(x as u64 <= self.t, "census bound {x} exceeds table bound {}", self.t);
        let x = x as u64;
        let w = (x / 64) as usize;
        let mask = if x % 64 == 63 { u64::MAX } else { (1u64 << (x % 64 + 1)) - 1 };
        self.cumulative[w] + (self.words[w] & mask).count_ones() as u64
    }

    /// Represented values in increasing order.
    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.t).filter(|&n| self.is_represented(n))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&CACHE_VERSION.to_le_bytes())?;
        for v in [self.form.a, self.form.b, self.form.c] {
            f.write_all(&v.to_le_bytes())?;
        }
        f.write_all(&self.t.to_le_bytes())?;
        for w in &self.words {
            f.write_all(&w.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RepTable> {
        let mut f = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::parse(format!("{} is not a census cache", path.display())));
        }
        let mut b4 = [0u8; 4];
        f.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CACHE_VERSION {
            return Err(Error::parse("unsupported census cache version"));
        }
        let mut b8 = [0u8; 8];
        let mut next = |f: &mut BufReader<File>| -> Result<[u8; 8]> {
            f.read_exact(&mut b8)?;
            Ok(b8)
        };
        let a = i64::from_le_bytes(next(&mut f)?);
        let b = i64::from_le_bytes(next(&mut f)?);
        let c = i64::from_le_bytes(next(&mut f)?);
        let t = u64::from_le_bytes(next(&mut f)?);
        let form = QuadForm::new(a, b, c)?;
        let n_words = (t / 64 + 1) as usize;
        let mut raw = vec![0u8; n_words * 8];
        f.read_exact(&mut raw)?;
        let words = raw.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(RepTable::from_words(form, t, words))
    }
}

fn reduce_form(form: &QuadForm) -> Result<QuadForm> {
    let g = GramMatrix::new(int(form.a), rat(form.b, 2), int(form.c))?;
    let (_, r) = gauss_reduce(&g)?;
    let b2 = &r.g12 * int(2);
    QuadForm::new(to_i64(&r.g11.to_integer())?, to_i64(&b2.to_integer())?, to_i64(&r.g22.to_integer())?)
}

/// Census of `F` up to `T`. Equivalent forms give identical tables.
pub fn represented_upto(form: &QuadForm, t: u64, budget_bytes: u64) -> Result<RepTable> {
    if t < 1 {
        return Err(Error::precondition("census bound T must be at least 1"));
    }
    let n_words = t / 64 + 1;
    let bytes = n_words as u128 * 16;
    if bytes > budget_bytes as u128 {
        return Err(Error::Budget { what: format!("census up to T = {t}"), required: bytes, budget: budget_bytes as u128 });
    }
    let f = reduce_form(form)?;
    let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
    let disc = f.discriminant_abs();
    let words: Vec<AtomicU64> = (0..n_words).map(|_| AtomicU64::new(0)).collect();
    let t128 = t as i128;
    let set = |n: i128| {
        let n = n as u64;
        words[(n / 64) as usize].fetch_or(1 << (n % 64), Ordering::Relaxed);
    };
    // F(x, y) = F(-x, -y): rows y >= 0 suffice, and on y = 0 only x > 0.
    // With b = 0 also F(-x, y) = F(x, y); with b = 0 and a = c, F(y, x) = F(x, y).
    let quadrant = b == 0;
    let octant = b == 0 && a == c;
    let y_max = isqrt_u128((4 * a * t128 / disc) as u128) as i128;
    (0..=y_max).into_par_iter().for_each(|y| {
        let d = 4 * a * t128 - disc * y * y;
        if d < 0 {
            return;
        }
        let sd = isqrt_u128(d as u128) as i128;
        let mut lo = (-b * y - sd).div_euclid(2 * a);
        let mut hi = (-b * y + sd).div_euclid(2 * a) + 1;
        let eval = |x: i128| a * x * x + b * x * y + c * y * y;
        while eval(lo) > t128 {
            lo += 1;
        }
        while eval(lo - 1) <= t128 {
            lo -= 1;
        }
        while eval(hi) > t128 {
            hi -= 1;
        }
        while eval(hi + 1) <= t128 {
            hi += 1;
        }
        if y == 0 {
            lo = lo.max(1);
        } else if octant {
            lo = lo.max(y);
        } else if quadrant {
            lo = lo.max(0);
        }
        if lo > hi {
            return;
        }
        // F(x + 1, y) - F(x, y) = a (2x + 1) + b y
        let mut v = eval(lo);
        let mut step = a * (2 * lo + 1) + b * y;
        for _ in lo..=hi {
            set(v);
            v += step;
            step += 2 * a;
        }
    });
    let words = words.into_iter().map(AtomicU64::into_inner).collect();
    Ok(RepTable::from_words(*form, t, words))
}

/// Loads a cached census covering `t` for this form, or builds and stores one.
pub fn census_cached(form: &QuadForm, t: u64, budget_bytes: u64, cache: Option<&Path>) -> Result<RepTable> {
    if let Some(path) = cache {
        if path.exists() {
            if let Ok(table) = RepTable::load(path) {
                if table.form == *form && table.t >= t {
                    return Ok(table);
                }
            }
        }
        let table = represented_upto(form, t, budget_bytes)?;
        table.save(path)?;
        return Ok(table);
    }
    represented_upto(form, t, budget_bytes)
}

/// `ℛ_F(T) sqrt(log T) / T`.
pub fn bernays_ratio(count: u64, t: u64) -> f64 {
    count as f64 * (t as f64).ln().sqrt() / t as f64
}

/// Fit of `Ĉ(T) = C (1 + b / log T)` by least squares in `1 / log T`.
#[derive(Clone, Debug, Serialize)]
pub struct Extrapolation {
    pub method: &'static str,
    pub constant: f64,
    pub b: f64,
    pub fit_from: u64,
    pub fit_to: u64,
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BernaysEstimate {
    pub form: QuadForm,
    pub grid: Vec<u64>,
    pub counts: Vec<u64>,
    pub estimates: Vec<f64>,
    pub extrapolation: Option<Extrapolation>,
    /// Set when the largest grid point is below `10^4`.
    pub low_confidence: bool,
}

impl BernaysEstimate {
    /// The extrapolated constant when available, else the last ratio.
    pub fn headline(&self) -> f64 {
        self.extrapolation.as_ref().map_or_else(|| *self.estimates.last().unwrap_or(&f64::NAN), |e| e.constant)
    }
}

/// Roughly `per_decade` points per decade, geometric, ending exactly at `t_max`.
pub fn log_grid(t_min: u64, t_max: u64, per_decade: u32) -> Vec<u64> {
    let t_min = t_min.max(2);
    if t_max <= t_min {
        return vec![t_max.max(2)];
    }
    let decades = (t_max as f64 / t_min as f64).log10();
    let steps = ((decades * per_decade as f64).round() as usize).max(1);
    let mut grid: Vec<u64> =
        (0..=steps).map(|i| (t_min as f64 * 10f64.powf(decades * i as f64 / steps as f64)).round() as u64).collect();
    *grid.last_mut().unwrap() = t_max;
    grid.dedup();
    grid
}

/// Ratios on the grid and a fit over the points in `[T_max / 100, T_max]`.
pub fn bernays_estimate(table: &RepTable, grid: &[u64]) -> Result<BernaysEstimate> {
    if grid.is_empty() {
        return Err(Error::precondition("empty T grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::precondition("T grid must be strictly increasing"));
    }
    let t_max = *grid.last().unwrap();
    if grid[0] < 2 || t_max > table.t {
        return Err(Error::precondition(format!("T grid must lie in [2, {}]", table.t)));
    }
    let counts: Vec<u64> = grid.iter().map(|&t| table.count_upto(t as i128)).collect();
    let estimates: Vec<f64> = grid.iter().zip(&counts).map(|(&t, &r)| bernays_ratio(r, t)).collect();
    let fit_from = t_max / 100;
    let idx: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] >= fit_from).collect();
    let extrapolation = if idx.len() >= 3 {
        let xs: Vec<f64> = idx.iter().map(|&i| 1.0 / (grid[i] as f64).ln()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| estimates[i]).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let constant = my - slope * mx;
        let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (constant + slope * x)).collect();
        Some(Extrapolation {
            method: "least-squares in 1/log T",
            constant,
            b: slope / constant,
            fit_from: grid[idx[0]],
            fit_to: t_max,
            residuals,
        })
    } else {
        None
    };
    Ok(BernaysEstimate { form: table.form, grid: grid.to_vec(), counts, estimates, extrapolation, low_confidence: t_max < 10_000 })
}

/// The sandwich `ℛ((2(1-c)R - 2μ)^2 / s) <= |D(W)| <= ℛ((2R)^2 / s)`.
#[derive(Clone, Debug, Serialize)]
pub struct PaletteReport {
    pub k: usize,
    /// Floor of `(2(1-c)R - 2μ)^2 / s`, or `None` when `(1-c)R < μ`.
    pub lower_arg: Option<u64>,
    pub upper_arg: u64,
    pub lower: u64,
    pub upper: u64,
    pub slack_lower: i64,
    pub slack_upper: i64,
    pub holds: bool,
}

pub fn palette_bounds_check(w: &DiskWindow, cert: &InnerRegularCert, budget_bytes: u64) -> Result<PaletteReport> {
    let model = w.model();
    let four = int(4);
    let lower_arg = floor_sq_root_diff_over(&(&four * &cert.inner_r_sq.0), &(&four * &model.covering_radius_sq), &model.scale_s)?
        .map(|v| v as u64);
    let upper_arg = floor_i128(&(&four * &w.r_sq / &model.scale_s))? as u64;
    let table = represented_upto(&model.input_form, upper_arg.max(1), budget_bytes)?;
    let k = distinct_distance_count(&w.set)?;
    let lower = lower_arg.map_or(0, |v| table.count_upto(v as i128));
    let upper = table.count_upto(upper_arg as i128);
    Ok(PaletteReport {
        k,
        lower_arg,
        upper_arg,
        lower,
        upper,
        slack_lower: k as i64 - lower as i64,
        slack_upper: upper as i64 - k as i64,
        holds: lower as usize <= k && k as u64 <= upper,
    })
}

/// Solution of `k = C T / sqrt(log T)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Inversion {
    pub t: f64,
    pub iterations: u32,
    /// `sqrt(log T) / sqrt(log k)`.
    pub correction: f64,
}

/// Fixed point of `T <- (k / C) sqrt(log T)` from `T = k`.
pub fn invert_k_to_t(k: f64, c_est: f64) -> Result<Inversion> {
    if !(k >= 3.0) || !(c_est > 0.0) {
        return Err(Error::precondition("need k >= 3 and C > 0"));
    }
    let a = k / c_est;
    let mut t = k;
    for i in 1..=1000 {
        if !(t > 1.0) {
            return Err(Error::NonConvergence(format!("iterate T = {t} left (1, inf)")));
        }
        let next = a * t.ln().sqrt();
        if (next - t).abs() <= 1e-12 * next.abs() {
            return Ok(Inversion { t: next, iterations: i, correction: next.ln().sqrt() / k.ln().sqrt() });
        }
        t = next;
    }
    Err(Error::NonConvergence("no convergence within 1000 iterations".into()))
}

/// `C T / sqrt(log T)`.
pub fn forward_k(t: f64, c_est: f64) -> f64 {
    c_est * t / t.ln().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    const BUDGET: u64 = 1 << 30;

    fn brute(f: &QuadForm, t: u64) -> BTreeSet<u64> {
        let r = 2 * (t as f64).sqrt() as i64 + 2;
        let mut out = BTreeSet::new();
        for x in -r..=r {
            for y in -r..=r {
                let v = f.eval([x, y]);
                if (x, y) != (0, 0) && v <= t as i128 {
                    out.insert(v as u64);
                }
            }
        }
        out
    }

    #[test]
    fn small_censuses() {
        let f = QuadForm::new(1, 0, 1).unwrap();
        let t = represented_upto(&f, 25, BUDGET).unwrap();
        assert_eq!(t.values().collect::<Vec<_>>(), vec![1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25]);
        assert_eq!(t.count(), 13);
        let h = QuadForm::new(1, 1, 1).unwrap();
        let t = represented_upto(&h, 7, BUDGET).unwrap();
        assert_eq!(t.values().collect::<Vec<_>>(), vec![1, 3, 4, 7]);
        let g = QuadForm::new(5, 3, 7).unwrap();
        assert!(represented_upto(&g, 5, BUDGET).unwrap().is_represented(5));
    }

    #[test]
    fn matches_brute_force() {
        for (a, b, c) in [(1, 0, 1), (1, 1, 1), (2, 2, 3), (3, -1, 5), (1, 0, 5), (7, 6, 2)] {
            let f = QuadForm::new(a, b, c).unwrap();
            let t = represented_upto(&f, 600, BUDGET).unwrap();
            assert_eq!(t.values().collect::<BTreeSet<_>>(), brute(&f, 600), "{f}");
        }
    }

    #[test]
    fn counts_and_cache() {
        let f = QuadForm::new(1, 0, 1).unwrap();
        let t = represented_upto(&f, 1000, BUDGET).unwrap();
        let mut running = 0;
        for x in 1..=1000u64 {
            if t.is_represented(x) {
                running += 1;
            }
            assert_eq!(t.count_upto(x as i128), running);
        }
        assert_eq!(t.count_upto(0), 0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        t.save(&p).unwrap();
        assert_eq!(RepTable::load(&p).unwrap(), t);
    }

    #[test]
    fn estimate_and_flags() {
        let f = QuadForm::new(1, 0, 1).unwrap();
        let t = represented_upto(&f, 10, BUDGET).unwrap();
        let e = bernays_estimate(&t, &[2, 5, 10]).unwrap();
        assert!(e.low_confidence);
        assert!(e.extrapolation.is_some());
        assert!(bernays_estimate(&t, &[5, 10]).unwrap().extrapolation.is_none());
        assert!(bernays_estimate(&t, &[5, 5]).is_err());
        let g = log_grid(1000, 100_000, 8);
        assert_eq!(g.len(), 17);
        assert_eq!(*g.last().unwrap(), 100_000);
    }

    #[test]
    fn inversion_round_trip() {
        let inv = invert_k_to_t(100.0 / 100f64.ln().sqrt(), 1.0).unwrap();
        assert!((inv.t - 100.0).abs() / 100.0 < 1e-6);
        assert!(invert_k_to_t(3.0, 1.0).is_ok());
        assert!(invert_k_to_t(2.0, 1.0).is_err());
    }
}
