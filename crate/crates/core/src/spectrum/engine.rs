//! Difference-vector counting.
//!
//! `r(v) = #{(x, y) in X^2 : y - x = v}` is produced one difference row
//! `d2 = const` at a time. Points are grouped into horizontal runs; the count
//! of pairs drawn from two runs is a trapezoid in `d1`, added in O(1) through
//! its second difference and recovered with two prefix sums. A disk window of
//! `n` points has `O(sqrt n)` runs, so a full sweep costs `O(n)` cells instead
//! of `O(n^2)` pairs.
//!
//! Sparse, spread-out sets fall back to explicit pair enumeration.

use rayon::prelude::*;

/// Horizontal runs of a point set, grouped by row.
pub(crate) struct Rows {
    x_min: i64,
    x_max: i64,
    /// `rows[j]` holds the inclusive runs of row `y_min + j`.
    rows: Vec<Vec<(i64, i64)>>,
}

impl Rows {
    pub(crate) fn new(points: &[[i64; 2]]) -> Rows {
        let mut sorted: Vec<[i64; 2]> = points.to_vec();
        sorted.sort_unstable_by_key(|p| (p[1], p[0]));
        sorted.dedup();
        let y_min = sorted.first().map_or(0, |p| p[1]);
        let y_max = sorted.last().map_or(0, |p| p[1]);
        let x_min = sorted.iter().map(|p| p[0]).min().unwrap_or(0);
        let x_max = sorted.iter().map(|p| p[0]).max().unwrap_or(0);
        let mut rows = vec![Vec::new(); (y_max - y_min + 1) as usize];
        for p in sorted {
            let row: &mut Vec<(i64, i64)> = &mut rows[(p[1] - y_min) as usize];
            match row.last_mut() {
                Some(run) if run.1 + 1 == p[0] => run.1 = p[0],
                _ => row.push((p[0], p[0])),
            }
        }
        Rows { x_min, x_max, rows }
    }

    pub(crate) fn height(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn width(&self) -> i64 {
        self.x_max - self.x_min
    }

    /// Smallest `d1` of any difference.
    pub(crate) fn d1_min(&self) -> i64 {
        -self.width()
    }

    fn buffer_len(&self) -> usize {
        2 * self.width() as usize + 3
    }

    /// Fills `buf[i] = r((d1_min + i, d2))` for `i < 2 * width + 1`.
    fn fill_row(&self, d2: usize, buf: &mut [i64]) {
        buf.iter_mut().for_each(|b| *b = 0);
        let base = self.d1_min();
        for j in 0..self.rows.len() - d2 {
            let lower = &self.rows[j];
            let upper = &self.rows[j + d2];
            if lower.is_empty() || upper.is_empty() {
                continue;
            }
            for &(a, b) in lower {
                for &(c, d) in upper {
                    buf[(c - b - base) as usize] += 1;
                    buf[(c - a + 1 - base) as usize] -= 1;
                    buf[(d + 1 - b - base) as usize] -= 1;
                    buf[(d - a + 2 - base) as usize] += 1;
                }
            }
        }
        for _ in 0..2 {
            let mut acc = 0i64;
            for b in buf.iter_mut() {
                acc += *b;
                *b = acc;
            }
        }
    }

    /// Folds over the difference rows `d2 = 0, 1, ..., height - 1`.
    ///
    /// Row `d2 = 0` includes `d1 <= 0`; consumers that want the open half
    /// plane skip those entries. Accumulators must merge associatively.
    pub(crate) fn fold_rows<T, I, V, R>(&self, init: I, visit: V, reduce: R) -> T
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        V: Fn(&mut T, i64, i64, &[i64]) + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let len = self.buffer_len();
        let used = len - 2;
        let d1_min = self.d1_min();
        (0..self.height())
            .into_par_iter()
            .fold(
                || (init(), vec![0i64; len]),
                |(mut acc, mut buf), d2| {
                    self.fill_row(d2, &mut buf);
                    visit(&mut acc, d2 as i64, d1_min, &buf[..used]);
                    (acc, buf)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(&init, &reduce)
    }
}

/// Whether the run sweep is cheaper than explicit pairs for this set.
pub(crate) fn prefer_rows(points: &[[i64; 2]]) -> bool {
    if points.len() < 2 {
        return false;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let w = (x1 as i128 - x0 as i128) as u128;
    let h = (y1 as i128 - y0 as i128) as u128 + 1;
    if w > (1 << 26) || h > (1 << 26) {
        return false;
    }
    let cells = h * (2 * w + 3);
    let n = points.len() as u128;
    cells <= 4 * n * n + (1 << 16)
}

/// Canonical representative of `{v, -v}` in the open upper half plane.
#[inline]
pub fn half_plane(v: [i64; 2]) -> [i64; 2] {
    if v[1] > 0 || (v[1] == 0 && v[0] > 0) {
        v
    } else {
        [-v[0], -v[1]]
    }
}

/// Visits every unordered pair once with its half-plane difference.
pub(crate) fn fold_pairs<T, I, V, R>(points: &[[i64; 2]], init: I, visit: V, reduce: R) -> T
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    V: Fn(&mut T, [i64; 2]) + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    (0..points.len())
        .into_par_iter()
        .fold(&init, |mut acc, i| {
            let p = points[i];
            for q in &points[i + 1..] {
                visit(&mut acc, half_plane([q[0] - p[0], q[1] - p[1]]));
            }
            acc
        })
        .reduce(&init, &reduce)
}
