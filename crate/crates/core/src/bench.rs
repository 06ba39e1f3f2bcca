//! Throughput benchmarks with an appended history and a regression gate.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::census::represented_upto;
use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, QuadForm, RationalVec2};
use crate::pointset::LatticePointSet;
use crate::rational::Rational;
use crate::spectrum::distance_spectrum;
use crate::windows::build_disk_window;

/// Slowdown beyond which a run counts as a regression.
pub const REGRESSION_TOLERANCE: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Workload {
    /// Exact spectrum of a hex disk window with about `points` points.
    SpectrumDisk { points: u64 },
    /// Represented integers of `x^2 + y^2` up to `t`.
    Census { t: u64 },
    /// The unit square; a sanity check of the harness itself.
    Trivial,
}

impl Workload {
    pub fn parse(name: &str, size: Option<u64>) -> Result<Workload> {
        match name {
            "spectrum-disk" => Ok(Workload::SpectrumDisk { points: size.unwrap_or(1_000_000) }),
            "census" => Ok(Workload::Census { t: size.unwrap_or(100_000_000) }),
            "trivial" => Ok(Workload::Trivial),
            other => Err(Error::parse(format!("unknown workload {other:?} (expected spectrum-disk, census, trivial)"))),
        }
    }

    /// Stable identifier used to match history entries against a baseline.
    pub fn id(&self) -> String {
        match self {
            Workload::SpectrumDisk { points } => format!("spectrum-disk:{points}"),
            Workload::Census { t } => format!("census:{t}"),
            Workload::Trivial => "trivial".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub threads: usize,
}

impl MachineInfo {
    pub fn current() -> MachineInfo {
        MachineInfo {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchReport {
    pub workload: String,
    /// Points, or census values, processed.
    pub items: u64,
    /// Ordered pairs for spectrum workloads.
    pub pairs: u64,
    pub seconds: f64,
    pub items_per_sec: f64,
    pub pairs_per_sec: f64,
    /// Distinct keys or represented values found; guards against dead-code elimination.
    pub result: u64,
    pub machine: MachineInfo,
    pub unix_time: u64,
}

/// Hex window with roughly `target` points: `R^2 ≈ target * covolume / π`.
pub fn hex_window_points(target: u64, budget_bytes: u64) -> Result<LatticePointSet> {
    let model = Arc::new(LatticeModel::builtin("hex")?);
    let r_sq = (target as f64 * model.covolume() / std::f64::consts::PI).ceil() as u64;
    let o = RationalVec2::zero();
    Ok(build_disk_window(model, &o, &o, &Rational::from_integer(BigInt::from(r_sq)), budget_bytes)?.set)
}

pub fn run_workload(w: &Workload, budget_bytes: u64) -> Result<BenchReport> {
    let (items, pairs, seconds, result) = match w {
        Workload::SpectrumDisk { points } => {
            let x = hex_window_points(*points, budget_bytes)?;
            let start = Instant::now();
            let s = distance_spectrum(&x)?;
            let n = x.len() as u64;
            (n, n * (n - 1), start.elapsed().as_secs_f64(), s.k() as u64)
        }
        Workload::Census { t } => {
            let start = Instant::now();
            let table = represented_upto(&QuadForm::new(1, 0, 1)?, *t, budget_bytes)?;
            (*t, 0, start.elapsed().as_secs_f64(), table.count())
        }
        Workload::Trivial => {
            let x = LatticePointSet::from_points(Arc::new(LatticeModel::builtin("Z2")?), vec![[0, 0], [1, 0], [0, 1], [1, 1]])?;
            let start = Instant::now();
            let s = distance_spectrum(&x)?;
            (4, 12, start.elapsed().as_secs_f64(), s.k() as u64)
        }
    };
    let rate = |x: u64| if seconds > 0.0 { x as f64 / seconds } else { f64::INFINITY };
    Ok(BenchReport {
        workload: w.id(),
        items,
        pairs,
        seconds,
        items_per_sec: rate(items),
        pairs_per_sec: rate(pairs),
        result,
        machine: MachineInfo::current(),
        unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    })
}

/// Best of `repeats` runs; the minimum is the least noisy estimate of the cost.
pub fn run_best_of(w: &Workload, budget_bytes: u64, repeats: usize) -> Result<BenchReport> {
    let mut best = run_workload(w, budget_bytes)?;
    for _ in 1..repeats.max(1) {
        let r = run_workload(w, budget_bytes)?;
        if r.seconds < best.seconds {
            best = r;
        }
    }
    Ok(best)
}

pub fn append_history(path: &Path, report: &BenchReport) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(report)?)?;
    Ok(())
}

/// Comparison against the recorded baseline for the same workload.
#[derive(Clone, Debug, Serialize)]
pub struct BaselineCheck {
    pub baseline_seconds: f64,
    pub seconds: f64,
    /// `seconds / baseline - 1`.
    pub slowdown: f64,
    pub recorded_now: bool,
    pub regression: bool,
}

/// Reads the baseline file (one report per workload id); records this run
/// when the workload has no baseline yet.
pub fn check_baseline(path: &Path, report: &BenchReport) -> Result<BaselineCheck> {
    let mut all: Vec<BenchReport> = match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    if let Some(b) = all.iter().find(|b| b.workload == report.workload) {
        let slowdown = report.seconds / b.seconds.max(1e-9) - 1.0;
        // Sub-millisecond workloads are noise; they never gate.
        let regression = slowdown > REGRESSION_TOLERANCE && report.seconds > 1e-3;
        return Ok(BaselineCheck { baseline_seconds: b.seconds, seconds: report.seconds, slowdown, recorded_now: false, regression });
    }
    all.push(report.clone());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(&all)?)?;
    Ok(BaselineCheck { baseline_seconds: report.seconds, seconds: report.seconds, slowdown: 0.0, recorded_now: true, regression: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_workload_and_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_workload(&Workload::Trivial, 1 << 30).unwrap();
        assert_eq!((r.items, r.pairs, r.result), (4, 12, 2));
        let hist = dir.path().join("h.jsonl");
        append_history(&hist, &r).unwrap();
        append_history(&hist, &r).unwrap();
        assert_eq!(fs::read_to_string(&hist).unwrap().lines().count(), 2);
        let base = dir.path().join("b.json");
        let mut rec = r.clone();
        rec.seconds = 0.01;
        assert!(check_baseline(&base, &rec).unwrap().recorded_now);
        let at = |s: f64| {
            let mut x = r.clone();
            x.seconds = s;
            check_baseline(&base, &x).unwrap()
        };
        assert!(at(0.02).regression);
        assert!(!at(0.012).regression);
        assert!(!at(0.012).recorded_now);
    }

    #[test]
    fn small_disk_has_about_the_requested_size() {
        let x = hex_window_points(10_000, 1 << 30).unwrap();
        assert!((x.len() as f64 - 10_000.0).abs() < 500.0, "{}", x.len());
    }

    #[test]
    fn workload_names() {
        assert_eq!(Workload::parse("census", Some(10)).unwrap(), Workload::Census { t: 10 });
        assert!(Workload::parse("nope", None).is_err());
    }
}
