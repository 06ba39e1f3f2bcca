//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use distlab::bench::{append_history, check_baseline, run_best_of, Workload};
use distlab::census::{bernays_estimate, bernays_ratio, forward_k, invert_k_to_t, log_grid, represented_upto, RepTable};
use distlab::classify::{classify, verify_report, ClassificationReport, ClassifierConfig, Outcome};
use distlab::extremal::{construct_for_k, upper_bound_curve, CenterChoice};
use distlab::lattice::{LatticeModel, QuadForm};
use distlab::pointset::LatticePointSet;
use distlab::verify::{covering_sweep, palette_sweep, run_suite, SweepParams, Tally};
use distlab::windows::DEFAULT_BUDGET_BYTES;

type Verdict = distlab::Result<(bool, String)>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Verdict,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "exact identities", limit: Duration::from_secs(300), run: exact_identities },
    Criterion { id: 2, name: "difference-set covering", limit: Duration::from_secs(120), run: covering },
    Criterion { id: 3, name: "palette sandwich", limit: Duration::from_secs(600), run: palette },
    Criterion { id: 4, name: "census of x^2+y^2", limit: Duration::from_secs(1200), run: census },
    Criterion { id: 5, name: "hex witness scale law", limit: Duration::from_secs(1800), run: scale_law },
    Criterion { id: 6, name: "inversion round trip", limit: Duration::from_secs(60), run: inversion },
    Criterion { id: 7, name: "classifier end to end", limit: Duration::from_secs(120), run: classifier },
    Criterion { id: 8, name: "spectrum throughput", limit: Duration::from_secs(600), run: throughput },
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let (ok, detail) = match (c.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error[{}]: {e}", e.class())),
        };
        let took = start.elapsed();
        let within = took <= c.limit;
        let pass = ok && within;
        if !pass {
            failed += 1;
        }
        let timing = format!("{:.1}s of {}s", took.as_secs_f64(), c.limit.as_secs());
        println!("{} [{}] {}: {detail} ({timing}{})", if pass { "PASS" } else { "FAIL" }, c.id, c.name, if within { "" } else { ", over time" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn exact_identities() -> Verdict {
    let p = SweepParams { trials: 200, nmax: 40, seed: 0x5eed };
    let names = [
        "quadruple-identity",
        "line-identity",
        "rectangle-energy",
        "residue-energy",
        "top-cap-bound",
        "localization-guarantee",
        "square-window-density",
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let r = run_suite(name, &p)?;
        ok &= r.passed && r.failures == 0;
        parts.push(format!("{name} {}/{}", r.trials - r.failures, r.trials));
        if !r.passed {
            parts.push(format!("{:?}", r.detail));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn tally_verdict(t: &Tally) -> (bool, String) {
    let mut s = format!("{} windows, {} failures", t.trials, t.failures);
    if !t.detail.is_empty() {
        s.push_str(&format!(" {:?}", t.detail));
    }
    (t.failures == 0 && t.trials > 0, s)
}

fn covering() -> Verdict {
    let mut t = Tally::default();
    covering_sweep(60, &mut t)?;
    Ok(tally_verdict(&t))
}

fn palette() -> Verdict {
    let mut t = Tally::default();
    palette_sweep(&[5, 10, 20, 40, 80], &mut t)?;
    Ok(tally_verdict(&t))
}

/// `n` is a sum of two squares iff every prime `≡ 3 mod 4` divides it to an even power.
fn sum_of_two_squares_oracle(t: u64) -> Vec<bool> {
    let t = t as usize;
    let mut spf = vec![0u32; t + 1];
    for i in 2..=t {
        if spf[i] == 0 {
            let mut j = i;
            while j <= t {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut out = vec![false; t + 1];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        let mut m = n;
        let mut ok = true;
        while m > 1 {
            let p = spf[m] as usize;
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if p % 4 == 3 && e % 2 == 1 {
                ok = false;
                break;
            }
        }
        *slot = ok;
    }
    out
}

fn census() -> Verdict {
    let form = QuadForm::new(1, 0, 1)?;
    let t7 = 10_000_000u64;
    let t8 = 100_000_000u64;
    let big = represented_upto(&form, t8, DEFAULT_BUDGET_BYTES)?;
    let small = represented_upto(&form, t7, DEFAULT_BUDGET_BYTES)?;

    let oracle = sum_of_two_squares_oracle(t7);
    let mismatches = (1..=t7).filter(|&n| small.is_represented(n) != oracle[n as usize]).count();
    let oracle_count = oracle.iter().filter(|&&b| b).count() as u64;
    let exact = mismatches == 0 && small.count() == oracle_count && big.count_upto(t7 as i128) == oracle_count;

    let c7 = bernays_ratio(small.count(), t7);
    let c8 = bernays_ratio(big.count(), t8);
    let ratio_gap = (c7 - c8).abs() / c8;

    let fit = |table: &RepTable, t: u64| -> distlab::Result<Option<f64>> {
        let est = bernays_estimate(table, &log_grid(t / 10_000, t, 8))?;
        Ok(est.extrapolation.map(|e| e.constant))
    };
    let (e7, e8) = (fit(&small, t7)?, fit(&big, t8)?);
    let (fit_ok, fit_text) = match (e7, e8) {
        (Some(a), Some(b)) => {
            let gap = (a - b).abs() / b;
            (gap <= 0.01, format!("extrapolated {a:.4} vs {b:.4} ({:.2}%)", 100.0 * gap))
        }
        _ => (false, "no extrapolation".into()),
    };
    Ok((
        exact && ratio_gap <= 0.03 && fit_ok,
        format!(
            "R(1e7) = {} ({} oracle mismatches), R(1e8) = {}, C(1e7) = {c7:.4} vs C(1e8) = {c8:.4} ({:.2}%), {fit_text}",
            small.count(),
            mismatches,
            big.count(),
            100.0 * ratio_gap
        ),
    ))
}

fn scale_law() -> Verdict {
    let model = Arc::new(LatticeModel::builtin("hex")?);
    let table = represented_upto(&model.form, 100_000_000, DEFAULT_BUDGET_BYTES)?;
    let bernays = bernays_estimate(&table, &log_grid(10_000, 100_000_000, 8))?.headline();
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    let mut all_maximal = true;
    let mut pred = (0.0, 0.0);
    for k in [1_000usize, 10_000, 100_000, 1_000_000] {
        let w = construct_for_k(model.clone(), k, CenterChoice::Lattice, bernays, DEFAULT_BUDGET_BYTES)?;
        all_maximal &= w.maximal;
        ratios.push(w.ratio_n);
        pred = (w.ratio_pred_a, w.ratio_pred_b);
        rows.push(format!("k={k} n={} ratio={:.4}", w.n, w.ratio_n));
    }
    // Variation is the change between consecutive grid points.
    let steps: Vec<f64> = ratios.windows(2).map(|r| (r[1] - r[0]).abs()).collect();
    let shrinking = steps.windows(2).filter(|v| v[1] < v[0]).count();
    let gaps: Vec<String> = ratios.iter().map(|r| format!("{:.4}", (r - pred.0).abs() / pred.0)).collect();
    let in_band = ratios.iter().all(|r| (0.2..=3.0).contains(r));
    Ok((
        in_band && shrinking >= 2 && all_maximal,
        format!(
            "C = {bernays:.4}; {}; steps {:?}, {shrinking} decreases; (π/4)S* = {:.4}, π/(3C) = {:.4}, relative gaps to (π/4)S* {:?}",
            rows.join(", "),
            steps.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            pred.0,
            pred.1,
            gaps
        ),
    ))
}

fn inversion() -> Verdict {
    let c = 0.7642;
    let mut worst = 0f64;
    let mut count = 0;
    for i in 0..=160 {
        let t = 10f64.powf(2.0 + 8.0 * i as f64 / 160.0);
        let k = forward_k(t, c);
        let back = invert_k_to_t(k, c)?.t;
        worst = worst.max((back - t).abs() / t);
        count += 1;
    }
    let ks: Vec<f64> = (0..=28).map(|i| 10f64.powf(3.0 + i as f64 / 4.0)).collect();
    let curve = upper_bound_curve(&ks, 1.0)?;
    let dominated = curve.iter().all(|p| p.fixed_point.is_some() && p.dominates);
    Ok((
        worst <= 1e-6 && dominated,
        format!("{count} points, worst relative error {worst:.2e}; M(k) dominates the fixed point at {} of {} k", curve.iter().filter(|p| p.dominates).count(), curve.len()),
    ))
}

fn grid(model: &Arc<LatticeModel>, l: i64) -> distlab::Result<LatticePointSet> {
    LatticePointSet::from_points(model.clone(), (0..l).flat_map(|i| (0..l).map(move |j| [i, j])).collect())
}

/// A 20 x 20 grid followed by 60 far outliers, each at least 200 away along some axis.
fn grid_plus_outliers(model: &Arc<LatticeModel>) -> distlab::Result<LatticePointSet> {
    let mut pts: Vec<[i64; 2]> = (0..20).flat_map(|i| (0..20).map(move |j| [i, j])).collect();
    let mut r = ChaCha8Rng::seed_from_u64(7);
    while pts.len() < 460 {
        let p: [i64; 2] = [r.gen_range(-5000..=5000), r.gen_range(-5000..=5000)];
        if (p[0].abs() >= 200 || p[1].abs() >= 200) && !pts.contains(&p) {
            pts.push(p);
        }
    }
    LatticePointSet::from_points(model.clone(), pts)
}

fn reverifies(report: &ClassificationReport) -> distlab::Result<bool> {
    let text = serde_json::to_string(report)?;
    let back: ClassificationReport = serde_json::from_str(&text)?;
    let v = verify_report(&back)?;
    if !v.ok() || back.outcome != report.outcome {
        eprintln!("{} n = {}: mismatches {:?}, outcome survives JSON: {}", report.outcome.name(), report.n, v.mismatches, back.outcome == report.outcome);
    }
    Ok(v.ok() && back.outcome == report.outcome)
}

fn classifier() -> Verdict {
    let z2 = Arc::new(LatticeModel::builtin("Z2")?);
    let hex = Arc::new(LatticeModel::builtin("hex")?);
    let defaults = ClassifierConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();

    for m in [&z2, &hex] {
        let x = LatticePointSet::from_points(m.clone(), (0..50).map(|i| [3 * i, -i]).collect())?;
        let rep = classify(&x, &defaults)?;
        let good = matches!(rep.outcome, Outcome::LineHeavy(_)) && reverifies(&rep)?;
        ok &= good;
        notes.push(format!("{} collinear -> {}", m.label, rep.outcome.name()));
    }

    // Grids of side at most 10 have a full row of 10% of the points, so the
    // line threshold is raised for them; the config travels with the report.
    let loose = ClassifierConfig { c_line: 0.2, ..defaults.clone() };
    let mut grid_names = Vec::new();
    for l in [8, 9, 10, 11, 12, 16, 24] {
        let config = if l <= 10 { &loose } else { &defaults };
        let rep = classify(&grid(&z2, l)?, config)?;
        let good = match &rep.outcome {
            Outcome::TwoShift(c) => {
                let big = *c.residue.sizes.iter().max().unwrap() as u64;
                4 * big >= c.residue.n && reverifies(&rep)?
            }
            _ => false,
        };
        ok &= good;
        grid_names.push(format!("{l}:{}", if good { "TwoShift" } else { rep.outcome.name() }));
    }
    notes.push(format!("grids {}", grid_names.join(" ")));

    let x = grid_plus_outliers(&z2)?;
    let rep = classify(&x, &defaults)?;
    let good = match &rep.outcome {
        Outcome::Localized(c) => {
            notes.push(format!("grid+outliers n = {} -> Localized, ball {} >= (1 - {:.3}) n", rep.n, c.ball_count, c.eta));
            c.ball_count as f64 >= (1.0 - c.eta) * rep.n as f64 && reverifies(&rep)?
        }
        other => {
            notes.push(format!("grid+outliers -> {}", other.name()));
            false
        }
    };
    ok &= good;
    Ok((ok, notes.join("; ")))
}

fn throughput() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("distlab-bench");
    let w = Workload::SpectrumDisk { points: 1_000_000 };
    let report = run_best_of(&w, DEFAULT_BUDGET_BYTES, 3)?;
    append_history(&dir.join("history.jsonl"), &report)?;
    // Builds with and without debug assertions differ in speed; each keeps its own baseline.
    let name = if cfg!(debug_assertions) { "baseline-checked.json" } else { "baseline.json" };
    let check = check_baseline(&dir.join(name), &report)?;
    let budget = 120.0;
    Ok((
        !check.regression && report.seconds <= budget,
        format!(
            "{} points, {} distances in {:.3}s ({:.2e} pairs/s); baseline {:.3}s{}, slowdown {:+.1}%",
            report.items,
            report.result,
            report.seconds,
            report.pairs_per_sec,
            check.baseline_seconds,
            if check.recorded_now { " recorded now" } else { "" },
            100.0 * check.slowdown
        ),
    ))
}
