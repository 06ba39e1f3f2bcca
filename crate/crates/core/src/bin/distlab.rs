use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use distlab::bench::{append_history, check_baseline, run_best_of, Workload};
use distlab::census::{bernays_estimate, census_cached, log_grid, palette_bounds_check};
use distlab::classify::{classify, verify_report, ClassificationReport, ClassifierConfig};
use distlab::extremal::{construct_for_k, lower_bound_table, table_csv, upper_bound_curve, CenterChoice};
use distlab::lattice::{parse_lattice_json, LatticeModel, QuadForm, RationalVec2};
use distlab::manifest::{FileDigest, RunManifest};
use distlab::pointset::{parse_point_set_json, LatticePointSet};
use distlab::rational::{parse_rational, Rational};
use distlab::spectrum::{additive_energy, distance_spectrum, line_histogram, residue_decompose};
use distlab::verify::{run_selection, summary_line, SweepParams};
use distlab::windows::{build_disk_window, certify_inner_regular, verify_diffset_covering, DEFAULT_BUDGET_BYTES};
use distlab::{Error, Result};

#[derive(Parser)]
#[command(name = "distlab", version, about = "Distinct-distance laboratory for planar lattice point sets")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Memory budget for enumerations and tables.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET_BYTES)]
    budget_bytes: u64,
    /// Output file; stdout when omitted. A manifest is written beside it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distance spectrum of a point set.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Additive energy, line and residue statistics of a point set.
    Energy {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Disk window of a lattice coset, written as a point-set file.
    Window(WindowArgs),
    /// Census of integers represented by a binary quadratic form.
    Bernays {
        /// Coefficients `a,b,c` of `a x^2 + b x y + c y^2`.
        #[arg(long, value_parser = parse_form)]
        form: QuadForm,
        #[arg(long = "T", value_parser = parse_count)]
        t: u64,
        #[arg(long, value_enum, default_value_t = Grid::Log)]
        grid: Grid,
        #[arg(long, default_value_t = 8)]
        per_decade: u32,
        /// Reuse or store the bit table here.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Largest disk windows with at most k distinct distances.
    Construct(ConstructArgs),
    /// Line-heavy / two-shift / localized classification with certificates.
    Classify {
        /// Point-set file, or a report when `--check` is given.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        /// `defaults` or a JSON file with the classifier constants.
        #[arg(long, default_value = "defaults")]
        constants: String,
        /// Re-verify an existing report instead of classifying.
        #[arg(long)]
        check: bool,
    },
    /// Seeded property sweeps.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        nmax: usize,
    },
    /// Throughput benchmark with history and regression gate.
    Bench {
        #[arg(long, default_value = "spectrum-disk")]
        workload: String,
        /// Points for spectrum-disk, T for census.
        #[arg(long, value_parser = parse_count)]
        size: Option<u64>,
        #[arg(long, default_value = "bench-history.jsonl")]
        history: PathBuf,
        /// Baseline file; the first run of a workload records it, later runs
        /// fail when more than 25% slower.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Runs per measurement; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
}

#[derive(Args)]
struct WindowArgs {
    /// Built-in label (Z2, hex, hex-unimodular) or a lattice JSON file.
    #[arg(long, default_value = "Z2")]
    lattice: String,
    /// Squared radius, exact rational.
    #[arg(long, value_parser = parse_rational_arg)]
    r_sq: Rational,
    /// Center `x,y` in lattice coordinates.
    #[arg(long, value_parser = parse_vec, default_value = "0,0")]
    center: RationalVec2,
    /// Coset offset `x,y` in lattice coordinates.
    #[arg(long, value_parser = parse_vec, default_value = "0,0")]
    offset: RationalVec2,
    /// Inner-regularity parameter; enables the certificate and palette check.
    #[arg(long, value_parser = parse_rational_arg)]
    c: Option<Rational>,
    /// Check that short lattice vectors are window differences.
    #[arg(long)]
    covering: bool,
    /// Write the checks here as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Built-in label or a lattice JSON file.
    #[arg(long, default_value = "hex")]
    lattice: String,
    /// Target number of distinct distances.
    #[arg(long, value_parser = parse_count)]
    k: Option<u64>,
    /// Comma-separated k grid; emits the lower-bound table as CSV.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    table: Option<Vec<u64>>,
    /// `lattice` or `deephole`.
    #[arg(long, default_value = "lattice")]
    center: CenterChoice,
    /// Bernays constant of the lattice form; estimated by a census when omitted.
    #[arg(long)]
    bernays: Option<f64>,
    /// Census bound for the Bernays estimate.
    #[arg(long, value_parser = parse_count, default_value = "1e7")]
    census_t: u64,
    /// Include the window points in the witness JSON.
    #[arg(long)]
    with_points: bool,
    /// Emit the upper-bound curve for this C1 over the k grid instead.
    #[arg(long)]
    upper_c1: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Log,
    Linear,
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("expected a nonnegative integer such as 100000 or 1e8, got {s:?}")),
    }
}

fn parse_form(s: &str) -> std::result::Result<QuadForm, String> {
    let c: Vec<i64> = s.split(',').map(|p| p.trim().parse::<i64>().map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>()?;
    match c.as_slice() {
        [a, b, c] => QuadForm::new(*a, *b, *c).map_err(|e| e.to_string()),
        _ => Err("expected a,b,c".into()),
    }
}

fn parse_rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_vec(s: &str) -> std::result::Result<RationalVec2, String> {
    match s.split(',').collect::<Vec<_>>().as_slice() {
        [x, y] => Ok(RationalVec2::new(parse_rational_arg(x.trim())?, parse_rational_arg(y.trim())?)),
        _ => Err("expected x,y".into()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_lattice(spec: &str) -> Result<LatticeModel> {
    match LatticeModel::builtin(spec) {
        Ok(m) => Ok(m),
        Err(_) if Path::new(spec).exists() => parse_lattice_json(&read_text(Path::new(spec))?),
        Err(e) => Err(e),
    }
}

fn load_points(path: &Path) -> Result<LatticePointSet> {
    parse_point_set_json(&read_text(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Where results go, plus the manifest bookkeeping.
struct Sink {
    out: Option<PathBuf>,
    manifest: RunManifest,
    start: Instant,
}

impl Sink {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.push(FileDigest::of_file(path)?);
        Ok(())
    }

    fn emit(mut self, body: &str) -> Result<()> {
        match &self.out {
            None => {
                print!("{body}");
                Ok(())
            }
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(path, body)?;
                self.manifest.outputs.push(FileDigest::of_bytes(path, body.as_bytes()));
                self.manifest.wall_seconds = self.start.elapsed().as_secs_f64();
                self.manifest.write_for(path)?;
                Ok(())
            }
        }
    }
}

fn bernays_for(model: &LatticeModel, t: u64, budget: u64) -> Result<f64> {
    let table = census_cached(&model.form, t, budget, None)?;
    let grid = log_grid((t / 10_000).max(10), t, 8);
    Ok(bernays_estimate(&table, &grid)?.headline())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::precondition(format!("thread pool: {e}")))?;
    }
    let budget = cli.budget_bytes;
    let config = json!({ "seed": cli.seed, "threads": cli.threads, "budget_bytes": budget });
    let mut sink = Sink { out: cli.out.clone(), manifest: RunManifest::new("", config), start: Instant::now() };
    let note = |sink: &mut Sink, name: &str, extra: serde_json::Value| {
        sink.manifest.command = name.into();
        if let (Some(base), serde_json::Value::Object(more)) = (sink.manifest.config.as_object_mut(), extra) {
            base.extend(more);
        }
    };

    match cli.command {
        Command::Spectrum { input, format } => {
            note(&mut sink, "spectrum", json!({ "in": input, "format": matches!(format, Format::Json).then_some("json").unwrap_or("csv") }));
            sink.input(&input)?;
            let x = load_points(&input)?;
            let s = distance_spectrum(&x)?;
            let body = match format {
                Format::Csv => s.to_csv(&x.model().scale_s),
                Format::Json => to_json(&json!({
                    "n": s.n,
                    "k": s.k(),
                    "scale_s": distlab::rational::format_rational(&x.model().scale_s),
                    "q_ord": s.q_ord(),
                    "entries": s.entries,
                }))?,
            };
            sink.emit(&body)
        }
        Command::Energy { input } => {
            note(&mut sink, "energy", json!({ "in": input }));
            sink.input(&input)?;
            let x = load_points(&input)?;
            let ((energy, hist), lines) = rayon::join(|| additive_energy(&x), || line_histogram(&x));
            let heaviest = lines.heaviest();
            let body = to_json(&json!({
                "n": x.len(),
                "energy": energy,
                "difference_support": hist.support_len(),
                "lines": lines.len(),
                "line_identity_holds": lines.identity_holds(),
                "heaviest_line": heaviest.map(|(l, s)| json!({ "line": l, "s": s })),
                "residue_sizes": residue_decompose(&x).sizes(),
            }))?;
            sink.emit(&body)
        }
        Command::Window(a) => {
            note(&mut sink, "window", json!({
                "lattice": a.lattice,
                "r_sq": a.r_sq.to_string(),
                "center": a.center.to_strings(),
                "offset": a.offset.to_strings(),
                "c": a.c.as_ref().map(|c| c.to_string()),
                "covering": a.covering,
            }));
            let model = Arc::new(load_lattice(&a.lattice)?);
            let w = build_disk_window(model, &a.offset, &a.center, &a.r_sq, budget)?;
            let mut report = json!({ "n": w.len(), "r_sq": w.r_sq.to_string() });
            if a.covering {
                report["covering"] = serde_json::to_value(verify_diffset_covering(&w)?)?;
            }
            if let Some(c) = &a.c {
                let cert = certify_inner_regular(&w, c)?;
                report["palette"] = serde_json::to_value(palette_bounds_check(&w, &cert, budget)?)?;
                report["certificate"] = serde_json::to_value(cert)?;
            }
            eprintln!("window: {} points", w.len());
            if let Some(p) = &a.report {
                std::fs::write(p, to_json(&report)?)?;
            }
            sink.emit(&to_json(&w.set.to_file())?)
        }
        Command::Bernays { form, t, grid, per_decade, cache } => {
            note(&mut sink, "bernays", json!({ "form": [form.a, form.b, form.c], "T": t, "per_decade": per_decade, "grid": matches!(grid, Grid::Log).then_some("log").unwrap_or("linear") }));
            if t < 10 {
                return Err(Error::precondition("T must be at least 10"));
            }
            let table = census_cached(&form, t, budget, cache.as_deref())?;
            let points = match grid {
                Grid::Log => log_grid((t / 10_000).max(10), t, per_decade),
                Grid::Linear => (1..=per_decade.max(2) as u64).map(|i| (t * i / per_decade.max(2) as u64).max(2)).collect(),
            };
            let est = bernays_estimate(&table, &points)?;
            sink.emit(&to_json(&json!({
                "represented_upto_T": table.count_upto(t as i128),
                "headline": est.headline(),
                "estimate": est,
            }))?)
        }
        Command::Construct(a) => {
            note(&mut sink, "construct", json!({
                "lattice": a.lattice, "k": a.k, "table": a.table, "center": a.center,
                "bernays": a.bernays, "census_t": a.census_t, "upper_c1": a.upper_c1,
            }));
            let model = Arc::new(load_lattice(&a.lattice)?);
            if let Some(c1) = a.upper_c1 {
                let ks: Vec<f64> = a.table.clone().or(a.k.map(|k| vec![k])).unwrap_or_default().iter().map(|&k| k as f64).collect();
                return sink.emit(&to_json(&upper_bound_curve(&ks, c1)?)?);
            }
            let c = match a.bernays {
                Some(c) => c,
                None => bernays_for(&model, a.census_t, budget)?,
            };
            if let Some(ks) = &a.table {
                let ks: Vec<usize> = ks.iter().map(|&k| k as usize).collect();
                return sink.emit(&table_csv(&lower_bound_table(model, &ks, a.center, c, budget)?));
            }
            let k = a.k.ok_or_else(|| Error::precondition("give --k or --table"))? as usize;
            let w = construct_for_k(model, k, a.center, c, budget)?;
            let mut v = serde_json::to_value(&w)?;
            if a.with_points {
                if let Some(win) = &w.window {
                    v["points"] = serde_json::to_value(win.set.to_file())?;
                }
            }
            sink.emit(&to_json(&v)?)
        }
        Command::Classify { input, sigma, constants, check } => {
            note(&mut sink, "classify", json!({ "in": input, "sigma": sigma, "constants": constants, "check": check }));
            sink.input(&input)?;
            if check {
                let report: ClassificationReport = serde_json::from_str(&read_text(&input)?)?;
                let v = verify_report(&report)?;
                let body = to_json(&v)?;
                if !v.ok() {
                    print!("{body}");
                    return Err(Error::CheckFailed(format!("certificate mismatches: {}", v.mismatches.join(", "))));
                }
                return sink.emit(&body);
            }
            let mut config = if constants == "defaults" {
                ClassifierConfig::default()
            } else {
                let p = Path::new(&constants);
                sink.input(p)?;
                serde_json::from_str(&read_text(p)?)?
            };
            if let Some(s) = sigma {
                config.sigma = s;
            }
            let x = load_points(&input)?;
            sink.emit(&to_json(&classify(&x, &config)?)?)
        }
        Command::Verify { suite, trials, nmax } => {
            note(&mut sink, "verify", json!({ "suite": suite, "trials": trials, "nmax": nmax }));
            let results = run_selection(&suite, &SweepParams { trials, nmax, seed: cli.seed })?;
            for r in &results {
                eprintln!("{}", summary_line(r));
            }
            let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite).collect();
            let body = to_json(&json!({ "passed": failed.is_empty(), "failed": failed, "suites": results }))?;
            if !failed.is_empty() {
                print!("{body}");
                return Err(Error::CheckFailed(format!("failing suites: {}", failed.join(", "))));
            }
            sink.emit(&body)
        }
        Command::Bench { workload, size, history, baseline, repeat } => {
            note(&mut sink, "bench", json!({ "workload": workload, "size": size, "repeat": repeat }));
            let w = Workload::parse(&workload, size)?;
            let report = run_best_of(&w, budget, repeat)?;
            append_history(&history, &report)?;
            let gate = baseline.as_deref().map(|p| check_baseline(p, &report)).transpose()?;
            let body = to_json(&json!({ "report": report, "baseline": gate }))?;
            eprintln!(
                "bench {}: {:.3}s, {:.3e} items/s, {:.3e} pairs/s",
                report.workload, report.seconds, report.items_per_sec, report.pairs_per_sec
            );
            if let Some(g) = gate.filter(|g| g.regression) {
                print!("{body}");
                return Err(Error::Regression(format!(
                    "{} took {:.3}s against a baseline of {:.3}s ({:+.1}%)",
                    report.workload,
                    g.seconds,
                    g.baseline_seconds,
                    100.0 * g.slowdown
                )));
            }
            sink.emit(&body)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
