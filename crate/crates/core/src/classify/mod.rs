//! Stability classifier: line-heavy, two-shift structure, or quantile localization.

mod localize;
mod two_shift;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use localize::{ball_counts, localization_deficit, localize, top_cap_len, top_cap_split, Localization, TopCap};
pub use two_shift::{
    basis_coords, energy_residue_check, popular_shift_analysis, two_shift_pipeline, PopularShifts,
    ResidueEnergyReport, TwoShiftCertificate, TwoShiftFailure,
};

use crate::error::{Error, Result};
use crate::pointset::{LatticePointSet, PointSetFile};
use crate::spectrum::{
    distance_spectrum, energy_of_coords, line_histogram, residue_decompose_coords, shift_histogram, LineKey,
};
use crate::windows::{find_heavy_shifts, LambdaRectangle};

pub const REPORT_SCHEMA: &str = "distlab.classification/1";

/// Classifier constants; all in `(0, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Quantile exponent: `θ_k = (log k)^(-1/2 - σ)`.
    pub sigma: f64,
    pub c_line: f64,
    pub c_shift: f64,
    pub alpha_energy: f64,
    /// Localization deficiency; `θ_k^(1/2)` when absent.
    #[serde(default)]
    pub eta_target: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { sigma: 0.25, c_line: 0.1, c_shift: 0.1, alpha_energy: 0.1, eta_target: None }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma <= 0.25) {
            return Err(Error::precondition(format!("sigma = {} not in (0, 1/4]", self.sigma)));
        }
        for (name, v) in [("c_line", self.c_line), ("c_shift", self.c_shift), ("alpha_energy", self.alpha_energy)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::precondition(format!("{name} = {v} not in (0, 1]")));
            }
        }
        if let Some(e) = self.eta_target {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::precondition(format!("eta_target = {e} not in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn theta(&self, k: usize) -> f64 {
        (k as f64).ln().powf(-0.5 - self.sigma)
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.eta_target.unwrap_or_else(|| self.theta(k).sqrt())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LineCertificate {
    pub line: LineKey,
    pub s: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalizedCertificate {
    pub theta: f64,
    pub eta: f64,
    pub top_l: usize,
    pub top_mass: u64,
    pub top_bound_floor: u128,
    pub t_star_index: usize,
    pub t_star_key: u64,
    pub bottom_mass: u64,
    pub z_index: usize,
    pub z: [i64; 2],
    pub ball_count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Diagnostics {
    pub heaviest_line: Option<u64>,
    pub two_shift_failure: Option<String>,
    pub localization_failure: Option<String>,
    pub localization_deficit: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "certificate")]
pub enum Outcome {
    LineHeavy(LineCertificate),
    TwoShift(Box<TwoShiftCertificate>),
    Localized(LocalizedCertificate),
    Indeterminate(Diagnostics),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::LineHeavy(_) => "LineHeavy",
            Outcome::TwoShift(_) => "TwoShift",
            Outcome::Localized(_) => "Localized",
            Outcome::Indeterminate(_) => "Indeterminate",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub schema: String,
    pub config: ClassifierConfig,
    pub n: usize,
    pub k: usize,
    pub energy_with_diagonal: u128,
    /// `E₊ / n^3`.
    pub energy_ratio: f64,
    pub outcome: Outcome,
    pub diagnostics: Diagnostics,
    /// The classified input, for independent re-verification.
    pub input: PointSetFile,
}

/// Branches in order: line-heavy, two-shift (when the energy is large),
/// localization; `Indeterminate` when none fires at these constants.
pub fn classify(x: &LatticePointSet, config: &ClassifierConfig) -> Result<ClassificationReport> {
    config.validate()?;
    let n = x.len();
    if n < 3 {
        return Err(Error::precondition("classification needs at least three points"));
    }
    let (spec, (lines, hist)) = rayon::join(|| distance_spectrum(x), || rayon::join(|| line_histogram(x), || shift_histogram(x)));
    let spec = spec?;
    let k = spec.k();
    let energy = hist.energy().energy_with_diagonal;
    let nf = n as f64;
    let mut diag = Diagnostics { heaviest_line: None, two_shift_failure: None, localization_failure: None, localization_deficit: None };

    let heaviest = lines.heaviest();
    diag.heaviest_line = heaviest.map(|h| h.1);
    let outcome = 'branch: {
        if let Some((line, s)) = heaviest {
            if s as f64 >= config.c_line * nf {
                break 'branch Outcome::LineHeavy(LineCertificate { line, s });
            }
        }
        if energy as f64 >= config.alpha_energy * nf * nf * nf {
            match two_shift_pipeline(x.points(), &hist, &x.model().input_form, config.c_shift, config.alpha_energy) {
                Ok(cert) => break 'branch Outcome::TwoShift(Box::new(cert)),
                Err(f) => diag.two_shift_failure = Some(f.reason().into()),
            }
        } else {
            diag.two_shift_failure = Some("energy-below-threshold".into());
        }
        let theta = config.theta(k);
        let eta = config.eta(k);
        let l = top_cap_len(k, theta);
        let cap = top_cap_split(&spec, l);
        let t_star_index = crate::spectrum::quantile_index(k, theta);
        if t_star_index == 0 {
            diag.localization_failure = Some("quantile-index-underflow".into());
            break 'branch Outcome::Indeterminate(diag.clone());
        }
        let t_star_key = spec.entries[t_star_index - 1].key;
        let form = x.model().input_form;
        match localize(x.points(), &spec, |v| form.key(v), t_star_key, eta) {
            Localization::Found { z_index, z, count } => Outcome::Localized(LocalizedCertificate {
                theta,
                eta,
                top_l: l,
                top_mass: cap.top_mass,
                top_bound_floor: cap.bound_floor,
                t_star_index,
                t_star_key,
                bottom_mass: spec.mass_at_most(t_star_key),
                z_index,
                z,
                ball_count: count,
            }),
            Localization::Fail { deficit } => {
                diag.localization_failure = Some("pair-mass-below-quantile".into());
                diag.localization_deficit = Some(deficit);
                Outcome::Indeterminate(diag.clone())
            }
        }
    };
    let mut config = config.clone();
    config.eta_target = Some(config.eta(k));
    Ok(ClassificationReport {
        schema: REPORT_SCHEMA.into(),
        config,
        n,
        k,
        energy_with_diagonal: energy,
        energy_ratio: energy as f64 / (nf * nf * nf),
        outcome,
        diagnostics: diag,
        input: x.to_file(),
    })
}

/// Result of re-checking a report against its embedded points.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationResult {
    pub outcome: String,
    pub mismatches: Vec<String>,
}

impl VerificationResult {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recomputes every claimed count of a report from its raw points, using only
/// spectrum, energy, line and residue primitives.
pub fn verify_report(report: &ClassificationReport) -> Result<VerificationResult> {
    let x = report.input.clone().into_point_set()?;
    let pts = x.points();
    let n = x.len();
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            bad.push(what.to_string());
        }
    };
    check(report.n == n, "n");
    let spec = distance_spectrum(&x)?;
    check(report.k == spec.k(), "k");
    check(report.energy_with_diagonal == energy_of_coords(pts).energy_with_diagonal, "energy");
    let cfg = &report.config;
    match &report.outcome {
        Outcome::LineHeavy(c) => {
            let on = pts.iter().filter(|p| c.line.contains(**p)).count() as u64;
            check(on == c.s, "line occupancy");
            check(c.s as f64 >= cfg.c_line * n as f64, "line threshold");
        }
        Outcome::TwoShift(c) => {
            let v_par = two_shift::parallel(c.v1, c.v2);
            check(!v_par, "v1 and v2 nonparallel");
            let members: HashSet<[i64; 2]> = pts.iter().copied().collect();
            check(c.a.iter().all(|p| members.contains(p)), "A inside X");
            let in_window: Vec<[i64; 2]> = pts
                .iter()
                .copied()
                .filter(|&p| basis_coords(p, c.origin, c.v1, c.v2).is_some_and(|u| c.window.contains(u)))
                .collect();
            let a_set: HashSet<[i64; 2]> = c.a.iter().copied().collect();
            check(in_window.len() == c.a.len() && in_window.iter().all(|p| a_set.contains(p)), "A = X ∩ W");
            check(two_shift::overlap(&a_set, &c.a, c.v1) == c.overlap_v1, "overlap v1");
            check(two_shift::overlap(&a_set, &c.a, c.v2) == c.overlap_v2, "overlap v2");
            let need = cfg.c_shift * c.a.len() as f64;
            check(c.overlap_v1 as f64 >= need && c.overlap_v2 as f64 >= need, "overlap threshold");
            let coords: Vec<[i64; 2]> =
                c.a.iter().map(|&p| basis_coords(p, c.origin, c.v1, c.v2).unwrap_or([i64::MIN, i64::MIN])).collect();
            let residue = energy_residue_check(&coords, c.residue.alpha);
            check(residue == c.residue, "residue and energy");
            check(residue_decompose_coords(&coords).sizes() == c.residue.sizes, "residue sizes");
            check(residue.bound_holds && residue.residue_holds, "residue inequalities");
            match LambdaRectangle::new(c.window.a0, c.window.l1, c.window.l2).and_then(|w| find_heavy_shifts(&coords, &w)) {
                Ok(h) => check(h.overlap1 == c.heavy_shifts.overlap1 && h.overlap2 == c.heavy_shifts.overlap2, "heavy shifts"),
                Err(_) => check(false, "heavy shifts"),
            }
        }
        Outcome::Localized(c) => {
            check(c.t_star_index >= 1 && c.t_star_index <= spec.k(), "quantile index");
            if c.t_star_index >= 1 && c.t_star_index <= spec.k() {
                check(spec.entries[c.t_star_index - 1].key == c.t_star_key, "t★ key");
            }
            check(spec.mass_at_most(c.t_star_key) == c.bottom_mass, "bottom mass");
            let cap = top_cap_split(&spec, c.top_l);
            check(cap.top_mass == c.top_mass && cap.holds, "top cap");
            let form = x.model().input_form;
            check(pts.get(c.z_index) == Some(&c.z), "center");
            let count = pts.iter().filter(|p| form.key([p[0] - c.z[0], p[1] - c.z[1]]) <= c.t_star_key).count();
            check(count == c.ball_count, "ball count");
            check(count as f64 >= (1.0 - c.eta) * n as f64, "ball count threshold");
        }
        Outcome::Indeterminate(_) => {}
    }
    Ok(VerificationResult { outcome: report.outcome.name().into(), mismatches: bad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeModel;
    use std::sync::Arc;

    fn set(pts: Vec<[i64; 2]>) -> LatticePointSet {
        LatticePointSet::from_points(Arc::new(LatticeModel::builtin("Z2").unwrap()), pts).unwrap()
    }

    #[test]
    fn collinear_is_line_heavy() {
        let r = classify(&set((0..30).map(|i| [i, 3 * i + 1]).collect()), &ClassifierConfig::default()).unwrap();
        match &r.outcome {
            Outcome::LineHeavy(c) => assert_eq!(c.s, 30),
            other => panic!("{other:?}"),
        }
        assert!(verify_report(&r).unwrap().ok());
    }

    #[test]
    fn grid_is_two_shift() {
        let pts: Vec<[i64; 2]> = (0..12).flat_map(|a| (0..12).map(move |b| [a, b])).collect();
        let r = classify(&set(pts), &ClassifierConfig::default()).unwrap();
        match &r.outcome {
            Outcome::TwoShift(c) => assert!(c.residue.sizes.iter().max().unwrap() * 4 >= c.a.len()),
            other => panic!("{other:?}"),
        }
        let v = verify_report(&r).unwrap();
        assert!(v.ok(), "{:?}", v.mismatches);
    }

    #[test]
    fn tampered_report_fails() {
        let pts: Vec<[i64; 2]> = (0..12).flat_map(|a| (0..12).map(move |b| [a, b])).collect();
        let mut r = classify(&set(pts), &ClassifierConfig::default()).unwrap();
        if let Outcome::TwoShift(c) = &mut r.outcome {
            c.overlap_v1 += 1;
        }
        assert!(!verify_report(&r).unwrap().ok());
    }

    #[test]
    fn config_validation() {
        let bad = ClassifierConfig { sigma: 0.5, ..ClassifierConfig::default() };
        assert!(classify(&set(vec![[0, 0], [1, 0], [5, 5]]), &bad).is_err());
        assert!(classify(&set(vec![[0, 0], [1, 0]]), &ClassifierConfig::default()).is_err());
    }
}
