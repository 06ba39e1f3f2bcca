//! Exact rank-2 lattice arithmetic.
//!
//! A lattice is carried by its rational Gram matrix in a fixed input basis.
//! Everything downstream (distance keys, window membership, covering radius)
//! is exact; ambient coordinates appear only as `f64` approximations for
//! reporting.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{common_denominator, format_rational, int, rat, to_f64, to_i64, RatStr, Rational};

/// A vector with exact rational coordinates.
///
/// Offsets and window centers are given in coordinates of the lattice's input
/// basis, so that lattices with irrational ambient coordinates (hexagonal)
/// stay exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalVec2 {
    pub x: Rational,
    pub y: Rational,
}

impl RationalVec2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        RationalVec2 { x, y }
    }

    pub fn zero() -> Self {
        RationalVec2 { x: Rational::zero(), y: Rational::zero() }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        RationalVec2 { x: int(x), y: int(y) }
    }

    pub fn sub(&self, other: &RationalVec2) -> RationalVec2 {
        RationalVec2 { x: &self.x - &other.x, y: &self.y - &other.y }
    }

    pub fn to_strings(&self) -> [RatStr; 2] {
        [RatStr(self.x.clone()), RatStr(self.y.clone())]
    }

    pub fn from_strings(v: &[RatStr; 2]) -> Self {
        RationalVec2 { x: v[0].0.clone(), y: v[1].0.clone() }
    }

    /// Splits into integer numerators over one common positive denominator.
    pub fn common_form(&self) -> Result<([i64; 2], i64)> {
        let d = common_denominator([&self.x, &self.y]);
        let x = &self.x * Rational::from_integer(d.clone());
        let y = &self.y * Rational::from_integer(d.clone());
        Ok(([to_i64(&x.to_integer())?, to_i64(&y.to_integer())?], to_i64(&d)?))
    }
}

impl fmt::Display for RationalVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", format_rational(&self.x), format_rational(&self.y))
    }
}

/// Symmetric 2x2 Gram matrix `[[g11, g12], [g12, g22]]` with rational entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    pub g11: Rational,
    pub g12: Rational,
    pub g22: Rational,
}

impl GramMatrix {
    pub fn new(g11: Rational, g12: Rational, g22: Rational) -> Result<Self> {
        let g = GramMatrix { g11, g12, g22 };
        if !g.g11.is_positive() || !g.det().is_positive() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(g)
    }

    pub fn from_ints(g11: i64, g12: i64, g22: i64) -> Result<Self> {
        GramMatrix::new(int(g11), int(g12), int(g22))
    }

    pub fn det(&self) -> Rational {
        &self.g11 * &self.g22 - &self.g12 * &self.g12
    }

    /// `Q(u) = u^T G u`.
    pub fn eval(&self, u: [i64; 2]) -> Rational {
        let (x, y) = (int(u[0]), int(u[1]));
        &self.g11 * &x * &x + int(2) * &self.g12 * &x * &y + &self.g22 * &y * &y
    }

    pub fn eval_rational(&self, u: &RationalVec2) -> Rational {
        &self.g11 * &u.x * &u.x + int(2) * &self.g12 * &u.x * &u.y + &self.g22 * &u.y * &u.y
    }

    pub fn is_reduced(&self) -> bool {
        self.g11 <= self.g22 && int(2) * self.g12.abs() <= self.g11
    }

    /// Gram matrix of the basis `(M e1, M e2)`.
    pub fn transform(&self, m: &BasisChange) -> GramMatrix {
        let [[a, b], [c, d]] = m.m;
        let col = |p: i64, q: i64| [p, q];
        let (w1, w2) = (col(a, c), col(b, d));
        let g11 = self.eval(w1);
        let g22 = self.eval(w2);
        let g12 = self.inner(w1, w2);
        GramMatrix { g11, g12, g22 }
    }

    pub fn inner(&self, u: [i64; 2], v: [i64; 2]) -> Rational {
        &self.g11 * int(u[0] * v[0]) + &self.g12 * int(u[0] * v[1] + u[1] * v[0]) + &self.g22 * int(u[1] * v[1])
    }

    pub fn to_strings(&self) -> [[RatStr; 2]; 2] {
        let e = |r: &Rational| RatStr(r.clone());
        [[e(&self.g11), e(&self.g12)], [e(&self.g12), e(&self.g22)]]
    }
}

/// Integral binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    /// Checked constructor: positive definite and primitive.
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = QuadForm { a, b, c };
        if a <= 0 || f.discriminant_abs() <= 0 {
            return Err(Error::NotPositiveDefinite);
        }
        if a.gcd(&b).gcd(&c) != 1 {
            return Err(Error::precondition(format!("form ({a},{b},{c}) is not primitive")));
        }
        Ok(f)
    }

    /// `4ac - b^2`.
    pub fn discriminant_abs(&self) -> i128 {
        4 * self.a as i128 * self.c as i128 - (self.b as i128).pow(2)
    }

    #[inline]
    pub fn eval(&self, u: [i64; 2]) -> i128 {
        let (x, y) = (u[0] as i128, u[1] as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// Value as an unsigned key; panics only on a non-definite form.
    #[inline]
    pub fn key(&self, u: [i64; 2]) -> u64 {
        self.eval(u) as u64
    }

    /// Form in the basis `(M e1, M e2)`: `F'(u') = F(M u')`.
    pub fn transform(&self, m: &BasisChange) -> QuadForm {
        let [[p, q], [r, s]] = m.m;
        let (a, b, c) = (self.a, self.b, self.c);
        QuadForm {
            a: a * p * p + b * p * r + c * r * r,
            b: 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
            c: a * q * q + b * q * s + c * s * s,
        }
    }

    /// Largest `|x|` and `|y|` over the ellipse `F(x, y) <= t`.
    pub fn bounding_box(&self, t: u64) -> (i64, i64) {
        let disc = self.discriminant_abs() as f64;
        let t = t as f64;
        let xmax = (4.0 * self.c as f64 * t / disc).sqrt().floor() as i64 + 1;
        let ymax = (4.0 * self.a as f64 * t / disc).sqrt().floor() as i64 + 1;
        (xmax, ymax)
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a, self.b, self.c)
    }
}

/// Integer change of basis; columns are the new basis vectors in old coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisChange {
    pub m: [[i64; 2]; 2],
}

impl BasisChange {
    pub const IDENTITY: BasisChange = BasisChange { m: [[1, 0], [0, 1]] };

    pub fn det(&self) -> i64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Old coordinates of the point with new coordinates `u`.
    pub fn apply(&self, u: [i64; 2]) -> [i64; 2] {
        [self.m[0][0] * u[0] + self.m[0][1] * u[1], self.m[1][0] * u[0] + self.m[1][1] * u[1]]
    }

    /// New coordinates of the point with old coordinates `u` (unimodular only).
    pub fn apply_inverse(&self, u: [i64; 2]) -> [i64; 2] {
        let d = self.det();
        debug_assert!(d == 1 || d == -1);
        let [[a, b], [c, e]] = self.m;
        [d * (e * u[0] - b * u[1]), d * (-c * u[0] + a * u[1])]
    }

    pub fn column(&self, j: usize) -> [i64; 2] {
        [self.m[0][j], self.m[1][j]]
    }
}

/// Lagrange-Gauss reduction of a positive definite Gram matrix.
///
/// Returns a change of basis of determinant `+1` and the reduced Gram matrix,
/// which satisfies `g11 <= g22` and `2|g12| <= g11`.
pub fn gauss_reduce(gram: &GramMatrix) -> Result<(BasisChange, GramMatrix)> {
    if !gram.g11.is_positive() || !gram.det().is_positive() {
        return Err(Error::NotPositiveDefinite);
    }
    let mut m = BasisChange::IDENTITY;
    let (mut g11, mut g12, mut g22) = (gram.g11.clone(), gram.g12.clone(), gram.g22.clone());
    let two = int(2);
    let half = rat(1, 2);
    loop {
        if g22 < g11 {
            // (b1, b2) <- (b2, -b1) keeps the determinant.
            let [[a, b], [c, d]] = m.m;
            m.m = [[b, -a], [d, -c]];
            std::mem::swap(&mut g11, &mut g22);
            g12 = -g12;
        }
        if &two * g12.abs() <= g11 {
            break;
        }
        let q = (&g12 / &g11 + &half).floor();
        let qi = to_i64(&q.to_integer())?;
        // b2 <- b2 - q b1
        m.m[0][1] -= qi * m.m[0][0];
        m.m[1][1] -= qi * m.m[1][0];
        g22 = &g22 - &two * &q * &g12 + &q * &q * &g11;
        g12 = &g12 - &q * &g11;
    }
    Ok((m, GramMatrix { g11, g12, g22 }))
}

/// Primitive integral model: `Q(u) = s * F(u)` for every integer `u`.
pub fn arithmetize(gram: &GramMatrix) -> Result<(Rational, QuadForm)> {
    let two_g12 = int(2) * &gram.g12;
    let l = common_denominator([&gram.g11, &two_g12, &gram.g22]);
    let lr = Rational::from_integer(l.clone());
    let a = (&gram.g11 * &lr).to_integer();
    let b = (&two_g12 * &lr).to_integer();
    let c = (&gram.g22 * &lr).to_integer();
    let g = a.gcd(&b).gcd(&c);
    let form = QuadForm::new(to_i64(&(&a / &g))?, to_i64(&(&b / &g))?, to_i64(&(&c / &g))?)?;
    Ok((Rational::new(g, l), form))
}

/// How ambient lengths are normalized when constants are reported.
///
/// Point counts, distinct-distance counts and distance keys are invariant
/// under similarity; only `s`, the covolume and the radii change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// The Gram matrix exactly as given.
    AsGiven,
    /// Scaled so the shortest nonzero vector has length one.
    ShortestVectorOne,
    /// Scaled to covolume one.
    Unimodular,
}

/// Derived constants under one normalization. Exact squares plus floats.
#[derive(Clone, Debug, Serialize)]
pub struct ReportedConstants {
    pub normalization: Normalization,
    /// `s(Λ)^2`, exact.
    pub scale_s_sq: RatStr,
    /// covolume squared, exact.
    pub covolume_sq: RatStr,
    pub scale_s: f64,
    pub covolume: f64,
    pub lambda1: f64,
    pub covering_radius: f64,
}

/// Exact rank-2 lattice with reduced basis and derived constants.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub label: String,
    pub gram: GramMatrix,
    /// Reduced basis as columns in input coordinates, determinant `+1`.
    pub change_of_basis: BasisChange,
    pub reduced_gram: GramMatrix,
    pub lambda1_sq: Rational,
    /// Covolume squared (`det` of the Gram matrix).
    pub covolume_sq: Rational,
    pub covering_radius_sq: Rational,
    pub scale_s: Rational,
    /// Primitive integral form in the reduced basis.
    pub form: QuadForm,
    /// The same form expressed in the input basis; distance keys use this one.
    pub input_form: QuadForm,
    /// Normalization used when constants are reported by default.
    pub normalization: Normalization,
}

impl LatticeModel {
    /// Builds the model from a Gram matrix and derives every constant.
    pub fn from_gram(label: impl Into<String>, gram: GramMatrix) -> Result<Self> {
        let (change, reduced) = gauss_reduce(&gram)?;
        let (scale_s, input_form) = arithmetize(&gram)?;
        let form = input_form.transform(&change);
        let covolume_sq = gram.det();
        let covering_radius_sq = obtuse_circumradius_sq(&reduced);
        Ok(LatticeModel {
            label: label.into(),
            lambda1_sq: reduced.g11.clone(),
            gram,
            change_of_basis: change,
            reduced_gram: reduced,
            covolume_sq,
            covering_radius_sq,
            scale_s,
            form,
            input_form,
            normalization: Normalization::AsGiven,
        })
    }

    /// Builds the model from two rational ambient basis vectors.
    pub fn from_basis(label: impl Into<String>, v1: &RationalVec2, v2: &RationalVec2) -> Result<Self> {
        let cross = &v1.x * &v2.y - &v1.y * &v2.x;
        if cross.is_zero() {
            return Err(Error::DegenerateBasis);
        }
        let g11 = &v1.x * &v1.x + &v1.y * &v1.y;
        let g12 = &v1.x * &v2.x + &v1.y * &v2.y;
        let g22 = &v2.x * &v2.x + &v2.y * &v2.y;
        LatticeModel::from_gram(label, GramMatrix::new(g11, g12, g22)?)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    /// Built-in lattices: `Z2`, `hex` (shortest vector one) and
    /// `hex-unimodular` (same Gram, constants reported at covolume one).
    pub fn builtin(label: &str) -> Result<Self> {
        match label {
            "Z2" | "z2" => LatticeModel::from_gram("Z2", GramMatrix::from_ints(1, 0, 1)?),
            "hex" => LatticeModel::from_gram("hex", GramMatrix::new(int(1), rat(1, 2), int(1))?),
            "hex-unimodular" => Ok(LatticeModel::from_gram(
                "hex-unimodular",
                GramMatrix::new(int(1), rat(1, 2), int(1))?,
            )?
            .with_normalization(Normalization::Unimodular)),
            other => Err(Error::parse(format!("unknown lattice label {other:?} (expected Z2, hex, hex-unimodular)"))),
        }
    }

    pub fn covolume(&self) -> f64 {
        to_f64(&self.covolume_sq).sqrt()
    }

    pub fn covering_radius(&self) -> f64 {
        to_f64(&self.covering_radius_sq).sqrt()
    }

    /// `Q(u)` exactly.
    pub fn norm_sq(&self, u: [i64; 2]) -> Rational {
        self.gram.eval(u)
    }

    /// Distance key of a difference vector: `|λ(u)|^2 = s * key`.
    #[inline]
    pub fn key(&self, u: [i64; 2]) -> u64 {
        self.input_form.key(u)
    }

    /// Squared length carried by a key.
    pub fn key_to_norm_sq(&self, key: u64) -> Rational {
        &self.scale_s * Rational::from_integer(BigInt::from(key))
    }

    /// Largest key whose squared length is at most `r_sq`.
    pub fn max_key_within(&self, r_sq: &Rational) -> Result<u64> {
        if r_sq.is_negative() {
            return Ok(0);
        }
        let k = crate::rational::floor_i128(&(r_sq / &self.scale_s))?;
        u64::try_from(k).map_err(|_| Error::Overflow("key bound"))
    }

    /// Deep hole: circumcenter of the Delaunay triangle, in input coordinates.
    pub fn deep_hole(&self) -> RationalVec2 {
        let r = &self.reduced_gram;
        // Obtuse orientation: second reduced vector flipped when g12 > 0.
        let flip = r.g12.is_positive();
        let h = -r.g12.abs();
        // alpha g11 + beta h = g11/2 ; alpha h + beta g22 = h + g22/2
        let det = &r.g11 * &r.g22 - &h * &h;
        let rhs1 = &r.g11 / int(2);
        let rhs2 = &h + &r.g22 / int(2);
        let alpha = (&rhs1 * &r.g22 - &h * &rhs2) / &det;
        let beta = (&r.g11 * &rhs2 - &h * &rhs1) / &det;
        let beta = if flip { -beta } else { beta };
        let w1 = self.change_of_basis.column(0);
        let w2 = self.change_of_basis.column(1);
        RationalVec2 {
            x: &alpha * int(w1[0]) + &beta * int(w2[0]),
            y: &alpha * int(w1[1]) + &beta * int(w2[1]),
        }
    }

    /// Non-authoritative ambient basis (Cholesky of the Gram matrix).
    pub fn ambient_basis_approx(&self) -> [[f64; 2]; 2] {
        let g11 = to_f64(&self.gram.g11);
        let g12 = to_f64(&self.gram.g12);
        let det = to_f64(&self.covolume_sq);
        let r = g11.sqrt();
        [[r, 0.0], [g12 / r, det.sqrt() / r]]
    }

    /// Squared similarity factor taking the as-given Gram to `norm`.
    fn similarity_sq(&self, norm: Normalization) -> Rational {
        match norm {
            Normalization::AsGiven => Rational::one(),
            Normalization::ShortestVectorOne => (Rational::one() / &self.lambda1_sq).pow(2),
            Normalization::Unimodular => Rational::one() / &self.covolume_sq,
        }
    }

    pub fn constants(&self, norm: Normalization) -> ReportedConstants {
        let k2 = self.similarity_sq(norm);
        let k = to_f64(&k2).sqrt();
        ReportedConstants {
            normalization: norm,
            scale_s_sq: RatStr(&k2 * &self.scale_s * &self.scale_s),
            covolume_sq: RatStr(&k2 * &self.covolume_sq),
            scale_s: k * to_f64(&self.scale_s),
            covolume: k * self.covolume(),
            lambda1: (k * to_f64(&self.lambda1_sq)).sqrt(),
            covering_radius: (k * to_f64(&self.covering_radius_sq)).sqrt(),
        }
    }

    pub fn default_constants(&self) -> ReportedConstants {
        self.constants(self.normalization)
    }

    pub fn to_spec(&self) -> LatticeSpec {
        LatticeSpec::Gram { gram: self.gram.to_strings(), label: Some(self.label.clone()) }
    }
}

/// Squared circumradius of the Delaunay triangle of the obtuse superbasis
/// built on a reduced Gram matrix: `g11 g22 (g11 - 2|g12| + g22) / (4 det)`.
fn obtuse_circumradius_sq(reduced: &GramMatrix) -> Rational {
    let third = &reduced.g11 - int(2) * reduced.g12.abs() + &reduced.g22;
    &reduced.g11 * &reduced.g22 * third / (int(4) * reduced.det())
}

/// `s / (covolume * C)` with its components.
#[derive(Clone, Debug, Serialize)]
pub struct SStarValue {
    pub value: f64,
    pub scale_s: f64,
    pub covolume: f64,
    pub bernays_estimate: f64,
}

impl SStarValue {
    pub fn from_components(scale_s: f64, covolume: f64, bernays_estimate: f64) -> Result<Self> {
        if !(bernays_estimate > 0.0) {
            return Err(Error::precondition("Bernays estimate must be positive"));
        }
        Ok(SStarValue { value: scale_s / (covolume * bernays_estimate), scale_s, covolume, bernays_estimate })
    }

    /// The lattice lower-bound constant `(π/4) S*`.
    pub fn lower_bound_constant(&self) -> f64 {
        PI / 4.0 * self.value
    }
}

/// `S*` under the model's default normalization (it is similarity invariant).
pub fn s_star(model: &LatticeModel, bernays_estimate: f64) -> Result<SStarValue> {
    let c = model.default_constants();
    SStarValue::from_components(c.scale_s, c.covolume, bernays_estimate)
}

/// Lattice file: a built-in label or an explicit rational Gram matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Label(String),
    Gram {
        gram: [[RatStr; 2]; 2],
        #[serde(default)]
        label: Option<String>,
    },
}

impl LatticeSpec {
    pub fn resolve(&self) -> Result<LatticeModel> {
        match self {
            LatticeSpec::Label(l) => LatticeModel::builtin(l),
            LatticeSpec::Gram { gram, label } => {
                if gram[0][1] != gram[1][0] {
                    return Err(Error::parse("gram matrix must be symmetric"));
                }
                // A label naming a built-in only selects it when no matrix disagrees.
                let g = GramMatrix::new(gram[0][0].0.clone(), gram[0][1].0.clone(), gram[1][1].0.clone())?;
                let model = LatticeModel::from_gram(label.clone().unwrap_or_else(|| "custom".into()), g)?;
                Ok(match label.as_deref() {
                    Some("hex-unimodular") => model.with_normalization(Normalization::Unimodular),
                    _ => model,
                })
            }
        }
    }
}

pub fn parse_lattice_json(text: &str) -> Result<LatticeModel> {
    let spec: LatticeSpec = serde_json::from_str(text)?;
    spec.resolve()
}
