//! Evaluatable scalar fields on `R^m` with values in `[-inf, +inf)`.
//!
//! A [`ScalarField`] wraps a pure evaluator together with its dimension,
//! its domain and a class tag. Catalog constructors build harmonic
//! polynomials, log-moduli of entire functions, convex and radial fields;
//! combinators build positive parts, shifts, inward extensions and complex
//! line slices.
//!
//! `-inf` is a legitimate value (zeros of entire functions, poles of the
//! Newtonian kernel). `+inf` and NaN never are; quadrature rejects them.
//!
//! The boundary regularity condition on spheres (upper semicontinuity from
//! inside at almost every boundary point) cannot be checked numerically;
//! every catalog field is continuous up to the boundary wherever it is finite,
//! so the condition holds for them.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{norm, Dim, GeometryError, UNIT_TOLERANCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("polynomial is not harmonic: discrete Laplacian {laplacian:e} at {point:?} exceeds {tolerance:e}")]
    NotHarmonic {
        point: Vec<f64>,
        laplacian: f64,
        tolerance: f64,
    },
    #[error("entire function is identically zero")]
    ZeroFunction,
    #[error("bad radii: {0}")]
    BadRadii(String),
    #[error("direction is not a unit vector of C^n (|s| = {0})")]
    BadDirection(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A real number or `-inf`, totally ordered with `-inf` minimal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub const NEG_INFINITY: ExtendedReal = ExtendedReal(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() || value == f64::INFINITY {
            None
        } else {
            Some(ExtendedReal(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_neg_infinite(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn finite(self) -> Option<f64> {
        if self.0.is_finite() {
            Some(self.0)
        } else {
            None
        }
    }
}

impl TryFrom<f64> for ExtendedReal {
    type Error = String;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        ExtendedReal::new(value).ok_or_else(|| format!("{value} is not an extended real"))
    }
}

impl From<ExtendedReal> for f64 {
    fn from(v: ExtendedReal) -> f64 {
        v.0
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_neg_infinite() {
            f.write_str("-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Where a field is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Domain {
    Whole,
    /// `R^m` minus the closed ball of radius `r0` about the origin.
    Exterior {
        r0: f64,
    },
    /// Open ball of the given radius about the origin.
    Ball {
        radius: f64,
    },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            Domain::Whole => true,
            Domain::Exterior { r0 } => norm(x) > r0,
            Domain::Ball { radius } => norm(x) < radius,
        }
    }

    /// Whether the sphere `S(center, r)` lies inside the domain.
    pub fn contains_sphere(&self, center: &[f64], r: f64) -> bool {
        let c = norm(center);
        match *self {
            Domain::Whole => true,
            Domain::Exterior { r0 } => (c - r).abs() > r0,
            Domain::Ball { radius } => c + r < radius,
        }
    }

    /// Whether the closed ball `B(center, r)` lies inside the domain.
    pub fn contains_ball(&self, center: &[f64], r: f64) -> bool {
        let c = norm(center);
        match *self {
            Domain::Whole => true,
            Domain::Exterior { r0 } => c - r > r0,
            Domain::Ball { radius } => c + r < radius,
        }
    }

    /// Radius of the excluded ball about the origin (0 for the whole space).
    pub fn exclusion_radius(&self) -> Option<f64> {
        match *self {
            Domain::Whole => Some(0.0),
            Domain::Exterior { r0 } => Some(r0),
            Domain::Ball { .. } => None,
        }
    }

    fn intersect(self, other: Domain) -> Result<Domain, FieldError> {
        use Domain::*;
        Ok(match (self, other) {
            (Whole, d) | (d, Whole) => d,
            (Exterior { r0: a }, Exterior { r0: b }) => Exterior { r0: a.max(b) },
            (Ball { radius: a }, Ball { radius: b }) => Ball { radius: a.min(b) },
            _ => {
                return Err(FieldError::InvalidParameter(
                    "cannot combine a ball-domain field with an exterior-domain field".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldClass {
    Harmonic,
    Subharmonic,
    Convex,
    LogModulus,
    PositivePart,
    Composite,
}

type Evaluator = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Immutable scalar field; cloning shares the evaluator.
#[derive(Clone)]
pub struct ScalarField {
    dim: Dim,
    domain: Domain,
    class: FieldClass,
    label: String,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("class", &self.class)
            .field("label", &self.label)
            .finish()
    }
}

impl ScalarField {
    /// Wraps an arbitrary evaluator. Subharmonicity is not verified; use
    /// `quadrature::spot_check_submean` for a sampled check.
    pub fn from_fn<F>(dim: Dim, domain: Domain, class: FieldClass, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            dim,
            domain,
            class,
            label: label.into(),
            evaluator: Arc::new(f),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn class(&self) -> FieldClass {
        self.class
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Raw evaluation; may return `-inf`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim.get());
        (self.evaluator)(x)
    }

    /// Evaluation as an extended real; `None` signals an invalid value (NaN or `+inf`).
    pub fn value(&self, x: &[f64]) -> Option<ExtendedReal> {
        ExtendedReal::new(self.eval(x))
    }

    fn derived(&self, class: FieldClass, label: String, f: Arc<Evaluator>) -> Self {
        ScalarField {
            dim: self.dim,
            domain: self.domain,
            class,
            label,
            evaluator: f,
        }
    }
}

/// Monomial `coef * prod x_i^{e_i}` of a real polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(coef: f64, exponents: Vec<u32>) -> Self {
        Monomial { coef, exponents }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(self.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }
}

fn eval_poly(terms: &[Monomial], x: &[f64]) -> f64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

/// Central-difference Laplacian with step `h`.
pub fn discrete_laplacian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let mut p = x.to_vec();
    let centre = f(x);
    let mut acc = 0.0;
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let plus = f(&p);
        p[i] = x[i] - h;
        let minus = f(&p);
        p[i] = x[i];
        acc += plus - 2.0 * centre + minus;
    }
    acc / (h * h)
}

const HARMONIC_PROBES: usize = 100;
const HARMONIC_STEP: f64 = 1e-3;
const HARMONIC_RTOL: f64 = 1e-4;

/// Harmonic polynomial from a monomial list, validated by a discrete
/// Laplacian on 100 pseudo-random points of `[-1, 1]^m`.
pub fn make_harmonic_poly(m: Dim, terms: Vec<Monomial>) -> Result<ScalarField, FieldError> {
    for t in &terms {
        if t.exponents.len() != m.get() {
            return Err(FieldError::DimensionMismatch {
                expected: m.get(),
                got: t.exponents.len(),
            });
        }
        if !t.coef.is_finite() {
            return Err(FieldError::InvalidParameter("non-finite coefficient".into()));
        }
    }
    let degree = terms.iter().map(|t| t.exponents.iter().sum::<u32>()).max().unwrap_or(0);
    // bound on |h| over the probe cube, used to scale the tolerance
    let scale = 1.0 + terms.iter().map(|t| t.coef.abs()).sum::<f64>() * 2f64.powi(degree as i32);
    let tolerance = HARMONIC_RTOL * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a52_6d6f_6e69_6321);
    for _ in 0..HARMONIC_PROBES {
        let x: Vec<f64> = (0..m.get()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lap = discrete_laplacian(|p| eval_poly(&terms, p), &x, HARMONIC_STEP);
        if lap.abs() > tolerance {
            return Err(FieldError::NotHarmonic {
                point: x,
                laplacian: lap,
                tolerance,
            });
        }
    }
    let label = format!("harmonic_poly({} terms, m={})", terms.len(), m);
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Harmonic,
        label,
        move |x| eval_poly(&terms, x),
    ))
}

pub fn constant(m: Dim, c: f64) -> Result<ScalarField, FieldError> {
    if !c.is_finite() && c != f64::NEG_INFINITY {
        return Err(FieldError::InvalidParameter(format!("constant {c}")));
    }
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Harmonic,
        format!("constant({c})"),
        move |_| c,
    ))
}

/// Affine function `w . x + b`.
pub fn affine(weights: Vec<f64>, offset: f64) -> Result<ScalarField, FieldError> {
    let m = Dim::new(weights.len())?;
    if weights.iter().chain([&offset]).any(|c| !c.is_finite()) {
        return Err(FieldError::InvalidParameter("non-finite affine coefficient".into()));
    }
    let label = format!("affine({weights:?}, {offset})");
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Harmonic,
        label,
        move |x| x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() + offset,
    ))
}

/// Entire function on `C` whose log-modulus is wanted.
#[derive(Debug, Clone, PartialEq)]
pub enum EntireSpec {
    /// Coefficients in ascending powers of `z`.
    Polynomial(Vec<Complex64>),
    /// `z -> exp(coeff * z^degree)`.
    ExpMonomial { coeff: Complex64, degree: u32 },
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// `ln|f|` on `R^2 = C`; `-inf` at zeros of `f`.
pub fn make_log_modulus(spec: EntireSpec) -> Result<ScalarField, FieldError> {
    let m = Dim::new(2)?;
    match spec {
        EntireSpec::Polynomial(coeffs) => {
            if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(FieldError::InvalidParameter("non-finite coefficient".into()));
            }
            if coeffs.iter().all(|c| c.norm() == 0.0) {
                return Err(FieldError::ZeroFunction);
            }
            let label = format!("log_modulus_poly(deg {})", coeffs.len().saturating_sub(1));
            Ok(ScalarField::from_fn(
                m,
                Domain::Whole,
                FieldClass::LogModulus,
                label,
                move |x| horner(&coeffs, Complex64::new(x[0], x[1])).norm().ln(),
            ))
        }
        EntireSpec::ExpMonomial { coeff, degree } => {
            if !coeff.re.is_finite() || !coeff.im.is_finite() {
                return Err(FieldError::InvalidParameter("non-finite coefficient".into()));
            }
            let label = format!("log_modulus_exp(({coeff}) z^{degree})");
            Ok(ScalarField::from_fn(
                m,
                Domain::Whole,
                FieldClass::LogModulus,
                label,
                move |x| (coeff * Complex64::new(x[0], x[1]).powu(degree)).re,
            ))
        }
    }
}

/// Term `coef * prod w_j^{e_j}` of a polynomial on `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMonomial {
    pub coef: Complex64,
    pub exponents: Vec<u32>,
}

/// `ln|p|` for a polynomial `p` on `C^n`, seen as a field on `R^{2n}` with
/// coordinates `(Re w_1, Im w_1, Re w_2, ...)`.
pub fn make_log_modulus_multi(n: usize, terms: Vec<ComplexMonomial>) -> Result<ScalarField, FieldError> {
    let m = Dim::new(2 * n)?;
    for t in &terms {
        if t.exponents.len() != n {
            return Err(FieldError::DimensionMismatch {
                expected: n,
                got: t.exponents.len(),
            });
        }
    }
    if terms.iter().all(|t| t.coef.norm() == 0.0) {
        return Err(FieldError::ZeroFunction);
    }
    let label = format!("log_modulus_poly_c{n}({} terms)", terms.len());
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::LogModulus,
        label,
        move |x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &terms {
                let mut term = t.coef;
                for (j, &e) in t.exponents.iter().enumerate() {
                    if e > 0 {
                        term *= Complex64::new(x[2 * j], x[2 * j + 1]).powu(e);
                    }
                }
                acc += term;
            }
            acc.norm().ln()
        },
    ))
}

/// `|x - center|^power`. Subharmonic for `power > 0` when `m >= 2`; convex
/// when `m = 1` requires `power >= 1`.
pub fn radial_power(center: Vec<f64>, power: f64) -> Result<ScalarField, FieldError> {
    let m = Dim::new(center.len())?;
    if !(power > 0.0 && power.is_finite()) {
        return Err(FieldError::InvalidParameter(format!("power {power} must be positive")));
    }
    if m.get() == 1 && power < 1.0 {
        return Err(FieldError::InvalidParameter(
            "|x|^p with p < 1 is not convex on the line".into(),
        ));
    }
    let class = if m.get() == 1 {
        FieldClass::Convex
    } else {
        FieldClass::Subharmonic
    };
    let label = format!("radial_power({center:?}, {power})");
    Ok(ScalarField::from_fn(m, Domain::Whole, class, label, move |x| {
        crate::geometry::distance(x, &center).powf(power)
    }))
}

/// `ln|z - a|` on the plane.
pub fn log_distance(a: [f64; 2]) -> Result<ScalarField, FieldError> {
    make_log_modulus(EntireSpec::Polynomial(vec![
        Complex64::new(-a[0], -a[1]),
        Complex64::new(1.0, 0.0),
    ]))
}

/// `-scale * |x - a|^{2-m}` for `m >= 3`: subharmonic, `-inf` at `a`.
pub fn newton_kernel(center: Vec<f64>, scale: f64) -> Result<ScalarField, FieldError> {
    let m = Dim::new(center.len())?;
    if m.get() < 3 {
        return Err(FieldError::InvalidParameter("Newton kernel needs m >= 3".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(FieldError::InvalidParameter("scale must be positive".into()));
    }
    let e = 2 - m.get() as i32;
    let label = format!("newton_kernel({center:?}, {scale})");
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Subharmonic,
        label,
        move |x| {
            let d = crate::geometry::distance(x, &center);
            if d == 0.0 {
                f64::NEG_INFINITY
            } else {
                -scale * d.powi(e)
            }
        },
    ))
}

/// `sum |x_i|`, convex.
pub fn sum_abs(m: Dim) -> ScalarField {
    ScalarField::from_fn(m, Domain::Whole, FieldClass::Convex, "sum_abs", |x| {
        x.iter().map(|c| c.abs()).sum()
    })
}

/// `exp(w . x)`, convex and of infinite order when `w != 0`.
pub fn exp_linear(weights: Vec<f64>) -> Result<ScalarField, FieldError> {
    let m = Dim::new(weights.len())?;
    let label = format!("exp_linear({weights:?})");
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Convex,
        label,
        move |x| x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>().exp(),
    ))
}

/// `max_j (w_j . x + b_j)`, convex.
pub fn max_affine(pieces: Vec<(Vec<f64>, f64)>) -> Result<ScalarField, FieldError> {
    let first = pieces
        .first()
        .ok_or_else(|| FieldError::InvalidParameter("max_affine needs at least one piece".into()))?;
    let m = Dim::new(first.0.len())?;
    if pieces.iter().any(|(w, _)| w.len() != m.get()) {
        return Err(FieldError::InvalidParameter(
            "max_affine pieces differ in dimension".into(),
        ));
    }
    let label = format!("max_affine({} pieces)", pieces.len());
    Ok(ScalarField::from_fn(
        m,
        Domain::Whole,
        FieldClass::Convex,
        label,
        move |x| {
            pieces
                .iter()
                .map(|(w, b)| x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b)
                .fold(f64::NEG_INFINITY, f64::max)
        },
    ))
}

/// Poisson kernel `(|p|^2 - |x|^2) / |x - p|^m` with pole `p`: harmonic and
/// positive on the open ball of radius `|p|`.
pub fn poisson_kernel(pole: Vec<f64>) -> Result<ScalarField, FieldError> {
    let m = Dim::new(pole.len())?;
    let rho = norm(&pole);
    if rho <= 0.0 || !rho.is_finite() {
        return Err(FieldError::InvalidParameter(
            "pole must be a nonzero finite point".into(),
        ));
    }
    let label = format!("poisson_kernel({pole:?})");
    let mi = m.get() as i32;
    Ok(ScalarField::from_fn(
        m,
        Domain::Ball { radius: rho },
        FieldClass::Harmonic,
        label,
        move |x| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            (rho * rho - r2) / crate::geometry::distance(x, &pole).powi(mi)
        },
    ))
}

/// Pointwise `max{0, v}`.
pub fn positive_part(v: &ScalarField) -> ScalarField {
    let inner = v.evaluator.clone();
    v.derived(
        FieldClass::PositivePart,
        format!("({})^+", v.label),
        Arc::new(move |x| {
            let y = inner(x);
            if y > 0.0 {
                y
            } else {
                0.0
            }
        }),
    )
}

/// `(v - level)^+`.
pub fn shift_sub_const(v: &ScalarField, level: f64) -> Result<ScalarField, FieldError> {
    if !level.is_finite() {
        return Err(FieldError::InvalidParameter("shift level must be finite".into()));
    }
    let inner = v.evaluator.clone();
    Ok(v.derived(
        FieldClass::PositivePart,
        format!("({} - {level})^+", v.label),
        Arc::new(move |x| {
            let y = inner(x) - level;
            if y > 0.0 {
                y
            } else {
                0.0
            }
        }),
    ))
}

/// `v + c`; `-inf + c = -inf`.
pub fn add_const(v: &ScalarField, c: f64) -> Result<ScalarField, FieldError> {
    if !c.is_finite() {
        return Err(FieldError::InvalidParameter("added constant must be finite".into()));
    }
    let inner = v.evaluator.clone();
    let class = match v.class {
        FieldClass::PositivePart => FieldClass::Composite,
        other => other,
    };
    Ok(v.derived(class, format!("{} + {c}", v.label), Arc::new(move |x| inner(x) + c)))
}

/// `c * v` for `c > 0`.
pub fn scale(v: &ScalarField, c: f64) -> Result<ScalarField, FieldError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(FieldError::InvalidParameter("scale factor must be positive".into()));
    }
    let inner = v.evaluator.clone();
    Ok(v.derived(v.class, format!("{c} * {}", v.label), Arc::new(move |x| c * inner(x))))
}

/// Pointwise maximum of two fields of the same dimension.
pub fn max_of(a: &ScalarField, b: &ScalarField) -> Result<ScalarField, FieldError> {
    if a.dim != b.dim {
        return Err(FieldError::DimensionMismatch {
            expected: a.dim.get(),
            got: b.dim.get(),
        });
    }
    let domain = a.domain.intersect(b.domain)?;
    let (fa, fb) = (a.evaluator.clone(), b.evaluator.clone());
    Ok(ScalarField {
        dim: a.dim,
        domain,
        class: FieldClass::Composite,
        label: format!("max({}, {})", a.label, b.label),
        evaluator: Arc::new(move |x| fa(x).max(fb(x))),
    })
}

/// Extension of a field given outside the closed ball `B(r0)` to the whole
/// space: `level` on the closed ball `B(r1)`, `max{v, level}` outside it.
pub fn extend_inward(v: &ScalarField, level: f64, r0: f64, r1: f64) -> Result<ScalarField, FieldError> {
    if !(r0 >= 0.0 && r1 > r0 && r1.is_finite()) {
        return Err(FieldError::BadRadii(format!("need 0 <= r0 < r1, got r0={r0}, r1={r1}")));
    }
    if !level.is_finite() {
        return Err(FieldError::InvalidParameter("extension level must be finite".into()));
    }
    match v.domain.exclusion_radius() {
        Some(excluded) if excluded <= r0 => {}
        _ => {
            return Err(FieldError::BadRadii(format!(
                "field is not defined on the whole exterior of B({r0})"
            )))
        }
    }
    let inner = v.evaluator.clone();
    Ok(ScalarField {
        dim: v.dim,
        domain: Domain::Whole,
        class: FieldClass::Composite,
        label: format!("extend_inward({}, {level}, {r1})", v.label),
        evaluator: Arc::new(move |x| if norm(x) <= r1 { level } else { inner(x).max(level) }),
    })
}

/// Restriction of a field on `C^n = R^{2n}` to the complex line `{ z s }`.
pub fn slice_complex_line(v: &ScalarField, direction: &[Complex64]) -> Result<ScalarField, FieldError> {
    let m = v.dim.get();
    if m % 2 != 0 || direction.len() * 2 != m {
        return Err(FieldError::DimensionMismatch {
            expected: m / 2,
            got: direction.len(),
        });
    }
    let len = direction.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (len - 1.0).abs() > UNIT_TOLERANCE {
        return Err(FieldError::BadDirection(len));
    }
    let domain = match v.domain {
        Domain::Ball { radius } => Domain::Ball { radius },
        d => d,
    };
    let s = direction.to_vec();
    let inner = v.evaluator.clone();
    Ok(ScalarField {
        dim: Dim::new(2)?,
        domain,
        class: match v.class {
            FieldClass::Harmonic | FieldClass::Convex | FieldClass::Subharmonic => FieldClass::Subharmonic,
            other => other,
        },
        label: format!("slice({}, {:?})", v.label, s),
        evaluator: Arc::new(move |x| {
            let z = Complex64::new(x[0], x[1]);
            let mut p = Vec::with_capacity(2 * s.len());
            for sj in &s {
                let w = z * sj;
                p.push(w.re);
                p.push(w.im);
            }
            inner(&p)
        }),
    })
}

/// Convenience: the unit complex direction `(cos a, e^{i b} sin a)` in `C^2`.
pub fn c2_direction(a: f64, b: f64) -> [Complex64; 2] {
    [Complex64::new(a.cos(), 0.0), Complex64::from_polar(a.sin(), b)]
}
