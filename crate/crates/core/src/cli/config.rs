//! JSON run configuration.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{self, ComplexMonomial, EntireSpec, FieldError, Monomial, ScalarField};
use crate::geometry::Dim;
use crate::growth::ProfileKind;
use crate::quadrature::{QuadratureScheme, SchemeKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    fn validation(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Offending key of a validation error.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } => Some(key),
            ConfigError::Parse { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Mean,
    Chain,
    Prop1,
    Prop2,
    Harnack,
    Order,
    Audit,
    Slices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexNumber {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexNumber {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexNumber::Real(x) => Complex64::new(x, 0.0),
            ComplexNumber::Pair([a, b]) => Complex64::new(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexTermSpec {
    pub coef: ComplexNumber,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

/// Field constructors and combinators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        m: usize,
        value: f64,
    },
    Affine {
        weights: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    HarmonicPoly {
        m: usize,
        terms: Vec<TermSpec>,
    },
    /// Coefficients in ascending powers of `z`.
    LogModulusPoly {
        coeffs: Vec<ComplexNumber>,
    },
    LogModulusExp {
        coeff: ComplexNumber,
        degree: u32,
    },
    LogModulusMulti {
        n: usize,
        terms: Vec<ComplexTermSpec>,
    },
    RadialPower {
        center: Vec<f64>,
        power: f64,
    },
    LogDistance {
        a: [f64; 2],
    },
    NewtonKernel {
        center: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
    },
    SumAbs {
        m: usize,
    },
    ExpLinear {
        weights: Vec<f64>,
    },
    MaxAffine {
        pieces: Vec<AffinePiece>,
    },
    PoissonKernel {
        pole: Vec<f64>,
    },
    PositivePart {
        of: Box<FieldSpec>,
    },
    ShiftSubConst {
        of: Box<FieldSpec>,
        level: f64,
    },
    AddConst {
        of: Box<FieldSpec>,
        c: f64,
    },
    Scale {
        of: Box<FieldSpec>,
        c: f64,
    },
    MaxOf {
        a: Box<FieldSpec>,
        b: Box<FieldSpec>,
    },
    ExtendInward {
        of: Box<FieldSpec>,
        level: f64,
        #[serde(default)]
        r0: f64,
        r1: f64,
    },
    SliceComplexLine {
        of: Box<FieldSpec>,
        direction: Vec<ComplexNumber>,
    },
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn build(&self) -> Result<ScalarField, FieldError> {
        use FieldSpec::*;
        Ok(match self {
            Constant { m, value } => fields::constant(Dim::new(*m)?, *value)?,
            Affine { weights, offset } => fields::affine(weights.clone(), *offset)?,
            HarmonicPoly { m, terms } => fields::make_harmonic_poly(
                Dim::new(*m)?,
                terms
                    .iter()
                    .map(|t| Monomial::new(t.coef, t.exponents.clone()))
                    .collect(),
            )?,
            LogModulusPoly { coeffs } => {
                fields::make_log_modulus(EntireSpec::Polynomial(coeffs.iter().map(|c| c.value()).collect()))?
            }
            LogModulusExp { coeff, degree } => fields::make_log_modulus(EntireSpec::ExpMonomial {
                coeff: coeff.value(),
                degree: *degree,
            })?,
            LogModulusMulti { n, terms } => fields::make_log_modulus_multi(
                *n,
                terms
                    .iter()
                    .map(|t| ComplexMonomial {
                        coef: t.coef.value(),
                        exponents: t.exponents.clone(),
                    })
                    .collect(),
            )?,
            RadialPower { center, power } => fields::radial_power(center.clone(), *power)?,
            LogDistance { a } => fields::log_distance(*a)?,
            NewtonKernel { center, scale } => fields::newton_kernel(center.clone(), *scale)?,
            SumAbs { m } => fields::sum_abs(Dim::new(*m)?),
            ExpLinear { weights } => fields::exp_linear(weights.clone())?,
            MaxAffine { pieces } => fields::max_affine(pieces.iter().map(|p| (p.weights.clone(), p.offset)).collect())?,
            PoissonKernel { pole } => fields::poisson_kernel(pole.clone())?,
            PositivePart { of } => fields::positive_part(&of.build()?),
            ShiftSubConst { of, level } => fields::shift_sub_const(&of.build()?, *level)?,
            AddConst { of, c } => fields::add_const(&of.build()?, *c)?,
            Scale { of, c } => fields::scale(&of.build()?, *c)?,
            MaxOf { a, b } => fields::max_of(&a.build()?, &b.build()?)?,
            ExtendInward { of, level, r0, r1 } => fields::extend_inward(&of.build()?, *level, *r0, *r1)?,
            SliceComplexLine { of, direction } => {
                let dir: Vec<Complex64> = direction.iter().map(|c| c.value()).collect();
                fields::slice_complex_line(&of.build()?, &dir)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    pub axis: Vec<f64>,
    pub half_angle: f64,
}

/// Caps `theta_k = min(pi, scale / k^power)` around `axis` on the `k`-th audit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapRule {
    pub axis: Vec<f64>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "one")]
    pub power: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Center of the means (`mean`).
    pub center: Option<Vec<f64>>,
    /// Radii for `mean`, `order`, `audit` and `slices`.
    pub radii: Option<Vec<f64>>,
    /// Unthinned radii for `audit` and `slices`.
    pub raw_radii: Option<Vec<f64>>,
    pub r: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    pub t: Option<f64>,
    pub probes: Option<Vec<Vec<f64>>>,
    pub caps: Option<Vec<CapConfig>>,
    pub r1: Option<f64>,
    pub rho: Option<f64>,
    pub count: Option<usize>,
    pub profile: Option<ProfileKind>,
    pub q: Option<f64>,
    #[serde(rename = "Q")]
    pub big_q: Option<f64>,
    pub cap_rule: Option<CapRule>,
    pub caps_per_radius: Option<Vec<Vec<CapConfig>>>,
    pub level: Option<f64>,
    pub order_ceiling: Option<f64>,
    pub include_shells: Option<bool>,
    pub directions: Option<Vec<Vec<ComplexNumber>>>,
}

/// Document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Command,
    pub field: FieldSpec,
    #[serde(default)]
    pub geometry: Geometry,
    pub scheme: Option<SchemeConfig>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Multiplies the right side of cap-integral checks; debugging only.
    pub debug_rhs_scale: Option<f64>,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub field_spec: FieldSpec,
    pub geometry: Geometry,
    /// Effective quadrature scheme (seed filled in).
    pub scheme: QuadratureScheme,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub debug_rhs_scale: Option<f64>,
}

impl RunConfig {
    pub fn field(&self) -> ScalarField {
        self.field_spec.build().expect("validated at parse time")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.inner();
        ConfigError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    validate(raw)
}

fn require<T: Clone>(value: &Option<T>, key: &str, command: Command) -> Result<T, ConfigError> {
    value
        .clone()
        .ok_or_else(|| ConfigError::validation(key, format!("required by command {command:?}")))
}

fn positive(value: f64, key: &str) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::validation(
            key,
            format!("{value} must be positive and finite"),
        ))
    }
}

pub fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let field = raw
        .field_spec_checked()
        .map_err(|e| ConfigError::validation("field", e.to_string()))?;
    let m = field.dim();
    let g = &raw.geometry;
    let cmd = raw.command;

    // slice audits integrate over complex lines, i.e. planar circles
    let field_dim = m;
    let m = if cmd == Command::Slices {
        Dim::new(2).expect("2 > 0")
    } else {
        m
    };
    let mut scheme = match &raw.scheme {
        Some(s) => QuadratureScheme {
            kind: s.kind,
            resolution: s.resolution,
            seed: None,
        },
        None => QuadratureScheme::default_for(m),
    };
    // radial_composite directions follow the dimension default
    let monte_carlo = m.get() > 1
        && (scheme.kind == SchemeKind::MonteCarloSphere
            || (scheme.kind == SchemeKind::RadialComposite && m.get() >= 4));
    if monte_carlo {
        if raw.seed.is_none() {
            return Err(ConfigError::validation("seed", "a Monte Carlo scheme is selected"));
        }
        scheme.seed = raw.seed;
    } else {
        scheme.seed = None;
    }
    scheme
        .validate(m)
        .map_err(|e| ConfigError::validation("scheme", e.to_string()))?;
    if let Some(s) = raw.debug_rhs_scale {
        positive(s, "debug_rhs_scale")?;
    }

    match cmd {
        Command::Mean => {
            let radii = require(&g.radii, "geometry.radii", cmd)?;
            for r in &radii {
                positive(*r, "geometry.radii")?;
            }
            if let Some(c) = &g.center {
                if c.len() != m.get() {
                    return Err(ConfigError::validation(
                        "geometry.center",
                        "dimension differs from the field",
                    ));
                }
            }
        }
        Command::Chain => positive(require(&g.big_r, "geometry.R", cmd)?, "geometry.R")?,
        Command::Prop1 => {
            let r = require(&g.r, "geometry.r", cmd)?;
            let big_r = require(&g.big_r, "geometry.R", cmd)?;
            positive(r, "geometry.r")?;
            if !(big_r > r) {
                return Err(ConfigError::validation("geometry.R", "R must exceed r"));
            }
        }
        Command::Prop2 => {
            let r = require(&g.r, "geometry.r", cmd)?;
            let big_r = require(&g.big_r, "geometry.R", cmd)?;
            positive(r, "geometry.r")?;
            if !(big_r > r) {
                return Err(ConfigError::validation("geometry.R", "R must exceed r"));
            }
            if require(&g.caps, "geometry.caps", cmd)?.is_empty() {
                return Err(ConfigError::validation("geometry.caps", "at least one cap is required"));
            }
        }
        Command::Harnack => {
            positive(require(&g.big_r, "geometry.R", cmd)?, "geometry.R")?;
            require(&g.probes, "geometry.probes", cmd)?;
        }
        Command::Order => {
            if let Some(rho) = g.rho {
                positive(rho, "geometry.rho")?;
            }
        }
        Command::Audit | Command::Slices => {
            let q = require(&g.q, "geometry.q", cmd)?;
            if !(q > 1.0) {
                return Err(ConfigError::validation("geometry.q", "q must exceed 1"));
            }
            if g.radii.is_none() && g.raw_radii.is_none() {
                return Err(ConfigError::validation(
                    "geometry.radii",
                    "radii or raw_radii is required",
                ));
            }
            if g.cap_rule.is_some() && g.caps_per_radius.is_some() {
                return Err(ConfigError::validation(
                    "geometry.cap_rule",
                    "give either cap_rule or caps_per_radius",
                ));
            }
            if cmd == Command::Slices {
                if field_dim.get() % 2 != 0 {
                    return Err(ConfigError::validation("field", "slices need a field on C^n"));
                }
                if require(&g.directions, "geometry.directions", cmd)?.is_empty() {
                    return Err(ConfigError::validation(
                        "geometry.directions",
                        "at least one direction is required",
                    ));
                }
            }
        }
    }

    Ok(RunConfig {
        command: cmd,
        field_spec: raw.field,
        geometry: raw.geometry,
        scheme,
        seed: raw.seed,
        output_path: raw.output,
        format: raw.format,
        debug_rhs_scale: raw.debug_rhs_scale,
    })
}

impl RawConfig {
    fn field_spec_checked(&self) -> Result<ScalarField, FieldError> {
        self.field.build()
    }
}
