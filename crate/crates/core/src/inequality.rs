//! Numerical checks of the mean-value inequalities for subharmonic functions.
//!
//! Each check yields an [`InequalityReport`]: `lhs <= rhs` is accepted when
//! `rhs - lhs >= -(lhs_error + rhs_error + 1e-12)`. A left side equal to
//! `-inf` passes trivially and carries no numeric slack.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fields::{positive_part, FieldError, ScalarField};
use crate::geometry::{norm, sharp_mean_constant, Dim, SphericalCap};
use crate::quadrature::{
    ball_mean, sphere_mean, union_integral, union_measure, MeanEstimate, QuadratureError, QuadratureScheme,
};

/// Absolute floor added to every combined tolerance.
pub const TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("bad radii: {0}")]
    BadRadii(String),
    #[error("{0} leaves the field's domain")]
    DomainViolation(String),
    #[error("field is negative ({value}) at {point:?}")]
    NegativeField { point: Vec<f64>, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn serialize_float<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_float(*x))
    }
}

fn serialize_opt_float<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_float(v, s),
        None => s.serialize_none(),
    }
}

/// Shortest round-trip decimal form; `inf`, `-inf` and `nan` spelled out.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub label: String,
    #[serde(serialize_with = "serialize_float")]
    pub lhs: f64,
    #[serde(serialize_with = "serialize_float")]
    pub rhs: f64,
    /// `rhs - lhs`; `None` when the left side is `-inf`.
    #[serde(serialize_with = "serialize_opt_float")]
    pub slack: Option<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub tolerance: f64,
    pub passed: bool,
    pub trivial_pass: bool,
    pub inputs: BTreeMap<String, Value>,
}

impl InequalityReport {
    pub fn new(
        label: impl Into<String>,
        lhs: f64,
        lhs_err: f64,
        rhs: f64,
        rhs_err: f64,
        inputs: BTreeMap<String, Value>,
    ) -> Self {
        let tolerance = lhs_err.abs() + rhs_err.abs() + TOLERANCE_FLOOR;
        let label = label.into();
        if lhs == f64::NEG_INFINITY {
            return InequalityReport {
                label,
                lhs,
                rhs,
                slack: None,
                tolerance,
                passed: true,
                trivial_pass: true,
                inputs,
            };
        }
        let slack = rhs - lhs;
        InequalityReport {
            label,
            lhs,
            rhs,
            slack: Some(slack),
            tolerance,
            passed: slack >= -tolerance,
            trivial_pass: false,
            inputs,
        }
    }

    fn from_estimates(label: &str, lhs: MeanEstimate, rhs: MeanEstimate, inputs: BTreeMap<String, Value>) -> Self {
        Self::new(label, lhs.value, lhs.error_bound, rhs.value, rhs.error_bound, inputs)
    }

    /// Slack for display: `+inf` for trivial passes.
    pub fn slack_text(&self) -> String {
        match self.slack {
            Some(s) => format_float(s),
            None => "+inf".into(),
        }
    }
}

fn scheme_inputs(scheme: &QuadratureScheme) -> Value {
    serde_json::to_value(scheme).unwrap_or(Value::Null)
}

fn base_inputs(v: &ScalarField, scheme: &QuadratureScheme) -> BTreeMap<String, Value> {
    let mut m = BTreeMap::new();
    m.insert("field".into(), json!(v.label()));
    m.insert("m".into(), json!(v.dim().get()));
    m.insert("scheme".into(), scheme_inputs(scheme));
    m
}

fn point_value(v: &ScalarField, x: &[f64]) -> Result<f64, InequalityError> {
    let val = v.eval(x);
    if val.is_nan() || val == f64::INFINITY {
        return Err(QuadratureError::InvalidValue {
            point: x.to_vec(),
            value: val,
        }
        .into());
    }
    Ok(val)
}

fn exact(value: f64) -> MeanEstimate {
    MeanEstimate::exact(value, 1)
}

fn require_ball(v: &ScalarField, big_r: f64) -> Result<(), InequalityError> {
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(InequalityError::BadRadii(format!("R = {big_r} must be positive")));
    }
    let origin = vec![0.0; v.dim().get()];
    if !v.domain().contains_ball(&origin, big_r) || !v.domain().contains(&origin) {
        return Err(InequalityError::DomainViolation(format!("closed ball B({big_r})")));
    }
    Ok(())
}

/// The chain `v(0) <= S_v(a_m R) <= B_v(R) <= S_v(R)` as three reports.
pub fn check_mean_chain(
    v: &ScalarField,
    big_r: f64,
    scheme: &QuadratureScheme,
) -> Result<Vec<InequalityReport>, InequalityError> {
    require_ball(v, big_r)?;
    let m = v.dim();
    let origin = vec![0.0; m.get()];
    let a = sharp_mean_constant(m);
    let center = exact(point_value(v, &origin)?);
    let s_inner = sphere_mean(v, &origin, a * big_r, scheme)?;
    let ball = ball_mean(v, &origin, big_r, scheme)?;
    let s_outer = sphere_mean(v, &origin, big_r, scheme)?;
    let mut inputs = base_inputs(v, scheme);
    inputs.insert("R".into(), json!(big_r));
    inputs.insert("a_m".into(), json!(a));
    Ok(vec![
        InequalityReport::from_estimates("chain.center_le_sphere_inner", center, s_inner, inputs.clone()),
        InequalityReport::from_estimates("chain.sphere_inner_le_ball", s_inner, ball, inputs.clone()),
        InequalityReport::from_estimates("chain.ball_le_sphere", ball, s_outer, inputs),
    ])
}

/// `(1 + r/(R - r))^m`, the ball-inclusion factor.
pub fn ball_shift_factor(m: Dim, r: f64, big_r: f64) -> f64 {
    (big_r / (big_r - r)).powi(m.get() as i32)
}

/// `4 (1 + (r + t)/(R - r - t))^{m-1}`.
pub fn sphere_factor_t(m: Dim, r: f64, big_r: f64, t: f64) -> f64 {
    4.0 * (1.0 + (r + t) / (big_r - r - t)).powi(m.get() as i32 - 1)
}

/// `2^{m+1} (1 + r/(R - r))^{m-1}`, the factor at `t = (R - r)/2`.
pub fn sphere_factor_half(m: Dim, r: f64, big_r: f64) -> f64 {
    2f64.powi(m.get() as i32 + 1) * (1.0 + r / (big_r - r)).powi(m.get() as i32 - 1)
}

/// `4 (1 + r/(R - r))^{m-1}`, the `t -> 0` factor.
pub fn sphere_factor_limit(m: Dim, r: f64, big_r: f64) -> f64 {
    4.0 * (1.0 + r / (big_r - r)).powi(m.get() as i32 - 1)
}

/// `min{4, 1 + r/(R - r)} (1 + (R + r)/(R - r))^{m-1}`, the cap-integral constant.
pub fn cap_bound_constant(m: Dim, r: f64, big_r: f64) -> f64 {
    let first = (1.0 + r / (big_r - r)).min(4.0);
    first * (1.0 + (big_r + r) / (big_r - r)).powi(m.get() as i32 - 1)
}

/// `min{4, 1 + r/(R - r)} (1 + r/(R - r))^{m-1}`: the constant obtained by
/// integrating the two pointwise bounds directly. Never exceeds
/// [`cap_bound_constant`].
pub fn cap_bound_constant_pointwise(m: Dim, r: f64, big_r: f64) -> f64 {
    let base = 1.0 + r / (big_r - r);
    base.min(4.0) * base.powi(m.get() as i32 - 1)
}

/// Harnack factor `(R + rho) R^{m-2} / (R - rho)^{m-1}` for `0 <= rho < R`.
pub fn harnack_factor(m: Dim, modulus: f64, big_r: f64) -> Result<f64, InequalityError> {
    if !(big_r > 0.0 && big_r.is_finite()) || !(0.0..big_r).contains(&modulus) {
        return Err(InequalityError::BadRadii(format!(
            "need 0 <= |x| < R, got |x| = {modulus}, R = {big_r}"
        )));
    }
    Ok((1.0 + modulus / big_r) * (big_r / (big_r - modulus)).powi(m.get() as i32 - 1))
}

/// Options for [`check_prop1`].
#[derive(Debug, Clone, Copy)]
pub struct Prop1Options {
    /// Radius of the intermediate sphere; defaults to `(R - r)/2`.
    pub t: Option<f64>,
    /// Multiples of `R - r` used as small-`t` surrogates of the limit bound.
    pub surrogate_fractions: [f64; 2],
}

impl Default for Prop1Options {
    fn default() -> Self {
        Prop1Options {
            t: None,
            surrogate_fractions: [1e-2, 1e-3],
        }
    }
}

/// Pointwise upper bounds on `B(r)` in terms of means over `S(R)` and `B(R)`.
///
/// Per probe `x` the reports are, in order:
/// `submean_inner` (`v(x) <= S_v(x, a_m(R-r))`),
/// `ball_shift` (`B_{v+}(x, R-r) <= (1 + r/(R-r))^m B_{v+}(R)`),
/// `submean_t` and `harnack_t` (the two steps leading to the `t` bound),
/// `sphere_bound_t`, `sphere_bound_half`, `sphere_bound_limit`, and one
/// `sphere_bound_limit_surrogate` per small `t`.
pub fn check_prop1(
    v: &ScalarField,
    r: f64,
    big_r: f64,
    probes: &[Vec<f64>],
    options: Prop1Options,
    scheme: &QuadratureScheme,
) -> Result<Vec<InequalityReport>, InequalityError> {
    if !(r > 0.0 && r < big_r && big_r.is_finite()) {
        return Err(InequalityError::BadRadii(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let t = options.t.unwrap_or(0.5 * (big_r - r));
    if !(t > 0.0 && t < big_r - r) {
        return Err(InequalityError::BadRadii(format!("need 0 < t < R - r, got t = {t}")));
    }
    require_ball(v, big_r)?;
    let m = v.dim();
    for x in probes {
        if x.len() != m.get() {
            return Err(QuadratureError::DimensionMismatch {
                expected: m.get(),
                got: x.len(),
            }
            .into());
        }
        if norm(x) > r * (1.0 + 1e-12) {
            return Err(InequalityError::BadRadii(format!(
                "probe {x:?} lies outside the closed ball B({r})"
            )));
        }
    }
    let origin = vec![0.0; m.get()];
    let vp = positive_part(v);
    let s_plus = sphere_mean(&vp, &origin, big_r, scheme)?;
    let b_plus = ball_mean(&vp, &origin, big_r, scheme)?;
    let a = sharp_mean_constant(m);
    let gap = big_r - r;

    let mut out = Vec::new();
    for x in probes {
        let mut inputs = base_inputs(v, scheme);
        inputs.insert("x".into(), json!(x));
        inputs.insert("r".into(), json!(r));
        inputs.insert("R".into(), json!(big_r));
        inputs.insert("t".into(), json!(t));
        let vx = exact(point_value(v, x)?);

        let s_inner = sphere_mean(v, x, a * gap, scheme)?;
        out.push(InequalityReport::from_estimates(
            "prop1.submean_inner",
            vx,
            s_inner,
            inputs.clone(),
        ));

        let b_x = ball_mean(&vp, x, gap, scheme)?;
        let k = ball_shift_factor(m, r, big_r);
        out.push(InequalityReport::from_estimates(
            "prop1.ball_shift",
            b_x,
            b_plus.scaled_by(k),
            inputs.clone(),
        ));

        let s_t = sphere_mean(v, x, t, scheme)?;
        out.push(InequalityReport::from_estimates(
            "prop1.submean_t",
            vx,
            s_t,
            inputs.clone(),
        ));
        let h = harnack_factor(m, r + t, big_r)?;
        out.push(InequalityReport::from_estimates(
            "prop1.harnack_t",
            s_t,
            s_plus.scaled_by(h),
            inputs.clone(),
        ));

        let f_t = sphere_factor_t(m, r, big_r, t);
        out.push(InequalityReport::from_estimates(
            "prop1.sphere_bound_t",
            vx,
            s_plus.scaled_by(f_t),
            inputs.clone(),
        ));
        let f_half = sphere_factor_half(m, r, big_r);
        out.push(InequalityReport::from_estimates(
            "prop1.sphere_bound_half",
            vx,
            s_plus.scaled_by(f_half),
            inputs.clone(),
        ));
        let f_lim = sphere_factor_limit(m, r, big_r);
        out.push(InequalityReport::from_estimates(
            "prop1.sphere_bound_limit",
            vx,
            s_plus.scaled_by(f_lim),
            inputs.clone(),
        ));

        for frac in options.surrogate_fractions {
            let ts = frac * gap;
            let s_small = sphere_mean(v, x, ts, scheme)?;
            let mut inp = inputs.clone();
            inp.insert("t_surrogate".into(), json!(ts));
            out.push(InequalityReport::from_estimates(
                "prop1.sphere_bound_limit_surrogate",
                s_small,
                s_plus.scaled_by(f_lim),
                inp,
            ));
        }
    }
    Ok(out)
}

trait Scaled {
    fn scaled_by(self, k: f64) -> MeanEstimate;
}

impl Scaled for MeanEstimate {
    fn scaled_by(self, k: f64) -> MeanEstimate {
        MeanEstimate {
            value: self.value * k,
            error_bound: self.error_bound * k.abs(),
            ..self
        }
    }
}

/// Number of random interior points used to spot-check nonnegativity.
pub const HARNACK_SPOT_CHECKS: usize = 256;
const HARNACK_SEED: u64 = 0x6861_726e_6163_6b;

/// `h(x) <= harnack_factor(m, |x|, R) h(0)` at every probe, after checking
/// `h >= -1e-10` at the probes and at random points of `B(R)`.
pub fn check_harnack(
    h: &ScalarField,
    big_r: f64,
    probes: &[Vec<f64>],
) -> Result<Vec<InequalityReport>, InequalityError> {
    require_ball(h, big_r)?;
    let m = h.dim().get();
    let mut rng = ChaCha8Rng::seed_from_u64(HARNACK_SEED);
    let mut spots: Vec<Vec<f64>> = probes.to_vec();
    while spots.len() < probes.len() + HARNACK_SPOT_CHECKS {
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(-big_r..big_r)).collect();
        if norm(&p) < big_r {
            spots.push(p);
        }
    }
    for p in &spots {
        let val = point_value(h, p)?;
        if val < -1e-10 {
            return Err(InequalityError::NegativeField {
                point: p.clone(),
                value: val,
            });
        }
    }
    let origin = vec![0.0; m];
    let h0 = point_value(h, &origin)?;
    let mut out = Vec::with_capacity(probes.len());
    for x in probes {
        let rho = norm(x);
        if rho >= big_r {
            return Err(InequalityError::BadRadii(format!(
                "probe {x:?} is not inside B({big_r})"
            )));
        }
        let f = harnack_factor(h.dim(), rho, big_r)?;
        let mut inputs = BTreeMap::new();
        inputs.insert("field".into(), json!(h.label()));
        inputs.insert("m".into(), json!(m));
        inputs.insert("R".into(), json!(big_r));
        inputs.insert("x".into(), json!(x));
        inputs.insert("factor".into(), json!(f));
        // relative floor for round-off in the two evaluations
        let err = 1e-14 * (h0.abs() * f + point_value(h, x)?.abs());
        out.push(InequalityReport::new(
            "harnack",
            point_value(h, x)?,
            err,
            f * h0,
            0.0,
            inputs,
        ));
    }
    Ok(out)
}

/// `int_E v dsigma_r <= C(m, r, R) sigma_r(E) S_{v+}(R)` for a union `E` of
/// caps on one sphere `S(r)` about the origin. `rhs_scale` multiplies the
/// right side (1 for a genuine check).
pub fn check_prop2(
    v: &ScalarField,
    caps: &[SphericalCap],
    big_r: f64,
    scheme: &QuadratureScheme,
    rhs_scale: f64,
) -> Result<InequalityReport, InequalityError> {
    let Some(first) = caps.first() else {
        return Err(InequalityError::BadRadii("the cap union is empty".into()));
    };
    let sphere = first.sphere();
    if !sphere.is_centered_at_origin() {
        return Err(InequalityError::BadRadii(
            "caps must lie on a sphere about the origin".into(),
        ));
    }
    if caps.iter().any(|c| c.sphere() != sphere) {
        return Err(InequalityError::BadRadii("all caps must lie on the same sphere".into()));
    }
    let r = sphere.radius();
    if !(r < big_r) {
        return Err(InequalityError::BadRadii(format!(
            "need r < R, got r = {r}, R = {big_r}"
        )));
    }
    require_ball(v, big_r)?;
    let m = v.dim();
    let lhs = union_integral(v, caps, scheme)?;
    let sigma = union_measure(caps, scheme)?;
    let s_plus = sphere_mean(&positive_part(v), &vec![0.0; m.get()], big_r, scheme)?;
    let c = cap_bound_constant(m, r, big_r) * rhs_scale;
    let rhs = c * sigma.value * s_plus.value;
    let rhs_err = c * (sigma.error_bound * s_plus.value.abs() + sigma.value * s_plus.error_bound);
    let mut inputs = base_inputs(v, scheme);
    inputs.insert("r".into(), json!(r));
    inputs.insert("R".into(), json!(big_r));
    inputs.insert(
        "caps".into(),
        json!(caps
            .iter()
            .map(|c| json!({"axis": c.axis(), "half_angle": c.half_angle()}))
            .collect::<Vec<_>>()),
    );
    inputs.insert("sigma".into(), json!(sigma.value));
    inputs.insert("constant".into(), json!(c));
    if rhs_scale != 1.0 {
        inputs.insert("rhs_scale".into(), json!(rhs_scale));
    }
    Ok(InequalityReport::new(
        "prop2.cap_bound",
        lhs.value,
        lhs.error_bound,
        rhs,
        rhs_err,
        inputs,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{self, Domain, FieldClass};
    use crate::geometry::SphereSpec;
    use approx::assert_relative_eq;

    fn d(m: usize) -> Dim {
        Dim::new(m).unwrap()
    }

    #[test]
    fn harnack_factor_values() {
        assert_eq!(harnack_factor(d(2), 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(harnack_factor(d(2), 0.5, 1.0).unwrap(), 3.0);
        assert_relative_eq!(harnack_factor(d(3), 0.5, 1.0).unwrap(), 6.0, max_relative = 1e-15);
        assert!(harnack_factor(d(2), 1.0, 1.0).is_err());
    }

    #[test]
    fn factor_at_half_gap_matches() {
        for m in 1..=8 {
            for (r, big_r) in [(0.3, 1.0), (1.0, 2.0), (5.0, 5.5)] {
                let t = 0.5 * (big_r - r);
                let a = sphere_factor_t(d(m), r, big_r, t);
                let b = sphere_factor_half(d(m), r, big_r);
                assert!((a - b).abs() <= 1e-12 * b, "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn chain_on_squared_norm() {
        let v = fields::radial_power(vec![0.0, 0.0], 2.0).unwrap();
        let reps = check_mean_chain(&v, 1.0, &QuadratureScheme::default_for(d(2))).unwrap();
        assert_eq!(reps.len(), 3);
        assert_eq!(reps[0].lhs, 0.0);
        assert_relative_eq!(reps[0].rhs, (-1f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(reps[1].rhs, 0.5, max_relative = 1e-12);
        assert_relative_eq!(reps[2].rhs, 1.0, max_relative = 1e-12);
        assert!(reps.iter().all(|r| r.passed));
    }

    #[test]
    fn chain_on_log_modulus() {
        let v = fields::log_distance([0.0, 0.0]).unwrap();
        let reps = check_mean_chain(&v, 1.0, &QuadratureScheme::default_for(d(2))).unwrap();
        assert!(reps[0].trivial_pass && reps[0].slack.is_none());
        assert!((reps[0].rhs + 0.5).abs() < 1e-9, "{}", reps[0].rhs);
        assert!(reps[2].rhs.abs() < 1e-9);
        assert!(reps.iter().all(|r| r.passed));
        assert_eq!(reps[0].slack_text(), "+inf");
        let js = serde_json::to_string(&reps[0]).unwrap();
        assert!(js.contains("\"lhs\":\"-inf\""), "{js}");
    }

    #[test]
    fn harmonic_chain_is_tight() {
        let v = fields::affine(vec![2.0, -1.0, 0.5], 3.0).unwrap();
        let reps = check_mean_chain(&v, 2.0, &QuadratureScheme::default_for(d(3))).unwrap();
        for r in &reps {
            assert!(r.passed);
            assert!(r.slack.unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn prop1_zero_field() {
        let v = fields::constant(d(2), 0.0).unwrap();
        let reps = check_prop1(
            &v,
            1.0,
            2.0,
            &[vec![1.0, 0.0], vec![0.0, 0.0]],
            Prop1Options::default(),
            &QuadratureScheme::default_for(d(2)),
        )
        .unwrap();
        assert_eq!(reps.len(), 2 * 9);
        assert!(reps.iter().all(|r| r.passed && r.slack.unwrap() >= 0.0));
    }

    #[test]
    fn prop1_squared_norm_limit_bound() {
        let v = fields::radial_power(vec![0.0, 0.0], 2.0).unwrap();
        let reps = check_prop1(
            &v,
            1.0,
            2.0,
            &[vec![1.0, 0.0]],
            Prop1Options::default(),
            &QuadratureScheme::default_for(d(2)),
        )
        .unwrap();
        let lim = reps.iter().find(|r| r.label == "prop1.sphere_bound_limit").unwrap();
        assert_eq!(lim.lhs, 1.0);
        assert_relative_eq!(lim.rhs, 32.0, max_relative = 1e-12);
        assert!(reps.iter().all(|r| r.passed));
    }

    #[test]
    fn prop1_shifted_log() {
        let v = fields::log_distance([1.5, 0.0]).unwrap();
        let reps = check_prop1(
            &v,
            1.0,
            2.0,
            &[vec![1.0, 0.0]],
            Prop1Options::default(),
            &QuadratureScheme::default_for(d(2)),
        )
        .unwrap();
        assert!(reps.iter().all(|r| r.passed), "{reps:#?}");
    }

    #[test]
    fn prop1_rejects_bad_input() {
        let v = fields::constant(d(2), 0.0).unwrap();
        let s = QuadratureScheme::default_for(d(2));
        assert!(matches!(
            check_prop1(&v, 2.0, 1.0, &[], Prop1Options::default(), &s),
            Err(InequalityError::BadRadii(_))
        ));
        assert!(matches!(
            check_prop1(&v, 1.0, 2.0, &[vec![1.5, 0.0]], Prop1Options::default(), &s),
            Err(InequalityError::BadRadii(_))
        ));
        let opts = Prop1Options {
            t: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            check_prop1(&v, 1.0, 2.0, &[], opts, &s),
            Err(InequalityError::BadRadii(_))
        ));
    }

    #[test]
    fn harnack_examples() {
        let one = fields::constant(d(2), 1.0).unwrap();
        let reps = check_harnack(&one, 1.0, &[vec![0.3, 0.4]]).unwrap();
        assert!(reps[0].passed && reps[0].rhs >= 1.0);

        let h = fields::affine(vec![0.5, 0.0], 1.0).unwrap();
        let reps = check_harnack(&h, 1.0, &[vec![0.5, 0.0]]).unwrap();
        assert_eq!(reps[0].lhs, 1.25);
        assert_eq!(reps[0].rhs, 3.0);

        let neg = fields::affine(vec![2.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            check_harnack(&neg, 1.0, &[vec![0.1, 0.0]]),
            Err(InequalityError::NegativeField { .. })
        ));
    }

    #[test]
    fn prop2_examples() {
        let s1 = SphereSpec::centered(d(2), 1.0).unwrap();
        let cap = SphericalCap::new(s1, vec![1.0, 0.0], 0.5).unwrap();
        let scheme = QuadratureScheme::default_for(d(2));
        let one = fields::constant(d(2), 1.0).unwrap();
        let rep = check_prop2(&one, std::slice::from_ref(&cap), 2.0, &scheme, 1.0).unwrap();
        assert_relative_eq!(rep.lhs, 1.0, max_relative = 1e-13);
        assert_relative_eq!(rep.rhs, 8.0, max_relative = 1e-13);
        assert!(rep.passed);

        let zero = fields::constant(d(2), 0.0).unwrap();
        let rep = check_prop2(&zero, std::slice::from_ref(&cap), 2.0, &scheme, 1.0).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (0.0, 0.0));
        assert!(rep.passed);

        let spike = fields::log_distance([1.1, 0.0]).unwrap();
        assert!(
            check_prop2(&spike, std::slice::from_ref(&cap), 2.0, &scheme, 1.0)
                .unwrap()
                .passed
        );

        let rep = check_prop2(&one, &[cap], 2.0, &scheme, 0.01).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn pointwise_constant_not_larger() {
        for m in 1..=6 {
            for (r, big_r) in [(0.1, 1.0), (1.0, 2.0), (0.9, 1.0)] {
                assert!(cap_bound_constant_pointwise(d(m), r, big_r) <= cap_bound_constant(d(m), r, big_r));
            }
        }
    }

    #[test]
    fn domain_checked() {
        let p = fields::poisson_kernel(vec![2.0, 0.0]).unwrap();
        assert!(matches!(
            check_harnack(&p, 3.0, &[]),
            Err(InequalityError::DomainViolation(_))
        ));
        let ext = ScalarField::from_fn(d(2), Domain::Exterior { r0: 1.0 }, FieldClass::Harmonic, "e", |x| x[0]);
        assert!(check_mean_chain(&ext, 2.0, &QuadratureScheme::default_for(d(2))).is_err());
    }
}
