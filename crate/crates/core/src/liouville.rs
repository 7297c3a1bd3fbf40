//! Boundedness audits on sequences of spheres with small exceptional caps.
//!
//! With `V = (v - M)+`, the audit computes `S_V(r_k)` and checks the
//! recurrence `S_V(r_k) <= f(m, q, eps_k) S_V(r_{k+1})` that must hold when
//! `V` vanishes off the caps. A clean audit is evidence on finitely many
//! radii, never a proof.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::fields::{shift_sub_const, slice_complex_line, FieldError, ScalarField};
use crate::geometry::{norm, sphere_area, Dim, SphereSpec, SphericalCap};
use crate::growth::{self, GrowthError, ProfileKind};
use crate::inequality::{serialize_float, InequalityReport};
use crate::quadrature::{
    sphere_mean, sphere_probe_directions, sphere_sup, union_measure, QuadratureError, QuadratureScheme,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvilleError {
    #[error("radii must be strictly increasing and positive (index {0})")]
    NotIncreasing(usize),
    #[error("no thinning fits the ratio window: {0}")]
    RatioWindowInfeasible(String),
    #[error("sequence has {0} radii, need at least {1}")]
    TooShort(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("caps at index {index} lie on S({found}), expected S({expected}) about the origin")]
    RadiusMismatch { index: usize, expected: f64, found: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

/// Radii with `q <= r_{k+1}/r_k <= Q` for every consecutive pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiiSequence {
    radii: Vec<f64>,
    q: f64,
    #[serde(rename = "Q")]
    big_q: f64,
}

impl RadiiSequence {
    pub fn new(radii: Vec<f64>, q: f64, big_q: f64) -> Result<Self, LiouvilleError> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(LiouvilleError::InvalidParameter("q must exceed 1".into()));
        }
        if !(big_q >= q && big_q.is_finite()) {
            return Err(LiouvilleError::InvalidParameter(
                "Q must be finite and at least q".into(),
            ));
        }
        if radii.len() < 2 {
            return Err(LiouvilleError::TooShort(radii.len(), 2));
        }
        check_increasing(&radii)?;
        for (i, w) in radii.windows(2).enumerate() {
            let ratio = w[1] / w[0];
            if ratio < q || ratio > big_q {
                return Err(LiouvilleError::RatioWindowInfeasible(format!(
                    "r[{}]/r[{i}] = {ratio} outside [{q}, {big_q}]",
                    i + 1
                )));
            }
        }
        Ok(RadiiSequence { radii, q, big_q })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn big_q(&self) -> f64 {
        self.big_q
    }
}

fn check_increasing(radii: &[f64]) -> Result<(), LiouvilleError> {
    if !(radii.first().is_some_and(|r| *r > 0.0)) {
        return Err(LiouvilleError::NotIncreasing(0));
    }
    for (i, w) in radii.windows(2).enumerate() {
        if !(w[1] > w[0] && w[1].is_finite()) {
            return Err(LiouvilleError::NotIncreasing(i + 1));
        }
    }
    Ok(())
}

/// Greedy subsequence of `raw` with consecutive ratios in `[q, Q]`, starting
/// at `raw[0]`. Requires `Q >= q^2` and `max raw ratio <= Q/q`.
pub fn thin_to_ratio_window(raw: &[f64], q: f64, big_q: f64) -> Result<RadiiSequence, LiouvilleError> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(LiouvilleError::InvalidParameter("q must exceed 1".into()));
    }
    if !(big_q >= q * q && big_q.is_finite()) {
        return Err(LiouvilleError::InvalidParameter("Q must be at least q^2".into()));
    }
    check_increasing(raw)?;
    let limit = big_q / q;
    for (i, w) in raw.windows(2).enumerate() {
        if w[1] / w[0] > limit {
            return Err(LiouvilleError::RatioWindowInfeasible(format!(
                "raw ratio r[{}]/r[{i}] = {} exceeds Q/q = {limit}",
                i + 1,
                w[1] / w[0]
            )));
        }
    }
    if raw.len() < 4 {
        return Err(LiouvilleError::TooShort(raw.len(), 4));
    }
    let mut out = vec![raw[0]];
    let mut last = raw[0];
    for &r in &raw[1..] {
        if r / last >= q {
            if r / last > big_q {
                return Err(LiouvilleError::RatioWindowInfeasible(format!(
                    "step {last} -> {r} overshoots Q = {big_q}"
                )));
            }
            out.push(r);
            last = r;
        }
    }
    if out.len() < 2 {
        return Err(LiouvilleError::TooShort(out.len(), 2));
    }
    RadiiSequence::new(out, q, big_q)
}

/// Caps `E_k` on the spheres `S(r_k)` about the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSet {
    dim: Dim,
    per_radius: Vec<(f64, Vec<SphericalCap>)>,
    /// Open shells between audit spheres count as excluded.
    pub include_shells: bool,
}

impl ExceptionalSet {
    pub fn new(
        dim: Dim,
        per_radius: Vec<(f64, Vec<SphericalCap>)>,
        include_shells: bool,
    ) -> Result<Self, LiouvilleError> {
        for (index, (r, caps)) in per_radius.iter().enumerate() {
            for cap in caps {
                let s = cap.sphere();
                if cap.dim() != dim || !s.is_centered_at_origin() || (s.radius() - r).abs() > 1e-12 * r.abs().max(1.0) {
                    return Err(LiouvilleError::RadiusMismatch {
                        index,
                        expected: *r,
                        found: s.radius(),
                    });
                }
            }
        }
        Ok(ExceptionalSet {
            dim,
            per_radius,
            include_shells,
        })
    }

    /// No caps on any sphere.
    pub fn empty(dim: Dim, radii: &[f64]) -> Self {
        ExceptionalSet {
            dim,
            per_radius: radii.iter().map(|r| (*r, Vec::new())).collect(),
            include_shells: true,
        }
    }

    /// One cap per radius around a fixed axis; `half_angle(k, r_k)` with `k` from 1.
    pub fn single_caps(
        dim: Dim,
        radii: &[f64],
        axis: &[f64],
        half_angle: impl Fn(usize, f64) -> f64,
    ) -> Result<Self, LiouvilleError> {
        let mut per_radius = Vec::with_capacity(radii.len());
        for (i, &r) in radii.iter().enumerate() {
            let theta = half_angle(i + 1, r);
            let sphere = SphereSpec::centered(dim, r).map_err(FieldError::from)?;
            let cap = SphericalCap::new(sphere, axis.to_vec(), theta).map_err(FieldError::from)?;
            per_radius.push((r, vec![cap]));
        }
        Self::new(dim, per_radius, true)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn per_radius(&self) -> &[(f64, Vec<SphericalCap>)] {
        &self.per_radius
    }

    pub fn radii(&self) -> Vec<f64> {
        self.per_radius.iter().map(|(r, _)| *r).collect()
    }

    fn caps_at(&self, k: usize) -> &[SphericalCap] {
        &self.per_radius[k].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSequence {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Heuristic for `eps_k -> 0`: last value below a tenth of the maximum and
    /// a non-increasing tail of length at least 3 (all zeros also qualify).
    pub tends_to_zero_proxy: bool,
}

fn cap_scheme(m: Dim) -> QuadratureScheme {
    match m.get() {
        3 => QuadratureScheme::product_gauss(64),
        d if d >= 4 => QuadratureScheme::monte_carlo(1 << 16, crate::quadrature::DEFAULT_SEED),
        _ => QuadratureScheme::default_for(m),
    }
}

/// `eps_k = sigma(E_k) / r_k^{m-1}`.
pub fn epsilon_sequence(e: &ExceptionalSet) -> EpsilonSequence {
    let m = e.dim();
    let scheme = cap_scheme(m);
    let (values, errors): (Vec<f64>, Vec<f64>) = e
        .per_radius
        .iter()
        .map(|(r, caps)| {
            // caps were validated to share the sphere S(r)
            let sigma = union_measure(caps, &scheme).expect("validated cap family");
            let scale = r.powi(m.get() as i32 - 1);
            (sigma.value / scale, sigma.error_bound / scale)
        })
        .unzip();
    let tends_to_zero_proxy = tends_to_zero(&values);
    EpsilonSequence {
        values,
        errors,
        tends_to_zero_proxy,
    }
}

fn tends_to_zero(values: &[f64]) -> bool {
    if values.iter().all(|&v| v == 0.0) {
        return true;
    }
    let n = values.len();
    if n < 3 {
        return false;
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let last = values[n - 1];
    last < 0.1 * max && values[n - 3] >= values[n - 2] && values[n - 2] >= values[n - 1]
}

/// Angular measure of a union of arcs, merged on `[0, 2 pi)`.
fn angular_measure(caps: &[SphericalCap]) -> f64 {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for cap in caps {
        let theta = cap.half_angle();
        if theta <= 0.0 {
            continue;
        }
        if theta >= PI {
            return 2.0 * PI;
        }
        let center = cap.axis()[1].atan2(cap.axis()[0]).rem_euclid(2.0 * PI);
        let (a, b) = (center - theta, center + theta);
        if a < 0.0 {
            pieces.push((a + 2.0 * PI, 2.0 * PI));
            pieces.push((0.0, b));
        } else if b > 2.0 * PI {
            pieces.push((a, 2.0 * PI));
            pieces.push((0.0, b - 2.0 * PI));
        } else {
            pieces.push((a, b));
        }
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        current = match current {
            Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((a, b)) = current {
        total += b - a;
    }
    total.min(2.0 * PI)
}

/// For `m = 2`: the angular measure of every `E_k` equals `sigma(E_k)/r_k`
/// to `1e-12`. Reports carry `|lambda - sigma/r|` against zero.
pub fn arc_normalization_check(e: &ExceptionalSet) -> Result<Vec<InequalityReport>, LiouvilleError> {
    if e.dim().get() != 2 {
        return Err(LiouvilleError::InvalidParameter("arc normalization needs m = 2".into()));
    }
    let scheme = QuadratureScheme::default_for(e.dim());
    let mut out = Vec::with_capacity(e.per_radius.len());
    for (k, (r, caps)) in e.per_radius.iter().enumerate() {
        let lambda = angular_measure(caps);
        let sigma = union_measure(caps, &scheme)?.value;
        let mut inputs = std::collections::BTreeMap::new();
        inputs.insert("k".into(), json!(k + 1));
        inputs.insert("r".into(), json!(r));
        inputs.insert("lambda".into(), json!(lambda));
        inputs.insert("sigma".into(), json!(sigma));
        out.push(InequalityReport::new(
            "arc_normalization",
            (lambda - sigma / r).abs(),
            0.0,
            0.0,
            0.0,
            inputs,
        ));
    }
    Ok(out)
}

/// `(4 / s_{m-1}) (q/(q-1))^{m-1} eps`.
pub fn recurrence_factor(m: Dim, q: f64, epsilon: f64) -> f64 {
    assert!(q > 1.0, "q must exceed 1");
    4.0 / sphere_area(m, 1.0) * (q / (q - 1.0)).powi(m.get() as i32 - 1) * epsilon
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditStatus {
    ConsistentBounded,
    UnboundedOffExceptional,
    RecurrenceViolated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceRow {
    pub k: usize,
    pub radius: f64,
    pub s_v: f64,
    pub s_v_error: f64,
    pub epsilon: f64,
    pub factor: f64,
    pub s_v_next: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// `v <= level` held at every off-cap probe of `S(r_k)`; rows without it
    /// carry no obligation.
    pub hypothesis_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffCapRow {
    pub k: usize,
    pub radius: f64,
    pub probes: usize,
    pub off_cap_probes: usize,
    /// Caps cover the sphere; no constraint from it.
    pub covered: bool,
    #[serde(serialize_with = "serialize_float")]
    pub sup_off_cap: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneRow {
    pub k: usize,
    pub s_v_next: f64,
    pub s_v_q: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimates {
    #[serde(serialize_with = "serialize_float")]
    pub m_e_proxy: f64,
    #[serde(serialize_with = "serialize_float")]
    pub m0_proxy: f64,
}

pub const AUDIT_NOTE: &str =
    "audit outcome on finitely many radii; limsup conditions cannot be certified numerically, so no status is a proof";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditVerdict {
    pub status: AuditStatus,
    pub level: f64,
    pub recurrence_table: Vec<RecurrenceRow>,
    pub off_cap_table: Vec<OffCapRow>,
    pub monotonicity: Vec<MonotoneRow>,
    pub epsilon: EpsilonSequence,
    pub sup_estimates: SupEstimates,
    pub order_proxy: Option<f64>,
    pub finite_order: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    /// Sphere-mean scheme; defaults per dimension.
    pub scheme: Option<QuadratureScheme>,
    /// Initial probe count for off-cap suprema (doubled as needed).
    pub sup_resolution: usize,
    pub max_sup_resolution: usize,
    pub min_off_cap_probes: usize,
    /// Absolute tolerance added to every row.
    pub row_floor: f64,
    /// Radii for the order check; default `max(2, r_1) * 2^j`, 16 radii.
    pub order_radii: Option<Vec<f64>>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            scheme: None,
            sup_resolution: 1024,
            max_sup_resolution: 1 << 16,
            min_off_cap_probes: 100,
            row_floor: 1e-10,
            order_radii: None,
        }
    }
}

struct OffCap {
    probes: usize,
    off: usize,
    covered: bool,
    sup: f64,
}

fn off_cap_sup(
    v: &ScalarField,
    r: f64,
    caps: &[SphericalCap],
    covered_by_measure: bool,
    opts: &AuditOptions,
) -> Result<OffCap, LiouvilleError> {
    let m = v.dim();
    if covered_by_measure {
        return Ok(OffCap {
            probes: 0,
            off: 0,
            covered: true,
            sup: f64::NEG_INFINITY,
        });
    }
    let mut res = opts.sup_resolution.max(8);
    loop {
        let dirs = sphere_probe_directions(m, res);
        let off: Vec<&Vec<f64>> = dirs
            .iter()
            .filter(|d| !caps.iter().any(|c| c.contains_direction(d)))
            .collect();
        if off.len() >= opts.min_off_cap_probes || res >= opts.max_sup_resolution || m.get() == 1 {
            let mut sup = f64::NEG_INFINITY;
            for d in &off {
                let p: Vec<f64> = d.iter().map(|c| c * r).collect();
                let val = v.eval(&p);
                if val.is_nan() || val == f64::INFINITY {
                    return Err(QuadratureError::InvalidValue { point: p, value: val }.into());
                }
                sup = sup.max(val);
            }
            return Ok(OffCap {
                probes: dirs.len(),
                off: off.len(),
                covered: off.is_empty(),
                sup,
            });
        }
        res *= 2;
    }
}

/// Default level `max{M0, M_E}`: `M0` from sphere suprema across the first
/// shell, `M_E` from off-cap probes on the first audit sphere.
pub fn default_level(
    v: &ScalarField,
    e: &ExceptionalSet,
    seq: &RadiiSequence,
    opts: &AuditOptions,
) -> Result<SupEstimates, LiouvilleError> {
    let r1 = seq.radii()[0];
    let r0 = v.domain().exclusion_radius().unwrap_or(0.0);
    let origin = vec![0.0; v.dim().get()];
    let mut m0 = f64::NEG_INFINITY;
    for j in 1..=8 {
        let r = r0 + (r1 - r0) * j as f64 / 8.0;
        if v.domain().contains_sphere(&origin, r) {
            m0 = m0.max(sphere_sup(v, &origin, r, opts.sup_resolution)?);
        }
    }
    let eps = epsilon_sequence(e);
    let covered = covered(v.dim(), r1, eps.values[0]);
    let me = off_cap_sup(v, r1, e.caps_at(0), covered, opts)?.sup;
    Ok(SupEstimates {
        m_e_proxy: me,
        m0_proxy: m0,
    })
}

fn covered(m: Dim, r: f64, epsilon: f64) -> bool {
    epsilon * r.powi(m.get() as i32 - 1) >= sphere_area(m, r) * (1.0 - 1e-12)
}

/// Runs the audit with level `level` (or the default level when `None`).
pub fn run_liouville_audit(
    v: &ScalarField,
    e: &ExceptionalSet,
    seq: &RadiiSequence,
    level: Option<f64>,
    order_ceiling: f64,
    opts: &AuditOptions,
) -> Result<AuditVerdict, LiouvilleError> {
    let m = v.dim();
    if e.dim() != m {
        return Err(LiouvilleError::InvalidParameter(
            "exceptional set dimension differs from the field".into(),
        ));
    }
    let radii = seq.radii();
    if e.per_radius.len() != radii.len() {
        return Err(LiouvilleError::InvalidParameter(format!(
            "{} cap families for {} radii",
            e.per_radius.len(),
            radii.len()
        )));
    }
    for (index, (r, _)) in e.per_radius.iter().enumerate() {
        if (r - radii[index]).abs() > 1e-12 * radii[index] {
            return Err(LiouvilleError::RadiusMismatch {
                index,
                expected: radii[index],
                found: *r,
            });
        }
    }
    let origin = vec![0.0; m.get()];
    for &r in radii {
        if !v.domain().contains_sphere(&origin, r) {
            return Err(QuadratureError::DomainViolation {
                what: "audit sphere",
                center: origin.clone(),
                radius: r,
            }
            .into());
        }
    }
    let sup_estimates = default_level(v, e, seq, opts)?;
    let level = match level {
        Some(l) if l.is_finite() => l,
        Some(l) => return Err(LiouvilleError::InvalidParameter(format!("level {l} must be finite"))),
        None => {
            let l = sup_estimates.m0_proxy.max(sup_estimates.m_e_proxy);
            if l.is_finite() {
                l
            } else {
                0.0
            }
        }
    };
    let big_v = shift_sub_const(v, level)?;
    let scheme = opts.scheme.unwrap_or_else(|| QuadratureScheme::default_for(m));
    let eps = epsilon_sequence(e);
    let tol_off = opts.row_floor + 1e-12 * level.abs();

    // off-cap suprema
    let mut off_cap_table = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let c = covered(m, r, eps.values[k]);
        let oc = off_cap_sup(v, r, e.caps_at(k), c, opts)?;
        off_cap_table.push(OffCapRow {
            k: k + 1,
            radius: r,
            probes: oc.probes,
            off_cap_probes: oc.off,
            covered: oc.covered,
            sup_off_cap: oc.sup,
            violated: !oc.covered && oc.sup - level > tol_off,
        });
    }
    if !e.include_shells {
        // shells are constrained too: probe the mid-shell spheres in full
        for k in 0..radii.len() - 1 {
            let r = (radii[k] * radii[k + 1]).sqrt();
            let sup = sphere_sup(v, &origin, r, opts.sup_resolution)?;
            off_cap_table.push(OffCapRow {
                k: k + 1,
                radius: r,
                probes: opts.sup_resolution,
                off_cap_probes: opts.sup_resolution,
                covered: false,
                sup_off_cap: sup,
                violated: sup - level > tol_off,
            });
        }
        off_cap_table.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    }

    // sphere means of V at r_k and at Q r_k
    let means = radii
        .par_iter()
        .map(|&r| sphere_mean(&big_v, &origin, r, &scheme))
        .collect::<Result<Vec<_>, _>>()?;
    let q_means = radii[..radii.len() - 1]
        .par_iter()
        .map(|&r| sphere_mean(&big_v, &origin, seq.big_q() * r, &scheme))
        .collect::<Result<Vec<_>, _>>()?;

    let sphere_ok: Vec<bool> = radii
        .iter()
        .map(|r| off_cap_table.iter().filter(|o| o.radius == *r).all(|o| !o.violated))
        .collect();
    let mut recurrence_table = Vec::with_capacity(radii.len() - 1);
    let mut monotonicity = Vec::with_capacity(radii.len() - 1);
    for k in 0..radii.len() - 1 {
        let factor = recurrence_factor(m, seq.q(), eps.values[k]);
        let factor_err = recurrence_factor(m, seq.q(), eps.errors[k]);
        let (cur, next) = (means[k], means[k + 1]);
        let bound = factor * next.value;
        let tolerance = cur.error_bound + factor * next.error_bound + factor_err * next.value.abs() + opts.row_floor;
        recurrence_table.push(RecurrenceRow {
            k: k + 1,
            radius: radii[k],
            s_v: cur.value,
            s_v_error: cur.error_bound,
            epsilon: eps.values[k],
            factor,
            s_v_next: next.value,
            bound,
            tolerance,
            passed: cur.value <= bound + tolerance,
            hypothesis_holds: sphere_ok[k],
        });
        let qm = q_means[k];
        let mt = next.error_bound + qm.error_bound + opts.row_floor;
        monotonicity.push(MonotoneRow {
            k: k + 1,
            s_v_next: next.value,
            s_v_q: qm.value,
            tolerance: mt,
            passed: next.value <= qm.value + mt,
        });
    }

    let order_radii = opts
        .order_radii
        .clone()
        .unwrap_or_else(|| growth::geometric_radii(radii[0].max(2.0), 2.0, 16));
    let (order_proxy, finite_order) = match growth::estimate_order(v, &order_radii, ProfileKind::SphereSup) {
        Ok(est) => (Some(est.order_proxy), growth::is_finite_order(&est, order_ceiling)),
        Err(GrowthError::DegenerateProfile) => (Some(0.0), true),
        Err(err) => return Err(err.into()),
    };

    let violated: Vec<&OffCapRow> = off_cap_table.iter().filter(|r| r.violated).collect();
    let grows = violated.len() >= 2 && {
        let first = violated.first().unwrap().sup_off_cap;
        let last = violated.last().unwrap().sup_off_cap;
        last > first + tol_off
    };
    let rows_ok = recurrence_table.iter().all(|r| r.passed || !r.hypothesis_holds);
    let all_zero = means.iter().all(|s| s.value <= s.error_bound + opts.row_floor);
    let status = if grows {
        AuditStatus::UnboundedOffExceptional
    } else if !rows_ok {
        AuditStatus::RecurrenceViolated
    } else if violated.is_empty() && all_zero && finite_order {
        AuditStatus::ConsistentBounded
    } else {
        AuditStatus::Inconclusive
    };

    Ok(AuditVerdict {
        status,
        level,
        recurrence_table,
        off_cap_table,
        monotonicity,
        epsilon: eps,
        sup_estimates,
        order_proxy,
        finite_order,
        note: AUDIT_NOTE.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceAudit {
    pub verdicts: Vec<AuditVerdict>,
    /// `S_slice(r_1)` per direction.
    pub slice_constants: Vec<f64>,
    pub slice_constant_errors: Vec<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub value_at_origin: f64,
    pub constants_agree: bool,
    pub combined: AuditStatus,
}

/// Tolerance for slice constants meeting at the origin.
pub const SLICE_AGREEMENT_TOL: f64 = 1e-9;

/// Audits the restrictions of `v` on `C^n` to the complex lines `{z s}`,
/// sharing one exceptional set, radius sequence and level.
pub fn audit_complex_slices(
    v: &ScalarField,
    directions: &[Vec<Complex64>],
    e: &ExceptionalSet,
    seq: &RadiiSequence,
    level: Option<f64>,
    order_ceiling: f64,
    opts: &AuditOptions,
) -> Result<SliceAudit, LiouvilleError> {
    if directions.is_empty() {
        return Err(LiouvilleError::InvalidParameter("no slice directions".into()));
    }
    let slices = directions
        .iter()
        .map(|s| slice_complex_line(v, s))
        .collect::<Result<Vec<_>, _>>()?;
    let verdicts = slices
        .par_iter()
        .map(|f| run_liouville_audit(f, e, seq, level, order_ceiling, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let r1 = seq.radii()[0];
    let scheme = QuadratureScheme::default_for(Dim::new(2).expect("2 > 0"));
    let means = slices
        .iter()
        .map(|f| sphere_mean(f, &[0.0, 0.0], r1, &scheme))
        .collect::<Result<Vec<_>, _>>()?;
    let value_at_origin = v.eval(&vec![0.0; v.dim().get()]);
    let constants_agree = value_at_origin.is_finite()
        && means
            .iter()
            .all(|s| (s.value - value_at_origin).abs() <= SLICE_AGREEMENT_TOL + s.error_bound);
    let statuses: Vec<AuditStatus> = verdicts.iter().map(|v| v.status).collect();
    let combined = if statuses.contains(&AuditStatus::RecurrenceViolated) {
        AuditStatus::RecurrenceViolated
    } else if statuses.contains(&AuditStatus::UnboundedOffExceptional) {
        AuditStatus::UnboundedOffExceptional
    } else if statuses.iter().all(|s| *s == AuditStatus::ConsistentBounded) && constants_agree {
        AuditStatus::ConsistentBounded
    } else {
        AuditStatus::Inconclusive
    };
    Ok(SliceAudit {
        verdicts,
        slice_constants: means.iter().map(|s| s.value).collect(),
        slice_constant_errors: means.iter().map(|s| s.error_bound).collect(),
        value_at_origin,
        constants_agree,
        combined,
    })
}

/// Unit complex direction `s / |s|`.
pub fn normalize_direction(s: &[Complex64]) -> Result<Vec<Complex64>, LiouvilleError> {
    let flat: Vec<f64> = s.iter().flat_map(|c| [c.re, c.im]).collect();
    let n = norm(&flat);
    if !(n > 0.0 && n.is_finite()) {
        return Err(LiouvilleError::InvalidParameter("zero slice direction".into()));
    }
    Ok(s.iter().map(|c| c / n).collect())
}

/// Array-level form of the final step of the argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLemma {
    /// Profile nondecreasing, `S_k <= f_k S_{k+1}`, and `S_k <= C r_k^rho`.
    pub hypotheses_hold: bool,
    /// Natural log of `(prod f_k) C (Q^n r_1)^rho`.
    pub log_bound: f64,
    pub bound: f64,
    /// `S_1 <= bound` and `bound <= tol`.
    pub forces_zero: bool,
}

/// For a profile `S_1..S_{n+1}` on radii with ratios at most `Q`, factors
/// `f_1..f_n` and growth `S(r) <= C r^rho`, telescoping gives
/// `S_1 <= (prod f_k) S_{n+1} <= (prod f_k) C (Q^n r_1)^rho`.
pub fn synthetic_lemma(
    profile: &[f64],
    radii: &[f64],
    factors: &[f64],
    big_q: f64,
    order: f64,
    growth_const: f64,
    tol: f64,
) -> SyntheticLemma {
    let n = factors.len();
    assert!(
        profile.len() == n + 1 && radii.len() == n + 1,
        "need one more profile value than factors"
    );
    let slack = |a: f64, b: f64| a <= b * (1.0 + 1e-12) + 1e-300;
    let monotone = profile.windows(2).all(|w| slack(w[0], w[1]));
    let recurrence = (0..n).all(|k| slack(profile[k], factors[k] * profile[k + 1]));
    let ratios = radii.windows(2).all(|w| w[1] / w[0] <= big_q * (1.0 + 1e-12));
    let growth_ok = profile
        .iter()
        .zip(radii)
        .all(|(s, r)| slack(*s, growth_const * r.powf(order)));
    let log_bound = factors.iter().map(|f| f.ln()).sum::<f64>()
        + growth_const.ln()
        + order * (n as f64 * big_q.ln() + radii[0].ln());
    let bound = log_bound.exp();
    let hypotheses_hold = monotone && recurrence && ratios && growth_ok;
    SyntheticLemma {
        hypotheses_hold,
        log_bound,
        bound,
        forces_zero: hypotheses_hold && profile[0] <= bound * (1.0 + 1e-12) && bound <= tol,
    }
}
