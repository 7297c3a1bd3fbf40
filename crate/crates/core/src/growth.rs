//! Growth-order proxies from radial profiles.
//!
//! The order is the upper limit of `ln(1 + M+(x)) / ln|x|`. On finitely many
//! geometric radii it is approximated by least-squares slopes of
//! `ln(1 + P+)` against `ln r` over sliding windows of six radii; the proxy is
//! the largest of the last three window slopes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{positive_part, ScalarField};
use crate::quadrature::{sphere_mean, sphere_sup, QuadratureError, QuadratureScheme};

pub const WINDOW: usize = 6;
pub const TAIL_WINDOWS: usize = 3;
pub const MIN_RADII: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("need at least {MIN_RADII} radii, got {0}")]
    TooFewRadii(usize),
    #[error("radii must be geometric with ratio in [1.2, 4]: {0}")]
    BadRatio(String),
    #[error("profile vanishes on every radius")]
    DegenerateProfile,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    SphereSup,
    SphereMeanOfPositivePart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub slope_windows: Vec<SlopeWindow>,
    pub order_proxy: f64,
    pub radii_used: Vec<f64>,
    pub profile_kind: ProfileKind,
    /// `ln(1 + P+(r_j))` at every radius.
    pub log_profile: Vec<f64>,
}

impl OrderEstimate {
    /// Slopes of the last three windows.
    pub fn tail(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.slope_windows.len();
        self.slope_windows[n.saturating_sub(TAIL_WINDOWS)..]
            .iter()
            .map(|w| w.slope)
    }
}

/// `r1 * rho^j` for `j = 0..count`.
pub fn geometric_radii(r1: f64, rho: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| r1 * rho.powi(j as i32)).collect()
}

/// Two-up-to-`2^17` default radii.
pub fn default_radii() -> Vec<f64> {
    geometric_radii(2.0, 2.0, 16)
}

fn validate_radii(radii: &[f64]) -> Result<(), GrowthError> {
    if radii.len() < MIN_RADII {
        return Err(GrowthError::TooFewRadii(radii.len()));
    }
    if !(radii[0] > 0.0 && radii[0].is_finite()) {
        return Err(GrowthError::BadRatio(format!(
            "first radius {} must be positive",
            radii[0]
        )));
    }
    let rho = radii[1] / radii[0];
    if !(1.2 - 1e-12..=4.0 + 1e-12).contains(&rho) {
        return Err(GrowthError::BadRatio(format!("ratio {rho}")));
    }
    for w in radii.windows(2) {
        let q = w[1] / w[0];
        if !q.is_finite() || (q - rho).abs() > 1e-9 * rho {
            return Err(GrowthError::BadRatio(format!(
                "consecutive ratio {q} differs from {rho}"
            )));
        }
    }
    Ok(())
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Window slopes and proxy from precomputed values of `ln(1 + P+)`.
pub fn estimate_order_from_log_profile(
    radii: &[f64],
    log_profile: &[f64],
    kind: ProfileKind,
) -> Result<OrderEstimate, GrowthError> {
    validate_radii(radii)?;
    assert_eq!(radii.len(), log_profile.len(), "one profile value per radius");
    if log_profile.iter().all(|&y| y == 0.0) {
        return Err(GrowthError::DegenerateProfile);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let slope_windows: Vec<SlopeWindow> = (0..=radii.len() - WINDOW)
        .map(|i| SlopeWindow {
            r_lo: radii[i],
            r_hi: radii[i + WINDOW - 1],
            slope: ls_slope(&xs[i..i + WINDOW], &log_profile[i..i + WINDOW]),
        })
        .collect();
    let n = slope_windows.len();
    let order_proxy = slope_windows[n - TAIL_WINDOWS..]
        .iter()
        .map(|w| w.slope)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderEstimate {
        slope_windows,
        order_proxy,
        radii_used: radii.to_vec(),
        profile_kind: kind,
        log_profile: log_profile.to_vec(),
    })
}

/// `ln(1 + max(p, 0))`, accurate for small `p`.
pub fn log_one_plus_positive(p: f64) -> f64 {
    if p > 0.0 {
        p.ln_1p()
    } else {
        0.0
    }
}

/// Estimate from raw profile values `P(r_j)`.
pub fn estimate_order_from_profile(
    radii: &[f64],
    profile: &[f64],
    kind: ProfileKind,
) -> Result<OrderEstimate, GrowthError> {
    let logs: Vec<f64> = profile.iter().map(|&p| log_one_plus_positive(p)).collect();
    estimate_order_from_log_profile(radii, &logs, kind)
}

/// Probe counts for sup profiles: 8192 on the circle, 4096 elsewhere.
pub fn default_sup_resolution(m: usize) -> usize {
    if m == 2 {
        8192
    } else {
        4096
    }
}

/// Profile values `P(r_j)` about the origin.
pub fn radial_profile(
    v: &ScalarField,
    radii: &[f64],
    kind: ProfileKind,
    scheme: &QuadratureScheme,
    sup_resolution: usize,
) -> Result<Vec<f64>, GrowthError> {
    let origin = vec![0.0; v.dim().get()];
    let vp = positive_part(v);
    radii
        .par_iter()
        .map(|&r| -> Result<f64, GrowthError> {
            Ok(match kind {
                ProfileKind::SphereSup => sphere_sup(v, &origin, r, sup_resolution)?,
                ProfileKind::SphereMeanOfPositivePart => sphere_mean(&vp, &origin, r, scheme)?.value,
            })
        })
        .collect()
}

/// Order proxy of `v` from its profile on the given geometric radii, with
/// default quadrature and sup resolutions.
pub fn estimate_order(v: &ScalarField, radii: &[f64], kind: ProfileKind) -> Result<OrderEstimate, GrowthError> {
    estimate_order_with(
        v,
        radii,
        kind,
        &QuadratureScheme::default_for(v.dim()),
        default_sup_resolution(v.dim().get()),
    )
}

pub fn estimate_order_with(
    v: &ScalarField,
    radii: &[f64],
    kind: ProfileKind,
    scheme: &QuadratureScheme,
    sup_resolution: usize,
) -> Result<OrderEstimate, GrowthError> {
    validate_radii(radii)?;
    let profile = radial_profile(v, radii, kind, scheme, sup_resolution)?;
    estimate_order_from_profile(radii, &profile, kind)
}

/// Finite-order proxy: the order proxy stays below `ceiling` and the last
/// window slope exceeds the first tail slope by at most 0.5.
pub fn is_finite_order(est: &OrderEstimate, ceiling: f64) -> bool {
    let tail: Vec<f64> = est.tail().collect();
    let (Some(first), Some(last)) = (tail.first(), tail.last()) else {
        return false;
    };
    est.order_proxy <= ceiling && *last <= first + 0.5
}
