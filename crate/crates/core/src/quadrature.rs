//! Sphere means, ball means, cap integrals and sphere suprema.
//!
//! Rules by dimension:
//!
//! * `m = 1`: the sphere is `{x - r, x + r}`; means are exact two-point averages.
//! * `m = 2`: uniform angles with a fixed irrational phase (exact for
//!   trigonometric polynomials of degree below the resolution).
//! * `m = 3`: Gauss–Legendre in `cos(theta)` times uniform longitude.
//! * `m >= 4`: Monte Carlo over normalized Gaussian directions. Every base
//!   direction is expanded into its orbit under coordinate sign flips and
//!   cyclic coordinate shifts, which integrates harmonic polynomials of
//!   degree at most 3 exactly and keeps the orbit means i.i.d.
//!
//! Deterministic rules report the Richardson difference against the rule at
//! half resolution plus a round-off floor; Monte Carlo reports three standard
//! errors of the orbit means.
//!
//! Values equal to `-inf` are handled by clipping at `-L` for
//! `L = 10, 100, ..., 10^6` until consecutive clipped means agree; a field
//! that never stabilizes yields [`QuadratureError::DivergentIntegral`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::ScalarField;
use crate::geometry::{
    self, arc_of, cap_relation, dot, norm, sphere_area, CapRelation, Dim, GeometryError, SphericalCap,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("{what} of radius {radius} about {center:?} leaves the field's domain")]
    DomainViolation {
        what: &'static str,
        center: Vec<f64>,
        radius: f64,
    },
    #[error("clipped means did not stabilize (last two: {previous}, {last})")]
    DivergentIntegral { previous: f64, last: f64 },
    #[error("field returned {value} at {point:?}")]
    InvalidValue { point: Vec<f64>, value: f64 },
    #[error("invalid quadrature scheme: {0}")]
    InvalidScheme(String),
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("point has {got} coordinates, field has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    UniformCircle,
    ProductGaussSphere,
    MonteCarloSphere,
    /// Ball means only: default direction rule, `resolution / 8` radial panels.
    RadialComposite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub kind: SchemeKind,
    pub resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Seed used by [`QuadratureScheme::default_for`] in dimensions `m >= 4`.
pub const DEFAULT_SEED: u64 = 0x5eed_0f_5feed;
pub const DEFAULT_CIRCLE_RESOLUTION: usize = 4096;
pub const DEFAULT_GAUSS_RESOLUTION: usize = 128;
pub const DEFAULT_MC_SAMPLES: usize = 1 << 20;

impl QuadratureScheme {
    pub fn uniform_circle(resolution: usize) -> Self {
        QuadratureScheme {
            kind: SchemeKind::UniformCircle,
            resolution,
            seed: None,
        }
    }

    pub fn product_gauss(resolution: usize) -> Self {
        QuadratureScheme {
            kind: SchemeKind::ProductGaussSphere,
            resolution,
            seed: None,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureScheme {
            kind: SchemeKind::MonteCarloSphere,
            resolution: samples,
            seed: Some(seed),
        }
    }

    /// 4096 angles for `m = 2`, 128 x 256 nodes for `m = 3`, `2^20` Monte
    /// Carlo samples otherwise (`m = 1` is exact under any scheme).
    pub fn default_for(m: Dim) -> Self {
        match m.get() {
            1 | 2 => Self::uniform_circle(DEFAULT_CIRCLE_RESOLUTION),
            3 => Self::product_gauss(DEFAULT_GAUSS_RESOLUTION),
            _ => Self::monte_carlo(DEFAULT_MC_SAMPLES, DEFAULT_SEED),
        }
    }

    /// Default direction rule for `m`, keeping this scheme's seed if any.
    fn direction_default(&self, m: Dim) -> Self {
        let d = Self::default_for(m);
        QuadratureScheme {
            seed: d.seed.map(|s| self.seed.unwrap_or(s)),
            ..d
        }
    }

    /// Same kind and seed at a different resolution.
    pub fn with_resolution(self, resolution: usize) -> Self {
        QuadratureScheme { resolution, ..self }
    }

    pub fn validate(&self, m: Dim) -> Result<(), QuadratureError> {
        if self.resolution < 8 {
            return Err(QuadratureError::InvalidScheme(format!(
                "resolution {} is below the minimum of 8",
                self.resolution
            )));
        }
        match (self.kind, m.get()) {
            (_, 1) => Ok(()),
            (SchemeKind::UniformCircle, 2) | (SchemeKind::ProductGaussSphere, 3) => Ok(()),
            (SchemeKind::MonteCarloSphere, _) => {
                if self.seed.is_none() {
                    Err(QuadratureError::InvalidScheme("seed".into()))
                } else {
                    Ok(())
                }
            }
            (SchemeKind::RadialComposite, _) => Ok(()),
            (kind, m) => Err(QuadratureError::InvalidScheme(format!(
                "{kind:?} does not apply to m = {m}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DeterministicGrid,
    MonteCarlo,
}

/// Numerical value of a mean or integral with its error bound.
///
/// Grid bounds come from comparing refinements; a kink lying almost on a
/// panel end shared by every grid escapes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl MeanEstimate {
    pub fn exact(value: f64, samples: usize) -> Self {
        MeanEstimate {
            value,
            error_bound: 0.0,
            method: Method::DeterministicGrid,
            samples,
            seed: None,
        }
    }

    fn scaled(self, factor: f64) -> Self {
        MeanEstimate {
            value: self.value * factor,
            error_bound: self.error_bound * factor.abs(),
            ..self
        }
    }
}

const CLIP_LEVELS: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];
/// Target tolerance of the clipping loop; successive clipped means must agree
/// to a tenth of it.
pub const CLIP_TARGET: f64 = 1e-9;
const PHASE: f64 = 0.381_966_011_250_105_1;
const PAR_THRESHOLD: usize = 4096;
const MC_CHUNK: usize = 64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            let dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 { nf * (x * p1 - p0) / (x * x - 1.0) } else { 1.0 };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels of `order` points.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Unit directions in `R^m` with either quadrature weights or Monte Carlo orbits.
struct DirectionSet {
    m: usize,
    dirs: Vec<f64>,
    kind: DirectionKind,
}

enum DirectionKind {
    Weighted(Vec<f64>),
    Orbits { orbit: usize, seed: u64 },
}

impl DirectionSet {
    fn len(&self) -> usize {
        self.dirs.len() / self.m
    }

    fn dir(&self, i: usize) -> &[f64] {
        &self.dirs[i * self.m..(i + 1) * self.m]
    }

    fn two_point() -> Self {
        DirectionSet {
            m: 1,
            dirs: vec![1.0, -1.0],
            kind: DirectionKind::Weighted(vec![0.5, 0.5]),
        }
    }

    fn circle(n: usize, phase: f64) -> Self {
        let mut dirs = Vec::with_capacity(2 * n);
        for j in 0..n {
            let a = 2.0 * PI * (j as f64 + phase) / n as f64;
            dirs.push(a.cos());
            dirs.push(a.sin());
        }
        DirectionSet {
            m: 2,
            dirs,
            kind: DirectionKind::Weighted(vec![1.0 / n as f64; n]),
        }
    }

    fn product_gauss(n: usize) -> Self {
        let (u, w) = gauss_legendre(n);
        let nphi = 2 * n;
        let mut dirs = Vec::with_capacity(3 * n * nphi);
        let mut weights = Vec::with_capacity(n * nphi);
        for (ui, wi) in u.iter().zip(&w) {
            let s = (1.0 - ui * ui).max(0.0).sqrt();
            for j in 0..nphi {
                let phi = 2.0 * PI * (j as f64 + PHASE) / nphi as f64;
                dirs.extend_from_slice(&[s * phi.cos(), s * phi.sin(), *ui]);
                weights.push(0.5 * wi / nphi as f64);
            }
        }
        DirectionSet {
            m: 3,
            dirs,
            kind: DirectionKind::Weighted(weights),
        }
    }

    fn orbit_size(m: usize) -> usize {
        m << m
    }

    fn monte_carlo(m: usize, n_orbits: usize, seed: u64) -> Self {
        let orbit = Self::orbit_size(m);
        let chunks = n_orbits.div_ceil(MC_CHUNK);
        let bases: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let count = MC_CHUNK.min(n_orbits - c * MC_CHUNK);
                let mut out = Vec::with_capacity(count * m);
                for _ in 0..count {
                    out.extend(gaussian_direction(&mut rng, m));
                }
                out
            })
            .collect();
        let mut dirs = Vec::with_capacity(n_orbits * orbit * m);
        for base in bases.iter().flat_map(|b| b.chunks(m)) {
            for shift in 0..m {
                for mask in 0..(1usize << m) {
                    for i in 0..m {
                        let c = base[(i + shift) % m];
                        dirs.push(if mask >> i & 1 == 1 { -c } else { c });
                    }
                }
            }
        }
        DirectionSet {
            m,
            dirs,
            kind: DirectionKind::Orbits { orbit, seed },
        }
    }

    /// Direction rule for a scheme together with its half-resolution companion
    /// (deterministic kinds only).
    fn for_scheme(m: Dim, scheme: &QuadratureScheme) -> Result<(Self, Option<Self>), QuadratureError> {
        scheme.validate(m)?;
        let res = scheme.resolution;
        Ok(match (m.get(), scheme.kind) {
            (1, _) => (Self::two_point(), None),
            (_, SchemeKind::RadialComposite) => Self::for_scheme(m, &scheme.direction_default(m))?,
            (2, SchemeKind::UniformCircle) => (Self::circle(res, PHASE), Some(Self::circle((res / 2).max(4), PHASE))),
            (3, SchemeKind::ProductGaussSphere) => {
                (Self::product_gauss(res), Some(Self::product_gauss((res / 2).max(4))))
            }
            (mm, SchemeKind::MonteCarloSphere) => {
                let orbit = Self::orbit_size(mm);
                let n_orbits = (res / orbit).max(8);
                (
                    Self::monte_carlo(mm, n_orbits, scheme.seed.unwrap_or(DEFAULT_SEED)),
                    None,
                )
            }
            (mm, kind) => {
                return Err(QuadratureError::InvalidScheme(format!(
                    "{kind:?} does not apply to m = {mm}"
                )))
            }
        })
    }
}

fn gaussian_direction<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Evaluates `f` at every point, preserving order.
fn evaluate_points<F>(count: usize, f: F) -> Result<Vec<f64>, QuadratureError>
where
    F: Fn(usize) -> (f64, Option<Vec<f64>>) + Sync,
{
    let check = |i: usize| -> Result<f64, QuadratureError> {
        let (v, pt) = f(i);
        if v.is_nan() || v == f64::INFINITY {
            return Err(QuadratureError::InvalidValue {
                point: pt.unwrap_or_default(),
                value: v,
            });
        }
        Ok(v)
    };
    if count < PAR_THRESHOLD {
        (0..count).map(check).collect()
    } else {
        (0..count).into_par_iter().map(check).collect()
    }
}

fn sample_values(
    v: &ScalarField,
    center: &[f64],
    radius: f64,
    set: &DirectionSet,
) -> Result<Vec<f64>, QuadratureError> {
    let m = set.m;
    evaluate_points(set.len(), |i| {
        let d = set.dir(i);
        let p: Vec<f64> = (0..m).map(|k| center[k] + radius * d[k]).collect();
        let val = v.eval(&p);
        let bad = val.is_nan() || val == f64::INFINITY;
        (val, bad.then_some(p))
    })
}

#[derive(Debug, Clone, Copy)]
struct Reduced {
    mean: f64,
    /// Monte Carlo: standard error of the mean. Deterministic: round-off floor.
    spread: f64,
}

fn clip(v: f64, level: Option<f64>) -> f64 {
    match level {
        Some(l) if v < -l => -l,
        _ => v,
    }
}

fn reduce_once(values: &[f64], set_kind: &DirectionKind, level: Option<f64>) -> Reduced {
    match set_kind {
        DirectionKind::Weighted(w) => {
            let mut acc = 0.0;
            let mut abs = 0.0;
            for (v, wi) in values.iter().zip(w) {
                let c = clip(*v, level);
                acc += wi * c;
                abs += wi * c.abs();
            }
            Reduced {
                mean: acc,
                spread: 64.0 * f64::EPSILON * abs,
            }
        }
        DirectionKind::Orbits { orbit, .. } => {
            let means: Vec<f64> = values
                .chunks(*orbit)
                .map(|o| o.iter().map(|v| clip(*v, level)).sum::<f64>() / o.len() as f64)
                .collect();
            mean_and_stderr(&means)
        }
    }
}

fn mean_and_stderr(samples: &[f64]) -> Reduced {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Reduced {
        mean,
        spread: (var / n).sqrt(),
    }
}

/// Reduction with the clipping loop for `-inf` and very negative samples.
fn reduce_stabilized(values: &[f64], kind: &DirectionKind) -> Result<Reduced, QuadratureError> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= -CLIP_LEVELS[0] {
        return Ok(reduce_once(values, kind, None));
    }
    let mut prev = reduce_once(values, kind, Some(CLIP_LEVELS[0]));
    for &level in &CLIP_LEVELS[1..] {
        let cur = reduce_once(values, kind, Some(level));
        if (cur.mean - prev.mean).abs() < 0.1 * CLIP_TARGET {
            return Ok(cur);
        }
        prev = cur;
    }
    let last = reduce_once(values, kind, Some(*CLIP_LEVELS.last().unwrap()));
    Err(QuadratureError::DivergentIntegral {
        previous: prev.mean,
        last: last.mean,
    })
}

fn check_center(v: &ScalarField, x: &[f64], r: f64) -> Result<(), QuadratureError> {
    if x.len() != v.dim().get() {
        return Err(QuadratureError::DimensionMismatch {
            expected: v.dim().get(),
            got: x.len(),
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(QuadratureError::BadRadius(r));
    }
    Ok(())
}

fn mc_estimate(red: Reduced, samples: usize, seed: u64) -> MeanEstimate {
    MeanEstimate {
        value: red.mean,
        error_bound: 3.0 * red.spread,
        method: Method::MonteCarlo,
        samples,
        seed: Some(seed),
    }
}

fn sphere_mean_with_sets(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    fine: &DirectionSet,
    coarse: Option<&DirectionSet>,
) -> Result<MeanEstimate, QuadratureError> {
    let vals = sample_values(v, x, r, fine)?;
    let red = reduce_stabilized(&vals, &fine.kind)?;
    match (&fine.kind, coarse) {
        (DirectionKind::Orbits { seed, .. }, _) => Ok(mc_estimate(red, vals.len(), *seed)),
        (DirectionKind::Weighted(_), Some(c)) => {
            let cvals = sample_values(v, x, r, c)?;
            let cred = reduce_stabilized(&cvals, &c.kind)?;
            Ok(MeanEstimate {
                value: red.mean,
                error_bound: (red.mean - cred.mean).abs() + red.spread,
                method: Method::DeterministicGrid,
                samples: vals.len(),
                seed: None,
            })
        }
        (DirectionKind::Weighted(_), None) => Ok(MeanEstimate {
            value: red.mean,
            error_bound: red.spread,
            method: Method::DeterministicGrid,
            samples: vals.len(),
            seed: None,
        }),
    }
}

/// Mean of `v` over the sphere `S(x, r)` with respect to normalized surface measure.
pub fn sphere_mean(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    check_center(v, x, r)?;
    if !v.domain().contains_sphere(x, r) {
        return Err(QuadratureError::DomainViolation {
            what: "sphere",
            center: x.to_vec(),
            radius: r,
        });
    }
    if scheme.kind == SchemeKind::RadialComposite && v.dim().get() > 1 {
        return Err(QuadratureError::InvalidScheme(
            "radial_composite applies to ball means only".into(),
        ));
    }
    let (fine, coarse) = DirectionSet::for_scheme(v.dim(), scheme)?;
    sphere_mean_with_sets(v, x, r, &fine, coarse.as_ref())
}

/// Sphere mean with the default scheme for the field's dimension.
pub fn sphere_mean_default(v: &ScalarField, x: &[f64], r: f64) -> Result<MeanEstimate, QuadratureError> {
    sphere_mean(v, x, r, &QuadratureScheme::default_for(v.dim()))
}

const RADIAL_ORDER: usize = 8;
const RADIAL_PANELS: usize = 16;

/// Ray integrals `int_0^1 m t^{m-1} v(x + r t u) dt` for every direction `u`.
fn ray_values(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    set: &DirectionSet,
    panels: usize,
) -> Result<Vec<Vec<f64>>, QuadratureError> {
    let m = set.m;
    let (ts, ws) = composite_gauss(0.0, 1.0, panels, RADIAL_ORDER);
    let radial_w: Vec<f64> = ts
        .iter()
        .zip(&ws)
        .map(|(t, w)| w * m as f64 * t.powi(m as i32 - 1))
        .collect();
    // values[j][i]: radial node j, direction i
    let nt = ts.len();
    let flat = evaluate_points(set.len() * nt, |k| {
        let (j, i) = (k / set.len(), k % set.len());
        let d = set.dir(i);
        let p: Vec<f64> = (0..m).map(|c| x[c] + r * ts[j] * d[c]).collect();
        let val = v.eval(&p);
        let bad = val.is_nan() || val == f64::INFINITY;
        (val, bad.then_some(p))
    })?;
    Ok(flat
        .chunks(set.len())
        .zip(&radial_w)
        .map(|(row, w)| row.iter().map(|val| val * w).collect())
        .collect())
}

fn ball_mean_with_sets(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    fine: &DirectionSet,
    coarse: Option<&DirectionSet>,
    panels: usize,
) -> Result<MeanEstimate, QuadratureError> {
    // The clipping loop acts on weighted ray samples; -inf stays -inf under
    // positive weights, so the stabilization criterion is unchanged.
    let reduce_rows = |rows: &[Vec<f64>], set: &DirectionSet| -> Result<Reduced, QuadratureError> {
        let n = set.len();
        let mut ray = vec![0.0; n];
        let mut any_neg_inf = false;
        for row in rows {
            for (acc, val) in ray.iter_mut().zip(row) {
                *acc += val;
            }
        }
        for val in &ray {
            any_neg_inf |= *val == f64::NEG_INFINITY;
        }
        if any_neg_inf {
            // clip individual samples, then integrate along rays
            let mut prev: Option<Reduced> = None;
            for &level in &CLIP_LEVELS {
                let mut clipped = vec![0.0; n];
                for row in rows {
                    for (acc, val) in clipped.iter_mut().zip(row) {
                        *acc += if *val == f64::NEG_INFINITY { -level } else { *val };
                    }
                }
                let cur = reduce_once(&clipped, &set.kind, None);
                if let Some(p) = prev {
                    if (cur.mean - p.mean).abs() < 0.1 * CLIP_TARGET {
                        return Ok(cur);
                    }
                }
                prev = Some(cur);
            }
            let p = prev.unwrap();
            return Err(QuadratureError::DivergentIntegral {
                previous: p.mean,
                last: p.mean,
            });
        }
        Ok(reduce_once(&ray, &set.kind, None))
    };
    let rows = ray_values(v, x, r, fine, panels)?;
    let red = reduce_rows(&rows, fine)?;
    let samples = fine.len() * panels * RADIAL_ORDER;
    // Kinks along a ray can make a nested halving agree by accident, so the
    // radial error also compares against a non-nested panel count.
    let radial_gap = |set: &DirectionSet| -> Result<f64, QuadratureError> {
        let mut gap = 0.0f64;
        for p in [(panels / 2).max(1), (panels - 1).max(1)] {
            let rows = ray_values(v, x, r, set, p)?;
            gap = gap.max((reduce_rows(&rows, set)?.mean - red.mean).abs());
        }
        Ok(gap)
    };
    match &fine.kind {
        DirectionKind::Orbits { seed, .. } => {
            let mut est = mc_estimate(red, samples, *seed);
            est.error_bound += radial_gap(fine)?;
            Ok(est)
        }
        DirectionKind::Weighted(_) => {
            let err = match coarse {
                Some(c) => {
                    let crow = ray_values(v, x, r, c, (panels / 2).max(1))?;
                    (reduce_rows(&crow, c)?.mean - red.mean).abs()
                }
                None => radial_gap(fine)?,
            };
            Ok(MeanEstimate {
                value: red.mean,
                error_bound: err + red.spread,
                method: Method::DeterministicGrid,
                samples,
                seed: None,
            })
        }
    }
}

/// Mean of `v` over the closed ball `B(x, r)` with respect to Lebesgue measure,
/// by a radial composite Gauss rule along the directions of the sphere rule.
pub fn ball_mean(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    check_center(v, x, r)?;
    if !v.domain().contains_ball(x, r) {
        return Err(QuadratureError::DomainViolation {
            what: "ball",
            center: x.to_vec(),
            radius: r,
        });
    }
    let m = v.dim();
    let (panels, dir_scheme) = if scheme.kind == SchemeKind::RadialComposite {
        scheme.validate(m)?;
        ((scheme.resolution / RADIAL_ORDER).max(2), scheme.direction_default(m))
    } else {
        (RADIAL_PANELS, *scheme)
    };
    let (fine, coarse) = if dir_scheme.kind == SchemeKind::MonteCarloSphere && m.get() > 1 {
        // Spend the sample budget across the radial nodes.
        dir_scheme.validate(m)?;
        let orbit = DirectionSet::orbit_size(m.get());
        let n_orbits = (dir_scheme.resolution / (orbit * RADIAL_ORDER * 2)).max(8);
        (
            DirectionSet::monte_carlo(m.get(), n_orbits, dir_scheme.seed.unwrap_or(DEFAULT_SEED)),
            None,
        )
    } else {
        DirectionSet::for_scheme(m, &dir_scheme)?
    };
    ball_mean_with_sets(v, x, r, &fine, coarse.as_ref(), panels)
}

pub fn ball_mean_default(v: &ScalarField, x: &[f64], r: f64) -> Result<MeanEstimate, QuadratureError> {
    ball_mean(v, x, r, &QuadratureScheme::default_for(v.dim()))
}

const IDENTITY_ORDER: usize = 6;
const IDENTITY_PANELS: usize = 12;

/// Ball mean through `B_v(x, r) = (m / r^m) int_0^r S_v(x, t) t^{m-1} dt`,
/// with sphere means from `scheme` at every radial node.
pub fn ball_from_sphere_identity_with(
    v: &ScalarField,
    x: &[f64],
    r: f64,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    check_center(v, x, r)?;
    if !v.domain().contains_ball(x, r) {
        return Err(QuadratureError::DomainViolation {
            what: "ball",
            center: x.to_vec(),
            radius: r,
        });
    }
    let m = v.dim().get() as i32;
    let integrate = |panels: usize| -> Result<(f64, f64, usize), QuadratureError> {
        let (ts, ws) = composite_gauss(0.0, r, panels, IDENTITY_ORDER);
        let mut acc = 0.0;
        let mut err = 0.0;
        let mut samples = 0;
        for (t, w) in ts.iter().zip(&ws) {
            let s = sphere_mean(v, x, *t, scheme)?;
            let weight = w * m as f64 * t.powi(m - 1) / r.powi(m);
            acc += weight * s.value;
            err += weight * s.error_bound;
            samples += s.samples;
        }
        Ok((acc, err, samples))
    };
    let (value, err, samples) = integrate(IDENTITY_PANELS)?;
    let mut gap = 0.0f64;
    for p in [IDENTITY_PANELS / 2, IDENTITY_PANELS - 1] {
        gap = gap.max((integrate(p)?.0 - value).abs());
    }
    let monte_carlo = v.dim().get() > 1 && scheme.kind == SchemeKind::MonteCarloSphere;
    Ok(MeanEstimate {
        value,
        error_bound: err + gap,
        method: if monte_carlo {
            Method::MonteCarlo
        } else {
            Method::DeterministicGrid
        },
        samples,
        seed: if monte_carlo { scheme.seed } else { None },
    })
}

pub fn ball_from_sphere_identity(v: &ScalarField, x: &[f64], r: f64) -> Result<MeanEstimate, QuadratureError> {
    ball_from_sphere_identity_with(v, x, r, &QuadratureScheme::default_for(v.dim()))
}

/// Orthonormal basis of the complement of the unit vector `a`.
fn complement_basis(a: &[f64]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()));
    for &k in &order {
        if basis.len() == m - 1 {
            break;
        }
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let p = dot(&e, a);
        for (ei, ai) in e.iter_mut().zip(a) {
            *ei -= p * ai;
        }
        for b in &basis {
            let p = dot(&e, b);
            for (ei, bi) in e.iter_mut().zip(b) {
                *ei -= p * bi;
            }
        }
        let n = norm(&e);
        if n > 1e-8 {
            basis.push(e.into_iter().map(|c| c / n).collect());
        }
    }
    basis
}

type PointFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

/// `int_cap f dsigma` for one cap, `f` evaluated at ambient points.
fn integrate_cap(
    cap: &SphericalCap,
    f: &PointFn<'_>,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    let m = cap.dim();
    let sphere = cap.sphere();
    let (c, r) = (sphere.center(), sphere.radius());
    let theta = cap.half_angle();
    if theta <= 0.0 {
        return Ok(MeanEstimate::exact(0.0, 0));
    }
    let check = |val: f64, p: &[f64]| -> Result<f64, QuadratureError> {
        if val.is_nan() || val == f64::INFINITY {
            Err(QuadratureError::InvalidValue {
                point: p.to_vec(),
                value: val,
            })
        } else {
            Ok(val)
        }
    };
    match m.get() {
        1 => {
            let mut acc = 0.0;
            let mut n = 0;
            for s in [1.0, -1.0] {
                let p = [c[0] + s * r];
                if cap.contains_direction(&[s]) {
                    acc += check(f(&p), &p)?;
                    n += 1;
                }
            }
            Ok(MeanEstimate::exact(acc, n))
        }
        2 => {
            let (start, end) = arc_of(cap).expect("nonempty cap");
            arc_integral(c, r, start, end, f, scheme.resolution.max(16))
        }
        3 if scheme.kind != SchemeKind::MonteCarloSphere => {
            let basis = complement_basis(cap.axis());
            let a = cap.axis();
            let rule = |n: usize| -> Result<(f64, f64, usize), QuadratureError> {
                let (us, uw) = composite_gauss(theta.cos(), 1.0, 1, n);
                let nphi = 2 * n;
                let count = us.len() * nphi;
                let vals = evaluate_points(count, |k| {
                    let (i, j) = (k / nphi, k % nphi);
                    let u = us[i];
                    let s = (1.0 - u * u).max(0.0).sqrt();
                    let phi = 2.0 * PI * (j as f64 + PHASE) / nphi as f64;
                    let p: Vec<f64> = (0..3)
                        .map(|d| c[d] + r * (u * a[d] + s * (phi.cos() * basis[0][d] + phi.sin() * basis[1][d])))
                        .collect();
                    let val = f(&p);
                    let bad = val.is_nan() || val == f64::INFINITY;
                    (val, bad.then_some(p))
                })?;
                let weights: Vec<f64> = (0..count)
                    .map(|k| uw[k / nphi] * 2.0 * PI / nphi as f64 * r * r)
                    .collect();
                let red = reduce_stabilized(&vals, &DirectionKind::Weighted(weights))?;
                Ok((red.mean, red.spread, count))
            };
            let n = scheme.resolution.max(8);
            let (value, spread, count) = rule(n)?;
            let (coarse, _, _) = rule((n / 2).max(4))?;
            Ok(MeanEstimate {
                value,
                error_bound: (value - coarse).abs() + spread,
                method: Method::DeterministicGrid,
                samples: count,
                seed: None,
            })
        }
        mm => {
            let seed = scheme.seed.unwrap_or(DEFAULT_SEED);
            let samples = scheme.resolution.max(64);
            let basis = complement_basis(cap.axis());
            let a = cap.axis().to_vec();
            let smax = if theta >= PI / 2.0 { 1.0 } else { theta.sin() };
            let chunks = samples.div_ceil(MC_CHUNK * 16);
            let per_chunk: Vec<Vec<Vec<f64>>> = (0..chunks)
                .into_par_iter()
                .map(|ch| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xcafe_f00d);
                    rng.set_stream(ch as u64);
                    let count = (MC_CHUNK * 16).min(samples - ch * MC_CHUNK * 16);
                    let mut pts = Vec::with_capacity(count);
                    while pts.len() < count {
                        let t = rng.random_range(0.0..theta);
                        let accept = (t.sin() / smax).powi(mm as i32 - 2);
                        if rng.random::<f64>() > accept {
                            continue;
                        }
                        let w = gaussian_direction(&mut rng, mm - 1);
                        let p: Vec<f64> = (0..mm)
                            .map(|d| {
                                let side: f64 = basis.iter().zip(&w).map(|(b, wi)| wi * b[d]).sum();
                                c[d] + r * (t.cos() * a[d] + t.sin() * side)
                            })
                            .collect();
                        pts.push(p);
                    }
                    pts
                })
                .collect();
            let pts: Vec<Vec<f64>> = per_chunk.into_iter().flatten().collect();
            let vals = evaluate_points(pts.len(), |k| {
                let val = f(&pts[k]);
                let bad = val.is_nan() || val == f64::INFINITY;
                (val, bad.then(|| pts[k].clone()))
            })?;
            let red = reduce_stabilized(&vals, &DirectionKind::Orbits { orbit: 1, seed })?;
            let measure = cap.measure();
            Ok(mc_estimate(red, vals.len(), seed).scaled(measure))
        }
    }
}

/// `r int_{start}^{end} f(c + r(cos t, sin t)) dt` by composite Gauss–Legendre.
fn arc_integral(
    c: &[f64],
    r: f64,
    start: f64,
    end: f64,
    f: &PointFn<'_>,
    nodes: usize,
) -> Result<MeanEstimate, QuadratureError> {
    let rule = |panels: usize| -> Result<(f64, f64, usize), QuadratureError> {
        let (ts, ws) = composite_gauss(start, end, panels, RADIAL_ORDER);
        let vals = evaluate_points(ts.len(), |k| {
            let p = [c[0] + r * ts[k].cos(), c[1] + r * ts[k].sin()];
            let val = f(&p);
            let bad = val.is_nan() || val == f64::INFINITY;
            (val, bad.then(|| p.to_vec()))
        })?;
        let weights: Vec<f64> = ws.iter().map(|w| w * r).collect();
        let red = reduce_stabilized(&vals, &DirectionKind::Weighted(weights))?;
        Ok((red.mean, red.spread, ts.len()))
    };
    let panels = (nodes / RADIAL_ORDER).max(2);
    let (value, spread, count) = rule(panels)?;
    let (coarse, _, _) = rule((panels / 2).max(1))?;
    Ok(MeanEstimate {
        value,
        error_bound: (value - coarse).abs() + spread,
        method: Method::DeterministicGrid,
        samples: count,
        seed: None,
    })
}

fn check_cap_in_domain(v: &ScalarField, cap: &SphericalCap) -> Result<(), QuadratureError> {
    if cap.dim() != v.dim() {
        return Err(QuadratureError::DimensionMismatch {
            expected: v.dim().get(),
            got: cap.dim().get(),
        });
    }
    let s = cap.sphere();
    if !v.domain().contains_sphere(s.center(), s.radius()) {
        return Err(QuadratureError::DomainViolation {
            what: "cap sphere",
            center: s.center().to_vec(),
            radius: s.radius(),
        });
    }
    Ok(())
}

/// Unnormalized integral `int_cap v dsigma_r`.
///
/// `m = 2` uses a composite arc rule, `m = 3` a product Gauss rule on the cap
/// (unless a Monte Carlo scheme is given), `m >= 4` Monte Carlo with the polar
/// angle drawn by rejection against `sin^{m-2}`.
pub fn cap_integral(
    v: &ScalarField,
    cap: &SphericalCap,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    check_cap_in_domain(v, cap)?;
    if cap.half_angle() >= PI {
        let s = cap.sphere();
        let mean = sphere_mean(v, s.center(), s.radius(), scheme)?;
        return Ok(mean.scaled(s.area()));
    }
    integrate_cap(cap, &|p: &[f64]| v.eval(p), scheme)
}

fn same_sphere(caps: &[SphericalCap]) -> Result<(), QuadratureError> {
    if let Some(first) = caps.first() {
        for c in &caps[1..] {
            if c.sphere() != first.sphere() {
                return Err(QuadratureError::InvalidScheme(
                    "caps of a union must lie on the same sphere".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Drops empty caps and caps contained in another cap of the list.
fn maximal_caps(caps: &[SphericalCap]) -> Vec<SphericalCap> {
    let live: Vec<&SphericalCap> = caps.iter().filter(|c| c.half_angle() > 0.0).collect();
    let mut keep = Vec::new();
    'outer: for (i, a) in live.iter().enumerate() {
        for (j, b) in live.iter().enumerate() {
            if i == j {
                continue;
            }
            match cap_relation(a, b) {
                CapRelation::FirstInsideSecond if !(cap_relation(b, a) == CapRelation::FirstInsideSecond && i < j) => {
                    continue 'outer
                }
                _ => {}
            }
        }
        keep.push((*a).clone());
    }
    keep
}

/// Surface measure of a union of caps on one sphere, with an error bound.
///
/// Exact for `m <= 2` and for pairwise disjoint (after removing nested caps)
/// families; otherwise integrates the reciprocal multiplicity over each cap.
pub fn union_measure(caps: &[SphericalCap], scheme: &QuadratureScheme) -> Result<MeanEstimate, QuadratureError> {
    same_sphere(caps)?;
    let Some(first) = caps.first() else {
        return Ok(MeanEstimate::exact(0.0, 0));
    };
    let r = first.sphere().radius();
    match first.dim().get() {
        1 => {
            let count = [1.0, -1.0]
                .iter()
                .filter(|s| caps.iter().any(|c| c.contains_direction(&[**s])))
                .count();
            Ok(MeanEstimate::exact(count as f64, 2))
        }
        2 => Ok(MeanEstimate::exact(geometry::arc_union_angle(caps) * r, caps.len())),
        _ => {
            let maximal = maximal_caps(caps);
            let disjoint = pairwise_disjoint(&maximal);
            if disjoint {
                let total = maximal.iter().map(|c| c.measure()).sum();
                return Ok(MeanEstimate::exact(total, maximal.len()));
            }
            multiplicity_weighted(&maximal, &|_| 1.0, scheme)
        }
    }
}

fn pairwise_disjoint(caps: &[SphericalCap]) -> bool {
    for (i, a) in caps.iter().enumerate() {
        for b in &caps[i + 1..] {
            if cap_relation(a, b) != CapRelation::Disjoint {
                return false;
            }
        }
    }
    true
}

fn multiplicity_weighted(
    caps: &[SphericalCap],
    f: &PointFn<'_>,
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    let mut total = MeanEstimate::exact(0.0, 0);
    for cap in caps {
        let weighted = |p: &[f64]| {
            let n = caps.iter().filter(|c| c.contains_point(p)).count().max(1);
            let val = f(p);
            if val == f64::NEG_INFINITY {
                val
            } else {
                val / n as f64
            }
        };
        let est = integrate_cap(cap, &weighted, scheme)?;
        total = MeanEstimate {
            value: total.value + est.value,
            error_bound: total.error_bound + est.error_bound,
            method: est.method,
            samples: total.samples + est.samples,
            seed: est.seed.or(total.seed),
        };
    }
    Ok(total)
}

/// `int_E v dsigma_r` for a union `E` of caps on one sphere.
pub fn union_integral(
    v: &ScalarField,
    caps: &[SphericalCap],
    scheme: &QuadratureScheme,
) -> Result<MeanEstimate, QuadratureError> {
    same_sphere(caps)?;
    let Some(first) = caps.first() else {
        return Ok(MeanEstimate::exact(0.0, 0));
    };
    check_cap_in_domain(v, first)?;
    let f = |p: &[f64]| v.eval(p);
    match first.dim().get() {
        1 => {
            let s = first.sphere();
            let mut acc = 0.0;
            let mut n = 0;
            for sign in [1.0, -1.0] {
                if caps.iter().any(|c| c.contains_direction(&[sign])) {
                    let p = [s.center()[0] + sign * s.radius()];
                    let val = v.eval(&p);
                    if val.is_nan() || val == f64::INFINITY {
                        return Err(QuadratureError::InvalidValue {
                            point: p.to_vec(),
                            value: val,
                        });
                    }
                    acc += val;
                    n += 1;
                }
            }
            Ok(MeanEstimate::exact(acc, n))
        }
        2 => {
            let maximal = maximal_caps(caps);
            if maximal.iter().any(|c| c.half_angle() >= PI) {
                return cap_integral(v, &maximal[0], scheme);
            }
            // merge arcs, then integrate each merged arc
            let mut arcs: Vec<(f64, f64)> = maximal.iter().filter_map(arc_of).collect();
            arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (s, e) in arcs {
                if let Some(last) = merged.last_mut() {
                    if s <= last.1 {
                        last.1 = last.1.max(e);
                        continue;
                    }
                }
                merged.push((s, e));
            }
            // wrap-around overlap between the last and the first arc
            if merged.len() > 1 {
                let (fs, fe) = merged[0];
                let last = merged.last_mut().unwrap();
                if last.1 >= fs + 2.0 * PI {
                    last.1 = last.1.max(fe + 2.0 * PI);
                    merged.remove(0);
                }
            }
            let s = first.sphere();
            let mut total = MeanEstimate::exact(0.0, 0);
            for (a, b) in merged {
                let b = b.min(a + 2.0 * PI);
                let est = arc_integral(s.center(), s.radius(), a, b, &f, scheme.resolution.max(16))?;
                total.value += est.value;
                total.error_bound += est.error_bound;
                total.samples += est.samples;
            }
            Ok(total)
        }
        _ => {
            let maximal = maximal_caps(caps);
            if pairwise_disjoint(&maximal) {
                let mut total = MeanEstimate::exact(0.0, 0);
                for cap in &maximal {
                    let est = cap_integral(v, cap, scheme)?;
                    total = MeanEstimate {
                        value: total.value + est.value,
                        error_bound: total.error_bound + est.error_bound,
                        method: est.method,
                        samples: total.samples + est.samples,
                        seed: est.seed.or(total.seed),
                    };
                }
                Ok(total)
            } else {
                multiplicity_weighted(&maximal, &f, scheme)
            }
        }
    }
}

/// Quasi-uniform unit directions used for suprema and off-cap probing:
/// uniform angles for `m = 2`, a Fibonacci lattice for `m = 3`, seeded random
/// directions plus the coordinate poles for `m >= 4`.
pub fn sphere_probe_directions(m: Dim, resolution: usize) -> Vec<Vec<f64>> {
    let n = resolution.max(1);
    match m.get() {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    let s = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * i as f64;
                    vec![s * a.cos(), s * a.sin(), z]
                })
                .collect()
        }
        mm => {
            let mut out = Vec::with_capacity(n + 2 * mm);
            for i in 0..mm {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; mm];
                    e[i] = s;
                    out.push(e);
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x5_u64.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mm as u64);
            for _ in 0..n {
                out.push(gaussian_direction(&mut rng, mm));
            }
            out
        }
    }
}

/// Maximum of `v` over the probe set on `S(x, r)`; a lower bound of the true
/// supremum. Returns `-inf` only when every probe is `-inf`.
pub fn sphere_sup(v: &ScalarField, x: &[f64], r: f64, resolution: usize) -> Result<f64, QuadratureError> {
    check_center(v, x, r)?;
    if !v.domain().contains_sphere(x, r) {
        return Err(QuadratureError::DomainViolation {
            what: "sphere",
            center: x.to_vec(),
            radius: r,
        });
    }
    let dirs = sphere_probe_directions(v.dim(), resolution);
    let vals = evaluate_points(dirs.len(), |i| {
        let p: Vec<f64> = x.iter().zip(&dirs[i]).map(|(c, d)| c + r * d).collect();
        let val = v.eval(&p);
        let bad = val.is_nan() || val == f64::INFINITY;
        (val, bad.then_some(p))
    })?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Outcome of a sampled sub-mean-value check.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmeanCheck {
    pub probes: usize,
    /// Largest `v(x) - S_v(x, rho) - error` over the probes (`<= tol` passes).
    pub worst_excess: f64,
    pub worst_center: Vec<f64>,
    pub passed: bool,
}

/// Spot-checks `S_v(x, rho) >= v(x) - tol` on `count` random small spheres
/// with centers drawn uniformly from the cube `[-extent, extent]^m` (centers
/// whose sphere leaves the domain are redrawn).
pub fn spot_check_submean(
    v: &ScalarField,
    count: usize,
    extent: f64,
    rho: f64,
    tol: f64,
    seed: u64,
    scheme: &QuadratureScheme,
) -> Result<SubmeanCheck, QuadratureError> {
    let m = v.dim().get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_center = vec![0.0; m];
    let mut done = 0;
    let mut attempts = 0;
    while done < count && attempts < 100 * count {
        attempts += 1;
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-extent..extent)).collect();
        if !v.domain().contains_sphere(&x, rho) || !v.domain().contains(&x) {
            continue;
        }
        let centre = v.eval(&x);
        let mean = sphere_mean(v, &x, rho, scheme)?;
        let excess = if centre == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            centre - mean.value - mean.error_bound
        };
        if excess > worst {
            worst = excess;
            worst_center = x;
        }
        done += 1;
    }
    Ok(SubmeanCheck {
        probes: done,
        worst_excess: worst,
        worst_center,
        passed: worst <= tol,
    })
}

/// Sphere area helper re-exported for callers that normalize cap integrals.
pub fn normalizer(m: Dim, r: f64) -> f64 {
    sphere_area(m, r)
}
