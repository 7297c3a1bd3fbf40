//! Dimensions, balls, spheres, spherical caps and the measure constants
//! `b_m` (unit ball volume) and `s_{m-1}` (unit sphere area).
//!
//! In dimension one the "sphere" `S_0(x, r)` is the two-point set
//! `{x - r, x + r}` with counting measure, so its total mass is 2 and sphere
//! means are two-point averages.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("radius must be {expected}, got {got}")]
    BadRadius { expected: &'static str, got: f64 },
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cap axis must be a unit vector (|axis| = {norm})")]
    AxisNotUnit { norm: f64 },
    #[error("cap half-angle {0} outside [0, pi]")]
    BadHalfAngle(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Tolerance on `|axis| = 1` for caps and complex directions.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Dimension `m` of the ambient space `R^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dim(usize);

impl Dim {
    pub fn new(m: usize) -> Result<Self, GeometryError> {
        if m == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(Dim(m))
    }

    pub fn get(self) -> usize {
        self.0
    }

    fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_point(m: Dim, p: &[f64]) -> Result<(), GeometryError> {
    if p.len() != m.get() {
        return Err(GeometryError::DimensionMismatch {
            expected: m.get(),
            got: p.len(),
        });
    }
    if p.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    Ok(())
}

/// Closed ball `B(center, radius)`, radius may be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    center: Vec<f64>,
    radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        check_point(Dim(center.len()), &center)?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(GeometryError::BadRadius {
                expected: "finite and >= 0",
                got: radius,
            });
        }
        Ok(BallSpec { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> Dim {
        Dim(self.center.len())
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius)
    }
}

/// Sphere `S(center, radius)` with strictly positive radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpec {
    center: Vec<f64>,
    radius: f64,
}

impl SphereSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, GeometryError> {
        if center.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        check_point(Dim(center.len()), &center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::BadRadius {
                expected: "finite and > 0",
                got: radius,
            });
        }
        Ok(SphereSpec { center, radius })
    }

    /// Sphere of radius `radius` centered at the origin of `R^m`.
    pub fn centered(m: Dim, radius: f64) -> Result<Self, GeometryError> {
        Self::new(vec![0.0; m.get()], radius)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> Dim {
        Dim(self.center.len())
    }

    pub fn area(&self) -> f64 {
        sphere_area(self.dim(), self.radius)
    }

    pub fn is_centered_at_origin(&self) -> bool {
        self.center.iter().all(|&c| c == 0.0)
    }
}

/// Closed geodesic cap `{ y in S : angle(y - c, axis) <= half_angle }`.
///
/// A cap with `half_angle == 0` is treated as empty (measure zero, no member
/// points); `half_angle == pi` is the whole sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCap {
    sphere: SphereSpec,
    axis: Vec<f64>,
    half_angle: f64,
}

impl SphericalCap {
    pub fn new(sphere: SphereSpec, axis: Vec<f64>, half_angle: f64) -> Result<Self, GeometryError> {
        check_point(sphere.dim(), &axis)?;
        let n = norm(&axis);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeometryError::AxisNotUnit { norm: n });
        }
        if !(0.0..=PI).contains(&half_angle) {
            return Err(GeometryError::BadHalfAngle(half_angle));
        }
        Ok(SphericalCap {
            sphere,
            axis,
            half_angle,
        })
    }

    pub fn sphere(&self) -> &SphereSpec {
        &self.sphere
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn dim(&self) -> Dim {
        self.sphere.dim()
    }

    pub fn measure(&self) -> f64 {
        cap_surface_measure(self)
    }

    /// Angle between `direction` (need not be normalized) and the cap axis.
    pub fn angle_to(&self, direction: &[f64]) -> f64 {
        let n = norm(direction);
        if n == 0.0 {
            return 0.0;
        }
        (dot(direction, &self.axis) / n).clamp(-1.0, 1.0).acos()
    }

    /// Membership test for a unit direction `u` (point `center + r u`).
    pub fn contains_direction(&self, u: &[f64]) -> bool {
        if self.half_angle <= 0.0 {
            return false;
        }
        if self.half_angle >= PI {
            return true;
        }
        // cos comparison avoids acos for the common case
        dot(u, &self.axis) >= self.half_angle.cos() - 1e-15
    }

    /// Membership test for a point of the ambient space lying on the sphere.
    pub fn contains_point(&self, p: &[f64]) -> bool {
        let rel: Vec<f64> = p.iter().zip(self.sphere.center()).map(|(a, c)| a - c).collect();
        let n = norm(&rel);
        if n == 0.0 {
            return false;
        }
        let u: Vec<f64> = rel.iter().map(|c| c / n).collect();
        self.contains_direction(&u)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, 9 terms), with the
/// reflection formula below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Volume `b_m r^m` of the ball of radius `r` in `R^m`.
pub fn ball_volume(m: Dim, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    let half = m.as_f64() / 2.0;
    PI.powf(half) / gamma(half + 1.0) * r.powi(m.get() as i32)
}

/// Surface measure `s_{m-1} r^{m-1}` of the sphere of radius `r`.
/// For `m = 1` this is the counting measure of `{-r, r}`, i.e. 2.
pub fn sphere_area(m: Dim, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    if m.get() == 1 {
        return 2.0;
    }
    let half = m.as_f64() / 2.0;
    2.0 * PI.powf(half) / gamma(half) * r.powi(m.get() as i32 - 1)
}

/// The constant `a_m` of the sharp chain `v(0) <= S_v(a_m R) <= B_v(R) <= S_v(R)`.
pub fn sharp_mean_constant(m: Dim) -> f64 {
    match m.get() {
        1 => 0.5,
        2 => (-0.5f64).exp(),
        k => {
            let k = k as f64;
            (k / 2.0).powf(-1.0 / (k - 2.0))
        }
    }
}

/// `int_0^theta sin^n(t) dt` by the standard reduction formula.
pub fn sin_power_integral(n: usize, theta: f64) -> f64 {
    match n {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let nf = n as f64;
            -theta.sin().powi(n as i32 - 1) * theta.cos() / nf + (nf - 1.0) / nf * sin_power_integral(n - 2, theta)
        }
    }
}

/// Surface measure of a cap: `s_{m-2} r^{m-1} int_0^theta sin^{m-2}`.
/// In dimension 2 this is the arc length `2 theta r`; in dimension 1 it
/// counts the points of `{c - r, c + r}` inside the cap.
pub fn cap_surface_measure(cap: &SphericalCap) -> f64 {
    let m = cap.dim().get();
    let r = cap.sphere().radius();
    let theta = cap.half_angle();
    match m {
        1 => {
            if theta <= 0.0 {
                0.0
            } else if theta >= PI {
                2.0
            } else {
                1.0
            }
        }
        2 => 2.0 * theta * r,
        _ => {
            if theta >= PI {
                return sphere_area(cap.dim(), r);
            }
            let lower = Dim(m - 1);
            sphere_area(lower, 1.0) * r.powi(m as i32 - 1) * sin_power_integral(m - 2, theta)
        }
    }
}

/// How two caps on the same sphere relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapRelation {
    /// Intersection has measure zero.
    Disjoint,
    /// The first cap lies inside the second.
    FirstInsideSecond,
    SecondInsideFirst,
    Overlapping,
}

pub fn cap_relation(a: &SphericalCap, b: &SphericalCap) -> CapRelation {
    if a.half_angle() <= 0.0 {
        return CapRelation::FirstInsideSecond;
    }
    if b.half_angle() <= 0.0 {
        return CapRelation::SecondInsideFirst;
    }
    let alpha = dot(a.axis(), b.axis()).clamp(-1.0, 1.0).acos();
    if alpha + a.half_angle() <= b.half_angle() {
        CapRelation::FirstInsideSecond
    } else if alpha + b.half_angle() <= a.half_angle() {
        CapRelation::SecondInsideFirst
    } else if alpha >= a.half_angle() + b.half_angle() {
        CapRelation::Disjoint
    } else {
        CapRelation::Overlapping
    }
}

/// Angular intervals `[start, end)` (start in `[0, 2pi)`, possibly `end > 2pi`)
/// occupied by a planar cap.
pub(crate) fn arc_of(cap: &SphericalCap) -> Option<(f64, f64)> {
    debug_assert_eq!(cap.dim().get(), 2);
    let theta = cap.half_angle();
    if theta <= 0.0 {
        return None;
    }
    let phi = cap.axis()[1].atan2(cap.axis()[0]);
    let start = (phi - theta).rem_euclid(2.0 * PI);
    Some((start, start + 2.0 * theta))
}

/// Total angle covered by a union of planar caps, in `[0, 2 pi]`.
pub fn arc_union_angle(caps: &[SphericalCap]) -> f64 {
    let two_pi = 2.0 * PI;
    let arcs: Vec<(f64, f64)> = caps
        .iter()
        .filter_map(|c| arc_of(c).map(|(s, _)| (s, 2.0 * c.half_angle())))
        .collect();
    // measured from the first start so that arc never wraps
    let origin = arcs.first().map_or(0.0, |a| a.0);
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for (s, width) in arcs {
        let s = if s == origin {
            0.0
        } else {
            (s - origin).rem_euclid(two_pi)
        };
        let e = s + width;
        if width >= two_pi {
            return two_pi;
        }
        if e > two_pi {
            pieces.push((s, two_pi));
            pieces.push((0.0, e - two_pi));
        } else {
            pieces.push((s, e));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (s, e) in pieces {
        match current {
            Some((cs, ce)) if s <= ce => current = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                current = Some((s, e));
            }
            None => current = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = current {
        total += ce - cs;
    }
    total.min(two_pi)
}
