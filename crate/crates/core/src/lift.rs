//! Points, lifts and the built-in Misiurewicz–Ziemian family.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::MapDefinition;
use crate::error::{Error, Result};
use crate::lattice::UnimodularMatrix;
use crate::sampling;

/// A vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// A point of the universal cover `R^2`.
pub type PlanePoint = Vec2;

/// An element of rotation-vector space.
pub type RotationVector = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Rotation by 90°: `(x, y) -> (-y, x)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Component-wise reduction into `[0, 1)^2`.
    pub fn mod_one(self) -> Vec2 {
        fn wrap(v: f64) -> f64 {
            let r = v - v.floor();
            if r >= 1.0 {
                0.0
            } else {
                r
            }
        }
        Vec2::new(wrap(self.x), wrap(self.y))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Evaluates `F_{α,β}(x, y) = (x + β sin(2π(y + α sin(2πx))), y + α sin(2πx))`.
///
/// The vertical shear is applied first, then the horizontal one.
pub fn eval_mz(alpha: f64, beta: f64, z: PlanePoint) -> PlanePoint {
    let y = z.y + alpha * (TAU * z.x).sin();
    let x = z.x + beta * (TAU * y).sin();
    Vec2::new(x, y)
}

/// Closed-form inverse of [`eval_mz`]: undo the horizontal shear, then the vertical one.
pub fn eval_mz_inverse(alpha: f64, beta: f64, z: PlanePoint) -> PlanePoint {
    let x = z.x - beta * (TAU * z.y).sin();
    let y = z.y - alpha * (TAU * x).sin();
    Vec2::new(x, y)
}

/// A lift of a torus homeomorphism homotopic to the identity.
#[derive(Debug, Clone)]
pub enum LiftMap {
    /// The Misiurewicz–Ziemian family `F_{α,β}`.
    Mz { alpha: f64, beta: f64 },
    /// Rigid translation `z -> z + t`.
    Translation(Vec2),
    /// A user-defined lift parsed from the expression language.
    Dsl(Arc<MapDefinition>),
    /// `M^{-1} ∘ F ∘ M`.
    Conjugated {
        inner: Box<LiftMap>,
        matrix: UnimodularMatrix,
    },
}

impl LiftMap {
    pub fn mz(alpha: f64, beta: f64) -> Self {
        LiftMap::Mz { alpha, beta }
    }

    pub fn identity() -> Self {
        LiftMap::Translation(Vec2::ZERO)
    }

    pub fn translation(x: f64, y: f64) -> Self {
        LiftMap::Translation(Vec2::new(x, y))
    }

    /// Wraps a parsed definition after checking the lift invariants
    /// (commutation with integer translations and, if given, the inverse).
    pub fn from_definition(def: MapDefinition) -> Result<Self> {
        def.validate()?;
        Ok(LiftMap::Dsl(Arc::new(def)))
    }

    /// Wraps a parsed definition without validating it.
    pub fn from_definition_unchecked(def: MapDefinition) -> Self {
        LiftMap::Dsl(Arc::new(def))
    }

    /// Evaluates the lift. DSL evaluation failures yield a non-finite point.
    pub fn eval(&self, z: PlanePoint) -> PlanePoint {
        match self {
            LiftMap::Mz { alpha, beta } => eval_mz(*alpha, *beta, z),
            LiftMap::Translation(t) => z + *t,
            LiftMap::Dsl(def) => def.eval(z).unwrap_or(Vec2::new(f64::NAN, f64::NAN)),
            LiftMap::Conjugated { inner, matrix } => {
                matrix.apply_inverse(inner.eval(matrix.apply(z)))
            }
        }
    }

    /// Evaluates the inverse lift, if one is available.
    pub fn eval_inverse(&self, z: PlanePoint) -> Option<PlanePoint> {
        match self {
            LiftMap::Mz { alpha, beta } => Some(eval_mz_inverse(*alpha, *beta, z)),
            LiftMap::Translation(t) => Some(z - *t),
            LiftMap::Dsl(def) => def
                .eval_inverse(z)
                .map(|r| r.unwrap_or(Vec2::new(f64::NAN, f64::NAN))),
            LiftMap::Conjugated { inner, matrix } => inner
                .eval_inverse(matrix.apply(z))
                .map(|w| matrix.apply_inverse(w)),
        }
    }

    pub fn has_inverse(&self) -> bool {
        match self {
            LiftMap::Mz { .. } | LiftMap::Translation(_) => true,
            LiftMap::Dsl(def) => def.has_inverse(),
            LiftMap::Conjugated { inner, .. } => inner.has_inverse(),
        }
    }

    /// Splits nested conjugations into a base lift and one combined matrix `C`,
    /// so that `self = C^{-1} ∘ base ∘ C`.
    pub(crate) fn split_conjugation(&self) -> (&LiftMap, Option<UnimodularMatrix>) {
        match self {
            LiftMap::Conjugated { inner, matrix } => {
                let (base, outer) = inner.split_conjugation();
                let combined = match outer {
                    Some(c) => c.mul(matrix),
                    None => *matrix,
                };
                (base, Some(combined))
            }
            other => (other, None),
        }
    }
}

impl fmt::Display for LiftMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftMap::Mz { alpha, beta } => write!(f, "mz(alpha={alpha:?}, beta={beta:?})"),
            LiftMap::Translation(t) => write!(f, "translation({:?}, {:?})", t.x, t.y),
            LiftMap::Dsl(def) => write!(f, "dsl({def})"),
            LiftMap::Conjugated { inner, matrix } => write!(f, "conjugated({inner}, {matrix})"),
        }
    }
}

/// Largest `‖F⁻¹(F(z)) − z‖` over seeded samples `z ∈ [0,1)^2`, or `None`
/// when the map has no inverse. Non-finite round trips count as infinite error.
pub fn inverse_check(map: &LiftMap, samples: usize, seed: u64) -> Option<f64> {
    if !map.has_inverse() {
        return None;
    }
    let mut rng = crate::sampling::task_rng(seed, 7);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
        let err = map
            .eval_inverse(map.eval(z))
            .map_or(f64::INFINITY, |back| (back - z).norm());
        if !err.is_finite() {
            return Some(f64::INFINITY);
        }
        worst = worst.max(err);
    }
    Some(worst)
}

/// Largest deviation `‖F(z + w) − F(z) − w‖` over seeded samples `z ∈ [0,1)^2`
/// and `w ∈ {−1, 0, 1}^2`. Non-finite evaluations count as infinite error.
pub fn translate_commutation_check(map: &LiftMap, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid(
            "commutation check needs at least one sample",
        ));
    }
    let mut rng = sampling::task_rng(seed, 0);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
        let base = map.eval(z);
        // compared as F(z + w) against F(z) + w so exact lifts give exactly 0
        for m in -1..=1 {
            for k in -1..=1 {
                let w = Vec2::new(m as f64, k as f64);
                let err = (map.eval(z + w) - (base + w)).norm();
                if !err.is_finite() {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

/// An open disk on the torus, given by a center (read mod 1) and a radius in `(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: PlanePoint,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: PlanePoint, radius: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("disk center must be finite"));
        }
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::invalid(format!(
                "disk radius {radius} outside (0, 1/2)"
            )));
        }
        Ok(Self { center, radius })
    }

    /// The lifted copy of the disk whose center lies in `[0,1)^2`.
    pub fn lifted(&self) -> Disk {
        Disk {
            center: self.center.mod_one(),
            radius: self.radius,
        }
    }

    /// Shrinks or grows the radius around the same center.
    pub fn with_radius(&self, radius: f64) -> Result<Disk> {
        Disk::new(self.center, radius)
    }
}

/// Direction data for lines `L_{λ,v} = λv + {v}^⊥`, cones `C_v[a,b]` and strips `S_v[a,b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalFrame {
    pub v: Vec2,
    pub v_perp: Vec2,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
}

impl DirectionalFrame {
    /// Builds a frame from any nonzero direction; the direction is normalized.
    pub fn new(v: Vec2, lambda: f64, a: f64, b: f64) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("frame direction must be nonzero and finite"));
        }
        if a > b {
            return Err(Error::invalid(format!("cone bounds a={a} > b={b}")));
        }
        let v = v / n;
        Ok(Self {
            v,
            v_perp: v.perp(),
            lambda,
            a,
            b,
        })
    }

    /// Signed distance of `z` from the line `L_{λ,v}` along `v`.
    pub fn line_offset(&self, z: PlanePoint) -> f64 {
        z.dot(self.v) - self.lambda
    }

    pub fn on_line(&self, z: PlanePoint, tol: f64) -> bool {
        self.line_offset(z).abs() <= tol
    }

    /// `z ∈ S_v[a,b]`.
    pub fn in_strip(&self, z: PlanePoint) -> bool {
        let s = z.dot(self.v);
        self.a <= s && s <= self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALF: LiftMap = LiftMap::Mz {
        alpha: 0.5,
        beta: 0.5,
    };

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mz_exact_values() {
        assert_eq!(eval_mz(0.5, 0.5, Vec2::ZERO), Vec2::ZERO);
        assert!(close(
            eval_mz(0.5, 0.5, Vec2::new(0.25, 0.0)),
            Vec2::new(0.25, 0.5),
            1e-15
        ));
        assert!(close(
            eval_mz(0.5, 0.5, Vec2::new(0.25, 0.25)),
            Vec2::new(-0.25, 0.75),
            1e-15
        ));
    }

    #[test]
    fn mz_inverse_values() {
        assert!(close(
            eval_mz_inverse(0.5, 0.5, Vec2::new(0.25, 0.5)),
            Vec2::new(0.25, 0.0),
            1e-15
        ));
        assert_eq!(eval_mz_inverse(0.5, 0.5, Vec2::ZERO), Vec2::ZERO);
    }

    #[test]
    fn mz_inverse_round_trip_on_random_points() {
        let mut rng = sampling::task_rng(11, 0);
        for _ in 0..10_000 {
            let z = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let a = rng.random_range(-1.0..1.0);
            let b = rng.random_range(-1.0..1.0);
            assert!(close(eval_mz_inverse(a, b, eval_mz(a, b, z)), z, 1e-12));
            assert!(close(eval_mz(a, b, eval_mz_inverse(a, b, z)), z, 1e-12));
        }
    }

    #[test]
    fn mz_commutes_with_integer_translations() {
        let err = translate_commutation_check(&HALF, 1000, 3).unwrap();
        assert!(err <= 1e-12, "{err}");
        let mut rng = sampling::task_rng(12, 0);
        for _ in 0..1000 {
            let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
            let w = Vec2::new(
                rng.random_range(-5..=5) as f64,
                rng.random_range(-5..=5) as f64,
            );
            assert!(close(HALF.eval(z + w), HALF.eval(z) + w, 1e-12));
        }
    }

    #[test]
    fn mz_jacobian_determinant_is_one() {
        let h = 1e-6;
        let mut rng = sampling::task_rng(13, 0);
        for _ in 0..200 {
            let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
            let a = rng.random_range(-1.0..1.0);
            let b = rng.random_range(-1.0..1.0);
            let f = |p: Vec2| eval_mz(a, b, p);
            let dx = (f(z + Vec2::new(h, 0.0)) - f(z - Vec2::new(h, 0.0))) / (2.0 * h);
            let dy = (f(z + Vec2::new(0.0, h)) - f(z - Vec2::new(0.0, h))) / (2.0 * h);
            let det = dx.x * dy.y - dy.x * dx.y;
            assert!((det - 1.0).abs() <= 1e-6, "det {det}");
        }
    }

    #[test]
    fn identity_commutation_is_zero() {
        assert_eq!(
            translate_commutation_check(&LiftMap::identity(), 100, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(translate_commutation_check(&HALF, 0, 1).is_err());
    }

    #[test]
    fn disk_radius_bounds() {
        assert!(Disk::new(Vec2::ZERO, 0.0).is_err());
        assert!(Disk::new(Vec2::ZERO, 0.5).is_err());
        assert!(Disk::new(Vec2::ZERO, 0.49).is_ok());
        let d = Disk::new(Vec2::new(1.25, -0.75), 0.1).unwrap().lifted();
        assert_eq!(d.center, Vec2::new(0.25, 0.25));
    }

    #[test]
    fn frame_normalizes_and_rejects_bad_bounds() {
        let f = DirectionalFrame::new(Vec2::new(3.0, 4.0), 1.0, 0.0, 1.0).unwrap();
        assert!((f.v.norm() - 1.0).abs() < 1e-15);
        assert_eq!(f.v_perp, Vec2::new(-0.8, 0.6));
        assert!(DirectionalFrame::new(Vec2::ZERO, 1.0, 0.0, 1.0).is_err());
        assert!(DirectionalFrame::new(Vec2::new(1.0, 0.0), 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn mod_one_stays_in_unit_square() {
        let p = Vec2::new(-1e-18, 3.0).mod_one();
        assert!(p.x >= 0.0 && p.x < 1.0);
        assert_eq!(p.y, 0.0);
    }
}
