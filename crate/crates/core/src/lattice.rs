//! `SL(2,Z)` coordinate changes, unimodular completion and symmetry checks.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, ConvexPolygon};
use crate::lift::{DirectionalFrame, LiftMap, PlanePoint, Vec2};
use crate::sampling;

/// Integer 2×2 matrix with determinant one, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[[i64; 2]; 2]", into = "[[i64; 2]; 2]")]
pub struct UnimodularMatrix {
    rows: [[i64; 2]; 2],
}

impl UnimodularMatrix {
    pub const IDENTITY: UnimodularMatrix = UnimodularMatrix {
        rows: [[1, 0], [0, 1]],
    };

    pub fn new(rows: [[i64; 2]; 2]) -> Result<Self> {
        let det = det(rows);
        if det != 1 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(Self { rows })
    }

    /// Builds the matrix with the given columns.
    pub fn from_columns(c0: (i64, i64), c1: (i64, i64)) -> Result<Self> {
        Self::new([[c0.0, c1.0], [c0.1, c1.1]])
    }

    pub fn rows(&self) -> [[i64; 2]; 2] {
        self.rows
    }

    pub fn column(&self, j: usize) -> (i64, i64) {
        (self.rows[0][j], self.rows[1][j])
    }

    pub fn determinant(&self) -> i64 {
        det(self.rows)
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.rows;
        Self {
            rows: [[d, -b], [-c, a]],
        }
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = self.rows;
        Self {
            rows: [[a, c], [b, d]],
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let [[a, b], [c, d]] = self.rows;
        let [[e, f], [g, h]] = other.rows;
        Self {
            rows: [
                [a * e + b * g, a * f + b * h],
                [c * e + d * g, c * f + d * h],
            ],
        }
    }

    pub fn apply(&self, z: Vec2) -> Vec2 {
        let [[a, b], [c, d]] = self.rows;
        Vec2::new(
            a as f64 * z.x + b as f64 * z.y,
            c as f64 * z.x + d as f64 * z.y,
        )
    }

    /// `M^{-1} z`.
    pub fn apply_inverse(&self, z: Vec2) -> Vec2 {
        self.inverse().apply(z)
    }

    pub fn apply_transpose(&self, z: Vec2) -> Vec2 {
        self.transpose().apply(z)
    }
}

fn det(r: [[i64; 2]; 2]) -> i64 {
    r[0][0] * r[1][1] - r[0][1] * r[1][0]
}

impl TryFrom<[[i64; 2]; 2]> for UnimodularMatrix {
    type Error = Error;
    fn try_from(rows: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<UnimodularMatrix> for [[i64; 2]; 2] {
    fn from(m: UnimodularMatrix) -> Self {
        m.rows
    }
}

impl fmt::Display for UnimodularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.rows;
        write!(f, "{a},{b};{c},{d}")
    }
}

/// Parses `"a,b;c,d"` (rows separated by `;`).
impl FromStr for UnimodularMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("matrix '{s}' is not of the form a,b;c,d"));
        let rows: Vec<&str> = s.split(';').collect();
        if rows.len() != 2 {
            return Err(bad());
        }
        let mut out = [[0i64; 2]; 2];
        for (i, row) in rows.iter().enumerate() {
            let entries: Vec<&str> = row.split(',').collect();
            if entries.len() != 2 {
                return Err(bad());
            }
            for (j, e) in entries.iter().enumerate() {
                out[i][j] = e.trim().parse().map_err(|_| bad())?;
            }
        }
        Self::new(out)
    }
}

/// Extended Euclid: `(g, s, t)` with `a s + b t = g = gcd(a, b) ≥ 0`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Completes a primitive integer vector `w` to a unimodular matrix with first column `w`.
///
/// The second column `(r, s)` solves `w₁ s − w₂ r = 1`; among all solutions the
/// one with `0 ≤ s < |w₂|` is returned (`s = w₁` when `w₂ = 0`).
pub fn complete_to_unimodular(w: (i64, i64)) -> Result<UnimodularMatrix> {
    let (p, q) = w;
    let (g, s, t) = extended_gcd(p, q);
    if g != 1 {
        return Err(Error::NotCoprime(p, q));
    }
    // p s + q t = 1, so (r, s) = (-t, s) works; shift along w to normalize s
    let (r, s) = if q == 0 {
        (0, p)
    } else {
        let m = q.abs();
        let s_norm = s.rem_euclid(m);
        let k = (s_norm - s) / q;
        (-t + k * p, s_norm)
    };
    UnimodularMatrix::from_columns((p, q), (r, s))
}

/// `F̃ = M^{-1} ∘ F ∘ M`.
pub fn conjugate_lift(map: &LiftMap, matrix: UnimodularMatrix) -> LiftMap {
    LiftMap::Conjugated {
        inner: Box::new(map.clone()),
        matrix,
    }
}

/// Applies `M^{-1}` to every point.
pub fn transform_points(points: &[Vec2], matrix: &UnimodularMatrix) -> Vec<Vec2> {
    let inv = matrix.inverse();
    points.iter().map(|p| inv.apply(*p)).collect()
}

/// Applies `M^{-1}` to a polygon and restores counter-clockwise order.
pub fn transform_polygon(poly: &ConvexPolygon, matrix: &UnimodularMatrix) -> ConvexPolygon {
    convex_hull(&transform_points(poly.vertices(), matrix))
}

/// Result of moving `L_{λ,v}` through `M^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineTransform {
    /// Frame with unit direction `Mᵗv/‖Mᵗv‖` describing the image line.
    pub frame: DirectionalFrame,
    /// `Mᵗv` before normalization.
    pub raw_direction: Vec2,
    /// `λ‖v‖² / ‖Mᵗv‖²`, the offset paired with `raw_direction`.
    pub raw_lambda: f64,
}

/// Transforms the line `L_{λ,v}` of a frame to `M^{-1}(L_{λ,v}) = L_{λ̃,ṽ}` with
/// `ṽ = Mᵗv` and `λ̃ = λ‖v‖²/‖ṽ‖²`.
///
/// Cone bounds are carried over unchanged.
pub fn line_frame_transform(frame: &DirectionalFrame, matrix: &UnimodularMatrix) -> LineTransform {
    let raw_direction = matrix.apply_transpose(frame.v);
    let vt_norm_sq = raw_direction.norm_sq();
    let raw_lambda = frame.lambda * frame.v.norm_sq() / vt_norm_sq;
    // λ̃ṽ = (λ̃‖ṽ‖) ṽ/‖ṽ‖
    let frame = DirectionalFrame::new(
        raw_direction,
        raw_lambda * vt_norm_sq.sqrt(),
        frame.a,
        frame.b,
    )
    .expect("Mᵗ is invertible, so the direction stays nonzero");
    LineTransform {
        frame,
        raw_direction,
        raw_lambda,
    }
}

/// Affine torus maps `z -> Lz + t` with integer linear part of determinant ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineSymmetry {
    pub linear: [[i64; 2]; 2],
    pub translation: Vec2,
}

impl AffineSymmetry {
    /// `R(x, y) = (−y, x)`.
    pub const R: AffineSymmetry = AffineSymmetry {
        linear: [[0, -1], [1, 0]],
        translation: Vec2::ZERO,
    };
    /// `S(x, y) = (−x, −y)`.
    pub const S: AffineSymmetry = AffineSymmetry {
        linear: [[-1, 0], [0, -1]],
        translation: Vec2::ZERO,
    };
    /// `T(x, y) = (x + 1/2, −y + 1/2)`.
    pub const T: AffineSymmetry = AffineSymmetry {
        linear: [[1, 0], [0, -1]],
        translation: Vec2::new(0.5, 0.5),
    };

    pub fn new(linear: [[i64; 2]; 2], translation: Vec2) -> Result<Self> {
        let d = det(linear);
        if d.abs() != 1 {
            return Err(Error::invalid(format!(
                "symmetry linear part has determinant {d}, expected ±1"
            )));
        }
        if !translation.is_finite() {
            return Err(Error::invalid("symmetry translation must be finite"));
        }
        Ok(Self {
            linear,
            translation,
        })
    }

    pub fn apply(&self, z: Vec2) -> Vec2 {
        let [[a, b], [c, d]] = self.linear;
        Vec2::new(
            a as f64 * z.x + b as f64 * z.y,
            c as f64 * z.x + d as f64 * z.y,
        ) + self.translation
    }

    pub fn apply_inverse(&self, z: Vec2) -> Vec2 {
        let [[a, b], [c, d]] = self.linear;
        let det = (a * d - b * c) as f64;
        let w = z - self.translation;
        Vec2::new(
            (d as f64 * w.x - b as f64 * w.y) / det,
            (-(c as f64) * w.x + a as f64 * w.y) / det,
        )
    }
}

impl FromStr for AffineSymmetry {
    type Err = Error;
    /// `R`, `S`, `T`, or `"a,b;c,d"` / `"a,b;c,d;tx,ty"`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => return Ok(Self::R),
            "S" | "s" => return Ok(Self::S),
            "T" | "t" => return Ok(Self::T),
            _ => {}
        }
        let bad = || Error::invalid(format!("symmetry '{s}' is not R, S, T or a,b;c,d[;tx,ty]"));
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(bad());
        }
        let mut linear = [[0i64; 2]; 2];
        for (i, row) in parts[..2].iter().enumerate() {
            let e: Vec<&str> = row.split(',').collect();
            if e.len() != 2 {
                return Err(bad());
            }
            for j in 0..2 {
                linear[i][j] = e[j].trim().parse().map_err(|_| bad())?;
            }
        }
        let translation = if parts.len() == 3 {
            let e: Vec<&str> = parts[2].split(',').collect();
            if e.len() != 2 {
                return Err(bad());
            }
            Vec2::new(
                e[0].trim().parse().map_err(|_| bad())?,
                e[1].trim().parse().map_err(|_| bad())?,
            )
        } else {
            Vec2::ZERO
        };
        Self::new(linear, translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjugacyTarget {
    /// `sym^{-1} ∘ f ∘ sym = f`
    #[serde(rename = "self")]
    Itself,
    /// `sym^{-1} ∘ f ∘ sym = f^{-1}`
    Inverse,
}

impl FromStr for ConjugacyTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(Self::Itself),
            "inverse" => Ok(Self::Inverse),
            _ => Err(Error::invalid(format!(
                "target '{s}' must be 'self' or 'inverse'"
            ))),
        }
    }
}

/// Distance between two points of the torus: the minimum over the nine
/// integer translates nearest to `a − b`.
pub fn torus_distance(a: PlanePoint, b: PlanePoint) -> f64 {
    let d = a - b;
    let base = Vec2::new(d.x.round(), d.y.round());
    let mut best = f64::INFINITY;
    for m in -1..=1 {
        for k in -1..=1 {
            best = best.min((d - base - Vec2::new(m as f64, k as f64)).norm());
        }
    }
    best
}

/// Largest torus distance between `sym^{-1}(f(sym(z)))` and the target map at
/// `z`, over seeded samples `z ∈ [0,1)^2`.
pub fn check_conjugacy(
    map: &LiftMap,
    sym: &AffineSymmetry,
    target: ConjugacyTarget,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if target == ConjugacyTarget::Inverse && !map.has_inverse() {
        return Err(Error::MissingInverse);
    }
    if samples == 0 {
        return Err(Error::invalid("conjugacy check needs at least one sample"));
    }
    let mut rng = sampling::task_rng(seed, 3);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let z = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
        let lhs = sym.apply_inverse(map.eval(sym.apply(z)));
        let rhs = match target {
            ConjugacyTarget::Itself => map.eval(z),
            ConjugacyTarget::Inverse => map.eval_inverse(z).expect("checked has_inverse"),
        };
        let err = torus_distance(lhs, rhs);
        if !err.is_finite() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: [[i64; 2]; 2]) -> UnimodularMatrix {
        UnimodularMatrix::new(rows).unwrap()
    }

    #[test]
    fn completion_examples() {
        assert_eq!(
            complete_to_unimodular((1, 0)).unwrap(),
            UnimodularMatrix::IDENTITY
        );
        let c = complete_to_unimodular((0, 1)).unwrap();
        assert_eq!(c.column(0), (0, 1));
        assert_eq!(c.column(1), (-1, 0));
        let c = complete_to_unimodular((2, 3)).unwrap();
        assert_eq!(c.column(0), (2, 3));
        assert_eq!(c.column(1), (1, 2));
    }

    #[test]
    fn completion_rejects_non_primitive() {
        assert!(matches!(
            complete_to_unimodular((2, 4)),
            Err(Error::NotCoprime(2, 4))
        ));
        assert!(matches!(
            complete_to_unimodular((0, 0)),
            Err(Error::NotCoprime(0, 0))
        ));
        assert!(complete_to_unimodular((-1, 0)).is_ok());
        assert!(complete_to_unimodular((0, -1)).is_ok());
    }

    #[test]
    fn extended_gcd_bezout() {
        for (a, b) in [(2, 3), (240, 46), (-7, 5), (0, 9), (9, 0), (-4, -6)] {
            let (g, s, t) = extended_gcd(a, b);
            assert_eq!(a * s + b * t, g);
            assert!(g >= 0);
        }
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(
            UnimodularMatrix::new([[2, 0], [0, 1]]),
            Err(Error::NotUnimodular(2))
        ));
        assert!(UnimodularMatrix::new([[0, 1], [1, 0]]).is_err());
    }

    #[test]
    fn parses_matrix_syntax() {
        let a: UnimodularMatrix = "1,1;0,1".parse().unwrap();
        assert_eq!(a, m([[1, 1], [0, 1]]));
        assert_eq!(a.to_string(), "1,1;0,1");
        assert!("1,1,0,1".parse::<UnimodularMatrix>().is_err());
        assert!("1,x;0,1".parse::<UnimodularMatrix>().is_err());
        assert!("2,0;0,2".parse::<UnimodularMatrix>().is_err());
    }

    #[test]
    fn inverse_and_products() {
        let a = m([[2, 1], [1, 1]]);
        assert_eq!(a.mul(&a.inverse()), UnimodularMatrix::IDENTITY);
        let z = Vec2::new(0.3, -1.7);
        assert!((a.apply_inverse(a.apply(z)) - z).norm() < 1e-15);
    }

    #[test]
    fn transforms_rotation_vectors() {
        let shear = m([[1, 1], [0, 1]]);
        let out = transform_points(&[Vec2::new(0.0, 0.5)], &shear);
        assert_eq!(out[0], Vec2::new(-0.5, 0.5));
        let pts = [Vec2::new(0.1, 0.2), Vec2::new(-3.0, 4.0)];
        assert_eq!(
            transform_points(&pts, &UnimodularMatrix::IDENTITY),
            pts.to_vec()
        );
        let seg = convex_hull(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)]);
        let image = transform_polygon(&seg, &shear);
        assert_eq!(image.vertices().len(), 2);
        assert!(image.vertices().contains(&Vec2::new(0.0, 0.0)));
        assert!(image.vertices().contains(&Vec2::new(0.0, 1.0)));
    }

    #[test]
    fn conjugated_translation() {
        let t = LiftMap::translation(0.3, 0.7);
        let c = conjugate_lift(&t, m([[1, 1], [0, 1]]));
        let z = Vec2::new(0.2, 0.1);
        let d = c.eval(z) - z;
        assert!((d - Vec2::new(-0.4, 0.7)).norm() < 1e-12, "{d:?}");
        let id = conjugate_lift(&t, UnimodularMatrix::IDENTITY);
        assert_eq!(id.eval(z), t.eval(z));
    }

    #[test]
    fn line_transform_identity_and_formula() {
        let frame = DirectionalFrame::new(Vec2::new(0.6, 0.8), 0.7, -1.0, 2.0).unwrap();
        let same = line_frame_transform(&frame, &UnimodularMatrix::IDENTITY);
        assert!((same.frame.v - frame.v).norm() < 1e-15);
        assert!((same.frame.lambda - frame.lambda).abs() < 1e-15);

        // columns (1,0),(1,1): Mᵗ(1,0) = (1,1), λ̃ = 1·1/2
        let frame = DirectionalFrame::new(Vec2::new(1.0, 0.0), 1.0, 0.0, 0.0).unwrap();
        let out = line_frame_transform(&frame, &m([[1, 1], [0, 1]]));
        assert_eq!(out.raw_direction, Vec2::new(1.0, 1.0));
        assert!((out.raw_lambda - 0.5).abs() < 1e-15);
    }

    #[test]
    fn line_transform_membership() {
        let mut rng = sampling::task_rng(41, 0);
        let mats = [
            m([[1, 1], [0, 1]]),
            m([[2, 1], [1, 1]]),
            m([[0, -1], [1, 0]]),
            m([[1, 0], [-3, 1]]),
        ];
        for mat in mats {
            for _ in 0..100 {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let lambda: f64 = rng.random_range(-2.0..2.0);
                let frame =
                    DirectionalFrame::new(Vec2::new(theta.cos(), theta.sin()), lambda, 0.0, 0.0)
                        .unwrap();
                let out = line_frame_transform(&frame, &mat);
                let t: f64 = rng.random_range(-5.0..5.0);
                let on = frame.v * lambda + frame.v_perp * t;
                assert!(out.frame.on_line(mat.apply_inverse(on), 1e-9));
                let off = on + frame.v * 0.1;
                assert!(!out.frame.on_line(mat.apply_inverse(off), 1e-9));
                // raw pair describes the same line
                let w = mat.apply_inverse(on);
                assert!(
                    (w.dot(out.raw_direction) - out.raw_lambda * out.raw_direction.norm_sq()).abs()
                        < 1e-9
                );
            }
        }
    }

    #[test]
    fn torus_distance_wraps() {
        assert!((torus_distance(Vec2::new(0.99, 0.0), Vec2::new(0.01, 0.0)) - 0.02).abs() < 1e-12);
        assert!((torus_distance(Vec2::new(5.1, -3.0), Vec2::new(0.1, 0.0))).abs() < 1e-12);
    }

    #[test]
    fn symmetries_invert() {
        for sym in [AffineSymmetry::R, AffineSymmetry::S, AffineSymmetry::T] {
            let z = Vec2::new(0.31, -0.27);
            assert!((sym.apply_inverse(sym.apply(z)) - z).norm() < 1e-15);
        }
        assert_eq!(
            AffineSymmetry::T.apply(Vec2::new(0.0, 0.0)),
            Vec2::new(0.5, 0.5)
        );
        let parsed: AffineSymmetry = "1,0;0,-1;0.5,0.5".parse().unwrap();
        assert_eq!(parsed, AffineSymmetry::T);
        assert!("2,0;0,1".parse::<AffineSymmetry>().is_err());
    }

    #[test]
    fn mz_symmetry_identities() {
        let f = LiftMap::mz(0.5, 0.5);
        let e = check_conjugacy(&f, &AffineSymmetry::R, ConjugacyTarget::Inverse, 1000, 1).unwrap();
        assert!(e <= 1e-9, "{e}");
        let g = LiftMap::mz(0.5, 0.502);
        for sym in [AffineSymmetry::S, AffineSymmetry::T] {
            let e = check_conjugacy(&g, &sym, ConjugacyTarget::Itself, 1000, 1).unwrap();
            assert!(e <= 1e-9, "{e}");
        }
        let e = check_conjugacy(&g, &AffineSymmetry::R, ConjugacyTarget::Inverse, 1000, 1).unwrap();
        assert!(e > 1e-3, "{e}");
    }

    #[test]
    fn s_symmetry_for_sampled_parameters() {
        let mut rng = sampling::task_rng(42, 0);
        for _ in 0..20 {
            let f = LiftMap::mz(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let e =
                check_conjugacy(&f, &AffineSymmetry::S, ConjugacyTarget::Itself, 200, 2).unwrap();
            assert!(e <= 1e-9, "{e}");
        }
    }

    #[test]
    fn inverse_target_needs_inverse() {
        let def = crate::dsl::parse_map("x + sin(2*pi*y) ; y").unwrap();
        let f = LiftMap::from_definition(def).unwrap();
        assert!(matches!(
            check_conjugacy(&f, &AffineSymmetry::R, ConjugacyTarget::Inverse, 10, 1),
            Err(Error::MissingInverse)
        ));
    }
}
