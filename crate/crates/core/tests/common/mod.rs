//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rotset_core::lattice::{complete_to_unimodular, UnimodularMatrix};
use rotset_core::lift::eval_mz;
use rotset_core::sampling::task_rng;
use rotset_core::Vec2;

/// Hull vertices by brute force: `(i, j)` is a hull edge when every other
/// point lies left of `i -> j` or on the segment between them.
pub fn brute_force_hull(pts: &[Vec2]) -> Vec<Vec2> {
    let mut verts = Vec::new();
    for (i, &a) in pts.iter().enumerate() {
        for (j, &b) in pts.iter().enumerate() {
            if i == j || a == b {
                continue;
            }
            let edge = pts.iter().all(|&p| {
                let c = (b - a).cross(p - a);
                if c > 0.0 {
                    return true;
                }
                if c < 0.0 {
                    return false;
                }
                let t = (p - a).dot(b - a);
                t >= 0.0 && t <= (b - a).norm_sq()
            });
            if edge {
                verts.push(a);
                verts.push(b);
            }
        }
    }
    if verts.is_empty() && !pts.is_empty() {
        verts.push(pts[0]);
    }
    sorted(verts)
}

pub fn sorted(mut v: Vec<Vec2>) -> Vec<Vec2> {
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v.dedup();
    v
}

pub fn brute_hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let dir = |p: &[Vec2], q: &[Vec2]| {
        p.iter()
            .map(|x| q.iter().map(|y| x.dist(*y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    dir(a, b).max(dir(b, a))
}

/// `F^n(z) − z − nρ` for the builtin family, by a plain loop.
pub fn direct_deviation(alpha: f64, beta: f64, z: Vec2, rho: Vec2, n: usize) -> Vec2 {
    let mut w = z;
    for _ in 0..n {
        w = eval_mz(alpha, beta, w);
    }
    w - z - rho * n as f64
}

pub fn random_points(seed: u64, n: usize) -> Vec<Vec2> {
    let mut rng = task_rng(seed, 0);
    (0..n)
        .map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// A random matrix of SL(2,Z) with small entries, built from a completed
/// primitive column and a shear.
pub fn random_unimodular(rng: &mut impl Rng) -> UnimodularMatrix {
    loop {
        let w = (rng.random_range(-4..=4), rng.random_range(-4..=4));
        if w == (0, 0) || gcd(w.0, w.1) != 1 {
            continue;
        }
        let m = complete_to_unimodular(w).unwrap();
        let k = rng.random_range(-2..=2);
        let shear = UnimodularMatrix::new([[1, k], [0, 1]]).unwrap();
        return m.mul(&shear);
    }
}

/// Uniform dyadic point `k / 2^20`, so that `M (M⁻¹ z)` is exact.
pub fn dyadic(rng: &mut impl Rng) -> Vec2 {
    let s = (1u64 << 20) as f64;
    Vec2::new(
        rng.random_range(-(1 << 20)..(1 << 20)) as f64 / s,
        rng.random_range(-(1 << 20)..(1 << 20)) as f64 / s,
    )
}
