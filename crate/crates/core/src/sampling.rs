//! Seeded, schedule-independent sampling.
//!
//! Every random draw comes from a ChaCha stream addressed by `(seed, stream)`,
//! so a task's samples depend only on its index and never on which worker ran it.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lift::{Disk, PlanePoint, Vec2};

/// Generator for task `stream` under `seed`.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes an index into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stratified jittered samples inside a disk.
///
/// The disk is cut into `rings` equal-area annuli, each split into equal
/// angular sectors, and one uniformly jittered point is drawn per cell.
/// Exactly `count` points are returned.
pub fn disk_samples(disk: &Disk, count: usize, seed: u64) -> Vec<PlanePoint> {
    if count == 0 {
        return Vec::new();
    }
    let mut rng = task_rng(seed, 1);
    let rings = (count as f64).sqrt().ceil() as usize;
    let mut out = Vec::with_capacity(count);
    for ring in 0..rings {
        // spread the remainder over the outer rings
        let per_ring = count / rings + usize::from(ring >= rings - count % rings);
        for sector in 0..per_ring {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let r = disk.radius * ((ring as f64 + u) / rings as f64).sqrt();
            let theta = TAU * (sector as f64 + v) / per_ring as f64;
            out.push(disk.center + Vec2::new(r * theta.cos(), r * theta.sin()));
        }
    }
    debug_assert_eq!(out.len(), count);
    out
}

/// `count` equally spaced points on a circle, rotated by `phase` (in turns).
pub fn circle_samples(
    center: PlanePoint,
    radius: f64,
    count: usize,
    phase: f64,
) -> Vec<PlanePoint> {
    (0..count)
        .map(|k| {
            let theta = TAU * (k as f64 + phase) / count as f64;
            center + Vec2::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect()
}

/// Boundary and interior samples of a disk: half on the circle, half stratified inside.
pub fn disk_boundary_and_interior(disk: &Disk, count: usize, seed: u64) -> Vec<PlanePoint> {
    let boundary = count / 2;
    let phase: f64 = task_rng(seed, 2).random();
    let mut pts = circle_samples(disk.center, disk.radius, boundary, phase);
    pts.extend(disk_samples(disk, count - boundary, seed));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_samples_are_inside_and_counted() {
        let disk = Disk::new(Vec2::new(0.3, 0.7), 0.05).unwrap();
        for count in [1, 2, 7, 64, 256, 1000] {
            let pts = disk_samples(&disk, count, 5);
            assert_eq!(pts.len(), count);
            assert!(pts.iter().all(|p| p.dist(disk.center) <= disk.radius));
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let disk = Disk::new(Vec2::new(0.1, 0.6), 0.03).unwrap();
        assert_eq!(disk_samples(&disk, 100, 9), disk_samples(&disk, 100, 9));
        assert_ne!(disk_samples(&disk, 100, 9), disk_samples(&disk, 100, 10));
    }

    #[test]
    fn streams_are_independent() {
        let a: f64 = task_rng(1, 0).random();
        let b: f64 = task_rng(1, 1).random();
        assert_ne!(a, b);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn stratification_covers_every_ring() {
        let disk = Disk::new(Vec2::ZERO, 0.1).unwrap();
        let pts = disk_samples(&disk, 256, 3);
        let rings = 16;
        let mut hits = [0usize; 16];
        for p in &pts {
            let k = ((p.norm() / 0.1).powi(2) * rings as f64) as usize;
            hits[k.min(rings - 1)] += 1;
        }
        assert!(hits.iter().all(|&h| h == 16), "{hits:?}");
    }
}
