//! Estimators for the rotation set `ρ(F)` and local rotation subsets `ρ_U(F)`,
//! and the structure tests run on their hulls.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassificationLabel, LabelKind};
use crate::engine::{self, GridSpec};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, convex_hull_indices, hausdorff_distance, ConvexPolygon};
use crate::lift::{Disk, LiftMap, PlanePoint, RotationVector, Vec2};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSetEstimate {
    pub hull: ConvexPolygon,
    pub sample_cloud: Vec<RotationVector>,
    pub n_used: usize,
    pub resolution: GridSpec,
    /// Points added by the refinement pass around hull vertices.
    pub refined: usize,
    /// Grid points whose orbit went non-finite.
    pub flagged: usize,
}

impl RotationSetEstimate {
    pub fn verdict(&self, tol: &StructureTolerances) -> StructureVerdict {
        detect_structure(&self.hull, tol)
    }
}

/// `φ_n` over a grid, then one refinement pass: the eight half-cell
/// neighbours of every start whose value is a hull vertex are added.
pub fn estimate_rotation_set(
    map: &LiftMap,
    grid: GridSpec,
    n: usize,
) -> Result<RotationSetEstimate> {
    if n == 0 {
        return Err(Error::invalid("rotation set estimate needs n >= 1"));
    }
    let sweep = engine::sweep(map, grid, n, 0)?;
    let (starts, mut cloud): (Vec<PlanePoint>, Vec<RotationVector>) = sweep
        .points
        .iter()
        .filter_map(|p| p.phi.map(|phi| (p.start, phi)))
        .unzip();
    let half = grid.cell_size() * 0.5;
    let extra: Vec<PlanePoint> = convex_hull_indices(&cloud)
        .into_iter()
        .flat_map(|i| {
            let s = starts[i];
            (-1..=1).flat_map(move |dy| {
                (-1..=1)
                    .filter(move |&dx| (dx, dy) != (0, 0))
                    .map(move |dx| s + Vec2::new(dx as f64 * half.x, dy as f64 * half.y))
            })
        })
        .collect();
    let refined: Vec<RotationVector> = extra
        .par_iter()
        .map(|&z| engine::phi_n(map, z, n).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let added = refined.len();
    cloud.extend(refined);
    Ok(RotationSetEstimate {
        hull: convex_hull(&cloud),
        sample_cloud: cloud,
        n_used: n,
        resolution: grid,
        refined: added,
        flagged: sweep.flagged(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRotationEstimate {
    pub disk: Disk,
    pub cloud: Vec<RotationVector>,
    pub hull: ConvexPolygon,
    pub n_used: usize,
    pub samples_used: usize,
}

impl LocalRotationEstimate {
    pub fn verdict(&self, tol: &StructureTolerances) -> StructureVerdict {
        detect_structure(&self.hull, tol)
    }
}

/// `{ φ_n(z) }` for stratified seeded samples `z` of the lifted disk.
pub fn local_rotation_subset(
    map: &LiftMap,
    disk: &Disk,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<LocalRotationEstimate> {
    Ok(local_rotation_schedule(map, disk, &[n], samples, seed)?
        .pop()
        .expect("one schedule entry"))
}

/// [`local_rotation_subset`] at every `n` of an ascending schedule, sharing
/// the sample set and the orbit computation.
pub fn local_rotation_schedule(
    map: &LiftMap,
    disk: &Disk,
    schedule: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<LocalRotationEstimate>> {
    if samples == 0 {
        return Err(Error::invalid("local estimate needs at least one sample"));
    }
    if schedule.first() == Some(&0) {
        return Err(Error::invalid("local estimate needs n >= 1"));
    }
    let lifted = disk.lifted();
    let starts = sampling::disk_samples(&lifted, samples, seed);
    let images = engine::images_along(map, &starts, schedule)?;
    Ok(schedule
        .iter()
        .zip(images)
        .map(|(&n, img)| {
            let cloud: Vec<RotationVector> = img
                .iter()
                .zip(&starts)
                .map(|(w, z)| (*w - *z) / n as f64)
                .collect();
            LocalRotationEstimate {
                disk: lifted,
                hull: convex_hull(&cloud),
                cloud,
                n_used: n,
                samples_used: samples,
            }
        })
        .collect())
}

/// A fraction `num/den` with `den ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Continued-fraction convergents of `x` with denominator at most `qmax`.
pub fn convergents(x: f64, qmax: i64) -> Vec<Rational> {
    let mut out = Vec::new();
    if !x.is_finite() || qmax < 1 {
        return out;
    }
    let (mut h_prev, mut h) = (1_i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0_i64, 1_i64);
    let mut rem = x - x.floor();
    out.push(Rational { num: h, den: k });
    while rem > 1e-15 {
        let inv = 1.0 / rem;
        let a = inv.floor();
        if a > qmax as f64 {
            break;
        }
        let a = a as i64;
        let k_next = a * k + k_prev;
        if k_next > qmax {
            break;
        }
        (h_prev, h) = (h, a * h + h_prev);
        (k_prev, k) = (k, k_next);
        rem = inv - inv.floor();
        out.push(Rational { num: h, den: k });
    }
    out
}

/// Smallest-denominator `p/q` (`q ≤ qmax`) with `|q·x − p| ≤ tol`.
///
/// The smallest such `q` always belongs to a convergent, since a denominator
/// that beats every smaller one in `|q·x − p|` is a best approximation of the
/// second kind.
pub fn best_rational(x: f64, tol: f64, qmax: i64) -> Option<Rational> {
    convergents(x, qmax)
        .into_iter()
        .find(|r| (r.den as f64 * x - r.num as f64).abs() <= tol)
}

/// Thresholds for [`detect_structure`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureTolerances {
    /// Hull diameter below which the hull counts as one point; also the
    /// area-to-diameter ratio below which it counts as a segment.
    pub singleton: f64,
    /// Bound on `|q·x − p|` for a coordinate to count as rational.
    pub rational: f64,
    pub qmax: i64,
}

impl Default for StructureTolerances {
    fn default() -> Self {
        Self {
            singleton: 1e-3,
            rational: 1e-4,
            qmax: 64,
        }
    }
}

impl StructureTolerances {
    pub fn uniform(tol: f64, qmax: i64) -> Self {
        Self {
            singleton: tol,
            rational: tol,
            qmax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureVerdict {
    SingletonRational {
        point: RotationVector,
        witness: [Rational; 2],
    },
    SingletonIrrational {
        point: RotationVector,
    },
    SingletonSemiRational {
        point: RotationVector,
    },
    Segment {
        from: RotationVector,
        to: RotationVector,
    },
    Fat {
        area: f64,
        diameter: f64,
    },
    Undetermined,
}

impl StructureVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            StructureVerdict::SingletonRational { .. } => "singleton_rational",
            StructureVerdict::SingletonIrrational { .. } => "singleton_irrational",
            StructureVerdict::SingletonSemiRational { .. } => "singleton_semi_rational",
            StructureVerdict::Segment { .. } => "segment",
            StructureVerdict::Fat { .. } => "fat",
            StructureVerdict::Undetermined => "undetermined",
        }
    }

    /// The exact rational vector of a rational singleton.
    pub fn rational_witness(&self) -> Option<RotationVector> {
        match self {
            StructureVerdict::SingletonRational { witness, .. } => {
                Some(Vec2::new(witness[0].value(), witness[1].value()))
            }
            _ => None,
        }
    }
}

/// Classifies a hull as a (rational, irrational or semi-rational) singleton,
/// a segment, or a set with interior.
pub fn detect_structure(hull: &ConvexPolygon, tol: &StructureTolerances) -> StructureVerdict {
    let Some(point) = hull.centroid() else {
        return StructureVerdict::Undetermined;
    };
    let diameter = hull.diameter();
    if diameter < tol.singleton {
        let rx = best_rational(point.x, tol.rational, tol.qmax);
        let ry = best_rational(point.y, tol.rational, tol.qmax);
        return match (rx, ry) {
            (Some(a), Some(b)) => StructureVerdict::SingletonRational {
                point,
                witness: [a, b],
            },
            (None, None) if best_rational(point.x / point.y, tol.rational, tol.qmax).is_none() => {
                StructureVerdict::SingletonIrrational { point }
            }
            _ => StructureVerdict::SingletonSemiRational { point },
        };
    }
    let area = hull.area();
    if area < tol.singleton * diameter {
        let (from, to) = hull.diameter_pair().expect("non-empty hull");
        return StructureVerdict::Segment { from, to };
    }
    StructureVerdict::Fat { area, diameter }
}

/// Parameters of [`dichotomy_classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    /// Ascending iterate counts; the last two decide the label.
    pub schedule: Vec<usize>,
    pub tolerances: StructureTolerances,
    /// Hull area above which a subset counts as having interior.
    pub area_tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        Self {
            schedule: vec![2500, 5000],
            tolerances: StructureTolerances::default(),
            area_tol: 1e-4,
            samples: 256,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Elliptic when the last two schedule entries give the same rational
/// singleton, chaotic when both have hull area at least `area_tol`,
/// undetermined otherwise.
pub fn dichotomy_classify(
    map: &LiftMap,
    disk: &Disk,
    params: &DichotomyParams,
) -> Result<ClassificationLabel> {
    if params.schedule.len() < 2 {
        return Err(Error::invalid(
            "dichotomy schedule needs at least two entries",
        ));
    }
    let estimates =
        local_rotation_schedule(map, disk, &params.schedule, params.samples, params.seed)?;
    Ok(label_from_estimates(&estimates, params))
}

pub(crate) fn label_from_estimates(
    estimates: &[LocalRotationEstimate],
    params: &DichotomyParams,
) -> ClassificationLabel {
    let [prev, last] = &estimates[estimates.len() - 2..] else {
        unreachable!("schedule checked to have two entries")
    };
    let v_prev = prev.verdict(&params.tolerances);
    let v_last = last.verdict(&params.tolerances);
    let (diameter, area) = (last.hull.diameter(), last.hull.area());
    let witness = v_last.rational_witness();
    let kind = match (&v_prev, &v_last) {
        (
            StructureVerdict::SingletonRational { witness: a, .. },
            StructureVerdict::SingletonRational { witness: b, .. },
        ) if a == b => LabelKind::Elliptic,
        _ if prev.hull.area() >= params.area_tol && area >= params.area_tol => LabelKind::Chaotic,
        _ => LabelKind::Undetermined,
    };
    ClassificationLabel {
        kind,
        diameter,
        area,
        witness: if kind == LabelKind::Elliptic {
            witness
        } else {
            None
        },
        schedule: params.schedule.clone(),
        verdict: v_last,
    }
}

/// Single-linkage cluster summary of a rotation cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectedness {
    pub median_gap: f64,
    pub max_gap: f64,
    /// Clusters when points closer than `10 × median_gap` are linked.
    pub clusters: usize,
}

impl Connectedness {
    /// A split cloud means the estimate has not converged; a connected disk
    /// always has a connected rotation subset.
    pub fn is_split(&self) -> bool {
        self.clusters > 1
    }
}

pub fn connectedness(cloud: &[RotationVector]) -> Result<Connectedness> {
    if cloud.len() < 2 {
        return Err(Error::invalid("connectedness needs at least two points"));
    }
    let n = cloud.len();
    let mut gaps: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| cloud[i].dist(cloud[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let median_gap = gaps[n / 2];
    let max_gap = gaps[n - 1];
    let link = 10.0 * median_gap;

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if cloud[i].dist(cloud[j]) <= link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let clusters = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    if clusters > 1 {
        log::warn!("rotation cloud splits into {clusters} clusters; estimate likely unconverged");
    }
    Ok(Connectedness {
        median_gap,
        max_gap,
        clusters,
    })
}

/// Hausdorff distance between the `φ_n` and `φ_{2n}` clouds of a disk, for each `n`.
pub fn convergence_profile(
    map: &LiftMap,
    disk: &Disk,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    let mut schedule: Vec<usize> = n_list.iter().flat_map(|&n| [n, 2 * n]).collect();
    schedule.sort_unstable();
    schedule.dedup();
    let estimates = local_rotation_schedule(map, disk, &schedule, samples, seed)?;
    let cloud_at = |n: usize| &estimates[schedule.binary_search(&n).expect("scheduled")].cloud;
    n_list
        .iter()
        .map(|&n| Ok((n, hausdorff_distance(cloud_at(n), cloud_at(2 * n))?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn point_hull(x: f64, y: f64) -> ConvexPolygon {
        convex_hull(&[Vec2::new(x, y)])
    }

    #[test]
    fn rational_singleton() {
        let v = detect_structure(
            &point_hull(0.0, 0.5),
            &StructureTolerances::uniform(1e-3, 64),
        );
        let StructureVerdict::SingletonRational { witness, .. } = v else {
            panic!("{v:?}")
        };
        assert_eq!(
            witness,
            [Rational { num: 0, den: 1 }, Rational { num: 1, den: 2 }]
        );
    }

    #[test]
    fn irrational_singleton() {
        let x = SQRT_2 - 1.0;
        let y = x * 3f64.sqrt();
        let v = detect_structure(&point_hull(x, y), &StructureTolerances::uniform(1e-3, 64));
        assert_eq!(v.name(), "singleton_irrational", "{v:?}");
        let v = detect_structure(&point_hull(x, 0.5), &StructureTolerances::default());
        assert_eq!(v.name(), "singleton_semi_rational");
    }

    #[test]
    fn fat_and_segment() {
        // triangle with diameter 0.3 and area 0.02
        let tri = convex_hull(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(0.3, 0.0),
            Vec2::new(0.15, 0.4 / 3.0),
        ]);
        assert!((tri.area() - 0.02).abs() < 1e-12);
        assert!(matches!(
            detect_structure(&tri, &StructureTolerances::uniform(1e-3, 64)),
            StructureVerdict::Fat { .. }
        ));
        let seg = convex_hull(&[Vec2::new(0.0, 0.0), Vec2::new(0.2, 0.1)]);
        assert_eq!(
            detect_structure(&seg, &StructureTolerances::default()).name(),
            "segment"
        );
        assert_eq!(
            detect_structure(&ConvexPolygon::default(), &StructureTolerances::default()),
            StructureVerdict::Undetermined
        );
    }

    #[test]
    fn convergents_of_known_constants() {
        let c = convergents(SQRT_2 - 1.0, 64);
        let dens: Vec<i64> = c.iter().map(|r| r.den).collect();
        assert_eq!(dens, [1, 2, 5, 12, 29]);
        assert_eq!(
            convergents(0.5, 64),
            [Rational { num: 0, den: 1 }, Rational { num: 1, den: 2 }]
        );
        assert_eq!(
            best_rational(-0.25, 1e-9, 64),
            Some(Rational { num: -1, den: 4 })
        );
        assert_eq!(
            best_rational(3.0, 1e-9, 1),
            Some(Rational { num: 3, den: 1 })
        );
    }

    #[test]
    fn translation_estimates_are_points() {
        let g = GridSpec::new(5, 5).unwrap();
        let e = estimate_rotation_set(&LiftMap::translation(0.3, 0.7), g, 50).unwrap();
        assert_eq!(e.hull.vertices().len(), 1);
        assert!((e.hull.vertices()[0] - Vec2::new(0.3, 0.7)).norm() < 1e-12);
        let e = estimate_rotation_set(&LiftMap::identity(), g, 10).unwrap();
        assert_eq!(e.hull.vertices(), &[Vec2::ZERO]);

        let disk = Disk::new(Vec2::new(0.2, 0.2), 0.1).unwrap();
        let l = local_rotation_subset(&LiftMap::translation(0.3, 0.7), &disk, 40, 32, 1).unwrap();
        assert_eq!(l.cloud.len(), 32);
        assert!(l.hull.diameter() < 1e-12);
    }

    #[test]
    fn irrational_translation_is_undetermined() {
        let map = LiftMap::translation(SQRT_2 / 2.0, 3f64.sqrt() / 2.0);
        let disk = Disk::new(Vec2::new(0.5, 0.5), 0.03).unwrap();
        let params = DichotomyParams {
            schedule: vec![50, 100],
            samples: 16,
            ..Default::default()
        };
        let label = dichotomy_classify(&map, &disk, &params).unwrap();
        assert_eq!(label.kind, LabelKind::Undetermined);
        assert_eq!(label.verdict.name(), "singleton_irrational");
        assert!(label.witness.is_none());
    }

    #[test]
    fn identity_is_elliptic() {
        let disk = Disk::new(Vec2::new(0.5, 0.5), 0.03).unwrap();
        let params = DichotomyParams {
            schedule: vec![5, 10],
            samples: 8,
            ..Default::default()
        };
        let label = dichotomy_classify(&LiftMap::identity(), &disk, &params).unwrap();
        assert_eq!(label.kind, LabelKind::Elliptic);
        assert_eq!(label.witness, Some(Vec2::ZERO));
    }

    #[test]
    fn split_clouds_are_flagged() {
        let mut cloud: Vec<Vec2> = (0..20).map(|i| Vec2::new(i as f64 * 1e-3, 0.0)).collect();
        assert_eq!(connectedness(&cloud).unwrap().clusters, 1);
        cloud.extend((0..20).map(|i| Vec2::new(1.0 + i as f64 * 1e-3, 0.0)));
        assert!(connectedness(&cloud).unwrap().is_split());
    }
}
