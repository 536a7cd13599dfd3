//! Torus-wide classification, island extraction, periodic orbits and
//! stability probes.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, GridSpec, LinearFit, Orbit};
use crate::error::{Error, Result};
use crate::lattice::torus_distance;
use crate::lift::{Disk, LiftMap, PlanePoint, RotationVector, Vec2};
use crate::rotation::{self, DichotomyParams, StructureTolerances, StructureVerdict};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Elliptic,
    Chaotic,
    Undetermined,
}

impl LabelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelKind::Elliptic => "elliptic",
            LabelKind::Chaotic => "chaotic",
            LabelKind::Undetermined => "undetermined",
        }
    }
}

impl std::str::FromStr for LabelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic" => Ok(LabelKind::Elliptic),
            "chaotic" => Ok(LabelKind::Chaotic),
            "undetermined" => Ok(LabelKind::Undetermined),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

/// Verdict of the dichotomy test on one disk, with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationLabel {
    pub kind: LabelKind,
    /// Hull diameter at the last schedule entry.
    pub diameter: f64,
    /// Hull area at the last schedule entry.
    pub area: f64,
    /// The rational rotation vector, for elliptic labels only.
    pub witness: Option<RotationVector>,
    pub schedule: Vec<usize>,
    /// Structure of the hull at the last schedule entry.
    pub verdict: StructureVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid {
    pub grid: GridSpec,
    pub disk_radius: f64,
    /// Row-major, `index = iy * nx + ix`.
    pub labels: Vec<ClassificationLabel>,
}

impl LabelGrid {
    pub fn get(&self, ix: usize, iy: usize) -> &ClassificationLabel {
        &self.labels[iy * self.grid.nx + ix]
    }

    pub fn count(&self, kind: LabelKind) -> usize {
        self.labels.iter().filter(|l| l.kind == kind).count()
    }
}

/// Cheaper dichotomy settings for whole-torus maps.
pub fn map_defaults() -> DichotomyParams {
    DichotomyParams {
        schedule: vec![1000, 2000],
        samples: 16,
        ..DichotomyParams::default()
    }
}

/// Runs the dichotomy test on a disk of radius `disk_radius` around each grid
/// point. Cell `i` uses the seed `derive_seed(params.seed, i)`.
pub fn classification_map(
    map: &LiftMap,
    grid: GridSpec,
    disk_radius: f64,
    params: &DichotomyParams,
) -> Result<LabelGrid> {
    Disk::new(Vec2::ZERO, disk_radius)?;
    if params.schedule.len() < 2 {
        return Err(Error::invalid(
            "dichotomy schedule needs at least two entries",
        ));
    }
    let labels = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            let disk = Disk::new(grid.point(ix, iy), disk_radius)?;
            let seed = sampling::derive_seed(params.seed, i as u64);
            let est = rotation::local_rotation_schedule(
                map,
                &disk,
                &params.schedule,
                params.samples,
                seed,
            )?;
            Ok(rotation::label_from_estimates(&est, params))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelGrid {
        grid,
        disk_radius,
        labels,
    })
}

/// A 4-connected group of elliptic cells sharing one witness vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandRegion {
    pub cells: Vec<(usize, usize)>,
    pub witness: RotationVector,
    /// Bounding box on the cover, unwrapped from the first cell.
    pub bbox_min: PlanePoint,
    pub bbox_max: PlanePoint,
    pub period: Option<usize>,
    pub periodic_point: Option<PlanePoint>,
}

impl IslandRegion {
    /// Is the torus point `z` inside the bounding box (up to integer translation)?
    pub fn bbox_contains(&self, z: PlanePoint) -> bool {
        let z = z.mod_one();
        let inside = |lo: f64, hi: f64, v: f64| {
            (lo.floor() as i64..=hi.ceil() as i64).any(|k| (lo..=hi).contains(&(v + k as f64)))
        };
        inside(self.bbox_min.x, self.bbox_max.x, z.x)
            && inside(self.bbox_min.y, self.bbox_max.y, z.y)
    }
}

/// Flood fill over elliptic cells, wrapping across the torus edges. Neighbours
/// join a region when their witnesses differ by at most `tol`.
pub fn extract_islands(labels: &LabelGrid, tol: f64) -> Vec<IslandRegion> {
    let (nx, ny) = (labels.grid.nx, labels.grid.ny);
    let cell = labels.grid.cell_size();
    let mut seen = vec![false; nx * ny];
    let mut islands = Vec::new();
    for start in 0..nx * ny {
        let Some(witness) = elliptic_witness(&labels.labels[start]) else {
            continue;
        };
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let (sx, sy) = labels.grid.coords(start);
        let mut queue = VecDeque::from([(sx, sy, sx as i64, sy as i64)]);
        let mut cells = Vec::new();
        let (mut lo, mut hi) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
        while let Some((ix, iy, ux, uy)) = queue.pop_front() {
            cells.push((ix, iy));
            lo = (lo.0.min(ux), lo.1.min(uy));
            hi = (hi.0.max(ux), hi.1.max(uy));
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let jx = (ix as i64 + dx).rem_euclid(nx as i64) as usize;
                let jy = (iy as i64 + dy).rem_euclid(ny as i64) as usize;
                let j = jy * nx + jx;
                if seen[j] {
                    continue;
                }
                match elliptic_witness(&labels.labels[j]) {
                    Some(w) if (w - witness).norm() <= tol => {
                        seen[j] = true;
                        queue.push_back((jx, jy, ux + dx, uy + dy));
                    }
                    _ => {}
                }
            }
        }
        cells.sort_unstable_by_key(|&(x, y)| (y, x));
        islands.push(IslandRegion {
            cells,
            witness,
            bbox_min: Vec2::new(lo.0 as f64 * cell.x, lo.1 as f64 * cell.y),
            bbox_max: Vec2::new((hi.0 + 1) as f64 * cell.x, (hi.1 + 1) as f64 * cell.y),
            period: None,
            periodic_point: None,
        });
    }
    islands
}

fn elliptic_witness(l: &ClassificationLabel) -> Option<RotationVector> {
    match l.kind {
        LabelKind::Elliptic => l.witness,
        _ => None,
    }
}

/// For each island, looks for a periodic point inside its bounding box whose
/// rotation vector `w/p` equals the witness, trying `p = q, 2q, …` up to
/// `pmax` where `q` is the witness denominator.
pub fn attach_periodic_points(
    map: &LiftMap,
    islands: &mut [IslandRegion],
    pmax: usize,
    search_grid: GridSpec,
    tol: &StructureTolerances,
) -> Result<()> {
    for island in islands.iter_mut() {
        let qx = rotation::best_rational(island.witness.x, tol.rational, tol.qmax);
        let qy = rotation::best_rational(island.witness.y, tol.rational, tol.qmax);
        let (Some(rx), Some(ry)) = (qx, qy) else {
            continue;
        };
        let q = lcm(rx.den, ry.den) as usize;
        let mut p = q;
        while p <= pmax {
            let w = (rx.num * (p as i64 / rx.den), ry.num * (p as i64 / ry.den));
            let search = find_periodic_points(map, p, w, search_grid, DEFAULT_NEWTON_ITERS)?;
            if let Some(pt) = search
                .points
                .iter()
                .find(|pt| island.bbox_contains(pt.point))
            {
                island.period = Some(p);
                island.periodic_point = Some(pt.point);
                break;
            }
            p += q;
        }
    }
    Ok(())
}

fn lcm(a: i64, b: i64) -> i64 {
    let (g, _, _) = crate::lattice::extended_gcd(a, b);
    (a / g.abs() * b).abs()
}

pub const DEFAULT_NEWTON_ITERS: usize = 50;
/// Residual bound for accepted periodic points.
pub const PERIODIC_TOL: f64 = 1e-10;
/// Torus distance below which two periodic points are the same.
pub const MERGE_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
// |G| at or below this counts as a zero for sign-change tests.
const ZERO_TOL: f64 = 1e-13;
// Jacobians with |det| below this trigger the subdivision fallback.
const SINGULAR_DET: f64 = 1e-6;
// Subdivision stops once G is this small on the whole stencil.
const FLAT_TOL: f64 = 1e-14;
const MAX_BOXES: usize = 16;
const MAX_LEVELS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    /// Representative in `[0,1)²`.
    pub point: PlanePoint,
    pub p: usize,
    pub w: (i64, i64),
    /// `‖F^p(z) − z − w‖`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSearch {
    pub points: Vec<PeriodicPoint>,
    /// Cells whose stencil showed a sign change in both components.
    pub candidates: usize,
    /// Candidates that produced no acceptable point.
    pub dropped: usize,
    /// Candidates resolved by box subdivision instead of Newton.
    pub fallback_used: usize,
}

struct Displacement<'a> {
    map: &'a LiftMap,
    p: usize,
    w: Vec2,
}

impl Displacement<'_> {
    fn g(&self, z: PlanePoint) -> Vec2 {
        match engine::iterate(self.map, z, self.p) {
            Ok(fz) => fz - z - self.w,
            Err(_) => Vec2::new(f64::NAN, f64::NAN),
        }
    }

    fn jacobian(&self, z: PlanePoint) -> [[f64; 2]; 2] {
        let ex = Vec2::new(FD_STEP, 0.0);
        let ey = Vec2::new(0.0, FD_STEP);
        let dx = (self.g(z + ex) - self.g(z - ex)) / (2.0 * FD_STEP);
        let dy = (self.g(z + ey) - self.g(z - ey)) / (2.0 * FD_STEP);
        [[dx.x, dy.x], [dx.y, dy.y]]
    }

    /// 3×3 stencil of a box `[lo, lo + size]`.
    fn stencil(&self, lo: Vec2, size: Vec2) -> [Vec2; 9] {
        let mut out = [Vec2::ZERO; 9];
        for (k, v) in out.iter_mut().enumerate() {
            let (i, j) = (k % 3, k / 3);
            *v = self.g(lo + Vec2::new(size.x * i as f64 / 2.0, size.y * j as f64 / 2.0));
        }
        out
    }
}

fn straddles(values: &[Vec2]) -> bool {
    let spans = |f: fn(&Vec2) -> f64| {
        let lo = values.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = values.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        lo <= ZERO_TOL && hi >= -ZERO_TOL
    };
    values.iter().all(|v| v.is_finite()) && spans(|v| v.x) && spans(|v| v.y)
}

fn det(j: &[[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Damped Newton. Returns the last iterate and whether the Jacobian stayed regular.
fn newton(g: &Displacement<'_>, mut z: PlanePoint, iters: usize) -> (PlanePoint, bool) {
    let mut gz = g.g(z);
    for _ in 0..iters {
        if !gz.is_finite() || gz.norm() <= PERIODIC_TOL * 1e-3 {
            break;
        }
        let j = g.jacobian(z);
        let d = det(&j);
        if !(d.abs() >= SINGULAR_DET) {
            return (z, false);
        }
        let step = Vec2::new(
            (j[1][1] * gz.x - j[0][1] * gz.y) / d,
            (-j[1][0] * gz.x + j[0][0] * gz.y) / d,
        );
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand = z - step * t;
            let gc = g.g(cand);
            if gc.norm() < gz.norm() {
                z = cand;
                gz = gc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let regular = det(&g.jacobian(z)).abs() >= SINGULAR_DET;
    (z, regular)
}

// Largest denominator tried when snapping a box to a fraction.
const MAX_SNAP_DEN: u32 = 1 << 16;

/// Simplest fraction in `[lo, hi]`: smallest denominator, then the numerator
/// nearest `lo`. Scans denominators directly so box endpoints that are exact
/// fractions stay exact.
fn simplest_in(lo: f64, hi: f64) -> Option<f64> {
    if lo > hi || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Some(0.0);
    }
    (1..=MAX_SNAP_DEN).find_map(|q| {
        let q = f64::from(q);
        let p = (lo * q).ceil();
        (p <= hi * q).then(|| p / q)
    })
}

/// Subdivides a box, keeping quadrants whose stencil still straddles zero in
/// both components, until `G` is flat on the best box. Returns the snapped
/// simple-fraction point or the box center, whichever has smaller `‖G‖`.
fn subdivide(g: &Displacement<'_>, lo: Vec2, size: Vec2) -> Option<PlanePoint> {
    let mut boxes = vec![(lo, size)];
    for _ in 0..MAX_LEVELS {
        let mut next: Vec<(Vec2, Vec2, f64, f64)> = Vec::new();
        for (blo, bsize) in &boxes {
            let half = *bsize * 0.5;
            for (i, j) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                let qlo = *blo + Vec2::new(half.x * i, half.y * j);
                let st = g.stencil(qlo, half);
                if straddles(&st) {
                    let flat = st.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    next.push((qlo, half, st[4].norm(), flat));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        // the stencil maximum grows with the distance to the zero even where
        // the center value has already rounded to 0
        next.sort_by(|a, b| a.3.total_cmp(&b.3).then(a.2.total_cmp(&b.2)));
        next.truncate(MAX_BOXES);
        let (blo, bsize, _, flat) = next[0];

        if flat < FLAT_TOL || bsize.x < 1e-15 {
            let center = blo + bsize * 0.5;
            // G rounds to zero on a whole neighbourhood of a degenerate zero,
            // so the ranking among flat boxes is arbitrary; snap within the
            // union of all survivors instead of the first one
            let (ulo, uhi) = next.iter().fold(
                (
                    Vec2::new(f64::INFINITY, f64::INFINITY),
                    Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                ),
                |(lo, hi), (l, s, _, _)| {
                    (
                        Vec2::new(lo.x.min(l.x), lo.y.min(l.y)),
                        Vec2::new(hi.x.max(l.x + s.x), hi.y.max(l.y + s.y)),
                    )
                },
            );
            let snapped = simplest_in(ulo.x, uhi.x)
                .zip(simplest_in(ulo.y, uhi.y))
                .map(|(x, y)| Vec2::new(x, y));
            return Some(match snapped {
                Some(s) if g.g(s).norm() <= g.g(center).norm() => s,
                _ => center,
            });
        }
        boxes = next.into_iter().map(|(l, s, _, _)| (l, s)).collect();
    }
    None
}

/// Zeros of `G(z) = F^p(z) − z − w` over `[0,1)²`.
///
/// Cells of `grid` whose 3×3 stencil shows a sign change in both components of
/// `G` are refined by damped Newton. Where the Jacobian of `G` is near-singular
/// (for instance where `DF^p` is the identity), the cell is instead subdivided
/// and the result snapped to the simplest fractions in the final box.
pub fn find_periodic_points(
    map: &LiftMap,
    p: usize,
    w: (i64, i64),
    grid: GridSpec,
    refine_iters: usize,
) -> Result<PeriodicSearch> {
    if p == 0 {
        return Err(Error::invalid("period must be >= 1"));
    }
    let g = Displacement {
        map,
        p,
        w: Vec2::new(w.0 as f64, w.1 as f64),
    };
    let cell = grid.cell_size();
    let flagged: Vec<Vec2> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let (ix, iy) = grid.coords(i);
            let lo = grid.point(ix, iy);
            straddles(&g.stencil(lo, cell)).then_some(lo)
        })
        .collect();

    let outcomes: Vec<(Option<PeriodicPoint>, bool)> = flagged
        .par_iter()
        .map(|&lo| {
            let st = g.stencil(lo, cell);
            let best = (0..9)
                .min_by(|&a, &b| st[a].norm().total_cmp(&st[b].norm()))
                .expect("nine stencil points");
            let start = lo
                + Vec2::new(
                    cell.x * (best % 3) as f64 / 2.0,
                    cell.y * (best / 3) as f64 / 2.0,
                );
            let (z, regular) = newton(&g, start, refine_iters);
            let (z, fallback) = if regular {
                (Some(z), false)
            } else {
                // no padding: quadrants of a dyadic cell keep exact dyadic
                // nodes, which is where the even-order zeros of the built-in
                // family sit
                (subdivide(&g, lo, cell), true)
            };
            let found = z.and_then(|z| {
                let residual = g.g(z).norm();
                (residual <= PERIODIC_TOL).then_some(PeriodicPoint {
                    point: z.mod_one(),
                    p,
                    w,
                    residual,
                })
            });
            if found.is_none() {
                log::debug!("periodic candidate near {lo} dropped (p={p}, w={w:?})");
            }
            (found, fallback)
        })
        .collect();

    let fallback_used = outcomes.iter().filter(|o| o.1).count();
    let dropped = outcomes.iter().filter(|o| o.0.is_none()).count();
    let mut points: Vec<PeriodicPoint> = Vec::new();
    for pt in outcomes.into_iter().filter_map(|o| o.0) {
        match points
            .iter_mut()
            .find(|q| torus_distance(q.point, pt.point) <= MERGE_TOL)
        {
            Some(q) if pt.residual < q.residual => *q = pt,
            Some(_) => {}
            None => points.push(pt),
        }
    }
    points.sort_by(|a, b| {
        a.point
            .y
            .total_cmp(&b.point.y)
            .then(a.point.x.total_cmp(&b.point.x))
    });
    Ok(PeriodicSearch {
        candidates: flagged.len(),
        dropped,
        fallback_used,
        points,
    })
}

/// Estimate of `sup ‖F(z) − z‖` from the grid points.
pub fn displacement_bound(map: &LiftMap, grid: GridSpec) -> f64 {
    grid.points()
        .map(|z| (map.eval(z) - z).norm())
        .fold(0.0, f64::max)
}

/// [`find_periodic_points`] over every `w` with `‖w‖∞ ≤ ceil(p·M)`, where `M`
/// is the grid estimate of the displacement bound.
pub fn find_periodic_points_all(
    map: &LiftMap,
    p: usize,
    grid: GridSpec,
    refine_iters: usize,
) -> Result<PeriodicSearch> {
    let m = displacement_bound(map, grid);
    if !m.is_finite() {
        return Err(Error::NonFinite { step: 1 });
    }
    let r = (p as f64 * m).ceil() as i64;
    let mut all = PeriodicSearch {
        points: Vec::new(),
        candidates: 0,
        dropped: 0,
        fallback_used: 0,
    };
    for wy in -r..=r {
        for wx in -r..=r {
            let s = find_periodic_points(map, p, (wx, wy), grid, refine_iters)?;
            all.points.extend(s.points);
            all.candidates += s.candidates;
            all.dropped += s.dropped;
            all.fallback_used += s.fallback_used;
        }
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum DeltaOutcome {
    /// Some sample got farther than ε from the center orbit at iterate `n`.
    Separated { n: usize, separation: f64 },
    /// No separation within `n_max` iterates.
    Exhausted { max_separation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum StabilityVerdict {
    /// The ball of radius `delta` stayed ε-close for all tested iterates.
    StableWitness {
        delta: f64,
    },
    /// Every tested ball separated; reported for the smallest δ.
    InstabilityWitness {
        delta: f64,
        n: usize,
        separation: f64,
    },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub point: PlanePoint,
    pub epsilon: f64,
    pub delta_tested: Vec<f64>,
    pub outcomes: Vec<DeltaOutcome>,
    pub n_max: usize,
    pub verdict: StabilityVerdict,
}

/// Relative rounding allowance when comparing a separation against ε.
pub const SEPARATION_RTOL: f64 = 1e-12;

/// Follows `samples` points on the circle of radius δ around `z` next to the
/// orbit of `z`, for each δ, and records the first iterate where one of them
/// is more than ε away. All δ share one seeded angular phase.
pub fn lyapunov_probe(
    map: &LiftMap,
    z: PlanePoint,
    epsilon: f64,
    deltas: &[f64],
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if !(epsilon > 0.0) || n_max == 0 || samples == 0 {
        return Err(Error::invalid(
            "probe needs epsilon > 0, n_max >= 1 and samples >= 1",
        ));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("probe radii must be positive"));
    }
    let center: Vec<PlanePoint> = Orbit::new(map, z).take(n_max).collect();
    if let Some(k) = center.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite { step: k + 1 });
    }
    let phase: f64 = rand::Rng::random(&mut sampling::task_rng(seed, 2));
    let outcomes: Vec<DeltaOutcome> = deltas
        .iter()
        .map(|&delta| {
            let ring = sampling::circle_samples(z, delta, samples, phase);
            let per_sample: Vec<DeltaOutcome> = ring
                .par_iter()
                .map(|&s| {
                    let mut max_sep = 0.0_f64;
                    for (k, (img, c)) in Orbit::new(map, s).zip(&center).enumerate() {
                        let sep = img.dist(*c);
                        // drifting lift coordinates carry rounding proportional to their size
                        let slack = SEPARATION_RTOL * c.x.abs().max(c.y.abs()).max(1.0);
                        if !(sep <= epsilon + slack) {
                            return DeltaOutcome::Separated {
                                n: k + 1,
                                separation: sep,
                            };
                        }
                        max_sep = max_sep.max(sep);
                    }
                    DeltaOutcome::Exhausted {
                        max_separation: max_sep,
                    }
                })
                .collect();
            per_sample
                .into_iter()
                .reduce(|a, b| match (a, b) {
                    (
                        DeltaOutcome::Separated { n: na, .. },
                        DeltaOutcome::Separated { n: nb, .. },
                    ) if nb < na => b,
                    (DeltaOutcome::Separated { .. }, _) => a,
                    (_, DeltaOutcome::Separated { .. }) => b,
                    (
                        DeltaOutcome::Exhausted { max_separation: x },
                        DeltaOutcome::Exhausted { max_separation: y },
                    ) => DeltaOutcome::Exhausted {
                        max_separation: x.max(y),
                    },
                })
                .expect("at least one sample")
        })
        .collect();

    let stable = deltas
        .iter()
        .zip(&outcomes)
        .filter(|(_, o)| matches!(o, DeltaOutcome::Exhausted { .. }))
        .map(|(d, _)| *d)
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.max(d)))
        });
    let verdict = match stable {
        Some(delta) => StabilityVerdict::StableWitness { delta },
        None => deltas
            .iter()
            .zip(&outcomes)
            .min_by(|a, b| a.0.total_cmp(b.0))
            .map_or(StabilityVerdict::Inconclusive, |(&delta, o)| match *o {
                DeltaOutcome::Separated { n, separation } => StabilityVerdict::InstabilityWitness {
                    delta,
                    n,
                    separation,
                },
                DeltaOutcome::Exhausted { .. } => unreachable!(),
            }),
    };
    Ok(StabilityReport {
        point: z,
        epsilon,
        delta_tested: deltas.to_vec(),
        outcomes,
        n_max,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadingFit {
    /// `(n, sup ⟨F^n z, v⊥⟩ − inf ⟨F^n z, v⊥⟩)` over the disk samples.
    pub extents: Vec<(usize, f64)>,
    pub fit: LinearFit,
}

/// Least-squares growth rate of the `v⊥`-extent of `F^n(Û)`.
pub fn spreading_slope(
    map: &LiftMap,
    disk: &Disk,
    v: Vec2,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<SpreadingFit> {
    if n_list.len() < 3 {
        return Err(Error::invalid(
            "spreading slope needs at least three iterate counts",
        ));
    }
    if samples < 2 {
        return Err(Error::invalid("spreading slope needs at least two samples"));
    }
    let len = v.norm();
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::invalid("direction must be nonzero"));
    }
    let vp = (v / len).perp();
    let pts = sampling::disk_boundary_and_interior(&disk.lifted(), samples, seed);
    let images = engine::images_along(map, &pts, n_list)?;
    let extents: Vec<(usize, f64)> = n_list
        .iter()
        .zip(&images)
        .map(|(&n, img)| {
            let (lo, hi) = img
                .iter()
                .map(|z| z.dot(vp))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s), hi.max(s))
                });
            (n, hi - lo)
        })
        .collect();
    let xs: Vec<f64> = extents.iter().map(|e| e.0 as f64).collect();
    let ys: Vec<f64> = extents.iter().map(|e| e.1).collect();
    let fit = engine::fit_line(&xs, &ys)?;
    Ok(SpreadingFit { extents, fit })
}
