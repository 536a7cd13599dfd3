//! Orbit iteration, displacement averages, deviations and parallel grid sweeps.
//!
//! Every parallel routine here gathers into an index-ordered buffer, so
//! results are bit-identical for any rayon pool size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, hull_diameter};
use crate::lattice::UnimodularMatrix;
use crate::lift::{Disk, LiftMap, PlanePoint, RotationVector, Vec2};
use crate::sampling;

/// Default number of disk samples for diameter and extent probes.
pub const DEFAULT_DIAMETER_SAMPLES: usize = 64;

/// Successive iterates `F(z), F²(z), …` on the cover.
///
/// Conjugated lifts are iterated in the base coordinates and mapped back per
/// step, so rounding from `M M⁻¹` never feeds into the next iterate.
pub struct Orbit<'a> {
    base: &'a LiftMap,
    frame: Option<UnimodularMatrix>,
    state: PlanePoint,
}

impl<'a> Orbit<'a> {
    pub fn new(map: &'a LiftMap, z: PlanePoint) -> Self {
        let (base, frame) = map.split_conjugation();
        let state = frame.map_or(z, |c| c.apply(z));
        Self { base, frame, state }
    }

    /// Current point in the caller's coordinates.
    pub fn current(&self) -> PlanePoint {
        self.frame
            .map_or(self.state, |c| c.apply_inverse(self.state))
    }

    /// Advances `n` steps; `step_offset` only labels errors.
    fn advance(&mut self, n: usize, step_offset: usize) -> Result<()> {
        for k in 0..n {
            self.state = self.base.eval(self.state);
            if !self.state.is_finite() {
                return Err(Error::NonFinite {
                    step: step_offset + k + 1,
                });
            }
        }
        Ok(())
    }
}

impl Iterator for Orbit<'_> {
    type Item = PlanePoint;

    fn next(&mut self) -> Option<PlanePoint> {
        self.state = self.base.eval(self.state);
        Some(self.current())
    }
}

/// `F^n(z)`. Fails at the first non-finite iterate.
pub fn iterate(map: &LiftMap, z: PlanePoint, n: usize) -> Result<PlanePoint> {
    let mut orbit = Orbit::new(map, z);
    orbit.advance(n, 0)?;
    Ok(orbit.current())
}

/// `φ_n(z) = (F^n(z) − z) / n`.
pub fn phi_n(map: &LiftMap, z: PlanePoint, n: usize) -> Result<RotationVector> {
    if n == 0 {
        return Err(Error::invalid("phi_n needs n >= 1"));
    }
    Ok((iterate(map, z, n)? - z) / n as f64)
}

/// `D_n(z, ρ) = F^n(z) − z − nρ`.
pub fn deviation(map: &LiftMap, z: PlanePoint, rho: RotationVector, n: usize) -> Result<Vec2> {
    if n == 0 {
        return Err(Error::invalid("deviation needs n >= 1"));
    }
    Ok(iterate(map, z, n)? - z - rho * n as f64)
}

/// `D^v_n(z, ρ) = ⟨D_n(z, ρ), v⟩`. `v` is used as given, without normalizing.
pub fn deviation_along(
    map: &LiftMap,
    z: PlanePoint,
    rho: RotationVector,
    n: usize,
    v: Vec2,
) -> Result<f64> {
    Ok(deviation(map, z, rho, n)?.dot(v))
}

/// A regular grid of starting points on `[0,1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Position inside each cell, in cell units.
    pub offset: Vec2,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        Self::with_offset(nx, ny, Vec2::ZERO)
    }

    pub fn with_offset(nx: usize, ny: usize, offset: Vec2) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid(format!("grid {nx}x{ny} is empty")));
        }
        if !(offset.is_finite() && (0.0..1.0).contains(&offset.x) && (0.0..1.0).contains(&offset.y))
        {
            return Err(Error::invalid("grid offset must lie in [0,1)^2"));
        }
        Ok(Self { nx, ny, offset })
    }

    /// Cell centers: offset `(1/2, 1/2)`.
    pub fn centered(nx: usize, ny: usize) -> Result<Self> {
        Self::with_offset(nx, ny, Vec2::new(0.5, 0.5))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_size(&self) -> Vec2 {
        Vec2::new(1.0 / self.nx as f64, 1.0 / self.ny as f64)
    }

    pub fn point(&self, ix: usize, iy: usize) -> PlanePoint {
        Vec2::new(
            (ix as f64 + self.offset.x) / self.nx as f64,
            (iy as f64 + self.offset.y) / self.ny as f64,
        )
    }

    /// Row-major index order: `index = iy * nx + ix`.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn points(&self) -> impl Iterator<Item = PlanePoint> + '_ {
        (0..self.len()).map(|i| {
            let (ix, iy) = self.coords(i);
            self.point(ix, iy)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ix: usize,
    pub iy: usize,
    pub start: PlanePoint,
    /// `None` when the orbit left the finite range.
    pub phi: Option<RotationVector>,
    /// Post-burn-in iterates reduced mod 1, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<PlanePoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub map: String,
    pub grid: GridSpec,
    pub n: usize,
    pub burn_in: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// All finite φ values in grid order.
    pub fn values(&self) -> Vec<RotationVector> {
        self.points.iter().filter_map(|p| p.phi).collect()
    }

    pub fn flagged(&self) -> usize {
        self.points.iter().filter(|p| p.phi.is_none()).count()
    }
}

fn window_average(
    map: &LiftMap,
    z: PlanePoint,
    n: usize,
    burn_in: usize,
    stride: Option<usize>,
) -> Result<(RotationVector, Option<Vec<PlanePoint>>)> {
    let mut orbit = Orbit::new(map, z);
    orbit.advance(burn_in, 0)?;
    let from = orbit.current();
    let window = n - burn_in;
    let trajectory = match stride {
        None => {
            orbit.advance(window, burn_in)?;
            None
        }
        Some(s) => {
            let mut pts = Vec::with_capacity(window / s + 1);
            for k in 0..window {
                orbit.advance(1, burn_in + k)?;
                if (k + 1) % s == 0 {
                    pts.push(orbit.current().mod_one());
                }
            }
            Some(pts)
        }
    };
    Ok(((orbit.current() - from) / window as f64, trajectory))
}

fn sweep_impl(
    map: &LiftMap,
    grid: GridSpec,
    n: usize,
    burn_in: usize,
    stride: Option<usize>,
) -> Result<SweepResult> {
    if n <= burn_in {
        return Err(Error::invalid(format!(
            "sweep needs n > burn_in, got n={n}, burn_in={burn_in}"
        )));
    }
    if stride == Some(0) {
        return Err(Error::invalid("trajectory stride must be >= 1"));
    }
    let points = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = grid.coords(i);
            let start = grid.point(ix, iy);
            let (phi, trajectory) = match window_average(map, start, n, burn_in, stride) {
                Ok((phi, t)) => (Some(phi), t),
                Err(e) => {
                    log::debug!("sweep point ({ix}, {iy}) flagged: {e}");
                    (None, None)
                }
            };
            SweepPoint {
                ix,
                iy,
                start,
                phi,
                trajectory,
            }
        })
        .collect();
    Ok(SweepResult {
        map: map.to_string(),
        grid,
        n,
        burn_in,
        points,
    })
}

/// Average displacement `(F^n(z) − F^{burn_in}(z)) / (n − burn_in)` at every grid point.
pub fn sweep(map: &LiftMap, grid: GridSpec, n: usize, burn_in: usize) -> Result<SweepResult> {
    sweep_impl(map, grid, n, burn_in, None)
}

/// Like [`sweep`], also keeping every `stride`-th post-burn-in iterate mod 1.
pub fn sweep_with_trajectories(
    map: &LiftMap,
    grid: GridSpec,
    n: usize,
    burn_in: usize,
    stride: usize,
) -> Result<SweepResult> {
    sweep_impl(map, grid, n, burn_in, Some(stride))
}

fn check_schedule(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::invalid("iterate schedule is empty"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "iterate schedule must be strictly ascending",
        ));
    }
    Ok(())
}

/// Images `F^n(z)` of every point at every `n` of an ascending schedule.
/// The result is indexed `[schedule position][point]`.
pub fn images_along(
    map: &LiftMap,
    points: &[PlanePoint],
    n_list: &[usize],
) -> Result<Vec<Vec<PlanePoint>>> {
    check_schedule(n_list)?;
    let per_point: Vec<Vec<PlanePoint>> = points
        .par_iter()
        .map(|&z| {
            let mut orbit = Orbit::new(map, z);
            let mut done = 0;
            n_list
                .iter()
                .map(|&n| {
                    orbit.advance(n - done, done)?;
                    done = n;
                    Ok(orbit.current())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..n_list.len())
        .map(|k| per_point.iter().map(|row| row[k]).collect())
        .collect())
}

/// Diameter of `F^n(Û)` for each `n`, approximated by the max pairwise
/// distance of seeded boundary and interior samples of the lifted disk.
pub fn orbit_diameter_growth(
    map: &LiftMap,
    disk: &Disk,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if samples < 2 {
        return Err(Error::invalid("diameter probe needs at least 2 samples"));
    }
    let pts = sampling::disk_boundary_and_interior(&disk.lifted(), samples, seed);
    let images = images_along(map, &pts, n_list)?;
    Ok(n_list
        .iter()
        .zip(&images)
        .map(|(&n, img)| (n, hull_diameter(&convex_hull(img))))
        .collect())
}

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    /// `rms` divided by the mean absolute fitted value (0 when both vanish).
    pub relative_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("line fit needs at least two (x, y) pairs"));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("line fit needs distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted = |x: f64| intercept + slope * x;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - fitted(x)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let scale = xs.iter().map(|&x| fitted(x).abs()).sum::<f64>() / m;
    let relative_residual = if rms == 0.0 { 0.0 } else { rms / scale };
    Ok(LinearFit {
        slope,
        intercept,
        rms,
        relative_residual,
    })
}
