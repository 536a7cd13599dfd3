use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rotset_core::classify::{
    attach_periodic_points, classification_map, extract_islands, find_periodic_points,
    find_periodic_points_all, IslandRegion,
};
use rotset_core::engine::Orbit;
use rotset_core::geometry::ConvexPolygon;
use rotset_core::io::{
    to_json, write_cloud_csv, write_labels_csv, write_periodic_csv, LocalReport, RotationSetReport,
};
use rotset_core::lattice::{
    check_conjugacy, complete_to_unimodular, line_frame_transform, transform_polygon,
    ConjugacyTarget, LineTransform,
};
use rotset_core::lift::{inverse_check, translate_commutation_check};
use rotset_core::rotation::{estimate_rotation_set, local_rotation_subset};
use rotset_core::{LiftMap, Vec2};

use crate::args::Format;
use crate::config::{RunConfig, Task, TransformTask};
use crate::error::{CliError, Result};
use crate::image::{label_overlay, PortraitImage};

/// Lift-test tolerance for `validate-map`.
pub const LIFT_TOL: f64 = 1e-9;

/// Bytes bound for one destination; `None` means standard output.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

/// What a run produced, plus an error to raise once everything is written.
#[derive(Debug)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

impl RunOutput {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandsReport {
    pub map: String,
    pub grid: rotset_core::engine::GridSpec,
    pub disk_radius: f64,
    pub pmax: usize,
    pub islands: Vec<IslandRegion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub map: String,
    pub symmetry: String,
    pub target: ConjugacyTarget,
    pub samples: usize,
    pub seed: u64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullTransformReport {
    pub matrix: [[i64; 2]; 2],
    pub hull: ConvexPolygon,
    pub area: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineTransformReport {
    pub matrix: [[i64; 2]; 2],
    pub line: LineTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub column: (i64, i64),
    pub matrix: [[i64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapValidation {
    pub map: String,
    pub samples: usize,
    pub seed: u64,
    pub lift_error: f64,
    pub is_lift: bool,
    pub has_inverse: bool,
    /// Largest `‖F⁻¹(F(z)) − z‖`, when an inverse exists.
    pub inverse_error: Option<f64>,
}

/// Runs the task inside a pool of the configured size.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?
            .install(|| execute(config)),
        None => execute(config),
    }
}

fn main_output(config: &RunConfig, bytes: Vec<u8>) -> Artifact {
    Artifact {
        path: config.out.clone(),
        bytes,
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    Ok(to_json(value)?.into_bytes())
}

fn execute(config: &RunConfig) -> Result<RunOutput> {
    let map = &config.map;
    let label = map.to_string();
    match &config.task {
        Task::Portrait {
            starts,
            iterates,
            burn_in,
            width,
            height,
        } => {
            let image = portrait(map, starts, *iterates, *burn_in, *width, *height)?;
            Ok(RunOutput::ok(vec![main_output(config, image.to_pgm())]))
        }
        Task::Rotset {
            grid,
            n,
            cloud_out,
            tolerances,
        } => {
            let est = estimate_rotation_set(map, *grid, *n)?;
            let mut artifacts = Vec::new();
            let main = match config.format {
                Format::Csv => cloud_csv(&est.sample_cloud)?,
                _ => json_bytes(&RotationSetReport::new(label, &est, tolerances))?,
            };
            artifacts.push(main_output(config, main));
            if let Some(path) = cloud_out {
                artifacts.push(Artifact {
                    path: Some(path.clone()),
                    bytes: cloud_csv(&est.sample_cloud)?,
                });
            }
            Ok(RunOutput::ok(artifacts))
        }
        Task::Local {
            disk,
            n,
            samples,
            cloud_out,
            tolerances,
        } => {
            let est = local_rotation_subset(map, disk, *n, *samples, config.seed)?;
            let mut artifacts = Vec::new();
            let main = match config.format {
                Format::Csv => cloud_csv(&est.cloud)?,
                _ => json_bytes(&LocalReport::new(label, &est, config.seed, tolerances))?,
            };
            artifacts.push(main_output(config, main));
            if let Some(path) = cloud_out {
                artifacts.push(Artifact {
                    path: Some(path.clone()),
                    bytes: cloud_csv(&est.cloud)?,
                });
            }
            Ok(RunOutput::ok(artifacts))
        }
        Task::Classify {
            grid,
            radius,
            params,
            cell_px,
        } => {
            let params = rotset_core::rotation::DichotomyParams {
                seed: config.seed,
                ..params.clone()
            };
            let labels = classification_map(map, *grid, *radius, &params)?;
            let bytes = match config.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_labels_csv(&mut buf, &labels)?;
                    buf
                }
                Format::Json => json_bytes(&labels)?,
                Format::Ppm => label_overlay(&labels, *cell_px),
            };
            Ok(RunOutput::ok(vec![main_output(config, bytes)]))
        }
        Task::Islands {
            grid,
            radius,
            params,
            pmax,
            search_grid,
        } => {
            let params = rotset_core::rotation::DichotomyParams {
                seed: config.seed,
                ..params.clone()
            };
            let labels = classification_map(map, *grid, *radius, &params)?;
            let mut islands = extract_islands(&labels, params.tolerances.singleton);
            attach_periodic_points(map, &mut islands, *pmax, *search_grid, &params.tolerances)?;
            let report = IslandsReport {
                map: label,
                grid: *grid,
                disk_radius: *radius,
                pmax: *pmax,
                islands,
            };
            Ok(RunOutput::ok(vec![main_output(
                config,
                json_bytes(&report)?,
            )]))
        }
        Task::Periodic {
            period,
            w,
            search_grid,
            newton_iters,
        } => {
            let search = match w {
                Some(w) => find_periodic_points(map, *period, *w, *search_grid, *newton_iters)?,
                None => find_periodic_points_all(map, *period, *search_grid, *newton_iters)?,
            };
            let bytes = match config.format {
                Format::Json => json_bytes(&search)?,
                _ => {
                    let mut buf = Vec::new();
                    write_periodic_csv(&mut buf, &search.points)?;
                    buf
                }
            };
            Ok(RunOutput::ok(vec![main_output(config, bytes)]))
        }
        Task::Symmetry {
            label: sym_label,
            sym,
            target,
            samples,
        } => {
            let max_error = check_conjugacy(map, sym, *target, *samples, config.seed)?;
            let report = SymmetryReport {
                map: label,
                symmetry: sym_label.clone(),
                target: *target,
                samples: *samples,
                seed: config.seed,
                max_error,
            };
            Ok(RunOutput::ok(vec![main_output(
                config,
                json_bytes(&report)?,
            )]))
        }
        Task::Transform(t) => {
            let bytes = match t {
                TransformTask::Hull { matrix, path } => {
                    let hull = transform_polygon(&read_hull(path)?, matrix);
                    json_bytes(&HullTransformReport {
                        matrix: matrix.rows(),
                        area: hull.area(),
                        diameter: hull.diameter(),
                        hull,
                    })?
                }
                TransformTask::Line { matrix, frame } => json_bytes(&LineTransformReport {
                    matrix: matrix.rows(),
                    line: line_frame_transform(frame, matrix),
                })?,
                TransformTask::Complete { column } => json_bytes(&CompletionReport {
                    column: *column,
                    matrix: complete_to_unimodular(*column)?.rows(),
                })?,
            };
            Ok(RunOutput::ok(vec![main_output(config, bytes)]))
        }
        Task::ValidateMap { samples } => {
            let report = validate_map(map, *samples, config.seed)?;
            let failure = (!report.is_lift).then(|| {
                CliError::config(format!(
                    "map is not a lift: translation error {:e} exceeds {LIFT_TOL:e}",
                    report.lift_error
                ))
            });
            Ok(RunOutput {
                artifacts: vec![main_output(config, json_bytes(&report)?)],
                failure,
            })
        }
    }
}

/// Orbit hit counts after `burn_in`, accumulated in start order.
pub fn portrait(
    map: &LiftMap,
    starts: &[Vec2],
    iterates: usize,
    burn_in: usize,
    width: usize,
    height: usize,
) -> Result<PortraitImage> {
    let mut image = PortraitImage::new(width, height)?;
    let hits: Vec<Vec<usize>> = starts
        .par_iter()
        .map(|&z| {
            let mut pixels = Vec::with_capacity(iterates - burn_in);
            for (k, w) in Orbit::new(map, z).take(iterates).enumerate() {
                if !w.is_finite() {
                    return Err(CliError::Numeric(rotset_core::Error::NonFinite {
                        step: k + 1,
                    }));
                }
                if k >= burn_in {
                    pixels.push(image.pixel(w));
                }
            }
            Ok(pixels)
        })
        .collect::<Result<_>>()?;
    for p in hits.into_iter().flatten() {
        image.hit(p);
    }
    Ok(image)
}

fn cloud_csv(cloud: &[Vec2]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_cloud_csv(&mut buf, cloud)?;
    Ok(buf)
}

/// Accepts a report with a `hull` field or a bare vertex array.
fn read_hull(path: &Path) -> Result<ConvexPolygon> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let hull = value.get("hull").cloned().unwrap_or(value);
    serde_json::from_value(hull)
        .map_err(|e| CliError::config(format!("{}: no hull vertices: {e}", path.display())))
}

pub fn validate_map(map: &LiftMap, samples: usize, seed: u64) -> Result<MapValidation> {
    let lift_error = translate_commutation_check(map, samples, seed)?;
    let inverse_error = inverse_check(map, samples, seed);
    Ok(MapValidation {
        map: map.to_string(),
        samples,
        seed,
        lift_error,
        is_lift: lift_error <= LIFT_TOL,
        has_inverse: map.has_inverse(),
        inverse_error,
    })
}

/// Writes every artifact; standard output gets them in order.
pub fn write_artifacts(artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        match &a.path {
            Some(path) => std::fs::write(path, &a.bytes)
                .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&a.bytes)?;
                out.flush()?;
            }
        }
    }
    Ok(())
}
