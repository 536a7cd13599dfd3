use std::path::PathBuf;

use rotset_core::classify::map_defaults;
use rotset_core::dsl::parse_map;
use rotset_core::engine::GridSpec;
use rotset_core::lattice::{AffineSymmetry, ConjugacyTarget, UnimodularMatrix};
use rotset_core::rotation::{DichotomyParams, StructureTolerances};
use rotset_core::{DirectionalFrame, Disk, LiftMap, Vec2};

use crate::args::{ClassifyArgs, Cli, Command, Format, MapArgs, ToleranceArgs};
use crate::error::{CliError, Result};

/// A fully validated run.
#[derive(Debug)]
pub struct RunConfig {
    pub map: LiftMap,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub task: Task,
}

#[derive(Debug)]
pub enum Task {
    Portrait {
        starts: Vec<Vec2>,
        iterates: usize,
        burn_in: usize,
        width: usize,
        height: usize,
    },
    Rotset {
        grid: GridSpec,
        n: usize,
        cloud_out: Option<PathBuf>,
        tolerances: StructureTolerances,
    },
    Local {
        disk: Disk,
        n: usize,
        samples: usize,
        cloud_out: Option<PathBuf>,
        tolerances: StructureTolerances,
    },
    Classify {
        grid: GridSpec,
        radius: f64,
        params: DichotomyParams,
        cell_px: usize,
    },
    Islands {
        grid: GridSpec,
        radius: f64,
        params: DichotomyParams,
        pmax: usize,
        search_grid: GridSpec,
    },
    Periodic {
        period: usize,
        w: Option<(i64, i64)>,
        search_grid: GridSpec,
        newton_iters: usize,
    },
    Symmetry {
        label: String,
        sym: AffineSymmetry,
        target: ConjugacyTarget,
        samples: usize,
    },
    Transform(TransformTask),
    ValidateMap {
        samples: usize,
    },
}

#[derive(Debug)]
pub enum TransformTask {
    Hull {
        matrix: UnimodularMatrix,
        path: PathBuf,
    },
    Line {
        matrix: UnimodularMatrix,
        frame: DirectionalFrame,
    },
    Complete {
        column: (i64, i64),
    },
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        if cli.threads == Some(0) {
            return Err(CliError::config("--threads must be at least 1"));
        }
        let validate_only = matches!(cli.command, Command::ValidateMap { .. });
        let needs_map = !matches!(cli.command, Command::Transform { .. });
        let map = if needs_map {
            load_map(&cli.map, validate_only)?
        } else {
            LiftMap::identity()
        };
        let (task, default_format, allowed) = build_task(&cli.command, &map)?;
        let format = cli.format.unwrap_or(default_format);
        if !allowed.contains(&format) {
            return Err(CliError::config(format!(
                "{} does not write {format:?} output",
                cli.command.name()
            )));
        }
        Ok(Self {
            map,
            seed: cli.seed,
            threads: cli.threads,
            out: cli.out.clone(),
            format,
            task,
        })
    }
}

/// Builds the lift. `unchecked` skips the lift test so `validate-map` can
/// report on maps that fail it.
pub fn load_map(args: &MapArgs, unchecked: bool) -> Result<LiftMap> {
    let source = match (&args.map, &args.map_file) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "give either --map or --map-file, not both",
            ))
        }
        (Some(s), None) => Some(s.clone()),
        (None, Some(path)) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?,
        ),
        (None, None) => None,
    };
    match (source, args.alpha, args.beta) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::config(
            "--alpha/--beta cannot be combined with a map source",
        )),
        (Some(src), None, None) => {
            let def = parse_map(&src).map_err(|e| CliError::config(format!("map source: {e}")))?;
            if unchecked {
                Ok(LiftMap::from_definition_unchecked(def))
            } else {
                Ok(LiftMap::from_definition(def)?)
            }
        }
        (None, Some(a), Some(b)) if a.is_finite() && b.is_finite() => Ok(LiftMap::mz(a, b)),
        (None, Some(_), Some(_)) => Err(CliError::config("--alpha and --beta must be finite")),
        (None, _, _) => Err(CliError::config(
            "no map given: use --alpha and --beta, --map or --map-file",
        )),
    }
}

type TaskSpec = (Task, Format, &'static [Format]);

fn build_task(command: &Command, map: &LiftMap) -> Result<TaskSpec> {
    use Format::*;
    Ok(match command {
        Command::Portrait {
            grid,
            start,
            iterates,
            burn_in,
            size,
        } => {
            let starts = if start.is_empty() {
                parse_grid(grid)?.points().collect()
            } else {
                start
                    .iter()
                    .map(|s| parse_point(s))
                    .collect::<Result<_>>()?
            };
            if burn_in >= iterates {
                return Err(CliError::config(
                    "--burn-in must be smaller than --iterates",
                ));
            }
            let (width, height) = parse_dims(size)?;
            (
                Task::Portrait {
                    starts,
                    iterates: *iterates,
                    burn_in: *burn_in,
                    width,
                    height,
                },
                Ppm,
                &[Ppm],
            )
        }
        Command::Rotset {
            grid,
            n,
            cloud_out,
            tolerances,
        } => (
            Task::Rotset {
                grid: parse_grid(grid)?,
                n: positive(*n, "--n")?,
                cloud_out: cloud_out.clone(),
                tolerances: structure_tolerances(tolerances)?,
            },
            Json,
            &[Json, Csv],
        ),
        Command::Local {
            center,
            radius,
            n,
            samples,
            cloud_out,
            tolerances,
        } => (
            Task::Local {
                disk: Disk::new(parse_point(center)?, *radius)?,
                n: positive(*n, "--n")?,
                samples: positive(*samples, "--samples")?,
                cloud_out: cloud_out.clone(),
                tolerances: structure_tolerances(tolerances)?,
            },
            Json,
            &[Json, Csv],
        ),
        Command::Classify { params, cell_px } => {
            let (grid, radius, dichotomy) = classify_params(params)?;
            (
                Task::Classify {
                    grid,
                    radius,
                    params: dichotomy,
                    cell_px: positive(*cell_px, "--cell-px")?,
                },
                Csv,
                &[Csv, Json, Ppm],
            )
        }
        Command::Islands {
            params,
            pmax,
            search_grid,
        } => {
            let (grid, radius, dichotomy) = classify_params(params)?;
            (
                Task::Islands {
                    grid,
                    radius,
                    params: dichotomy,
                    pmax: positive(*pmax, "--pmax")?,
                    search_grid: parse_grid(search_grid)?,
                },
                Json,
                &[Json],
            )
        }
        Command::Periodic {
            period,
            w,
            search_grid,
            newton_iters,
        } => (
            Task::Periodic {
                period: positive(*period, "--period")?,
                w: w.as_deref().map(parse_int_pair).transpose()?,
                search_grid: parse_grid(search_grid)?,
                newton_iters: *newton_iters,
            },
            Csv,
            &[Csv, Json],
        ),
        Command::Symmetry {
            sym,
            target,
            samples,
        } => {
            let target: ConjugacyTarget = target.parse()?;
            if target == ConjugacyTarget::Inverse && !map.has_inverse() {
                return Err(CliError::config(
                    "--target inverse needs a map with an inverse",
                ));
            }
            (
                Task::Symmetry {
                    label: sym.clone(),
                    sym: sym.parse()?,
                    target,
                    samples: positive(*samples, "--samples")?,
                },
                Json,
                &[Json],
            )
        }
        Command::Transform {
            matrix,
            hull,
            line,
            complete,
        } => {
            let matrix = matrix
                .as_deref()
                .map(str::parse::<UnimodularMatrix>)
                .transpose()?;
            let task = match (hull, line, complete, matrix) {
                (Some(path), None, None, Some(matrix)) => TransformTask::Hull {
                    matrix,
                    path: path.clone(),
                },
                (None, Some(line), None, Some(matrix)) => TransformTask::Line {
                    matrix,
                    frame: parse_line(line)?,
                },
                (None, None, Some(w), None) => TransformTask::Complete {
                    column: parse_int_pair(w)?,
                },
                _ => return Err(CliError::config(
                    "transform takes --matrix with one of --hull or --line, or --complete alone",
                )),
            };
            (Task::Transform(task), Json, &[Json])
        }
        Command::ValidateMap { samples } => (
            Task::ValidateMap {
                samples: positive(*samples, "--samples")?,
            },
            Json,
            &[Json],
        ),
    })
}

fn classify_params(args: &ClassifyArgs) -> Result<(GridSpec, f64, DichotomyParams)> {
    let schedule = parse_list(&args.schedule)?;
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[0] >= w[1]) || schedule[0] == 0 {
        return Err(CliError::config(
            "--schedule needs at least two ascending positive counts",
        ));
    }
    if !(args.area_tol > 0.0) {
        return Err(CliError::config("--area-tol must be positive"));
    }
    Disk::new(Vec2::ZERO, args.radius)?;
    let params = DichotomyParams {
        schedule,
        tolerances: structure_tolerances(&args.tolerances)?,
        area_tol: args.area_tol,
        samples: positive(args.samples, "--samples")?,
        ..map_defaults()
    };
    Ok((parse_grid(&args.grid)?, args.radius, params))
}

fn structure_tolerances(args: &ToleranceArgs) -> Result<StructureTolerances> {
    if !(args.singleton_tol > 0.0 && args.rational_tol > 0.0) || args.qmax < 1 {
        return Err(CliError::config(
            "tolerances must be positive and --qmax at least 1",
        ));
    }
    Ok(StructureTolerances {
        singleton: args.singleton_tol,
        rational: args.rational_tol,
        qmax: args.qmax,
    })
}

fn positive(v: usize, flag: &str) -> Result<usize> {
    if v == 0 {
        Err(CliError::config(format!("{flag} must be at least 1")))
    } else {
        Ok(v)
    }
}

/// `NXxNY`.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let (nx, ny) = parse_dims(s)?;
    Ok(GridSpec::new(nx, ny)?)
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::config(format!("'{s}' is not of the form NxM with positive N, M"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_floats(s: &str, count: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("'{s}' is not a list of {count} numbers")))?;
    if values.len() != count || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!(
            "'{s}' is not a list of {count} finite numbers"
        )));
    }
    Ok(values)
}

/// `x,y`.
pub fn parse_point(s: &str) -> Result<Vec2> {
    let v = parse_floats(s, 2)?;
    Ok(Vec2::new(v[0], v[1]))
}

fn parse_line(s: &str) -> Result<DirectionalFrame> {
    let v = parse_floats(s, 3)?;
    Ok(DirectionalFrame::new(
        Vec2::new(v[0], v[1]),
        v[2],
        0.0,
        0.0,
    )?)
}

fn parse_int_pair(s: &str) -> Result<(i64, i64)> {
    let bad = || CliError::config(format!("'{s}' is not an integer pair a,b"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::config(format!("'{s}' is not a list of counts")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_pairs() {
        assert_eq!(parse_dims("200x150").unwrap(), (200, 150));
        assert!(parse_dims("0x5").is_err());
        assert!(parse_dims("12").is_err());
        assert_eq!(parse_point("-0.5, 0.25").unwrap(), Vec2::new(-0.5, 0.25));
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("nan,0").is_err());
        assert_eq!(parse_int_pair("-1,0").unwrap(), (-1, 0));
        assert_eq!(parse_list("1000, 2000").unwrap(), vec![1000, 2000]);
    }

    #[test]
    fn map_sources_are_exclusive() {
        let both = MapArgs {
            map: Some("x ; y".into()),
            alpha: Some(0.5),
            ..MapArgs::default()
        };
        assert!(load_map(&both, false).is_err());
        assert!(load_map(&MapArgs::default(), false).is_err());
        let half = MapArgs {
            alpha: Some(0.5),
            ..MapArgs::default()
        };
        assert!(load_map(&half, false).is_err());
    }

    #[test]
    fn non_lift_sources_only_pass_unchecked() {
        let args = MapArgs {
            map: Some("x + sin(pi*x) ; y".into()),
            ..MapArgs::default()
        };
        assert!(matches!(load_map(&args, false), Err(CliError::Config(_))));
        assert!(load_map(&args, true).is_ok());
    }
}
