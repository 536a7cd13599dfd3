//! Command-line surface. Values are kept as strings or plain numbers here and
//! validated into a [`crate::config::RunConfig`] before anything runs.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rotset",
    version,
    about = "Rotation sets and elliptic/chaotic classification for torus maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub map: MapArgs,

    /// Seed for every randomized step (decimal or 0x-prefixed hex).
    #[arg(long, global = true, value_parser = parse_seed, default_value = "0x524F5441")]
    pub seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Ppm,
}

/// Which lift to use: the builtin family or an expression-language source.
#[derive(Debug, Default, Args)]
pub struct MapArgs {
    /// Map source in the expression language, e.g. "x + 0.1 ; y + 0.2".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub map: Option<String>,

    /// File holding a map source.
    #[arg(long, global = true)]
    pub map_file: Option<PathBuf>,

    /// α of the builtin family.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,

    /// β of the builtin family.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Diameter below which a hull counts as a single vector.
    #[arg(long, default_value_t = 1e-3)]
    pub singleton_tol: f64,

    /// Tolerance of the rational test `|q x - p| <= tol`.
    #[arg(long, default_value_t = 1e-4)]
    pub rational_tol: f64,

    /// Largest denominator tried by the rational test.
    #[arg(long, default_value_t = 64)]
    pub qmax: i64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Grid of disk centers, `NXxNY`.
    #[arg(long, default_value = "40x40")]
    pub grid: String,

    /// Disk radius around each grid point.
    #[arg(long, default_value_t = 0.01)]
    pub radius: f64,

    /// Ascending iterate counts; the last two decide each label.
    #[arg(long, default_value = "1000,2000")]
    pub schedule: String,

    /// Sample points per disk.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,

    /// Hull area from which a subset counts as having interior.
    #[arg(long, default_value_t = 1e-4)]
    pub area_tol: f64,

    #[command(flatten)]
    pub tolerances: ToleranceArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase portrait: orbit hit counts on the torus as a PGM image.
    Portrait {
        /// Grid of starting points, `NXxNY`; ignored when --start is given.
        #[arg(long, default_value = "40x40")]
        grid: String,

        /// Explicit starting point `x,y`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        start: Vec<String>,

        /// Iterates per starting point.
        #[arg(long, default_value_t = 1000)]
        iterates: usize,

        /// Leading iterates left out of the image.
        #[arg(long, default_value_t = 100)]
        burn_in: usize,

        /// Image size in pixels, `WxH`.
        #[arg(long, default_value = "800x800")]
        size: String,
    },

    /// Global rotation set estimate from a grid sweep.
    Rotset {
        #[arg(long, default_value = "200x200")]
        grid: String,

        /// Iterates per starting point.
        #[arg(long, default_value_t = 2000)]
        n: usize,

        /// Also write the rotation-vector cloud as CSV to this file.
        #[arg(long)]
        cloud_out: Option<PathBuf>,

        #[command(flatten)]
        tolerances: ToleranceArgs,
    },

    /// Local rotation subset over a disk.
    Local {
        /// Disk center `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        center: String,

        #[arg(long, default_value_t = 0.03)]
        radius: f64,

        #[arg(long, default_value_t = 5000)]
        n: usize,

        #[arg(long, default_value_t = 256)]
        samples: usize,

        #[arg(long)]
        cloud_out: Option<PathBuf>,

        #[command(flatten)]
        tolerances: ToleranceArgs,
    },

    /// Elliptic/chaotic label for a disk around every grid point.
    Classify {
        #[command(flatten)]
        params: ClassifyArgs,

        /// Pixels per grid cell in the PPM overlay.
        #[arg(long, default_value_t = 10)]
        cell_px: usize,
    },

    /// Elliptic islands of a classification map, with periodic points.
    Islands {
        #[command(flatten)]
        params: ClassifyArgs,

        /// Largest period searched for each island.
        #[arg(long, default_value_t = 4)]
        pmax: usize,

        /// Cell grid for the periodic-point search, `NXxNY`.
        #[arg(long, default_value = "64x64")]
        search_grid: String,
    },

    /// Points with `F^p(z) = z + w`.
    Periodic {
        #[arg(short = 'p', long)]
        period: usize,

        /// Integer displacement `wx,wy`; every feasible one when omitted.
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,

        #[arg(long, default_value = "64x64")]
        search_grid: String,

        #[arg(long, default_value_t = 50)]
        newton_iters: usize,
    },

    /// Checks `sym⁻¹ ∘ F ∘ sym` against `F` or `F⁻¹`.
    Symmetry {
        /// `R`, `S`, `T`, or an affine map `a,b;c,d[;tx,ty]`.
        #[arg(long)]
        sym: String,

        /// `self` or `inverse`.
        #[arg(long, default_value = "self")]
        target: String,

        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },

    /// Coordinate changes by a unimodular matrix.
    Transform {
        /// Matrix `a,b;c,d` with determinant 1.
        #[arg(long, allow_hyphen_values = true)]
        matrix: Option<String>,

        /// JSON file with a hull (a rotset/local report or a vertex array) to map by `M⁻¹`.
        #[arg(long)]
        hull: Option<PathBuf>,

        /// Line `vx,vy,lambda` to map by `M⁻¹`.
        #[arg(long, allow_hyphen_values = true)]
        line: Option<String>,

        /// Primitive integer vector `a,b` to complete to a unimodular matrix.
        #[arg(long, allow_hyphen_values = true)]
        complete: Option<String>,
    },

    /// Checks that a map is a lift and, if it has one, its inverse.
    ValidateMap {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Portrait { .. } => "portrait",
            Command::Rotset { .. } => "rotset",
            Command::Local { .. } => "local",
            Command::Classify { .. } => "classify",
            Command::Islands { .. } => "islands",
            Command::Periodic { .. } => "periodic",
            Command::Symmetry { .. } => "symmetry",
            Command::Transform { .. } => "transform",
            Command::ValidateMap { .. } => "validate-map",
        }
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("bad seed '{s}': {e}"))
}
