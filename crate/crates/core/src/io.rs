//! CSV and JSON output schemas, with readers for the CSV ones.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classify::{LabelGrid, LabelKind, PeriodicPoint};
use crate::engine::{GridSpec, SweepResult};
use crate::error::Result;
use crate::geometry::ConvexPolygon;
use crate::lift::{Disk, RotationVector};
use crate::rotation::{
    LocalRotationEstimate, RotationSetEstimate, StructureTolerances, StructureVerdict,
};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const SWEEP_HEADER: [&str; 6] = ["ix", "iy", "x0", "y0", "vx", "vy"];
pub const LABEL_HEADER: [&str; 7] = ["ix", "iy", "label", "vx", "vy", "diameter", "area"];
pub const CLOUD_HEADER: [&str; 2] = ["vx", "vy"];
pub const PERIODIC_HEADER: [&str; 6] = ["x", "y", "p", "wx", "wy", "residual"];

/// One sweep row; `vx`/`vy` are empty for flagged points.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepRow {
    pub ix: usize,
    pub iy: usize,
    pub x0: f64,
    pub y0: f64,
    pub vx: Option<f64>,
    pub vy: Option<f64>,
}

pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for p in &sweep.points {
        w.write_record([
            p.ix.to_string(),
            p.iy.to_string(),
            fmt_f64(p.start.x),
            fmt_f64(p.start.y),
            opt(p.phi.map(|v| v.x)),
            opt(p.phi.map(|v| v.y)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    read_rows(input)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LabelRow {
    pub ix: usize,
    pub iy: usize,
    pub label: LabelKind,
    pub vx: Option<f64>,
    pub vy: Option<f64>,
    pub diameter: f64,
    pub area: f64,
}

pub fn write_labels_csv<W: Write>(out: W, labels: &LabelGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LABEL_HEADER)?;
    for (i, l) in labels.labels.iter().enumerate() {
        let (ix, iy) = labels.grid.coords(i);
        w.write_record([
            ix.to_string(),
            iy.to_string(),
            l.kind.as_str().to_string(),
            opt(l.witness.map(|v| v.x)),
            opt(l.witness.map(|v| v.y)),
            fmt_f64(l.diameter),
            fmt_f64(l.area),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<LabelRow>> {
    read_rows(input)
}

pub fn write_cloud_csv<W: Write>(out: W, cloud: &[RotationVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CLOUD_HEADER)?;
    for v in cloud {
        w.write_record([fmt_f64(v.x), fmt_f64(v.y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cloud_csv<R: Read>(input: R) -> Result<Vec<RotationVector>> {
    #[derive(Deserialize)]
    struct Row {
        vx: f64,
        vy: f64,
    }
    Ok(read_rows::<_, Row>(input)?
        .into_iter()
        .map(|r| RotationVector::new(r.vx, r.vy))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PeriodicRow {
    pub x: f64,
    pub y: f64,
    pub p: usize,
    pub wx: i64,
    pub wy: i64,
    pub residual: f64,
}

pub fn write_periodic_csv<W: Write>(out: W, points: &[PeriodicPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PERIODIC_HEADER)?;
    for p in points {
        w.write_record([
            fmt_f64(p.point.x),
            fmt_f64(p.point.y),
            p.p.to_string(),
            p.w.0.to_string(),
            p.w.1.to_string(),
            fmt_f64(p.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_periodic_csv<R: Read>(input: R) -> Result<Vec<PeriodicRow>> {
    read_rows(input)
}

fn read_rows<R: Read, T: serde::de::DeserializeOwned>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

/// JSON form of a global estimate (the raw cloud goes to CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSetReport {
    pub map: String,
    pub grid: GridSpec,
    pub n: usize,
    pub hull: ConvexPolygon,
    pub area: f64,
    pub diameter: f64,
    pub cloud_size: usize,
    pub refined: usize,
    pub flagged: usize,
    pub verdict: StructureVerdict,
}

impl RotationSetReport {
    pub fn new(map: String, est: &RotationSetEstimate, tol: &StructureTolerances) -> Self {
        Self {
            map,
            grid: est.resolution,
            n: est.n_used,
            area: est.hull.area(),
            diameter: est.hull.diameter(),
            cloud_size: est.sample_cloud.len(),
            refined: est.refined,
            flagged: est.flagged,
            verdict: est.verdict(tol),
            hull: est.hull.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalReport {
    pub map: String,
    pub disk: Disk,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub hull: ConvexPolygon,
    pub area: f64,
    pub diameter: f64,
    pub verdict: StructureVerdict,
}

impl LocalReport {
    pub fn new(
        map: String,
        est: &LocalRotationEstimate,
        seed: u64,
        tol: &StructureTolerances,
    ) -> Self {
        Self {
            map,
            disk: est.disk,
            n: est.n_used,
            samples: est.samples_used,
            seed,
            area: est.hull.area(),
            diameter: est.hull.diameter(),
            verdict: est.verdict(tol),
            hull: est.hull.clone(),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
