//! Binary netpbm rasters: PGM (P5) phase portraits and PPM (P6) label overlays.

use rotset_core::classify::{LabelGrid, LabelKind};
use rotset_core::PlanePoint;

use crate::error::{CliError, Result};

/// Hit counts on a `width × height` raster of the unit torus, `y` pointing up.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitImage {
    width: usize,
    height: usize,
    counts: Vec<u64>,
}

impl PortraitImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CliError::config(format!(
                "image size {width}x{height} is empty"
            )));
        }
        Ok(Self {
            width,
            height,
            counts: vec![0; width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel index of the torus point `z`, row 0 at the top.
    pub fn pixel(&self, z: PlanePoint) -> usize {
        let z = z.mod_one();
        let px = ((z.x * self.width as f64) as usize).min(self.width - 1);
        let py = ((z.y * self.height as f64) as usize).min(self.height - 1);
        (self.height - 1 - py) * self.width + px
    }

    pub fn hit(&mut self, pixel: usize) {
        self.counts[pixel] += 1;
    }

    pub fn count(&self, x: usize, row: usize) -> u64 {
        self.counts[row * self.width + x]
    }

    /// Gray level `255 − round(255·sqrt(c / c_max))`: empty pixels are white,
    /// the busiest pixel is black.
    pub fn gray_levels(&self) -> Vec<u8> {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            return vec![255; self.counts.len()];
        }
        self.counts
            .iter()
            .map(|&c| 255 - (255.0 * (c as f64 / max as f64).sqrt()).round() as u8)
            .collect()
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.gray_levels());
        out
    }
}

pub const ELLIPTIC_RGB: [u8; 3] = [46, 139, 87];
pub const CHAOTIC_RGB: [u8; 3] = [200, 60, 60];
pub const UNDETERMINED_RGB: [u8; 3] = [220, 220, 220];

pub fn label_color(kind: LabelKind) -> [u8; 3] {
    match kind {
        LabelKind::Elliptic => ELLIPTIC_RGB,
        LabelKind::Chaotic => CHAOTIC_RGB,
        LabelKind::Undetermined => UNDETERMINED_RGB,
    }
}

/// One `cell_px × cell_px` block per grid cell, highest `iy` in the top row.
pub fn label_overlay(labels: &LabelGrid, cell_px: usize) -> Vec<u8> {
    let (nx, ny) = (labels.grid.nx, labels.grid.ny);
    let (w, h) = (nx * cell_px, ny * cell_px);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for row in 0..h {
        let iy = ny - 1 - row / cell_px;
        for col in 0..w {
            out.extend(label_color(labels.get(col / cell_px, iy).kind));
        }
    }
    out
}

/// Splits a netpbm file into `(magic, width, height, maxval, raster)`.
pub fn parse_netpbm(bytes: &[u8]) -> Option<(String, usize, usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
    }
    let raster = &bytes[pos + 1..];
    Some((
        fields[0].clone(),
        fields[1].parse().ok()?,
        fields[2].parse().ok()?,
        fields[3].parse().ok()?,
        raster,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rotset_core::Vec2;

    #[test]
    fn pixels_wrap_and_flip() {
        let img = PortraitImage::new(4, 2).unwrap();
        assert_eq!(img.pixel(Vec2::new(0.0, 0.0)), 4);
        assert_eq!(img.pixel(Vec2::new(0.99, 0.99)), 3);
        assert_eq!(img.pixel(Vec2::new(-0.01, 1.2)), 7);
    }

    #[test]
    fn gray_levels_follow_square_root() {
        let mut img = PortraitImage::new(3, 1).unwrap();
        for _ in 0..4 {
            img.hit(0);
        }
        img.hit(1);
        assert_eq!(img.gray_levels(), vec![0, 127, 255]);
        let pgm = img.to_pgm();
        let (magic, w, h, max, raster) = parse_netpbm(&pgm).unwrap();
        assert_eq!((magic.as_str(), w, h, max), ("P5", 3, 1, 255));
        assert_eq!(raster, &[0, 127, 255]);
    }

    #[test]
    fn empty_images_are_rejected() {
        assert!(PortraitImage::new(0, 3).is_err());
        assert_eq!(
            PortraitImage::new(2, 2).unwrap().gray_levels(),
            vec![255; 4]
        );
    }
}
