//! Gradients and cell orientation histograms.
//!
//! Gradients use the unsmoothed centered difference `[-1, 0, 1]` in both
//! directions, forced to zero on the one-pixel border. Each pixel whose
//! magnitude is strictly above `tau` times the image-wide maximum casts one
//! vote into the orientation bin of its cell. Orientation is signed over the
//! full circle and split into `bins` equal sectors starting at -π.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgio::GrayImage;

/// Per-pixel derivatives, magnitude and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub mag: Vec<f64>,
    /// Orientation in (-π, π]; zero where the magnitude is zero.
    pub theta: Vec<f64>,
}

/// Centered-difference gradient of `img`.
pub fn gradient(img: &GrayImage) -> GradientField {
    let (w, h) = (img.width(), img.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    if w >= 3 && h >= 3 {
        let src = img.data();
        gx.par_chunks_mut(w)
            .zip(gy.par_chunks_mut(w))
            .enumerate()
            .filter(|(y, _)| *y >= 1 && *y + 1 < h)
            .for_each(|(y, (row_x, row_y))| {
                let up = &src[(y - 1) * w..y * w];
                let mid = &src[y * w..(y + 1) * w];
                let down = &src[(y + 1) * w..(y + 2) * w];
                for x in 1..w - 1 {
                    row_x[x] = mid[x + 1] - mid[x - 1];
                    row_y[x] = down[x] - up[x];
                }
            });
    }
    let (mag, theta): (Vec<f64>, Vec<f64>) = gx
        .par_iter()
        .zip(gy.par_iter())
        .map(|(&dx, &dy)| polar(dx, dy))
        .unzip();
    GradientField {
        width: w,
        height: h,
        gx,
        gy,
        mag,
        theta,
    }
}

#[inline]
fn polar(dx: f64, dy: f64) -> (f64, f64) {
    let mag = (dx * dx + dy * dy).sqrt();
    if mag == 0.0 {
        return (0.0, 0.0);
    }
    let t = dy.atan2(dx);
    // atan2 reaches -π only for a negative-zero dy
    (mag, if t <= -PI { PI } else { t })
}

/// Lower edge of orientation bin `k`.
#[inline]
pub fn bin_edge(k: usize, bins: usize) -> f64 {
    -PI + k as f64 * (2.0 * PI / bins as f64)
}

/// Orientation bin of `theta`: bin `k` covers `[edge(k), edge(k+1))` and
/// `theta = π` lands in the last bin.
pub fn bin_of(theta: f64, bins: usize) -> Result<usize> {
    if bins == 0 {
        return Err(Error::Argument("bin count must be at least 1".into()));
    }
    if !(-PI..=PI).contains(&theta) {
        return Err(Error::Argument(format!(
            "orientation {theta} outside (-pi, pi]"
        )));
    }
    Ok(bin_unchecked(theta, bins))
}

#[inline]
fn bin_unchecked(theta: f64, bins: usize) -> usize {
    let width = 2.0 * PI / bins as f64;
    let mut k = (((theta + PI) / width).floor().max(0.0) as usize).min(bins - 1);
    // snap to the edges as bin_edge computes them so neighbouring thetas never
    // skip or share a bin because of rounding in the division
    while k + 1 < bins && theta >= bin_edge(k + 1, bins) {
        k += 1;
    }
    while k > 0 && theta < bin_edge(k, bins) {
        k -= 1;
    }
    k
}

/// Parameters of the feature pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogParams {
    pub cell_size: usize,
    pub bins: usize,
    /// Fraction of the image's maximum gradient magnitude a pixel must exceed
    /// to vote.
    pub tau: f64,
    /// Apply [`normalize_cells`] after counting.
    pub normalize: bool,
    pub epsilon: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell_size: 8,
            bins: 9,
            tau: 0.10,
            normalize: false,
            epsilon: 1e-6,
        }
    }
}

/// Orientation histograms over the cell lattice, stored cell-major
/// (row-major over cells) with bins innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct HogGrid {
    pub cells_x: usize,
    pub cells_y: usize,
    pub bins: usize,
    pub cell_size: usize,
    pub threshold_used: f64,
    pub hist: Vec<f64>,
}

const HOG_MAGIC: &[u8; 4] = b"HOG1";

impl HogGrid {
    pub fn zeros(cells_x: usize, cells_y: usize, bins: usize, cell_size: usize) -> Self {
        Self {
            cells_x,
            cells_y,
            bins,
            cell_size,
            threshold_used: 0.0,
            hist: vec![0.0; cells_x * cells_y * bins],
        }
    }

    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let i = (cy * self.cells_x + cx) * self.bins;
        &self.hist[i..i + self.bins]
    }

    pub fn cell_mut(&mut self, cx: usize, cy: usize) -> &mut [f64] {
        let i = (cy * self.cells_x + cx) * self.bins;
        &mut self.hist[i..i + self.bins]
    }

    /// Copy of the `w`×`h` cell block starting at cell `(cx, cy)`, flattened
    /// in the grid's own order.
    pub fn window(&self, cx: usize, cy: usize, w: usize, h: usize) -> Result<Vec<f64>> {
        if cx + w > self.cells_x || cy + h > self.cells_y {
            return Err(Error::Size(format!(
                "window {w}x{h} at ({cx}, {cy}) exceeds {}x{} cells",
                self.cells_x, self.cells_y
            )));
        }
        let mut out = Vec::with_capacity(w * h * self.bins);
        for y in cy..cy + h {
            let start = (y * self.cells_x + cx) * self.bins;
            out.extend_from_slice(&self.hist[start..start + w * self.bins]);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * self.hist.len());
        out.extend_from_slice(HOG_MAGIC);
        for v in [self.cells_x, self.cells_y, self.bins, self.cell_size] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.threshold_used.to_le_bytes());
        for v in &self.hist {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 28 {
            return Err(Error::decode(bytes.len(), "truncated HOG header"));
        }
        if &bytes[..4] != HOG_MAGIC {
            return Err(Error::Format(format!(
                "expected HOG1 magic, found {:?}",
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (cells_x, cells_y, bins, cell_size) = (u32_at(4), u32_at(8), u32_at(12), u32_at(16));
        let threshold_used = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let n = cells_x * cells_y * bins;
        let expected = 28 + 8 * n;
        if bytes.len() != expected {
            return Err(Error::decode(
                bytes.len().min(expected),
                format!("expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        let hist = bytes[28..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            cells_x,
            cells_y,
            bins,
            cell_size,
            threshold_used,
            hist,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Counts qualifying gradient votes per cell and orientation bin.
///
/// Partial cells on the right and bottom edges are dropped.
pub fn hog(field: &GradientField, cell_size: usize, bins: usize, tau: f64) -> Result<HogGrid> {
    if cell_size == 0 || bins == 0 {
        return Err(Error::Argument(
            "cell size and bin count must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Argument(format!("tau {tau} outside [0, 1]")));
    }
    let (cells_x, cells_y) = (field.width / cell_size, field.height / cell_size);
    if cells_x == 0 || cells_y == 0 {
        return Err(Error::EmptyGrid {
            width: field.width,
            height: field.height,
            cell_size,
        });
    }

    let max_mag = field.mag.par_iter().cloned().reduce(|| 0.0, f64::max);
    let threshold = tau * max_mag;
    let row_len = cells_x * bins;
    let mut hist = vec![0.0; cells_y * row_len];

    hist.par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(cy, row)| {
            for py in cy * cell_size..(cy + 1) * cell_size {
                let base = py * field.width;
                for px in 0..cells_x * cell_size {
                    let m = field.mag[base + px];
                    if m > threshold {
                        let k = bin_unchecked(field.theta[base + px], bins);
                        row[(px / cell_size) * bins + k] += 1.0;
                    }
                }
            }
        });

    Ok(HogGrid {
        cells_x,
        cells_y,
        bins,
        cell_size,
        threshold_used: threshold,
        hist,
    })
}

/// Scales each cell vector `v` to `v / sqrt(|v|² + epsilon²)`.
pub fn normalize_cells(grid: &HogGrid, epsilon: f64) -> HogGrid {
    let mut out = grid.clone();
    let eps2 = epsilon * epsilon;
    out.hist.par_chunks_mut(grid.bins.max(1)).for_each(|cell| {
        let norm2: f64 = cell.iter().map(|v| v * v).sum();
        let denom = (norm2 + eps2).sqrt();
        if denom > 0.0 {
            cell.iter_mut().for_each(|v| *v /= denom);
        }
    });
    out
}

/// Full pipeline: gradient, vote counting, then optional normalization.
pub fn extract(img: &GrayImage, params: &HogParams) -> Result<HogGrid> {
    let grid = hog(&gradient(img), params.cell_size, params.bins, params.tau)?;
    Ok(if params.normalize {
        normalize_cells(&grid, params.epsilon)
    } else {
        grid
    })
}
