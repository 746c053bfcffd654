//! Line-glyph rendering of a [`HogGrid`].
//!
//! Every cell becomes a `glyph_size`×`glyph_size` tile. Each nonzero bin adds
//! a segment through the tile center, perpendicular to the bin's center
//! orientation, so strokes follow image edges rather than gradients.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::HogGrid;
use crate::imgio::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphConfig {
    /// Output pixels per cell side; odd and at least 3.
    pub glyph_size: usize,
    /// Exponent applied to the relative bin strength.
    pub gamma: f64,
}

impl Default for GlyphConfig {
    fn default() -> Self {
        Self {
            glyph_size: 15,
            gamma: 1.0,
        }
    }
}

impl GlyphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.glyph_size < 3 || self.glyph_size.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "glyph size must be odd and at least 3, got {}",
                self.glyph_size
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Argument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Rounds half toward negative infinity.
#[inline]
fn round_half_down(v: f64) -> i64 {
    (v - 0.5).ceil() as i64
}

/// Integer `n / d` rounded to nearest with ties toward the smaller value.
#[inline]
fn div_round_half_down(n: i64, d: i64) -> i64 {
    debug_assert!(d > 0);
    let a = 2 * n - d;
    let b = 2 * d;
    -((-a).div_euclid(b))
}

/// Pixels of the segment from `p0` to `p1`, inclusive, one per step along the
/// major axis.
pub(crate) fn raster_line(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let steps = dx.abs().max(dy.abs());
    if steps == 0 {
        return vec![p0];
    }
    (0..=steps)
        .map(|i| {
            (
                p0.0 + div_round_half_down(i * dx, steps),
                p0.1 + div_round_half_down(i * dy, steps),
            )
        })
        .collect()
}

/// Cell-local pixels lit by bin `k` of `bins` in a tile of side `size`.
pub(crate) fn glyph_segment(k: usize, bins: usize, size: usize) -> Vec<(i64, i64)> {
    let center = ((size - 1) / 2) as i64;
    let half = ((size - 3) / 2) as f64;
    let bin_center = -PI + (k as f64 + 0.5) * (2.0 * PI / bins as f64);
    let dir = bin_center + PI / 2.0;
    let ox = round_half_down(half * dir.cos());
    let oy = round_half_down(half * dir.sin());
    raster_line((center - ox, center - oy), (center + ox, center + oy))
}

/// Renders `grid` as a gray image of `cells_x·glyph_size` by
/// `cells_y·glyph_size` pixels. Bin strength is taken relative to the largest
/// bin value in the whole grid; negative values are not drawn.
pub fn hogdraw(grid: &HogGrid, cfg: &GlyphConfig) -> Result<GrayImage> {
    cfg.validate()?;
    let g = cfg.glyph_size;
    let (out_w, out_h) = (grid.cells_x * g, grid.cells_y * g);
    let max = grid.hist.iter().cloned().fold(0.0f64, f64::max);
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument("cannot draw an empty grid".into()));
    }
    let mut data = vec![0.0f64; out_w * out_h];
    if max <= 0.0 {
        return GrayImage::new(out_w, out_h, data);
    }

    let segments: Vec<Vec<(i64, i64)>> = (0..grid.bins)
        .map(|k| glyph_segment(k, grid.bins, g))
        .collect();

    data.par_chunks_mut(out_w * g)
        .enumerate()
        .for_each(|(cy, band)| {
            for cx in 0..grid.cells_x {
                for (k, &v) in grid.cell(cx, cy).iter().enumerate() {
                    if v <= 0.0 {
                        continue;
                    }
                    let intensity = (v / max).powf(cfg.gamma);
                    for &(px, py) in &segments[k] {
                        let x = cx * g + px as usize;
                        band[py as usize * out_w + x] += intensity;
                    }
                }
            }
            band.iter_mut().for_each(|v| *v = v.min(1.0));
        });
    GrayImage::new(out_w, out_h, data)
}
