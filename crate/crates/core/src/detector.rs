//! Template scoring, greedy suppression and the multi-scale search.
//!
//! Scores are cosine similarities between the template weights and each
//! template-sized window of a [`HogGrid`]. Suppression keeps the best
//! candidates whose box centers are at least `min_dist` apart in Chebyshev
//! distance. The pyramid search scores every level, maps boxes back to base
//! image pixels and suppresses over the pooled candidates.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, HogGrid, HogParams};
use crate::imgio::{resize_bilinear, GrayImage};
use crate::training::Template;

/// Per-placement scores; placement `(px, py)` puts the template's top-left
/// cell on grid cell `(px, py)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    pub width: usize,
    pub height: usize,
    pub tcells_x: usize,
    pub tcells_y: usize,
    pub scores: Vec<f64>,
}

impl ScoreGrid {
    pub fn get(&self, px: usize, py: usize) -> f64 {
        self.scores[py * self.width + px]
    }
}

/// A scored box in base-image pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rank: usize,
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub score: f64,
    pub level: usize,
}

impl Detection {
    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// One JSON object, fixed key order, score with six decimals.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"rank\":{},\"x\":{},\"y\":{},\"w\":{},\"h\":{},\"score\":{:.6},\"level\":{}}}",
            self.rank, self.x, self.y, self.w, self.h, self.score, self.level
        )
    }
}

/// Chebyshev distance between box centers.
pub fn center_distance(a: &Detection, b: &Detection) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).abs().max((ay - by).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsConfig {
    /// Minimum Chebyshev distance between accepted box centers, in pixels.
    pub min_dist: f64,
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self { min_dist: 128.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyramidConfig {
    pub scale: f64,
    pub max_levels: usize,
}

impl Default for PyramidConfig {
    fn default() -> Self {
        Self {
            scale: 0.5,
            max_levels: 32,
        }
    }
}

/// Cosine similarity of `tmpl` against every window of `grid`; zero where the
/// window is all zero.
pub fn score_map(grid: &HogGrid, tmpl: &Template) -> Result<ScoreGrid> {
    if grid.bins != tmpl.bins {
        return Err(Error::Size(format!(
            "grid has {} bins, template {}",
            grid.bins, tmpl.bins
        )));
    }
    if grid.cells_x < tmpl.tcells_x || grid.cells_y < tmpl.tcells_y {
        return Err(Error::Size(format!(
            "grid of {}x{} cells is smaller than the {}x{} template",
            grid.cells_x, grid.cells_y, tmpl.tcells_x, tmpl.tcells_y
        )));
    }
    let bins = grid.bins;
    let (tx, ty) = (tmpl.tcells_x, tmpl.tcells_y);
    let (w, h) = (grid.cells_x - tx + 1, grid.cells_y - ty + 1);
    let cell_sq: Vec<f64> = grid
        .hist
        .chunks_exact(bins)
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let row_len = tx * bins;

    let mut scores = vec![0.0; w * h];
    scores.par_chunks_mut(w).enumerate().for_each(|(py, out)| {
        for (px, slot) in out.iter_mut().enumerate() {
            let mut dot = 0.0;
            let mut norm2 = 0.0;
            for r in 0..ty {
                let cy = py + r;
                let start = (cy * grid.cells_x + px) * bins;
                let window = &grid.hist[start..start + row_len];
                let weights = &tmpl.weights[r * row_len..(r + 1) * row_len];
                dot += window.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>();
                norm2 += cell_sq[cy * grid.cells_x + px..cy * grid.cells_x + px + tx]
                    .iter()
                    .sum::<f64>();
            }
            *slot = if norm2 > 0.0 {
                (dot / (norm2.sqrt() * tmpl.norm)).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    });
    Ok(ScoreGrid {
        width: w,
        height: h,
        tcells_x: tx,
        tcells_y: ty,
        scores,
    })
}

/// Orders by score descending, then level, y and x ascending.
fn candidate_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.level.cmp(&b.level))
        .then(a.y.cmp(&b.y))
        .then(a.x.cmp(&b.x))
}

/// Greedy pass over candidates already in confidence order.
pub fn greedy_select(sorted: &[Detection], n: usize, cfg: &NmsConfig) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::with_capacity(n);
    for cand in sorted {
        if kept.len() >= n {
            break;
        }
        if kept
            .iter()
            .all(|k| center_distance(k, cand) >= cfg.min_dist)
        {
            kept.push(Detection {
                rank: kept.len(),
                ..*cand
            });
        }
    }
    kept
}

fn level_candidates(scores: &ScoreGrid, cell_size: usize, level: usize) -> Vec<Detection> {
    let (w, h) = (scores.tcells_x * cell_size, scores.tcells_y * cell_size);
    (0..scores.height)
        .flat_map(|py| (0..scores.width).map(move |px| (px, py)))
        .map(|(px, py)| Detection {
            rank: 0,
            x: px * cell_size,
            y: py * cell_size,
            w,
            h,
            score: scores.get(px, py),
            level,
        })
        .collect()
}

/// Top `n` well-separated placements of a single score map, as level-0 boxes.
pub fn nms_top_n(
    scores: &ScoreGrid,
    n: usize,
    cfg: &NmsConfig,
    cell_size: usize,
) -> Vec<Detection> {
    let mut cands = level_candidates(scores, cell_size, 0);
    cands.sort_by(candidate_order);
    greedy_select(&cands, n, cfg)
}

/// Successively downscaled copies of `img`, stopping before a level falls
/// below the template size in either direction.
pub fn build_pyramid(
    img: &GrayImage,
    cfg: &PyramidConfig,
    tmpl_px_w: usize,
    tmpl_px_h: usize,
) -> Result<Vec<GrayImage>> {
    if !(cfg.scale > 0.0 && cfg.scale < 1.0) {
        return Err(Error::Argument(format!(
            "pyramid scale must lie in (0, 1), got {}",
            cfg.scale
        )));
    }
    if img.width() < tmpl_px_w || img.height() < tmpl_px_h {
        return Err(Error::Size(format!(
            "image {}x{} is smaller than the {tmpl_px_w}x{tmpl_px_h} template",
            img.width(),
            img.height()
        )));
    }
    let mut levels = vec![img.clone()];
    let mut factor = 1.0;
    while levels.len() < cfg.max_levels {
        factor *= cfg.scale;
        let w = ((img.width() as f64 * factor).round() as usize).max(1);
        let h = ((img.height() as f64 * factor).round() as usize).max(1);
        if w < tmpl_px_w || h < tmpl_px_h {
            break;
        }
        let prev = levels.last().expect("base level present");
        if (w, h) == (prev.width(), prev.height()) {
            break;
        }
        // resample from the previous level so exact halvings box-filter
        let next = resize_bilinear(prev, w, h)?;
        levels.push(next);
    }
    Ok(levels)
}

/// Single-scale detection on the base image.
pub fn detect(
    img: &GrayImage,
    tmpl: &Template,
    n: usize,
    nms: &NmsConfig,
    hog_params: &HogParams,
) -> Result<Vec<Detection>> {
    let grid = extract(img, hog_params)?;
    let scores = score_map(&grid, tmpl)?;
    Ok(nms_top_n(&scores, n, nms, hog_params.cell_size))
}

/// Every candidate of every pyramid level, mapped to base-image pixels.
pub fn pyramid_candidates(
    img: &GrayImage,
    tmpl: &Template,
    pyr: &PyramidConfig,
    hog_params: &HogParams,
) -> Result<Vec<Detection>> {
    let cs = hog_params.cell_size;
    let (tw, th) = tmpl.pixel_size(cs);
    let levels = build_pyramid(img, pyr, tw, th)?;
    let (base_w, base_h) = (img.width(), img.height());

    let per_level = levels
        .par_iter()
        .enumerate()
        .map(|(k, level)| {
            let grid = extract(level, hog_params)?;
            let scores = score_map(&grid, tmpl)?;
            let factor = pyr.scale.powi(k as i32);
            let to_base = |v: usize| (v as f64 / factor).round() as usize;
            Ok(level_candidates(&scores, cs, k)
                .into_iter()
                .map(|d| {
                    let w = to_base(d.w).clamp(1, base_w);
                    let h = to_base(d.h).clamp(1, base_h);
                    Detection {
                        x: to_base(d.x).min(base_w - w),
                        y: to_base(d.y).min(base_h - h),
                        w,
                        h,
                        ..d
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_level.into_iter().flatten().collect())
}

/// Pyramid search with suppression over the pooled, base-mapped candidates.
pub fn detect_multiscale(
    img: &GrayImage,
    tmpl: &Template,
    n: usize,
    nms: &NmsConfig,
    pyr: &PyramidConfig,
    hog_params: &HogParams,
) -> Result<Vec<Detection>> {
    let mut pool = pyramid_candidates(img, tmpl, pyr, hog_params)?;
    pool.sort_by(candidate_order);
    Ok(greedy_select(&pool, n, nms))
}
