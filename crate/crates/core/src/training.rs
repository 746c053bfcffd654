//! Template construction from annotated training images.
//!
//! Positives are averaged in HOG space; when negatives are present their
//! average is subtracted, which produces a signed template.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, HogParams};
use crate::imgio::{resize_bilinear, GrayImage};

/// Default training window side, in pixels.
pub const DEFAULT_WINDOW: usize = 64;
/// Smallest accepted rectangle side.
pub const MIN_RECT_SIDE: i64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// A fixed window centered on `(x, y)`.
    Point { x: i64, y: i64 },
    /// A rectangle with top-left corner `(x, y)`.
    Rect { x: i64, y: i64, w: i64, h: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub region: Region,
    pub polarity: Polarity,
}

impl Annotation {
    pub fn point(x: i64, y: i64, polarity: Polarity) -> Self {
        Self {
            region: Region::Point { x, y },
            polarity,
        }
    }

    pub fn rect(x: i64, y: i64, w: i64, h: i64, polarity: Polarity) -> Self {
        Self {
            region: Region::Rect { x, y, w, h },
            polarity,
        }
    }
}

/// Crops the training window described by `ann`.
///
/// A point yields the `win_px` square centered on it (the center sits at
/// offset `win_px / 2`); a rectangle is cropped as given and resized to
/// `win_px`×`win_px`.
pub fn extract_patch(img: &GrayImage, ann: &Annotation, win_px: usize) -> Result<GrayImage> {
    if win_px == 0 {
        return Err(Error::Argument("window size must be positive".into()));
    }
    let (x, y, w, h) = match ann.region {
        Region::Point { x, y } => {
            let half = (win_px / 2) as i64;
            (x - half, y - half, win_px as i64, win_px as i64)
        }
        Region::Rect { x, y, w, h } => {
            if w < MIN_RECT_SIDE || h < MIN_RECT_SIDE {
                return Err(Error::Argument(format!(
                    "rectangle {w}x{h} is smaller than {MIN_RECT_SIDE}x{MIN_RECT_SIDE}"
                )));
            }
            (x, y, w, h)
        }
    };
    let (iw, ih) = (img.width() as i64, img.height() as i64);
    if x < 0 || y < 0 || x + w > iw || y + h > ih {
        return Err(Error::OutOfBounds {
            x,
            y,
            w,
            h,
            width: img.width(),
            height: img.height(),
        });
    }
    let crop = img.crop(x as usize, y as usize, w as usize, h as usize)?;
    resize_bilinear(&crop, win_px, win_px)
}

/// Extracts every annotation, splitting by polarity. Errors carry the
/// offending annotation's index.
pub fn extract_patches(
    img: &GrayImage,
    annotations: &[Annotation],
    win_px: usize,
) -> Result<(Vec<GrayImage>, Vec<GrayImage>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (index, ann) in annotations.iter().enumerate() {
        let patch = extract_patch(img, ann, win_px).map_err(|e| Error::Annotation {
            index,
            source: Box::new(e),
        })?;
        match ann.polarity {
            Polarity::Positive => pos.push(patch),
            Polarity::Negative => neg.push(patch),
        }
    }
    Ok((pos, neg))
}

/// Signed HOG-space weight block matched against detection windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub tcells_x: usize,
    pub tcells_y: usize,
    pub bins: usize,
    pub weights: Vec<f64>,
    pub norm: f64,
}

const TEMPLATE_MAGIC: &[u8; 4] = b"HTPL";

impl Template {
    /// Wraps `weights`, rejecting a length mismatch or a zero norm.
    pub fn new(tcells_x: usize, tcells_y: usize, bins: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != tcells_x * tcells_y * bins {
            return Err(Error::Size(format!(
                "{} weights for a {tcells_x}x{tcells_y}x{bins} template",
                weights.len()
            )));
        }
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateTemplate);
        }
        Ok(Self {
            tcells_x,
            tcells_y,
            bins,
            weights,
            norm,
        })
    }

    /// Template side lengths in pixels for cells of `cell_size`.
    pub fn pixel_size(&self, cell_size: usize) -> (usize, usize) {
        (self.tcells_x * cell_size, self.tcells_y * cell_size)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.weights.len());
        out.extend_from_slice(TEMPLATE_MAGIC);
        for v in [self.tcells_x, self.tcells_y, self.bins] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::decode(bytes.len(), "truncated template header"));
        }
        if &bytes[..4] != TEMPLATE_MAGIC {
            return Err(Error::Format(format!(
                "expected HTPL template, found {:?}",
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (tx, ty, bins) = (u32_at(4), u32_at(8), u32_at(12));
        let expected = 16 + 8 * tx * ty * bins;
        if bytes.len() != expected {
            return Err(Error::decode(
                bytes.len().min(expected),
                format!("expected {expected} bytes, found {}", bytes.len()),
            ));
        }
        let weights = bytes[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(tx, ty, bins, weights)
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

/// Mean HOG over `patches`, summed in list order.
fn mean_hog(patches: &[GrayImage], params: &HogParams) -> Result<(usize, usize, Vec<f64>)> {
    let grids = patches
        .par_iter()
        .map(|p| extract(p, params))
        .collect::<Result<Vec<_>>>()?;
    let first = &grids[0];
    let (cx, cy) = (first.cells_x, first.cells_y);
    let mut sum = vec![0.0; first.hist.len()];
    for g in &grids {
        if (g.cells_x, g.cells_y) != (cx, cy) {
            return Err(Error::Size(format!(
                "patch grids differ: {}x{} vs {cx}x{cy} cells",
                g.cells_x, g.cells_y
            )));
        }
        sum.iter_mut().zip(&g.hist).for_each(|(s, v)| *s += v);
    }
    let n = grids.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok((cx, cy, sum))
}

/// Averages positive patch features and subtracts the negative average.
pub fn build_template(
    pos: &[GrayImage],
    neg: &[GrayImage],
    params: &HogParams,
) -> Result<Template> {
    if pos.is_empty() {
        return Err(Error::Argument(
            "at least one positive patch is required".into(),
        ));
    }
    let (cx, cy, mut weights) = mean_hog(pos, params)?;
    if !neg.is_empty() {
        let (nx, ny, neg_mean) = mean_hog(neg, params)?;
        if (nx, ny) != (cx, cy) {
            return Err(Error::Size(format!(
                "negative patches give {nx}x{ny} cells, positives {cx}x{cy}"
            )));
        }
        weights.iter_mut().zip(&neg_mean).for_each(|(w, n)| *w -= n);
    }
    Template::new(cx, cy, params.bins, weights)
}

#[derive(Debug, Deserialize)]
struct RawAnnotation {
    kind: String,
    polarity: Polarity,
    x: i64,
    y: i64,
    w: Option<i64>,
    h: Option<i64>,
}

#[derive(Debug, Deserialize)]
struct RawAnnotationFile {
    image: PathBuf,
    annotations: Vec<RawAnnotation>,
}

/// Parsed annotation file: an image path plus its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub image: PathBuf,
    pub annotations: Vec<Annotation>,
}

impl AnnotationSet {
    /// Parses the JSON form. A relative image path is resolved against
    /// `base_dir` when one is given.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawAnnotationFile = serde_json::from_str(text)?;
        let annotations = raw
            .annotations
            .into_iter()
            .enumerate()
            .map(|(index, a)| {
                let region = match (a.kind.as_str(), a.w, a.h) {
                    ("point", _, _) => Region::Point { x: a.x, y: a.y },
                    ("rect", Some(w), Some(h)) => Region::Rect {
                        x: a.x,
                        y: a.y,
                        w,
                        h,
                    },
                    ("rect", _, _) => {
                        return Err(Error::Annotation {
                            index,
                            source: Box::new(Error::Argument("rect needs w and h".into())),
                        })
                    }
                    (other, _, _) => {
                        return Err(Error::Annotation {
                            index,
                            source: Box::new(Error::Argument(format!("unknown kind {other:?}"))),
                        })
                    }
                };
                Ok(Annotation {
                    region,
                    polarity: a.polarity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let image = match base_dir {
            Some(dir) if raw.image.is_relative() => dir.join(&raw.image),
            _ => raw.image,
        };
        Ok(Self { image, annotations })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }
}
