#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hogkit::{Detection, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BACKGROUND: f64 = 128.0 / 255.0;

/// Rounds to the nearest multiple of 1/255 so PGM files hold the exact value.
pub fn q(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// Block texture for self-matching: `size`-pixel blocks, each with a constant
/// 8-pixel frame of `BACKGROUND` around a random 8×8-tile interior. The block
/// at `(sx, sy)` also holds a bright tile against dark neighbours, which puts
/// the largest possible gradient magnitude there.
pub fn block_texture(w: usize, h: usize, seed: u64, sx: usize, sy: usize) -> GrayImage {
    let block = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles_per_row = w.div_ceil(8);
    let tiles: Vec<f64> = (0..tiles_per_row * h.div_ceil(8))
        .map(|_| q(rng.random::<f64>()))
        .collect();
    GrayImage::from_fn(w, h, |x, y| {
        let (bx, by) = (x % block, y % block);
        if !(8..block - 8).contains(&bx) || !(8..block - 8).contains(&by) {
            return BACKGROUND;
        }
        if (x / block, y / block) == (sx / block, sy / block) {
            // bright tile at interior tile (1, 1), dark to its right, below and diagonal
            match ((bx - 8) / 8, (by - 8) / 8) {
                (1, 1) => return 1.0,
                (2, 1) | (1, 2) | (2, 2) => return 0.0,
                _ => {}
            }
        }
        tiles[(y / 8) * tiles_per_row + x / 8]
    })
}

/// Soft dark ring on `BACKGROUND`, `size` pixels square.
pub fn ring(size: usize, radius_frac: f64) -> GrayImage {
    let s = size as f64;
    let (c, r0, width) = (s / 2.0 - 0.5, radius_frac * s, 0.06 * s);
    GrayImage::from_fn(size, size, |x, y| {
        let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
        q(BACKGROUND - 0.4 * (-((r - r0) / width).powi(2)).exp())
    })
}

/// Soft dark square outline on `BACKGROUND`.
pub fn square(size: usize, half_frac: f64) -> GrayImage {
    let s = size as f64;
    let (c, half, width) = (s / 2.0 - 0.5, half_frac * s, 0.06 * s);
    GrayImage::from_fn(size, size, |x, y| {
        let d = (x as f64 - c).abs().max((y as f64 - c).abs());
        q(BACKGROUND - 0.4 * (-((d - half) / width).powi(2)).exp())
    })
}

/// Pixel-replicating 2× enlargement; a 2×2 box average recovers `img`.
pub fn upsample2(img: &GrayImage) -> GrayImage {
    GrayImage::from_fn(2 * img.width(), 2 * img.height(), |x, y| {
        img.get(x / 2, y / 2)
    })
}

/// 512×512 background with the 64-pixel ring embedded at 2× with top-left
/// corner `(192, 160)`. Returns the image, the 64-pixel ring and the ground
/// truth box.
pub fn scaled_ring_fixture() -> (GrayImage, GrayImage, (usize, usize, usize, usize)) {
    let pattern = ring(64, 0.36);
    let mut img = GrayImage::filled(512, 512, BACKGROUND);
    img.paste(&upsample2(&pattern), 192, 160);
    (img, pattern, (192, 160, 128, 128))
}

pub fn hogkit(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hogkit"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("HOGKIT_THREADS", n.to_string()),
        None => cmd.env_remove("HOGKIT_THREADS"),
    };
    cmd.output().expect("spawn hogkit")
}

pub fn parse_detections(stdout: &[u8]) -> Vec<Detection> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("detection line"))
        .collect()
}

pub fn write_annotations(
    dir: &Path,
    name: &str,
    image: &Path,
    anns: &[serde_json::Value],
) -> PathBuf {
    let path = dir.join(name);
    let doc = serde_json::json!({ "image": image, "annotations": anns });
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    path
}

pub fn rect(x: usize, y: usize, w: usize, h: usize, polarity: &str) -> serde_json::Value {
    serde_json::json!({"kind": "rect", "polarity": polarity, "x": x, "y": y, "w": w, "h": h})
}

pub fn point(x: usize, y: usize, polarity: &str) -> serde_json::Value {
    serde_json::json!({"kind": "point", "polarity": polarity, "x": x, "y": y})
}

/// Exhaustive reference for greedy suppression over an already-sorted pool:
/// among all conflict-free subsets of at most `n` candidates, the greedy set
/// is the one containing the best-ranked candidate of any pairwise
/// difference.
pub fn exhaustive_greedy(pool: &[Detection], n: usize, min_dist: f64) -> Vec<usize> {
    let m = pool.len();
    assert!(m <= 24);
    let conflicts: Vec<u32> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&j| {
                    j != i && hogkit::detector::center_distance(&pool[i], &pool[j]) < min_dist
                })
                .fold(0u32, |acc, j| acc | (1 << j))
        })
        .collect();
    let reversed = |mask: u32| {
        (0..m)
            .filter(|&i| mask & (1 << i) != 0)
            .fold(0u32, |acc, i| acc | (1 << (m - 1 - i)))
    };
    let mut best = 0u32;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize > n {
            continue;
        }
        let free = (0..m).all(|i| mask & (1 << i) == 0 || conflicts[i] & mask == 0);
        if free && reversed(mask) > reversed(best) {
            best = mask;
        }
    }
    (0..m).filter(|&i| best & (1 << i) != 0).collect()
}
