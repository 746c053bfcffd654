//! Timing harness for the gradient and histogram stages.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{extract, HogParams};
use crate::imgio::GrayImage;
use crate::parallel::with_threads;

/// Uniform noise image from a fixed seed.
pub fn random_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(width, height, |_, _| rng.random::<f64>())
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub runs_ms: Vec<f64>,
    /// SHA-256 of the serialized features, identical for every run.
    pub digest: String,
}

impl BenchReport {
    pub fn min_ms(&self) -> f64 {
        self.runs_ms.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn median_ms(&self) -> f64 {
        let mut v = self.runs_ms.clone();
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len().is_multiple_of(2) {
            (v[m - 1] + v[m]) / 2.0
        } else {
            v[m]
        }
    }
}

/// Times `iters` feature passes over a seeded random image. Fails if any run
/// produces different feature bytes.
pub fn run_bench(
    width: usize,
    height: usize,
    iters: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<BenchReport> {
    if iters == 0 {
        return Err(Error::Argument("iteration count must be at least 1".into()));
    }
    let img = random_image(width, height, seed);
    let params = HogParams::default();
    with_threads(threads, || {
        let mut runs_ms = Vec::with_capacity(iters);
        let mut digest: Option<String> = None;
        for _ in 0..iters {
            let start = Instant::now();
            let grid = extract(&img, &params)?;
            runs_ms.push(start.elapsed().as_secs_f64() * 1e3);
            let d = hex_digest(&grid.to_bytes());
            match &digest {
                Some(prev) if *prev != d => {
                    return Err(Error::Argument(
                        "feature output changed between runs".into(),
                    ))
                }
                Some(_) => {}
                None => digest = Some(d),
            }
        }
        Ok(BenchReport {
            runs_ms,
            digest: digest.unwrap_or_default(),
        })
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
