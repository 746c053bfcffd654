//! Command-line front end: `hogkit hog|train|detect|bench`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::run_bench;
use crate::detector::{detect, detect_multiscale, NmsConfig, PyramidConfig};
use crate::error::{Error, Result};
use crate::features::{extract, HogParams};
use crate::glyph::{hogdraw, GlyphConfig};
use crate::imgio::{load_image, save_image, to_gray};
use crate::overlay::draw_detections;
use crate::parallel::{threads_from_env, with_threads};
use crate::training::{build_template, extract_patches, AnnotationSet, DEFAULT_WINDOW};

#[derive(Debug, Parser)]
#[command(
    name = "hogkit",
    version,
    about = "HOG features and template-matching detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the HOG grid of an image, optionally rendering glyphs.
    Hog(HogArgs),
    /// Build a template from annotation files.
    Train(TrainArgs),
    /// Run the detector and print one JSON line per detection.
    Detect(DetectArgs),
    /// Time the gradient and histogram stages.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Cell side in pixels.
    #[arg(long, default_value_t = 8)]
    pub cell_size: usize,
    /// Orientation bins over the full circle.
    #[arg(long, default_value_t = 9)]
    pub bins: usize,
    /// Vote threshold as a fraction of the maximum gradient magnitude.
    #[arg(long, default_value_t = 0.10)]
    pub tau: f64,
    /// L2-normalize each cell histogram.
    #[arg(long)]
    pub normalize: bool,
}

impl FeatureArgs {
    pub fn params(&self) -> HogParams {
        HogParams {
            cell_size: self.cell_size,
            bins: self.bins,
            tau: self.tau,
            normalize: self.normalize,
            ..HogParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct HogArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Destination of the binary HOG grid.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the glyph rendering here.
    #[arg(long)]
    pub draw: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub glyph_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Annotation JSON file; repeat for several training images.
    #[arg(long = "annotations", required = true)]
    pub annotations: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Training window side in pixels; a multiple of the cell size.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    /// Number of detections to report.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Minimum Chebyshev distance between box centers, in pixels.
    #[arg(long, default_value_t = 128.0)]
    pub min_dist: f64,
    /// Search an image pyramid instead of the base image only.
    #[arg(long)]
    pub multiscale: bool,
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    #[arg(long, default_value_t = 32)]
    pub max_levels: usize,
    /// Write the input with ranked boxes drawn on it.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Image size as WxH.
    #[arg(long, default_value = "1024x1024", value_parser = parse_size)]
    pub size: (usize, usize),
    #[arg(long, default_value_t = 5)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

/// Runs one parsed command, writing machine-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let threads = threads_from_env();
    match cli.command {
        Command::Hog(args) => with_threads(threads, || cmd_hog(&args)),
        Command::Train(args) => with_threads(threads, || cmd_train(&args)).and_then(|(p, n)| {
            writeln!(out, "positives: {p}, negatives: {n}").map_err(|e| Error::io("<stdout>", e))
        }),
        Command::Detect(args) => {
            let lines = with_threads(threads, || cmd_detect(&args))?;
            for line in lines {
                writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(())
        }
        Command::Bench(args) => {
            let (w, h) = args.size;
            let report = run_bench(w, h, args.iters, args.seed, threads)?;
            writeln!(
                out,
                "size: {w}x{h}, iters: {}, min_ms: {:.3}, median_ms: {:.3}, features_sha256: {}",
                args.iters,
                report.min_ms(),
                report.median_ms(),
                report.digest
            )
            .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn cmd_hog(args: &HogArgs) -> Result<()> {
    let img = to_gray(&load_image(&args.input)?);
    let grid = extract(&img, &args.features.params())?;
    grid.save(&args.out)?;
    if let Some(path) = &args.draw {
        let cfg = GlyphConfig {
            glyph_size: args.glyph_size,
            gamma: args.gamma,
        };
        save_image(&hogdraw(&grid, &cfg)?, path)?;
    }
    eprintln!(
        "{}x{} cells, {} bins, threshold {:.6}",
        grid.cells_x, grid.cells_y, grid.bins, grid.threshold_used
    );
    Ok(())
}

/// Returns the positive and negative patch counts.
pub fn cmd_train(args: &TrainArgs) -> Result<(usize, usize)> {
    let params = args.features.params();
    if params.cell_size == 0 || !args.window.is_multiple_of(params.cell_size) {
        return Err(Error::Argument(format!(
            "window {} is not a whole number of {}-pixel cells",
            args.window, params.cell_size
        )));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for path in &args.annotations {
        let set = AnnotationSet::load(path)?;
        let img = to_gray(&load_image(&set.image)?);
        let (p, n) = extract_patches(&img, &set.annotations, args.window)
            .map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
        pos.extend(p);
        neg.extend(n);
    }
    let tmpl = build_template(&pos, &neg, &params)?;
    tmpl.save(&args.out)?;
    Ok((pos.len(), neg.len()))
}

/// Returns the JSON lines of the detections.
pub fn cmd_detect(args: &DetectArgs) -> Result<Vec<String>> {
    if args.top == 0 {
        return Err(Error::Argument("--top must be at least 1".into()));
    }
    if args.min_dist.is_nan() || args.min_dist < 0.0 {
        return Err(Error::Argument("--min-dist must be non-negative".into()));
    }
    let rgb = load_image(&args.input)?;
    let img = to_gray(&rgb);
    let tmpl = crate::training::Template::load(&args.template)?;
    let params = args.features.params();
    let nms = NmsConfig {
        min_dist: args.min_dist,
    };
    let dets = if args.multiscale {
        let pyr = PyramidConfig {
            scale: args.scale,
            max_levels: args.max_levels,
        };
        detect_multiscale(&img, &tmpl, args.top, &nms, &pyr, &params)?
    } else {
        detect(&img, &tmpl, args.top, &nms, &params)?
    };
    if let Some(path) = &args.overlay {
        let mut canvas = rgb;
        draw_detections(&mut canvas, &dets);
        save_image(&canvas, path)?;
    }
    eprintln!("{} detections", dets.len());
    Ok(dets.iter().map(|d| d.to_json_line()).collect())
}
