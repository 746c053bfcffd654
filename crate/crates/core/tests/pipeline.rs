mod common;

use common::*;
use hogkit::detector::{greedy_select, pyramid_candidates, ScoreGrid};
use hogkit::features::extract;
use hogkit::imgio::{load_image, to_gray};
use hogkit::training::{extract_patches, Polarity};
use hogkit::{
    build_template, detect, detect_multiscale, nms_top_n, score_map, Annotation, Detection,
    GrayImage, HogParams, NmsConfig, PyramidConfig, Template,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_ramp_fixture_reads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gradient16.pgm");
    let values: Vec<u8> = (0..16).map(|i| (i * 16) as u8).collect();
    let mut bytes = b"P5\n16 1\n255\n".to_vec();
    bytes.extend_from_slice(&values);
    std::fs::write(&path, bytes).unwrap();

    let img = load_image(&path).unwrap();
    assert_eq!((img.width(), img.height()), (16, 1));
    for (x, &v) in values.iter().enumerate() {
        assert_eq!(img.pixel(x, 0), [v, v, v]);
    }
    let gray = to_gray(&img);
    for (x, &v) in values.iter().enumerate() {
        assert_eq!(gray.get(x, 0), v as f64 / 255.0);
    }
}

#[test]
fn self_match_finds_the_source_block() {
    let img = block_texture(384, 320, 21, 128, 192);
    let params = HogParams::default();
    let patch = img.crop(128, 192, 64, 64).unwrap();
    let tmpl = build_template(&[patch], &[], &params).unwrap();
    let dets = detect(&img, &tmpl, 5, &NmsConfig::default(), &params).unwrap();
    assert_eq!(
        (dets[0].x, dets[0].y, dets[0].w, dets[0].h),
        (128, 192, 64, 64)
    );
    assert!(dets[0].score >= 1.0 - 1e-9);
}

#[test]
fn multiscale_recovers_enlarged_pattern() {
    let (img, pattern, (gx, gy, gw, _)) = scaled_ring_fixture();
    let params = HogParams::default();
    let tmpl = build_template(&[pattern], &[], &params).unwrap();
    let dets = detect_multiscale(
        &img,
        &tmpl,
        5,
        &NmsConfig::default(),
        &PyramidConfig::default(),
        &params,
    )
    .unwrap();
    let best = dets[0];
    assert_eq!(best.level, 1);
    assert_eq!((best.w, best.h), (128, 128));
    let (cx, cy) = best.center();
    let (tx, ty) = (gx as f64 + gw as f64 / 2.0, gy as f64 + gw as f64 / 2.0);
    assert!((cx - tx).abs() <= 8.0 && (cy - ty).abs() <= 8.0);
}

#[test]
fn one_level_pyramid_equals_single_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = GrayImage::from_fn(200, 150, |_, _| rng.random());
    let params = HogParams::default();
    let tmpl = build_template(&[img.crop(40, 24, 64, 64).unwrap()], &[], &params).unwrap();
    let nms = NmsConfig { min_dist: 40.0 };
    let single = detect(&img, &tmpl, 7, &nms, &params).unwrap();
    let one = PyramidConfig {
        scale: 0.5,
        max_levels: 1,
    };
    assert_eq!(
        detect_multiscale(&img, &tmpl, 7, &nms, &one, &params).unwrap(),
        single
    );

    // base no larger than the template gives a one-level pyramid as well
    let small = img.crop(0, 0, 64, 64).unwrap();
    assert_eq!(
        detect_multiscale(&small, &tmpl, 3, &nms, &PyramidConfig::default(), &params).unwrap(),
        detect(&small, &tmpl, 3, &nms, &params).unwrap()
    );
}

#[test]
fn pooled_levels_follow_the_greedy_rule() {
    let (img, pattern, _) = scaled_ring_fixture();
    let params = HogParams::default();
    let tmpl = build_template(&[pattern], &[], &params).unwrap();
    let pyr = PyramidConfig::default();
    let mut pool = pyramid_candidates(&img, &tmpl, &pyr, &params).unwrap();
    let levels: std::collections::BTreeSet<_> = pool.iter().map(|d| d.level).collect();
    assert_eq!(levels.len(), 4);
    for d in &pool {
        assert!(d.x + d.w <= 512 && d.y + d.h <= 512);
    }
    pool.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.level.cmp(&b.level))
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    let nms = NmsConfig::default();
    let mut replay: Vec<Detection> = Vec::new();
    for c in &pool {
        if replay.len() == 5 {
            break;
        }
        let ok = replay.iter().all(|k| {
            let (ax, ay) = k.center();
            let (bx, by) = c.center();
            (ax - bx).abs() >= 128.0 || (ay - by).abs() >= 128.0
        });
        if ok {
            replay.push(Detection {
                rank: replay.len(),
                ..*c
            });
        }
    }
    assert_eq!(
        detect_multiscale(&img, &tmpl, 5, &nms, &pyr, &params).unwrap(),
        replay
    );
}

#[test]
fn hand_set_pool_matches_exhaustive_oracle() {
    // three levels' worth of boxes with hand-set scores
    let mk = |x, y, s, score, level| Detection {
        rank: 0,
        x,
        y,
        w: s,
        h: s,
        score,
        level,
    };
    let pool = vec![
        mk(0, 0, 64, 0.95, 0),
        mk(40, 8, 128, 0.93, 1),
        mk(200, 0, 64, 0.90, 0),
        mk(160, 120, 256, 0.88, 2),
        mk(400, 300, 64, 0.70, 0),
        mk(320, 0, 128, 0.65, 1),
        mk(0, 400, 64, 0.60, 0),
        mk(80, 300, 128, 0.10, 1),
    ];
    for n in 1..=8 {
        let greedy: Vec<_> = greedy_select(&pool, n, &NmsConfig::default());
        let oracle = exhaustive_greedy(&pool, n, 128.0);
        let picked: Vec<_> = oracle
            .iter()
            .map(|&i| (pool[i].x, pool[i].y, pool[i].level))
            .collect();
        let got: Vec<_> = greedy.iter().map(|d| (d.x, d.y, d.level)).collect();
        assert_eq!(got, picked, "n = {n}");
    }
}

#[test]
fn random_score_grids_match_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..30 {
        let (w, h) = if trial == 0 {
            (5, 4)
        } else {
            (rng.random_range(1..5), rng.random_range(1..5))
        };
        let scores: Vec<f64> = (0..w * h)
            .map(|_| (rng.random_range(0..6) as f64) / 5.0)
            .collect();
        let grid = ScoreGrid {
            width: w,
            height: h,
            tcells_x: 2,
            tcells_y: 2,
            scores,
        };
        let n = rng.random_range(1..=6);
        let cell = 32;
        let dets = nms_top_n(&grid, n, &NmsConfig::default(), cell);

        let mut pool: Vec<Detection> = (0..h)
            .flat_map(|py| (0..w).map(move |px| (px, py)))
            .map(|(px, py)| Detection {
                rank: 0,
                x: px * cell,
                y: py * cell,
                w: 64,
                h: 64,
                score: grid.get(px, py),
                level: 0,
            })
            .collect();
        pool.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.y.cmp(&b.y))
                .then(a.x.cmp(&b.x))
        });
        let oracle: Vec<_> = exhaustive_greedy(&pool, n, 128.0)
            .into_iter()
            .map(|i| (pool[i].x, pool[i].y))
            .collect();
        let got: Vec<_> = dets.iter().map(|d| (d.x, d.y)).collect();
        assert_eq!(got, oracle, "trial {trial}");
    }
}

#[test]
fn negative_patches_reduce_distractor_response() {
    let params = HogParams::default();
    let mut img = GrayImage::filled(448, 192, BACKGROUND);
    img.paste(&ring(64, 0.36), 32, 64);
    img.paste(&square(64, 0.3), 288, 64);

    let positives = [ring(64, 0.34), ring(64, 0.36), ring(64, 0.38)];
    let pos_only = build_template(&positives, &[], &params).unwrap();
    let with_neg =
        build_template(&positives, &[img.crop(288, 64, 64, 64).unwrap()], &params).unwrap();

    let grid = extract(&img, &params).unwrap();
    let before = score_map(&grid, &pos_only).unwrap().get(36, 8);
    let after = score_map(&grid, &with_neg).unwrap().get(36, 8);
    assert!(after < before);

    let top = detect(&img, &with_neg, 5, &NmsConfig::default(), &params).unwrap();
    assert_eq!((top[0].x, top[0].y), (32, 64));
}

#[test]
fn annotation_errors_carry_index() {
    let img = GrayImage::filled(100, 100, 0.5);
    let anns = [
        Annotation::rect(0, 0, 64, 64, Polarity::Positive),
        Annotation::rect(0, 0, 64, 64, Polarity::Negative),
        Annotation::rect(50, 50, 64, 64, Polarity::Negative),
    ];
    let err = extract_patches(&img, &anns, 64).unwrap_err();
    assert!(err.to_string().starts_with("annotation 2:"), "{err}");
}

#[test]
fn template_scaling_preserves_detections() {
    let img = block_texture(320, 256, 8, 64, 128);
    let params = HogParams::default();
    let tmpl = build_template(&[img.crop(64, 128, 64, 64).unwrap()], &[], &params).unwrap();
    let scaled = Template::new(
        tmpl.tcells_x,
        tmpl.tcells_y,
        tmpl.bins,
        tmpl.weights.iter().map(|w| w * 7.5).collect(),
    )
    .unwrap();
    let nms = NmsConfig::default();
    let a = detect(&img, &tmpl, 5, &nms, &params).unwrap();
    let b = detect(&img, &scaled, 5, &nms, &params).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.x, x.y), (y.x, y.y));
        assert!((x.score - y.score).abs() < 1e-12);
    }
}
