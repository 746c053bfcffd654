//! Ranked detection boxes drawn over the input image.

use crate::detector::Detection;
use crate::imgio::RgbImage;

/// Stroke width of the box outline, in pixels.
pub const STROKE: usize = 2;

/// Linear green-to-red ramp: rank 0 is pure green, rank `n - 1` pure red.
pub fn rank_color(rank: usize, n: usize) -> [u8; 3] {
    if n <= 1 {
        return [0, 255, 0];
    }
    let t = rank.min(n - 1) as f64 / (n - 1) as f64;
    [
        (255.0 * t).round() as u8,
        (255.0 * (1.0 - t)).round() as u8,
        0,
    ]
}

/// Draws each detection as a `STROKE`-pixel outline inside its box. Lower
/// ranks are drawn last so the most confident box stays on top.
pub fn draw_detections(img: &mut RgbImage, dets: &[Detection]) {
    let n = dets.len();
    for d in dets.iter().rev() {
        let color = rank_color(d.rank, n);
        let x1 = (d.x + d.w).min(img.width());
        let y1 = (d.y + d.h).min(img.height());
        for y in d.y..y1 {
            for x in d.x..x1 {
                let on_stroke = x < d.x + STROKE
                    || x + STROKE >= d.x + d.w
                    || y < d.y + STROKE
                    || y + STROKE >= d.y + d.h;
                if on_stroke {
                    img.put_pixel(x, y, color);
                }
            }
        }
    }
}
