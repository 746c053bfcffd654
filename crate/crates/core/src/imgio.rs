//! Image decoding, encoding, grayscale conversion and resampling.
//!
//! Supported containers are binary PGM (`P5`), binary PPM (`P6`), both with
//! maxval 255, and 8-bit PNG. Pixel coordinates put the origin at the top-left
//! pixel with x growing rightward and y growing downward.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Single-channel luminance image with samples in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Wraps `data`, checking the length and the `[0, 1]` sample range.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Argument(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument(format!(
                "sample {i} = {} is outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel; results are
    /// clamped into `[0, 1]`.
    ///
    /// # Panics
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Returns the `w`×`h` sub-image with top-left corner `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<GrayImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                w: w as i64,
                h: h as i64,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Ok(GrayImage {
            width: w,
            height: h,
            data,
        })
    }

    /// Copies `patch` into `self` with its top-left corner at `(x, y)`.
    /// Pixels falling outside `self` are skipped.
    pub fn paste(&mut self, patch: &GrayImage, x: usize, y: usize) {
        for py in 0..patch.height {
            let ty = y + py;
            if ty >= self.height {
                break;
            }
            for px in 0..patch.width {
                let tx = x + px;
                if tx >= self.width {
                    break;
                }
                self.data[ty * self.width + tx] = patch.get(px, py);
            }
        }
    }

    /// Quantizes to 8-bit samples with round-to-nearest.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Interleaved 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != 3 * width * height {
            return Err(Error::Argument(format!(
                "expected {} bytes for {width}x{height} RGB, got {}",
                3 * width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Replicates each gray sample across the three channels.
    pub fn from_gray(img: &GrayImage) -> Self {
        let data = img.to_u8().into_iter().flat_map(|v| [v, v, v]).collect();
        Self {
            width: img.width,
            height: img.height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Either kind of image, for [`save_image`].
#[derive(Debug, Clone, Copy)]
pub enum AnyImage<'a> {
    Gray(&'a GrayImage),
    Rgb(&'a RgbImage),
}

impl<'a> From<&'a GrayImage> for AnyImage<'a> {
    fn from(img: &'a GrayImage) -> Self {
        AnyImage::Gray(img)
    }
}

impl<'a> From<&'a RgbImage> for AnyImage<'a> {
    fn from(img: &'a RgbImage) -> Self {
        AnyImage::Rgb(img)
    }
}

/// Reads and decodes a PNG, PGM or PPM file. Gray inputs are replicated
/// across the three channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes an in-memory PNG, PGM or PPM.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(Error::decode(0, "unrecognised image signature"))
    }
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::decode(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::decode(start, format!("{what} out of range")))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<RgbImage> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut cur = PnmCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::decode(maxval_at, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::decode(
            maxval_at,
            format!("maxval {maxval} unsupported, expected 255"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::decode(cur.pos, "missing whitespace after maxval")),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::decode(cur.pos, "image dimensions overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < len {
        return Err(Error::decode(
            bytes.len(),
            format!(
                "truncated payload: expected {len} bytes, found {}",
                payload.len()
            ),
        ));
    }
    let payload = &payload[..len];
    let data = if channels == 1 {
        payload.iter().flat_map(|&v| [v, v, v]).collect()
    } else {
        payload.to_vec()
    };
    RgbImage::new(width, height, data)
}

fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let png_err = |e: png::DecodingError| Error::decode(0, format!("png: {e}"));
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::decode(0, "png: image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let pixels = &buf[..info.buffer_size()];
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Grayscale => pixels.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => pixels
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0]])
            .collect(),
        png::ColorType::Rgb => pixels.to_vec(),
        png::ColorType::Rgba => pixels
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        other => return Err(Error::Format(format!("png color type {other:?}"))),
    };
    RgbImage::new(width, height, data)
}

/// Writes `img` to `path`. A `.png` extension selects PNG; otherwise gray
/// images are written as PGM and color images as PPM.
pub fn save_image<'a>(img: impl Into<AnyImage<'a>>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image(img.into(), is_png_path(path))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn is_png_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Encodes to PNG or to binary PGM/PPM.
pub fn encode_image(img: AnyImage<'_>, png: bool) -> Result<Vec<u8>> {
    let (width, height, channels, raster) = match img {
        AnyImage::Gray(g) => (g.width(), g.height(), 1, g.to_u8()),
        AnyImage::Rgb(c) => (c.width(), c.height(), 3, c.data().to_vec()),
    };
    if png {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(if channels == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let enc_err = |e: png::EncodingError| Error::Format(format!("png: {e}"));
        let mut writer = enc.write_header().map_err(enc_err)?;
        writer.write_image_data(&raster).map_err(enc_err)?;
        writer.finish().map_err(enc_err)?;
        Ok(out)
    } else {
        let magic = if channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
        out.extend_from_slice(&raster);
        Ok(out)
    }
}

/// Luminance with the 0.2989 / 0.5870 / 0.1140 channel weights.
///
/// The weights sum to 0.9999, so neutral pixels (R = G = B) are passed
/// through as `R / 255`; white stays exactly 1.
pub fn to_gray(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            if p[0] == p[1] && p[1] == p[2] {
                return p[0] as f64 / 255.0;
            }
            let l = (0.2989 * p[0] as f64 + 0.5870 * p[1] as f64 + 0.1140 * p[2] as f64) / 255.0;
            l.clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    let v = a + (b - a) * t;
    v.clamp(a.min(b), a.max(b))
}

/// Resamples to `new_w`×`new_h`.
///
/// Exact halving in both directions uses a 2×2 box average; every other size
/// uses bilinear interpolation with pixel centers at half-integer coordinates.
pub fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> Result<GrayImage> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Argument(format!(
            "target size must be positive, got {new_w}x{new_h}"
        )));
    }
    if new_w == img.width && new_h == img.height {
        return Ok(img.clone());
    }
    if 2 * new_w == img.width && 2 * new_h == img.height {
        return Ok(halve(img));
    }

    let sx = img.width as f64 / new_w as f64;
    let sy = img.height as f64 / new_h as f64;
    let sample_axis = |dst: usize, scale: f64, len: usize| {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, src - i0 as f64)
    };
    let cols: Vec<_> = (0..new_w).map(|x| sample_axis(x, sx, img.width)).collect();

    let mut data = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let (y0, y1, fy) = sample_axis(y, sy, img.height);
        for &(x0, x1, fx) in &cols {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), fx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), fx);
            data.push(lerp(top, bottom, fy));
        }
    }
    Ok(GrayImage {
        width: new_w,
        height: new_h,
        data,
    })
}

fn halve(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width / 2, img.height / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = (2 * x, 2 * y);
            let top = img.get(sx, sy) + img.get(sx + 1, sy);
            let bottom = img.get(sx, sy + 1) + img.get(sx + 1, sy + 1);
            data.push(((top + bottom) * 0.25).clamp(0.0, 1.0));
        }
    }
    GrayImage {
        width: w,
        height: h,
        data,
    }
}
