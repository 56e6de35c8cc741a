//! Grayscale raster type, PGM/PNG I/O, quantization and box downscaling.
//!
//! Intensities stay real-valued (nominally `[0, 255]`) through every pipeline.
//! Rounding to bytes happens only when writing files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale raster of real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from a function of 0-based `(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    /// Construction for internal pipelines whose outputs are finite by
    /// construction (convex or partition-of-unity combinations of finite input).
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
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

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Sample at 0-based `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sample at 1-based `(row, col)`; indices outside the raster are clamped
    /// to the nearest border pixel.
    #[inline]
    pub fn at_clamped(&self, row: i64, col: i64) -> f64 {
        let r = row.clamp(1, self.height as i64) as usize - 1;
        let c = col.clamp(1, self.width as i64) as usize - 1;
        self.data[r * self.width + c]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn transpose(&self) -> GrayImage {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.width {
            for r in 0..self.height {
                data.push(self.at(r, c));
            }
        }
        GrayImage::from_parts(self.height, self.width, data)
    }
}

/// Integer upscale factor `L >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScaleRatio(u32);

impl ScaleRatio {
    pub fn new(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("scale ratio must be >= 1".into()));
        }
        Ok(Self(l))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for ScaleRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for ScaleRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let l = s
            .trim()
            .trim_end_matches(['x', 'X'])
            .parse::<u32>()
            .map_err(|_| Error::Domain(format!("invalid scale ratio {s:?}")))?;
        ScaleRatio::new(l)
    }
}

/// ITU-R BT.601 luma.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Clamps to `[0, 255]` and rounds half away from zero.
pub fn quantize_clamp(v: f64) -> Result<u8> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("cannot quantize {v}")));
    }
    Ok(v.clamp(0.0, 255.0).round() as u8)
}

/// Mean of each `L x L` block.
pub fn box_downscale(img: &GrayImage, l: ScaleRatio) -> Result<GrayImage> {
    let l = l.as_usize();
    if !img.width.is_multiple_of(l) || !img.height.is_multiple_of(l) {
        return Err(Error::Dimension(format!(
            "{}x{} is not divisible by scale {l}",
            img.width, img.height
        )));
    }
    let (w, h) = (img.width / l, img.height / l);
    let norm = (l * l) as f64;
    let mut data = Vec::with_capacity(w * h);
    for br in 0..h {
        for bc in 0..w {
            let mut acc = 0.0;
            for r in br * l..(br + 1) * l {
                acc += img.row(r)[bc * l..(bc + 1) * l].iter().sum::<f64>();
            }
            data.push(acc / norm);
        }
    }
    Ok(GrayImage::from_parts(w, h, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Pgm,
    Png,
}

fn file_kind(path: &Path) -> Result<FileKind> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm") => Ok(FileKind::Pgm),
        Some("png") => Ok(FileKind::Png),
        _ => Err(Error::format(
            path,
            "unsupported extension (expected .pgm or .png)",
        )),
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let kind = file_kind(path)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match kind {
        FileKind::Pgm => decode_pgm(&bytes).map_err(|msg| Error::format(path, msg)),
        FileKind::Png => decode_png(&bytes).map_err(|msg| Error::format(path, msg)),
    }
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let kind = file_kind(path)?;
    let bytes = img
        .data
        .iter()
        .map(|&v| quantize_clamp(v))
        .collect::<Result<Vec<u8>>>()?;
    let encoded = match kind {
        FileKind::Pgm => encode_pgm(img.width, img.height, &bytes),
        FileKind::Png => {
            encode_png(img.width, img.height, bytes).map_err(|msg| Error::format(path, msg))?
        }
    };
    fs::write(path, encoded).map_err(|e| Error::io(path, e))
}

fn encode_pgm(width: usize, height: usize, bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() + 20);
    write!(out, "P5\n{width} {height}\n255\n").expect("write to Vec");
    out.extend_from_slice(bytes);
    out
}

fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if !bytes.starts_with(b"P5") {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PGM header")?;
    }
    // exactly one whitespace byte separates maxval from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed PGM header".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval}"));
    }
    let n = width * height;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| format!("truncated PGM raster: expected {n} bytes"))?;
    GrayImage::new(width, height, raster.iter().map(|&b| b as f64).collect())
        .map_err(|e| e.to_string())
}

fn encode_png(width: usize, height: usize, bytes: Vec<u8>) -> std::result::Result<Vec<u8>, String> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, bytes)
        .ok_or("raster size mismatch")?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(out.into_inner())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    use image::DynamicImage;

    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64).collect(),
        DynamicImage::ImageRgb8(buf) => {
            buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect()
        }
        DynamicImage::ImageRgba8(buf) => {
            buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect()
        }
        other => return Err(format!("unsupported PNG color type {:?}", other.color())),
    };
    GrayImage::new(w, h, data).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rules() {
        assert_eq!(quantize_clamp(-3.2).unwrap(), 0);
        assert_eq!(quantize_clamp(254.5).unwrap(), 255);
        assert_eq!(quantize_clamp(127.5).unwrap(), 128);
        assert_eq!(quantize_clamp(100.0).unwrap(), 100);
        assert_eq!(quantize_clamp(300.0).unwrap(), 255);
        assert!(quantize_clamp(f64::NAN).is_err());
        assert!(quantize_clamp(f64::INFINITY).is_err());
        for v in 0..=255u8 {
            assert_eq!(quantize_clamp(v as f64).unwrap(), v);
        }
    }

    #[test]
    fn luma_weights() {
        assert!((luma(255, 0, 0) - 76.245).abs() < 1e-12);
        assert!((luma(255, 255, 255) - 255.0).abs() < 1e-12);
    }

    #[test]
    fn image_invariants_enforced() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn box_downscale_examples() {
        let img = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = box_downscale(&img, ScaleRatio::new(2).unwrap()).unwrap();
        assert_eq!(out.data(), &[2.5]);

        let ramp = GrayImage::new(4, 4, (0..16).map(f64::from).collect()).unwrap();
        let out = box_downscale(&ramp, ScaleRatio::new(2).unwrap()).unwrap();
        assert_eq!((out.width(), out.height()), (2, 2));
        assert_eq!(out.data(), &[2.5, 4.5, 10.5, 12.5]);

        let flat = GrayImage::filled(12, 6, 77.0).unwrap();
        for l in [1, 2, 3, 6] {
            let out = box_downscale(&flat, ScaleRatio::new(l).unwrap()).unwrap();
            assert!(out.data().iter().all(|&v| v == 77.0));
        }

        let odd = GrayImage::filled(5, 4, 1.0).unwrap();
        assert!(matches!(
            box_downscale(&odd, ScaleRatio::new(2).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pgm_decode_example() {
        let bytes = b"P5\n# comment\n2 2\n255\n\x00\x40\x80\xff";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0.0, 64.0, 128.0, 255.0]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn save_quantizes() {
        let dir = tempfile::tempdir().unwrap();
        for (v, byte) in [(128.0, 128u8), (127.5, 128), (300.0, 255)] {
            let path = dir.path().join("one.pgm");
            save_image(&GrayImage::filled(1, 1, v).unwrap(), &path).unwrap();
            let bytes = fs::read(&path).unwrap();
            assert_eq!(*bytes.last().unwrap(), byte);
        }
    }

    #[test]
    fn unsupported_extension_and_missing_file() {
        let img = GrayImage::filled(1, 1, 0.0).unwrap();
        assert!(matches!(
            save_image(&img, "x.bmp"),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            load_image("/nonexistent/dir/x.pgm"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn rgb_png_converted_to_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let buf = image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 255, 255, 255]).unwrap();
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert!((img.at(0, 0) - 76.245).abs() < 1e-12);
        assert!((img.at(0, 1) - 255.0).abs() < 1e-12);
    }

    #[test]
    fn at_clamped_replicates_border() {
        let img = GrayImage::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(img.at_clamped(0, 0), 1.0);
        assert_eq!(img.at_clamped(-5, 3), 2.0);
        assert_eq!(img.at_clamped(3, 3), 4.0);
        assert_eq!(img.at_clamped(2, 1), 3.0);
    }
}
