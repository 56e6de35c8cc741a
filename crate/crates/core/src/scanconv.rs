//! Sector scan conversion: B-mode polar frames to Cartesian rasters.
//!
//! Every output pixel is mapped back into the polar grid and interpolated
//! there (inverse mapping), so the output has no holes. Angles are measured
//! from the downward vertical: a sample at angle `theta` and radius `r` lands
//! at `apex + (r sin(theta), r cos(theta)) * pixels_per_sample`, with `y`
//! growing downward.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::kernels::{bicubic_sample, bilinear_sample, lanczos_sample, FracCoord, KernelSpec};

/// Polar coordinates within this distance of an integer are treated as that
/// integer. OBIC and nearest-ceil are discontinuous at integers, so round-off
/// from the inverse mapping would otherwise move on-sample pixels.
const SNAP_EPS: f64 = 1e-9;

#[inline]
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP_EPS {
        r
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry {
    pub n_vectors: usize,
    pub n_samples: usize,
    pub start_angle: f64,
    pub end_angle: f64,
    pub apex_x: f64,
    pub apex_y: f64,
    pub pixels_per_sample: f64,
}

impl SectorGeometry {
    pub fn new(
        n_vectors: usize,
        n_samples: usize,
        start_angle: f64,
        end_angle: f64,
        apex: (f64, f64),
        pixels_per_sample: f64,
    ) -> Result<Self> {
        if n_vectors < 2 || n_samples < 2 {
            return Err(Error::Domain(format!(
                "sector needs >= 2 vectors and samples, got {n_vectors}x{n_samples}"
            )));
        }
        let finite = [start_angle, end_angle, apex.0, apex.1, pixels_per_sample]
            .iter()
            .all(|v| v.is_finite());
        if !finite || end_angle <= start_angle || pixels_per_sample <= 0.0 {
            return Err(Error::Domain(format!(
                "invalid sector: angles [{start_angle}, {end_angle}], {pixels_per_sample} px/sample"
            )));
        }
        Ok(SectorGeometry {
            n_vectors,
            n_samples,
            start_angle,
            end_angle,
            apex_x: apex.0,
            apex_y: apex.1,
            pixels_per_sample,
        })
    }

    /// Geometry whose apex is placed so the whole sector fits the canvas
    /// returned by [`SectorGeometry::canvas_size`].
    pub fn fitted(
        n_vectors: usize,
        n_samples: usize,
        start_angle: f64,
        end_angle: f64,
        pixels_per_sample: f64,
    ) -> Result<Self> {
        let mut g = Self::new(
            n_vectors,
            n_samples,
            start_angle,
            end_angle,
            (0.0, 0.0),
            pixels_per_sample,
        )?;
        let (xmin, _, ymin, _) = g.extent();
        g.apex_x = -xmin;
        g.apex_y = -ymin;
        Ok(g)
    }

    /// 90 degree sector, 128 vectors, 512 samples, one pixel per sample.
    pub fn default_phantom() -> Self {
        Self::fitted(128, 512, -PI / 4.0, PI / 4.0, 1.0).expect("valid default geometry")
    }

    pub fn max_radius(&self) -> f64 {
        (self.n_samples - 1) as f64
    }

    /// Bounding box of the sector relative to the apex, in pixels:
    /// `(xmin, xmax, ymin, ymax)`.
    fn extent(&self) -> (f64, f64, f64, f64) {
        let radius = self.max_radius() * self.pixels_per_sample;
        let mut angles = vec![self.start_angle, self.end_angle];
        for a in [-PI, -FRAC_PI_2, 0.0, FRAC_PI_2, PI] {
            if a > self.start_angle && a < self.end_angle {
                angles.push(a);
            }
        }
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for a in angles {
            let (x, y) = (radius * a.sin(), radius * a.cos());
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        (xmin, xmax, ymin, ymax)
    }

    /// Smallest `(width, height)` raster that holds the whole sector when the
    /// apex is placed by [`SectorGeometry::fitted`].
    pub fn canvas_size(&self) -> (usize, usize) {
        let (xmin, xmax, ymin, ymax) = self.extent();
        (
            (xmax - xmin).ceil() as usize + 1,
            (ymax - ymin).ceil() as usize + 1,
        )
    }

    /// Angle of vector `i`.
    pub fn vector_angle(&self, i: usize) -> f64 {
        self.start_angle
            + i as f64 * (self.end_angle - self.start_angle) / (self.n_vectors - 1) as f64
    }

    /// Cartesian pixel position of a (possibly fractional) polar position.
    pub fn forward(&self, theta: f64, radius: f64) -> (f64, f64) {
        let r = radius * self.pixels_per_sample;
        (self.apex_x + r * theta.sin(), self.apex_y + r * theta.cos())
    }

    /// Fractional `(vector, sample)` indices (0-based) for a Cartesian point,
    /// or `None` outside the sector.
    pub fn inverse(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let dx = x - self.apex_x;
        let dy = y - self.apex_y;
        let radius = dx.hypot(dy) / self.pixels_per_sample;
        if radius > self.max_radius() {
            return None;
        }
        let span = self.end_angle - self.start_angle;
        let last = (self.n_vectors - 1) as f64;
        if radius == 0.0 {
            return Some((last / 2.0, 0.0));
        }
        let theta = dx.atan2(dy);
        if theta < self.start_angle || theta > self.end_angle {
            return None;
        }
        Some(((theta - self.start_angle) * last / span, radius))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.inverse(x, y).is_some()
    }
}

/// One B-mode frame: `n_vectors` A-mode vectors of `n_samples` each,
/// stored vector-major as a raster with one row per vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFrame {
    geometry: SectorGeometry,
    samples: GrayImage,
}

impl PolarFrame {
    pub fn new(geometry: SectorGeometry, samples: Vec<f64>) -> Result<Self> {
        let samples = GrayImage::new(geometry.n_samples, geometry.n_vectors, samples)?;
        Ok(PolarFrame { geometry, samples })
    }

    pub fn geometry(&self) -> &SectorGeometry {
        &self.geometry
    }

    /// Frame as a raster: row = vector, column = radial sample.
    pub fn as_image(&self) -> &GrayImage {
        &self.samples
    }

    pub fn samples(&self) -> &[f64] {
        self.samples.data()
    }

    /// Interpolates the polar grid at fractional 0-based `(vector, sample)`.
    pub fn sample_at(&self, v: f64, s: f64, kernel: &KernelSpec) -> f64 {
        let img = &self.samples;
        let (v, s) = (snap(v), snap(s));
        if let KernelSpec::NearestCeil = kernel {
            let r = v.ceil() as i64 + 1;
            let c = s.ceil() as i64 + 1;
            return img.at_clamped(r, c);
        }
        let k = kernel.frac_scale();
        let row = FracCoord::split(v + 1.0, k);
        let col = FracCoord::split(s + 1.0, k);
        match kernel {
            KernelSpec::Bilinear => bilinear_sample(img, row.base, col.base, col.frac, row.frac),
            KernelSpec::Bicubic | KernelSpec::Obic { .. } => {
                bicubic_sample(img, row.base, col.base, col.frac, row.frac)
            }
            KernelSpec::Lanczos(lobes) => {
                lanczos_sample(img, row.base, col.base, col.frac, row.frac, *lobes)
            }
            KernelSpec::NearestCeil => unreachable!(),
        }
    }

    /// Value at a Cartesian point; 0 outside the sector.
    pub fn scan_point(&self, x: f64, y: f64, kernel: &KernelSpec) -> f64 {
        match self.geometry.inverse(x, y) {
            Some((v, s)) => self.sample_at(v, s, kernel),
            None => 0.0,
        }
    }

    /// Writes the OPF1 encoding: a text header line followed by
    /// little-endian `f32` samples, vector-major.
    pub fn write_opf<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = &self.geometry;
        writeln!(
            out,
            "OPF1 {} {} {} {} {}",
            g.n_vectors, g.n_samples, g.start_angle, g.end_angle, g.pixels_per_sample
        )?;
        let mut buf = Vec::with_capacity(self.samples.data().len() * 4);
        for &v in self.samples.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.write_all(&buf)
    }

    /// Reads an OPF1 stream. The apex is placed by [`SectorGeometry::fitted`].
    pub fn read_opf<R: Read>(mut input: R) -> std::result::Result<Self, String> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| e.to_string())?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or("missing OPF1 header line")?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| "OPF1 header is not UTF-8")?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 6 || fields[0] != "OPF1" {
            return Err(format!("malformed OPF1 header {header:?}"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| format!("bad integer {s:?}"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
        let geometry = SectorGeometry::fitted(
            int(fields[1])?,
            int(fields[2])?,
            real(fields[3])?,
            real(fields[4])?,
            real(fields[5])?,
        )
        .map_err(|e| e.to_string())?;
        let body = &bytes[nl + 1..];
        let expected = geometry.n_vectors * geometry.n_samples * 4;
        if body.len() != expected {
            return Err(format!(
                "OPF1 body has {} bytes, expected {expected}",
                body.len()
            ));
        }
        let samples = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        PolarFrame::new(geometry, samples).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_opf(std::io::BufReader::new(file)).map_err(|msg| Error::format(path, msg))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_opf(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Scan-converts onto an `out_width x out_height` raster whose pixel `(px,
/// py)` sits at Cartesian `(px, py)`. Pixels outside the sector are 0.
pub fn scan_convert(
    frame: &PolarFrame,
    out_width: usize,
    out_height: usize,
    kernel: &KernelSpec,
) -> Result<GrayImage> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::Dimension(format!(
            "output must be at least 1x1, got {out_width}x{out_height}"
        )));
    }
    let mut data = vec![0.0; out_width * out_height];
    data.par_chunks_mut(out_width)
        .enumerate()
        .for_each(|(py, row)| {
            for (px, out) in row.iter_mut().enumerate() {
                *out = frame.scan_point(px as f64, py as f64, kernel);
            }
        });
    GrayImage::new(out_width, out_height, data)
}

/// Display settings applied after scan conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplaySettings {
    pub gamma: f64,
    pub brightness: f64,
    pub contrast: f64,
}

impl Default for DisplaySettings {
    fn default() -> Self {
        DisplaySettings {
            gamma: 0.6,
            brightness: 4.2,
            contrast: 120.4,
        }
    }
}

/// `out = (contrast / 100) * 255 * (v / 255)^gamma + brightness`, clamped to
/// `[0, 255]`. Inputs are clamped to `[0, 255]` first so overshoot from
/// negative-lobe kernels cannot produce NaN.
pub fn post_process(
    img: &GrayImage,
    gamma: f64,
    brightness: f64,
    contrast: f64,
) -> Result<GrayImage> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    if !(brightness.is_finite() && contrast.is_finite()) {
        return Err(Error::Domain(
            "brightness and contrast must be finite".into(),
        ));
    }
    let gain = contrast / 100.0 * 255.0;
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let norm = v.clamp(0.0, 255.0) / 255.0;
            (gain * norm.powf(gamma) + brightness).clamp(0.0, 255.0)
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}

pub fn post_process_with(img: &GrayImage, settings: &DisplaySettings) -> Result<GrayImage> {
    post_process(img, settings.gamma, settings.brightness, settings.contrast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::LanczosLobes;

    fn kernels() -> Vec<KernelSpec> {
        vec![
            KernelSpec::NearestCeil,
            KernelSpec::Bilinear,
            KernelSpec::Bicubic,
            KernelSpec::Obic { k: 1.1834 },
            KernelSpec::Lanczos(LanczosLobes::Two),
            KernelSpec::Lanczos(LanczosLobes::Three),
        ]
    }

    fn small_geometry() -> SectorGeometry {
        SectorGeometry::fitted(9, 40, -0.6, 0.6, 1.5).unwrap()
    }

    #[test]
    fn geometry_validation() {
        assert!(SectorGeometry::new(1, 10, -0.5, 0.5, (0.0, 0.0), 1.0).is_err());
        assert!(SectorGeometry::new(4, 10, 0.5, 0.5, (0.0, 0.0), 1.0).is_err());
        assert!(SectorGeometry::new(4, 10, -0.5, 0.5, (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn fitted_canvas_holds_sector() {
        let g = SectorGeometry::default_phantom();
        let (w, h) = g.canvas_size();
        for i in [0, 64, 127] {
            let (x, y) = g.forward(g.vector_angle(i), g.max_radius());
            assert!(x >= -1e-9 && x <= (w - 1) as f64 + 1e-9, "x {x} in {w}");
            assert!(y >= -1e-9 && y <= (h - 1) as f64 + 1e-9, "y {y} in {h}");
        }
        assert_eq!(h, 512);
    }

    #[test]
    fn sample_positions_reproduce_samples() {
        let g = small_geometry();
        let samples: Vec<f64> = (0..g.n_vectors * g.n_samples)
            .map(|i| ((i * 37) % 101) as f64)
            .collect();
        let frame = PolarFrame::new(g, samples).unwrap();
        for kernel in kernels() {
            for i in 1..g.n_vectors - 1 {
                for j in [1, 7, 20, 38] {
                    let (x, y) = g.forward(g.vector_angle(i), j as f64);
                    let got = frame.scan_point(x, y, &kernel);
                    let want = frame.as_image().at(i, j);
                    assert!(
                        (got - want).abs() < 1e-9,
                        "{kernel} ({i},{j}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn constant_frame_and_background() {
        let g = small_geometry();
        let frame = PolarFrame::new(g, vec![73.0; g.n_vectors * g.n_samples]).unwrap();
        let (w, h) = g.canvas_size();
        for kernel in kernels() {
            let out = scan_convert(&frame, w, h, &kernel).unwrap();
            for py in 0..h {
                for px in 0..w {
                    let v = out.at(py, px);
                    if g.contains(px as f64, py as f64) {
                        assert!((v - 73.0).abs() < 1e-9);
                    } else {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
        // straight up from the apex is outside a downward-opening sector
        assert_eq!(
            frame.scan_point(g.apex_x, g.apex_y - 5.0, &KernelSpec::Bilinear),
            0.0
        );
    }

    #[test]
    fn apex_uses_middle_vector() {
        let g = SectorGeometry::fitted(3, 4, -0.5, 0.5, 1.0).unwrap();
        let frame = PolarFrame::new(
            g,
            vec![1.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(
            frame.scan_point(g.apex_x, g.apex_y, &KernelSpec::Bicubic),
            5.0
        );
    }

    #[test]
    fn post_process_examples() {
        let ramp = GrayImage::from_fn(16, 16, |r, c| (r * 16 + c) as f64).unwrap();
        let same = post_process(&ramp, 1.0, 0.0, 100.0).unwrap();
        for (a, b) in ramp.data().iter().zip(same.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let px = |v: f64| {
            let img = GrayImage::filled(1, 1, v).unwrap();
            post_process_with(&img, &DisplaySettings::default())
                .unwrap()
                .data()[0]
        };
        assert!((px(0.0) - 4.2).abs() < 1e-12);
        assert_eq!(px(255.0), 255.0);
        assert!(post_process(&ramp, 0.0, 0.0, 100.0).is_err());
        assert!(post_process(&ramp, -1.0, 0.0, 100.0).is_err());
    }

    #[test]
    fn opf_header_and_size_checks() {
        let g = small_geometry();
        let frame = PolarFrame::new(g, vec![1.5; g.n_vectors * g.n_samples]).unwrap();
        let mut buf = Vec::new();
        frame.write_opf(&mut buf).unwrap();
        assert!(buf.starts_with(b"OPF1 9 40 -0.6 0.6 1.5\n"));
        let back = PolarFrame::read_opf(&buf[..]).unwrap();
        assert_eq!(back, frame);
        buf.pop();
        assert!(PolarFrame::read_opf(&buf[..]).is_err());
        assert!(PolarFrame::read_opf(&b"OPF2 2 2 0 1 1\n"[..]).is_err());
    }
}
