//! Synthetic edge scenes and their polar sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::kernels::{bilinear_sample, FracCoord};
use crate::scanconv::{PolarFrame, SectorGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Oblique,
    Horizontal,
    Vertical,
}

impl EdgeKind {
    /// Orientation of the edge normal in degrees, image axes (`y` down),
    /// modulo 180.
    pub fn normal_degrees(self, width: usize, height: usize) -> f64 {
        match self {
            EdgeKind::Horizontal => 90.0,
            EdgeKind::Vertical => 0.0,
            // diagonal runs along (width, height); the normal is perpendicular
            EdgeKind::Oblique => {
                let along = (height as f64).atan2(width as f64).to_degrees();
                (along + 90.0).rem_euclid(180.0)
            }
        }
    }
}

impl std::str::FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oblique" => Ok(EdgeKind::Oblique),
            "horizontal" => Ok(EdgeKind::Horizontal),
            "vertical" => Ok(EdgeKind::Vertical),
            other => Err(Error::Domain(format!("unknown edge kind {other:?}"))),
        }
    }
}

/// Two-region scene split by a straight boundary. The region above (or left
/// of) the boundary is `hi`.
///
/// With 1-based `(r, c)`: horizontal is `hi` for `r <= height / 2`, vertical
/// for `c <= width / 2`, oblique for `c * height >= r * width` (the main
/// diagonal and everything above it).
pub fn edge_scene(
    kind: EdgeKind,
    width: usize,
    height: usize,
    lo: f64,
    hi: f64,
) -> Result<GrayImage> {
    if width < 8 || height < 8 {
        return Err(Error::Dimension(format!(
            "edge scene must be at least 8x8, got {width}x{height}"
        )));
    }
    if !(0.0..=255.0).contains(&lo) || !(0.0..=255.0).contains(&hi) || lo >= hi {
        return Err(Error::Domain(format!(
            "need 0 <= lo < hi <= 255, got lo {lo}, hi {hi}"
        )));
    }
    GrayImage::from_fn(width, height, |r0, c0| {
        let (r, c) = (r0 + 1, c0 + 1);
        let upper = match kind {
            EdgeKind::Horizontal => r <= height / 2,
            EdgeKind::Vertical => c <= width / 2,
            EdgeKind::Oblique => c * height >= r * width,
        };
        if upper {
            hi
        } else {
            lo
        }
    })
}

/// Samples `scene` along each beam of `geometry` (bilinear, border-clamped)
/// and adds Gaussian noise drawn from a generator seeded with `seed`.
pub fn polar_sample(
    scene: &GrayImage,
    geometry: &SectorGeometry,
    noise_sigma: f64,
    seed: u64,
) -> Result<PolarFrame> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let mut samples = Vec::with_capacity(geometry.n_vectors * geometry.n_samples);
    for i in 0..geometry.n_vectors {
        let theta = geometry.vector_angle(i);
        for j in 0..geometry.n_samples {
            let (x, y) = geometry.forward(theta, j as f64);
            let col = FracCoord::split(x + 1.0, 1.0);
            let row = FracCoord::split(y + 1.0, 1.0);
            samples.push(bilinear_sample(
                scene, row.base, col.base, col.frac, row.frac,
            ));
        }
    }
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
        for s in &mut samples {
            *s += normal.sample(&mut rng);
        }
    }
    PolarFrame::new(*geometry, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_and_vertical_scenes() {
        let h = edge_scene(EdgeKind::Horizontal, 8, 8, 0.0, 255.0).unwrap();
        for r in 0..8 {
            let want = if r < 4 { 255.0 } else { 0.0 };
            assert!(h.row(r).iter().all(|&v| v == want));
        }
        let v = edge_scene(EdgeKind::Vertical, 8, 8, 0.0, 255.0).unwrap();
        assert_eq!(v, h.transpose());
    }

    #[test]
    fn oblique_membership() {
        let o = edge_scene(EdgeKind::Oblique, 8, 8, 10.0, 200.0).unwrap();
        for r in 1..=8 {
            for c in 1..=8 {
                let want = if c >= r { 200.0 } else { 10.0 };
                assert_eq!(o.at(r - 1, c - 1), want);
            }
        }
    }

    #[test]
    fn scene_argument_checks() {
        assert!(edge_scene(EdgeKind::Oblique, 7, 8, 0.0, 1.0).is_err());
        assert!(edge_scene(EdgeKind::Oblique, 8, 8, 5.0, 5.0).is_err());
        assert!(edge_scene(EdgeKind::Oblique, 8, 8, -1.0, 5.0).is_err());
        assert!(edge_scene(EdgeKind::Oblique, 8, 8, 0.0, 256.0).is_err());
        assert!("diagonal".parse::<EdgeKind>().is_err());
    }

    #[test]
    fn constant_scene_samples_constant() {
        let g = SectorGeometry::fitted(16, 64, -0.7, 0.7, 1.0).unwrap();
        let (w, h) = g.canvas_size();
        let scene = GrayImage::filled(w, h, 100.0).unwrap();
        let frame = polar_sample(&scene, &g, 0.0, 1).unwrap();
        assert!(frame.samples().iter().all(|&v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn noise_is_seeded() {
        let g = SectorGeometry::fitted(8, 32, -0.5, 0.5, 1.0).unwrap();
        let (w, h) = g.canvas_size();
        let scene = edge_scene(EdgeKind::Vertical, w.max(8), h.max(8), 20.0, 220.0).unwrap();
        let a = polar_sample(&scene, &g, 3.0, 7).unwrap();
        let b = polar_sample(&scene, &g, 3.0, 7).unwrap();
        let c = polar_sample(&scene, &g, 3.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(polar_sample(&scene, &g, -1.0, 7).is_err());
    }

    #[test]
    fn edge_normals() {
        assert_eq!(EdgeKind::Horizontal.normal_degrees(10, 10), 90.0);
        assert_eq!(EdgeKind::Vertical.normal_degrees(10, 10), 0.0);
        assert!((EdgeKind::Oblique.normal_degrees(10, 10) - 135.0).abs() < 1e-12);
    }
}
