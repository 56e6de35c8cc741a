#![allow(dead_code)]

use std::path::PathBuf;

use obic::bench::list_images;
use obic::{load_image, GrayImage, SectorGeometry};

/// Directory holding the USC-SIPI benchmark set, if the user provides one.
pub const USC_SIPI_ENV: &str = "OBIC_USC_SIPI_DIR";

pub struct Corpus {
    pub label: String,
    pub images: Vec<(String, GrayImage)>,
    pub is_usc_sipi: bool,
}

pub fn standin_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/standin")
}

/// The USC-SIPI set when `OBIC_USC_SIPI_DIR` is set, otherwise the bundled
/// stand-in photographs.
pub fn benchmark_corpus() -> Corpus {
    let (dir, is_usc_sipi) = match std::env::var_os(USC_SIPI_ENV) {
        Some(d) => (PathBuf::from(d), true),
        None => (standin_dir(), false),
    };
    let paths = list_images(&dir).unwrap_or_else(|e| panic!("listing {}: {e}", dir.display()));
    assert!(!paths.is_empty(), "no images in {}", dir.display());
    let images = paths
        .iter()
        .map(|p| (obic::bench::image_id(p), load_image(p).unwrap()))
        .collect();
    Corpus {
        label: format!(
            "{} ({})",
            if is_usc_sipi {
                "USC-SIPI"
            } else {
                "stand-in corpus"
            },
            dir.display()
        ),
        images,
        is_usc_sipi,
    }
}

/// Pearson correlation over the pixels where `mask` holds.
pub fn masked_correlation(
    a: &GrayImage,
    b: &GrayImage,
    mask: impl Fn(usize, usize) -> bool,
) -> f64 {
    let mut pairs = Vec::new();
    for r in 0..a.height() {
        for c in 0..a.width() {
            if mask(r, c) {
                pairs.push((a.at(r, c), b.at(r, c)));
            }
        }
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Dominant gradient orientation in degrees (image axes, `y` down, modulo
/// 180) from the structure tensor over pixels whose 3x3 neighborhood lies in
/// `mask`.
pub fn dominant_gradient_degrees(img: &GrayImage, mask: impl Fn(usize, usize) -> bool) -> f64 {
    let (mut jxx, mut jyy, mut jxy) = (0.0, 0.0, 0.0);
    for r in 1..img.height() - 1 {
        for c in 1..img.width() - 1 {
            let inside = (r - 1..=r + 1).all(|rr| (c - 1..=c + 1).all(|cc| mask(rr, cc)));
            if !inside {
                continue;
            }
            let gx = (img.at(r, c + 1) - img.at(r, c - 1)) / 2.0;
            let gy = (img.at(r + 1, c) - img.at(r - 1, c)) / 2.0;
            jxx += gx * gx;
            jyy += gy * gy;
            jxy += gx * gy;
        }
    }
    (0.5 * (2.0 * jxy).atan2(jxx - jyy))
        .to_degrees()
        .rem_euclid(180.0)
}

/// Smallest difference between two orientations modulo 180 degrees.
pub fn orientation_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

pub fn sector_mask(g: &SectorGeometry) -> impl Fn(usize, usize) -> bool + '_ {
    move |r, c| g.contains(c as f64, r as f64)
}

/// Deterministic pseudo-random image in `[0, 255)` (xorshift, test-only).
pub fn random_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    GrayImage::from_fn(width, height, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 255.0
    })
    .unwrap()
}
