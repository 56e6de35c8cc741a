//! Interpolation kernels and the integer-ratio upscale driver.
//!
//! Coordinates are 1-based: destination pixel `r'` maps to the source
//! coordinate `x = r' / L`, whose integer part is the base tap and whose
//! fractional part drives the weights. Neighbors outside the raster are
//! clamped to the border.
//!
//! The cubic weights use `1 - 2a^2 + a^3` for the on-base tap. With that
//! term the four taps always sum to one, for any real `a`, which is what
//! lets [`KernelSpec::Obic`] push fractions outside `[0, 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, ScaleRatio};

/// Coefficient shipped for OBIC when no sweep has been run.
pub const DEFAULT_OBIC_K: f64 = 1.1834;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanczosLobes {
    Two,
    Three,
}

impl LanczosLobes {
    pub fn count(self) -> usize {
        match self {
            LanczosLobes::Two => 2,
            LanczosLobes::Three => 3,
        }
    }

    pub fn from_count(lobes: usize) -> Result<Self> {
        match lobes {
            2 => Ok(LanczosLobes::Two),
            3 => Ok(LanczosLobes::Three),
            n => Err(Error::Domain(format!(
                "Lanczos lobes must be 2 or 3, got {n}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    NearestCeil,
    Bilinear,
    Bicubic,
    /// Bicubic with both fractional offsets multiplied by `k`.
    Obic {
        k: f64,
    },
    Lanczos(LanczosLobes),
}

impl KernelSpec {
    pub fn obic(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::Domain(format!(
                "OBIC coefficient must be finite, got {k}"
            )));
        }
        Ok(KernelSpec::Obic { k })
    }

    /// Short method name used on the command line and in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::NearestCeil => "nn",
            KernelSpec::Bilinear => "bilinear",
            KernelSpec::Bicubic => "bicubic",
            KernelSpec::Obic { .. } => "obic",
            KernelSpec::Lanczos(LanczosLobes::Two) => "lanczos2",
            KernelSpec::Lanczos(LanczosLobes::Three) => "lanczos3",
        }
    }

    /// Parses a method name; `obic` takes the supplied coefficient.
    pub fn parse_with_k(name: &str, k: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "nn" | "nearest" => Ok(KernelSpec::NearestCeil),
            "bilinear" | "bi" => Ok(KernelSpec::Bilinear),
            "bicubic" | "bic" => Ok(KernelSpec::Bicubic),
            "obic" => KernelSpec::obic(k),
            "lanczos2" | "la2" => Ok(KernelSpec::Lanczos(LanczosLobes::Two)),
            "lanczos3" | "la3" => Ok(KernelSpec::Lanczos(LanczosLobes::Three)),
            other => Err(Error::Domain(format!(
                "unknown interpolation method {other:?}"
            ))),
        }
    }

    /// Coefficient applied to fractional offsets (1 for everything but OBIC).
    pub fn frac_scale(&self) -> f64 {
        match *self {
            KernelSpec::Obic { k } => k,
            _ => 1.0,
        }
    }

    /// The six methods compared in the benchmark, OBIC at `k`.
    pub fn benchmark_set(k: f64) -> Result<Vec<KernelSpec>> {
        Ok(vec![
            KernelSpec::NearestCeil,
            KernelSpec::Bilinear,
            KernelSpec::Bicubic,
            KernelSpec::Lanczos(LanczosLobes::Two),
            KernelSpec::Lanczos(LanczosLobes::Three),
            KernelSpec::obic(k)?,
        ])
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelSpec::parse_with_k(s, DEFAULT_OBIC_K)
    }
}

/// Source coordinate split into a 1-based base index and a fractional offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracCoord {
    pub base: i64,
    pub frac: f64,
}

impl FracCoord {
    /// Splits a 1-based real coordinate and scales its fractional part by `k`.
    #[inline]
    pub fn split(x: f64, k: f64) -> Self {
        let base = x.floor();
        FracCoord {
            base: base as i64,
            frac: k * (x - base),
        }
    }
}

/// Maps a 1-based destination index to the source grid: `x = dest / L`.
///
/// # Panics
/// If `dest_index` is zero.
pub fn map_coord(dest_index: usize, l: ScaleRatio, k: f64) -> FracCoord {
    assert!(dest_index >= 1, "destination indices are 1-based");
    FracCoord::split(dest_index as f64 / l.as_f64(), k)
}

/// Weights for the taps at offsets -1, 0, +1, +2 from the base sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicWeights(pub [f64; 4]);

impl CubicWeights {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[inline]
pub fn cubic_weights(frac: f64) -> CubicWeights {
    let a = frac;
    let a2 = a * a;
    let a3 = a2 * a;
    let om = 1.0 - a;
    CubicWeights([
        -a * om * om,
        1.0 - 2.0 * a2 + a3,
        a * (1.0 + a - a2),
        -a2 * om,
    ])
}

/// Four-tap bilinear blend. `a` is the column fraction, `b` the row
/// fraction; `base_r`/`base_c` are 1-based.
pub fn bilinear_sample(img: &GrayImage, base_r: i64, base_c: i64, a: f64, b: f64) -> f64 {
    let s00 = img.at_clamped(base_r, base_c);
    let s01 = img.at_clamped(base_r, base_c + 1);
    let s10 = img.at_clamped(base_r + 1, base_c);
    let s11 = img.at_clamped(base_r + 1, base_c + 1);
    (1.0 - a) * (1.0 - b) * s00 + a * (1.0 - b) * s01 + (1.0 - a) * b * s10 + a * b * s11
}

/// Separable bicubic: four horizontal passes (weights from `a`) over columns
/// `c-1..=c+2`, one for each row `r-1..=r+2`, then a vertical pass with
/// weights from `b`.
pub fn bicubic_sample(img: &GrayImage, base_r: i64, base_c: i64, a: f64, b: f64) -> f64 {
    separable_sample(
        img,
        base_r,
        base_c,
        &cubic_weights(b).0,
        &cubic_weights(a).0,
        -1,
    )
}

/// `sin(pi x) / (pi x)`, exactly 0 at nonzero integers and 1 at 0.
#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x == x.trunc() {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Normalized Lanczos taps for offsets `-lobes+1..=lobes`.
pub fn lanczos_weights(frac: f64, lobes: LanczosLobes) -> Vec<f64> {
    let mut taps = [0.0; 6];
    let n = fill_lanczos(frac, lobes, &mut taps);
    taps[..n].to_vec()
}

fn fill_lanczos(frac: f64, lobes: LanczosLobes, out: &mut [f64; 6]) -> usize {
    let n = lobes.count() as i64;
    let taps = 2 * n as usize;
    let mut sum = 0.0;
    for (slot, t) in out.iter_mut().zip(-n + 1..=n) {
        let d = frac - t as f64;
        let w = sinc(d) * sinc(d / n as f64);
        *slot = w;
        sum += w;
    }
    for w in &mut out[..taps] {
        *w /= sum;
    }
    taps
}

pub fn lanczos_sample(
    img: &GrayImage,
    base_r: i64,
    base_c: i64,
    a: f64,
    b: f64,
    lobes: LanczosLobes,
) -> f64 {
    let mut wr = [0.0; 6];
    let mut wc = [0.0; 6];
    let n = fill_lanczos(b, lobes, &mut wr);
    fill_lanczos(a, lobes, &mut wc);
    let first = -(lobes.count() as i64) + 1;
    separable_sample(img, base_r, base_c, &wr[..n], &wc[..n], first)
}

/// Horizontal passes first, then one vertical pass. `first` is the offset of
/// tap 0 relative to the base index on both axes.
#[inline]
fn separable_sample(
    img: &GrayImage,
    base_r: i64,
    base_c: i64,
    row_weights: &[f64],
    col_weights: &[f64],
    first: i64,
) -> f64 {
    let mut acc = 0.0;
    for (i, wr) in row_weights.iter().enumerate() {
        let r = base_r + first + i as i64;
        let mut p = 0.0;
        for (j, wc) in col_weights.iter().enumerate() {
            p += wc * img.at_clamped(r, base_c + first + j as i64);
        }
        acc += wr * p;
    }
    acc
}

/// Replicates every source pixel into an `L x L` block: `D(r', c') =
/// S(ceil(r'/L), ceil(c'/L))`.
pub fn nn_upscale(img: &GrayImage, l: ScaleRatio) -> GrayImage {
    let lu = l.as_usize();
    let (w, h) = (img.width() * lu, img.height() * lu);
    let mut data = Vec::with_capacity(w * h);
    for rp in 1..=h {
        let r = rp.div_ceil(lu);
        for cp in 1..=w {
            data.push(img.at(r - 1, cp.div_ceil(lu) - 1));
        }
    }
    GrayImage::from_parts(w, h, data)
}

/// Per-axis tap positions and weights, shared by every pixel in a row or
/// column of the output.
struct AxisTaps {
    base: Vec<i64>,
    weights: Vec<[f64; 6]>,
    len: usize,
    first: i64,
}

impl AxisTaps {
    fn new(dest_len: usize, l: ScaleRatio, kernel: &KernelSpec) -> Self {
        let k = kernel.frac_scale();
        let mut base = Vec::with_capacity(dest_len);
        let mut weights = Vec::with_capacity(dest_len);
        let (len, first) = match kernel {
            KernelSpec::NearestCeil => unreachable!("nearest neighbor bypasses fractions"),
            KernelSpec::Bilinear => (2, 0),
            KernelSpec::Bicubic | KernelSpec::Obic { .. } => (4, -1),
            KernelSpec::Lanczos(lobes) => (2 * lobes.count(), -(lobes.count() as i64) + 1),
        };
        for d in 1..=dest_len {
            let fc = map_coord(d, l, k);
            let mut w = [0.0; 6];
            match kernel {
                KernelSpec::Bilinear => {
                    w[0] = 1.0 - fc.frac;
                    w[1] = fc.frac;
                }
                KernelSpec::Bicubic | KernelSpec::Obic { .. } => {
                    w[..4].copy_from_slice(&cubic_weights(fc.frac).0);
                }
                KernelSpec::Lanczos(lobes) => {
                    fill_lanczos(fc.frac, *lobes, &mut w);
                }
                KernelSpec::NearestCeil => unreachable!(),
            }
            base.push(fc.base);
            weights.push(w);
        }
        AxisTaps {
            base,
            weights,
            len,
            first,
        }
    }
}

/// Upscales by the integer ratio `L` with the chosen kernel. Output is
/// `(L * height) x (L * width)`.
pub fn upscale(img: &GrayImage, l: ScaleRatio, kernel: &KernelSpec) -> GrayImage {
    if let KernelSpec::NearestCeil = kernel {
        return nn_upscale(img, l);
    }
    let lu = l.as_usize();
    let (w, h) = (img.width() * lu, img.height() * lu);
    let rows = AxisTaps::new(h, l, kernel);
    let cols = AxisTaps::new(w, l, kernel);
    let mut data = vec![0.0; w * h];
    data.par_chunks_mut(w)
        .enumerate()
        .for_each(|(ri, out_row)| {
            let wr = &rows.weights[ri][..rows.len];
            let br = rows.base[ri];
            for (ci, px) in out_row.iter_mut().enumerate() {
                let wc = &cols.weights[ci][..cols.len];
                *px = separable_sample(img, br, cols.base[ci], wr, wc, rows.first);
            }
        });
    GrayImage::from_parts(w, h, data)
}
