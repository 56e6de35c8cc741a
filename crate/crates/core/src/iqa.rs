//! Full-reference image quality metrics and the metric registry.
//!
//! MSE, PSNR and SSIM are built in. Other metrics (for example no-reference
//! scores backed by trained models) can be registered at startup and are
//! then selectable by name everywhere a metric list is accepted.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const PEAK: f64 = 255.0;

const SSIM_RADIUS: usize = 5;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    LowerIsBetter,
    HigherIsBetter,
}

/// Score of a perfect reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ideal {
    Value(f64),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    FullReference,
    NoReference,
}

type EvalFn = dyn Fn(&GrayImage, &GrayImage) -> Result<f64> + Send + Sync;

pub struct ExternalMetric {
    name: String,
    eval: Box<EvalFn>,
    ideal: Ideal,
    polarity: Polarity,
    kind: MetricKind,
}

impl fmt::Debug for ExternalMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalMetric")
            .field("name", &self.name)
            .field("ideal", &self.ideal)
            .field("polarity", &self.polarity)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum MetricId {
    Mse,
    Psnr,
    Ssim,
    External(Arc<ExternalMetric>),
}

impl PartialEq for MetricId {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Eq for MetricId {}

impl MetricId {
    pub fn name(&self) -> &str {
        match self {
            MetricId::Mse => "mse",
            MetricId::Psnr => "psnr",
            MetricId::Ssim => "ssim",
            MetricId::External(m) => &m.name,
        }
    }

    pub fn ideal(&self) -> Ideal {
        match self {
            MetricId::Mse => Ideal::Value(0.0),
            MetricId::Psnr => Ideal::Unbounded,
            MetricId::Ssim => Ideal::Value(1.0),
            MetricId::External(m) => m.ideal,
        }
    }

    pub fn polarity(&self) -> Polarity {
        match self {
            MetricId::Mse => Polarity::LowerIsBetter,
            MetricId::Psnr | MetricId::Ssim => Polarity::HigherIsBetter,
            MetricId::External(m) => m.polarity,
        }
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            MetricId::External(m) => m.kind,
            _ => MetricKind::FullReference,
        }
    }

    pub fn evaluate(&self, reference: &GrayImage, test: &GrayImage) -> Result<f64> {
        match self {
            MetricId::Mse => mse(reference, test),
            MetricId::Psnr => psnr(reference, test),
            MetricId::Ssim => ssim(reference, test),
            MetricId::External(m) => (m.eval)(reference, test),
        }
    }

    /// True if `a` is strictly better than `b` under this metric's polarity.
    pub fn strictly_better(&self, a: f64, b: f64) -> bool {
        match self.polarity() {
            Polarity::LowerIsBetter => a < b,
            Polarity::HigherIsBetter => a > b,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub metric: MetricId,
    pub value: f64,
}

/// Name-to-metric lookup. Built once at startup, then shared read-only.
#[derive(Debug, Clone, Default)]
pub struct MetricRegistry {
    external: Vec<Arc<ExternalMetric>>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn builtin() -> [MetricId; 3] {
        [MetricId::Mse, MetricId::Psnr, MetricId::Ssim]
    }

    /// Registers a no-reference style metric.
    pub fn register_metric(
        &mut self,
        name: &str,
        evaluate: impl Fn(&GrayImage, &GrayImage) -> Result<f64> + Send + Sync + 'static,
        ideal: Ideal,
        polarity: Polarity,
    ) -> Result<MetricId> {
        self.register_metric_with_kind(name, evaluate, ideal, polarity, MetricKind::NoReference)
    }

    pub fn register_metric_with_kind(
        &mut self,
        name: &str,
        evaluate: impl Fn(&GrayImage, &GrayImage) -> Result<f64> + Send + Sync + 'static,
        ideal: Ideal,
        polarity: Polarity,
        kind: MetricKind,
    ) -> Result<MetricId> {
        let key = name.trim().to_ascii_lowercase();
        if key.is_empty() || key.contains([',', '"', '\n']) {
            return Err(Error::Registration(format!("invalid metric name {name:?}")));
        }
        if self.lookup(&key).is_some() {
            return Err(Error::Registration(format!(
                "metric {name:?} already registered"
            )));
        }
        let metric = Arc::new(ExternalMetric {
            name: key,
            eval: Box::new(evaluate),
            ideal,
            polarity,
            kind,
        });
        self.external.push(metric.clone());
        Ok(MetricId::External(metric))
    }

    fn lookup(&self, key: &str) -> Option<MetricId> {
        Self::builtin()
            .into_iter()
            .find(|m| m.name() == key)
            .or_else(|| {
                self.external
                    .iter()
                    .find(|m| m.name == key)
                    .map(|m| MetricId::External(m.clone()))
            })
    }

    pub fn resolve(&self, name: &str) -> Result<MetricId> {
        self.lookup(&name.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Domain(format!("unknown metric {name:?}")))
    }

    /// Resolves a comma-separated list, dropping repeats.
    pub fn resolve_list(&self, names: &str) -> Result<Vec<MetricId>> {
        let mut out = Vec::new();
        for name in names.split(',').filter(|s| !s.trim().is_empty()) {
            let m = self.resolve(name)?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn all(&self) -> Vec<MetricId> {
        let mut v: Vec<MetricId> = Self::builtin().into();
        v.extend(self.external.iter().map(|m| MetricId::External(m.clone())));
        v
    }
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::Dimension(format!(
            "reference is {}x{}, test is {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub fn mse(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    check_dims(reference, test)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.data().len() as f64)
}

/// `10 log10(255^2 / mse)`; identical images give `+inf`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    mse(reference, test).map(psnr_from_mse)
}

fn gaussian_window() -> [f64; 2 * SSIM_RADIUS + 1] {
    let mut w = [0.0; 2 * SSIM_RADIUS + 1];
    for (i, slot) in w.iter_mut().enumerate() {
        let d = i as f64 - SSIM_RADIUS as f64;
        *slot = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Mirror index with edge repetition: `-1 -> 0`, `n -> n - 1`.
#[inline]
fn symmetric(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    j as usize
}

/// Separable Gaussian blur with symmetric padding.
fn blur(src: &[f64], width: usize, height: usize, w: &[f64]) -> Vec<f64> {
    let r = (w.len() / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                acc += wt * row[symmetric(x as isize + t as isize - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                acc += wt * tmp[symmetric(y as isize + t as isize - r, height) * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Mean SSIM over every pixel: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 255.
pub fn ssim(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    check_dims(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    let win = 2 * SSIM_RADIUS + 1;
    if w < win || h < win {
        return Err(Error::Dimension(format!(
            "SSIM needs at least {win}x{win}, got {w}x{h}"
        )));
    }
    let g = gaussian_window();
    let x = reference.data();
    let y = test.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = blur(x, w, h, &g);
    let mu_y = blur(y, w, h, &g);
    let e_xx = blur(&xx, w, h, &g);
    let e_yy = blur(&yy, w, h, &g);
    let e_xy = blur(&xy, w, h, &g);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok(total / x.len() as f64)
}
