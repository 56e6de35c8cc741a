//! Image-quality-guided search for the OBIC coefficient.
//!
//! For each reference image and scale ratio the image is box-downscaled,
//! re-upscaled with OBIC at every point of a `k` grid, and scored against the
//! original. Each score curve yields a lead value (the first grid index whose
//! score is closest to the metric's ideal). Lead values are averaged over
//! metrics per `(image, scale)`, over images per scale (the ALV row), and
//! finally over scales to give `k`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{box_downscale, GrayImage, ScaleRatio};
use crate::iqa::{Ideal, MetricId, Polarity};
use crate::kernels::{upscale, KernelSpec};

/// Evenly spaced `k` values; point `i` is `start + i * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    start: f64,
    end: f64,
    step: f64,
}

impl Default for KGrid {
    /// `-3.0..=3.0` in steps of `0.1` (61 points).
    fn default() -> Self {
        KGrid {
            start: -3.0,
            end: 3.0,
            step: 0.1,
        }
    }
}

impl KGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && step.is_finite()) {
            return Err(Error::Domain("k grid bounds must be finite".into()));
        }
        if step <= 0.0 {
            return Err(Error::Domain(format!(
                "k grid step must be > 0, got {step}"
            )));
        }
        if start >= end {
            return Err(Error::Domain(format!(
                "k grid start {start} must be below end {end}"
            )));
        }
        Ok(KGrid { start, end, step })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Index of the grid point equal to `k` (within half a step), if any.
    pub fn index_of(&self, k: f64) -> Option<usize> {
        let i = ((k - self.start) / self.step).round();
        (i >= 0.0 && (i as usize) < self.len()).then_some(i as usize)
    }
}

impl std::str::FromStr for KGrid {
    type Err = Error;

    /// `start:end:step`, e.g. `-3:3:0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Domain(format!("invalid k grid {s:?}")))?;
        match parts[..] {
            [start, end, step] => KGrid::new(start, end, step),
            _ => Err(Error::Domain(format!(
                "k grid must be start:end:step, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCurve {
    metric: MetricId,
    grid: KGrid,
    scores: Vec<f64>,
}

impl ScoreCurve {
    pub fn new(metric: MetricId, grid: KGrid, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} scores for a {}-point grid",
                scores.len(),
                grid.len()
            )));
        }
        Ok(ScoreCurve {
            metric,
            grid,
            scores,
        })
    }

    pub fn metric(&self) -> &MetricId {
        &self.metric
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadValue {
    pub k: f64,
    pub grid_index: usize,
}

/// Scores OBIC at every grid point for each metric. The upscale at each `k`
/// is shared by all metrics.
pub fn score_curves(
    reference: &GrayImage,
    l: ScaleRatio,
    metrics: &[MetricId],
    grid: &KGrid,
) -> Result<Vec<ScoreCurve>> {
    let small = box_downscale(reference, l)?;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let up = upscale(&small, l, &KernelSpec::Obic { k: grid.point(i) });
            metrics.iter().map(|m| m.evaluate(reference, &up)).collect()
        })
        .collect::<Result<_>>()?;
    metrics
        .iter()
        .enumerate()
        .map(|(mi, m)| ScoreCurve::new(m.clone(), *grid, rows.iter().map(|r| r[mi]).collect()))
        .collect()
}

pub fn score_curve(
    reference: &GrayImage,
    l: ScaleRatio,
    metric: &MetricId,
    grid: &KGrid,
) -> Result<ScoreCurve> {
    let mut curves = score_curves(reference, l, std::slice::from_ref(metric), grid)?;
    Ok(curves.remove(0))
}

/// First grid index minimizing `|score - ideal|`. Metrics with an unbounded
/// ideal use the first best score by polarity instead (`+inf` PSNR wins).
/// NaN scores never win.
pub fn lead_value(curve: &ScoreCurve) -> LeadValue {
    let metric = curve.metric();
    // smaller key is better; NaN keys are skipped
    let key = |s: f64| -> f64 {
        match (metric.ideal(), metric.polarity()) {
            (Ideal::Value(ideal), _) => (s - ideal).abs(),
            (Ideal::Unbounded, Polarity::HigherIsBetter) => -s,
            (Ideal::Unbounded, Polarity::LowerIsBetter) => s,
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in curve.scores().iter().enumerate() {
        let v = key(s);
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    let grid_index = best.map_or(0, |(i, _)| i);
    LeadValue {
        k: curve.grid().point(grid_index),
        grid_index,
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Grand mean of per-scale average lead values.
pub fn grand_mean(alvs: &[f64]) -> f64 {
    mean(alvs)
}

/// Leads and curves for one `(image, scale)` pair.
#[derive(Debug, Clone)]
pub struct CellSweep {
    pub curves: Vec<ScoreCurve>,
    pub leads: Vec<LeadValue>,
    /// Mean of `leads` over metrics.
    pub lead: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    images: Vec<String>,
    scales: Vec<ScaleRatio>,
    /// `[scale][image]`; empty when built from bare cell values.
    sweeps: Vec<Vec<CellSweep>>,
    /// `[scale][image]` metric-averaged lead values.
    cells: Vec<Vec<f64>>,
    alv: Vec<f64>,
    k: f64,
}

impl SweepReport {
    /// Reduces per-`(scale, image)` lead values: ALV per scale, then `k`.
    pub fn from_cells(
        images: Vec<String>,
        scales: Vec<ScaleRatio>,
        cells: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if images.is_empty() || scales.is_empty() {
            return Err(Error::Dimension(
                "sweep report needs images and scales".into(),
            ));
        }
        if cells.len() != scales.len() || cells.iter().any(|row| row.len() != images.len()) {
            return Err(Error::Dimension(format!(
                "expected {} rows of {} lead values",
                scales.len(),
                images.len()
            )));
        }
        let alv: Vec<f64> = cells.iter().map(|row| mean(row)).collect();
        let k = grand_mean(&alv);
        Ok(SweepReport {
            images,
            scales,
            sweeps: Vec::new(),
            cells,
            alv,
            k,
        })
    }

    pub fn images(&self) -> &[String] {
        &self.images
    }

    pub fn scales(&self) -> &[ScaleRatio] {
        &self.scales
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn alv(&self) -> &[f64] {
        &self.alv
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn sweeps(&self) -> &[Vec<CellSweep>] {
        &self.sweeps
    }

    /// Table-shaped CSV: `scale,<images...>,ALV` rows, then `k,<value>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let mut header = vec!["scale".to_string()];
        header.extend(self.images.iter().cloned());
        header.push("ALV".into());
        w.write_record(&header)?;
        for ((scale, row), alv) in self.scales.iter().zip(&self.cells).zip(&self.alv) {
            let mut rec = vec![format!("{scale}X")];
            rec.extend(row.iter().map(|v| format!("{v:.4}")));
            rec.push(format!("{alv:.4}"));
            w.write_record(&rec)?;
        }
        w.write_record(["k".to_string(), format!("{:.4}", self.k)])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Every score curve in wide form: `image,scale,k,<metric names...>`.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.sweeps.first().and_then(|s| s.first()) else {
            return Err(Error::Dimension("report has no score curves".into()));
        };
        let mut header = vec!["image".to_string(), "scale".into(), "k".into()];
        header.extend(first.curves.iter().map(|c| c.metric().name().to_string()));
        w.write_record(&header)?;
        for (scale, row) in self.scales.iter().zip(&self.sweeps) {
            for (image, cell) in self.images.iter().zip(row) {
                let grid = cell.curves[0].grid();
                for i in 0..grid.len() {
                    let mut rec = vec![
                        image.clone(),
                        scale.to_string(),
                        format!("{:.4}", grid.point(i)),
                    ];
                    rec.extend(cell.curves.iter().map(|c| format!("{}", c.scores()[i])));
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Full sweep over `images x scales`, reduced to the coefficient `k`.
/// Repeated metrics are counted once.
pub fn aggregate_k(
    images: &[(String, GrayImage)],
    scales: &[ScaleRatio],
    metrics: &[MetricId],
    grid: &KGrid,
) -> Result<SweepReport> {
    let mut unique: Vec<MetricId> = Vec::new();
    for m in metrics {
        if !unique.contains(m) {
            unique.push(m.clone());
        }
    }
    if unique.is_empty() {
        return Err(Error::Domain("at least one metric is required".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..scales.len())
        .flat_map(|s| (0..images.len()).map(move |i| (s, i)))
        .collect();
    let swept: Vec<CellSweep> = pairs
        .par_iter()
        .map(|&(s, i)| {
            let curves = score_curves(&images[i].1, scales[s], &unique, grid)?;
            let leads: Vec<LeadValue> = curves.iter().map(lead_value).collect();
            let lead = mean(&leads.iter().map(|l| l.k).collect::<Vec<_>>());
            Ok(CellSweep {
                curves,
                leads,
                lead,
            })
        })
        .collect::<Result<_>>()?;

    let mut sweeps: Vec<Vec<CellSweep>> = Vec::with_capacity(scales.len());
    let mut iter = swept.into_iter();
    for _ in scales {
        sweeps.push(iter.by_ref().take(images.len()).collect());
    }
    let cells = sweeps
        .iter()
        .map(|row| row.iter().map(|c| c.lead).collect())
        .collect();
    let mut report = SweepReport::from_cells(
        images.iter().map(|(n, _)| n.clone()).collect(),
        scales.to_vec(),
        cells,
    )?;
    report.sweeps = sweeps;
    Ok(report)
}
