//! Benchmark harness: downscale, re-upscale with each method, score against
//! the original, and count which method wins each cell.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{box_downscale, load_image, GrayImage, ScaleRatio};
use crate::iqa::{MetricId, MetricKind};
use crate::kernels::{upscale, KernelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub image: String,
    pub scale: ScaleRatio,
    pub method: String,
    pub metric: MetricId,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchTable {
    pub records: Vec<BenchRecord>,
}

/// Formats with six significant digits; infinities print as `inf`/`-inf`.
pub fn format_sig6(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-4..=15).contains(&magnitude) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

impl BenchTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `image,scale,method,metric,value`, one row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["image", "scale", "method", "metric", "value"])?;
        for r in &self.records {
            w.write_record([
                r.image.as_str(),
                &r.scale.to_string(),
                &r.method,
                r.metric.name(),
                &format_sig6(r.value),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// A benchmark image that could not be evaluated, with the scale it failed
/// at (`None` when it failed to load).
#[derive(Debug)]
pub struct BenchFailure {
    pub image: String,
    pub scale: Option<ScaleRatio>,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct BenchRun {
    pub table: BenchTable,
    pub failures: Vec<BenchFailure>,
}

/// Scores every `(image, scale, method, metric)` combination. Rows are
/// ordered image, scale, method, metric, matching the input order.
pub fn run_benchmark(
    images: &[(String, GrayImage)],
    scales: &[ScaleRatio],
    methods: &[KernelSpec],
    metrics: &[MetricId],
) -> BenchRun {
    let pairs: Vec<(usize, usize)> = (0..images.len())
        .flat_map(|i| (0..scales.len()).map(move |s| (i, s)))
        .collect();
    let results: Vec<Result<Vec<BenchRecord>>> = pairs
        .par_iter()
        .map(|&(i, s)| {
            let (name, reference) = &images[i];
            let l = scales[s];
            let small = box_downscale(reference, l)?;
            let per_method: Vec<Vec<BenchRecord>> = methods
                .par_iter()
                .map(|method| {
                    let up = upscale(&small, l, method);
                    metrics
                        .iter()
                        .map(|m| {
                            Ok(BenchRecord {
                                image: name.clone(),
                                scale: l,
                                method: method.name().to_string(),
                                metric: m.clone(),
                                value: m.evaluate(reference, &up)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            Ok(per_method.into_iter().flatten().collect())
        })
        .collect();

    let mut run = BenchRun::default();
    for (&(i, s), res) in pairs.iter().zip(results) {
        match res {
            Ok(rows) => run.table.records.extend(rows),
            Err(error) => run.failures.push(BenchFailure {
                image: images[i].0.clone(),
                scale: Some(scales[s]),
                error,
            }),
        }
    }
    run
}

/// Image id used in reports: the file stem.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// `.pgm` and `.png` files in `dir`, sorted by file name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "png")) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Loads every path, keeping failures separate so the rest still run.
pub fn load_images(paths: &[PathBuf]) -> (Vec<(String, GrayImage)>, Vec<BenchFailure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        match load_image(path) {
            Ok(img) => ok.push((image_id(path), img)),
            Err(error) => failures.push(BenchFailure {
                image: image_id(path),
                scale: None,
                error,
            }),
        }
    }
    (ok, failures)
}

/// Loads and benchmarks `paths`; unreadable images become failures.
pub fn run_benchmark_paths(
    paths: &[PathBuf],
    scales: &[ScaleRatio],
    methods: &[KernelSpec],
    metrics: &[MetricId],
) -> BenchRun {
    let (images, load_failures) = load_images(paths);
    let mut run = run_benchmark(&images, scales, methods, metrics);
    let mut failures = load_failures;
    failures.append(&mut run.failures);
    run.failures = failures;
    run
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinRow {
    pub method: String,
    pub wins: usize,
    pub total: usize,
}

impl WinRow {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.wins as f64 / self.total as f64
        }
    }
}

/// Strict-best counts per contender, overall and per metric group.
#[derive(Debug, Clone, PartialEq)]
pub struct WinTable {
    pub overall: Vec<WinRow>,
    pub full_reference: Vec<WinRow>,
    /// Present only when the table holds no-reference metrics.
    pub no_reference: Option<Vec<WinRow>>,
}

impl WinTable {
    pub fn row(&self, method: &str) -> Option<&WinRow> {
        self.overall.iter().find(|r| r.method == method)
    }

    /// `group,method,wins,total,percent`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "method", "wins", "total", "percent"])?;
        for (group, rows) in self.groups() {
            for r in rows {
                w.write_record([
                    group,
                    &r.method,
                    &r.wins.to_string(),
                    &r.total.to_string(),
                    &format!("{:.2}", r.percent()),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    fn groups(&self) -> Vec<(&'static str, &[WinRow])> {
        let mut g = vec![
            ("all", self.overall.as_slice()),
            ("full-reference", self.full_reference.as_slice()),
        ];
        if let Some(nr) = &self.no_reference {
            g.push(("no-reference", nr.as_slice()));
        }
        g
    }
}

impl fmt::Display for WinTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (group, rows) in self.groups() {
            writeln!(f, "{group}:")?;
            for r in rows {
                writeln!(
                    f,
                    "  {:<10} {:>4} / {:<4} {:>6.2}%",
                    r.method,
                    r.wins,
                    r.total,
                    r.percent()
                )?;
            }
        }
        Ok(())
    }
}

/// `(image, scale, metric name)`.
type CellKey = (String, ScaleRatio, String);

/// Counts, per `(image, scale, metric)` cell, the contender that is strictly
/// best under the metric's polarity. Ties award no win.
pub fn win_rates(table: &BenchTable, contenders: &[&str]) -> Result<WinTable> {
    if contenders.is_empty() {
        return Err(Error::Accounting("no contenders given".into()));
    }
    // cell -> (metric, per-contender value)
    let mut cells: BTreeMap<CellKey, (MetricId, Vec<Option<f64>>)> = BTreeMap::new();
    for r in &table.records {
        let key = (r.image.clone(), r.scale, r.metric.name().to_string());
        let entry = cells
            .entry(key)
            .or_insert_with(|| (r.metric.clone(), vec![None; contenders.len()]));
        if let Some(ci) = contenders.iter().position(|c| *c == r.method) {
            if entry.1[ci].replace(r.value).is_some() {
                return Err(Error::Accounting(format!(
                    "duplicate {} record for {} at {}X, {}",
                    r.method, r.image, r.scale, r.metric
                )));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Accounting("benchmark table is empty".into()));
    }

    let blank = || -> Vec<WinRow> {
        contenders
            .iter()
            .map(|m| WinRow {
                method: m.to_string(),
                wins: 0,
                total: 0,
            })
            .collect()
    };
    let mut overall = blank();
    let mut full_reference = blank();
    let mut no_reference = blank();
    let mut saw_no_reference = false;

    for ((image, scale, metric_name), (metric, values)) in &cells {
        let mut vals = Vec::with_capacity(values.len());
        for (ci, v) in values.iter().enumerate() {
            match v {
                Some(v) => vals.push(*v),
                None => {
                    return Err(Error::Accounting(format!(
                        "missing {} record for {image} at {scale}X, {metric_name}",
                        contenders[ci]
                    )))
                }
            }
        }
        let winner = strict_best(metric, &vals);
        let group = match metric.kind() {
            MetricKind::FullReference => &mut full_reference,
            MetricKind::NoReference => {
                saw_no_reference = true;
                &mut no_reference
            }
        };
        for rows in [&mut overall, group] {
            for (ci, row) in rows.iter_mut().enumerate() {
                row.total += 1;
                if winner == Some(ci) {
                    row.wins += 1;
                }
            }
        }
    }
    Ok(WinTable {
        overall,
        full_reference,
        no_reference: saw_no_reference.then_some(no_reference),
    })
}

fn strict_best(metric: &MetricId, values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut tied = false;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) if metric.strictly_better(v, values[b]) => {
                best = Some(i);
                tied = false;
            }
            Some(b) if v == values[b] => tied = true,
            Some(_) => {}
        }
    }
    if tied {
        None
    } else {
        best
    }
}
