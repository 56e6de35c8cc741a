use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use obic::bench::{list_images, load_images, run_benchmark, win_rates, BenchFailure};
use obic::phantom::{edge_scene, polar_sample, EdgeKind};
use obic::scanconv::post_process_with;
use obic::{
    aggregate_k, load_image, save_image, scan_convert, upscale, DisplaySettings, KGrid, KernelSpec,
    MetricRegistry, PolarFrame, ScaleRatio, SectorGeometry, DEFAULT_OBIC_K,
};

#[derive(Parser)]
#[command(
    name = "obic",
    version,
    about = "Bicubic-family upscaling, k sweeps, benchmarks and sector scan conversion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upscale one grayscale image by an integer factor.
    Upscale {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        scale: ScaleRatio,
        /// nn, bilinear, bicubic, obic, lanczos2 or lanczos3
        #[arg(long)]
        method: String,
        /// Fractional-coordinate scale for obic.
        #[arg(long, default_value_t = DEFAULT_OBIC_K, allow_negative_numbers = true)]
        k: f64,
    },
    /// Sweep k over a grid and report per-scale lead values and the overall k.
    Sweep {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        scales: Vec<ScaleRatio>,
        #[arg(long, default_value = "mse,psnr,ssim")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        /// start:end:step
        #[arg(long, default_value = "-3:3:0.1", allow_hyphen_values = true)]
        grid: KGrid,
        /// Also write every score curve to this CSV.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Score every method against the originals after a box downscale.
    Bench {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        scales: Vec<ScaleRatio>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "nn,bilinear,bicubic,lanczos2,lanczos3,obic"
        )]
        methods: Vec<String>,
        #[arg(long, default_value = "mse,psnr,ssim")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_OBIC_K, allow_negative_numbers = true)]
        k: f64,
        /// Print strict-best win counts (and write them to this CSV if given).
        #[arg(long, num_args = 0..=1, value_name = "CSV")]
        win_rates: Option<Option<PathBuf>>,
        /// Methods competing in the win count; defaults to all methods.
        #[arg(long, value_delimiter = ',')]
        contenders: Vec<String>,
    },
    /// Scan-convert an OPF1 polar frame to a Cartesian image.
    Scanconv {
        frame: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "obic")]
        method: String,
        #[arg(long, default_value_t = DEFAULT_OBIC_K, allow_negative_numbers = true)]
        k: f64,
        #[arg(long, default_value_t = DisplaySettings::default().gamma)]
        gamma: f64,
        #[arg(long, default_value_t = DisplaySettings::default().brightness, allow_negative_numbers = true)]
        brightness: f64,
        #[arg(long, default_value_t = DisplaySettings::default().contrast)]
        contrast: f64,
        /// Skip gamma/brightness/contrast.
        #[arg(long)]
        no_post: bool,
    },
    /// Sample a two-region edge scene along sector beams into an OPF1 frame.
    Phantom {
        /// oblique, horizontal or vertical
        #[arg(long)]
        edge: EdgeKind,
        #[arg(long)]
        out: PathBuf,
        /// Standard deviation of additive Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        vectors: usize,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        /// Total sector opening in degrees, centred on the vertical.
        #[arg(long, default_value_t = 90.0)]
        sector_deg: f64,
        #[arg(long, default_value_t = 1.0)]
        pps: f64,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 255.0)]
        hi: f64,
        /// Also save the Cartesian scene.
        #[arg(long)]
        scene_out: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

type Corpus = (Vec<(String, obic::GrayImage)>, Vec<BenchFailure>);

fn corpus(dir: &Path) -> Result<Corpus> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        bail!("no .pgm or .png images in {}", dir.display());
    }
    Ok(load_images(&paths))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Upscale {
            input,
            output,
            scale,
            method,
            k,
        } => {
            let kernel = KernelSpec::parse_with_k(&method, k)?;
            let img = load_image(&input)?;
            save_image(&upscale(&img, scale, &kernel), &output)?;
        }
        Command::Sweep {
            images,
            scales,
            metrics,
            out,
            grid,
            curves,
        } => {
            let metrics = MetricRegistry::new().resolve_list(&metrics)?;
            if metrics.is_empty() {
                bail!("no metrics given");
            }
            let (images, failures) = corpus(&images)?;
            if let Some(f) = failures.first() {
                bail!("{}: {}", f.image, f.error);
            }
            let report = aggregate_k(&images, &scales, &metrics, &grid)?;
            let mut w = create(&out)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            if let Some(path) = curves {
                let mut w = create(&path)?;
                report.write_curves_csv(&mut w)?;
                w.flush()?;
            }
            println!("k = {:.4}", report.k());
        }
        Command::Bench {
            images,
            scales,
            methods,
            metrics,
            out,
            k,
            win_rates: wins,
            contenders,
        } => {
            let kernels = methods
                .iter()
                .map(|m| KernelSpec::parse_with_k(m, k))
                .collect::<obic::Result<Vec<_>>>()?;
            let metrics = MetricRegistry::new().resolve_list(&metrics)?;
            if kernels.is_empty() || metrics.is_empty() {
                bail!("need at least one method and one metric");
            }
            let (images, mut failures) = corpus(&images)?;
            let mut bench = run_benchmark(&images, &scales, &kernels, &metrics);
            failures.append(&mut bench.failures);
            let mut w = create(&out)?;
            bench.table.write_csv(&mut w)?;
            w.flush()?;

            if let Some(csv_out) = wins {
                let names: Vec<&str> = if contenders.is_empty() {
                    kernels.iter().map(|k| k.name()).collect()
                } else {
                    contenders.iter().map(|s| s.trim()).collect()
                };
                let table = win_rates(&bench.table, &names)?;
                print!("{table}");
                if let Some(path) = csv_out {
                    let mut w = create(&path)?;
                    table.write_csv(&mut w)?;
                    w.flush()?;
                }
            }
            for f in &failures {
                match f.scale {
                    Some(l) => eprintln!("error: {} at {l}X: {}", f.image, f.error),
                    None => eprintln!("error: {}: {}", f.image, f.error),
                }
            }
            return Ok(failures.is_empty());
        }
        Command::Scanconv {
            frame,
            output,
            method,
            k,
            gamma,
            brightness,
            contrast,
            no_post,
        } => {
            let kernel = KernelSpec::parse_with_k(&method, k)?;
            let frame = PolarFrame::load(&frame)?;
            let (w, h) = frame.geometry().canvas_size();
            let mut img = scan_convert(&frame, w, h, &kernel)?;
            if !no_post {
                img = post_process_with(
                    &img,
                    &DisplaySettings {
                        gamma,
                        brightness,
                        contrast,
                    },
                )?;
            }
            save_image(&img, &output)?;
        }
        Command::Phantom {
            edge,
            out,
            noise,
            seed,
            vectors,
            samples,
            sector_deg,
            pps,
            lo,
            hi,
            scene_out,
        } => {
            if !(sector_deg > 0.0 && sector_deg < 180.0) {
                bail!("sector opening must be in (0, 180) degrees, got {sector_deg}");
            }
            let half = sector_deg.to_radians() / 2.0;
            let geometry = SectorGeometry::fitted(vectors, samples, -half, half, pps)?;
            let (w, h) = geometry.canvas_size();
            let scene = edge_scene(edge, w, h, lo, hi)?;
            polar_sample(&scene, &geometry, noise, seed)?.save(&out)?;
            if let Some(path) = scene_out {
                save_image(&scene, &path)?;
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            // library errors already embed their cause in the message
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
