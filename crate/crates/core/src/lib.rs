//! Interpolated scan conversion for sector ultrasound and an
//! image-quality-guided variant of direct-formula bicubic interpolation
//! (OBIC), with the `k` sweep that tunes it and a full-reference benchmark
//! harness.

pub mod bench;
pub mod error;
pub mod image;
pub mod iqa;
pub mod kernels;
pub mod ksweep;
pub mod phantom;
pub mod scanconv;

pub use error::{Error, Result};
pub use image::{box_downscale, load_image, quantize_clamp, save_image, GrayImage, ScaleRatio};
pub use iqa::{mse, psnr, ssim, Ideal, MetricId, MetricKind, MetricRegistry, Polarity};
pub use kernels::{upscale, KernelSpec, LanczosLobes, DEFAULT_OBIC_K};
pub use ksweep::{aggregate_k, lead_value, score_curve, KGrid, LeadValue, ScoreCurve, SweepReport};
pub use scanconv::{post_process, scan_convert, DisplaySettings, PolarFrame, SectorGeometry};
