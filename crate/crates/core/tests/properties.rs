mod common;

use common::random_image;
use obic::kernels::{cubic_weights, lanczos_weights, map_coord, nn_upscale};
use obic::{
    box_downscale, load_image, mse, psnr, quantize_clamp, save_image, ssim, upscale, GrayImage,
    KernelSpec, LanczosLobes, ScaleRatio,
};
use proptest::prelude::*;

fn kernels_with(k_values: &[f64]) -> Vec<KernelSpec> {
    let mut v = vec![
        KernelSpec::NearestCeil,
        KernelSpec::Bilinear,
        KernelSpec::Bicubic,
        KernelSpec::Lanczos(LanczosLobes::Two),
        KernelSpec::Lanczos(LanczosLobes::Three),
    ];
    v.extend(k_values.iter().map(|&k| KernelSpec::obic(k).unwrap()));
    v
}

fn byte_image() -> impl Strategy<Value = GrayImage> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u8..=255, w * h).prop_map(move |px| {
            GrayImage::new(w, h, px.into_iter().map(f64::from).collect()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn cubic_partition_of_unity(frac in -3.6f64..3.6) {
        prop_assert!((cubic_weights(frac).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_tap_symmetry(frac in 0.0f64..=1.0) {
        let w = cubic_weights(frac).0;
        let m = cubic_weights(1.0 - frac).0;
        for i in 0..4 {
            prop_assert!((w[i] - m[3 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_normalized(frac in 0.0f64..1.0) {
        for lobes in [LanczosLobes::Two, LanczosLobes::Three] {
            let w = lanczos_weights(frac, lobes);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn map_coord_splits(dest in 1usize..2000, l in 1u32..9, k in -3.0f64..3.0) {
        let fc = map_coord(dest, ScaleRatio::new(l).unwrap(), 1.0);
        let x = dest as f64 / l as f64;
        prop_assert_eq!(fc.base as f64, x.floor());
        prop_assert!((0.0..1.0).contains(&fc.frac));
        let scaled = map_coord(dest, ScaleRatio::new(l).unwrap(), k);
        prop_assert_eq!(scaled.base, fc.base);
        prop_assert!((scaled.frac - k * fc.frac).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip(img in byte_image(), png in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(if png { "x.png" } else { "x.pgm" });
        save_image(&img, &path).unwrap();
        prop_assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn quantize_idempotent_on_bytes(v in 0u8..=255) {
        let q = quantize_clamp(v as f64).unwrap();
        prop_assert_eq!(q, v);
        prop_assert_eq!(quantize_clamp(q as f64).unwrap(), q);
    }

    #[test]
    fn box_downscale_preserves_mean(seed in any::<u64>(), l in 1u32..5, bw in 1usize..6, bh in 1usize..6) {
        let l_ = l as usize;
        let img = random_image(bw * l_, bh * l_, seed);
        let small = box_downscale(&img, ScaleRatio::new(l).unwrap()).unwrap();
        prop_assert!((small.mean() - img.mean()).abs() < 1e-12);
    }

    #[test]
    fn metric_symmetry_and_range(seed in any::<u64>(), noise in 0.0f64..80.0) {
        let a = random_image(16, 14, seed);
        let b = GrayImage::new(
            16,
            14,
            a.data().iter().zip(random_image(16, 14, seed ^ 0xabc).data()).map(|(x, n)| x + noise * (n / 255.0 - 0.5)).collect(),
        ).unwrap();
        let m = mse(&a, &b).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert_eq!(m, mse(&b, &a).unwrap());
        let s = ssim(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn psnr_decreases_with_mse(d1 in 0.01f64..50.0, extra in 0.01f64..50.0) {
        let a = GrayImage::filled(4, 4, 100.0).unwrap();
        let shift = |d: f64| GrayImage::filled(4, 4, 100.0 + d).unwrap();
        let p1 = psnr(&a, &shift(d1)).unwrap();
        let p2 = psnr(&a, &shift(d1 + extra)).unwrap();
        prop_assert!(p2 < p1);
    }
}

#[test]
fn upscale_preserves_source_samples() {
    let img = random_image(9, 7, 42);
    for l in [2u32, 3, 4] {
        let lu = l as usize;
        for kernel in kernels_with(&[-2.0, 0.7, 1.1834, 2.5]) {
            let up = upscale(&img, ScaleRatio::new(l).unwrap(), &kernel);
            assert_eq!((up.width(), up.height()), (9 * lu, 7 * lu));
            for r in 1..=7 {
                for c in 1..=9 {
                    let got = up.at(lu * r - 1, lu * c - 1);
                    let want = img.at(r - 1, c - 1);
                    if kernel == KernelSpec::NearestCeil {
                        assert_eq!(got, want);
                    } else {
                        assert!((got - want).abs() < 1e-9, "{kernel} L={l} ({r},{c})");
                    }
                }
            }
        }
    }
}

#[test]
fn upscale_constant_invariance() {
    let flat = GrayImage::filled(6, 5, 93.25).unwrap();
    for l in [2u32, 3, 4] {
        for kernel in kernels_with(&[-2.0, 0.7, 1.1834, 2.5]) {
            let up = upscale(&flat, ScaleRatio::new(l).unwrap(), &kernel);
            assert!(
                up.data().iter().all(|v| (v - 93.25).abs() < 1e-9),
                "{kernel} L={l}"
            );
        }
    }
}

#[test]
fn nearest_is_block_replication() {
    let img = random_image(5, 3, 7);
    let up = nn_upscale(&img, ScaleRatio::new(3).unwrap());
    for r in 0..up.height() {
        for c in 0..up.width() {
            assert_eq!(up.at(r, c), img.at(r / 3, c / 3));
        }
    }
    assert_eq!(
        upscale(&img, ScaleRatio::new(3).unwrap(), &KernelSpec::NearestCeil),
        up
    );
}

#[test]
fn upscale_is_deterministic() {
    let img = random_image(40, 33, 3);
    for kernel in kernels_with(&[1.1834]) {
        let a = upscale(&img, ScaleRatio::new(4).unwrap(), &kernel);
        let b = upscale(&img, ScaleRatio::new(4).unwrap(), &kernel);
        assert_eq!(a, b);
    }
}
