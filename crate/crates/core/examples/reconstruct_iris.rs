//! Paints a bright glare streak over an iris crop, detects it and fills it in.

use iris_forensics::dataset::image_quality_metrics;
use iris_forensics::image::ImageBuffer;
use iris_forensics::reconstruction::{occlusion_mask, reconstruct_iris, InpaintConfig};
use iris_forensics::types::{CircleParams, IrisCrop};

fn main() {
    let size = 64;
    let mid = (size as f64 - 1.0) / 2.0;
    let clean = ImageBuffer::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - mid, y as f64 - mid);
        0.35 + 0.05 * (dy.atan2(dx) * 6.0).sin() + 0.002 * (dx * dx + dy * dy).sqrt()
    });
    let mut glared = clean.clone();
    for y in 20..26 {
        for x in 14..50 {
            glared.set(x, y, 0, 0.95);
        }
    }
    let crop = IrisCrop {
        image: glared.clone(),
        circle: CircleParams::new(mid, mid, size as f64 / 2.2).unwrap(),
        occlusion_fraction: 0.0,
        reconstructed: false,
        padded: false,
    };
    let cfg = InpaintConfig::default();
    let mask = occlusion_mask(&crop, &cfg);
    println!("flagged {} pixels ({:.1}% of the iris)", mask.count(), 100.0 * mask.occlusion_fraction());

    let out = reconstruct_iris(&crop, &cfg).expect("within the rejection threshold");
    let before = image_quality_metrics(&clean, &glared).unwrap();
    let after = image_quality_metrics(&clean, &out.crop.image).unwrap();
    println!("with glare:    SSIM {:.4}  PSNR {:.2} dB", before.ssim, before.psnr);
    println!("reconstructed: SSIM {:.4}  PSNR {:.2} dB", after.ssim, after.psnr);
}
