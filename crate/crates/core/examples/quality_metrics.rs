//! SSIM and PSNR of an image against increasingly noisy copies.

use iris_forensics::dataset::image_quality_metrics;
use iris_forensics::image::ImageBuffer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let base = ImageBuffer::from_fn(48, 48, |x, y| 0.5 + 0.3 * ((x as f64 / 5.0).sin() * (y as f64 / 7.0).cos()));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!("{:>6}  {:>7}  {:>9}", "sigma", "SSIM", "PSNR dB");
    for sigma in [0.005, 0.01, 0.03, 0.1] {
        let noise = Normal::new(0.0, sigma).unwrap();
        let data = base.data().iter().map(|v| v + noise.sample(&mut rng)).collect();
        let noisy = ImageBuffer::from_clamped(48, 48, 1, data);
        let m = image_quality_metrics(&base, &noisy).unwrap();
        println!("{sigma:>6.3}  {:>7.4}  {:>9.2}", m.ssim, m.psnr);
    }
}
