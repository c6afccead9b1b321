//! Synthetic iris-pair corpora for desk-scale experiments.
//!
//! Each face gets a radial-texture iris: dark pupil, angular and radial
//! sinusoids over a base tone, bright sclera outside the limbus and one
//! specular highlight. Genuine faces reuse the exact iris on both sides;
//! synthetic faces shift the texture phases and move the highlight on the
//! right side in proportion to `asymmetry`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::ImageBuffer;
use crate::types::{CircleParams, Generator, IrisCrop, IrisPair, PairLabel, Source};

/// Crop side used by the toy corpus.
pub const TOY_CROP_SIZE: usize = 64;

const ANGULAR_TERMS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct ToyCorpusConfig {
    pub n_real: usize,
    pub n_gan: usize,
    pub asymmetry: f64,
    pub noise: f64,
    pub seed: u64,
    pub crop_size: usize,
}

impl ToyCorpusConfig {
    pub fn new(n_real: usize, n_gan: usize, asymmetry: f64, noise: f64, seed: u64) -> Self {
        Self {
            n_real,
            n_gan,
            asymmetry,
            noise,
            seed,
            crop_size: TOY_CROP_SIZE,
        }
    }
}

#[derive(Clone, Debug)]
struct IrisModel {
    pupil_ratio: f64,
    pupil_tone: f64,
    base_tone: f64,
    sclera_tone: f64,
    angular: [(f64, f64, f64); ANGULAR_TERMS],
    radial: (f64, f64, f64),
    /// Highlight centre in units of the iris radius, relative to the iris centre.
    highlight: (f64, f64),
    highlight_size: f64,
}

impl IrisModel {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        let mut angular = [(0.0, 0.0, 0.0); ANGULAR_TERMS];
        for term in angular.iter_mut() {
            *term = (
                rng.gen_range(0.04..0.09),
                rng.gen_range(3..=10) as f64,
                rng.gen_range(0.0..2.0 * PI),
            );
        }
        let angle = rng.gen_range(0.0..2.0 * PI);
        let dist = rng.gen_range(0.35..0.6);
        Self {
            pupil_ratio: rng.gen_range(0.28..0.4),
            pupil_tone: rng.gen_range(0.04..0.12),
            base_tone: rng.gen_range(0.3..0.5),
            sclera_tone: rng.gen_range(0.78..0.9),
            angular,
            radial: (
                rng.gen_range(0.03..0.07),
                rng.gen_range(6.0..12.0),
                rng.gen_range(0.0..2.0 * PI),
            ),
            highlight: (dist * angle.cos(), dist * angle.sin()),
            highlight_size: rng.gen_range(0.09..0.14),
        }
    }

    /// Phase shifts of up to `asymmetry·π` per texture term and a highlight
    /// displacement of `asymmetry·0.8` iris radii.
    fn perturbed(&self, asymmetry: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut out = self.clone();
        for term in out.angular.iter_mut() {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            term.2 += sign * asymmetry * PI;
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        out.radial.2 += sign * asymmetry * PI;
        let dir = rng.gen_range(0.0..2.0 * PI);
        let (mut hx, mut hy) = (
            self.highlight.0 + asymmetry * 0.8 * dir.cos(),
            self.highlight.1 + asymmetry * 0.8 * dir.sin(),
        );
        let reach = (hx * hx + hy * hy).sqrt();
        if reach > 0.75 {
            hx *= 0.75 / reach;
            hy *= 0.75 / reach;
        }
        out.highlight = (hx, hy);
        out
    }

    fn render(&self, size: usize, noise: f64, rng: &mut ChaCha8Rng) -> ImageBuffer {
        let mid = (size as f64 - 1.0) / 2.0;
        let radius = size as f64 / 2.2;
        let normal = (noise > 0.0).then(|| Normal::new(0.0, noise).expect("finite noise"));
        let mut data = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let dx = (x as f64 - mid) / radius;
                let dy = (y as f64 - mid) / radius;
                let rho = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                let mut v = if rho >= 1.0 {
                    self.sclera_tone
                } else if rho < self.pupil_ratio {
                    self.pupil_tone
                } else {
                    let angular: f64 = self
                        .angular
                        .iter()
                        .map(|(a, k, phase)| a * (k * theta + phase).sin())
                        .sum();
                    let (ra, rf, rp) = self.radial;
                    self.base_tone + angular + ra * (rf * rho * PI + rp).sin()
                };
                let hx = dx - self.highlight.0;
                let hy = dy - self.highlight.1;
                let h = (-(hx * hx + hy * hy) / (2.0 * self.highlight_size.powi(2))).exp();
                v = v * (1.0 - h) + h;
                if let Some(n) = &normal {
                    v += n.sample(rng);
                }
                data.push(v);
            }
        }
        ImageBuffer::from_clamped(size, size, 1, data)
    }
}

fn crop_of(image: ImageBuffer) -> IrisCrop {
    let size = image.width();
    let mid = (size as f64 - 1.0) / 2.0;
    IrisCrop {
        image,
        circle: CircleParams::new(mid, mid, size as f64 / 2.2).expect("positive radius"),
        occlusion_fraction: 0.0,
        reconstructed: false,
        padded: false,
    }
}

fn face_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Seeded toy corpus: `n_real` genuine pairs followed by `n_gan` synthetic ones.
pub fn generate_toy_corpus(cfg: &ToyCorpusConfig) -> Vec<(IrisPair, PairLabel)> {
    assert!(cfg.n_real >= 1 && cfg.n_gan >= 1, "need at least one pair of each kind");
    assert!((0.0..=1.0).contains(&cfg.asymmetry), "asymmetry must lie in [0, 1]");
    let mut out = Vec::with_capacity(cfg.n_real + cfg.n_gan);
    for index in 0..cfg.n_real + cfg.n_gan {
        let mut rng = face_rng(cfg.seed, index);
        let model = IrisModel::sample(&mut rng);
        let genuine = index < cfg.n_real;
        let (source, generator, face_id) = if genuine {
            (Source::Real, Generator::None, format!("toy-real-{index:05}"))
        } else {
            let generator = if index % 2 == 0 {
                Generator::Progan
            } else {
                Generator::Stylegan
            };
            (Source::Gan, generator, format!("toy-gan-{index:05}"))
        };
        let right_model = if genuine {
            model.clone()
        } else {
            model.perturbed(cfg.asymmetry, &mut rng)
        };
        let left = crop_of(model.render(cfg.crop_size, cfg.noise, &mut rng));
        let right = crop_of(right_model.render(cfg.crop_size, cfg.noise, &mut rng));
        let pair = IrisPair::new(face_id, left, right, source, generator, "toy")
            .expect("toy pairs are consistent");
        out.push((pair, source.label()));
    }
    out
}

/// Toy corpus at [`TOY_CROP_SIZE`].
pub fn generate_toy_pairs(
    n_real: usize,
    n_gan: usize,
    asymmetry: f64,
    noise: f64,
    seed: u64,
) -> Vec<(IrisPair, PairLabel)> {
    generate_toy_corpus(&ToyCorpusConfig::new(n_real, n_gan, asymmetry, noise, seed))
}

/// Geometry of a synthetic face with two planted irises.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceFixture {
    pub size: usize,
    /// Subject's left eye (viewer's right).
    pub left_eye: CircleParams,
    pub right_eye: CircleParams,
    pub pupil_ratio: f64,
}

impl FaceFixture {
    /// Eyes placed at the centres of the default eye regions.
    pub fn aligned(size: usize, iris_radius: f64) -> Self {
        let s = size as f64;
        Self {
            size,
            left_eye: CircleParams::new(0.625 * s, 0.47 * s, iris_radius).expect("positive"),
            right_eye: CircleParams::new(0.375 * s, 0.47 * s, iris_radius).expect("positive"),
            pupil_ratio: 0.35,
        }
    }
}

/// RGB face: flat skin, elliptical eye whites, textured irises and dark pupils.
pub fn render_synthetic_face(fixture: &FaceFixture) -> ImageBuffer {
    const SKIN: [f64; 3] = [0.78, 0.62, 0.52];
    const SCLERA: [f64; 3] = [0.92, 0.9, 0.88];
    const IRIS: [f64; 3] = [0.36, 0.26, 0.18];
    const PUPIL: [f64; 3] = [0.06, 0.05, 0.05];
    let n = fixture.size;
    let mut data = Vec::with_capacity(n * n * 3);
    for y in 0..n {
        for x in 0..n {
            let mut px = SKIN;
            for eye in [&fixture.left_eye, &fixture.right_eye] {
                let dx = x as f64 - eye.cx;
                let dy = y as f64 - eye.cy;
                let white = (dx / (2.2 * eye.r)).powi(2) + (dy / (1.3 * eye.r)).powi(2) < 1.0;
                let rho = (dx * dx + dy * dy).sqrt();
                if rho < fixture.pupil_ratio * eye.r {
                    px = PUPIL;
                } else if rho < eye.r {
                    let t = 0.04 * (7.0 * dy.atan2(dx)).sin();
                    px = IRIS.map(|v| v + t);
                } else if white {
                    px = SCLERA;
                }
            }
            data.extend_from_slice(&px);
        }
    }
    ImageBuffer::from_clamped(n, n, 3, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_asymmetry_and_noise_gives_identical_sides() {
        for (pair, y) in generate_toy_pairs(3, 3, 0.0, 0.0, 5) {
            assert_eq!(pair.left.image, pair.right.image, "{} ({y:?})", pair.face_id);
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = generate_toy_pairs(4, 4, 0.5, 0.02, 9);
        let b = generate_toy_pairs(4, 4, 0.5, 0.02, 9);
        assert_eq!(a, b);
        let c = generate_toy_pairs(4, 4, 0.5, 0.02, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn labels_follow_source() {
        let pairs = generate_toy_pairs(2, 3, 0.5, 0.0, 1);
        let labels: Vec<u8> = pairs.iter().map(|(_, y)| y.value()).collect();
        assert_eq!(labels, vec![1, 1, 0, 0, 0]);
        assert!(pairs[2..].iter().all(|(p, _)| p.source == Source::Gan));
    }

    #[test]
    fn asymmetry_changes_synthetic_right_side_only() {
        let pairs = generate_toy_pairs(2, 2, 0.5, 0.0, 3);
        assert_eq!(pairs[0].0.left.image, pairs[0].0.right.image);
        assert_ne!(pairs[3].0.left.image, pairs[3].0.right.image);
    }
}
