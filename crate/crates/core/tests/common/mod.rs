#![allow(dead_code)]

use iris_forensics::extraction::ExtractionConfig;
use iris_forensics::image::ImageBuffer;
use iris_forensics::types::{CircleParams, Generator, IrisCrop, IrisPair, PairLabel, Source};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const EYE_SIDE: usize = 140;

pub fn eye_config() -> ExtractionConfig {
    ExtractionConfig {
        r_min: 16.0,
        r_max: 64.0,
        ..ExtractionConfig::default()
    }
}

/// Dark iris disc with a darker pupil on a light sclera, anti-aliased edges
/// and Gaussian noise. Returns the image and the planted limbus.
pub fn eye_fixture(seed: u64, noise: f64) -> (ImageBuffer, CircleParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: f64 = rng.gen_range(20.0..=60.0);
    let margin = r + 6.0;
    let hi = EYE_SIDE as f64 - 1.0 - margin;
    let cx = rng.gen_range(margin..=hi);
    let cy = rng.gen_range(margin..=hi);
    let sclera = rng.gen_range(0.7..0.85);
    let iris = rng.gen_range(0.25..0.4);
    let pupil = rng.gen_range(0.05..0.12);
    let pr = r * rng.gen_range(0.3..0.45);
    let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let data = (0..EYE_SIDE * EYE_SIDE)
        .map(|i| {
            let (x, y) = ((i % EYE_SIDE) as f64, (i / EYE_SIDE) as f64);
            let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            let in_iris = (r - d + 0.5).clamp(0.0, 1.0);
            let in_pupil = (pr - d + 0.5).clamp(0.0, 1.0);
            let v = sclera + (iris - sclera) * in_iris + (pupil - iris) * in_pupil;
            if noise > 0.0 {
                v + normal.sample(&mut rng)
            } else {
                v
            }
        })
        .collect();
    (
        ImageBuffer::from_clamped(EYE_SIDE, EYE_SIDE, 1, data),
        CircleParams::new(cx, cy, r).unwrap(),
    )
}

/// Exhaustive argmax of the integro-differential response over every integer
/// centre and radius whose circle, grown by one pixel, stays inside the image.
/// Ties go to the smaller radius, then row, then column.
pub struct BruteForce {
    pub x: usize,
    pub y: usize,
    pub r: usize,
    pub response: f64,
}

fn clamp_sample(img: &[f64], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.max(0.0).min((w - 1) as f64);
    let y = y.max(0.0).min((h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p = |xx: usize, yy: usize| img[yy * w + xx];
    (1.0 - fy) * ((1.0 - fx) * p(x0, y0) + fx * p(x1, y0))
        + fy * ((1.0 - fx) * p(x0, y1) + fx * p(x1, y1))
}

pub fn arc_directions(arcs: &[(f64, f64)], n: usize) -> Vec<(f64, f64)> {
    let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
    (0..n)
        .map(|i| {
            let mut t = total * (i as f64 + 0.5) / n as f64;
            let mut deg = arcs.last().unwrap().1;
            for (a, b) in arcs {
                if t <= b - a {
                    deg = a + t;
                    break;
                }
                t -= b - a;
            }
            let rad = deg * std::f64::consts::PI / 180.0;
            (rad.cos(), rad.sin())
        })
        .collect()
}

pub struct Operator {
    dirs: Vec<(f64, f64)>,
    weights: Vec<f64>,
    k: usize,
}

impl Operator {
    pub fn new(cfg: &ExtractionConfig) -> Self {
        assert_eq!(cfg.refine_step, 1.0, "the oracle works on the unit lattice");
        let k = (3.0 * cfg.sigma_r).ceil() as usize;
        let raw: Vec<f64> = (0..=2 * k)
            .map(|j| {
                let d = j as f64 - k as f64;
                (-(d * d) / (2.0 * cfg.sigma_r * cfg.sigma_r)).exp()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        Self {
            dirs: arc_directions(&cfg.contour_arcs, cfg.angular_samples),
            weights: raw.iter().map(|w| w / sum).collect(),
            k,
        }
    }

    fn profile(&self, img: &[f64], w: usize, h: usize, cx: f64, cy: f64, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        self.dirs
            .iter()
            .map(|(c, s)| clamp_sample(img, w, h, cx + rho * c, cy + rho * s))
            .sum::<f64>()
            / self.dirs.len() as f64
    }

    /// Response from a run of profile values at `r - k - 1/2, r - k + 1/2, ...`.
    fn score_profile(&self, means: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w * (means[j + 1] - means[j]);
        }
        acc.abs()
    }

    pub fn response(&self, img: &ImageBuffer, cx: f64, cy: f64, r: f64) -> f64 {
        let g = img.to_gray();
        let means: Vec<f64> = (0..2 * self.k + 2)
            .map(|i| {
                let rho = r + i as f64 - self.k as f64 - 0.5;
                self.profile(g.data(), g.width(), g.height(), cx, cy, rho)
            })
            .collect();
        self.score_profile(&means)
    }

    pub fn brute_force(&self, img: &ImageBuffer, cfg: &ExtractionConfig) -> Option<BruteForce> {
        let g = img.to_gray();
        let (w, h, data) = (g.width(), g.height(), g.data());
        let r_lo = cfg.r_min.round() as usize;
        let r_hi = cfg.r_max.round() as usize;
        let mut best: Option<BruteForce> = None;
        for y in 0..h {
            for x in 0..w {
                let room = x.min(y).min(w - 1 - x).min(h - 1 - y) as isize - 1;
                if room < r_lo as isize {
                    continue;
                }
                let top = r_hi.min(room as usize);
                let n = top - r_lo + 2 * self.k + 2;
                let start = r_lo as f64 - self.k as f64 - 0.5;
                let means: Vec<f64> = (0..n)
                    .map(|i| self.profile(data, w, h, x as f64, y as f64, start + i as f64))
                    .collect();
                for r in r_lo..=top {
                    let resp = self.score_profile(&means[r - r_lo..]);
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            resp > b.response
                                || (resp == b.response && (r, y, x) < (b.r, b.y, b.x))
                        }
                    };
                    if better {
                        best = Some(BruteForce {
                            x,
                            y,
                            r,
                            response: resp,
                        });
                    }
                }
            }
        }
        best
    }
}

pub fn crop(image: ImageBuffer) -> IrisCrop {
    let s = image.width() as f64;
    IrisCrop {
        image,
        circle: CircleParams::new((s - 1.0) / 2.0, (s - 1.0) / 2.0, s / 2.2).unwrap(),
        occlusion_fraction: 0.0,
        reconstructed: false,
        padded: false,
    }
}

pub fn random_image(rng: &mut ChaCha8Rng, size: usize) -> ImageBuffer {
    let data = (0..size * size).map(|_| rng.gen_range(0.0..1.0)).collect();
    ImageBuffer::new(size, size, 1, data).unwrap()
}

pub fn pair_of(left: ImageBuffer, right: ImageBuffer, genuine: bool) -> (IrisPair, PairLabel) {
    let (source, generator, y) = if genuine {
        (Source::Real, Generator::None, PairLabel::GENUINE)
    } else {
        (Source::Gan, Generator::Progan, PairLabel::SYNTHETIC)
    };
    (
        IrisPair::new("fixture", crop(left), crop(right), source, generator, "fixture").unwrap(),
        y,
    )
}

/// Brute-force accuracy of `similarity >= τ ⇒ genuine`, counted directly.
pub fn count_accuracy(scores: &[(f64, PairLabel)], tau: f64) -> f64 {
    let hits = scores
        .iter()
        .filter(|(s, y)| (*s >= tau) == (y.value() == 1))
        .count();
    hits as f64 / scores.len() as f64
}

/// Sweeps every cut point (each distinct score, plus one cut above all of
/// them) and returns the best accuracy and the midpoint of the lowest run
/// of adjacent best cells, each cell being `(previous cut, cut]`.
pub fn threshold_sweep(scores: &[(f64, PairLabel)]) -> (f64, f64) {
    let mut cuts: Vec<f64> = scores.iter().map(|(s, _)| *s).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let max_score = *cuts.last().unwrap();
    let mut cells: Vec<(f64, f64, f64)> = Vec::new();
    let mut prev = cuts[0].min(0.0);
    for &c in &cuts {
        cells.push((prev, c, count_accuracy(scores, c)));
        prev = c;
    }
    if max_score < 100.0 {
        cells.push((max_score, 100.0, count_accuracy(scores, 100.0)));
    }
    let best = cells.iter().map(|c| c.2).fold(f64::MIN, f64::max);
    let first = cells.iter().position(|c| c.2 == best).unwrap();
    let mut last = first;
    while last + 1 < cells.len() && cells[last + 1].2 == best {
        last += 1;
    }
    (best, (cells[first].0 + cells[last].1) / 2.0)
}

pub const FACE_SIDE: usize = 512;

/// Ingestion settings sized for [`FACE_SIDE`] faces.
pub fn small_face_overrides() -> Vec<String> {
    ["extraction.r_min=10", "extraction.r_max=30", "extraction.crop_size=32"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Writes `real/`, `progan/` and `stylegan/` face images under `root`.
/// Faces listed in `blank` are flat skin with no eyes.
pub fn write_face_corpus(root: &std::path::Path, per_group: usize, blank: &[&str]) -> Vec<String> {
    use iris_forensics::dataset::{render_synthetic_face, FaceFixture};
    let mut ids = Vec::new();
    for (g, dir) in ["real", "progan", "stylegan"].iter().enumerate() {
        std::fs::create_dir_all(root.join(dir)).unwrap();
        for i in 0..per_group {
            let id = format!("{dir}{i:03}");
            let img = if blank.contains(&id.as_str()) {
                ImageBuffer::filled(FACE_SIDE, FACE_SIDE, 3, 0.7)
            } else {
                let r = 18.0 + ((g * per_group + i) % 5) as f64;
                render_synthetic_face(&FaceFixture::aligned(FACE_SIDE, r))
            };
            img.save_png(&root.join(dir).join(format!("{id}.png"))).unwrap();
            ids.push(id);
        }
    }
    ids
}
