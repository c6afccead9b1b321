//! Eye-region location and limbus localization with the integro-differential operator.
//!
//! For a candidate circle `(cx, cy, r)` the operator samples the mean intensity
//! over the contour arcs at radii `r + (k + 1/2)·δ`, differences successive
//! means, smooths the differences with a Gaussian over radius and reports the
//! magnitude. The localizer maximizes that response over a coarse grid and
//! refines around the best coarse hypothesis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::ImageBuffer;
use crate::types::{CircleParams, Generator, IrisCrop, IrisPair, Side, Source, TypeError};

pub const MIN_FACE_SIDE: usize = 256;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("input {width}x{height} is smaller than the required {min}x{min}")]
    InputTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("circle ({cx:.2}, {cy:.2}, r={r:.2}) does not fit in a {width}x{height} image")]
    CircleOutOfBounds {
        cx: f64,
        cy: f64,
        r: f64,
        width: usize,
        height: usize,
    },
    #[error("no iris found: best operator response {best:.6} below threshold {threshold:.6}")]
    NoIrisFound { best: f64, threshold: f64 },
    #[error("extraction failed on {side} eye: {reason}")]
    ExtractionFailed {
        side: Side,
        reason: Box<ExtractionError>,
    },
    #[error("invalid extraction config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Rectangle in normalized `[0, 1]` face coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl PixelRect {
    pub fn overlaps(&self, other: &PixelRect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Subject's left eye, which appears on the viewer's right.
    pub eye_roi_left: NormRect,
    pub eye_roi_right: NormRect,
    pub r_min: f64,
    pub r_max: f64,
    pub angular_samples: usize,
    /// Angle intervals in degrees; 0° points along +x and 90° along +y (image down).
    pub contour_arcs: Vec<(f64, f64)>,
    pub sigma_r: f64,
    pub coarse_step: f64,
    pub refine_step: f64,
    pub min_operator_response: f64,
    pub crop_size: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            eye_roi_left: NormRect {
                x: 0.535,
                y: 0.40,
                width: 0.18,
                height: 0.14,
            },
            eye_roi_right: NormRect {
                x: 0.285,
                y: 0.40,
                width: 0.18,
                height: 0.14,
            },
            r_min: 12.0,
            r_max: 40.0,
            angular_samples: 64,
            contour_arcs: vec![(-45.0, 45.0), (135.0, 225.0)],
            sigma_r: 1.5,
            coarse_step: 4.0,
            refine_step: 1.0,
            min_operator_response: 0.02,
            crop_size: crate::types::DEFAULT_CROP_SIZE,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), ExtractionError> {
        let bad = |msg: String| Err(ExtractionError::InvalidConfig(msg));
        if !(self.r_min > 0.0 && self.r_min < self.r_max) {
            return bad(format!("need 0 < r_min < r_max, got {} and {}", self.r_min, self.r_max));
        }
        if self.angular_samples < 16 {
            return bad(format!("angular_samples must be >= 16, got {}", self.angular_samples));
        }
        if self.contour_arcs.is_empty() {
            return bad("contour_arcs must be nonempty".into());
        }
        if let Some(arc) = self.contour_arcs.iter().find(|(a, b)| !(b > a)) {
            return bad(format!("degenerate contour arc {arc:?}"));
        }
        if !(self.sigma_r > 0.0) {
            return bad(format!("sigma_r must be positive, got {}", self.sigma_r));
        }
        if !(self.refine_step > 0.0 && self.coarse_step >= self.refine_step) {
            return bad("need 0 < refine_step <= coarse_step".into());
        }
        let ratio = self.coarse_step / self.refine_step;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return bad("coarse_step must be a multiple of refine_step".into());
        }
        if self.crop_size < 8 {
            return bad(format!("crop_size must be >= 8, got {}", self.crop_size));
        }
        Ok(())
    }

    fn coarse_ratio(&self) -> usize {
        (self.coarse_step / self.refine_step).round() as usize
    }

    /// Half-width, in radial steps, of the Gaussian smoothing kernel.
    fn kernel_half_width(&self) -> usize {
        (3.0 * self.sigma_r / self.refine_step).ceil() as usize
    }
}

/// Unit direction vectors spread evenly over the configured arcs.
#[derive(Clone, Debug)]
pub struct Contour {
    dirs: Vec<(f64, f64)>,
}

impl Contour {
    pub fn new(arcs: &[(f64, f64)], samples: usize) -> Self {
        let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
        let dirs = (0..samples)
            .map(|i| {
                let mut t = (i as f64 + 0.5) * total / samples as f64;
                let mut angle = arcs[arcs.len() - 1].1;
                for &(a, b) in arcs {
                    let len = b - a;
                    if t <= len {
                        angle = a + t;
                        break;
                    }
                    t -= len;
                }
                let (s, c) = angle.to_radians().sin_cos();
                (c, s)
            })
            .collect();
        Self { dirs }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Mean intensity of `gray` along the contour at radius `rho`.
    pub fn mean_at(&self, gray: &ImageBuffer, cx: f64, cy: f64, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        let sum: f64 = self
            .dirs
            .iter()
            .map(|&(c, s)| gray.sample_bilinear(cx + rho * c, cy + rho * s, 0))
            .sum();
        sum / self.dirs.len() as f64
    }
}

/// Normalized Gaussian weights for offsets `-k..=k` radial steps.
fn gaussian_weights(half: usize, step: f64, sigma: f64) -> Vec<f64> {
    let raw: Vec<f64> = (-(half as isize)..=half as isize)
        .map(|k| {
            let d = k as f64 * step;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Smoothed radial derivative magnitude from `2k + 2` contour means centred on `r`.
fn smoothed_derivative(means: &[f64], weights: &[f64], step: f64) -> f64 {
    debug_assert_eq!(means.len(), weights.len() + 1);
    let acc: f64 = weights
        .iter()
        .zip(means.windows(2))
        .map(|(w, m)| w * (m[1] - m[0]) / step)
        .sum();
    acc.abs()
}

fn gray_of(image: &ImageBuffer) -> std::borrow::Cow<'_, ImageBuffer> {
    if image.channels() == 1 {
        std::borrow::Cow::Borrowed(image)
    } else {
        std::borrow::Cow::Owned(image.to_gray())
    }
}

/// Integro-differential response of one circle hypothesis.
pub fn operator_response(
    image: &ImageBuffer,
    c: &CircleParams,
    cfg: &ExtractionConfig,
) -> Result<f64, ExtractionError> {
    cfg.validate()?;
    if !c.fits_within(image.width(), image.height(), cfg.refine_step) {
        return Err(ExtractionError::CircleOutOfBounds {
            cx: c.cx,
            cy: c.cy,
            r: c.r,
            width: image.width(),
            height: image.height(),
        });
    }
    let gray = gray_of(image);
    let contour = Contour::new(&cfg.contour_arcs, cfg.angular_samples);
    let half = cfg.kernel_half_width();
    let weights = gaussian_weights(half, cfg.refine_step, cfg.sigma_r);
    let means: Vec<f64> = (0..2 * half + 2)
        .map(|i| {
            let offset = i as f64 - half as f64 - 0.5;
            contour.mean_at(&gray, c.cx, c.cy, c.r + offset * cfg.refine_step)
        })
        .collect();
    Ok(smoothed_derivative(&means, &weights, cfg.refine_step))
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    ix: usize,
    iy: usize,
    ir: usize,
    response: f64,
}

impl Candidate {
    /// Higher response wins; ties go to the smaller radius, then smaller (cy, cx).
    fn beats(&self, other: &Candidate) -> bool {
        if self.response != other.response {
            return self.response > other.response;
        }
        (self.ir, self.iy, self.ix) < (other.ir, other.iy, other.ix)
    }
}

/// Evaluates responses on the refine-step lattice `x = ix·δ, y = iy·δ, r = r_min + ir·δ`.
struct Searcher<'a> {
    gray: &'a ImageBuffer,
    cfg: &'a ExtractionConfig,
    contour: Contour,
    fine: Kernel,
    /// Wider radial smoothing for the coarse grid, so its peaks are at least
    /// as broad as the grid spacing.
    coarse: Kernel,
    n_radii: usize,
}

struct Kernel {
    weights: Vec<f64>,
    half: usize,
}

impl Kernel {
    fn new(sigma: f64, step: f64) -> Self {
        let half = (3.0 * sigma / step).ceil() as usize;
        Self {
            weights: gaussian_weights(half, step, sigma),
            half,
        }
    }
}

impl<'a> Searcher<'a> {
    fn new(gray: &'a ImageBuffer, cfg: &'a ExtractionConfig) -> Self {
        let n_radii = ((cfg.r_max - cfg.r_min) / cfg.refine_step + 1e-9).floor() as usize + 1;
        Self {
            gray,
            cfg,
            contour: Contour::new(&cfg.contour_arcs, cfg.angular_samples),
            fine: Kernel::new(cfg.sigma_r, cfg.refine_step),
            coarse: Kernel::new(cfg.sigma_r.max(cfg.coarse_step), cfg.refine_step),
            n_radii,
        }
    }

    fn radius(&self, ir: usize) -> f64 {
        self.cfg.r_min + ir as f64 * self.cfg.refine_step
    }

    /// Largest radius index whose circle fits at this centre, if any.
    fn max_radius_index(&self, ix: usize, iy: usize) -> Option<usize> {
        let step = self.cfg.refine_step;
        let (x, y) = (ix as f64 * step, iy as f64 * step);
        let room = x
            .min(y)
            .min((self.gray.width() - 1) as f64 - x)
            .min((self.gray.height() - 1) as f64 - y)
            - step;
        if room < self.cfg.r_min {
            return None;
        }
        let idx = ((room - self.cfg.r_min) / step + 1e-9).floor() as usize;
        Some(idx.min(self.n_radii - 1))
    }

    /// Responses at radius indices `radii` for one centre, sharing the contour means.
    fn evaluate_center(&self, ix: usize, iy: usize, radii: &[usize], kernel: &Kernel) -> Vec<Candidate> {
        let Some(max_ir) = self.max_radius_index(ix, iy) else {
            return Vec::new();
        };
        let step = self.cfg.refine_step;
        let (x, y) = (ix as f64 * step, iy as f64 * step);
        let lo = radii.iter().copied().filter(|&r| r <= max_ir).min();
        let Some(lo) = lo else {
            return Vec::new();
        };
        let hi = radii.iter().copied().filter(|&r| r <= max_ir).max().unwrap();
        let span = hi - lo + 2 * kernel.half + 2;
        let base = self.radius(lo) - (kernel.half as f64 + 0.5) * step;
        let means: Vec<f64> = (0..span)
            .map(|j| self.contour.mean_at(self.gray, x, y, base + j as f64 * step))
            .collect();
        radii
            .iter()
            .copied()
            .filter(|&ir| ir <= max_ir)
            .map(|ir| {
                let start = ir - lo;
                let window = &means[start..start + 2 * kernel.half + 2];
                Candidate {
                    ix,
                    iy,
                    ir,
                    response: smoothed_derivative(window, &kernel.weights, step),
                }
            })
            .collect()
    }

    fn best_over(
        &self,
        xs: impl Iterator<Item = usize> + Clone,
        ys: impl Iterator<Item = usize>,
        radii: &[usize],
        kernel: &Kernel,
    ) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for iy in ys {
            for ix in xs.clone() {
                for cand in self.evaluate_center(ix, iy, radii, kernel) {
                    if best.is_none_or(|b| cand.beats(&b)) {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }

    fn lattice_extent(&self) -> (usize, usize) {
        let step = self.cfg.refine_step;
        let nx = (((self.gray.width() - 1) as f64) / step + 1e-9).floor() as usize + 1;
        let ny = (((self.gray.height() - 1) as f64) / step + 1e-9).floor() as usize + 1;
        (nx, ny)
    }

    fn coarse(&self) -> Option<Candidate> {
        let stride = self.cfg.coarse_ratio();
        let (nx, ny) = self.lattice_extent();
        let radii: Vec<usize> = (0..self.n_radii).step_by(stride).collect();
        self.best_over((0..nx).step_by(stride), (0..ny).step_by(stride), &radii, &self.coarse)
    }

    /// Local search at refine step within one coarse step of `seed`, repeated while the
    /// optimum sits on the neighborhood border.
    fn refine(&self, seed: Candidate) -> Candidate {
        let reach = self.cfg.coarse_ratio();
        let (nx, ny) = self.lattice_extent();
        let mut best = self
            .evaluate_center(seed.ix, seed.iy, &[seed.ir], &self.fine)
            .first()
            .copied()
            .unwrap_or(seed);
        for _ in 0..8 {
            let window = |c: usize, n: usize| c.saturating_sub(reach)..(c + reach + 1).min(n);
            let radii: Vec<usize> = window(best.ir, self.n_radii).collect();
            let next = self
                .best_over(window(best.ix, nx), window(best.iy, ny), &radii, &self.fine)
                .unwrap_or(best);
            let next = if best.beats(&next) { best } else { next };
            let on_border = |v: usize, c: usize, n: usize| {
                (v + reach == c && c >= reach) || (v == c + reach && c + reach < n)
            };
            let moved = (next.ix, next.iy, next.ir) != (best.ix, best.iy, best.ir);
            let border = on_border(next.ix, best.ix, nx)
                || on_border(next.iy, best.iy, ny)
                || on_border(next.ir, best.ir, self.n_radii);
            best = next;
            if !(moved && border) {
                break;
            }
        }
        best
    }
}

/// Coarse-to-fine argmax of [`operator_response`] over centre and radius.
pub fn daugman_localize(
    eye: &ImageBuffer,
    cfg: &ExtractionConfig,
) -> Result<(CircleParams, f64), ExtractionError> {
    cfg.validate()?;
    let min_side = (2.0 * cfg.r_max + 4.0).ceil() as usize;
    if eye.width() < min_side || eye.height() < min_side {
        return Err(ExtractionError::InputTooSmall {
            width: eye.width(),
            height: eye.height(),
            min: min_side,
        });
    }
    let gray = gray_of(eye);
    let searcher = Searcher::new(&gray, cfg);
    let threshold = cfg.min_operator_response;
    let coarse = searcher.coarse().ok_or(ExtractionError::NoIrisFound {
        best: 0.0,
        threshold,
    })?;
    let best = searcher.refine(coarse);
    let circle = CircleParams::new(
        best.ix as f64 * cfg.refine_step,
        best.iy as f64 * cfg.refine_step,
        searcher.radius(best.ir),
    )?;
    let response = operator_response(&gray, &circle, cfg)?;
    if !(response >= threshold) {
        return Err(ExtractionError::NoIrisFound {
            best: response,
            threshold,
        });
    }
    Ok((circle, response))
}

/// Square window of side `2.2·r` around the circle, resampled to `crop_size`.
///
/// Windows that leave the image are edge-replicated and marked `padded`.
pub fn crop_iris(
    eye: &ImageBuffer,
    c: &CircleParams,
    crop_size: usize,
) -> Result<IrisCrop, ExtractionError> {
    if crop_size < 2 {
        return Err(ExtractionError::InvalidConfig(format!(
            "crop_size must be >= 2, got {crop_size}"
        )));
    }
    let side = 2.2 * c.r;
    let scale = side / crop_size as f64;
    let mid = (crop_size as f64 - 1.0) / 2.0;
    let x0 = c.cx - mid * scale;
    let y0 = c.cy - mid * scale;
    let x1 = c.cx + mid * scale;
    let y1 = c.cy + mid * scale;
    let padded = x0 < 0.0
        || y0 < 0.0
        || x1 > (eye.width() - 1) as f64
        || y1 > (eye.height() - 1) as f64;

    let channels = eye.channels();
    let mut data = Vec::with_capacity(crop_size * crop_size * channels);
    for v in 0..crop_size {
        let sy = c.cy + (v as f64 - mid) * scale;
        for u in 0..crop_size {
            let sx = c.cx + (u as f64 - mid) * scale;
            for ch in 0..channels {
                data.push(eye.sample_bilinear(sx, sy, ch));
            }
        }
    }
    Ok(IrisCrop {
        image: ImageBuffer::from_clamped(crop_size, crop_size, channels, data),
        circle: CircleParams::new(mid, mid, c.r / scale)?,
        occlusion_fraction: 0.0,
        reconstructed: false,
        padded,
    })
}

/// Pixel rectangles of both configured eye regions.
pub fn locate_eyes(
    face: &ImageBuffer,
    cfg: &ExtractionConfig,
) -> Result<(PixelRect, PixelRect), ExtractionError> {
    if face.width() < MIN_FACE_SIDE || face.height() < MIN_FACE_SIDE {
        return Err(ExtractionError::InputTooSmall {
            width: face.width(),
            height: face.height(),
            min: MIN_FACE_SIDE,
        });
    }
    let to_pixels = |r: &NormRect| -> Result<PixelRect, ExtractionError> {
        let (w, h) = (face.width() as f64, face.height() as f64);
        let rect = PixelRect {
            x: (r.x * w).round().max(0.0) as usize,
            y: (r.y * h).round().max(0.0) as usize,
            width: (r.width * w).round() as usize,
            height: (r.height * h).round() as usize,
        };
        if rect.width == 0
            || rect.height == 0
            || rect.x + rect.width > face.width()
            || rect.y + rect.height > face.height()
        {
            return Err(ExtractionError::InvalidConfig(format!(
                "eye region {r:?} falls outside the face"
            )));
        }
        Ok(rect)
    };
    let left = to_pixels(&cfg.eye_roi_left)?;
    let right = to_pixels(&cfg.eye_roi_right)?;
    if left.overlaps(&right) {
        return Err(ExtractionError::InvalidConfig("eye regions overlap".into()));
    }
    Ok((left, right))
}

/// Identity of the face being processed.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceMeta {
    pub face_id: String,
    pub source: Source,
    pub generator: Generator,
    pub provenance_path: String,
}

/// Locates, localizes and crops both irises of one face.
pub fn extract_pair(
    face: &ImageBuffer,
    cfg: &ExtractionConfig,
    meta: &FaceMeta,
) -> Result<IrisPair, ExtractionError> {
    let (left_roi, right_roi) = locate_eyes(face, cfg)?;
    let gray = face.to_gray();
    let crop_side = |side: Side, roi: PixelRect| -> Result<IrisCrop, ExtractionError> {
        let region = gray.sub_image(roi.x, roi.y, roi.width, roi.height);
        let (circle, _) = daugman_localize(&region, cfg).map_err(|e| {
            ExtractionError::ExtractionFailed {
                side,
                reason: Box::new(e),
            }
        })?;
        let in_face = CircleParams::new(
            circle.cx + roi.x as f64,
            circle.cy + roi.y as f64,
            circle.r,
        )?;
        crop_iris(face, &in_face, cfg.crop_size)
    };
    let left = crop_side(Side::Left, left_roi)?;
    let right = crop_side(Side::Right, right_roi)?;
    Ok(IrisPair::new(
        meta.face_id.clone(),
        left,
        right,
        meta.source,
        meta.generator,
        meta.provenance_path.clone(),
    )?)
}

/// Per-face eye regions for corpora that are not pre-aligned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EyeRois {
    pub left: NormRect,
    pub right: NormRect,
}

/// Eye-region overrides keyed by face id, stored as a JSON object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Landmarks(pub BTreeMap<String, EyeRois>);

impl Landmarks {
    pub fn from_json(text: &str) -> Result<Self, ExtractionError> {
        serde_json::from_str(text).map_err(|e| ExtractionError::InvalidConfig(format!("landmarks: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExtractionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExtractionError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `base` with this face's regions substituted, if any are listed.
    pub fn config_for(&self, face_id: &str, base: &ExtractionConfig) -> ExtractionConfig {
        let mut cfg = base.clone();
        if let Some(rois) = self.0.get(face_id) {
            cfg.eye_roi_left = rois.left;
            cfg.eye_roi_right = rois.right;
        }
        cfg
    }
}
