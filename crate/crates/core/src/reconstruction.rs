//! Occlusion detection and harmonic (diffusion) inpainting of iris crops.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::ImageBuffer;
use crate::types::IrisCrop;

#[derive(Debug, Error, PartialEq)]
pub enum ReconstructionError {
    #[error("mask is {mask_w}x{mask_h} but image is {image_w}x{image_h}")]
    ShapeMismatch {
        mask_w: usize,
        mask_h: usize,
        image_w: usize,
        image_h: usize,
    },
    #[error("masked region has no unmasked boundary to fill from")]
    NoBoundary,
    #[error("crop is {fraction:.3} occluded, above the {threshold:.3} rejection threshold")]
    TooOccluded { fraction: f64, threshold: f64 },
    #[error("invalid inpaint config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InpaintConfig {
    /// A pixel is occluded when it deviates from the median by more than `mad_k` MADs.
    pub mad_k: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub occlusion_reject_threshold: f64,
}

impl Default for InpaintConfig {
    fn default() -> Self {
        Self {
            mad_k: 3.0,
            max_iters: 5000,
            tol: 1e-4,
            occlusion_reject_threshold: 0.5,
        }
    }
}

impl InpaintConfig {
    pub fn validate(&self) -> Result<(), ReconstructionError> {
        if !(self.tol > 0.0) {
            return Err(ReconstructionError::InvalidConfig("tol must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(ReconstructionError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_reject_threshold) {
            return Err(ReconstructionError::InvalidConfig(
                "occlusion_reject_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    in_circle: usize,
}

impl OcclusionMask {
    /// Mask from explicit values. `in_circle` is the pixel count the fraction is taken over.
    pub fn from_vec(width: usize, height: usize, mask: Vec<bool>, in_circle: usize) -> Self {
        assert_eq!(mask.len(), width * height);
        Self {
            width,
            height,
            mask,
            in_circle,
        }
    }

    /// Mask over a whole image, with the fraction taken over all pixels.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self::from_vec(width, height, mask, width * height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_masked(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn occlusion_fraction(&self) -> f64 {
        if self.in_circle == 0 {
            0.0
        } else {
            self.count() as f64 / self.in_circle as f64
        }
    }

    pub fn flip_horizontal(&self) -> OcclusionMask {
        let mut mask = Vec::with_capacity(self.mask.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                mask.push(self.is_masked(x, y));
            }
        }
        OcclusionMask { mask, ..*self }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Marks in-circle pixels whose luminance deviates from the in-circle median by
/// more than `mad_k` median absolute deviations.
pub fn occlusion_mask(crop: &IrisCrop, cfg: &InpaintConfig) -> OcclusionMask {
    let gray = crop.image.to_gray();
    let (w, h) = (gray.width(), gray.height());
    let c = crop.circle;
    let r2 = c.r * c.r;
    let inside: Vec<usize> = (0..w * h)
        .filter(|&i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            (x - c.cx).powi(2) + (y - c.cy).powi(2) < r2
        })
        .collect();
    let mut mask = vec![false; w * h];
    if inside.is_empty() {
        return OcclusionMask::from_vec(w, h, mask, 0);
    }
    let lum = gray.data();
    let mut values: Vec<f64> = inside.iter().map(|&i| lum[i]).collect();
    let med = median(&mut values);
    let mut deviations: Vec<f64> = inside.iter().map(|&i| (lum[i] - med).abs()).collect();
    let mad = median(&mut deviations);
    let limit = cfg.mad_k * mad;
    for &i in &inside {
        if (lum[i] - med).abs() > limit {
            mask[i] = true;
        }
    }
    OcclusionMask::from_vec(w, h, mask, inside.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InpaintOutcome {
    pub image: ImageBuffer,
    pub converged: bool,
    pub iterations: usize,
    /// Largest `|p - mean(4-neighbors)|` over masked pixels of the returned image.
    pub max_residual: f64,
}

/// Index lists for one masked pixel's in-bounds 4-neighbors.
struct Stencil {
    pixel: usize,
    neighbors: [usize; 4],
    count: usize,
}

fn stencils(mask: &OcclusionMask) -> Vec<Stencil> {
    let (w, h) = (mask.width, mask.height);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.is_masked(x, y) {
                continue;
            }
            let mut neighbors = [0; 4];
            let mut count = 0;
            let mut push = |nx: usize, ny: usize| {
                neighbors[count] = ny * w + nx;
                count += 1;
            };
            if y > 0 {
                push(x, y - 1);
            }
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
            out.push(Stencil {
                pixel: y * w + x,
                neighbors,
                count,
            });
        }
    }
    out
}

/// Every masked component must touch at least one known pixel.
fn has_boundary_everywhere(mask: &OcclusionMask, stencils: &[Stencil]) -> bool {
    let n = mask.width * mask.height;
    let mut reached = vec![false; n];
    let mut queue: Vec<usize> = Vec::new();
    let by_pixel: std::collections::HashMap<usize, &Stencil> =
        stencils.iter().map(|s| (s.pixel, s)).collect();
    for s in stencils {
        if s.neighbors[..s.count].iter().any(|&q| !mask.mask[q]) {
            reached[s.pixel] = true;
            queue.push(s.pixel);
        }
    }
    while let Some(p) = queue.pop() {
        let s = by_pixel[&p];
        for &q in &s.neighbors[..s.count] {
            if mask.mask[q] && !reached[q] {
                reached[q] = true;
                queue.push(q);
            }
        }
    }
    stencils.iter().all(|s| reached[s.pixel])
}

/// Fills masked pixels by Gauss–Seidel relaxation of the discrete Laplace equation,
/// sweeping in row-major order, with unmasked pixels as fixed boundary values.
///
/// Iteration stops once the largest per-sweep update is below `tol` and the
/// geometric-tail estimate of the remaining error is below `tol / 2`.
pub fn inpaint_diffusion(
    image: &ImageBuffer,
    mask: &OcclusionMask,
    cfg: &InpaintConfig,
) -> Result<InpaintOutcome, ReconstructionError> {
    cfg.validate()?;
    if mask.width != image.width() || mask.height != image.height() {
        return Err(ReconstructionError::ShapeMismatch {
            mask_w: mask.width,
            mask_h: mask.height,
            image_w: image.width(),
            image_h: image.height(),
        });
    }
    let stencils = stencils(mask);
    if stencils.is_empty() {
        return Ok(InpaintOutcome {
            image: image.clone(),
            converged: true,
            iterations: 0,
            max_residual: 0.0,
        });
    }
    if !has_boundary_everywhere(mask, &stencils) {
        return Err(ReconstructionError::NoBoundary);
    }

    let channels = image.channels();
    let mut out = image.clone();
    let mut all_converged = true;
    let mut max_iterations = 0;
    let mut max_residual: f64 = 0.0;
    let data = out.data_mut();

    for ch in 0..channels {
        let at = |p: usize| p * channels + ch;
        // start from the mean of the known pixels bordering the hole
        let mut boundary_sum = 0.0;
        let mut boundary_n = 0usize;
        let mut seen = std::collections::HashSet::new();
        for s in &stencils {
            for &q in &s.neighbors[..s.count] {
                if !mask.mask[q] && seen.insert(q) {
                    boundary_sum += data[at(q)];
                    boundary_n += 1;
                }
            }
        }
        let start = boundary_sum / boundary_n as f64;
        for s in &stencils {
            data[at(s.pixel)] = start;
        }

        let mut prev_update = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iters {
            iterations += 1;
            let mut max_update: f64 = 0.0;
            for s in &stencils {
                let sum: f64 = s.neighbors[..s.count].iter().map(|&q| data[at(q)]).sum();
                let next = sum / s.count as f64;
                let idx = at(s.pixel);
                max_update = max_update.max((next - data[idx]).abs());
                data[idx] = next;
            }
            let rate = if prev_update.is_finite() && prev_update > 0.0 {
                max_update / prev_update
            } else {
                1.0
            };
            prev_update = max_update;
            let tail = if rate < 1.0 {
                max_update * rate / (1.0 - rate)
            } else {
                f64::INFINITY
            };
            if max_update == 0.0 || (max_update < cfg.tol && tail < 0.5 * cfg.tol) {
                converged = true;
                break;
            }
        }
        for s in &stencils {
            let sum: f64 = s.neighbors[..s.count].iter().map(|&q| data[at(q)]).sum();
            let residual = (data[at(s.pixel)] - sum / s.count as f64).abs();
            max_residual = max_residual.max(residual);
        }
        all_converged &= converged && max_residual <= cfg.tol;
        max_iterations = max_iterations.max(iterations);
    }

    Ok(InpaintOutcome {
        image: out,
        converged: all_converged,
        iterations: max_iterations,
        max_residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub crop: IrisCrop,
    /// Relaxation hit `max_iters`; the crop holds the last iterate.
    pub nonconverged: bool,
}

/// Detects occlusion and, when present and within the rejection threshold, fills it.
pub fn reconstruct_iris(
    crop: &IrisCrop,
    cfg: &InpaintConfig,
) -> Result<Reconstruction, ReconstructionError> {
    cfg.validate()?;
    let mask = occlusion_mask(crop, cfg);
    reconstruct_with_mask(crop, &mask, cfg)
}

/// Same as [`reconstruct_iris`] with an externally supplied occlusion mask.
///
/// The median/MAD rule can never flag more than half of the in-circle pixels,
/// so rejection of heavier occlusion only happens through this entry point.
pub fn reconstruct_with_mask(
    crop: &IrisCrop,
    mask: &OcclusionMask,
    cfg: &InpaintConfig,
) -> Result<Reconstruction, ReconstructionError> {
    cfg.validate()?;
    let fraction = mask.occlusion_fraction();
    if fraction == 0.0 {
        return Ok(Reconstruction {
            crop: crop.clone(),
            nonconverged: false,
        });
    }
    if fraction > cfg.occlusion_reject_threshold {
        return Err(ReconstructionError::TooOccluded {
            fraction,
            threshold: cfg.occlusion_reject_threshold,
        });
    }
    let outcome = inpaint_diffusion(&crop.image, mask, cfg)?;
    Ok(Reconstruction {
        crop: IrisCrop {
            image: outcome.image,
            occlusion_fraction: fraction,
            reconstructed: true,
            ..crop.clone()
        },
        nonconverged: !outcome.converged,
    })
}
