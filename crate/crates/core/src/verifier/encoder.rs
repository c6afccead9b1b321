//! Shared-weight convolutional encoder with hand-written backpropagation.
//!
//! Layout: a stack of 3×3 stride-2 convolutions (zero padding 1, `tanh` after
//! each), global average pooling, one affine map to `embed_dim`, then L2
//! normalization. Activations are stored height × width × channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::VerifierError;
use crate::types::IrisCrop;

const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

/// Architecture descriptor; the parameter vector length is a pure function of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub name: String,
    pub input_size: usize,
    /// Output channels of each convolution block.
    pub widths: Vec<usize>,
    pub embed_dim: usize,
}

impl Architecture {
    /// Reference encoder: four blocks of 32/64/128/256 channels.
    pub fn small_conv(input_size: usize, embed_dim: usize) -> Self {
        Self {
            name: "SmallConv".to_string(),
            input_size,
            widths: vec![32, 64, 128, 256],
            embed_dim,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        input_size: usize,
        widths: Vec<usize>,
        embed_dim: usize,
    ) -> Self {
        Self {
            name: name.into(),
            input_size,
            widths,
            embed_dim,
        }
    }

    pub fn validate(&self) -> Result<(), VerifierError> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(VerifierError::Architecture(
                "need at least one block and nonzero widths".into(),
            ));
        }
        if self.embed_dim == 0 || self.input_size == 0 {
            return Err(VerifierError::Architecture(
                "embed_dim and input_size must be positive".into(),
            ));
        }
        Ok(())
    }

    fn layer_shapes(&self) -> Vec<ConvShape> {
        let mut shapes = Vec::with_capacity(self.widths.len());
        let mut side = self.input_size;
        let mut cin = 1;
        for &cout in &self.widths {
            let out_side = (side - 1) / 2 + 1;
            shapes.push(ConvShape {
                in_side: side,
                out_side,
                cin,
                cout,
            });
            side = out_side;
            cin = cout;
        }
        shapes
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        let convs: usize = self
            .layer_shapes()
            .iter()
            .map(|s| TAPS * s.cin * s.cout + s.cout)
            .sum();
        let last = *self.widths.last().unwrap_or(&0);
        convs + last * self.embed_dim + self.embed_dim
    }
}

#[derive(Clone, Copy, Debug)]
struct ConvShape {
    in_side: usize,
    out_side: usize,
    cin: usize,
    cout: usize,
}

impl ConvShape {
    fn weight_len(&self) -> usize {
        TAPS * self.cin * self.cout
    }
}

/// Weights `w` of the encoder plus the descriptor they belong to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub seed: u64,
}

/// Forward-pass intermediates needed by the backward pass.
pub struct Activations {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of block `l`.
    acts: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    norm: f64,
    embedding: Vec<f64>,
}

impl Activations {
    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }
}

impl EncoderState {
    /// Zero-mean Gaussian weights with standard deviation `1/sqrt(fan_in)`; zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self, VerifierError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        let mut fill = |n: usize, fan_in: usize, params: &mut Vec<f64>| {
            let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("finite std");
            params.extend((0..n).map(|_| normal.sample(&mut rng)));
        };
        for shape in arch.layer_shapes() {
            fill(shape.weight_len(), TAPS * shape.cin, &mut params);
            params.extend(std::iter::repeat_n(0.0, shape.cout));
        }
        let last = *arch.widths.last().unwrap();
        fill(last * arch.embed_dim, last, &mut params);
        params.extend(std::iter::repeat_n(0.0, arch.embed_dim));
        debug_assert_eq!(params.len(), arch.param_count());
        Ok(Self { arch, params, seed })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>, seed: u64) -> Result<Self, VerifierError> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(VerifierError::Shape {
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { arch, params, seed })
    }

    pub fn embed_dim(&self) -> usize {
        self.arch.embed_dim
    }

    pub fn input_size(&self) -> usize {
        self.arch.input_size
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Luminance of the crop, centred on zero, as the network input.
    pub fn prepare_input(&self, crop: &IrisCrop) -> Result<Vec<f64>, VerifierError> {
        let img = &crop.image;
        let side = self.arch.input_size;
        if img.width() != side || img.height() != side {
            return Err(VerifierError::Shape {
                expected: side,
                got: img.width().max(img.height()),
            });
        }
        Ok(img.to_gray().data().iter().map(|v| v - 0.5).collect())
    }

    pub fn forward(&self, input: &[f64]) -> Activations {
        let shapes = self.arch.layer_shapes();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(shapes.len() + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for shape in &shapes {
            let w = &self.params[offset..offset + shape.weight_len()];
            offset += shape.weight_len();
            let b = &self.params[offset..offset + shape.cout];
            offset += shape.cout;
            let mut out = conv_forward(acts.last().unwrap(), w, b, shape);
            for v in out.iter_mut() {
                *v = v.tanh();
            }
            acts.push(out);
        }

        let last = shapes.last().unwrap();
        let spatial = last.out_side * last.out_side;
        let mut pooled = vec![0.0; last.cout];
        for px in acts.last().unwrap().chunks_exact(last.cout) {
            for (p, v) in pooled.iter_mut().zip(px) {
                *p += v;
            }
        }
        for p in pooled.iter_mut() {
            *p /= spatial as f64;
        }

        let embed = self.arch.embed_dim;
        let fc_w = &self.params[offset..offset + last.cout * embed];
        let fc_b = &self.params[offset + last.cout * embed..offset + last.cout * embed + embed];
        let mut z = fc_b.to_vec();
        for (i, &p) in pooled.iter().enumerate() {
            axpy(p, &fc_w[i * embed..(i + 1) * embed], &mut z);
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let embedding = z.iter().map(|v| v / norm).collect();
        Activations {
            acts,
            pooled,
            norm,
            embedding,
        }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d embedding`.
    pub fn backward(&self, cache: &Activations, d_embedding: &[f64], grad: &mut [f64]) {
        let shapes = self.arch.layer_shapes();
        let embed = self.arch.embed_dim;
        let u = &cache.embedding;

        // through the L2 normalization: dz = (du - u (u·du)) / |z|
        let proj: f64 = u.iter().zip(d_embedding).map(|(a, b)| a * b).sum();
        let dz: Vec<f64> = u
            .iter()
            .zip(d_embedding)
            .map(|(ui, di)| (di - ui * proj) / cache.norm)
            .collect();

        let conv_len: usize = shapes.iter().map(|s| s.weight_len() + s.cout).sum();
        let last = shapes.last().unwrap();
        let fc_w_off = conv_len;
        let fc_b_off = conv_len + last.cout * embed;
        let mut d_pooled = vec![0.0; last.cout];
        for (i, &p) in cache.pooled.iter().enumerate() {
            let row = fc_w_off + i * embed;
            axpy(p, &dz, &mut grad[row..row + embed]);
            d_pooled[i] = dot(&self.params[row..row + embed], &dz);
        }
        for (g, d) in grad[fc_b_off..fc_b_off + embed].iter_mut().zip(&dz) {
            *g += d;
        }

        let spatial = (last.out_side * last.out_side) as f64;
        let mut d_act: Vec<f64> = Vec::with_capacity(last.out_side * last.out_side * last.cout);
        for _ in 0..last.out_side * last.out_side {
            d_act.extend(d_pooled.iter().map(|d| d / spatial));
        }

        let mut offsets = Vec::with_capacity(shapes.len());
        let mut off = 0;
        for s in &shapes {
            offsets.push(off);
            off += s.weight_len() + s.cout;
        }
        for (l, shape) in shapes.iter().enumerate().rev() {
            let out = &cache.acts[l + 1];
            let d_pre: Vec<f64> = d_act
                .iter()
                .zip(out)
                .map(|(d, a)| d * (1.0 - a * a))
                .collect();
            let w_off = offsets[l];
            let b_off = w_off + shape.weight_len();
            let (head, tail) = grad.split_at_mut(b_off);
            let d_w = &mut head[w_off..];
            let d_b = &mut tail[..shape.cout];
            let w = &self.params[w_off..b_off];
            let want_input_grad = l > 0;
            d_act = conv_backward(&cache.acts[l], w, &d_pre, shape, d_w, d_b, want_input_grad);
        }
    }

    /// Unit-norm embedding of one crop.
    pub fn embed_input(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input).embedding
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Input coordinate for output index `o` and kernel tap `k` (stride 2, pad 1).
#[inline]
fn tap(o: usize, k: usize, side: usize) -> Option<usize> {
    let i = (2 * o + k) as isize - 1;
    (i >= 0 && (i as usize) < side).then_some(i as usize)
}

fn conv_forward(input: &[f64], w: &[f64], b: &[f64], s: &ConvShape) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.out_side * s.out_side * s.cout);
    for oy in 0..s.out_side {
        for ox in 0..s.out_side {
            let start = out.len();
            out.extend_from_slice(b);
            let acc = &mut out[start..];
            for ky in 0..KERNEL {
                let Some(iy) = tap(oy, ky, s.in_side) else { continue };
                for kx in 0..KERNEL {
                    let Some(ix) = tap(ox, kx, s.in_side) else { continue };
                    let px = &input[(iy * s.in_side + ix) * s.cin..][..s.cin];
                    let wk = &w[(ky * KERNEL + kx) * s.cin * s.cout..][..s.cin * s.cout];
                    for (ci, &a) in px.iter().enumerate() {
                        axpy(a, &wk[ci * s.cout..(ci + 1) * s.cout], acc);
                    }
                }
            }
        }
    }
    out
}

fn conv_backward(
    input: &[f64],
    w: &[f64],
    d_out: &[f64],
    s: &ConvShape,
    d_w: &mut [f64],
    d_b: &mut [f64],
    want_input_grad: bool,
) -> Vec<f64> {
    let mut d_in = if want_input_grad {
        vec![0.0; s.in_side * s.in_side * s.cin]
    } else {
        Vec::new()
    };
    for oy in 0..s.out_side {
        for ox in 0..s.out_side {
            let g = &d_out[(oy * s.out_side + ox) * s.cout..][..s.cout];
            for (db, gi) in d_b.iter_mut().zip(g) {
                *db += gi;
            }
            for ky in 0..KERNEL {
                let Some(iy) = tap(oy, ky, s.in_side) else { continue };
                for kx in 0..KERNEL {
                    let Some(ix) = tap(ox, kx, s.in_side) else { continue };
                    let base = (iy * s.in_side + ix) * s.cin;
                    let k_off = (ky * KERNEL + kx) * s.cin * s.cout;
                    for ci in 0..s.cin {
                        let row = k_off + ci * s.cout;
                        axpy(input[base + ci], g, &mut d_w[row..row + s.cout]);
                        if want_input_grad {
                            d_in[base + ci] += dot(&w[row..row + s.cout], g);
                        }
                    }
                }
            }
        }
    }
    d_in
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_conv_param_count() {
        let arch = Architecture::small_conv(128, 128);
        let expected = (9 * 32 + 32)
            + (9 * 32 * 64 + 64)
            + (9 * 64 * 128 + 128)
            + (9 * 128 * 256 + 256)
            + (256 * 128 + 128);
        assert_eq!(arch.param_count(), expected);
        let state = EncoderState::init(arch, 7).unwrap();
        assert_eq!(state.params.len(), expected);
    }

    #[test]
    fn spatial_sizes_halve() {
        let shapes = Architecture::small_conv(128, 8).layer_shapes();
        let sides: Vec<usize> = shapes.iter().map(|s| s.out_side).collect();
        assert_eq!(sides, vec![64, 32, 16, 8]);
        let odd = Architecture::custom("t", 15, vec![2, 2], 4).layer_shapes();
        assert_eq!(odd.iter().map(|s| s.out_side).collect::<Vec<_>>(), vec![8, 4]);
    }

    #[test]
    fn conv_matches_direct_sum() {
        // 1 input channel, 1 output channel, 4x4 input
        let s = ConvShape {
            in_side: 4,
            out_side: 2,
            cin: 1,
            cout: 1,
        };
        let input: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let w: Vec<f64> = (0..9).map(|v| (v as f64) * 0.1).collect();
        let out = conv_forward(&input, &w, &[0.5], &s);
        // output (1,1) reads input rows 1..=3, cols 1..=3 with the full kernel
        let mut expect = 0.5;
        for ky in 0..3 {
            for kx in 0..3 {
                expect += input[(1 + ky) * 4 + 1 + kx] * w[ky * 3 + kx];
            }
        }
        assert!((out[3] - expect).abs() < 1e-12);
        // output (0,0) loses the top row and left column to padding
        let mut expect = 0.5;
        for ky in 1..3 {
            for kx in 1..3 {
                expect += input[(ky - 1) * 4 + kx - 1] * w[ky * 3 + kx];
            }
        }
        assert!((out[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn init_is_seeded() {
        let arch = Architecture::custom("t", 16, vec![2, 2], 4);
        let a = EncoderState::init(arch.clone(), 3).unwrap();
        let b = EncoderState::init(arch.clone(), 3).unwrap();
        let c = EncoderState::init(arch, 4).unwrap();
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn rejects_wrong_param_length() {
        let arch = Architecture::custom("t", 16, vec![2], 4);
        assert!(EncoderState::from_params(arch, vec![0.0; 3], 0).is_err());
    }
}
