//! Frozen toy encoders standing in for a contrastive image/text model.
//!
//! An encoder is a fixed random linear map (optionally preceded by one tanh
//! hidden layer) followed by L2 normalization, so every output lies on the
//! unit sphere and the backward pass is exact.

use crate::error::{Error, Result};
use crate::image::ImageShape;
use crate::linalg::{dot, norm, Matrix};
use crate::random::{fnv1a, stream_rng, BoxMuller};

/// Activation norms below this cannot be normalized.
pub const MIN_ACTIVATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    Image,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyEncoder {
    kind: EncoderKind,
    seed: u64,
    /// Optional tanh layer, hidden×input.
    hidden: Option<Matrix>,
    /// output×(hidden or input).
    weight: Matrix,
}

/// Forward-pass intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub z: Vec<f64>,
    activation_norm: f64,
    hidden_act: Option<Vec<f64>>,
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> Matrix {
    let mut g = BoxMuller::new(stream_rng(seed, stream));
    let scale = 1.0 / (cols as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| g.sample() * scale)
}

/// Linear encoder with `N(0, 1/input_dim)` weights.
pub fn make_encoder(kind: EncoderKind, input_dim: usize, output_dim: usize, seed: u64) -> ToyEncoder {
    assert!(input_dim >= 1 && output_dim >= 1, "encoder dimensions must be positive");
    ToyEncoder { kind, seed, hidden: None, weight: gaussian_matrix(output_dim, input_dim, seed, 0) }
}

/// Default spatial correlation length, in pixels, of image-encoder weights.
pub const IMAGE_WEIGHT_SIGMA: f64 = 2.0;

/// Linear image encoder whose rows are Gaussian fields blurred with a
/// circular Gaussian kernel of width `sigma` pixels (per channel), scaled to
/// unit norm. `sigma = 0` leaves the entries independent.
pub fn make_image_encoder(shape: ImageShape, output_dim: usize, seed: u64, sigma: f64) -> ToyEncoder {
    assert!(!shape.is_empty() && output_dim >= 1, "encoder dimensions must be positive");
    let mut g = BoxMuller::new(stream_rng(seed, 0));
    let rows: Vec<Vec<f64>> = (0..output_dim)
        .map(|_| {
            let noise: Vec<f64> = (0..shape.len()).map(|_| g.sample()).collect();
            let mut row = if sigma > 0.0 { blur(shape, &noise, sigma) } else { noise };
            let n = norm(&row);
            row.iter_mut().for_each(|v| *v /= n);
            row
        })
        .collect();
    ToyEncoder { kind: EncoderKind::Image, seed, hidden: None, weight: Matrix::from_rows(&rows).expect("rows are finite") }
}

/// Separable circular Gaussian blur.
fn blur(shape: ImageShape, x: &[f64], sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let (h, w) = (shape.height as isize, shape.width as isize);
    let pass = |src: &[f64], vertical: bool| {
        let mut out = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..shape.channels {
                    let mut acc = 0.0;
                    for (k, &kv) in (-r..=r).zip(&kernel) {
                        let (yy, xx) = if vertical { ((y + k).rem_euclid(h), x) } else { (y, (x + k).rem_euclid(w)) };
                        acc += kv * src[shape.index(yy as usize, xx as usize, c)];
                    }
                    out[shape.index(y as usize, x as usize, c)] = acc;
                }
            }
        }
        out
    };
    pass(&pass(x, false), true)
}

/// Encoder with one tanh hidden layer.
pub fn make_tanh_encoder(
    kind: EncoderKind,
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    seed: u64,
) -> ToyEncoder {
    assert!(input_dim >= 1 && hidden_dim >= 1 && output_dim >= 1, "encoder dimensions must be positive");
    ToyEncoder {
        kind,
        seed,
        hidden: Some(gaussian_matrix(hidden_dim, input_dim, seed, 1)),
        weight: gaussian_matrix(output_dim, hidden_dim, seed, 0),
    }
}

impl ToyEncoder {
    /// Linear encoder with explicit weights.
    pub fn from_weight(kind: EncoderKind, weight: Matrix) -> Self {
        Self { kind, seed: 0, hidden: None, weight }
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.as_ref().map_or(self.weight.cols(), Matrix::cols)
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.z)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Encoded> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "encoder expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let hidden_act = match &self.hidden {
            Some(w1) => Some(w1.matvec(x)?.into_iter().map(f64::tanh).collect::<Vec<_>>()),
            None => None,
        };
        let a = self.weight.matvec(hidden_act.as_deref().unwrap_or(x))?;
        let n = norm(&a);
        if !(n >= MIN_ACTIVATION) {
            return Err(Error::ZeroActivation(n));
        }
        Ok(Encoded { z: a.iter().map(|v| v / n).collect(), activation_norm: n, hidden_act })
    }

    /// Pulls an output cotangent back to the input.
    pub fn backward(&self, enc: &Encoded, cotangent: &[f64]) -> Vec<f64> {
        // d(a/|a|) = (I − zzᵀ) da / |a|
        let zc = dot(&enc.z, cotangent);
        let da: Vec<f64> =
            cotangent.iter().zip(&enc.z).map(|(c, z)| (c - zc * z) / enc.activation_norm).collect();
        let dh = self.weight.t_matvec(&da).expect("cotangent has output dimension");
        match (&self.hidden, &enc.hidden_act) {
            (Some(w1), Some(h)) => {
                let dpre: Vec<f64> = dh.iter().zip(h).map(|(g, h)| g * (1.0 - h * h)).collect();
                w1.t_matvec(&dpre).expect("hidden dimension")
            }
            _ => dh,
        }
    }
}

/// Prompt input vector: a one-hot slot chosen by the prompt's hash plus
/// small Gaussian noise seeded by the same hash.
pub fn prompt_vector(prompt: &str, dim: usize) -> Vec<f64> {
    let h = fnv1a(prompt.as_bytes());
    let mut g = BoxMuller::new(stream_rng(h, crate::random::streams::PROMPT));
    let mut v: Vec<f64> = (0..dim).map(|_| 0.1 * g.sample()).collect();
    v[(h % dim as u64) as usize] += 1.0;
    v
}
