//! Guidance losses with hand-derived gradients.
//!
//! Gradients are taken with respect to the raw (un-normalized) image-side
//! vector: the derivative is first formed for the unit vector and then
//! pulled back through the normalization Jacobian `(I − x̂x̂ᵀ)/‖x‖`.
//! Guidance metrics are constants here; nothing differentiates through the
//! subspace construction.

use crate::error::{Error, Result};
use crate::grassmann::{geodesic_cosine_grad, GuidanceMetric};
use crate::linalg::{dot, norm, normalize};

/// Differences shorter than this are rejected as directions.
pub const MIN_DIRECTION_NORM: f64 = 1e-12;

pub const DEFAULT_LAMBDA1: f64 = 1.0;
pub const DEFAULT_LAMBDA2: f64 = 0.3;

/// A loss value and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl Scored {
    pub fn zero(dim: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; dim] }
    }
}

/// Image-side and text-side direction, both normalized.
#[derive(Clone, Debug)]
pub struct DirectionPair {
    delta_image: Vec<f64>,
    delta_text: Vec<f64>,
    image_norm: f64,
}

impl DirectionPair {
    pub fn new(raw_image: &[f64], raw_text: &[f64]) -> Result<Self> {
        if raw_image.len() != raw_text.len() {
            return Err(Error::DimensionMismatch(format!(
                "image direction has length {}, text direction {}",
                raw_image.len(),
                raw_text.len()
            )));
        }
        let (delta_image, image_norm) = normalize(raw_image, MIN_DIRECTION_NORM)?;
        let (delta_text, _) = normalize(raw_text, MIN_DIRECTION_NORM)?;
        Ok(Self { delta_image, delta_text, image_norm })
    }

    pub fn delta_image(&self) -> &[f64] {
        &self.delta_image
    }

    pub fn delta_text(&self) -> &[f64] {
        &self.delta_text
    }

    fn cos(&self) -> f64 {
        dot(&self.delta_image, &self.delta_text).clamp(-1.0, 1.0)
    }

    /// `t − (x̂·t) x̂`, the part of the text direction tangent to x̂.
    fn tangent(&self) -> Vec<f64> {
        let c = dot(&self.delta_image, &self.delta_text);
        self.delta_text.iter().zip(&self.delta_image).map(|(t, x)| t - c * x).collect()
    }
}

/// Pulls a gradient taken at `raw / ‖raw‖` back to `raw`.
pub fn normalize_backward(raw: &[f64], grad_unit: &[f64]) -> Vec<f64> {
    let n = norm(raw);
    let along: f64 = raw.iter().zip(grad_unit).map(|(x, g)| x * g).sum::<f64>() / n;
    raw.iter().zip(grad_unit).map(|(x, g)| (g - along * x / n) / n).collect()
}

/// `1 − cos(Δz_I, Δz_T)`.
pub fn directional_loss(pair: &DirectionPair) -> Scored {
    let value = 1.0 - pair.cos();
    let grad = pair.tangent().iter().map(|t| -t / pair.image_norm).collect();
    Scored { value, grad }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SphericalMode {
    /// `arccos²(cos)`, zero when aligned.
    #[default]
    Canonical,
    /// `1 − arccos²(cos)`, the form that is unbounded below.
    Literal,
}

/// Squared spherical distance between the two directions.
pub fn spherical_sq_loss(pair: &DirectionPair, mode: SphericalMode) -> Scored {
    let tangent = pair.tangent();
    let s = norm(&tangent);
    let theta = s.atan2(dot(&pair.delta_image, &pair.delta_text));
    // d θ² / d x = −2θ · tangent / (sin θ · ‖x‖); |tangent| = sin θ
    let grad: Vec<f64> = if s > 0.0 {
        tangent.iter().map(|t| -2.0 * theta * t / (s * pair.image_norm)).collect()
    } else {
        vec![0.0; tangent.len()]
    };
    match mode {
        SphericalMode::Canonical => Scored { value: theta * theta, grad },
        SphericalMode::Literal => Scored { value: 1.0 - theta * theta, grad: grad.iter().map(|g| -g).collect() },
    }
}

/// `1 − Q-cos(normalize(raw_image), text_dir)`, gradient w.r.t. `raw_image`.
pub fn imc_from_direction(q: &GuidanceMetric, raw_image: &[f64], text_dir: &[f64]) -> Result<Scored> {
    let (unit, _) = normalize(raw_image, MIN_DIRECTION_NORM)?;
    let (cos, grad_unit) = geodesic_cosine_grad(q, &unit, text_dir)?;
    let grad = normalize_backward(raw_image, &grad_unit).iter().map(|g| -g).collect();
    Ok(Scored { value: 1.0 - cos, grad })
}

/// Inter-modality consistency: Q-cosine between the normalized image
/// direction and the normalized text direction. Gradient w.r.t. `z_image_i`.
pub fn imc_loss(
    q: &GuidanceMetric,
    z_image_i: &[f64],
    z_image_src: &[f64],
    z_text_trg: &[f64],
    z_text_src: &[f64],
) -> Result<Scored> {
    let raw_image: Vec<f64> = z_image_i.iter().zip(z_image_src).map(|(a, b)| a - b).collect();
    let raw_text: Vec<f64> = z_text_trg.iter().zip(z_text_src).map(|(a, b)| a - b).collect();
    let (text_dir, _) = normalize(&raw_text, MIN_DIRECTION_NORM)?;
    imc_from_direction(q, &raw_image, &text_dir)
}

/// Intra-modality regularization: Q-cosine between consecutive normalized
/// image features. Gradient w.r.t. `z_curr`.
pub fn imr_loss(q: &GuidanceMetric, z_prev: &[f64], z_curr: &[f64]) -> Result<Scored> {
    let (prev, _) = normalize(z_prev, MIN_DIRECTION_NORM)?;
    let (curr, _) = normalize(z_curr, MIN_DIRECTION_NORM)?;
    let (cos, grad_unit) = geodesic_cosine_grad(q, &curr, &prev)?;
    let grad = normalize_backward(z_curr, &grad_unit).iter().map(|g| -g).collect();
    Ok(Scored { value: 1.0 - cos, grad })
}

/// Per-step loss breakdown.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub inter_term: f64,
    pub intra_term: f64,
    pub perceptual_term: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LossReport {
    pub fn new(inter: f64, intra: f64, perceptual: f64, lambda1: f64, lambda2: f64) -> Self {
        Self {
            total: inter + lambda1 * intra + lambda2 * perceptual,
            inter_term: inter,
            intra_term: intra,
            perceptual_term: perceptual,
            lambda1,
            lambda2,
        }
    }

    /// `|total − (inter + λ₁·intra + λ₂·perceptual)|`.
    pub fn linearity_defect(&self) -> f64 {
        (self.total - (self.inter_term + self.lambda1 * self.intra_term + self.lambda2 * self.perceptual_term)).abs()
    }
}

/// `L = inter + λ₁·intra + λ₂·perceptual`, with the matching gradient.
pub fn total_loss(
    inter: &Scored,
    intra: &Scored,
    perceptual: &Scored,
    lambda1: f64,
    lambda2: f64,
) -> Result<(LossReport, Vec<f64>)> {
    let d = inter.grad.len();
    if intra.grad.len() != d || perceptual.grad.len() != d {
        return Err(Error::DimensionMismatch("loss terms have gradients of different lengths".into()));
    }
    let report = LossReport::new(inter.value, intra.value, perceptual.value, lambda1, lambda2);
    let mut grad = inter.grad.clone();
    for i in 0..d {
        grad[i] += lambda1 * intra.grad[i];
        if lambda2 != 0.0 {
            grad[i] += lambda2 * perceptual.grad[i];
        }
    }
    Ok((report, grad))
}

#[derive(Clone, Debug)]
pub struct GradientCheckRecord {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub relative_error: f64,
}

/// Compares the analytic gradient of `loss_fn` at `point` with central
/// finite differences of step `step`.
pub fn check_gradient<F>(loss_fn: F, point: &[f64], step: f64) -> GradientCheckRecord
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let analytic = loss_fn(point).1;
    let mut x = point.to_vec();
    let numeric: Vec<f64> = (0..point.len())
        .map(|i| {
            x[i] = point[i] + step;
            let plus = loss_fn(&x).0;
            x[i] = point[i] - step;
            let minus = loss_fn(&x).0;
            x[i] = point[i];
            (plus - minus) / (2.0 * step)
        })
        .collect();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    let relative_error = norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12);
    GradientCheckRecord { analytic, numeric, relative_error }
}
