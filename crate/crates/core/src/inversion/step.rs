//! One optimization step with every guidance metric frozen.

use rayon::prelude::*;

use super::{InversionConfig, LossMode, Problem};
use crate::augment::AugmentationOp;
use crate::encoder::Encoded;
use crate::error::{Error, Result};
use crate::grassmann::{guidance_between, GuidanceMetric};
use crate::image::ImageTensor;
use crate::linalg::{extract_subspace, EmbeddingBatch, Matrix};
use crate::losses::{
    directional_loss, imc_from_direction, imr_loss, spherical_sq_loss, DirectionPair, LossReport, Scored,
    MIN_DIRECTION_NORM,
};
use crate::metrics::ssim_with_grad;

/// Loss, pixel gradient and the member features it was computed from.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: LossReport,
    pub grad: Vec<f64>,
    pub features: EmbeddingBatch,
}

/// Augmentations and guidance metrics fixed at the start of a step, so the
/// loss is an ordinary function of the pixels.
pub struct StepContext<'a> {
    problem: &'a Problem,
    cfg: &'a InversionConfig,
    ops: Vec<AugmentationOp>,
    q_inter: Option<GuidanceMetric>,
    q_intra: Option<GuidanceMetric>,
    prev_mean: Option<Vec<f64>>,
    effective_dim: usize,
    pixels: Vec<f64>,
    encoded: Vec<Encoded>,
}

pub(crate) fn column_mean(m: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (acc, v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m.rows() as f64);
    mean
}

fn feature_batch(encoded: &[Encoded], dim: usize) -> Matrix {
    let data = encoded.iter().flat_map(|e| e.z.iter().copied()).collect();
    Matrix::new(encoded.len(), dim, data).expect("encoder outputs are finite")
}

/// Per-member image directions `z_j − z_src`, or the single summed
/// `Σ z_j − N·z_src` in literal mode. `None` marks a degenerate member.
fn raw_directions(problem: &Problem, encoded: &[Encoded], literal: bool) -> Vec<Option<Vec<f64>>> {
    let src = problem.source_feature();
    let keep = |raw: Vec<f64>| (crate::linalg::norm(&raw) >= MIN_DIRECTION_NORM).then_some(raw);
    if literal {
        let n = encoded.len() as f64;
        let mut raw: Vec<f64> = src.iter().map(|s| -n * s).collect();
        for e in encoded {
            raw.iter_mut().zip(&e.z).for_each(|(r, z)| *r += z);
        }
        vec![keep(raw)]
    } else {
        encoded.iter().map(|e| keep(e.z.iter().zip(src).map(|(z, s)| z - s).collect())).collect()
    }
}

impl<'a> StepContext<'a> {
    /// Encodes the ensemble at `pixels` and, for the geodesic loss, builds
    /// the inter- and intra-modality metrics. `prev_features` is the member
    /// feature batch of the previous iterate; the current batch stands in
    /// for it at the first step.
    pub fn prepare(
        problem: &'a Problem,
        cfg: &'a InversionConfig,
        ops: Vec<AugmentationOp>,
        prev_features: Option<&EmbeddingBatch>,
        pixels: &[f64],
    ) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut ctx = Self {
            problem,
            cfg,
            ops,
            q_inter: None,
            q_intra: None,
            prev_mean: None,
            effective_dim: 0,
            pixels: pixels.to_vec(),
            encoded: Vec::new(),
        };
        ctx.encoded = ctx.encode(pixels)?;
        if cfg.loss_mode != LossMode::GeodesicTotal {
            return Ok(ctx);
        }
        let d = problem.embed_dim();
        let k = cfg.subspace_dim.min(d);
        let dirs: Vec<Vec<f64>> = raw_directions(problem, &ctx.encoded, cfg.literal).into_iter().flatten().collect();
        if dirs.is_empty() {
            return Err(Error::DegenerateEnsemble);
        }
        let dir_batch = Matrix::from_rows(&dirs)?;
        let text_batch = Matrix::from_rows(&vec![problem.text_direction(); dirs.len()])?;
        ctx.q_inter = Some(guidance_between(&extract_subspace(&dir_batch, k)?, &extract_subspace(&text_batch, k)?)?);

        let current = feature_batch(&ctx.encoded, d);
        let prev = prev_features.unwrap_or(&current);
        let p_prev = extract_subspace(prev, k)?;
        let p_curr = extract_subspace(&current, k)?;
        ctx.effective_dim = p_prev.sub_dim().min(p_curr.sub_dim());
        ctx.q_intra = Some(guidance_between(&p_prev, &p_curr)?);
        ctx.prev_mean = Some(column_mean(prev));
        Ok(ctx)
    }

    pub fn ops(&self) -> &[AugmentationOp] {
        &self.ops
    }

    /// Subspace dimension actually used by the intra-modality metric (0
    /// outside the geodesic loss).
    pub fn effective_dim(&self) -> usize {
        self.effective_dim
    }

    pub fn q_inter(&self) -> Option<&GuidanceMetric> {
        self.q_inter.as_ref()
    }

    pub fn q_intra(&self) -> Option<&GuidanceMetric> {
        self.q_intra.as_ref()
    }

    fn encode(&self, pixels: &[f64]) -> Result<Vec<Encoded>> {
        let shape = self.problem.source().shape();
        let encoder = self.problem.image_encoder();
        self.ops
            .par_iter()
            .map(|op| encoder.forward(&op.apply_raw(shape, pixels)?))
            .collect()
    }

    /// Loss and gradient at the pixels the context was prepared with.
    pub fn evaluate_prepared(&self) -> Result<Evaluation> {
        self.evaluate_encoded(&self.pixels, &self.encoded)
    }

    /// Loss and gradient at arbitrary pixels with the metrics held fixed.
    pub fn loss_and_grad(&self, pixels: &[f64]) -> Result<Evaluation> {
        let encoded = self.encode(pixels)?;
        self.evaluate_encoded(pixels, &encoded)
    }

    fn direction_term(&self, raw: &[f64]) -> Result<Scored> {
        let t = self.problem.text_direction();
        match self.cfg.loss_mode {
            LossMode::Directional => Ok(directional_loss(&DirectionPair::new(raw, t)?)),
            LossMode::Spherical => Ok(spherical_sq_loss(&DirectionPair::new(raw, t)?, self.cfg.spherical_mode)),
            LossMode::GeodesicTotal => imc_from_direction(self.q_inter.as_ref().expect("prepared"), raw, t),
        }
    }

    fn evaluate_encoded(&self, pixels: &[f64], encoded: &[Encoded]) -> Result<Evaluation> {
        let cfg = self.cfg;
        let d = self.problem.embed_dim();
        let n = encoded.len();
        let mut cotangents = vec![vec![0.0; d]; n];

        let raws = raw_directions(self.problem, encoded, cfg.literal);
        let live = raws.iter().flatten().count();
        if live == 0 {
            return Err(Error::DegenerateEnsemble);
        }
        let mut inter = 0.0;
        for (j, raw) in raws.iter().enumerate() {
            let Some(raw) = raw else { continue };
            let s = self.direction_term(raw)?;
            inter += s.value / live as f64;
            // literal mode: d(Σ z_j − N z_src)/dz_j = I for every member
            let targets: Vec<usize> = if cfg.literal { (0..n).collect() } else { vec![j] };
            for &m in &targets {
                cotangents[m].iter_mut().zip(&s.grad).for_each(|(c, g)| *c += g / live as f64);
            }
        }

        let (mut intra, mut perceptual) = (0.0, 0.0);
        let mut pixel_extra = None;
        if cfg.loss_mode == LossMode::GeodesicTotal {
            let mean = column_mean(&feature_batch(encoded, d));
            let s = imr_loss(self.q_intra.as_ref().expect("prepared"), self.prev_mean.as_ref().unwrap(), &mean)?;
            intra = s.value;
            for c in cotangents.iter_mut() {
                c.iter_mut().zip(&s.grad).for_each(|(c, g)| *c += cfg.lambda1 * g / n as f64);
            }
            if cfg.perceptual {
                let source = self.problem.source();
                let x = ImageTensor::new(source.shape(), pixels.to_vec())?;
                let (value, g) = ssim_with_grad(&x, source)?;
                perceptual = (1.0 - value) / 2.0;
                pixel_extra = Some(g.iter().map(|g| -0.5 * cfg.lambda2 * g).collect::<Vec<f64>>());
            }
        }
        let report = LossReport::new(inter, intra, perceptual, cfg.lambda1, cfg.lambda2);

        let shape = self.problem.source().shape();
        let encoder = self.problem.image_encoder();
        let member_grads: Vec<Vec<f64>> = self
            .ops
            .par_iter()
            .zip(encoded.par_iter())
            .zip(cotangents.par_iter())
            .map(|((op, enc), cot)| op.adjoint_raw(shape, &encoder.backward(enc, cot)))
            .collect::<Result<_>>()?;
        let mut grad = pixel_extra.unwrap_or_else(|| vec![0.0; pixels.len()]);
        for g in &member_grads {
            grad.iter_mut().zip(g).for_each(|(acc, v)| *acc += v);
        }
        Ok(Evaluation { report, grad, features: feature_batch(encoded, d) })
    }
}
