//! Ensemble pixel-space inversion toward a text-defined direction.

mod config;
mod persist;
mod step;

use std::f64::consts::PI;

use rand::Rng;

pub use config::{InversionConfig, LossMode, Optimizer, Schedule};
pub use persist::{write_trajectory, TRAJECTORY_HEADER};
pub use step::{Evaluation, StepContext};

use crate::augment::{sample_augmentations, AugmentationOp};
use crate::encoder::{make_encoder, make_image_encoder, prompt_vector, EncoderKind, ToyEncoder, IMAGE_WEIGHT_SIGMA};
use crate::error::{Error, Result};
use crate::grassmann::guidance_between;
use crate::image::{ImageShape, ImageTensor};
use crate::linalg::{cosine, extract_subspace, norm, EmbeddingBatch, Matrix};
use crate::losses::{LossReport, MIN_DIRECTION_NORM};
use crate::metrics::{d_metric, morphing_score};
use crate::random::{derive_seed, stream_rng, streams};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// `base·(1 + cos(π·step/total))/2`.
pub fn cosine_lr(base_lr: f64, step: usize, total_steps: usize) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    base_lr * (1.0 + (PI * frac).cos()) / 2.0
}

pub fn scheduled_lr(cfg: &InversionConfig, step: usize) -> f64 {
    match cfg.schedule {
        Schedule::Constant => cfg.learning_rate,
        Schedule::Cosine => cosine_lr(cfg.learning_rate, step, cfg.epochs),
    }
}

/// Image, text and held-out evaluation encoders for one seed. Image
/// encoders have spatially smooth weights so that, like a real vision
/// encoder, they respond similarly to an image and its small shifts, crops
/// and flips.
#[derive(Clone, Debug)]
pub struct Encoders {
    pub image: ToyEncoder,
    pub text: ToyEncoder,
    pub eval: ToyEncoder,
}

impl Encoders {
    pub fn new(cfg: &InversionConfig, shape: ImageShape) -> Self {
        let seed = |stream| derive_seed(cfg.seed, stream, 0);
        Self {
            image: make_image_encoder(shape, cfg.embed_dim, seed(streams::IMAGE_ENCODER), IMAGE_WEIGHT_SIGMA),
            text: make_encoder(EncoderKind::Text, cfg.text_dim, cfg.embed_dim, seed(streams::TEXT_ENCODER)),
            eval: make_image_encoder(shape, cfg.embed_dim, seed(streams::EVAL_ENCODER), IMAGE_WEIGHT_SIGMA),
        }
    }
}

/// `normalize(E_T(target) − E_T(source))`.
pub fn text_direction(enc_text: &ToyEncoder, prompt_src: &str, prompt_trg: &str) -> Result<Vec<f64>> {
    let dim = enc_text.input_dim();
    let src = enc_text.encode(&prompt_vector(prompt_src, dim))?;
    let trg = enc_text.encode(&prompt_vector(prompt_trg, dim))?;
    let diff: Vec<f64> = trg.iter().zip(&src).map(|(t, s)| t - s).collect();
    let n = norm(&diff);
    if n < MIN_DIRECTION_NORM {
        return Err(Error::DegenerateDirection);
    }
    Ok(diff.iter().map(|v| v / n).collect())
}

/// Smooth random 8-bit test image: a few oriented sinusoids per channel.
pub fn synthetic_source(seed: u64, shape: ImageShape) -> ImageTensor {
    let mut rng = stream_rng(seed, streams::SOURCE_IMAGE);
    let mut pixels = vec![0.0; shape.len()];
    for c in 0..shape.channels {
        let waves: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.0..2.0 * PI), rng.random_range(0.3..1.0))
            })
            .collect();
        let total_amp: f64 = waves.iter().map(|w| w.3).sum();
        for y in 0..shape.height {
            for x in 0..shape.width {
                let (fy, fx) = (y as f64 / shape.height as f64, x as f64 / shape.width as f64);
                let v: f64 = waves.iter().map(|(a, b, phase, amp)| amp * (2.0 * PI * (a * fy + b * fx) + phase).sin()).sum();
                let p = 0.5 + 0.4 * v / total_amp;
                pixels[shape.index(y, x, c)] = (p * 255.0).round() / 255.0;
            }
        }
    }
    ImageTensor::new(shape, pixels).expect("pixels are finite")
}

/// Fixed inputs of a run: the source image, its features, the image
/// encoder and the target text direction.
#[derive(Clone, Debug)]
pub struct Problem {
    source: ImageTensor,
    source_feature: Vec<f64>,
    image_encoder: ToyEncoder,
    text_direction: Vec<f64>,
}

impl Problem {
    pub fn new(source: ImageTensor, image_encoder: ToyEncoder, text_direction: Vec<f64>) -> Result<Self> {
        let source_feature = image_encoder.encode(source.pixels())?;
        if text_direction.len() != source_feature.len() {
            return Err(Error::DimensionMismatch(format!(
                "text direction has length {}, embedding dimension is {}",
                text_direction.len(),
                source_feature.len()
            )));
        }
        Ok(Self { source, source_feature, image_encoder, text_direction })
    }

    pub fn source(&self) -> &ImageTensor {
        &self.source
    }

    pub fn source_feature(&self) -> &[f64] {
        &self.source_feature
    }

    pub fn image_encoder(&self) -> &ToyEncoder {
        &self.image_encoder
    }

    pub fn text_direction(&self) -> &[f64] {
        &self.text_direction
    }

    pub fn embed_dim(&self) -> usize {
        self.source_feature.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct AdamMoments {
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MorphState {
    pub image: ImageTensor,
    /// Number of completed steps.
    pub iterate: usize,
    pub loss_history: Vec<LossReport>,
    pub lr_history: Vec<f64>,
    /// Unaugmented features of the image at each recorded state.
    pub feature_trail: Vec<Vec<f64>>,
    /// Intra-modality subspace dimension used by the last step.
    pub effective_dim: usize,
    prev_features: Option<EmbeddingBatch>,
    adam: Option<AdamMoments>,
}

impl MorphState {
    pub fn new(image: ImageTensor) -> Self {
        Self {
            image,
            iterate: 0,
            loss_history: Vec::new(),
            lr_history: Vec::new(),
            feature_trail: Vec::new(),
            effective_dim: 0,
            prev_features: None,
            adam: None,
        }
    }

    /// Member features from the last step, if any.
    pub fn prev_features(&self) -> Option<&EmbeddingBatch> {
        self.prev_features.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug)]
pub struct MorphTrajectory {
    pub states: Vec<MorphState>,
    pub config: InversionConfig,
    pub provenance: Provenance,
}

impl MorphTrajectory {
    pub fn final_state(&self) -> &MorphState {
        self.states.last().expect("a trajectory holds at least the initial state")
    }
}

/// Ensemble augmentations for step `step`, re-sampled every epoch.
pub fn epoch_augmentations(cfg: &InversionConfig, shape: ImageShape, step: usize) -> Vec<AugmentationOp> {
    sample_augmentations(derive_seed(cfg.seed, streams::AUGMENT, step as u64), cfg.ensembles, shape)
}

/// One step with explicitly supplied augmentations.
pub fn inversion_step_with(
    mut state: MorphState,
    cfg: &InversionConfig,
    problem: &Problem,
    ops: Vec<AugmentationOp>,
) -> Result<MorphState> {
    let t = state.iterate;
    let ctx = StepContext::prepare(problem, cfg, ops, state.prev_features.as_ref(), state.image.pixels())
        .map_err(|e| e.at_iterate(t))?;
    let eval = ctx.evaluate_prepared().map_err(|e| e.at_iterate(t))?;
    let lr = scheduled_lr(cfg, t);
    let mut pixels = state.image.pixels().to_vec();
    match cfg.optimizer {
        Optimizer::Gd => {
            pixels.iter_mut().zip(&eval.grad).for_each(|(p, g)| *p -= lr * g);
        }
        Optimizer::Adam => {
            let moments =
                state.adam.get_or_insert_with(|| AdamMoments { m: vec![0.0; pixels.len()], v: vec![0.0; pixels.len()] });
            let k = (t + 1) as i32;
            let (c1, c2) = (1.0 - ADAM_BETA1.powi(k), 1.0 - ADAM_BETA2.powi(k));
            for i in 0..pixels.len() {
                let g = eval.grad[i];
                moments.m[i] = ADAM_BETA1 * moments.m[i] + (1.0 - ADAM_BETA1) * g;
                moments.v[i] = ADAM_BETA2 * moments.v[i] + (1.0 - ADAM_BETA2) * g * g;
                pixels[i] -= lr * (moments.m[i] / c1) / ((moments.v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
    state.image.set_pixels(&pixels);
    state.iterate += 1;
    state.loss_history.push(eval.report);
    state.lr_history.push(lr);
    state.effective_dim = ctx.effective_dim();
    state.prev_features = Some(eval.features);
    Ok(state)
}

/// One step: fresh augmentations, loss and gradient, update, clamp.
pub fn inversion_step(state: MorphState, cfg: &InversionConfig, problem: &Problem) -> Result<MorphState> {
    let ops = epoch_augmentations(cfg, problem.source().shape(), state.iterate);
    inversion_step_with(state, cfg, problem, ops)
}

/// Runs every epoch, recording the initial state, every `sample_every`-th
/// state and the final one.
pub fn run_problem(cfg: &InversionConfig, problem: &Problem) -> Result<MorphTrajectory> {
    cfg.validate()?;
    let mut state = MorphState::new(problem.source().clone());
    state.feature_trail.push(problem.source_feature().to_vec());
    let mut states = vec![state.clone()];
    for _ in 0..cfg.epochs {
        state = inversion_step(state, cfg, problem)?;
        if state.iterate % cfg.sample_every == 0 || state.iterate == cfg.epochs {
            let z = problem.image_encoder().encode(state.image.pixels()).map_err(|e| e.at_iterate(state.iterate))?;
            state.feature_trail.push(z);
            states.push(state.clone());
        }
    }
    Ok(MorphTrajectory {
        states,
        config: cfg.clone(),
        provenance: Provenance { seed: cfg.seed, config_hash: cfg.config_hash() },
    })
}

/// Builds the encoders and text direction from the seed, then runs.
pub fn run_inversion(
    cfg: &InversionConfig,
    source: &ImageTensor,
    prompt_src: &str,
    prompt_trg: &str,
) -> Result<MorphTrajectory> {
    cfg.validate()?;
    let enc = Encoders::new(cfg, source.shape());
    let dir = text_direction(&enc.text, prompt_src, prompt_trg)?;
    run_problem(cfg, &Problem::new(source.clone(), enc.image, dir)?)
}

/// Summary statistics of a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDiagnostics {
    pub initial_total: f64,
    pub final_total: f64,
    /// `cos(E(x_final) − E(x_s), Δz^T)` under the training encoder.
    pub final_alignment: f64,
    /// `d_M` between consecutive recorded states under the evaluation
    /// encoder.
    pub intra_dm: Vec<f64>,
    pub morphing_score: f64,
    /// Subspace dimension the evaluation metric actually used.
    pub eval_dim: usize,
}

impl RunDiagnostics {
    pub fn mean_intra_dm(&self) -> f64 {
        if self.intra_dm.is_empty() {
            return 1.0;
        }
        self.intra_dm.iter().sum::<f64>() / self.intra_dm.len() as f64
    }
}

/// Scores a trajectory with a held-out evaluation encoder and a fixed set
/// of evaluation augmentations shared by every recorded state.
pub fn diagnose(traj: &MorphTrajectory, problem: &Problem, eval_encoder: &ToyEncoder) -> Result<RunDiagnostics> {
    let cfg = &traj.config;
    let shape = problem.source().shape();
    let ops = sample_augmentations(derive_seed(cfg.seed, streams::EVAL_AUGMENT, 0), cfg.ensembles, shape);
    let batch = |img: &ImageTensor| -> Result<Matrix> {
        let rows = ops
            .iter()
            .map(|op| eval_encoder.encode(&op.apply_raw(shape, img.pixels())?))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(&rows)
    };
    let k = cfg.subspace_dim.min(eval_encoder.output_dim());
    let mut intra_dm = Vec::new();
    let mut eval_dim = k;
    let mut prev = batch(&traj.states[0].image)?;
    for s in &traj.states[1..] {
        let curr = batch(&s.image)?;
        let (p, c) = (extract_subspace(&prev, k)?, extract_subspace(&curr, k)?);
        eval_dim = eval_dim.min(p.sub_dim().min(c.sub_dim()));
        let q = guidance_between(&p, &c)?;
        intra_dm.push(d_metric(&q, &step::column_mean(&prev), &step::column_mean(&curr))?);
        prev = curr;
    }

    let last = traj.final_state();
    let z_final = problem.image_encoder().encode(last.image.pixels())?;
    let raw: Vec<f64> = z_final.iter().zip(problem.source_feature()).map(|(a, b)| a - b).collect();
    let final_alignment = if norm(&raw) < MIN_DIRECTION_NORM { 0.0 } else { cosine(&raw, problem.text_direction()) };
    let z_src_eval = eval_encoder.encode(problem.source().pixels())?;
    let z_final_eval = eval_encoder.encode(last.image.pixels())?;
    let history = &last.loss_history;
    Ok(RunDiagnostics {
        initial_total: history.first().map_or(f64::NAN, |r| r.total),
        final_total: history.last().map_or(f64::NAN, |r| r.total),
        final_alignment,
        intra_dm,
        morphing_score: morphing_score(&z_src_eval, &z_final_eval),
        eval_dim,
    })
}
