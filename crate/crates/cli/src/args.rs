use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use geoguide::{LossMode, MetricKind, Optimizer, Schedule, SphericalMode};

#[derive(Debug, Parser)]
#[command(name = "geoguide", version, about = "Geodesic-flow guidance for embedding-space morphing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geodesic flow between the PCA subspaces of two feature batches.
    Flow(FlowArgs),
    /// Ensemble pixel-space inversion toward a prompt direction.
    Invert(InvertArgs),
    /// Score images or features and write a label,mean,std,n table.
    Score(ScoreArgs),
    /// Time subspace extraction, flow construction and Q over (N, d).
    Bench(BenchArgs),
    /// Run inversions across subspace dimensions and aggregate scores.
    Dimstudy(DimstudyArgs),
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub dst: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub subspace_dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub nu: Vec<f64>,
    /// Trapezoid nodes for the quadrature residual.
    #[arg(long, default_value_t = 10_000)]
    pub nodes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Run settings shared by `invert` and `dimstudy`. Unset flags fall back to
/// the `--config` file, then to the built-in defaults.
#[derive(Debug, Args, Default, Clone)]
pub struct RunArgs {
    /// Flat key=value file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub loss: Option<LossMode>,
    #[arg(long)]
    pub spherical: Option<SphericalMode>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub ensembles: Option<usize>,
    #[arg(long)]
    pub subspace_dim: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub schedule: Option<Schedule>,
    #[arg(long)]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Summed-feature direction `E(x_ens) − N·E(x_s)`.
    #[arg(long)]
    pub literal: Option<bool>,
    #[arg(long)]
    pub perceptual: Option<bool>,
    #[arg(long)]
    pub sample_every: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub text_dim: Option<usize>,
}

impl RunArgs {
    /// Explicitly given flags as config key/value pairs.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($($field:ident => $key:literal),+ $(,)?) => {
                $(if let Some(v) = &self.$field { out.push(($key, v.to_string())); })+
            };
        }
        push!(
            epochs => "epochs",
            lr => "learning_rate",
            ensembles => "ensembles",
            subspace_dim => "subspace_dim",
            loss => "loss",
            spherical => "spherical",
            lambda1 => "lambda1",
            lambda2 => "lambda2",
            seed => "seed",
            schedule => "schedule",
            optimizer => "optimizer",
            literal => "literal",
            perceptual => "perceptual",
            sample_every => "sample_every",
            embed_dim => "embed_dim",
            text_dim => "text_dim",
        );
        out
    }
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Source image (PPM/PGM). Without it a synthetic image is generated
    /// from the seed.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Side of the synthetic source image.
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long, default_value = "photo")]
    pub src_prompt: String,
    #[arg(long, default_value = "sketch")]
    pub trg_prompt: String,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub mode: MetricKind,
    /// psnr/ssim: image pairs; morph/dm/gap: two feature matrices (EMB1 or
    /// CSV); external: one label,mean,std,n table.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    /// Subspace dimension for `dm`.
    #[arg(long, default_value_t = 8)]
    pub subspace_dim: usize,
    /// Modulation coefficients swept by `gap`.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub coeffs: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub batches: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DimstudyArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    pub dims: Vec<usize>,
    /// Number of seeds, starting at the configured seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long, default_value = "photo")]
    pub src_prompt: String,
    #[arg(long, default_value = "sketch")]
    pub trg_prompt: String,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub out: PathBuf,
}
