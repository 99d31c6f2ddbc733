//! Evaluation metrics: morphing score, PSNR, SSIM, the subspace metric
//! distance, and modality-gap measurement.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grassmann::{geodesic_cosine, GuidanceMetric};
use crate::image::ImageTensor;
use crate::linalg::{cosine, norm, EmbeddingBatch};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Side length of the square SSIM window.
pub const SSIM_WINDOW: usize = 8;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// `100·(1 − cos(z_src, z_trg))`, in [0, 200].
pub fn morphing_score(z_src: &[f64], z_trg: &[f64]) -> f64 {
    100.0 * (1.0 - cosine(z_src, z_trg).clamp(-1.0, 1.0))
}

fn same_shape(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    same_shape(a, b)?;
    let n = a.pixels().len() as f64;
    Ok(a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n)
}

/// `10·log₁₀(peak²/MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(a: &ImageTensor, b: &ImageTensor, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (peak * peak / m).log10()).min(PSNR_CAP))
}

/// Mean SSIM over all 8×8 windows (stride 1) and channels, peak 1, uniform
/// window weights and population (1/n) moments.
pub fn ssim(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    Ok(ssim_impl(a, b, false)?.0)
}

/// SSIM and its gradient with respect to the pixels of `a`.
pub fn ssim_with_grad(a: &ImageTensor, b: &ImageTensor) -> Result<(f64, Vec<f64>)> {
    ssim_impl(a, b, true)
}

fn ssim_impl(a: &ImageTensor, b: &ImageTensor, want_grad: bool) -> Result<(f64, Vec<f64>)> {
    same_shape(a, b)?;
    let shape = a.shape();
    let side = shape.height.min(shape.width);
    if side < SSIM_WINDOW {
        return Err(Error::TooSmall(side, SSIM_WINDOW));
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let wy = shape.height - SSIM_WINDOW + 1;
    let wx = shape.width - SSIM_WINDOW + 1;
    let windows = (wy * wx * shape.channels) as f64;
    let (pa, pb) = (a.pixels(), b.pixels());
    let mut total = 0.0;
    let mut grad = if want_grad { vec![0.0; pa.len()] } else { Vec::new() };

    for c in 0..shape.channels {
        for y0 in 0..wy {
            for x0 in 0..wx {
                let idx = |dy: usize, dx: usize| shape.index(y0 + dy, x0 + dx, c);
                let (mut sa, mut sb) = (0.0, 0.0);
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
                        sa += pa[idx(dy, dx)];
                        sb += pb[idx(dy, dx)];
                    }
                }
                let (mu_a, mu_b) = (sa / n, sb / n);
                let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
                        let da = pa[idx(dy, dx)] - mu_a;
                        let db = pb[idx(dy, dx)] - mu_b;
                        vaa += da * da;
                        vbb += db * db;
                        vab += da * db;
                    }
                }
                let (vaa, vbb, vab) = (vaa / n, vbb / n, vab / n);
                let a1 = 2.0 * mu_a * mu_b + c1;
                let a2 = 2.0 * vab + c2;
                let b1 = mu_a * mu_a + mu_b * mu_b + c1;
                let b2 = vaa + vbb + c2;
                let s = (a1 * a2) / (b1 * b2);
                total += s;
                if want_grad {
                    // ∂s/∂a_p = [2μ_b·A2 + 2A1(b_p − μ_b)]/(n·B1·B2) − s·[2μ_a/B1 + 2(a_p − μ_a)/B2]/n
                    let denom = n * b1 * b2;
                    for dy in 0..SSIM_WINDOW {
                        for dx in 0..SSIM_WINDOW {
                            let p = idx(dy, dx);
                            let g = (2.0 * mu_b * a2 + 2.0 * a1 * (pb[p] - mu_b)) / denom
                                - s * (2.0 * mu_a / b1 + 2.0 * (pa[p] - mu_a) / b2) / n;
                            grad[p] += g / windows;
                        }
                    }
                }
            }
        }
    }
    Ok((total / windows, grad))
}

/// Subspace-aware similarity mapped onto [0, 1]: `(1 + Q-cos)/2`.
pub fn d_metric(q: &GuidanceMetric, z_a: &[f64], z_b: &[f64]) -> Result<f64> {
    Ok(((1.0 + geodesic_cosine(q, z_a, z_b)?) / 2.0).clamp(0.0, 1.0))
}

/// Offset between the image-feature and text-feature clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub gap_vector: Vec<f64>,
    pub gap_norm: f64,
    pub modulation_coeff: f64,
}

impl GapReport {
    pub fn with_coeff(&self, c: f64) -> GapReport {
        GapReport { modulation_coeff: c, ..self.clone() }
    }

    /// `cos(z_img − c·gap, z_text)`.
    pub fn modulated_score(&self, z_img: &[f64], z_text: &[f64]) -> f64 {
        let shifted: Vec<f64> =
            z_img.iter().zip(&self.gap_vector).map(|(z, g)| z - self.modulation_coeff * g).collect();
        cosine(&shifted, z_text)
    }
}

fn column_means(m: &EmbeddingBatch) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (acc, v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    let n = m.rows() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// Mean image feature minus mean text feature; modulation starts at 0.
pub fn modality_gap(image_feats: &EmbeddingBatch, text_feats: &EmbeddingBatch) -> Result<GapReport> {
    if image_feats.rows() == 0 || text_feats.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    if image_feats.cols() != text_feats.cols() {
        return Err(Error::DimensionMismatch(format!(
            "image features are {}-dimensional, text features {}",
            image_feats.cols(),
            text_feats.cols()
        )));
    }
    let gap_vector: Vec<f64> =
        column_means(image_feats).iter().zip(column_means(text_feats)).map(|(a, b)| a - b).collect();
    let gap_norm = norm(&gap_vector);
    Ok(GapReport { gap_vector, gap_norm, modulation_coeff: 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Morph,
    Psnr,
    Ssim,
    DMetric,
    Gap,
    /// Values produced elsewhere (e.g. LPIPS) and imported from CSV.
    External,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Morph => "morph",
            MetricKind::Psnr => "psnr",
            MetricKind::Ssim => "ssim",
            MetricKind::DMetric => "dm",
            MetricKind::Gap => "gap",
            MetricKind::External => "external",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "morph" => MetricKind::Morph,
            "psnr" => MetricKind::Psnr,
            "ssim" => MetricKind::Ssim,
            "dm" => MetricKind::DMetric,
            "gap" => MetricKind::Gap,
            "external" | "lpips" => MetricKind::External,
            other => return Err(Error::InvalidConfig(format!("unknown metric kind {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl ScoreRow {
    /// Mean and sample standard deviation (0 for a single sample).
    pub fn from_samples(label: impl Into<String>, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { label: label.into(), mean, std, n })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub kind: MetricKind,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub const HEADER: &'static str = "label,mean,std,n";

    pub fn new(kind: MetricKind) -> Self {
        Self { kind, rows: Vec::new() }
    }

    pub fn push(&mut self, row: ScoreRow) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.label, r.mean, r.std, r.n));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Reads a `label,mean,std,n` table, e.g. externally computed LPIPS.
    pub fn read_csv(path: impl AsRef<Path>, kind: MetricKind) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == Self::HEADER => {}
            _ => return Err(parse_err(1, format!("expected header {:?}", Self::HEADER))),
        }
        let mut table = Self::new(kind);
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::RaggedRows { path: path.to_path_buf(), line: i + 1, expected: 4, found: fields.len() });
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| parse_err(i + 1, e.to_string()));
            let n = fields[3].trim().parse::<usize>().map_err(|e| parse_err(i + 1, e.to_string()))?;
            let row = ScoreRow { label: fields[0].to_string(), mean: num(fields[1])?, std: num(fields[2])?, n };
            if !(row.std >= 0.0) || n == 0 || !row.mean.is_finite() {
                return Err(parse_err(i + 1, "row violates std ≥ 0, n ≥ 1, finite mean".into()));
            }
            table.push(row);
        }
        Ok(table)
    }
}
