use std::path::Path;

use geoguide::grassmann::guidance_between;
use geoguide::linalg::Matrix;
use geoguide::metrics::{d_metric, modality_gap, morphing_score, psnr, ssim};
use geoguide::{extract_subspace, Error, ImageTensor, MetricKind, ScoreRow, ScoreTable};

use crate::args::ScoreArgs;
use crate::config::{read_matrix, write_text};
use crate::error::{CliError, CliResult};

fn column_mean(m: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        mean.iter_mut().zip(m.row(i)).for_each(|(acc, v)| *acc += v);
    }
    mean.iter_mut().for_each(|v| *v /= m.rows() as f64);
    mean
}

fn two<'a>(inputs: &'a [std::path::PathBuf], mode: MetricKind) -> CliResult<(&'a Path, &'a Path)> {
    match inputs {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Usage(format!("--mode {mode} takes exactly two inputs, got {}", inputs.len()))),
    }
}

fn same_shape(a: &Matrix, b: &Matrix) -> CliResult<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("feature shapes {:?} and {:?}", a.shape(), b.shape())).into());
    }
    Ok(())
}

pub fn score_table(a: &ScoreArgs) -> CliResult<ScoreTable> {
    let label = a.label.clone().unwrap_or_else(|| a.mode.to_string());
    let mut table = ScoreTable::new(a.mode);
    match a.mode {
        MetricKind::Psnr | MetricKind::Ssim => {
            if a.inputs.len() % 2 != 0 {
                return Err(CliError::Usage(format!("--mode {} takes image pairs, got {} inputs", a.mode, a.inputs.len())));
            }
            let mut samples = Vec::new();
            for pair in a.inputs.chunks(2) {
                let (x, y) = (ImageTensor::read_pnm(&pair[0])?, ImageTensor::read_pnm(&pair[1])?);
                samples.push(if a.mode == MetricKind::Psnr { psnr(&x, &y, a.peak)? } else { ssim(&x, &y)? });
            }
            table.push(ScoreRow::from_samples(label, &samples)?);
        }
        MetricKind::Morph => {
            let (pa, pb) = two(&a.inputs, a.mode)?;
            let (x, y) = (read_matrix(pa)?, read_matrix(pb)?);
            same_shape(&x, &y)?;
            let samples: Vec<f64> = (0..x.rows()).map(|i| morphing_score(x.row(i), y.row(i))).collect();
            table.push(ScoreRow::from_samples(label, &samples)?);
        }
        MetricKind::DMetric => {
            let (pa, pb) = two(&a.inputs, a.mode)?;
            let (x, y) = (read_matrix(pa)?, read_matrix(pb)?);
            if x.cols() != y.cols() {
                return Err(Error::DimensionMismatch(format!("{} vs {} columns", x.cols(), y.cols())).into());
            }
            let k = a.subspace_dim.clamp(1, x.cols());
            let q = guidance_between(&extract_subspace(&x, k)?, &extract_subspace(&y, k)?)?;
            table.push(ScoreRow::from_samples(label, &[d_metric(&q, &column_mean(&x), &column_mean(&y))?])?);
        }
        MetricKind::Gap => {
            let (pa, pb) = two(&a.inputs, a.mode)?;
            let (img, txt) = (read_matrix(pa)?, read_matrix(pb)?);
            let gap = modality_gap(&img, &txt)?;
            table.push(ScoreRow::from_samples("gap_norm", &[gap.gap_norm])?);
            let n = img.rows().min(txt.rows());
            for &c in &a.coeffs {
                let g = gap.with_coeff(c);
                let samples: Vec<f64> = (0..n).map(|i| g.modulated_score(img.row(i), txt.row(i))).collect();
                table.push(ScoreRow::from_samples(format!("c={c}"), &samples)?);
            }
        }
        MetricKind::External => {
            let [path] = a.inputs.as_slice() else {
                return Err(CliError::Usage("--mode external takes one label,mean,std,n table".into()));
            };
            table = ScoreTable::read_csv(path, MetricKind::External)?;
        }
    }
    Ok(table)
}

pub fn cmd_score(a: &ScoreArgs) -> CliResult<ScoreTable> {
    let table = score_table(a)?;
    let csv = table.to_csv();
    if let Some(out) = &a.out {
        write_text(out, &csv)?;
    }
    print!("{csv}");
    Ok(table)
}
