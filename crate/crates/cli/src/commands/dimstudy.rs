use rayon::prelude::*;

use geoguide::inversion::{diagnose, run_problem, synthetic_source, Encoders, Problem};
use geoguide::{text_direction, ImageShape, InversionConfig};

use crate::args::DimstudyArgs;
use crate::config::{create_dir, resolve, write_text};
use crate::error::{CliError, CliResult};
use crate::stats::{mean, median, std_dev};

pub const DIMSTUDY_HEADER: &str = "dim_requested,dim_used,eval_dim,note,seeds,final_total_median,final_total_mean,\
final_total_std,morph_median,dm_median,dm_mean,config_hash";

#[derive(Clone, Debug, PartialEq)]
pub struct DimRow {
    pub dim_requested: usize,
    /// Smallest intra-modality subspace dimension used in a final step.
    pub dim_used: usize,
    pub eval_dim: usize,
    /// Empty unless the request was clamped to D or capped by rank.
    pub note: String,
    pub seeds: usize,
    pub final_total_median: f64,
    pub final_total_mean: f64,
    pub final_total_std: f64,
    pub morph_median: f64,
    pub dm_median: f64,
    pub dm_mean: f64,
    pub config_hash: String,
}

struct SeedResult {
    final_total: f64,
    morph: f64,
    dm: f64,
    dim_used: usize,
    eval_dim: usize,
}

fn run_seed(cfg: &InversionConfig, shape: ImageShape, prompts: (&str, &str)) -> CliResult<SeedResult> {
    let enc = Encoders::new(cfg, shape);
    let dir = text_direction(&enc.text, prompts.0, prompts.1)?;
    let problem = Problem::new(synthetic_source(cfg.seed, shape), enc.image, dir)?;
    let traj = run_problem(cfg, &problem)?;
    let diag = diagnose(&traj, &problem, &enc.eval)?;
    Ok(SeedResult {
        final_total: diag.final_total,
        morph: diag.morphing_score,
        dm: diag.mean_intra_dm(),
        dim_used: traj.final_state().effective_dim,
        eval_dim: diag.eval_dim,
    })
}

/// One row per requested dimension, each aggregated over `seeds`
/// consecutive seeds starting at `base.seed`.
pub fn run_dimstudy(
    base: &InversionConfig,
    dims: &[usize],
    seeds: usize,
    shape: ImageShape,
    prompts: (&str, &str),
) -> CliResult<Vec<DimRow>> {
    if dims.is_empty() || seeds == 0 || dims.contains(&0) {
        return Err(CliError::Usage("--dims must be positive and --seeds at least 1".into()));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut cfg = base.clone();
        cfg.subspace_dim = dim.min(cfg.embed_dim);
        let results: Vec<SeedResult> = (0..seeds as u64)
            .into_par_iter()
            .map(|i| run_seed(&InversionConfig { seed: base.seed + i, ..cfg.clone() }, shape, prompts))
            .collect::<CliResult<_>>()?;
        let pick = |f: fn(&SeedResult) -> f64| results.iter().map(f).collect::<Vec<f64>>();
        let totals = pick(|r| r.final_total);
        let dms = pick(|r| r.dm);
        let dim_used = results.iter().map(|r| r.dim_used).min().unwrap_or(0);
        let mut notes = Vec::new();
        if dim > base.embed_dim {
            notes.push(format!("clamped to D={}", base.embed_dim));
            eprintln!("warning: subspace dimension {dim} exceeds D={}; clamped", base.embed_dim);
        }
        if dim_used < cfg.subspace_dim {
            notes.push(format!("rank-capped to {dim_used}"));
        }
        rows.push(DimRow {
            dim_requested: dim,
            dim_used,
            eval_dim: results.iter().map(|r| r.eval_dim).min().unwrap_or(0),
            note: notes.join("; "),
            seeds,
            final_total_median: median(&totals),
            final_total_mean: mean(&totals),
            final_total_std: std_dev(&totals),
            morph_median: median(&pick(|r| r.morph)),
            dm_median: median(&dms),
            dm_mean: mean(&dms),
            config_hash: cfg.config_hash(),
        });
    }
    Ok(rows)
}

pub fn dimstudy_csv(rows: &[DimRow]) -> String {
    let mut out = format!("{DIMSTUDY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.dim_requested,
            r.dim_used,
            r.eval_dim,
            r.note,
            r.seeds,
            r.final_total_median,
            r.final_total_mean,
            r.final_total_std,
            r.morph_median,
            r.dm_median,
            r.dm_mean,
            r.config_hash
        ));
    }
    out
}

pub fn cmd_dimstudy(a: &DimstudyArgs) -> CliResult<Vec<DimRow>> {
    let cfg = resolve(&a.run)?;
    if a.size == 0 {
        return Err(CliError::Usage("--size must be positive".into()));
    }
    let shape = ImageShape::new(a.size, a.size, 3);
    let rows = run_dimstudy(&cfg, &a.dims, a.seeds, shape, (&a.src_prompt, &a.trg_prompt))?;
    create_dir(&a.out)?;
    let dims: Vec<String> = a.dims.iter().map(usize::to_string).collect();
    let kv = format!(
        "# dims={}\n# seeds={}\n# size={}\n# src_prompt={}\n# trg_prompt={}\n{}",
        dims.join(","),
        a.seeds,
        a.size,
        a.src_prompt,
        a.trg_prompt,
        cfg.to_kv()
    );
    write_text(&a.out.join("config.kv"), &kv)?;
    let csv = dimstudy_csv(&rows);
    write_text(&a.out.join("dimstudy.csv"), &csv)?;
    print!("{csv}");
    Ok(rows)
}
