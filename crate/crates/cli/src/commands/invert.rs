use std::fs::OpenOptions;
use std::io::Write;

use geoguide::inversion::{synthetic_source, write_trajectory};
use geoguide::{run_inversion, ImageShape, ImageTensor, MorphTrajectory};

use crate::args::InvertArgs;
use crate::config::resolve;
use crate::error::{CliError, CliResult};

pub fn cmd_invert(a: &InvertArgs) -> CliResult<MorphTrajectory> {
    let cfg = resolve(&a.run)?;
    let (source, origin) = match &a.source {
        Some(path) => (ImageTensor::read_pnm(path)?, path.display().to_string()),
        None => {
            if a.size == 0 {
                return Err(CliError::Usage("--size must be positive".into()));
            }
            (synthetic_source(cfg.seed, ImageShape::new(a.size, a.size, 3)), format!("synthetic:{}", a.size))
        }
    };
    let traj = run_inversion(&cfg, &source, &a.src_prompt, &a.trg_prompt)?;
    write_trajectory(&traj, &a.out)?;

    let kv_path = a.out.join("config.kv");
    let mut kv = OpenOptions::new().append(true).open(&kv_path).map_err(|e| CliError::io(&kv_path, e))?;
    writeln!(kv, "# source={origin}\n# src_prompt={}\n# trg_prompt={}", a.src_prompt, a.trg_prompt)
        .map_err(|e| CliError::io(&kv_path, e))?;

    let last = traj.final_state();
    if let (Some(r), Some(lr)) = (last.loss_history.last(), last.lr_history.last()) {
        println!(
            "final iterate={} total={:.6} inter={:.6} intra={:.6} perceptual={:.6} lr={:e}",
            last.iterate, r.total, r.inter_term, r.intra_term, r.perceptual_term, lr
        );
    }
    Ok(traj)
}
