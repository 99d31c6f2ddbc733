use std::fs;
use std::path::Path;

use super::MorphTrajectory;
use crate::error::{Error, Result};
use crate::io::write_emb1;
use crate::linalg::Matrix;

pub const TRAJECTORY_HEADER: &str = "iterate,total,inter,intra,perceptual,lr";

/// Writes `config.kv`, `trajectory.csv`, one `frame_%06d.ppm` per recorded
/// state and `features.emb` (one row per recorded state).
pub fn write_trajectory(traj: &MorphTrajectory, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut kv = format!("# seed={}\n# config_hash={}\n", traj.provenance.seed, traj.provenance.config_hash);
    kv.push_str(&traj.config.to_kv());
    let path = dir.join("config.kv");
    fs::write(&path, kv).map_err(|e| Error::io(&path, e))?;

    let last = traj.final_state();
    let mut csv = format!("{TRAJECTORY_HEADER}\n");
    for (i, (r, lr)) in last.loss_history.iter().zip(&last.lr_history).enumerate() {
        csv.push_str(&format!("{i},{},{},{},{},{lr}\n", r.total, r.inter_term, r.intra_term, r.perceptual_term));
    }
    let path = dir.join("trajectory.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    for s in &traj.states {
        s.image.write_pnm(dir.join(format!("frame_{:06}.ppm", s.iterate)))?;
    }
    let features = Matrix::from_rows(&last.feature_trail)?;
    write_emb1(dir.join("features.emb"), &features)
}
