use std::fs;
use std::path::Path;

use geoguide::io::{read_csv, read_emb1};
use geoguide::{InversionConfig, Matrix};

use crate::args::RunArgs;
use crate::error::{CliError, CliResult};

/// Defaults, then the `--config` file, then explicit flags.
pub fn resolve(run: &RunArgs) -> CliResult<InversionConfig> {
    let mut cfg = InversionConfig::default();
    if let Some(path) = &run.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let unknown = cfg.merge_kv(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some((k, _)) = unknown.first() {
            return Err(CliError::Usage(format!("{}: unknown key {k:?}", path.display())));
        }
    }
    for (k, v) in run.overrides() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// EMB1 for `.emb` files, CSV otherwise.
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let m = match path.extension().and_then(|e| e.to_str()) {
        Some("emb") => read_emb1(path)?,
        _ => read_csv(path)?,
    };
    Ok(m)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
