use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the compact JSON form of the run configuration.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` (plus its metadata sidecar), or to stdout when no
/// path is given.
pub fn emit(out: Option<&Path>, body: &str, config: &Value, extra: Value) -> Result<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            let meta = json!({
                "tool": "symq",
                "version": VERSION,
                "config_hash": config_hash(config),
                "config": config,
                "output": extra,
            });
            let side = sidecar_path(path);
            fs::write(&side, serde_json::to_string_pretty(&meta)? + "\n")
                .with_context(|| format!("writing {}", side.display()))?;
        }
    }
    Ok(())
}
