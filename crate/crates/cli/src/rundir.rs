//! Run directories: `<root>/<command>-<hash>[-k]`, where the hash covers the
//! command and the effective configuration. Only `metadata.json` carries a
//! timestamp.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nls_lab::io;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::Failure;

pub const OUT_ENV: &str = "NLS_LAB_OUT";

pub fn config_hash(command: &str, cfg: &ExperimentConfig) -> Result<String, Failure> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(io::to_json_string(cfg)?.as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// `--out`, then `run.out_dir`, then `$NLS_LAB_OUT`, then `./runs`.
pub fn output_root(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.run.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    config_sha256: &'a str,
    created_unix_seconds: u64,
    version: &'a str,
}

/// Creates a fresh directory for this run and writes `config.json` and
/// `metadata.json` into it. Existing runs are never reused.
pub fn create(root: &Path, command: &str, cfg: &ExperimentConfig) -> Result<PathBuf, Failure> {
    let hash = config_hash(command, cfg)?;
    fs::create_dir_all(root).map_err(|e| Failure::Config(format!("output root {}: {e}", root.display())))?;
    let stem = format!("{command}-{}", &hash[..16]);
    let mut k = 0;
    let dir = loop {
        let name = if k == 0 { stem.clone() } else { format!("{stem}-{k}") };
        let candidate = root.join(name);
        match fs::create_dir(&candidate) {
            Ok(()) => break candidate,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => k += 1,
            Err(e) => return Err(Failure::Config(format!("output root {}: {e}", root.display()))),
        }
    };
    fs::write(dir.join("config.json"), io::to_json_string(cfg)? + "\n")?;
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = Metadata {
        command,
        config_sha256: &hash,
        created_unix_seconds: created,
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reruns_get_fresh_directories() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let a = create(tmp.path(), "verify", &cfg).unwrap();
        let b = create(tmp.path(), "verify", &cfg).unwrap();
        let c = create(tmp.path(), "solve", &cfg).unwrap();
        assert_ne!(a, b);
        assert!(b.file_name().unwrap().to_str().unwrap().ends_with("-1"));
        assert_ne!(a.file_name(), c.file_name());
        assert_eq!(fs::read(a.join("config.json")).unwrap(), fs::read(b.join("config.json")).unwrap());
    }

    #[test]
    fn hash_tracks_the_config() {
        let mut cfg = ExperimentConfig::default();
        let before = config_hash("verify", &cfg).unwrap();
        assert_eq!(before, config_hash("verify", &cfg).unwrap());
        cfg.run.seed = Some(3);
        assert_ne!(before, config_hash("verify", &cfg).unwrap());
    }
}
