//! Run manifest: what produced a set of output files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the effective config as key-sorted compact JSON.
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Independent of key order in the source file: the config is re-serialised
/// through `serde_json::Value`, whose maps are sorted.
/// Hash of the settings that shape results; `out_dir` and `threads` are left out.
pub fn config_hash(cfg: &Config) -> String {
    let cfg = Config {
        out_dir: None,
        threads: 0,
        ..cfg.clone()
    };
    let value = serde_json::to_value(&cfg).expect("config serialises");
    sha256_hex(value.to_string().as_bytes())
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn describe(name: &str, contents: &[u8]) -> OutputFile {
    OutputFile {
        path: name.to_string(),
        bytes: contents.len() as u64,
        sha256: sha256_hex(contents),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::from_table;

    #[test]
    fn hash_ignores_key_order() {
        let a = from_table(toml::from_str("seed = 3\n[biterr]\nrfo_hz = 500.0\nsnr_db = 20.0\n").unwrap()).unwrap();
        let b = from_table(toml::from_str("[biterr]\nsnr_db = 20.0\nrfo_hz = 500.0\n\n[modem]\n").unwrap()).unwrap();
        let b = Config { seed: 3, ..b };
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&Config::default()));
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
