//! TOML run configuration, `--set` overrides and effective-config dumps.

use std::path::{Path, PathBuf};

use ctlab::experiments::{BiterrConfig, DensityConfig, SweepGrid};
use ctlab::floodsim::{FloodGrid, Topology};
use ctlab::modem::ModemConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const OUT_DIR_ENV: &str = "CTLAB_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ctlab-out";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Trials per point (messages per run for `flood`). Unset picks the
    /// subcommand's default.
    pub trials: Option<usize>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
    pub modem: ModemConfig,
    pub per_sweep: SweepGrid,
    pub biterr: BiterrConfig,
    pub density: DensityConfig,
    pub flood: FloodGrid,
    pub topology: TopologySpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            trials: None,
            threads: 0,
            out_dir: None,
            modem: ModemConfig::default(),
            per_sweep: SweepGrid::default(),
            biterr: BiterrConfig::default(),
            density: DensityConfig::default(),
            flood: FloodGrid::default(),
            topology: TopologySpec::default(),
        }
    }
}

/// Where the flood topology comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    /// 3 x 9 grid with diagonals, 8 hops across.
    #[default]
    Reference,
    Single,
    Line {
        nodes: usize,
        quality_db: f64,
    },
    Grid {
        rows: usize,
        cols: usize,
        quality_db: f64,
        diagonal_db: f64,
        jitter_db: f64,
        seed: u64,
    },
    RandomGeometric {
        nodes: usize,
        radius: f64,
        q_max_db: f64,
        q_min_db: f64,
        destinations: usize,
        seed: u64,
    },
    /// Link-table file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
}

impl TopologySpec {
    pub fn build(&self, base: Option<&Path>) -> Result<Topology, CliError> {
        let t = match self {
            TopologySpec::Reference => Topology::reference(),
            TopologySpec::Single => Topology::single(),
            TopologySpec::Line { nodes, quality_db } => {
                if *nodes == 0 {
                    return Err(CliError::config("topology.nodes", "must be at least 1"));
                }
                Topology::line(*nodes, *quality_db)
            }
            TopologySpec::Grid {
                rows,
                cols,
                quality_db,
                diagonal_db,
                jitter_db,
                seed,
            } => {
                if *rows == 0 || *cols < 2 {
                    return Err(CliError::config("topology.cols", "grid needs at least 1 row and 2 columns"));
                }
                Topology::grid(*rows, *cols, *quality_db, *diagonal_db, *jitter_db, *seed)
            }
            TopologySpec::RandomGeometric {
                nodes,
                radius,
                q_max_db,
                q_min_db,
                destinations,
                seed,
            } => Topology::random_geometric(*nodes, *radius, *q_max_db, *q_min_db, *destinations, *seed),
            TopologySpec::File { path } => {
                let full = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::config("topology.path", format!("{}: {e}", full.display())))?;
                Topology::parse(&text).map_err(|e| CliError::config("topology.path", format!("{}: {e}", full.display())))?
            }
        };
        t.validate().map_err(|e| CliError::config("topology", e.to_string()))?;
        Ok(t)
    }
}

/// Parses a `--set key.path=value` argument. The value is read as a TOML
/// value, falling back to a bare string.
pub fn parse_override(arg: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::config(arg, "override must look like key.path=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|s| s.is_empty()) {
        return Err(CliError::config(key, "empty key segment"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

pub fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for (i, seg) in parents.iter().enumerate() {
        let entry = cur
            .entry(seg.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(&path[..=i].join("."), "is not a table"))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Deserialises a TOML table, reporting the key path of the first bad value.
pub fn from_table(table: toml::Table) -> Result<Config, CliError> {
    let value = toml::Value::Table(table);
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::config(if path == "." { "config" } else { &path }, inner.to_string().trim())
    })
}

pub fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {}", path.display(), e.to_string().trim())))
}

pub fn to_toml(cfg: &Config) -> String {
    toml::to_string(cfg).expect("config serialises to TOML")
}
