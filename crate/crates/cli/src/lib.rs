//! `ctlab` command-line driver: loads the run configuration, runs one
//! experiment and writes its results with a manifest.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plotdata;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ctlab::experiments::{output, run_biterr, run_density_sweep, run_per_sweep};
use ctlab::floodsim::{self, LinkTable};

use config::{Config, DEFAULT_OUT_DIR, OUT_DIR_ENV};
use error::{CliError, EXIT_OK};
use manifest::{OutputFile, RunManifest, MANIFEST_FILE};

pub const EFFECTIVE_CONFIG_FILE: &str = "config.effective.toml";

#[derive(Debug, Parser)]
#[command(name = "ctlab", version, about = "Concurrent-transmission PHY and flooding simulator")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trials per point (messages per run for `flood`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output directory [default: $CTLAB_OUT_DIR, then ./ctlab-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a config key, e.g. `--set per_sweep.snr_db=[10,20]`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PER against SNR for single and concurrent transmitters.
    PerSweep,
    /// Per-bit error histogram and beating-frequency estimate.
    Biterr,
    /// Reliability against the number of concurrent transmitters.
    Density,
    /// Glossy / RoF / RoF-SC floods over a topology under interference.
    Flood,
    /// Turn a result JSON into two-column `.dat` series.
    Plotdata {
        /// A `ctlab.*.v1` result JSON file.
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PerSweep => "per-sweep",
            Command::Biterr => "biterr",
            Command::Density => "density",
            Command::Flood => "flood",
            Command::Plotdata { .. } => "plotdata",
        }
    }

    fn default_trials(&self) -> usize {
        match self {
            Command::PerSweep => 2000,
            Command::Biterr => 5000,
            Command::Density => 1000,
            Command::Flood => 100,
            Command::Plotdata { .. } => 0,
        }
    }
}

/// Builds the effective configuration: defaults, then the config file, then
/// `--set` overrides, then dedicated flags.
pub fn effective_config(cli: &Cli) -> Result<Config, CliError> {
    let mut table = match &cli.config {
        Some(p) => config::load_table(p)?,
        None => toml::Table::new(),
    };
    for o in &cli.overrides {
        let (path, value) = config::parse_override(o)?;
        config::apply_override(&mut table, &path, value)?;
    }
    let mut cfg = config::from_table(table)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = Some(t);
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    if cfg.trials.is_none() {
        cfg.trials = Some(cli.command.default_trials());
    }
    if cfg.out_dir.is_none() {
        cfg.out_dir = Some(
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        );
    }
    Ok(cfg)
}

struct Writer {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        self.files.push(manifest::describe(name, contents.as_bytes()));
        Ok(())
    }
}

fn install_thread_pool(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("ctlab: {e}");
            e.exit_code()
        }
    }
}

/// Runs the command and returns the paths written.
pub fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = effective_config(cli)?;
    install_thread_pool(cfg.threads)?;
    let started_at = manifest::now();
    let trials = cfg.trials.expect("resolved above");
    let dir = cfg.out_dir.clone().expect("resolved above");
    let mut w = Writer::new(&dir)?;
    let core = |section: &'static str| move |e: ctlab::Error| CliError::from_core(section, e);

    match &cli.command {
        Command::PerSweep => {
            let r = run_per_sweep(&cfg.per_sweep, &cfg.modem, trials, cfg.seed).map_err(core("per_sweep"))?;
            w.write("per_sweep.csv", &output::sweep_csv(&r))?;
            w.write("per_sweep.json", &output::to_json(&r))?;
        }
        Command::Biterr => {
            cfg.modem.validate().map_err(core("modem"))?;
            let r = run_biterr(&cfg.biterr, &cfg.modem, trials, cfg.seed).map_err(core("biterr"))?;
            w.write("biterr.csv", &output::biterr_csv(&r))?;
            w.write("biterr.json", &output::to_json(&r))?;
        }
        Command::Density => {
            cfg.modem.validate().map_err(core("modem"))?;
            let r = run_density_sweep(&cfg.density, &cfg.modem, trials, cfg.seed).map_err(core("density"))?;
            w.write("density.csv", &output::sweep_csv(&r))?;
            w.write("density.json", &output::to_json(&r))?;
        }
        Command::Flood => {
            let base = cli.config.as_deref().and_then(Path::parent);
            let topology = cfg.topology.build(base)?;
            let r = floodsim::run_flood_grid(&cfg.flood, &topology, LinkTable::embedded(), trials, cfg.seed)
                .map_err(core("flood"))?;
            w.write("flood.csv", &floodsim::flood_csv(&r))?;
            w.write("flood.json", &output::to_json(&r))?;
        }
        Command::Plotdata { input } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| CliError::config("input", format!("{}: {e}", input.display())))?;
            for (name, body) in plotdata::emit(&text)? {
                w.write(&name, &body)?;
            }
        }
    }
    w.write(EFFECTIVE_CONFIG_FILE, &config::to_toml(&cfg))?;
    let m = RunManifest {
        tool: "ctlab".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        config_hash: manifest::config_hash(&cfg),
        seed: cfg.seed,
        threads: cfg.threads,
        started_at,
        finished_at: manifest::now(),
        outputs: w.files.clone(),
    };
    let body = serde_json::to_string_pretty(&m).expect("manifest serialises") + "\n";
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, body).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    let mut written: Vec<String> = w.files.iter().map(|f| dir.join(&f.path).display().to_string()).collect();
    written.push(path.display().to_string());
    Ok(written)
}
