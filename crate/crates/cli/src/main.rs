//! `raman-sim`: shaped-pump two-mode Raman simulator front end.
//!
//! Exit codes: 0 success, 1 validation or physics failure, 2 usage/config
//! error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::AppConfig;
use manifest::{RunManifest, MANIFEST_NAME};

#[derive(Parser)]
#[command(
    name = "raman-sim",
    version,
    about = "Two-mode stimulated Raman scattering: shaped pumps, Monte Carlo scans, learning control"
)]
struct Cli {
    /// Flat key=value config file (dotted keys, e.g. sim.alpha=7).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override both sim.rng_seed and ga.rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism (default 1: sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: $RAMAN_SIM_OUT or the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Generic config override, repeatable: --set sim.alpha=3
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct PulseArgs {
    /// Relative phase of the second spectral lobe (rad).
    #[arg(long)]
    phi: Option<f64>,
    /// Lobe FWHM (THz).
    #[arg(long)]
    width: Option<f64>,
    /// Lobe separation (THz).
    #[arg(long)]
    separation: Option<f64>,
    /// Second-lobe amplitude ratio.
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the shaped pump and dump time/frequency/Wigner/Husimi CSVs.
    Pulse(PulseArgs),
    /// Run a single Monte Carlo trial and print its result as JSON.
    Trial {
        #[command(flatten)]
        pulse: PulseArgs,
        /// Trial substream index.
        #[arg(long)]
        trial_index: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Mean-asymmetry phase scan over the lobe phase offset.
    Scan {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n_trials: Option<usize>,
        /// Number of phase points (endpoint excluded).
        #[arg(long)]
        phi_points: Option<usize>,
    },
    /// Evolutionary search over pump shapes for one-sided mode gain.
    Optimize {
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        /// +1 favors mode 1, -1 favors mode 2.
        #[arg(long, allow_hyphen_values = true)]
        objective_sign: Option<f64>,
        /// Search binned spectral phases instead of blob parameters.
        #[arg(long)]
        free_phase: bool,
    },
    /// Run the solver invariant suite; nonzero exit on any failure.
    Validate,
    /// Re-run a recorded manifest and verify byte-identical outputs.
    Replay {
        /// Path to a manifest.json from a previous run.
        manifest: PathBuf,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Pulse(_) => "pulse",
            Cmd::Trial { .. } => "trial",
            Cmd::Scan { .. } => "scan",
            Cmd::Optimize { .. } => "optimize",
            Cmd::Validate => "validate",
            Cmd::Replay { .. } => "replay",
        }
    }

    /// Fold per-subcommand flag overrides into the config (highest
    /// precedence).
    fn apply(&self, cfg: &mut AppConfig) {
        let apply_pulse = |cfg: &mut AppConfig, p: &PulseArgs| {
            if let Some(v) = p.phi {
                cfg.blob.phase_offset = v;
            }
            if let Some(v) = p.width {
                cfg.blob.blob_width = v;
            }
            if let Some(v) = p.separation {
                cfg.blob.separation = v;
            }
            if let Some(v) = p.ratio {
                cfg.blob.amplitude_ratio = v;
            }
        };
        match self {
            Cmd::Pulse(p) => apply_pulse(cfg, p),
            Cmd::Trial {
                pulse,
                trial_index,
                alpha,
            } => {
                apply_pulse(cfg, pulse);
                if let Some(v) = *trial_index {
                    cfg.trial_index = v;
                }
                if let Some(v) = *alpha {
                    cfg.sim.alpha = v;
                }
            }
            Cmd::Scan {
                alpha,
                n_trials,
                phi_points,
            } => {
                if let Some(v) = *alpha {
                    cfg.sim.alpha = v;
                }
                if let Some(v) = *n_trials {
                    cfg.scan_n_trials = v;
                }
                if let Some(v) = *phi_points {
                    cfg.scan_phi_points = v;
                }
            }
            Cmd::Optimize {
                generations,
                population,
                objective_sign,
                free_phase,
            } => {
                if let Some(v) = *generations {
                    cfg.ga.n_generations = v;
                }
                if let Some(v) = *population {
                    cfg.ga.population_size = v;
                }
                if let Some(v) = *objective_sign {
                    cfg.ga.objective_sign = v;
                }
                if *free_phase {
                    cfg.ga_free_phase = true;
                }
            }
            Cmd::Validate | Cmd::Replay { .. } => {}
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<AppConfig, config::ConfigError> {
    let mut cfg = AppConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for assignment in &cli.overrides {
        let (k, v) = assignment.split_once('=').ok_or(config::ConfigError {
            key: assignment.clone(),
            message: "expected KEY=VALUE".into(),
        })?;
        cfg.set(k.trim(), v)?;
    }
    cli.cmd.apply(&mut cfg);
    if let Some(seed) = cli.seed {
        cfg.sim.rng_seed = seed;
        cfg.ga.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("RAMAN_SIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn init_threads(threads: usize) {
    // Ignore the error if a pool already exists (tests call this twice).
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn replay(manifest_path: &PathBuf, threads: usize) -> anyhow::Result<u8> {
    let recorded = RunManifest::load(manifest_path)?;
    let cfg = AppConfig::from_pairs(
        recorded
            .config
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str())),
    )?;
    cfg.validate()?;
    init_threads(threads);

    let base = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let scratch = tempfile::Builder::new()
        .prefix("raman-replay")
        .tempdir_in(&base)?;
    let (outputs, _ok) = commands::execute(&recorded.subcommand, &cfg, scratch.path())?;

    let mut identical = true;
    for name in &outputs {
        let original = std::fs::read(base.join(name));
        let fresh = std::fs::read(scratch.path().join(name));
        let same = matches!((&original, &fresh), (Ok(a), Ok(b)) if a == b);
        if !same {
            eprintln!("replay mismatch: {name}");
            identical = false;
        }
    }
    if identical {
        println!(
            "replay ok: {} output file(s) byte-identical",
            outputs.len()
        );
        Ok(0)
    } else {
        Ok(1)
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Cmd::Replay { manifest } = &cli.cmd {
        return replay(manifest, cli.threads.unwrap_or(1));
    }

    let cfg = match resolve_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    init_threads(cli.threads.unwrap_or(1));
    let dir = out_dir(cli);
    std::fs::create_dir_all(&dir)?;

    let started = Instant::now();
    let (outputs, ok) = commands::execute(cli.cmd.name(), &cfg, &dir)?;
    let duration = started.elapsed().as_secs_f64();

    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cli.cmd.name().to_string(),
        config: cfg.to_pairs(),
        rng_seed: cfg.sim.rng_seed,
        threads: cli.threads.unwrap_or(1),
        duration_seconds: duration,
        outputs,
    }
    .write(&dir)?;
    eprintln!("wrote {}", dir.join(MANIFEST_NAME).display());

    Ok(if ok { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
