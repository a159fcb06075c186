//! Flat key=value configuration with dotted section prefixes.
//!
//! Precedence: command-line flags > config file > built-in defaults. The
//! resolved configuration serializes back to the same flat format, which is
//! what the run manifest records and what `replay` feeds back in.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use raman_core::envelope::GridSpec;
use raman_core::optimizer::GAConfig;
use raman_core::shaping::DoubleBlobSpec;
use raman_core::solver::{SimConfig, SolverGrid};

/// Configuration error: carries the offending key.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Fully resolved run configuration for every subcommand.
#[derive(Debug, Clone)]
pub struct AppConfig {
    pub sim: SimConfig,
    /// Pulse (tau) grid.
    pub pulse_n_samples: usize,
    pub pulse_dt: f64,
    pub blob: DoubleBlobSpec,
    pub scan_n_trials: usize,
    pub scan_phi_points: usize,
    /// Scan phases are `i * phi_span / phi_points` (endpoint excluded).
    pub scan_phi_span: f64,
    pub scan_max_failed_fraction: f64,
    /// Husimi smoothing width (ps).
    pub tf_sigma_t: f64,
    /// Row/column stride for Wigner/Husimi CSV dumps.
    pub tf_stride: usize,
    pub ga: GAConfig,
    pub ga_free_phase: bool,
    pub trial_index: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            sim: SimConfig::default(),
            pulse_n_samples: 1024,
            pulse_dt: 0.01,
            blob: DoubleBlobSpec {
                blob_width: 0.5,
                separation: 3.3,
                phase_offset: 0.0,
                amplitude_ratio: 1.0,
            },
            scan_n_trials: 200,
            scan_phi_points: 17,
            scan_phi_span: 2.0 * PI,
            scan_max_failed_fraction: 0.0,
            tf_sigma_t: 0.15,
            tf_stride: 4,
            ga: GAConfig::default(),
            ga_free_phase: false,
            trial_index: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| err(key, format!("expected {what}, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(err(key, format!("expected a boolean, got `{other}`"))),
    }
}

impl AppConfig {
    /// Apply a single `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "sim.alpha" => self.sim.alpha = parse(key, value, "a number")?,
            "sim.suppress_q3" => self.sim.suppress_q3 = parse_bool(key, value)?,
            "sim.w1_init" => self.sim.w1_init = parse(key, value, "a number")?,
            "sim.w2_init" => self.sim.w2_init = parse(key, value, "a number")?,
            "sim.delta" => self.sim.delta = parse(key, value, "a number")?,
            "sim.pump_scale" => self.sim.pump_scale = parse(key, value, "a number")?,
            "sim.n_x" => self.sim.grid.n_x = parse(key, value, "an integer")?,
            "sim.x_max" => self.sim.grid.x_max = parse(key, value, "a number")?,
            "sim.noise_sigma" => self.sim.noise_sigma = parse(key, value, "a number")?,
            "sim.rng_seed" => self.sim.rng_seed = parse(key, value, "an integer")?,
            "sim.spatial_noise" => self.sim.spatial_noise = parse_bool(key, value)?,
            "pulse.n_samples" => self.pulse_n_samples = parse(key, value, "an integer")?,
            "pulse.dt" => self.pulse_dt = parse(key, value, "a number")?,
            "blob.width" => self.blob.blob_width = parse(key, value, "a number")?,
            "blob.separation" => self.blob.separation = parse(key, value, "a number")?,
            "blob.phase" => self.blob.phase_offset = parse(key, value, "a number")?,
            "blob.ratio" => self.blob.amplitude_ratio = parse(key, value, "a number")?,
            "scan.n_trials" => self.scan_n_trials = parse(key, value, "an integer")?,
            "scan.phi_points" => self.scan_phi_points = parse(key, value, "an integer")?,
            "scan.phi_span" => self.scan_phi_span = parse(key, value, "a number")?,
            "scan.max_failed_fraction" => {
                self.scan_max_failed_fraction = parse(key, value, "a number")?
            }
            "tf.sigma_t" => self.tf_sigma_t = parse(key, value, "a number")?,
            "tf.stride" => self.tf_stride = parse(key, value, "an integer")?,
            "ga.population_size" => self.ga.population_size = parse(key, value, "an integer")?,
            "ga.n_generations" => self.ga.n_generations = parse(key, value, "an integer")?,
            "ga.elite_count" => self.ga.elite_count = parse(key, value, "an integer")?,
            "ga.mutation_sigma" => self.ga.mutation_sigma = parse(key, value, "a number")?,
            "ga.crossover_rate" => self.ga.crossover_rate = parse(key, value, "a number")?,
            "ga.trials_per_eval" => self.ga.trials_per_eval = parse(key, value, "an integer")?,
            "ga.objective_sign" => self.ga.objective_sign = parse(key, value, "a number")?,
            "ga.rng_seed" => self.ga.rng_seed = parse(key, value, "an integer")?,
            "ga.refresh_eval_seeds" => self.ga.refresh_eval_seeds = parse_bool(key, value)?,
            "ga.free_phase" => self.ga_free_phase = parse_bool(key, value)?,
            "trial.index" => self.trial_index = parse(key, value, "an integer")?,
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    /// Apply a config file: one `key = value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(&path.display().to_string(), format!("cannot read: {e}")))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                err(
                    &format!("{}:{}", path.display(), lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// The flat key=value view of the resolved configuration (sorted keys).
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("sim.alpha", format!("{}", self.sim.alpha));
        put("sim.suppress_q3", format!("{}", self.sim.suppress_q3));
        put("sim.w1_init", format!("{}", self.sim.w1_init));
        put("sim.w2_init", format!("{}", self.sim.w2_init));
        put("sim.delta", format!("{}", self.sim.delta));
        put("sim.pump_scale", format!("{}", self.sim.pump_scale));
        put("sim.n_x", format!("{}", self.sim.grid.n_x));
        put("sim.x_max", format!("{}", self.sim.grid.x_max));
        put("sim.noise_sigma", format!("{}", self.sim.noise_sigma));
        put("sim.rng_seed", format!("{}", self.sim.rng_seed));
        put("sim.spatial_noise", format!("{}", self.sim.spatial_noise));
        put("pulse.n_samples", format!("{}", self.pulse_n_samples));
        put("pulse.dt", format!("{}", self.pulse_dt));
        put("blob.width", format!("{}", self.blob.blob_width));
        put("blob.separation", format!("{}", self.blob.separation));
        put("blob.phase", format!("{}", self.blob.phase_offset));
        put("blob.ratio", format!("{}", self.blob.amplitude_ratio));
        put("scan.n_trials", format!("{}", self.scan_n_trials));
        put("scan.phi_points", format!("{}", self.scan_phi_points));
        put("scan.phi_span", format!("{}", self.scan_phi_span));
        put(
            "scan.max_failed_fraction",
            format!("{}", self.scan_max_failed_fraction),
        );
        put("tf.sigma_t", format!("{}", self.tf_sigma_t));
        put("tf.stride", format!("{}", self.tf_stride));
        put("ga.population_size", format!("{}", self.ga.population_size));
        put("ga.n_generations", format!("{}", self.ga.n_generations));
        put("ga.elite_count", format!("{}", self.ga.elite_count));
        put("ga.mutation_sigma", format!("{}", self.ga.mutation_sigma));
        put("ga.crossover_rate", format!("{}", self.ga.crossover_rate));
        put("ga.trials_per_eval", format!("{}", self.ga.trials_per_eval));
        put("ga.objective_sign", format!("{}", self.ga.objective_sign));
        put("ga.rng_seed", format!("{}", self.ga.rng_seed));
        put(
            "ga.refresh_eval_seeds",
            format!("{}", self.ga.refresh_eval_seeds),
        );
        put("ga.free_phase", format!("{}", self.ga_free_phase));
        put("trial.index", format!("{}", self.trial_index));
        m
    }

    /// Rebuild a configuration from recorded pairs (manifest replay).
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<AppConfig, ConfigError> {
        let mut cfg = AppConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// The pulse (tau) grid.
    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.pulse_n_samples, self.pulse_dt, 0.0)
            .map_err(|e| err("pulse.n_samples", e.to_string()))
    }

    /// Eagerly validate every nested invariant, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        if !(self.pulse_dt > 0.0) {
            return Err(err("pulse.dt", "must be positive"));
        }
        self.sim
            .validate()
            .map_err(|e| err("sim", e.to_string()))?;
        SolverGrid::new(self.sim.grid.n_x, self.sim.grid.x_max)
            .map_err(|e| err("sim.n_x", e.to_string()))?;
        self.blob
            .validate(&grid)
            .map_err(|e| err("blob", e.to_string()))?;
        self.ga.validate().map_err(|e| err("ga", e.to_string()))?;
        if self.scan_n_trials == 0 {
            return Err(err("scan.n_trials", "must be at least 1"));
        }
        if self.scan_phi_points == 0 {
            return Err(err("scan.phi_points", "must be at least 1"));
        }
        if !(self.scan_phi_span > 0.0) {
            return Err(err("scan.phi_span", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.scan_max_failed_fraction) {
            return Err(err("scan.max_failed_fraction", "must be in [0, 1]"));
        }
        if !(self.tf_sigma_t > 0.0) {
            return Err(err("tf.sigma_t", "must be positive"));
        }
        if self.tf_stride == 0 {
            return Err(err("tf.stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Scan phase grid: `phi_points` values, endpoint excluded.
    pub fn scan_phases(&self) -> Vec<f64> {
        (0..self.scan_phi_points)
            .map(|i| i as f64 * self.scan_phi_span / self.scan_phi_points as f64)
            .collect()
    }
}
