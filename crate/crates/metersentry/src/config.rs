//! Run configuration: a flat JSON document whose keys mirror the CLI flags.
//! Defaults apply first, then the file, then flags.

use metersentry_core::ingest::DEFAULT_IMPUTE_ROUNDS;
use metersentry_core::nn::TrainConfig;
use metersentry_core::synth::{InjectedAnomaly, SynthConfig};
use metersentry_core::threshold::{DEFAULT_K, DEFAULT_WINDOW};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub meter: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub gaussian: Option<PathBuf>,
    pub anomalies: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: PathBuf,

    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub patience: Option<usize>,

    pub w: usize,
    pub k: f64,
    /// Scale-normalized combined score instead of the raw `mse + md`.
    pub standardized_cs: bool,
    pub mask_anomalies: bool,
    /// Largest accepted spacing between stream rows, in hours.
    pub gap_tolerance_hours: i64,
    pub histogram_bins: usize,

    pub impute_rounds: usize,
    /// Sampling interval in seconds.
    pub interval: i64,

    pub tolerance_hours: i64,

    pub days: usize,
    pub base_level: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
    /// Evenly spaced unit spikes added on top of `injections`.
    pub spikes: usize,
    /// Spike height in multiples of `noise_std`.
    pub spike_sigma: f64,
    /// First hour eligible for spikes.
    pub spike_from: usize,
    pub injections: Vec<InjectedAnomaly>,
    pub start: String,
    pub meter_id: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let s = SynthConfig::default();
        RunConfig {
            meter: None,
            weather: None,
            holidays: None,
            features: None,
            model: None,
            gaussian: None,
            anomalies: None,
            labels: None,
            out: PathBuf::from("out"),
            seed: t.seed,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            validation_fraction: t.validation_fraction,
            patience: t.patience,
            w: DEFAULT_WINDOW,
            k: DEFAULT_K,
            standardized_cs: false,
            mask_anomalies: true,
            gap_tolerance_hours: 1,
            histogram_bins: 50,
            impute_rounds: DEFAULT_IMPUTE_ROUNDS,
            interval: 3600,
            tolerance_hours: 0,
            days: s.days,
            base_level: s.base_level,
            daily_amplitude: s.daily_amplitude,
            weekly_amplitude: s.weekly_amplitude,
            noise_std: s.noise_std,
            spikes: 0,
            spike_sigma: 10.0,
            spike_from: 0,
            injections: Vec::new(),
            start: s.start.to_string(),
            meter_id: s.meter_id,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}: file not found")]
    NotFound(PathBuf),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ConfigError::NotFound(path.to_path_buf()),
            _ => ConfigError::Invalid { path: path.display().to_string(), message: e.to_string() },
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Invalid { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            validation_fraction: self.validation_fraction,
            seed: self.seed,
            patience: self.patience,
        }
    }

    pub fn synth_config(&self) -> Result<SynthConfig, String> {
        let start = crate::csvio::parse_timestamp(&self.start).ok_or_else(|| format!("invalid start `{}`", self.start))?;
        let cfg = SynthConfig {
            meter_id: self.meter_id.clone(),
            start,
            days: self.days,
            base_level: self.base_level,
            daily_amplitude: self.daily_amplitude,
            weekly_amplitude: self.weekly_amplitude,
            noise_std: self.noise_std,
            anomalies: self.injections.clone(),
            seed: self.seed,
            ..SynthConfig::default()
        };
        Ok(cfg.with_spikes(self.spikes, self.spike_sigma * self.noise_std, self.spike_from))
    }
}
