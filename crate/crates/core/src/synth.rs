//! Seeded synthetic hourly consumption with injected, labeled anomalies, and
//! precision/recall evaluation against those labels.

use crate::ingest::{IngestError, RawPoint, RawSeries, WeatherTable};
use crate::math::{cos, sin};
use crate::threshold::AnomalyRecord;
use crate::time::{Timestamp, HOUR};
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("anomaly at offset {offset} with duration {duration} does not fit in {len} points")]
    InvalidOffset { offset: usize, duration: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("predictions and labels cover disjoint time ranges")]
    Misaligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Adds `magnitude` to the clean value.
    Spike,
    /// Sets the value to zero.
    Dropout,
    /// Adds `magnitude` for the whole duration.
    LevelShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectedAnomaly {
    /// Hours from the series start.
    pub offset: usize,
    pub kind: AnomalyKind,
    pub magnitude: f64,
    pub duration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub meter_id: String,
    pub start: Timestamp,
    pub days: usize,
    pub base_level: f64,
    /// Daily sinusoid amplitude; the peak falls at noon.
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
    pub temperature_mean: f64,
    pub temperature_amplitude: f64,
    pub anomalies: Vec<InjectedAnomaly>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            meter_id: String::from("synthetic"),
            start: Timestamp::from_ymd(2013, 1, 1).expect("valid date"),
            days: 90,
            base_level: 100.0,
            daily_amplitude: 10.0,
            weekly_amplitude: 5.0,
            noise_std: 1.0,
            temperature_mean: 12.0,
            temperature_amplitude: 8.0,
            anomalies: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn points(&self) -> usize {
        self.days * 24
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.days == 0 {
            return Err(SynthError::InvalidConfig("days must be positive"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(SynthError::InvalidConfig("noise_std must be finite and non-negative"));
        }
        let len = self.points();
        for a in &self.anomalies {
            if a.duration == 0 || a.offset + a.duration > len {
                return Err(SynthError::InvalidOffset { offset: a.offset, duration: a.duration, len });
            }
        }
        Ok(())
    }

    /// `count` unit-duration spikes of `magnitude`, evenly spread over
    /// `[from, len)` hours.
    pub fn with_spikes(mut self, count: usize, magnitude: f64, from: usize) -> Self {
        let len = self.points();
        let span = len.saturating_sub(from);
        for i in 0..count {
            let offset = from + span * (2 * i + 1) / (2 * count.max(1));
            self.anomalies.push(InjectedAnomaly { offset, kind: AnomalyKind::Spike, magnitude, duration: 1 });
        }
        self
    }
}

/// Hourly consumption with its anomaly-free counterpart and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub meter_id: String,
    pub timestamps: Vec<Timestamp>,
    pub consumption: Vec<f64>,
    pub clean: Vec<f64>,
    pub temperature: Vec<f64>,
    pub labels: Vec<bool>,
}

impl LabeledSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Cumulative meter readings, one per hour: `initial_reading` plus the
    /// consumption summed up to and including that hour. Differencing the
    /// readings recovers every hour but the first.
    pub fn to_raw_series(&self, initial_reading: f64) -> Result<RawSeries, IngestError> {
        self.cumulative(initial_reading, &self.consumption)
    }

    /// Same as [`Self::to_raw_series`] for the anomaly-free values.
    pub fn clean_raw_series(&self, initial_reading: f64) -> Result<RawSeries, IngestError> {
        self.cumulative(initial_reading, &self.clean)
    }

    fn cumulative(&self, initial: f64, values: &[f64]) -> Result<RawSeries, IngestError> {
        let mut points = Vec::with_capacity(values.len());
        let mut total = initial;
        for (ts, v) in self.timestamps.iter().zip(values) {
            total += v.max(0.0);
            points.push(RawPoint::reading(*ts, total));
        }
        RawSeries::new(self.meter_id.clone(), points)
    }

    pub fn weather_table(&self) -> WeatherTable {
        WeatherTable::new(self.timestamps.iter().copied().zip(self.temperature.iter().copied()).collect())
    }
}

/// Deterministic for a given config: same seed, same series.
pub fn generate(config: &SynthConfig) -> Result<LabeledSeries, SynthError> {
    config.validate()?;
    let n = config.points();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|_| SynthError::InvalidConfig("noise_std"))?;
    let temp_noise = Normal::new(0.0, 0.5).expect("constant std");
    let mut timestamps = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    for i in 0..n {
        let ts = config.start + i as i64 * HOUR;
        let cal = ts.calendar();
        let hour = cal.hour as f64;
        let day_of_week = cal.weekday as f64 + hour / 24.0;
        let value = config.base_level - config.daily_amplitude * cos(2.0 * PI * hour / 24.0)
            + config.weekly_amplitude * sin(2.0 * PI * day_of_week / 7.0)
            + noise.sample(&mut rng);
        let day_of_year = (ts.day_number() - Timestamp::from_ymd(cal.year, 1, 1).expect("valid date").day_number()) as f64;
        let temp = config.temperature_mean + config.temperature_amplitude * sin(2.0 * PI * (day_of_year - 110.0) / 365.0)
            + 3.0 * sin(2.0 * PI * (hour - 9.0) / 24.0)
            + temp_noise.sample(&mut rng);
        timestamps.push(ts);
        clean.push(value);
        temperature.push(temp);
    }
    let mut consumption = clean.clone();
    let mut labels = alloc::vec![false; n];
    for a in &config.anomalies {
        for i in a.offset..a.offset + a.duration {
            match a.kind {
                AnomalyKind::Spike | AnomalyKind::LevelShift => consumption[i] += a.magnitude,
                AnomalyKind::Dropout => consumption[i] = 0.0,
            }
            labels[i] = true;
        }
    }
    Ok(LabeledSeries { meter_id: config.meter_id.clone(), timestamps, consumption, clean, temperature, labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Matches flagged records to labeled anomalies one-to-one, greedily in time
/// order, within `tolerance` seconds. Labels outside the span of the records
/// (widened by the tolerance) are ignored. With no predictions precision is 1.
pub fn evaluate(records: &[AnomalyRecord], truth: &LabeledSeries, tolerance: i64) -> Result<Evaluation, SynthError> {
    evaluate_labels(records, &truth.timestamps, &truth.labels, tolerance)
}

/// [`evaluate`] against bare `(timestamp, label)` columns sorted by time.
pub fn evaluate_labels(
    records: &[AnomalyRecord],
    timestamps: &[Timestamp],
    labels: &[bool],
    tolerance: i64,
) -> Result<Evaluation, SynthError> {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(SynthError::Misaligned);
    };
    let (lo, hi) = (first.timestamp - tolerance, last.timestamp + tolerance);
    let (Some(t0), Some(t1)) = (timestamps.first(), timestamps.last()) else {
        return Err(SynthError::Misaligned);
    };
    if *t1 < lo || *t0 > hi {
        return Err(SynthError::Misaligned);
    }
    let mut actual: Vec<Timestamp> = timestamps
        .iter()
        .zip(labels)
        .filter(|(ts, l)| **l && **ts >= lo && **ts <= hi)
        .map(|(ts, _)| *ts)
        .collect();
    actual.sort();
    let mut predicted: Vec<Timestamp> = records.iter().filter(|r| r.is_anomaly).map(|r| r.timestamp).collect();
    predicted.sort();

    let mut used = alloc::vec![false; actual.len()];
    let mut start = 0;
    let mut tp = 0;
    for p in &predicted {
        while start < actual.len() && actual[start] < *p - tolerance {
            start += 1;
        }
        let mut j = start;
        while j < actual.len() && actual[j] <= *p + tolerance {
            if !used[j] {
                used[j] = true;
                tp += 1;
                break;
            }
            j += 1;
        }
    }
    let fp = predicted.len() - tp;
    let fn_ = actual.len() - tp;
    let precision = if predicted.is_empty() { 1.0 } else { tp as f64 / predicted.len() as f64 };
    let recall = if actual.is_empty() { 1.0 } else { tp as f64 / actual.len() as f64 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(Evaluation { precision, recall, f1, true_positives: tp, false_positives: fp, false_negatives: fn_ })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ts: Timestamp, flag: bool) -> AnomalyRecord {
        AnomalyRecord { timestamp: ts, cs: 0.0, threshold: 0.0, mse: 0.0, md: 0.0, is_anomaly: flag }
    }

    fn ten_spikes() -> LabeledSeries {
        let cfg = SynthConfig { days: 30, ..SynthConfig::default() }.with_spikes(10, 50.0, 100);
        generate(&cfg).unwrap()
    }

    #[test]
    fn same_seed_same_series() {
        let cfg = SynthConfig { days: 10, seed: 7, ..SynthConfig::default() };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 8, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().consumption, generate(&other).unwrap().consumption);
    }

    #[test]
    fn degenerate_config_is_constant() {
        let cfg = SynthConfig { days: 5, daily_amplitude: 0.0, weekly_amplitude: 0.0, noise_std: 0.0, ..SynthConfig::default() };
        assert!(generate(&cfg).unwrap().consumption.iter().all(|&v| v == cfg.base_level));
    }

    #[test]
    fn spike_is_exactly_additive() {
        let mut cfg = SynthConfig { days: 60, noise_std: 3.0, ..SynthConfig::default() };
        cfg.anomalies.push(InjectedAnomaly { offset: 1000, kind: AnomalyKind::Spike, magnitude: 30.0, duration: 1 });
        let s = generate(&cfg).unwrap();
        assert_eq!(s.consumption[1000], s.clean[1000] + 30.0);
        assert_eq!(s.anomaly_count(), 1);
    }

    #[test]
    fn dropouts_and_level_shifts() {
        let mut cfg = SynthConfig { days: 10, ..SynthConfig::default() };
        cfg.anomalies.push(InjectedAnomaly { offset: 10, kind: AnomalyKind::Dropout, magnitude: 0.0, duration: 3 });
        cfg.anomalies.push(InjectedAnomaly { offset: 100, kind: AnomalyKind::LevelShift, magnitude: 20.0, duration: 5 });
        let s = generate(&cfg).unwrap();
        assert_eq!(&s.consumption[10..13], &[0.0; 3]);
        assert!((100..105).all(|i| s.consumption[i] == s.clean[i] + 20.0));
        assert_eq!(s.anomaly_count(), 8);
    }

    #[test]
    fn labels_match_injections() {
        let s = ten_spikes();
        assert_eq!(s.anomaly_count(), 10);
        for (i, l) in s.labels.iter().enumerate() {
            assert_eq!(*l, s.consumption[i] != s.clean[i]);
        }
    }

    #[test]
    fn offset_beyond_series_is_rejected() {
        let mut cfg = SynthConfig { days: 1, ..SynthConfig::default() };
        cfg.anomalies.push(InjectedAnomaly { offset: 24, kind: AnomalyKind::Spike, magnitude: 1.0, duration: 1 });
        assert_eq!(generate(&cfg), Err(SynthError::InvalidOffset { offset: 24, duration: 1, len: 24 }));
    }

    #[test]
    fn eight_of_ten_with_two_extras() {
        let s = ten_spikes();
        let spikes: Vec<Timestamp> = s.timestamps.iter().zip(&s.labels).filter(|(_, l)| **l).map(|(t, _)| *t).collect();
        let mut recs: Vec<AnomalyRecord> = s.timestamps.iter().map(|t| record(*t, false)).collect();
        for r in recs.iter_mut() {
            if spikes[..8].contains(&r.timestamp) {
                r.is_anomaly = true;
            }
        }
        recs[1].is_anomaly = true;
        recs[2].is_anomaly = true;
        let e = evaluate(&recs, &s, 0).unwrap();
        assert!((e.precision - 0.8).abs() < 1e-12);
        assert!((e.recall - 0.8).abs() < 1e-12);
        assert!((e.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn no_predictions_means_unit_precision_zero_recall() {
        let s = ten_spikes();
        let recs: Vec<AnomalyRecord> = s.timestamps.iter().map(|t| record(*t, false)).collect();
        let e = evaluate(&recs, &s, 0).unwrap();
        assert_eq!((e.precision, e.recall, e.f1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn exact_predictions_score_perfectly() {
        let s = ten_spikes();
        let recs: Vec<AnomalyRecord> = s.timestamps.iter().zip(&s.labels).map(|(t, l)| record(*t, *l)).collect();
        let e = evaluate(&recs, &s, 0).unwrap();
        assert_eq!((e.precision, e.recall, e.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn tolerance_matches_nearby_flags_once() {
        let s = ten_spikes();
        let spike = s.timestamps[s.labels.iter().position(|l| *l).unwrap()];
        let mut recs: Vec<AnomalyRecord> = s.timestamps.iter().map(|t| record(*t, false)).collect();
        for r in recs.iter_mut() {
            if r.timestamp == spike + HOUR || r.timestamp == spike + 2 * HOUR {
                r.is_anomaly = true;
            }
        }
        assert_eq!(evaluate(&recs, &s, 0).unwrap().true_positives, 0);
        let e = evaluate(&recs, &s, HOUR).unwrap();
        assert_eq!((e.true_positives, e.false_positives), (1, 1));
    }

    #[test]
    fn disjoint_ranges_are_misaligned() {
        let s = ten_spikes();
        let late = s.timestamps[s.len() - 1] + 100 * HOUR;
        assert_eq!(evaluate(&[record(late, true)], &s, 0), Err(SynthError::Misaligned));
    }

    #[test]
    fn raw_series_differences_recover_consumption() {
        let s = generate(&SynthConfig { days: 3, ..SynthConfig::default() }).unwrap();
        let raw = s.to_raw_series(1000.0).unwrap();
        let p = raw.points();
        assert_eq!(p.len(), s.len());
        for i in 1..p.len() {
            let d = p[i].reading.unwrap() - p[i - 1].reading.unwrap();
            assert!((d - s.consumption[i]).abs() < 1e-9);
        }
    }
}
