//! Raw meter series → cleaned, feature-engineered [`FeatureFrame`].
//!
//! The batch pipeline run by [`prepare`] is:
//!
//! 1. [`detect_gaps`] on the meter timestamps and [`reindex`] onto the expected
//!    grid, inserting absent readings for every missing slot;
//! 2. [`merge_sources`] to attach temperature (nearest preceding weather value
//!    within one hour) and the holiday flag of each calendar date;
//! 3. [`impute_series`], chained-equation regression filling of absent
//!    readings and temperatures;
//! 4. [`diff_consumption`], cumulative readings → per-interval consumption with
//!    negative deltas clamped to zero;
//! 5. [`engineer_features`], lags at 1, 2, 24 and 720 intervals plus calendar
//!    fields.

use crate::linalg::least_squares;
use crate::time::{Timestamp, HOUR};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Month-shift lag, in intervals (30 days of hourly data).
pub const MONTH_LAG: usize = 720;
/// Day-shift lag, in intervals.
pub const DAY_LAG: usize = 24;
/// Weather values older than this are not joined onto a meter point.
pub const WEATHER_TOLERANCE: i64 = HOUR;
/// Default number of chained-equation rounds.
pub const DEFAULT_IMPUTE_ROUNDS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(Timestamp),
    #[error("negative meter reading {reading} at {timestamp}")]
    NegativeReading { timestamp: Timestamp, reading: f64 },
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("cannot impute column `{0}`: no observed values")]
    CannotImpute(String),
    #[error("no fully observed column available to seed the regressions")]
    NoObservedPredictor,
    #[error("absent reading at {0}; impute before differencing")]
    MissingReading(Timestamp),
    #[error("rows not strictly increasing at {0}")]
    Unordered(Timestamp),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// One meter observation. Absent readings are explicit `None`s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub timestamp: Timestamp,
    pub reading: Option<f64>,
    pub temperature: Option<f64>,
    pub is_holiday: bool,
}

impl RawPoint {
    pub fn reading(timestamp: Timestamp, reading: f64) -> Self {
        RawPoint { timestamp, reading: Some(reading), temperature: None, is_holiday: false }
    }
}

/// Cumulative meter readings of one meter, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub meter_id: String,
    points: Vec<RawPoint>,
}

impl RawSeries {
    /// Sorts by timestamp; rejects duplicated timestamps and negative readings.
    pub fn new(meter_id: impl Into<String>, mut points: Vec<RawPoint>) -> Result<Self, IngestError> {
        points.sort_by_key(|p| p.timestamp);
        for w in points.windows(2) {
            if w[0].timestamp == w[1].timestamp {
                return Err(IngestError::DuplicateTimestamp(w[0].timestamp));
            }
        }
        for p in &points {
            if let Some(r) = p.reading {
                if r < 0.0 {
                    return Err(IngestError::NegativeReading { timestamp: p.timestamp, reading: r });
                }
            }
        }
        Ok(RawSeries { meter_id: meter_id.into(), points })
    }

    pub fn points(&self) -> &[RawPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Hourly (or otherwise timestamped) temperature observations, sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherTable {
    entries: Vec<(Timestamp, f64)>,
}

impl WeatherTable {
    /// Sorts by timestamp; on duplicate timestamps the last value wins.
    pub fn new(mut entries: Vec<(Timestamp, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut dedup: Vec<(Timestamp, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match dedup.last_mut() {
                Some(last) if last.0 == e.0 => *last = e,
                _ => dedup.push(e),
            }
        }
        WeatherTable { entries: dedup }
    }

    /// Latest value at or before `ts`, if no older than [`WEATHER_TOLERANCE`].
    pub fn lookup(&self, ts: Timestamp) -> Option<f64> {
        let idx = self.entries.partition_point(|e| e.0 <= ts);
        if idx == 0 {
            return None;
        }
        let (wts, value) = self.entries[idx - 1];
        (ts - wts <= WEATHER_TOLERANCE).then_some(value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Set of holiday calendar dates (UTC).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HolidayTable {
    days: BTreeSet<i64>,
}

impl HolidayTable {
    pub fn new(dates: impl IntoIterator<Item = chrono::NaiveDate>) -> Self {
        HolidayTable { days: dates.into_iter().map(|d| Timestamp::from_date(d).day_number()).collect() }
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        self.days.contains(&ts.day_number())
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// Attaches temperature and holiday flag to every meter point.
pub fn merge_sources(meter: &RawSeries, weather: &WeatherTable, holidays: &HolidayTable) -> RawSeries {
    let points = meter
        .points
        .iter()
        .map(|p| RawPoint {
            timestamp: p.timestamp,
            reading: p.reading,
            temperature: weather.lookup(p.timestamp),
            is_holiday: holidays.contains(p.timestamp),
        })
        .collect();
    RawSeries { meter_id: meter.meter_id.clone(), points }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: Timestamp,
    pub end: Timestamp,
    pub expected_points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub irregular_count: usize,
}

impl GapReport {
    pub fn missing_points(&self) -> usize {
        self.gaps.iter().map(|g| g.expected_points).sum()
    }
}

/// Finds runs of missing expected timestamps between consecutive points.
///
/// A delta `d > interval` is a gap of `ceil(d / interval) - 1` missing slots,
/// anchored at the gap start. Every delta other than `interval` is irregular.
pub fn detect_gaps(series: &RawSeries, interval: i64) -> Result<GapReport, IngestError> {
    if interval <= 0 {
        return Err(IngestError::InvalidArgument("interval must be positive"));
    }
    if series.len() < 2 {
        return Err(IngestError::InsufficientData { needed: 2, got: series.len() });
    }
    let mut report = GapReport::default();
    for w in series.points.windows(2) {
        let delta = w[1].timestamp - w[0].timestamp;
        if delta != interval {
            report.irregular_count += 1;
        }
        if delta > interval {
            let slots = (delta + interval - 1) / interval - 1;
            report.gaps.push(Gap {
                start: w[0].timestamp,
                end: w[1].timestamp,
                expected_points: slots as usize,
            });
        }
    }
    Ok(report)
}

/// Inserts an absent point for each missing slot listed in `gaps`.
pub fn reindex(series: &RawSeries, gaps: &GapReport, interval: i64) -> RawSeries {
    let mut points = Vec::with_capacity(series.len() + gaps.missing_points());
    let mut gap_iter = gaps.gaps.iter().peekable();
    for p in &series.points {
        points.push(*p);
        while let Some(g) = gap_iter.peek() {
            if g.start != p.timestamp {
                break;
            }
            for i in 1..=g.expected_points as i64 {
                points.push(RawPoint {
                    timestamp: g.start + i * interval,
                    reading: None,
                    temperature: None,
                    is_holiday: false,
                });
            }
            gap_iter.next();
        }
    }
    RawSeries { meter_id: series.meter_id.clone(), points }
}

/// Chained-equation regression imputation over a set of columns.
///
/// `columns[j][i]` is cell `i` of column `j`; `targets` lists the columns to
/// fill. Missing cells start at their column mean. Each round regresses every
/// target, on the rows where it was observed, against all other columns at
/// their current values, then overwrites its missing cells with the
/// predictions. After `rounds` rounds the last predictions are kept. Columns
/// not in `targets` act as predictors only; if they have holes those are
/// mean-filled for prediction but left absent in the output.
///
/// Returns the number of cells filled.
pub fn impute_chained(
    names: &[&str],
    columns: &mut [Vec<Option<f64>>],
    targets: &[usize],
    rounds: usize,
) -> Result<usize, IngestError> {
    if rounds == 0 {
        return Err(IngestError::InvalidArgument("imputation rounds must be ≥ 1"));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(IngestError::InvalidArgument("columns differ in length"));
    }
    let missing: Vec<Vec<usize>> = columns
        .iter()
        .map(|c| c.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i).collect())
        .collect();
    let total: usize = targets.iter().map(|&t| missing[t].len()).sum();
    if total == 0 {
        return Ok(0);
    }
    for &t in targets {
        if missing[t].len() == n {
            let name = names.get(t).copied().unwrap_or("?");
            return Err(IngestError::CannotImpute(name.to_string()));
        }
    }
    if !missing.iter().any(Vec::is_empty) {
        return Err(IngestError::NoObservedPredictor);
    }

    // Columns with no observation at all carry no information.
    let usable: Vec<bool> = missing.iter().map(|m| m.len() < n).collect();
    let mut current: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let obs: Vec<f64> = c.iter().flatten().copied().collect();
            let fill = if obs.is_empty() { 0.0 } else { crate::math::mean(&obs) };
            c.iter().map(|v| v.unwrap_or(fill)).collect()
        })
        .collect();

    for _ in 0..rounds {
        for &t in targets {
            if missing[t].is_empty() {
                continue;
            }
            let predictors: Vec<usize> = (0..columns.len()).filter(|&j| j != t && usable[j]).collect();
            let observed: Vec<usize> = (0..n).filter(|&i| columns[t][i].is_some()).collect();
            let xs: Vec<Vec<f64>> =
                predictors.iter().map(|&j| observed.iter().map(|&i| current[j][i]).collect()).collect();
            let y: Vec<f64> = observed.iter().map(|&i| current[t][i]).collect();
            let fit = least_squares(&xs, &y);
            let mut row = vec![0.0; predictors.len()];
            for &i in &missing[t] {
                for (slot, &j) in predictors.iter().enumerate() {
                    row[slot] = current[j][i];
                }
                current[t][i] = fit.predict(&row);
            }
        }
    }

    for &t in targets {
        for &i in &missing[t] {
            columns[t][i] = Some(current[t][i]);
        }
    }
    Ok(total)
}

/// Imputable columns of a [`RawSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesColumn {
    Reading,
    Temperature,
}

/// Linear interpolation of the observed values onto every index; `None` only
/// when the column has no observation at all. Ends are held constant.
fn interpolate(times: &[f64], values: &[Option<f64>]) -> Option<Vec<f64>> {
    let obs: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let (&first, &last) = (obs.first()?, obs.last()?);
    let mut out = vec![0.0; values.len()];
    for i in 0..values.len() {
        out[i] = match values[i] {
            Some(v) => v,
            None if i < first => values[first].unwrap(),
            None if i > last => values[last].unwrap(),
            None => {
                let k = obs.partition_point(|&j| j < i);
                let (a, b) = (obs[k - 1], obs[k]);
                let (va, vb) = (values[a].unwrap(), values[b].unwrap());
                va + (vb - va) * (times[i] - times[a]) / (times[b] - times[a])
            }
        };
    }
    Some(out)
}

/// Chained-equation imputation of absent readings and/or temperatures.
///
/// Besides the series columns themselves the regressions see fully observed
/// auxiliary predictors: elapsed hours, hour of day, the holiday flag, and for
/// each target its linear interpolation between observed neighbours. The last
/// one keeps cumulative readings locally consistent across gaps.
pub fn impute_series(series: &mut RawSeries, columns: &[SeriesColumn], rounds: usize) -> Result<usize, IngestError> {
    if series.is_empty() {
        return Ok(0);
    }
    let t0 = series.points[0].timestamp;
    let times: Vec<f64> = series.points.iter().map(|p| (p.timestamp - t0) as f64 / HOUR as f64).collect();
    let readings: Vec<Option<f64>> = series.points.iter().map(|p| p.reading).collect();
    let temps: Vec<Option<f64>> = series.points.iter().map(|p| p.temperature).collect();

    let mut names: Vec<&str> = vec!["reading", "temperature", "elapsed_hours", "hour", "holiday"];
    let mut cols: Vec<Vec<Option<f64>>> = vec![
        readings.clone(),
        temps.clone(),
        times.iter().map(|&t| Some(t)).collect(),
        series.points.iter().map(|p| Some(p.timestamp.calendar().hour as f64)).collect(),
        series.points.iter().map(|p| Some(if p.is_holiday { 1.0 } else { 0.0 })).collect(),
    ];
    let mut targets = Vec::new();
    for col in columns {
        let (idx, name, src, aux) = match col {
            SeriesColumn::Reading => (0, "reading", &readings, "reading_interp"),
            SeriesColumn::Temperature => (1, "temperature", &temps, "temperature_interp"),
        };
        if targets.contains(&idx) {
            continue;
        }
        let interp = interpolate(&times, src).ok_or_else(|| IngestError::CannotImpute(name.to_string()))?;
        targets.push(idx);
        names.push(aux);
        cols.push(interp.into_iter().map(Some).collect());
    }
    let filled = impute_chained(&names, &mut cols, &targets, rounds)?;
    for (i, p) in series.points.iter_mut().enumerate() {
        if targets.contains(&0) {
            // Imputed cumulative readings cannot be negative.
            p.reading = cols[0][i].map(|v| v.max(0.0));
        }
        if targets.contains(&1) {
            p.temperature = cols[1][i];
        }
    }
    Ok(filled)
}

/// Per-interval consumption, before lag features are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionSeries {
    pub points: Vec<ConsumptionPoint>,
    /// Number of negative deltas (meter resets) clamped to zero.
    pub clamped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionPoint {
    pub timestamp: Timestamp,
    pub consumption: f64,
    pub temperature: Option<f64>,
    pub holiday: bool,
}

/// `consumption[t] = reading[t] - reading[t-1]`, negatives clamped to zero.
/// The first point has no predecessor and is dropped.
pub fn diff_consumption(series: &RawSeries) -> Result<ConsumptionSeries, IngestError> {
    let mut points = Vec::with_capacity(series.len().saturating_sub(1));
    let mut clamped = 0;
    for w in series.points.windows(2) {
        let prev = w[0].reading.ok_or(IngestError::MissingReading(w[0].timestamp))?;
        let cur = w[1].reading.ok_or(IngestError::MissingReading(w[1].timestamp))?;
        let mut delta = cur - prev;
        if delta < 0.0 {
            delta = 0.0;
            clamped += 1;
        }
        points.push(ConsumptionPoint {
            timestamp: w[1].timestamp,
            consumption: delta,
            temperature: w[1].temperature,
            holiday: w[1].is_holiday,
        });
    }
    Ok(ConsumptionSeries { points, clamped })
}

/// Names of the context features fed to the Mahalanobis model, in order.
pub const CONTEXT_FEATURES: [&str; 7] = ["temperature", "holiday", "month_shift", "weekday", "hour", "month", "day"];

/// Column order of the exported frame.
pub const FRAME_COLUMNS: [&str; 12] = [
    "timestamp",
    "consumption",
    "lag1",
    "lag2",
    "day_shift",
    "month_shift",
    "temperature",
    "holiday",
    "weekday",
    "hour",
    "month",
    "day",
];

/// One engineered row. Weekday is Monday = 0 … Sunday = 6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub timestamp: Timestamp,
    pub consumption: f64,
    pub lag1: f64,
    pub lag2: f64,
    pub day_shift: f64,
    pub month_shift: f64,
    pub temperature: f64,
    pub holiday: u8,
    pub weekday: u8,
    pub hour: u8,
    pub month: u8,
    pub day: u8,
}

impl FeatureRow {
    /// Context vector in [`CONTEXT_FEATURES`] order.
    pub fn context(&self) -> [f64; 7] {
        [
            self.temperature,
            self.holiday as f64,
            self.month_shift,
            self.weekday as f64,
            self.hour as f64,
            self.month as f64,
            self.day as f64,
        ]
    }

    /// Numeric columns in [`FRAME_COLUMNS`] order, without the timestamp.
    pub fn numeric(&self) -> [f64; 11] {
        [
            self.consumption,
            self.lag1,
            self.lag2,
            self.day_shift,
            self.month_shift,
            self.temperature,
            self.holiday as f64,
            self.weekday as f64,
            self.hour as f64,
            self.month as f64,
            self.day as f64,
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    rows: Vec<FeatureRow>,
}

impl FeatureFrame {
    /// Rejects rows that are not strictly increasing in time.
    pub fn from_rows(rows: Vec<FeatureRow>) -> Result<Self, IngestError> {
        for w in rows.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(IngestError::Unordered(w[1].timestamp));
            }
        }
        Ok(FeatureFrame { rows })
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn consumption(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.consumption).collect()
    }

    /// Values of a numeric column by its [`FRAME_COLUMNS`] name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = FRAME_COLUMNS.iter().position(|c| *c == name)?.checked_sub(1)?;
        Some(self.rows.iter().map(|r| r.numeric()[idx]).collect())
    }

    pub fn position(&self, ts: Timestamp) -> Option<usize> {
        self.rows.binary_search_by_key(&ts, |r| r.timestamp).ok()
    }

    /// Rows `range` as a new frame.
    pub fn slice(&self, range: core::ops::Range<usize>) -> FeatureFrame {
        FeatureFrame { rows: self.rows[range].to_vec() }
    }
}

/// Row accounting of [`engineer_features`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineerStats {
    pub head_dropped: usize,
    pub gap_dropped: usize,
    pub missing_dropped: usize,
}

/// Attaches lag and calendar features.
///
/// Lags are by row index: `lag1 = c[t-1]`, `lag2 = c[t-2]`,
/// `day_shift = c[t-24]`, `month_shift = c[t-720]`. The first 720 rows lack a
/// month shift and are dropped. Rows whose lag span crosses a jump longer than
/// 1.5 intervals (an un-reindexed gap) are dropped, as are rows with absent
/// temperature.
pub fn engineer_features(series: &ConsumptionSeries, interval: i64) -> Result<(FeatureFrame, EngineerStats), IngestError> {
    let n = series.points.len();
    if n < MONTH_LAG + 1 {
        return Err(IngestError::InsufficientData { needed: MONTH_LAG + 1, got: n });
    }
    let pts = &series.points;
    // breaks[i] = number of oversized jumps among deltas (0,1]..(i-1,i].
    let mut breaks = vec![0usize; n];
    for i in 1..n {
        let jump = 2 * (pts[i].timestamp - pts[i - 1].timestamp) > 3 * interval;
        breaks[i] = breaks[i - 1] + jump as usize;
    }
    let mut stats = EngineerStats { head_dropped: MONTH_LAG, ..Default::default() };
    let mut rows = Vec::with_capacity(n - MONTH_LAG);
    for i in MONTH_LAG..n {
        if breaks[i] != breaks[i - MONTH_LAG] {
            stats.gap_dropped += 1;
            continue;
        }
        let Some(temperature) = pts[i].temperature else {
            stats.missing_dropped += 1;
            continue;
        };
        let cal = pts[i].timestamp.calendar();
        rows.push(FeatureRow {
            timestamp: pts[i].timestamp,
            consumption: pts[i].consumption,
            lag1: pts[i - 1].consumption,
            lag2: pts[i - 2].consumption,
            day_shift: pts[i - DAY_LAG].consumption,
            month_shift: pts[i - MONTH_LAG].consumption,
            temperature,
            holiday: pts[i].holiday as u8,
            weekday: cal.weekday,
            hour: cal.hour,
            month: cal.month,
            day: cal.day,
        });
    }
    Ok((FeatureFrame { rows }, stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Period {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    HalfYearly,
}

impl Period {
    pub const ALL: [Period; 5] = [Period::Daily, Period::Weekly, Period::Monthly, Period::Quarterly, Period::HalfYearly];

    pub fn name(self) -> &'static str {
        match self {
            Period::Daily => "daily",
            Period::Weekly => "weekly",
            Period::Monthly => "monthly",
            Period::Quarterly => "quarterly",
            Period::HalfYearly => "half-yearly",
        }
    }

    /// Start of the period containing `ts`. Weeks start on Monday.
    pub fn start_of(self, ts: Timestamp) -> Timestamp {
        let cal = ts.calendar();
        let month_start = |m: u8| Timestamp::from_ymd(cal.year, m as u32, 1).expect("valid month");
        match self {
            Period::Daily => ts.date_start(),
            Period::Weekly => ts.date_start() - cal.weekday as i64 * crate::time::DAY,
            Period::Monthly => month_start(cal.month),
            Period::Quarterly => month_start((cal.month - 1) / 3 * 3 + 1),
            Period::HalfYearly => month_start(if cal.month <= 6 { 1 } else { 7 }),
        }
    }
}

/// Mean consumption per calendar period, one row per non-empty period.
pub fn resample(frame: &FeatureFrame, period: Period) -> Vec<(Timestamp, f64)> {
    let mut acc: BTreeMap<Timestamp, (f64, usize)> = BTreeMap::new();
    for r in &frame.rows {
        let e = acc.entry(period.start_of(r.timestamp)).or_insert((0.0, 0));
        e.0 += r.consumption;
        e.1 += 1;
    }
    acc.into_iter().map(|(ts, (sum, n))| (ts, sum / n as f64)).collect()
}

/// Summary of one [`prepare`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub meter_id: String,
    pub input_points: usize,
    pub reindexed_points: usize,
    pub gaps: Vec<Gap>,
    pub irregular_count: usize,
    pub clamp_count: usize,
    pub imputed_cells: usize,
    pub head_rows_dropped: usize,
    pub gap_rows_dropped: usize,
    pub missing_rows_dropped: usize,
    pub frame_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareConfig {
    /// Expected sampling interval in seconds.
    pub interval: i64,
    pub impute_columns: Vec<SeriesColumn>,
    pub impute_rounds: usize,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            interval: HOUR,
            impute_columns: vec![SeriesColumn::Reading, SeriesColumn::Temperature],
            impute_rounds: DEFAULT_IMPUTE_ROUNDS,
        }
    }
}

/// Runs the whole ingest pipeline on one meter.
pub fn prepare(
    meter: &RawSeries,
    weather: &WeatherTable,
    holidays: &HolidayTable,
    config: &PrepareConfig,
) -> Result<(FeatureFrame, IngestReport), IngestError> {
    let gaps = detect_gaps(meter, config.interval)?;
    let grid = reindex(meter, &gaps, config.interval);
    let mut merged = merge_sources(&grid, weather, holidays);
    let imputed = impute_series(&mut merged, &config.impute_columns, config.impute_rounds)?;
    let consumption = diff_consumption(&merged)?;
    let (frame, stats) = engineer_features(&consumption, config.interval)?;
    let report = IngestReport {
        meter_id: meter.meter_id.clone(),
        input_points: meter.len(),
        reindexed_points: grid.len(),
        gaps: gaps.gaps,
        irregular_count: gaps.irregular_count,
        clamp_count: consumption.clamped,
        imputed_cells: imputed,
        head_rows_dropped: stats.head_dropped,
        gap_rows_dropped: stats.gap_dropped,
        missing_rows_dropped: stats.missing_dropped,
        frame_rows: frame.len(),
    };
    Ok((frame, report))
}
