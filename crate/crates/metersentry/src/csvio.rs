//! CSV readers and writers for meter, weather, holiday, label and feature files.

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use metersentry_core::ingest::{FeatureFrame, FeatureRow, HolidayTable, IngestError, RawPoint, RawSeries, WeatherTable, FRAME_COLUMNS};
use metersentry_core::time::Timestamp;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

pub const METER_HEADER: [&str; 3] = ["timestamp", "meter_id", "reading"];
pub const WEATHER_HEADER: [&str; 2] = ["timestamp", "temperature"];
pub const HOLIDAY_HEADER: [&str; 1] = ["date"];
pub const LABEL_HEADER: [&str; 2] = ["timestamp", "label"];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{}: file not found", .0.display())]
    NotFound(PathBuf),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: header must be `{expected}`, found `{found}`")]
    Header { path: String, expected: String, found: String },
    #[error("{path}:{line}: {message}")]
    Row { path: String, line: u64, message: String },
    #[error("{path}: {source}")]
    Content { path: String, source: IngestError },
}

/// Parses ISO-8601 UTC timestamps with or without offset, `T` or space.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(dt.timestamp()));
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| Timestamp(dt.and_utc().timestamp()))
}

pub fn open(path: &Path) -> Result<File, CsvError> {
    File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CsvError::NotFound(path.to_path_buf()),
        _ => CsvError::Io { path: path.display().to_string(), source: e },
    })
}

/// Typed reader over a CSV source whose header must equal `expected`.
struct Table<R: Read> {
    name: String,
    reader: csv::Reader<R>,
}

impl<R: Read> Table<R> {
    fn new(name: &str, source: R, expected: &[&str]) -> Result<Self, CsvError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let found: Vec<String> = reader.headers().map_err(|e| row_error(name, &e))?.iter().map(str::to_string).collect();
        if found != expected {
            return Err(CsvError::Header { path: name.to_string(), expected: expected.join(","), found: found.join(",") });
        }
        Ok(Table { name: name.to_string(), reader })
    }

    fn next_record(&mut self, record: &mut csv::StringRecord) -> Result<Option<u64>, CsvError> {
        match self.reader.read_record(record) {
            Ok(true) => Ok(Some(record.position().map_or(0, |p| p.line()))),
            Ok(false) => Ok(None),
            Err(e) => Err(row_error(&self.name, &e)),
        }
    }

    fn bad(&self, line: u64, message: impl Into<String>) -> CsvError {
        CsvError::Row { path: self.name.clone(), line, message: message.into() }
    }
}

fn row_error(name: &str, e: &csv::Error) -> CsvError {
    match e.kind() {
        csv::ErrorKind::Io(err) => CsvError::Io { path: name.to_string(), source: io::Error::new(err.kind(), err.to_string()) },
        _ => CsvError::Row { path: name.to_string(), line: e.position().map_or(0, |p| p.line()), message: e.to_string() },
    }
}

fn field<'a, R: Read>(t: &Table<R>, rec: &'a csv::StringRecord, line: u64, i: usize) -> Result<&'a str, CsvError> {
    rec.get(i).ok_or_else(|| t.bad(line, format!("missing column {i}")))
}

fn timestamp_field<R: Read>(t: &Table<R>, rec: &csv::StringRecord, line: u64) -> Result<Timestamp, CsvError> {
    let s = field(t, rec, line, 0)?;
    parse_timestamp(s).ok_or_else(|| t.bad(line, format!("invalid timestamp `{s}`")))
}

fn number<R: Read>(t: &Table<R>, s: &str, line: u64, what: &str) -> Result<f64, CsvError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| t.bad(line, format!("invalid {what} `{s}`")))
}

/// Meter CSV: one meter per file; empty readings are kept as missing.
pub fn read_meter(path: &Path) -> Result<RawSeries, CsvError> {
    read_meter_from(&path.display().to_string(), BufReader::new(open(path)?))
}

pub fn read_meter_from(name: &str, source: impl Read) -> Result<RawSeries, CsvError> {
    let mut t = Table::new(name, source, &METER_HEADER)?;
    let mut rec = csv::StringRecord::new();
    let mut meter_id: Option<String> = None;
    let mut points = Vec::new();
    while let Some(line) = t.next_record(&mut rec)? {
        let ts = timestamp_field(&t, &rec, line)?;
        let id = field(&t, &rec, line, 1)?;
        match &meter_id {
            None => meter_id = Some(id.to_string()),
            Some(m) if m != id => return Err(t.bad(line, format!("second meter id `{id}` (expected `{m}`)"))),
            _ => {}
        }
        let raw = field(&t, &rec, line, 2)?;
        let reading = if raw.is_empty() { None } else { Some(number(&t, raw, line, "reading")?) };
        points.push(RawPoint { timestamp: ts, reading, temperature: None, is_holiday: false });
    }
    RawSeries::new(meter_id.unwrap_or_default(), points).map_err(|source| CsvError::Content { path: name.to_string(), source })
}

pub fn read_weather(path: &Path) -> Result<WeatherTable, CsvError> {
    let name = path.display().to_string();
    let mut t = Table::new(&name, BufReader::new(open(path)?), &WEATHER_HEADER)?;
    let mut rec = csv::StringRecord::new();
    let mut entries = Vec::new();
    while let Some(line) = t.next_record(&mut rec)? {
        let ts = timestamp_field(&t, &rec, line)?;
        let raw = field(&t, &rec, line, 1)?;
        if !raw.is_empty() {
            entries.push((ts, number(&t, raw, line, "temperature")?));
        }
    }
    Ok(WeatherTable::new(entries))
}

pub fn read_holidays(path: &Path) -> Result<HolidayTable, CsvError> {
    let name = path.display().to_string();
    let mut t = Table::new(&name, BufReader::new(open(path)?), &HOLIDAY_HEADER)?;
    let mut rec = csv::StringRecord::new();
    let mut dates = Vec::new();
    while let Some(line) = t.next_record(&mut rec)? {
        let s = field(&t, &rec, line, 0)?;
        dates.push(NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| t.bad(line, format!("invalid date `{s}`")))?);
    }
    Ok(HolidayTable::new(dates))
}

/// `timestamp,label` rows, labels 0 or 1.
pub fn read_labels(path: &Path) -> Result<(Vec<Timestamp>, Vec<bool>), CsvError> {
    let name = path.display().to_string();
    let mut t = Table::new(&name, BufReader::new(open(path)?), &LABEL_HEADER)?;
    let mut rec = csv::StringRecord::new();
    let (mut ts, mut labels) = (Vec::new(), Vec::new());
    while let Some(line) = t.next_record(&mut rec)? {
        ts.push(timestamp_field(&t, &rec, line)?);
        labels.push(match field(&t, &rec, line, 1)? {
            "0" => false,
            "1" => true,
            other => return Err(t.bad(line, format!("label must be 0 or 1, got `{other}`"))),
        });
    }
    Ok((ts, labels))
}

/// Streams [`FeatureRow`]s from a feature CSV.
pub struct FrameReader<R: Read> {
    table: Table<R>,
    record: csv::StringRecord,
}

impl<R: Read> FrameReader<R> {
    pub fn new(name: &str, source: R) -> Result<Self, CsvError> {
        Ok(FrameReader { table: Table::new(name, source, &FRAME_COLUMNS)?, record: csv::StringRecord::new() })
    }

    fn parse(&self, line: u64) -> Result<FeatureRow, CsvError> {
        let t = &self.table;
        let rec = &self.record;
        let f = |i: usize| -> Result<f64, CsvError> { number(t, field(t, rec, line, i)?, line, FRAME_COLUMNS[i]) };
        let u = |i: usize| -> Result<u8, CsvError> {
            let s = field(t, rec, line, i)?;
            s.parse::<u8>().map_err(|_| t.bad(line, format!("invalid {} `{s}`", FRAME_COLUMNS[i])))
        };
        Ok(FeatureRow {
            timestamp: timestamp_field(t, rec, line)?,
            consumption: f(1)?,
            lag1: f(2)?,
            lag2: f(3)?,
            day_shift: f(4)?,
            month_shift: f(5)?,
            temperature: f(6)?,
            holiday: u(7)?,
            weekday: u(8)?,
            hour: u(9)?,
            month: u(10)?,
            day: u(11)?,
        })
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<FeatureRow, CsvError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut record = std::mem::take(&mut self.record);
        let next = self.table.next_record(&mut record);
        self.record = record;
        match next {
            Ok(Some(line)) => Some(self.parse(line)),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

pub fn read_frame(path: &Path) -> Result<FeatureFrame, CsvError> {
    let name = path.display().to_string();
    let rows = FrameReader::new(&name, BufReader::new(open(path)?))?.collect::<Result<Vec<_>, _>>()?;
    FeatureFrame::from_rows(rows).map_err(|source| CsvError::Content { path: name, source })
}

/// Writes the frame with shortest round-trip float formatting, so reading it
/// back is bit-exact.
pub fn write_frame(out: impl Write, frame: &FeatureFrame) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRAME_COLUMNS)?;
    for r in frame.rows() {
        w.write_record([
            r.timestamp.to_string(),
            r.consumption.to_string(),
            r.lag1.to_string(),
            r.lag2.to_string(),
            r.day_shift.to_string(),
            r.month_shift.to_string(),
            r.temperature.to_string(),
            r.holiday.to_string(),
            r.weekday.to_string(),
            r.hour.to_string(),
            r.month.to_string(),
            r.day.to_string(),
        ])?;
    }
    w.flush()
}
