//! Result writers and metadata sidecars.

use metersentry_core::scoring::{HistogramBin, ScoreRecord};
use metersentry_core::threshold::AnomalyRecord;
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `{"ts", "cs", "threshold", "mse", "md", "anomaly"}`; an infinite
/// threshold is written as the string `"inf"`.
pub fn anomaly_json(r: &AnomalyRecord) -> Value {
    let threshold = if r.threshold.is_finite() { json!(r.threshold) } else { json!("inf") };
    json!({
        "ts": r.timestamp.to_string(),
        "cs": r.cs,
        "threshold": threshold,
        "mse": r.mse,
        "md": r.md,
        "anomaly": r.is_anomaly as u8,
    })
}

/// Incremental writers for the per-record detection outputs.
pub struct DetectionWriters {
    jsonl: BufWriter<File>,
    plot: csv::Writer<BufWriter<File>>,
    scores: csv::Writer<BufWriter<File>>,
}

impl DetectionWriters {
    pub fn create(dir: &Path) -> io::Result<Self> {
        let mut plot = csv::Writer::from_writer(create(&dir.join("plot.csv"))?);
        plot.write_record(["timestamp", "cs", "threshold", "anomaly"])?;
        let mut scores = csv::Writer::from_writer(create(&dir.join("scores.csv"))?);
        scores.write_record(["timestamp", "mse", "md", "cs"])?;
        Ok(DetectionWriters { jsonl: create(&dir.join("anomalies.jsonl"))?, plot, scores })
    }

    pub fn write(&mut self, r: &AnomalyRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.jsonl, &anomaly_json(r))?;
        self.jsonl.write_all(b"\n")?;
        let ts = r.timestamp.to_string();
        let thr = if r.threshold.is_finite() { r.threshold.to_string() } else { "inf".to_string() };
        self.plot.write_record([ts.clone(), r.cs.to_string(), thr, (r.is_anomaly as u8).to_string()])?;
        self.scores.write_record([ts, r.mse.to_string(), r.md.to_string(), r.cs.to_string()])?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.jsonl.flush()?;
        self.plot.flush()?;
        self.scores.flush()
    }
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["bin_left", "bin_right", "count"])?;
    for b in bins {
        w.write_record([b.left.to_string(), b.right.to_string(), b.count.to_string()])?;
    }
    w.flush()
}

pub fn write_scores(path: &Path, scores: &[ScoreRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["timestamp", "mse", "md", "cs"])?;
    for s in scores {
        w.write_record([s.timestamp.to_string(), s.mse.to_string(), s.md.to_string(), s.cs.to_string()])?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// `<command>.meta.json` next to the outputs: tool version, effective
/// config and the files written. Contains nothing run-specific beyond that,
/// so reruns produce identical sidecars.
pub fn write_meta(dir: &Path, command: &str, config: &impl Serialize, outputs: &[PathBuf]) -> io::Result<()> {
    let files: Vec<String> = outputs.iter().map(|p| p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned())).collect();
    let meta = json!({
        "tool": "metersentry",
        "version": VERSION,
        "command": command,
        "config": config,
        "outputs": files,
    });
    write_json(&dir.join(format!("{command}.meta.json")), &meta)
}
