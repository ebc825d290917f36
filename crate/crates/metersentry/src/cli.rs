//! Command-line interface.

use crate::config::{ConfigError, RunConfig};
use crate::csvio::{self, CsvError, FrameReader};
use crate::model_file::{self, ModelFileError};
use crate::output::{self, DetectionWriters};
use clap::{Args, Parser, Subcommand};
use metersentry_core::ingest::{prepare, resample, FeatureFrame, HolidayTable, IngestError, Period, PrepareConfig, FRAME_COLUMNS};
use metersentry_core::nn::NetError;
use metersentry_core::pipeline::{fit_detector, FitConfig, PipelineError};
use metersentry_core::scoring::{histogram, CsMode, GaussianModel, ScoreError};
use metersentry_core::stats::{anderson_darling, correlation_of, iqr_outliers, ks_normality, summarize};
use metersentry_core::stream::{stream_detect, StreamConfig, StreamError, StreamEvent, StreamSummary};
use metersentry_core::synth::{evaluate_labels, generate, SynthError};
use metersentry_core::threshold::AnomalyRecord;
use metersentry_core::time::HOUR;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Display;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::Duration;

/// Prints to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    MissingFile = 2,
    Schema = 3,
    EmptyFrame = 4,
    Diverged = 5,
    Misaligned = 6,
    InvalidSynth = 7,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn new(exit: Exit, message: impl Display) -> Self {
        Failure { exit, message: message.to_string() }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn io_fail(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::new(Exit::Usage, format!("{}: {e}", path.display()))
}

impl From<CsvError> for Failure {
    fn from(e: CsvError) -> Self {
        let exit = match &e {
            CsvError::NotFound(_) => Exit::MissingFile,
            CsvError::Io { .. } => Exit::Usage,
            CsvError::Header { .. } | CsvError::Row { .. } | CsvError::Content { .. } => Exit::Schema,
        };
        Failure::new(exit, e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let exit = if matches!(e, ConfigError::NotFound(_)) { Exit::MissingFile } else { Exit::Usage };
        Failure::new(exit, e)
    }
}

impl From<ModelFileError> for Failure {
    fn from(e: ModelFileError) -> Self {
        let exit = if matches!(e, ModelFileError::NotFound(_)) { Exit::MissingFile } else { Exit::Schema };
        Failure::new(exit, format!("model file: {e}"))
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let exit = if matches!(e, IngestError::InsufficientData { .. }) { Exit::EmptyFrame } else { Exit::Schema };
        Failure::new(exit, e)
    }
}

impl From<NetError> for Failure {
    fn from(e: NetError) -> Self {
        let exit = match e {
            NetError::Diverged { .. } => Exit::Diverged,
            NetError::InsufficientWindows { .. } => Exit::EmptyFrame,
            NetError::Shape { .. } => Exit::Misaligned,
            _ => Exit::Usage,
        };
        Failure::new(exit, e)
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        let exit = match &e {
            ScoreError::Alignment(_) | ScoreError::FeatureMismatch(_) | ScoreError::Shape(..) => Exit::Misaligned,
            ScoreError::InsufficientData { .. } => Exit::EmptyFrame,
            ScoreError::Net(n) => return Failure::from(n.clone()),
            _ => Exit::Usage,
        };
        Failure::new(exit, e)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Net(n) => n.into(),
            PipelineError::Score(s) => s.into(),
        }
    }
}

impl<E: Into<Failure>> From<StreamError<E>> for Failure {
    fn from(e: StreamError<E>) -> Self {
        match e {
            StreamError::Source(s) => s.into(),
            StreamError::Score(s) => s.into(),
            StreamError::Ordering { .. } => Failure::new(Exit::Schema, e_ordering(&e)),
            StreamError::Threshold(t) => Failure::new(Exit::Usage, t),
        }
    }
}

fn e_ordering<E>(e: &StreamError<E>) -> String {
    match e {
        StreamError::Ordering { prev, got } => format!("rows out of order: {prev} then {got}"),
        _ => String::new(),
    }
}

impl From<std::convert::Infallible> for Failure {
    fn from(e: std::convert::Infallible) -> Self {
        match e {}
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        let exit = match e {
            SynthError::InvalidOffset { .. } => Exit::InvalidSynth,
            SynthError::Misaligned => Exit::Misaligned,
            SynthError::InvalidConfig(_) => Exit::Usage,
        };
        Failure::new(exit, e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "metersentry", version, about = "Smart-meter anomaly detection")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for weight init, batch order and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Threshold window length.
    #[arg(long, global = true)]
    pub w: Option<usize>,
    /// Threshold multiplier.
    #[arg(long, global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Training batch size (default 64).
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge meter, weather and holiday CSVs into a feature frame.
    Ingest(IngestArgs),
    /// Summary statistics, normality tests and outlier counts per column.
    Stats(StatsArgs),
    /// Train the autoencoder and fit the context Gaussian.
    Train(TrainArgs),
    /// Score a feature frame and flag anomalies.
    Detect(DetectArgs),
    /// Generate a synthetic meter with labeled anomalies.
    Synth(SynthArgs),
    /// Precision and recall of detected anomalies against labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub meter: Option<PathBuf>,
    #[arg(long)]
    pub weather: Option<PathBuf>,
    #[arg(long)]
    pub holidays: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Include the correlation matrix.
    #[arg(long)]
    pub corr: bool,
    /// Also write mean consumption per period (daily, weekly, monthly, quarterly, half_yearly).
    #[arg(long, value_parser = parse_period)]
    pub resample: Option<Period>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Default the saved detector to the standardized combined score.
    #[arg(long)]
    pub standardized: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Feature CSV; ignored with `--stream`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Defaults to `gaussian.json` next to the model.
    #[arg(long)]
    pub gaussian: Option<PathBuf>,
    /// Read feature rows from standard input as they arrive.
    #[arg(long)]
    pub stream: bool,
    /// Replay throttle for `--stream`, rows per second.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Use the standardized combined score.
    #[arg(long)]
    pub standardized: bool,
    /// Keep flagged values in later windows instead of their reconstruction.
    #[arg(long)]
    pub no_mask: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub days: Option<usize>,
    /// Number of evenly spaced unit spikes.
    #[arg(long)]
    pub spikes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub anomalies: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub tolerance_hours: Option<i64>,
}

fn parse_period(s: &str) -> Result<Period, String> {
    Period::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
        let names: Vec<&str> = Period::ALL.iter().map(|p| p.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// Defaults, then the config file, then global and subcommand flags.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($flag:expr, $field:ident) => {
            if let Some(v) = $flag.clone() {
                c.$field = v;
            }
        };
    }
    set!(cli.seed, seed);
    set!(cli.w, w);
    set!(cli.k, k);
    set!(cli.epochs, epochs);
    set!(cli.batch_size, batch_size);
    set!(cli.out, out);
    match &cli.command {
        Command::Ingest(a) => {
            c.meter = a.meter.clone().or(c.meter);
            c.weather = a.weather.clone().or(c.weather);
            c.holidays = a.holidays.clone().or(c.holidays);
        }
        Command::Stats(a) => c.features = a.features.clone().or(c.features),
        Command::Train(a) => {
            c.features = a.features.clone().or(c.features);
            c.standardized_cs |= a.standardized;
        }
        Command::Detect(a) => {
            c.features = a.features.clone().or(c.features);
            c.model = a.model.clone().or(c.model);
            c.gaussian = a.gaussian.clone().or(c.gaussian);
            c.standardized_cs |= a.standardized;
            c.mask_anomalies &= !a.no_mask;
        }
        Command::Synth(a) => {
            set!(a.days, days);
            set!(a.spikes, spikes);
        }
        Command::Evaluate(a) => {
            c.anomalies = a.anomalies.clone().or(c.anomalies);
            c.labels = a.labels.clone().or(c.labels);
            set!(a.tolerance_hours, tolerance_hours);
        }
    }
    Ok(c)
}

fn required<'a>(value: &'a Option<PathBuf>, name: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| Failure::new(Exit::Usage, format!("missing --{name} (flag or `{name}` config key)")))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let config = effective_config(cli)?;
    log::info!("effective config: {}", serde_json::to_string(&config).unwrap_or_default());
    match &cli.command {
        Command::Ingest(_) => cmd_ingest(&config),
        Command::Stats(a) => cmd_stats(&config, a),
        Command::Train(_) => cmd_train(&config),
        Command::Detect(a) => cmd_detect(&config, a),
        Command::Synth(_) => cmd_synth(&config),
        Command::Evaluate(_) => cmd_evaluate(&config),
    }
}

fn load_frame(config: &RunConfig) -> Result<FeatureFrame, Failure> {
    let frame = csvio::read_frame(required(&config.features, "features")?)?;
    if frame.is_empty() {
        return Err(Failure::new(Exit::EmptyFrame, "feature frame has no rows"));
    }
    Ok(frame)
}

pub fn cmd_ingest(config: &RunConfig) -> Result<(), Failure> {
    let meter = csvio::read_meter(required(&config.meter, "meter")?)?;
    let weather = csvio::read_weather(required(&config.weather, "weather")?)?;
    let holidays = match &config.holidays {
        Some(p) => csvio::read_holidays(p)?,
        None => HolidayTable::default(),
    };
    let prep = PrepareConfig { interval: config.interval, impute_rounds: config.impute_rounds, ..PrepareConfig::default() };
    let (frame, report) = prepare(&meter, &weather, &holidays, &prep)?;
    if frame.is_empty() {
        return Err(Failure::new(Exit::EmptyFrame, "no rows survive feature engineering"));
    }
    let features = config.out.join("features.csv");
    let report_path = config.out.join("ingest_report.json");
    let file = output::create(&features).map_err(io_fail(&features))?;
    csvio::write_frame(file, &frame).map_err(io_fail(&features))?;
    output::write_json(&report_path, &report).map_err(io_fail(&report_path))?;
    output::write_meta(&config.out, "ingest", config, &[features, report_path]).map_err(io_fail(&config.out))?;
    out!("rows={} gaps={} imputed={} clamped={}", frame.len(), report.gaps.len(), report.imputed_cells, report.clamp_count);
    Ok(())
}

fn column_stats(values: &[f64]) -> Value {
    let opt = |v: Result<Value, String>| v.unwrap_or_else(|e| json!({ "error": e }));
    json!({
        "summary": opt(summarize(values).map(|s| json!(s)).map_err(|e| e.to_string())),
        "ks": opt(ks_normality(values).map(|r| json!(r)).map_err(|e| e.to_string())),
        "anderson_darling": opt(anderson_darling(values).map(|r| json!(r)).map_err(|e| e.to_string())),
        "iqr_outliers": opt(iqr_outliers(values, 1.5).map(|m| json!(m.iter().filter(|x| **x).count())).map_err(|e| e.to_string())),
    })
}

pub fn cmd_stats(config: &RunConfig, args: &StatsArgs) -> Result<(), Failure> {
    let frame = load_frame(config)?;
    let names = &FRAME_COLUMNS[1..];
    let columns: Vec<Vec<f64>> = names.iter().map(|n| frame.column(n).expect("frame column")).collect();
    let mut doc = serde_json::Map::new();
    for (name, col) in names.iter().zip(&columns) {
        doc.insert(name.to_string(), column_stats(col));
    }
    if args.corr {
        let (kept, excluded): (Vec<usize>, Vec<usize>) = (0..names.len()).partition(|&i| {
            let s = summarize(&columns[i]);
            s.is_ok_and(|s| s.std > 0.0)
        });
        let kept_names: Vec<&str> = kept.iter().map(|&i| names[i]).collect();
        let kept_cols: Vec<Vec<f64>> = kept.iter().map(|&i| columns[i].clone()).collect();
        let matrix = correlation_of(&kept_names, &kept_cols).map_err(|e| Failure::new(Exit::EmptyFrame, e))?;
        doc.insert(
            "correlation".into(),
            json!({
                "columns": kept_names,
                "matrix": matrix.to_nested(),
                "excluded_zero_variance": excluded.iter().map(|&i| names[i]).collect::<Vec<_>>(),
            }),
        );
    }
    let mut outputs = vec![config.out.join("stats.json")];
    if let Some(period) = args.resample {
        let path = config.out.join(format!("resample_{}.csv", period.name()));
        let mut w = csv::Writer::from_writer(output::create(&path).map_err(io_fail(&path))?);
        let rows = resample(&frame, period);
        let mut write = || -> std::io::Result<()> {
            w.write_record(["period_start", "consumption_mean"])?;
            for (ts, mean) in &rows {
                w.write_record([ts.to_string(), mean.to_string()])?;
            }
            w.flush()
        };
        write().map_err(io_fail(&path))?;
        outputs.push(path);
    }
    let doc = Value::Object(doc);
    output::write_json(&outputs[0], &doc).map_err(io_fail(&outputs[0]))?;
    output::write_meta(&config.out, "stats", config, &outputs).map_err(io_fail(&config.out))?;
    out!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

/// Context Gaussian plus the training-set scales of the score addends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianFile {
    pub feature_names: Vec<String>,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub lambda: f64,
    pub mse_scale: f64,
    pub md_scale: f64,
    /// Combined-score mode chosen at training time.
    pub standardized_cs: bool,
}

impl GaussianFile {
    pub fn new(g: &GaussianModel, scaled: CsMode, standardized_cs: bool) -> Self {
        let (mse_scale, md_scale) = match scaled {
            CsMode::Scaled { mse_scale, md_scale } => (mse_scale, md_scale),
            CsMode::Raw => (1.0, 1.0),
        };
        GaussianFile {
            feature_names: g.feature_names.clone(),
            mu: g.mu.clone(),
            sigma: g.sigma.to_nested(),
            lambda: g.lambda,
            mse_scale,
            md_scale,
            standardized_cs,
        }
    }

    pub fn model(&self) -> Result<GaussianModel, Failure> {
        let d = self.mu.len();
        if self.sigma.len() != d || self.sigma.iter().any(|r| r.len() != d) {
            return Err(Failure::new(Exit::Schema, "gaussian: sigma is not a square matrix matching mu"));
        }
        let sigma = metersentry_core::linalg::Matrix::from_row_major(d, d, self.sigma.concat());
        Ok(GaussianModel::with_lambda(self.feature_names.clone(), self.mu.clone(), sigma, self.lambda)?)
    }

    pub fn scaled_mode(&self) -> CsMode {
        CsMode::Scaled { mse_scale: self.mse_scale, md_scale: self.md_scale }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Failure::new(Exit::MissingFile, format!("{}: file not found", path.display())),
            _ => Failure::new(Exit::Usage, format!("{}: {e}", path.display())),
        })?;
        serde_json::from_str(&text).map_err(|e| Failure::new(Exit::Schema, format!("{}: {e}", path.display())))
    }
}

pub fn cmd_train(config: &RunConfig) -> Result<(), Failure> {
    let frame = load_frame(config)?;
    let windows = frame.len().saturating_sub(23);
    if windows < 2 * config.batch_size {
        return Err(Failure::new(
            Exit::EmptyFrame,
            format!("{windows} windows; training needs at least 2 × batch size = {}", 2 * config.batch_size),
        ));
    }
    let fit_cfg = FitConfig { train: config.train_config(), standardized_cs: config.standardized_cs, ..FitConfig::default() };
    let fit = fit_detector(&frame, &fit_cfg)?;
    let model_path = config.out.join("model.bin");
    let gauss_path = config.out.join("gaussian.json");
    let report_path = config.out.join("train_report.csv");
    std::fs::create_dir_all(&config.out).map_err(io_fail(&config.out))?;
    let bytes = model_file::encode(&fit.model);
    std::fs::write(&model_path, &bytes).map_err(io_fail(&model_path))?;
    output::write_json(&gauss_path, &GaussianFile::new(&fit.gaussian, fit.scaled_mode, config.standardized_cs))
        .map_err(io_fail(&gauss_path))?;
    let mut w = csv::Writer::from_writer(output::create(&report_path).map_err(io_fail(&report_path))?);
    let mut write = || -> std::io::Result<()> {
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for e in &fit.report.epochs {
            w.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.map_or_else(String::new, |v| v.to_string())])?;
        }
        w.flush()
    };
    write().map_err(io_fail(&report_path))?;
    output::write_meta(&config.out, "train", config, &[model_path, gauss_path, report_path]).map_err(io_fail(&config.out))?;
    out!(
        "epochs_run={} best_epoch={} initial_train_loss={} final_train_loss={} final_val_loss={} seed={} sha256={}",
        fit.report.epochs_run,
        fit.report.best_epoch,
        fit.report.initial_train_loss,
        fit.report.final_train_loss(),
        fit.report.final_val_loss().map_or_else(|| "none".to_string(), |v| v.to_string()),
        config.seed,
        model_file::checksum_hex(&bytes),
    );
    Ok(())
}

fn throttle(rate: Option<f64>) -> impl FnMut() {
    let period = rate.filter(|r| *r > 0.0).map(|r| Duration::from_secs_f64(1.0 / r));
    move || {
        if let Some(p) = period {
            std::thread::sleep(p);
        }
    }
}

pub fn cmd_detect(config: &RunConfig, args: &DetectArgs) -> Result<(), Failure> {
    let model_path = required(&config.model, "model")?;
    let model = model_file::load(model_path)?;
    let gauss_path = config.gaussian.clone().unwrap_or_else(|| model_path.with_file_name("gaussian.json"));
    let gauss_file = GaussianFile::load(&gauss_path)?;
    let gaussian = gauss_file.model()?;
    let standardized = config.standardized_cs || gauss_file.standardized_cs;
    let stream_cfg = StreamConfig {
        w: config.w,
        k: config.k,
        mode: if standardized { gauss_file.scaled_mode() } else { CsMode::Raw },
        gap_tolerance: config.gap_tolerance_hours * HOUR,
        mask_anomalies: config.mask_anomalies,
    };
    let mut writers = DetectionWriters::create(&config.out).map_err(io_fail(&config.out))?;
    let mut write_err = None;
    let mut cs_values = Vec::new();
    let keep_cs = !args.stream;
    let mut sink = |ev: &StreamEvent| match ev {
        StreamEvent::Record(r) => {
            if keep_cs {
                cs_values.push(r.cs);
            }
            if let Err(e) = writers.write(r) {
                write_err.get_or_insert(e);
            }
        }
        StreamEvent::Reset { timestamp, gap } => log::warn!("window reset at {timestamp} after a {gap} s gap"),
    };
    let summary: StreamSummary = if args.stream {
        let stdin = std::io::stdin();
        let reader = FrameReader::new("<stdin>", BufReader::new(stdin.lock()))?;
        let mut wait = throttle(args.rate);
        let source = reader.inspect(|_| wait());
        stream_detect(&model, &gaussian, source, stream_cfg, &mut sink)?
    } else {
        let frame = load_frame(config)?;
        stream_detect(&model, &gaussian, frame.rows().iter().map(|r| Ok::<_, std::convert::Infallible>(*r)), stream_cfg, &mut sink)?
    };
    if let Some(e) = write_err {
        return Err(io_fail(&config.out)(e));
    }
    writers.finish().map_err(io_fail(&config.out))?;
    let mut outputs = ["anomalies.jsonl", "plot.csv", "scores.csv"].map(|f| config.out.join(f)).to_vec();
    if !args.stream {
        let path = config.out.join("histogram.csv");
        output::write_histogram(&path, &histogram(&cs_values, config.histogram_bins)).map_err(io_fail(&path))?;
        outputs.push(path);
    }
    let summary_path = config.out.join("detect_summary.json");
    let summary_doc = json!({
        "rows": summary.rows,
        "records": summary.records,
        "flagged": summary.flagged,
        "resets": summary.resets,
        "w": config.w,
        "k": config.k,
        "cs_mode": stream_cfg.mode.name(),
        "mask_anomalies": config.mask_anomalies,
    });
    output::write_json(&summary_path, &summary_doc).map_err(io_fail(&summary_path))?;
    outputs.push(summary_path);
    output::write_meta(&config.out, "detect", config, &outputs).map_err(io_fail(&config.out))?;
    out!(
        "flagged={} records={} rows={} resets={} w={} k={} cs_mode={}",
        summary.flagged,
        summary.records,
        summary.rows,
        summary.resets,
        config.w,
        config.k,
        stream_cfg.mode.name()
    );
    Ok(())
}

pub fn cmd_synth(config: &RunConfig) -> Result<(), Failure> {
    let cfg = config.synth_config().map_err(|e| Failure::new(Exit::Usage, e))?;
    let series = generate(&cfg)?;
    let raw = series.to_raw_series(0.0).map_err(|e| Failure::new(Exit::Usage, e))?;
    let meter = config.out.join("meter.csv");
    let weather = config.out.join("weather.csv");
    let labels = config.out.join("labels.csv");
    let write = || -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(output::create(&meter)?);
        w.write_record(csvio::METER_HEADER)?;
        for p in raw.points() {
            w.write_record([p.timestamp.to_string(), series.meter_id.clone(), p.reading.expect("synthetic reading").to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(output::create(&weather)?);
        w.write_record(csvio::WEATHER_HEADER)?;
        for (ts, t) in series.timestamps.iter().zip(&series.temperature) {
            w.write_record([ts.to_string(), t.to_string()])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(output::create(&labels)?);
        w.write_record(csvio::LABEL_HEADER)?;
        for (ts, l) in series.timestamps.iter().zip(&series.labels) {
            w.write_record([ts.to_string(), (*l as u8).to_string()])?;
        }
        w.flush()
    };
    write().map_err(io_fail(&config.out))?;
    output::write_meta(&config.out, "synth", config, &[meter, weather, labels]).map_err(io_fail(&config.out))?;
    out!("rows={} anomalies={} seed={}", series.len(), series.anomaly_count(), cfg.seed);
    Ok(())
}

/// Parses one line of `anomalies.jsonl`.
pub fn parse_anomaly_line(line: &str) -> Result<AnomalyRecord, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let num = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| format!("missing numeric `{k}`"));
    let ts = v.get("ts").and_then(Value::as_str).ok_or("missing `ts`")?;
    let threshold = match v.get("threshold") {
        Some(Value::String(s)) if s == "inf" => f64::INFINITY,
        _ => num("threshold")?,
    };
    Ok(AnomalyRecord {
        timestamp: csvio::parse_timestamp(ts).ok_or_else(|| format!("invalid ts `{ts}`"))?,
        cs: num("cs")?,
        threshold,
        mse: num("mse")?,
        md: num("md")?,
        is_anomaly: match v.get("anomaly").and_then(Value::as_u64) {
            Some(0) => false,
            Some(1) => true,
            _ => return Err("anomaly must be 0 or 1".into()),
        },
    })
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<(), Failure> {
    let path = required(&config.anomalies, "anomalies")?;
    let file = csvio::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_fail(path))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_anomaly_line(&line).map_err(|e| Failure::new(Exit::Schema, format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    let (ts, labels) = csvio::read_labels(required(&config.labels, "labels")?)?;
    let e = evaluate_labels(&records, &ts, &labels, config.tolerance_hours * HOUR)?;
    let out = config.out.join("evaluation.json");
    output::write_json(&out, &e).map_err(io_fail(&out))?;
    output::write_meta(&config.out, "evaluate", config, &[out]).map_err(io_fail(&config.out))?;
    out!("{}", serde_json::to_string(&e).expect("json"));
    Ok(())
}
