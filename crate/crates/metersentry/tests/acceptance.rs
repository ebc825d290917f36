//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Exits non-zero only if a check cannot run at all. A FAIL line is a
//! measured result outside its pinned tolerance and is reported, not hidden.

use metersentry::csvio::{write_frame, FrameReader};
use metersentry::model_file;
use metersentry_core::ingest::{prepare, FeatureFrame, FeatureRow, HolidayTable, PrepareConfig};
use metersentry_core::linalg::Matrix;
use metersentry_core::nn::{
    make_windows, mse_loss, train, Activation, ConvAutoencoder, LayerKind, LayerSpec, Mode, Normalization, Tensor3,
    TrainConfig,
};
use metersentry_core::pipeline::{fit_detector, FitConfig};
use metersentry_core::scoring::{fit_gaussian, score_series, CsMode, GaussianModel, ScoreRecord};
use metersentry_core::stats::{anderson_darling, summarize};
use metersentry_core::stream::{detect_frame, stream_detect, StreamConfig, StreamEvent};
use metersentry_core::synth::{evaluate, generate, LabeledSeries, SynthConfig};
use metersentry_core::threshold::{detect, AnomalyRecord};
use metersentry_core::time::{Timestamp, HOUR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            let live = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(live, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn check(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let mut o = f();
    let elapsed = t.elapsed();
    if elapsed > budget {
        o.pass = false;
        o.detail.push_str(&format!("; over time budget {budget:?}"));
    }
    println!("{} {name}: {} [{:.2?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail, elapsed);
    o.pass
}

fn architecture() -> Outcome {
    let model = metersentry_core::nn::canonical_architecture();
    let counts = model.param_counts();
    let shapes = model.output_shapes();
    let mut main_shapes = vec![shapes[0]];
    for (l, s) in model.layers().iter().zip(&shapes[1..]) {
        if l.kind != LayerKind::BatchNorm {
            main_shapes.push(*s);
        }
    }
    let want_counts = [128, 64, 904, 32, 228, 72, 32, 912, 64, 113];
    let want_shapes: [(usize, usize); 7] = [(24, 1), (12, 16), (6, 8), (3, 4), (6, 8), (12, 16), (24, 1)];
    let pass = counts == want_counts && main_shapes == want_shapes;
    outcome(pass, format!("counts {counts:?}, shapes {main_shapes:?}"))
}

/// Train-mode loss with running statistics restored afterwards.
fn loss_at(model: &mut ConvAutoencoder, x: &Tensor3, target: &Tensor3) -> f64 {
    let saved = model.buffers().to_vec();
    let out = model.forward(x, Mode::Train).expect("forward");
    model.clear_cache();
    model.buffers_mut().copy_from_slice(&saved);
    mse_loss(&out, target).0
}

fn random_tiny_model(rng: &mut ChaCha8Rng) -> ConvAutoencoder {
    let c1 = rng.random_range(1..=4);
    let c2 = rng.random_range(1..=4);
    let mut k = || rng.random_range(1..=5);
    let layers = vec![
        LayerSpec::conv(1, c1, k(), 2, Activation::Relu),
        LayerSpec::batch_norm(c1),
        LayerSpec::conv_transpose(c1, c2, k(), 2, Activation::Relu),
        LayerSpec::conv(c2, 1, k(), 1, Activation::None),
    ];
    ConvAutoencoder::from_layers(layers, 8).expect("valid tiny architecture")
}

/// Magnitude below which gradients are compared on an absolute scale.
/// Central differences at `EPS` carry about 1e-10 of rounding noise, so a
/// structurally zero gradient (a bias feeding batch norm) never reads as 0.
const GRAD_FLOOR: f64 = 1e-5;

fn gradients() -> Outcome {
    const EPS: f64 = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut model = if seed % 2 == 0 { ConvAutoencoder::canonical(8) } else { random_tiny_model(&mut rng) };
        model.init_weights(seed);
        for p in model.params_mut() {
            *p += (rng.random::<f64>() - 0.5) * 0.2;
        }
        let batch = rng.random_range(2..=3);
        let mut input = || Tensor3::from_vec(batch, 8, 1, (0..batch * 8).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect());
        let (x, target) = (input(), input());
        let saved = model.buffers().to_vec();
        let out = model.forward(&x, Mode::Train).expect("forward");
        model.buffers_mut().copy_from_slice(&saved);
        let (grads, _) = model.backward(&mse_loss(&out, &target).1).expect("backward");
        for i in 0..model.params().len() {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + EPS;
            let up = loss_at(&mut model, &x, &target);
            model.params_mut()[i] = orig - EPS;
            let down = loss_at(&mut model, &x, &target);
            model.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * EPS);
            let analytic = grads.values[i];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR));
            checked += 1;
        }
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over {checked} parameters, 50 models"))
}

fn mahalanobis_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut at_mean: f64 = 0.0;
    for case in 0..100 {
        let d = 2 + case % 6;
        let a = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let spd = &a * a.transpose() + nalgebra::DMatrix::identity(d, d) * 0.1;
        let mu: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
        let names = (0..d).map(|i| format!("f{i}")).collect();
        let sigma = Matrix::from_row_major(d, d, (0..d * d).map(|i| spd[(i / d, i % d)]).collect());
        let g = GaussianModel::with_lambda(names, mu.clone(), sigma, 0.0).expect("spd model");
        let inv = spd.try_inverse().expect("invertible");
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
            let diff = nalgebra::DVector::from_iterator(d, x.iter().zip(&mu).map(|(a, b)| a - b));
            let q = (diff.transpose() * &inv * &diff)[(0, 0)];
            let md = g.mahalanobis(&x).expect("md");
            worst = worst.max((md * md - q).abs() / q.abs().max(1e-300));
        }
        at_mean = at_mean.max(g.mahalanobis(&mu).expect("md"));
    }
    outcome(worst < 1e-8 && at_mean == 0.0, format!("max relative md² error {worst:.2e}, max md(μ) {at_mean}"))
}

fn records_from(scores: &[f64]) -> Vec<ScoreRecord> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &cs)| ScoreRecord { timestamp: Timestamp::from_secs(i as i64 * HOUR), mse: cs, md: 0.0, cs })
        .collect()
}

fn flagged(out: &[AnomalyRecord]) -> Vec<usize> {
    out.iter().enumerate().filter(|(_, r)| r.is_anomaly).map(|(i, _)| i).collect()
}

fn threshold_semantics() -> Outcome {
    let constant = detect(&records_from(&[5.0; 500]), 168, 3.0).expect("detect");
    let constant_flags = flagged(&constant).len();
    let mut spike = vec![1.0; 200];
    spike[180] = 10.0;
    let spike_flags = flagged(&detect(&records_from(&spike), 168, 3.0).expect("detect"));
    let mut monotone = true;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powi(3) * 10.0).collect();
        let recs = records_from(&scores);
        let mut prev: Option<Vec<usize>> = None;
        for k in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0] {
            let f = flagged(&detect(&recs, 168, k).expect("detect"));
            if let Some(p) = &prev {
                monotone &= f.iter().all(|i| p.contains(i));
            }
            prev = Some(f);
        }
    }
    let pass = constant_flags == 0 && spike_flags == [180] && monotone;
    outcome(pass, format!("constant flags {constant_flags}, spike flags {spike_flags:?}, k-monotone on 20 streams {monotone}"))
}

/// Synthetic feature rows starting at `start`, generated on the fly.
fn synthetic_rows(n: usize, seed: u64) -> impl Iterator<Item = FeatureRow> {
    let start = Timestamp::from_ymd(2014, 1, 1).expect("date").secs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(move |i| {
        let ts = Timestamp::from_secs(start + i as i64 * HOUR);
        let cal = ts.calendar();
        let phase = 2.0 * std::f64::consts::PI * i as f64 / 24.0;
        let mut c = 100.0 + 10.0 * phase.sin() + rng.random::<f64>() * 4.0;
        if rng.random::<f64>() < 0.002 {
            c += 60.0;
        }
        FeatureRow {
            timestamp: ts,
            consumption: c,
            lag1: c - 1.0,
            lag2: c - 2.0,
            day_shift: c - 3.0,
            month_shift: 100.0 + rng.random::<f64>() * 10.0,
            temperature: 10.0 + 5.0 * (phase - 1.0).sin() + rng.random::<f64>(),
            holiday: (cal.weekday == 6) as u8,
            weekday: cal.weekday,
            hour: cal.hour,
            month: cal.month,
            day: cal.day,
        }
    })
}

fn small_detector(frame: &FeatureFrame) -> (ConvAutoencoder, GaussianModel) {
    let mut model = ConvAutoencoder::canonical(24);
    model.init_weights(3);
    model.set_normalization(Normalization::fit(&frame.consumption()).expect("normalization"));
    (model, fit_gaussian(frame, 0..frame.len()).expect("gaussian"))
}

fn same_record(a: &AnomalyRecord, b: &AnomalyRecord) -> bool {
    a.timestamp == b.timestamp
        && a.is_anomaly == b.is_anomaly
        && [(a.cs, b.cs), (a.mse, b.mse), (a.md, b.md), (a.threshold, b.threshold)].iter().all(|(x, y)| x.to_bits() == y.to_bits())
}

fn batch_stream_equivalence() -> Outcome {
    let frame = FeatureFrame::from_rows(synthetic_rows(10_000, 11).collect()).expect("frame");
    let (model, gaussian) = small_detector(&frame);
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("features.csv");
    write_frame(std::fs::File::create(&path).expect("create"), &frame).expect("write");

    let mut results = Vec::new();
    for mask in [false, true] {
        let cfg = StreamConfig { mask_anomalies: mask, ..StreamConfig::default() };
        let reader = FrameReader::new("features.csv", std::io::BufReader::new(std::fs::File::open(&path).expect("open"))).expect("reader");
        let mut streamed = Vec::new();
        stream_detect(&model, &gaussian, reader, cfg, |ev| {
            if let StreamEvent::Record(r) = ev {
                streamed.push(*r);
            }
        })
        .expect("stream");
        let batch = if mask {
            detect_frame(&model, &gaussian, &frame, cfg).expect("batch").0
        } else {
            let windows = make_windows(&frame, 24, 1, &model.normalization()).expect("windows");
            let scores = score_series(&model, &gaussian, &frame, &windows, CsMode::Raw).expect("scores");
            detect(&scores, cfg.w, cfg.k).expect("detect")
        };
        let equal = streamed.len() == batch.len() && streamed.iter().zip(&batch).all(|(a, b)| same_record(a, b));
        let flags = batch.iter().filter(|r| r.is_anomaly).count();
        results.push((mask, equal, streamed.len(), flags));
    }
    let pass = results.iter().all(|r| r.1 && r.2 == 10_000 - 23);
    let detail = results
        .iter()
        .map(|(mask, eq, n, f)| format!("mask={mask}: {n} records, {f} flagged, bit-exact {eq}"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn ingest_series(series: &LabeledSeries, clean: bool) -> FeatureFrame {
    let raw = if clean { series.clean_raw_series(0.0) } else { series.to_raw_series(0.0) }.expect("raw series");
    prepare(&raw, &series.weather_table(), &HolidayTable::default(), &PrepareConfig::default()).expect("prepare").0
}

fn end_to_end() -> Outcome {
    let base = SynthConfig { days: 90, base_level: 100.0, daily_amplitude: 10.0, weekly_amplitude: 5.0, noise_std: 5.0, ..SynthConfig::default() };
    let train_series = generate(&SynthConfig { seed: 1, ..base.clone() }).expect("train series");
    let test_series = generate(&SynthConfig { seed: 2, ..base.clone() }.with_spikes(10, 10.0 * base.noise_std, 1440)).expect("test series");
    let train_frame = ingest_series(&train_series, false);
    let test_frame = ingest_series(&test_series, false);
    let clean_frame = ingest_series(&test_series, true);

    let fit_cfg = FitConfig {
        train: TrainConfig { epochs: 30, batch_size: 64, seed: 1, patience: None, ..TrainConfig::default() },
        standardized_cs: true,
        ..FitConfig::default()
    };
    let fit = fit_detector(&train_frame, &fit_cfg).expect("fit");
    let run = |frame: &FeatureFrame, mode: CsMode| {
        let cfg = StreamConfig { w: 168, k: 3.0, mode, ..StreamConfig::default() };
        detect_frame(&fit.model, &fit.gaussian, frame, cfg).expect("detect").0
    };
    let recs = run(&test_frame, fit.mode);
    let eval = evaluate(&recs, &test_series, 0).expect("evaluate");
    let clean = run(&clean_frame, fit.mode);
    let fpr = clean.iter().filter(|r| r.is_anomaly).count() as f64 / clean.len() as f64;
    let raw_eval = evaluate(&run(&test_frame, CsMode::Raw), &test_series, 0).expect("evaluate");
    println!(
        "INFO end-to-end raw mse+md: precision {:.3} recall {:.3} (tp {} fp {} fn {})",
        raw_eval.precision, raw_eval.recall, raw_eval.true_positives, raw_eval.false_positives, raw_eval.false_negatives
    );
    let pass = eval.recall >= 0.9 && eval.precision >= 0.8 && fpr < 0.01;
    outcome(
        pass,
        format!(
            "standardized cs: recall {:.3} (≥0.9), precision {:.3} (≥0.8), tp {} fp {} fn {}, clean-clone FPR {:.4} (<0.01)",
            eval.recall, eval.precision, eval.true_positives, eval.false_positives, eval.false_negatives, fpr
        ),
    )
}

fn training_behavior() -> Outcome {
    let start = Timestamp::from_ymd(2014, 1, 1).expect("date");
    let rows = (0..24 * 60)
        .map(|i| {
            let ts = start + i as i64 * HOUR;
            let cal = ts.calendar();
            let c = 100.0 + 30.0 * (2.0 * std::f64::consts::PI * i as f64 / 24.0).sin();
            FeatureRow {
                timestamp: ts,
                consumption: c,
                lag1: 0.0,
                lag2: 0.0,
                day_shift: 0.0,
                month_shift: 0.0,
                temperature: 10.0,
                holiday: 0,
                weekday: cal.weekday,
                hour: cal.hour,
                month: cal.month,
                day: cal.day,
            }
        })
        .collect();
    let frame = FeatureFrame::from_rows(rows).expect("frame");
    let norm = Normalization::fit(&frame.consumption()).expect("norm");
    let windows = make_windows(&frame, 24, 1, &norm).expect("windows");
    let cfg = TrainConfig { epochs: 30, patience: None, ..TrainConfig::default() };
    let fit = || {
        let mut model = ConvAutoencoder::canonical(24);
        model.init_weights(cfg.seed);
        model.set_normalization(norm);
        let report = train(&mut model, &windows, &cfg).expect("train");
        (model_file::encode(&model), report)
    };
    let (a, report) = fit();
    let (b, _) = fit();
    let ratio = report.final_train_loss() / report.initial_train_loss;
    let pass = ratio <= 0.1 && a == b;
    outcome(
        pass,
        format!(
            "initial {:.4}, final {:.4} (ratio {ratio:.4} ≤ 0.1) after {} epochs; model files identical {}",
            report.initial_train_loss,
            report.final_train_loss(),
            report.epochs_run,
            a == b
        ),
    )
}

fn statistics_fidelity() -> Outcome {
    if let Some(path) = std::env::var_os("METERSENTRY_SITE38_FEATURES") {
        let frame = metersentry::csvio::read_frame(std::path::Path::new(&path)).expect("features");
        let s = summarize(&frame.consumption()).expect("summary");
        let ad = anderson_darling(&frame.consumption()).expect("ad");
        let near = |x: f64, want: f64, tol: f64| (x - want).abs() <= tol;
        let pass = near(s.mean, 135.68, 1.0)
            && near(s.std, 50.08, 1.0)
            && s.min == 0.0
            && s.max == 425.0
            && near(s.q25, 110.0, 1.0)
            && near(s.median, 130.0, 1.0)
            && near(s.q75, 158.0, 1.0)
            && !ad.verdict
            && ad.critical_values == [(15.0, 0.576), (10.0, 0.656), (5.0, 0.787), (2.5, 0.918), (1.0, 1.092)];
        return outcome(pass, format!("dataset: {s:?}, AD {:.3} normal={}", ad.statistic, ad.verdict));
    }
    // Without the dataset: worked examples with hand-derived answers.
    let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).expect("summary");
    let summary_ok = s.mean == 4.5 && s.median == 4.5 && s.min == 1.0 && s.max == 8.0 && s.q25 == 2.75 && s.q75 == 6.25
        && (s.std - 6.0f64.sqrt()).abs() < 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let exp: Vec<f64> = (0..500).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let ad = anderson_darling(&exp).expect("ad");
    let ad_ok = !ad.verdict && ad.critical_values == [(15.0, 0.576), (10.0, 0.656), (5.0, 0.787), (2.5, 0.918), (1.0, 1.092)];
    outcome(summary_ok && ad_ok, format!("dataset absent; summary example {summary_ok}, AD rejects exponential (A²={:.2}) with fixed critical values {ad_ok}", ad.statistic))
}

/// Peak live heap bytes above the starting level while replaying `n` rows.
fn stream_peak(model: &ConvAutoencoder, gaussian: &GaussianModel, n: usize) -> (usize, usize) {
    let cfg = StreamConfig::default();
    let before = LIVE.load(Ordering::Relaxed);
    PEAK.store(before, Ordering::Relaxed);
    let mut records = 0usize;
    stream_detect(model, gaussian, synthetic_rows(n, 21).map(Ok::<_, std::convert::Infallible>), cfg, |ev| {
        if matches!(ev, StreamEvent::Record(_)) {
            records += 1;
        }
    })
    .expect("stream");
    (PEAK.load(Ordering::Relaxed) - before, records)
}

fn memory_bound() -> Outcome {
    let frame = FeatureFrame::from_rows(synthetic_rows(2000, 21).collect()).expect("frame");
    let (model, gaussian) = small_detector(&frame);
    let (small, _) = stream_peak(&model, &gaussian, 10_000);
    let (large, records) = stream_peak(&model, &gaussian, 1_000_000);
    // Ring buffer plus threshold buffer, with room for one window's activations.
    let state = (StreamConfig::default().w + 24) * std::mem::size_of::<f64>();
    let budget = state + 64 * 1024;
    let pass = large <= small + 1024 && large <= budget && records == 1_000_000 - 23;
    outcome(pass, format!("peak live bytes {small} at 10⁴ rows, {large} at 10⁶ rows (budget {budget}, (w+24)·8 = {state})"))
}

/// Name, time budget in seconds, check.
type Check = (&'static str, u64, fn() -> Outcome);

fn main() {
    let checks: [Check; 9] = [
        ("architecture fidelity", 1, architecture),
        ("gradient correctness", 30, gradients),
        ("mahalanobis oracle", 5, mahalanobis_oracle),
        ("threshold semantics", 5, threshold_semantics),
        ("batch/stream equivalence", 10, batch_stream_equivalence),
        ("end-to-end synthetic detection", 300, end_to_end),
        ("training behavior", 300, training_behavior),
        ("statistics fidelity", 60, statistics_fidelity),
        ("streaming memory bound", 600, memory_bound),
    ];
    let passed = checks.iter().filter(|(name, secs, f)| check(name, Duration::from_secs(*secs), f)).count();
    println!("acceptance: {passed}/{} passed", checks.len());
}
