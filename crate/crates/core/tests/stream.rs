use metersentry_core::ingest::{prepare, FeatureFrame, FeatureRow, HolidayTable, PrepareConfig};
use metersentry_core::nn::{make_windows, TrainConfig};
use metersentry_core::pipeline::{fit_detector, FitConfig, FittedDetector};
use metersentry_core::scoring::score_series;
use metersentry_core::stream::{detect_frame, stream_detect, StreamConfig, StreamError, StreamEvent};
use metersentry_core::synth::{generate, SynthConfig};
use metersentry_core::threshold::detect;
use metersentry_core::time::HOUR;

fn frame(seed: u64, days: usize) -> FeatureFrame {
    let s = generate(&SynthConfig { days, seed, noise_std: 3.0, ..SynthConfig::default() }.with_spikes(5, 30.0, 24 * 31)).unwrap();
    prepare(&s.to_raw_series(0.0).unwrap(), &s.weather_table(), &HolidayTable::default(), &PrepareConfig::default()).unwrap().0
}

fn fitted() -> FittedDetector {
    let cfg = FitConfig { train: TrainConfig { epochs: 2, ..TrainConfig::default() }, ..FitConfig::default() };
    fit_detector(&frame(1, 45), &cfg).unwrap()
}

fn collect(fit: &FittedDetector, rows: &[FeatureRow], config: StreamConfig) -> Vec<StreamEvent> {
    let mut events = Vec::new();
    stream_detect(&fit.model, &fit.gaussian, rows.iter().map(|r| Ok::<_, ()>(*r)), config, |e| events.push(*e)).unwrap();
    events
}

#[test]
fn unmasked_stream_equals_batch_scores_then_threshold() {
    let fit = fitted();
    let test = frame(2, 60);
    let config = StreamConfig { mask_anomalies: false, mode: fit.scaled_mode, ..StreamConfig::default() };
    let streamed: Vec<_> = collect(&fit, test.rows(), config)
        .into_iter()
        .filter_map(|e| if let StreamEvent::Record(r) = e { Some(r) } else { None })
        .collect();
    let windows = make_windows(&test, 24, 1, &fit.model.normalization()).unwrap();
    let scores = score_series(&fit.model, &fit.gaussian, &test, &windows, config.mode).unwrap();
    let batch = detect(&scores, config.w, config.k).unwrap();
    assert_eq!(streamed.len(), batch.len());
    for (a, b) in streamed.iter().zip(&batch) {
        assert_eq!(a.timestamp, b.timestamp);
        assert_eq!(a.cs.to_bits(), b.cs.to_bits());
        assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
        assert_eq!(a.is_anomaly, b.is_anomaly);
    }
}

#[test]
fn masked_stream_equals_detect_frame() {
    let fit = fitted();
    let test = frame(3, 60);
    let config = StreamConfig { mode: fit.scaled_mode, ..StreamConfig::default() };
    let streamed: Vec<_> = collect(&fit, test.rows(), config)
        .into_iter()
        .filter_map(|e| if let StreamEvent::Record(r) = e { Some(r) } else { None })
        .collect();
    let (batch, summary) = detect_frame(&fit.model, &fit.gaussian, &test, config).unwrap();
    assert_eq!(summary.records, batch.len());
    assert_eq!(streamed.len(), test.len() - 23);
    for (a, b) in streamed.iter().zip(&batch) {
        assert_eq!(a.timestamp, b.timestamp);
        assert_eq!(a.cs.to_bits(), b.cs.to_bits());
        assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
    }
}

#[test]
fn gap_resets_window_without_emitting() {
    let fit = fitted();
    let test = frame(4, 40);
    let mut rows: Vec<FeatureRow> = test.rows()[..60].to_vec();
    for r in rows.iter_mut().skip(40) {
        r.timestamp = r.timestamp + 3 * HOUR;
    }
    let events = collect(&fit, &rows, StreamConfig::default());
    let reset = events.iter().position(|e| matches!(e, StreamEvent::Reset { .. })).unwrap();
    assert_eq!(events[reset], StreamEvent::Reset { timestamp: rows[40].timestamp, gap: 4 * HOUR });
    // 40 - 23 records before the gap; 20 rows after it never fill a window.
    assert_eq!(reset, 17);
    assert_eq!(events.len(), 18);
}

#[test]
fn out_of_order_rows_are_rejected() {
    let fit = fitted();
    let test = frame(5, 40);
    let mut rows: Vec<FeatureRow> = test.rows()[..30].to_vec();
    rows.swap(10, 11);
    let err = stream_detect(&fit.model, &fit.gaussian, rows.iter().map(|r| Ok::<_, ()>(*r)), StreamConfig::default(), |_| {})
        .unwrap_err();
    assert!(matches!(err, StreamError::Ordering { .. }));
    let err = stream_detect(&fit.model, &fit.gaussian, [Err::<FeatureRow, _>("broken")], StreamConfig::default(), |_| {})
        .unwrap_err();
    assert_eq!(err, StreamError::Source("broken"));
}
