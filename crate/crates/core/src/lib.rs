//! Core of the metersentry anomaly detector for smart-meter energy series.
//!
//! The pipeline is: [`ingest`] raw meter readings into a [`ingest::FeatureFrame`],
//! train the 1D convolutional autoencoder in [`nn`] on windows of normal
//! consumption, score each window with [`scoring`] (reconstruction error plus
//! Mahalanobis distance of the calendar/weather context) and flag anomalies with
//! the rolling dynamic threshold in [`threshold`]. [`stream`] runs the same
//! scoring online, one row at a time. [`synth`] generates labeled series for
//! end-to-end checks.
//!
//! Everything here is `no_std` + `alloc`; file formats and the CLI live in the
//! `metersentry` crate.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ingest;
pub mod linalg;
pub mod math;
pub mod nn;
pub mod pipeline;
pub mod scoring;
pub mod stats;
pub mod stream;
pub mod synth;
pub mod threshold;
pub mod time;

pub use ingest::{FeatureFrame, FeatureRow, RawPoint, RawSeries};
pub use nn::{canonical_architecture, ConvAutoencoder, Normalization, WindowSet};
pub use scoring::{CsMode, GaussianModel, ScoreRecord};
pub use threshold::{AnomalyRecord, ThresholdState};
pub use time::Timestamp;
