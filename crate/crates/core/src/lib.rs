//! Coupled-network synthesis of battery cycling data.
//!
//! Limited cycling data gets stretched by training two small feedforward
//! networks per battery parameter: a ChargeNet that maps a discharge
//! profile to the next cycle's charge profile and a DischargeNet that maps
//! a charge profile to its own cycle's discharge profile. Chaining them
//! feeds each output to the opposite network, emitting one synthetic
//! half-cycle per hop until an accumulated-error budget runs out.
//!
//! Modules:
//!
//! - [`nn`]: dense feedforward engine: forward, MSE loss, hand-derived
//!   gradients, Adam, seeded training loop
//! - [`dataset`]: CSV ingestion, phase segmentation, SOC conversion,
//!   padding/resampling/normalization, pair building, fixture generator
//! - [`tuner`]: budgeted grid search over depth x width
//! - [`coupled`]: hop prediction, hop-error calibration, chain generation
//!   and synthetic-data export
//! - [`metrics`]: MSE/MAE/RMSE, per-cycle reports, cycle trends
//! - [`model_io`]: JSON model files and atomic writes
//!
//! Everything is deterministic given explicit seeds; nothing reads the
//! clock or ambient randomness.

pub mod coupled;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model_io;
pub mod nn;
pub mod tuner;

pub use coupled::{
    export_chain, ChainConfig, ChainMeta, CoupledModel, ExportOptions, GenerationChain,
    PhysicalBounds, SeedProfile, StopReason,
};
pub use dataset::{
    build_pairs, denormalize, make_fixture, normalize, pad_tail, parse_csv,
    parse_csv_segment_by_slope, parse_csv_str, processed_profile, resample_linear, segment,
    soc_from_charge, training_stats, write_csv, AlignedPair, CycleSample, Direction, NormStats,
    PairSet, Parameter, Phase, PhaseProfile, Provenance, SegmentOptions,
};
pub use error::{Error, Result};
pub use metrics::{cycle_trend, evaluate, EvalReport, MetricsReport, TrendSlopes};
pub use nn::{
    backward, loss_mse, param_count, train, Activation, AdamState, Architecture, Gradients,
    LossValue, ModelWeights, NormStatsPair, TrainConfig, TrainReport,
};
pub use tuner::{
    enumerate_grid, shared_architecture, tune, tuning_slice, CandidateResult, GridSpec, TuneOutcome,
};
