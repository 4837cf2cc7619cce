//! Key rates for Gaussian-modulated continuous-variable QKD over lossy,
//! noisy links, with trusted detector noise, finite-size corrections and a
//! Monte Carlo harness for the parameter-estimation statistics.
//!
//! All quadrature variances are in shot-noise units.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod finite_size;
pub mod gaussian_info;
pub mod mc_validate;
pub mod noise_model;
pub mod optimize;
pub mod output;
pub mod rate_engine;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use finite_size::{finite_key_rate, find_t_peak, FiniteRate, FiniteSizeSetup, FiniteVariant, PeakSearch};
pub use gaussian_info::{holevo_bound, mutual_information, ChannelState, ProtocolFamily, ProtocolSpec};
pub use noise_model::{ChannelLink, LinkParams, NoiseBudget, NoiseMode};
pub use rate_engine::{
    max_distance, optimize_va, rate_distance_curve, DistanceGrid, MaxDistance, MaxDistanceOptions, RateCurve,
    RateModel, RatePoint,
};
