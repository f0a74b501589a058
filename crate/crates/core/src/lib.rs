//! Simulation and verification toolkit for two-dimensional fractional
//! Brownian motion in Brownian time, `Z_t = (X^1_{Y_t}, X^2_{Y_t})`.
//!
//! - [`fgn`]: covariance kernels and exact samplers of two-sided fBm.
//! - [`skeleton`]: the random-walk skeleton of the Brownian clock.
//! - [`calculus`]: Hermite polynomials, the midpoint Taylor table, test functions.
//! - [`variations`]: weighted power variations on both clocks.
//! - [`limitlaw`]: constants and correction-term samplers at `H = 1/6`.
//! - [`stats`]: two-sample distances, rate fits, Monte-Carlo harness.
//! - [`studies`]: replication kernels used by the experiments.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod fgn;
pub mod limitlaw;
pub mod rng;
pub mod skeleton;
pub mod stats;
pub mod studies;
pub mod variations;

pub use calculus::{Field2D, HermiteExpansion, MidpointTaylorTable, PartialField, Polynomial2D, TestFunction2D};
pub use error::{Error, Result};
pub use fgn::{DyadicLevel, FbmGridPath2D, FgnSampler, HurstExponent, RhoSeriesResult};
pub use limitlaw::{CorrectionSample, CorrectionSampler, KappaConstants};
pub use skeleton::{CrossingTable, SkeletonPath};
pub use stats::{RateFit, Summary, TwoSampleResult};
pub use variations::{StatisticKind, StatisticParams, VariationStatistic};
