//! Collaborative auto-positioning for radio-based localization networks.
//!
//! Nodes of a network estimate their own coordinates from inter-node ranges,
//! without any surveyed reference. The crate contains:
//!
//! * [`simulator`]: seeded ranging simulator with LOS noise, lognormal
//!   multipath bias, uniform outliers and distance-dependent failures,
//! * [`closed_form`]: closed-form frame construction plus least-squares
//!   trilateration (the baseline),
//! * [`cgp`]: collaborative grid positioning, a histogram filter per node that
//!   propagates the uncertainty of already-estimated nodes into the likelihood,
//! * [`eval`]: RMSE, sigma quantiles, ECDFs and success rates,
//! * [`runner`] and [`config`]: TOML-driven batch runs writing CSV reports.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `autopos` binary runs scenario files.
//!
//! ```
//! use autopos::closed_form::place_frame_anchors;
//!
//! let [a0, a1, a2] = place_frame_anchors(4.0, 13f64.sqrt(), 13f64.sqrt()).unwrap();
//! assert_eq!((a0.x, a1.x), (0.0, 4.0));
//! assert!((a2.x - 2.0).abs() < 1e-12 && (a2.y - 3.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgp;
pub mod closed_form;
pub mod config;
pub mod error;
pub mod eval;
pub mod network;
pub mod runner;
pub mod simulator;

pub use error::{Error, Result};
pub use network::{
    euclidean_distance, trace, Constellation, CovarianceMatrix2, ErrorClass, MeasurementMatrix, NodeEstimate, NodeId,
    NodePosition, RangeSample, RangingMeasurement,
};
