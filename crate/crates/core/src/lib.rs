//! Numerical toolkit for superattracting fixed points of quasiregular maps.

// `!(x > 0.0)` is used deliberately so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_report;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod g_example;
pub mod inf_space;
pub mod local_metrics;
pub mod map_catalog;
pub mod point;
pub mod poly_type;
pub mod report;

pub use error::{Error, Result};
pub use map_catalog::{Branch, DilatationProfile, Domain, MapSpec};
pub use point::{LogPoint, Point};
