#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod claw;
pub mod error;
pub mod harness;
pub mod ibvp;
pub mod measure_law;
pub mod metric_core;
pub mod ode;
pub mod renewal;
pub mod scenarios;
pub mod spaces;
pub mod trajectory;
pub mod transport;

pub use error::{Error, Result};
