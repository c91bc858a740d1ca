//! Concrete metric spaces: grid functions with L1, sup and total-variation
//! functionals, atomic measures with the flat distance, and step functions of
//! time for boundary data.

mod bv;
mod flat;
pub(crate) mod grid;
mod measure;

pub use bv::{bv_estimate_checks, BvCheck, BvTimeSeries};
pub use flat::flat_distance;
pub use grid::{Axis, Grid, GridFunction};
pub use measure::AtomicMeasure;
