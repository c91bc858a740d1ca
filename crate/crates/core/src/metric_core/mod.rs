//! Local flows, global processes and their coupling.
//!
//! A [`LocalFlow`] is a short-time solution map on a metric space. Its
//! Euler polygonals ([`euler_polygonal`]) compose many short steps, and the
//! dyadic limit of polygonals ([`refine_to_process`]) is the global process it
//! generates. [`Coupled`] builds the local flow of a pair of parametrized
//! processes, each one fed with the other's state frozen at the start of the
//! step; [`coupling_bounds`] evaluates the stability and tangency constants of
//! that coupled flow.

mod bounds;
mod coupling;
mod flow;
mod metric;
mod polygonal;

pub use bounds::{coupling_bounds, CouplingBounds};
pub use coupling::Coupled;
pub use flow::{FnFlow, LocalFlow, Process, ProcessConstants};
pub use metric::{CoupledState, Metric};
pub use polygonal::{
    euler_polygonal, euler_polygonal_trace, refine_to_process, refine_to_process_traced,
    RefineOptions, Refined,
};
