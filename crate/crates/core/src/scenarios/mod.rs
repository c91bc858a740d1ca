//! Concrete coupled systems and the macro-step driver that runs them.

pub mod driver;
pub mod epidemic;
pub mod kernels;
pub mod linear;
pub mod predator_prey;

pub use driver::{march, march_at_level, MarchStats, Node, TimeSpec};
pub use epidemic::{
    run_epidemic, run_epidemic_at_level, EpidemicParams, EpidemicRun, EpidemicSetup, Profile,
    Series,
};
pub use kernels::Bump;
pub use linear::{rotation_exact, rotation_flow, translation_flow, Drift, RotationParams};
pub use predator_prey::{
    predator_prey_fields, run_predator_prey, run_predator_prey_at_level, PredatorPreyParams,
    PredatorPreyRun, PreyInit,
};
