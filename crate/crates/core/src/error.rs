use thiserror::Error;

/// Errors raised by the solvers, the coupler and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An iterate left the domain of a flow or a process.
    #[error("domain exit{} at t = {time}{}", component_suffix(.component), step_suffix(.step))]
    DomainExit {
        /// Which coupled component failed, if known.
        component: Option<String>,
        /// Index of the failing polygonal step, if known.
        step: Option<usize>,
        time: f64,
    },
    #[error("polygonal step {step} exceeds the local flow's maximal step {delta}")]
    StepTooLarge { step: f64, delta: f64 },
    #[error("requested time span {span} exceeds the admissible horizon {horizon}")]
    HorizonExceeded { span: f64, horizon: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("domain radius is negative ({radius}): configuration violates T <= R/(2 F_inf)")]
    NegativeRadius { radius: f64 },
    #[error(
        "horizon unreachable: continuation stalled at t = {reached} after {segments} segments"
    )]
    HorizonUnreachable { reached: f64, segments: usize },
    #[error("support clearance violated: {0}")]
    SupportClearanceViolated(String),
    #[error("inadmissible horizon: {0}")]
    InadmissibleHorizon(String),
    #[error("characteristic from (t = {t}, x = {x}) does not reach the boundary after t0 = {t0}")]
    NoCrossing { t: f64, x: f64, t0: f64 },
    #[error("boundary datum undefined at t = {0}")]
    UndefinedBoundaryDatum(f64),
    #[error("total mass {mass} exceeds the configured bound {bound}")]
    MassBlowup { mass: f64, bound: f64 },
    #[error("kernel support does not fit in the grid box: {0}")]
    KernelOutOfBox(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

fn component_suffix(component: &Option<String>) -> String {
    component
        .as_ref()
        .map(|c| format!(" in component `{c}`"))
        .unwrap_or_default()
}

fn step_suffix(step: &Option<usize>) -> String {
    step.map(|s| format!(" (step {s})")).unwrap_or_default()
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attach a component tag to a domain exit; other variants pass through.
    pub fn tagged(self, tag: &str) -> Self {
        match self {
            Error::DomainExit {
                component: None,
                step,
                time,
            } => Error::DomainExit {
                component: Some(tag.to_string()),
                step,
                time,
            },
            other => other,
        }
    }

    pub fn is_domain_exit(&self) -> bool {
        matches!(self, Error::DomainExit { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
