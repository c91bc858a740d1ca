use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{
    euler_polygonal_trace, refine_to_process_traced, LocalFlow, Metric, RefineOptions,
};

/// Start, length and macro step of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    #[serde(default)]
    pub t0: f64,
    pub horizon: f64,
    pub macro_step: f64,
}

impl TimeSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::config("time.t0", "must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("time.horizon", "must be positive"));
        }
        if !(self.macro_step > 0.0) {
            return Err(Error::config("time.macro_step", "must be positive"));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.horizon
    }
}

/// Refinement statistics of a marched run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MarchStats {
    pub macro_steps: usize,
    pub max_level: u32,
    pub unconverged: usize,
    pub max_gap: f64,
}

/// Node of a marched run handed to the observer.
pub struct Node<'a, S> {
    pub t: f64,
    pub state: &'a S,
    /// Start and length of the macro step the node belongs to.
    pub t_start: f64,
    pub tau: f64,
}

/// Marches `x0` over `[t0, t0 + horizon]` in macro steps of length
/// `macro_step` (the last one shortened). Each macro step builds a fresh
/// flow with `build(t_start, tau)` and refines its polygonal; `visit` sees
/// the initial point and then every node of each accepted polygonal.
pub fn march<S, F>(
    time: &TimeSpec,
    x0: S,
    opts: RefineOptions,
    build: impl FnMut(f64, f64) -> Result<F>,
    visit: impl FnMut(Node<'_, S>) -> Result<()>,
) -> Result<(S, MarchStats)>
where
    S: Clone + Metric,
    F: LocalFlow<State = S>,
{
    march_with(time, x0, Schedule::Refine(opts), build, visit)
}

/// Like [`march`], with the polygonal of every macro step taken at the
/// single level `eps = tau / 2^level`.
pub fn march_at_level<S, F>(
    time: &TimeSpec,
    x0: S,
    level: u32,
    build: impl FnMut(f64, f64) -> Result<F>,
    visit: impl FnMut(Node<'_, S>) -> Result<()>,
) -> Result<(S, MarchStats)>
where
    S: Clone + Metric,
    F: LocalFlow<State = S>,
{
    march_with(time, x0, Schedule::Level(level), build, visit)
}

#[derive(Clone, Copy)]
enum Schedule {
    Refine(RefineOptions),
    Level(u32),
}

fn march_with<S, F>(
    time: &TimeSpec,
    x0: S,
    schedule: Schedule,
    mut build: impl FnMut(f64, f64) -> Result<F>,
    mut visit: impl FnMut(Node<'_, S>) -> Result<()>,
) -> Result<(S, MarchStats)>
where
    S: Clone + Metric,
    F: LocalFlow<State = S>,
{
    time.validate()?;
    let n = ((time.horizon / time.macro_step) * (1.0 - 1e-12))
        .ceil()
        .max(1.0) as usize;
    let mut stats = MarchStats::default();
    let mut x = x0;
    visit(Node {
        t: time.t0,
        state: &x,
        t_start: time.t0,
        tau: time.macro_step.min(time.horizon),
    })?;
    for k in 0..n {
        let t_start = time.t0 + k as f64 * time.macro_step;
        let t_end = if k + 1 == n {
            time.end()
        } else {
            time.t0 + (k + 1) as f64 * time.macro_step
        };
        let tau = t_end - t_start;
        let flow = build(t_start, tau)?;
        let trace = match schedule {
            Schedule::Refine(opts) => {
                let (refined, trace) = refine_to_process_traced(&flow, tau, t_start, &x, opts)?;
                stats.max_level = stats.max_level.max(refined.level);
                stats.max_gap = stats.max_gap.max(refined.gap);
                stats.unconverged += usize::from(!refined.converged);
                trace
            }
            Schedule::Level(level) => {
                stats.max_level = level;
                euler_polygonal_trace(&flow, tau, t_start, &x, tau / 2f64.powi(level as i32))?
            }
        };
        for (t, s) in trace.iter().skip(1) {
            visit(Node {
                t: *t,
                state: s,
                t_start,
                tau,
            })?;
        }
        stats.macro_steps += 1;
        x = trace.into_iter().next_back().map(|(_, s)| s).unwrap_or(x);
    }
    Ok((x, stats))
}
