use serde::{Deserialize, Serialize};

use super::flow::LocalFlow;
use super::metric::Metric;
use crate::error::{Error, Result};

/// Euler `eps`-polygonal of `flow` over `[t0, t0 + tau]`:
///
/// `F(tau - k eps, t0 + k eps) o F(eps, t0 + (k-1) eps) o ... o F(eps, t0) x`
/// with `k = floor(tau / eps)`.
///
/// Steps are applied in increasing order and step times are computed as
/// `t0 + h * eps`, so the result is bit-reproducible. Every intermediate point
/// is checked against the flow's domain predicate at its own time.
pub fn euler_polygonal<F: LocalFlow>(
    flow: &F,
    tau: f64,
    t0: f64,
    x: &F::State,
    eps: f64,
) -> Result<F::State> {
    polygonal_impl(flow, tau, t0, x, eps, |_, _| {})
}

/// Like [`euler_polygonal`], but returns every node `(t, x)` of the polygonal,
/// starting with `(t0, x)`.
pub fn euler_polygonal_trace<F: LocalFlow>(
    flow: &F,
    tau: f64,
    t0: f64,
    x: &F::State,
    eps: f64,
) -> Result<Vec<(f64, F::State)>> {
    let mut nodes = vec![(t0, x.clone())];
    polygonal_impl(flow, tau, t0, x, eps, |t, s| nodes.push((t, s.clone())))?;
    Ok(nodes)
}

fn polygonal_impl<F: LocalFlow>(
    flow: &F,
    tau: f64,
    t0: f64,
    x: &F::State,
    eps: f64,
    mut visit: impl FnMut(f64, &F::State),
) -> Result<F::State> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "polygonal step must be positive and finite, got {eps}"
        )));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "polygonal length must be nonnegative and finite, got {tau}"
        )));
    }
    if eps > flow.delta() {
        return Err(Error::StepTooLarge {
            step: eps,
            delta: flow.delta(),
        });
    }
    let k = (tau / eps).floor() as usize;
    let mut state = x.clone();
    for h in 0..k {
        let t = t0 + h as f64 * eps;
        state = flow.evaluate(eps, t, &state).map_err(|e| with_step(e, h))?;
        let t_next = t0 + (h + 1) as f64 * eps;
        if !flow.in_domain(t_next, &state) {
            return Err(Error::DomainExit {
                component: None,
                step: Some(h),
                time: t_next,
            });
        }
        visit(t_next, &state);
    }
    let rest = tau - k as f64 * eps;
    if rest > 0.0 {
        let t = t0 + k as f64 * eps;
        state = flow
            .evaluate(rest, t, &state)
            .map_err(|e| with_step(e, k))?;
        if !flow.in_domain(t0 + tau, &state) {
            return Err(Error::DomainExit {
                component: None,
                step: Some(k),
                time: t0 + tau,
            });
        }
        visit(t0 + tau, &state);
    }
    Ok(state)
}

fn with_step(e: Error, h: usize) -> Error {
    match e {
        Error::DomainExit {
            component,
            step: None,
            time,
        } => Error::DomainExit {
            component,
            step: Some(h),
            time,
        },
        other => other,
    }
}

/// Dyadic refinement schedule: levels `j0..=j_max`, `eps_j = tau / 2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub j0: u32,
    pub j_max: u32,
    /// Stop once two successive levels are closer than this.
    pub tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            j0: 0,
            j_max: 8,
            tol: 1e-6,
        }
    }
}

/// Outcome of [`refine_to_process`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refined<S> {
    /// Polygonal at the last level evaluated.
    pub state: S,
    /// Distance between the last two levels.
    pub gap: f64,
    /// Last level evaluated.
    pub level: u32,
    /// `false` when `j_max` was reached with `gap >= tol`.
    pub converged: bool,
}

/// Approximates the process generated by `flow`, `P(t0 + tau, t0) x`, by
/// halving the polygonal step from `tau / 2^j0` until successive results are
/// closer than `tol` or `j_max` is reached.
pub fn refine_to_process<F>(
    flow: &F,
    tau: f64,
    t0: f64,
    x: &F::State,
    opts: RefineOptions,
) -> Result<Refined<F::State>>
where
    F: LocalFlow,
    F::State: Metric,
{
    refine_impl(flow, tau, t0, x, opts, |flow, eps| {
        euler_polygonal(flow, tau, t0, x, eps)
    })
}

/// [`refine_to_process`] that also returns the nodes of the accepted level's
/// polygonal.
pub fn refine_to_process_traced<F>(
    flow: &F,
    tau: f64,
    t0: f64,
    x: &F::State,
    opts: RefineOptions,
) -> Result<(Refined<F::State>, Vec<(f64, F::State)>)>
where
    F: LocalFlow,
    F::State: Metric,
{
    let mut trace = Vec::new();
    let refined = refine_impl(flow, tau, t0, x, opts, |flow, eps| {
        trace = euler_polygonal_trace(flow, tau, t0, x, eps)?;
        Ok(trace
            .last()
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| x.clone()))
    })?;
    if trace.is_empty() {
        trace.push((t0, x.clone()));
    }
    Ok((refined, trace))
}

fn refine_impl<F>(
    flow: &F,
    tau: f64,
    _t0: f64,
    x: &F::State,
    opts: RefineOptions,
    mut level: impl FnMut(&F, f64) -> Result<F::State>,
) -> Result<Refined<F::State>>
where
    F: LocalFlow,
    F::State: Metric,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "refinement tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if opts.j_max <= opts.j0 {
        return Err(Error::InvalidArgument(format!(
            "refinement needs j_max > j0 (got j0 = {}, j_max = {})",
            opts.j0, opts.j_max
        )));
    }
    if tau == 0.0 {
        return Ok(Refined {
            state: x.clone(),
            gap: 0.0,
            level: opts.j0,
            converged: true,
        });
    }
    let eps = |j: u32| tau / 2f64.powi(j as i32);
    let mut prev = level(flow, eps(opts.j0))?;
    let mut gap = f64::INFINITY;
    for j in opts.j0 + 1..=opts.j_max {
        let cur = level(flow, eps(j))?;
        gap = cur.distance(&prev);
        if gap < opts.tol {
            return Ok(Refined {
                state: cur,
                gap,
                level: j,
                converged: true,
            });
        }
        prev = cur;
    }
    Ok(Refined {
        state: prev,
        gap,
        level: opts.j_max,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::FnFlow;
    use proptest::prelude::*;

    fn translation() -> FnFlow<f64, impl Fn(f64, f64, &f64) -> f64> {
        FnFlow::new(1.0, |tau: f64, _t0: f64, x: &f64| x + tau)
    }

    /// Explicit Euler step of u' = w, w' = -u.
    fn rotation() -> FnFlow<Vec<f64>, impl Fn(f64, f64, &Vec<f64>) -> Vec<f64>> {
        FnFlow::new(1.0, |tau: f64, _t0: f64, x: &Vec<f64>| {
            vec![x[0] + tau * x[1], x[1] - tau * x[0]]
        })
    }

    #[test]
    fn zero_length_is_identity() {
        let f = rotation();
        let x = vec![0.3, -0.7];
        for eps in [1e-3, 0.1, 1.0] {
            assert_eq!(euler_polygonal(&f, 0.0, 0.2, &x, eps).unwrap(), x);
        }
    }

    #[test]
    fn coarse_step_is_a_single_flow_step() {
        let f = rotation();
        let x = vec![1.0, 0.5];
        let direct = f.evaluate(0.4, 0.0, &x).unwrap();
        assert_eq!(euler_polygonal(&f, 0.4, 0.0, &x, 0.4).unwrap(), direct);
        assert_eq!(euler_polygonal(&f, 0.4, 0.0, &x, 0.9).unwrap(), direct);
    }

    #[test]
    fn translation_is_reproduced_for_every_step() {
        let f = translation();
        for eps in [0.5, 0.25, 0.125, 1.0 / 1024.0] {
            assert_eq!(euler_polygonal(&f, 0.75, 0.0, &2.0, eps).unwrap(), 2.75);
        }
    }

    #[test]
    fn step_larger_than_delta_is_rejected() {
        let f = translation();
        let err = euler_polygonal(&f, 0.5, 0.0, &0.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    struct BoundedTranslation;
    impl LocalFlow for BoundedTranslation {
        type State = f64;
        fn delta(&self) -> f64 {
            1.0
        }
        fn evaluate(&self, tau: f64, _t0: f64, x: &f64) -> Result<f64> {
            Ok(x + tau)
        }
        fn in_domain(&self, _t: f64, x: &f64) -> bool {
            *x <= 1.0
        }
    }

    #[test]
    fn domain_exit_reports_the_failing_step() {
        let err = euler_polygonal(&BoundedTranslation, 2.0, 0.0, &0.0, 0.25).unwrap_err();
        // x after step h is 0.25 (h + 1): first value above 1 is at h = 4.
        assert_eq!(
            err,
            Error::DomainExit {
                component: None,
                step: Some(4),
                time: 1.25
            }
        );
    }

    #[test]
    fn trace_starts_at_initial_point_and_ends_at_polygonal() {
        let f = rotation();
        let x = vec![1.0, 0.0];
        let trace = euler_polygonal_trace(&f, 1.0, 0.0, &x, 0.3).unwrap();
        assert_eq!(trace.len(), 5);
        assert_eq!(trace[0], (0.0, x.clone()));
        assert_eq!(trace.last().unwrap().0, 1.0);
        assert_eq!(
            trace.last().unwrap().1,
            euler_polygonal(&f, 1.0, 0.0, &x, 0.3).unwrap()
        );
    }

    #[test]
    fn refining_a_translation_converges_immediately() {
        let opts = RefineOptions {
            j0: 0,
            j_max: 6,
            tol: 1e-12,
        };
        let r = refine_to_process(&translation(), 0.5, 0.0, &1.0, opts).unwrap();
        assert!(r.converged);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.level, 1);
        assert_eq!(r.state, 1.5);
    }

    #[test]
    fn infinite_tolerance_stops_after_first_comparison() {
        let opts = RefineOptions {
            j0: 2,
            j_max: 10,
            tol: f64::INFINITY,
        };
        let f = rotation();
        let x = vec![1.0, 0.0];
        let r = refine_to_process(&f, 1.0, 0.0, &x, opts).unwrap();
        assert_eq!(r.level, 3);
        let coarse = euler_polygonal(&f, 1.0, 0.0, &x, 0.25).unwrap();
        let next = euler_polygonal(&f, 1.0, 0.0, &x, 0.125).unwrap();
        assert_eq!(r.gap, next.distance(&coarse));
        assert_eq!(r.state, next);
    }

    #[test]
    fn rotation_gaps_decay_at_first_order() {
        let f = rotation();
        let x = vec![1.0, 0.0];
        let exact = vec![1f64.cos(), -(1f64.sin())];
        let errors: Vec<f64> = (3..=10)
            .map(|j| {
                euler_polygonal(&f, 1.0, 0.0, &x, 2f64.powi(-j))
                    .unwrap()
                    .distance(&exact)
            })
            .collect();
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 0.9, "observed order {order}");
        }
    }

    #[test]
    fn unconverged_refinement_is_flagged() {
        let opts = RefineOptions {
            j0: 0,
            j_max: 2,
            tol: 1e-12,
        };
        let r = refine_to_process(&rotation(), 1.0, 0.0, &vec![1.0, 0.0], opts).unwrap();
        assert!(!r.converged);
        assert!(r.gap > 1e-12);
    }

    proptest! {
        #[test]
        fn discrete_semigroup_is_bit_exact(
            k1 in 0usize..20,
            k2 in 0usize..20,
            e in 2i32..8,
            u in -2.0f64..2.0,
            w in -2.0f64..2.0,
        ) {
            let f = rotation();
            let eps = 2f64.powi(-e);
            let tau1 = k1 as f64 * eps;
            let tau2 = k2 as f64 * eps;
            let x = vec![u, w];
            let first = euler_polygonal(&f, tau1, 0.0, &x, eps).unwrap();
            let split = euler_polygonal(&f, tau2, tau1, &first, eps).unwrap();
            let whole = euler_polygonal(&f, tau1 + tau2, 0.0, &x, eps).unwrap();
            prop_assert_eq!(split, whole);
        }
    }
}
