//! Flat (bounded-Lipschitz) distance between atomic measures:
//! `sup { int phi d(mu - nu) : |phi| <= 1, Lip(phi) <= 1 }`.
//!
//! For atomic measures only the values of `phi` at the atoms matter, and any
//! node values with `|phi_i| <= 1` and `|phi_{i+1} - phi_i| <= x_{i+1} - x_i`
//! extend piecewise linearly to an admissible test function. The supremum is
//! therefore the value of a chain LP, solved exactly here by dynamic
//! programming over concave piecewise-linear value functions on `[-1, 1]`.
//! Smooth test functions reach the same value by mollification, so the
//! Lipschitz formulation and the `C^1` one coincide.

use super::measure::AtomicMeasure;

/// Exact flat distance. `resolution` adds that many equally spaced
/// zero-mass nodes over the support (plus one padding node on each side);
/// since piecewise-linear test functions are already optimal these never
/// change the value, which makes the result trivially monotone in
/// `resolution`.
pub fn flat_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, resolution: usize) -> f64 {
    let mut nodes: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .copied()
        .chain(nu.atoms().iter().map(|&(x, m)| (x, -m)))
        .collect();
    if nodes.is_empty() {
        return 0.0;
    }
    let lo = nodes.iter().map(|n| n.0).fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().map(|n| n.0).fold(f64::NEG_INFINITY, f64::max);
    if resolution >= 2 {
        for k in 0..resolution {
            let x = lo + (hi - lo) * k as f64 / (resolution - 1) as f64;
            nodes.push((x, 0.0));
        }
        nodes.push((lo - 1.0, 0.0));
        nodes.push((hi + 1.0, 0.0));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    signed_chain_value(&nodes)
}

/// `max sum s_i phi_i` over `|phi_i| <= 1`, `|phi_{i+1} - phi_i| <= gap_i`
/// for nodes sorted by position.
fn signed_chain_value(nodes: &[(f64, f64)]) -> f64 {
    let mut value = Concave::linear(nodes[0].1);
    for w in nodes.windows(2) {
        let gap = w[1].0 - w[0].0;
        value = value.window_max(gap);
        value.add_linear(w[1].1);
    }
    value.max()
}

/// Concave piecewise-linear function on `[-1, 1]` given by its breakpoints.
struct Concave {
    pts: Vec<(f64, f64)>,
}

impl Concave {
    fn linear(s: f64) -> Self {
        Self {
            pts: vec![(-1.0, -s), (1.0, s)],
        }
    }

    fn max(&self) -> f64 {
        self.pts
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn add_linear(&mut self, s: f64) {
        for p in &mut self.pts {
            p.1 += s * p.0;
        }
    }

    /// `psi -> max { V(phi) : |phi - psi| <= g, |phi| <= 1 }`: the rising
    /// part moves left by `g`, the falling part right by `g`, and the top
    /// plateau widens by `2g`.
    fn window_max(&self, g: f64) -> Self {
        if g == 0.0 {
            return Self {
                pts: self.pts.clone(),
            };
        }
        let top = self.max();
        let first = self.pts.iter().position(|p| p.1 == top).unwrap_or(0);
        let last = self.pts.iter().rposition(|p| p.1 == top).unwrap_or(0);
        let mut shifted: Vec<(f64, f64)> = Vec::with_capacity(self.pts.len() + 2);
        shifted.extend(self.pts[..=first].iter().map(|&(x, y)| (x - g, y)));
        shifted.extend(self.pts[last..].iter().map(|&(x, y)| (x + g, y)));
        let at = |x: f64| interpolate(&shifted, x);
        let mut pts = vec![(-1.0, at(-1.0))];
        pts.extend(shifted.iter().copied().filter(|p| p.0 > -1.0 && p.0 < 1.0));
        pts.push((1.0, at(1.0)));
        pts.dedup_by(|b, a| b.0 == a.0);
        Self { pts }
    }
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    if x <= pts[0].0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            if x1 == x0 {
                return y0.max(y1);
            }
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    pts[pts.len() - 1].1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Lattice dynamic program over phi in {-1, -1+h, ..., 1}. With gaps that
    /// are multiples of h the chain LP has an optimal vertex on this lattice
    /// (difference constraints are totally unimodular), so this is exact.
    fn brute_force(mu: &AtomicMeasure, nu: &AtomicMeasure, h: f64) -> f64 {
        let mut nodes: Vec<(f64, f64)> = mu
            .atoms()
            .iter()
            .copied()
            .chain(nu.atoms().iter().map(|&(x, m)| (x, -m)))
            .collect();
        if nodes.is_empty() {
            return 0.0;
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let k = (1.0 / h).round() as i64;
        let levels: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
        let mut best: Vec<f64> = levels.iter().map(|p| p * nodes[0].1).collect();
        for w in nodes.windows(2) {
            let reach = ((w[1].0 - w[0].0) / h).round() as i64;
            let next: Vec<f64> = (0..levels.len() as i64)
                .map(|i| {
                    let lo = (i - reach).max(0);
                    let hi = (i + reach).min(2 * k);
                    let prev = (lo..=hi)
                        .map(|j| best[j as usize])
                        .fold(f64::NEG_INFINITY, f64::max);
                    prev + levels[i as usize] * w[1].1
                })
                .collect();
            best = next;
        }
        best.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn m(atoms: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let a = m(&[(0.5, 1.0), (2.0, 3.0)]);
        assert_eq!(flat_distance(&a, &a, 2), 0.0);
        assert_eq!(
            flat_distance(&AtomicMeasure::empty(), &AtomicMeasure::empty(), 2),
            0.0
        );
    }

    #[test]
    fn same_site_different_masses() {
        for (a, b) in [(1.0, 3.0), (2.5, 0.5), (0.0, 4.0)] {
            let d = flat_distance(&m(&[(1.0, a)]), &m(&[(1.0, b)]), 4);
            assert!((d - (a - b).abs()).abs() < 1e-12);
            let bf = brute_force(&m(&[(1.0, a)]), &m(&[(1.0, b)]), 0.125);
            assert!((d - bf).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_atoms_at_distance_h() {
        for h in [0.0, 0.25, 1.0, 1.5, 2.0, 3.0, 10.0] {
            let d = flat_distance(&m(&[(0.0, 1.0)]), &m(&[(h, 1.0)]), 8);
            assert!((d - f64::min(h, 2.0)).abs() < 1e-12, "h = {h}: {d}");
            let bf = brute_force(&m(&[(0.0, 1.0)]), &m(&[(h, 1.0)]), 0.25);
            assert!((d - bf).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_to_empty_is_total_mass() {
        let a = m(&[(0.0, 1.0), (0.1, 2.0)]);
        assert!((flat_distance(&a, &AtomicMeasure::empty(), 2) - 3.0).abs() < 1e-12);
    }

    fn dyadic_measure() -> impl Strategy<Value = AtomicMeasure> {
        prop::collection::vec((0u32..24, 0u32..16), 0..5).prop_map(|v| {
            AtomicMeasure::new(
                v.into_iter()
                    .map(|(x, w)| (x as f64 * 0.25, w as f64 * 0.125))
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn matches_the_lattice_oracle(a in dyadic_measure(), b in dyadic_measure()) {
            let d = flat_distance(&a, &b, 2);
            let bf = brute_force(&a, &b, 0.25);
            prop_assert!((d - bf).abs() < 1e-9, "{d} vs {bf}");
        }

        #[test]
        fn sits_between_mass_gap_and_variation(a in dyadic_measure(), b in dyadic_measure()) {
            let d = flat_distance(&a, &b, 2);
            prop_assert!(d + 1e-12 >= (a.mass() - b.mass()).abs());
            prop_assert!(d <= a.mass() + b.mass() + 1e-12);
        }

        #[test]
        fn metric_axioms(a in dyadic_measure(), b in dyadic_measure(), c in dyadic_measure()) {
            let ab = flat_distance(&a, &b, 2);
            prop_assert!((ab - flat_distance(&b, &a, 2)).abs() < 1e-12);
            prop_assert!(ab <= flat_distance(&a, &c, 2) + flat_distance(&c, &b, 2) + 1e-12);
        }

        #[test]
        fn resolution_does_not_change_the_value(a in dyadic_measure(), b in dyadic_measure(), r in 2usize..40) {
            let d2 = flat_distance(&a, &b, 2);
            let dr = flat_distance(&a, &b, r);
            prop_assert!(dr + 1e-12 >= d2);
            prop_assert!((dr - d2).abs() < 1e-12);
        }
    }
}
