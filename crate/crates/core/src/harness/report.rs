use serde::{Deserialize, Serialize};

/// One inequality `lhs <= rhs`, passing when `rhs - lhs >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The estimate the check exercises.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Wall-clock seconds; kept out of persisted reports.
    #[serde(skip)]
    pub runtime_s: f64,
}

impl Check {
    pub fn bound(
        name: impl Into<String>,
        anchor: &str,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            runtime_s: 0.0,
        }
    }

    pub fn timed(mut self, seconds: f64) -> Self {
        self.runtime_s = seconds;
        self
    }
}

/// Checks of one `verify` invocation, ordered by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub scenario: String,
    pub seed: u64,
    pub suites: Vec<String>,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(scenario: &str, seed: u64, suites: Vec<String>, mut checks: Vec<Check>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            schema: super::SCHEMA_VERSION,
            scenario: scenario.to_string(),
            seed,
            suites,
            passed,
            failed: checks.len() - passed,
            checks,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Written next to the trajectory by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub scenario: String,
    pub runtime_s: f64,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub eps: f64,
    pub error: f64,
    /// `log2(error_{j-1} / error_j)`, absent on the first row.
    pub order: Option<f64>,
}

/// Output of `converge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    /// `closed form` or `finest level`.
    pub reference: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log2 error` against `-log2 eps`.
    pub fitted_order: Option<f64>,
    /// Every error is exactly zero.
    pub exact: bool,
    /// Some refinement failed to reduce the error.
    pub no_convergence: bool,
}

impl ConvergenceTable {
    pub fn new(scenario: &str, reference: &str, levels: &[(u32, f64, f64)]) -> Self {
        let rows: Vec<ConvergenceRow> = levels
            .iter()
            .enumerate()
            .map(|(k, &(level, eps, error))| ConvergenceRow {
                level,
                eps,
                error,
                order: (k > 0).then(|| (levels[k - 1].2 / error).log2()),
            })
            .collect();
        let exact = rows.iter().all(|r| r.error == 0.0);
        let positive: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.error > 0.0)
            .map(|r| (-r.eps.log2(), r.error.log2()))
            .collect();
        let fitted_order = (positive.len() >= 2).then(|| {
            let n = positive.len() as f64;
            let mx = positive.iter().map(|p| p.0).sum::<f64>() / n;
            let my = positive.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = positive.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = positive.iter().map(|p| (p.0 - mx).powi(2)).sum();
            -sxy / sxx
        });
        let no_convergence = !exact && rows.windows(2).any(|w| !(w[1].error < w[0].error));
        Self {
            scenario: scenario.to_string(),
            reference: reference.to_string(),
            rows,
            fitted_order,
            exact,
            no_convergence,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,eps,error,order\n");
        for r in &self.rows {
            let order = match (self.exact, r.order) {
                (true, _) => "exact".to_string(),
                (false, Some(o)) => o.to_string(),
                (false, None) => String::new(),
            };
            out.push_str(&format!("{},{},{},{}\n", r.level, r.eps, r.error, order));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_passes_within_tolerance() {
        assert!(Check::bound("a", "x", 1.0, 1.0, 0.0).pass);
        assert!(Check::bound("a", "x", 1.0 + 1e-13, 1.0, 1e-12).pass);
        assert!(!Check::bound("a", "x", 2.0, 1.0, 1e-12).pass);
        assert!(!Check::bound("a", "x", f64::NAN, 1.0, 1.0).pass);
    }

    #[test]
    fn first_order_table() {
        let t = ConvergenceTable::new(
            "r",
            "closed form",
            &[(1, 0.5, 0.2), (2, 0.25, 0.1), (3, 0.125, 0.05)],
        );
        assert!((t.fitted_order.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t.rows[1].order, Some(1.0));
        assert!(!t.no_convergence && !t.exact);
        let z = ConvergenceTable::new(
            "t",
            "closed form",
            &[(1, 0.5, 0.0), (2, 0.25, 0.0), (3, 0.125, 0.0)],
        );
        assert!(z.exact && !z.no_convergence);
        assert!(z.to_csv().contains("exact"));
    }

    #[test]
    fn runtimes_stay_out_of_the_json() {
        let c = Check::bound("a", "x", 0.0, 1.0, 0.0).timed(3.5);
        let r = VerificationReport::new("zero", 1, vec![], vec![c]);
        assert!(!r.to_json().contains("runtime"));
    }
}
