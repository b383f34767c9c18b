//! Executable checks of the analytic statements: weak-form residual, energy
//! inequalities, `X(T)` norm, appendix identities and the `Q` limits.

mod appendix;
mod energy;
mod weak;

pub use appendix::{appendix_suite, q_function_suite, AppendixOptions};
pub use energy::{energy_inequality_check, pointwise_energy_probe};
pub use weak::{duality_bound_check, weak_residual, TestFunction};

use std::fmt;

use crate::solver::CoefficientPath;

/// One named check. Inequalities are one-sided: `pass` means
/// `measured <= target` unless stated otherwise in `name`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub pass: bool,
    /// Recorded only when false; does not affect [`VerificationReport::passed`].
    pub asserted: bool,
    /// Values along a refinement or limit ladder, if any.
    pub trend: Vec<f64>,
    /// Grid and tolerance parameters, `key=value` separated by `;`.
    pub params: String,
}

impl Check {
    pub fn below(name: impl Into<String>, measured: f64, target: f64, params: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            measured,
            target,
            pass: measured <= target,
            asserted: true,
            trend: Vec::new(),
            params: params.into(),
        }
    }

    pub fn with_trend(mut self, trend: Vec<f64>) -> Self {
        self.trend = trend;
        self
    }

    pub fn recorded(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn failing_if(mut self, bad: bool) -> Self {
        if bad {
            self.pass = false;
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    /// True iff every asserted check passes.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.asserted).all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.asserted && !c.pass)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
        writeln!(f, "{:<width$}  {:>12}  {:>12}  result", "check", "measured", "target")?;
        for c in &self.checks {
            let tag = match (c.pass, c.asserted) {
                (true, _) => "pass",
                (false, true) => "FAIL",
                (false, false) => "noted",
            };
            writeln!(f, "{:<width$}  {:>12.4e}  {:>12.4e}  {tag}", c.name, c.measured, c.target)?;
        }
        Ok(())
    }
}

/// `max_j |c(t_j)| + max_j |w(t_j)|`.
pub fn xt_norm(path: &CoefficientPath) -> f64 {
    path.xt_norm()
}

/// True when the sequence never increases and ends strictly below its start
/// (or is identically zero).
pub(crate) fn decays(values: &[f64]) -> bool {
    let mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if mags.iter().any(|v| !v.is_finite()) {
        return false;
    }
    if mags.iter().all(|v| *v == 0.0) {
        return true;
    }
    mags.windows(2).all(|w| w[1] <= w[0]) && mags[mags.len() - 1] < mags[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_passes_only_asserted() {
        let mut r = VerificationReport::new();
        r.push(Check::below("a", 1.0, 2.0, ""));
        r.push(Check::below("b", 3.0, 2.0, "").recorded());
        assert!(r.passed());
        r.push(Check::below("c", 3.0, 2.0, ""));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert!(r.to_string().contains("noted"));
    }

    #[test]
    fn decay_ladder() {
        assert!(decays(&[1.0, 0.5, 0.1]));
        assert!(decays(&[0.0, 0.0]));
        assert!(!decays(&[1.0, 1.0]));
        assert!(!decays(&[0.1, 0.5]));
    }
}
