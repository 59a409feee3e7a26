use serde::{Deserialize, Serialize};

/// One verified quantity: a comparison of `lhs` against `rhs` with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Largest admissible gap (or the threshold being compared against).
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Report {
    /// `|lhs − rhs| ≤ tol · max(|lhs|, |rhs|, 1e-12)`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let bound = tol * lhs.abs().max(rhs.abs()).max(1e-12);
        Self {
            check_name: name.into(),
            lhs,
            rhs,
            bound,
            tolerance: tol,
            pass: (lhs - rhs).abs() <= bound,
        }
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn close_abs(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            check_name: name.into(),
            lhs,
            rhs,
            bound: tol,
            tolerance: tol,
            pass: (lhs - rhs).abs() <= tol,
        }
    }

    /// `lhs ≤ rhs + tol`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            check_name: name.into(),
            lhs,
            rhs,
            bound: rhs + tol,
            tolerance: tol,
            pass: lhs <= rhs + tol,
        }
    }

    /// `lhs < rhs`.
    pub fn less_than(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            check_name: name.into(),
            lhs,
            rhs,
            bound: rhs,
            tolerance: 0.0,
            pass: lhs < rhs,
        }
    }

    /// Boolean outcome with the values that produced it.
    pub fn verdict(name: impl Into<String>, pass: bool, lhs: f64, rhs: f64) -> Self {
        Self {
            check_name: name.into(),
            lhs,
            rhs,
            bound: rhs,
            tolerance: 0.0,
            pass,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn all_pass(reports: &[Report]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn close_is_relative() {
        assert!(Report::close("a", 1e6, 1e6 + 1e-3, 1e-8).pass);
        assert!(!Report::close("a", 1.0, 1.0 + 1e-6, 1e-8).pass);
        assert!(Report::close("zero", 0.0, 0.0, 1e-8).pass);
    }

    #[test]
    fn serializes_with_fixed_keys() {
        let r = Report::less_than("x", 1.0, 2.0);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["bound", "check_name", "lhs", "pass", "rhs", "tolerance"]);
    }
}
