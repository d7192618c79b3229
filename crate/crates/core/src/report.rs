//! Verdict reports for numerically checked inequalities.

use serde::Serialize;

/// Schema version of every serialized report.
pub const REPORT_VERSION: u32 = 1;

/// Default discretization tolerance `max(1e-3, 5 h)`.
pub fn default_tol(h: f64) -> f64 {
    (5.0 * h).max(1e-3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Process exit code: 0 for pass or inconclusive, 2 for a violation.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Inconclusive => 0,
            Verdict::Fail => 2,
        }
    }
}

/// Which constant the origin position selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginRule {
    /// The origin lies in the closure of the domain or of one of its holes: factor `1 - α`.
    Enclosed,
    /// The origin lies in the unbounded component of the complement: factor 1.
    Exterior,
}

impl OriginRule {
    /// `1 - α` when enclosed, else 1.
    pub fn cone_factor(self, alpha: f64) -> f64 {
        match self {
            OriginRule::Enclosed => 1.0 - alpha,
            OriginRule::Exterior => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseInfo {
    pub origin_rule: OriginRule,
    pub alpha: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub version: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub rel_slack: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub case: CaseInfo,
    /// Set for domains with holes, where the inequality is known to be strict.
    pub strict_expected: bool,
    /// Set by the caller when the input is a known equality case.
    pub equality_hint: bool,
}

impl InequalityReport {
    pub fn new(lhs: f64, rhs: f64, tol: f64, case: CaseInfo) -> Self {
        let slack = lhs - rhs;
        let rel_slack = slack / lhs.max(1e-300);
        let mut r = Self {
            version: REPORT_VERSION,
            lhs,
            rhs,
            slack,
            rel_slack,
            tol,
            verdict: Verdict::Pass,
            case,
            strict_expected: false,
            equality_hint: false,
        };
        r.verdict = r.classify();
        r
    }

    fn classify(&self) -> Verdict {
        if !self.rel_slack.is_finite() {
            return Verdict::Fail;
        }
        if self.equality_hint && self.rel_slack.abs() < self.tol {
            Verdict::Inconclusive
        } else if self.rel_slack >= -self.tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn with_equality_hint(mut self, hint: bool) -> Self {
        self.equality_hint = hint;
        self.verdict = self.classify();
        self
    }

    pub fn with_strict_expected(mut self, strict: bool) -> Self {
        self.strict_expected = strict;
        self
    }

    /// Whether the input saturates the inequality to within the tolerance.
    pub fn is_equality(&self) -> bool {
        self.rel_slack.abs() <= self.tol
    }
}
