use thiserror::Error;

/// A node where a screened inequality failed, with its signed excess.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NodeViolation {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub excess: f64,
}

impl std::fmt::Display for NodeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{}) at ({:.4},{:.4}) excess {:.3e}",
            self.i, self.j, self.x, self.y, self.excess
        )
    }
}

fn list_violations(v: &[NodeViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty stencil set")]
    EmptyStencil,

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("origin on boundary: distance {distance:.3e} is below {limit:.3e}")]
    OriginOnBoundary { distance: f64, limit: f64 },

    #[error("subsolution screen failed at {violations} of {tested} nodes; worst: {}", list_violations(.worst))]
    SubsolutionScreen {
        violations: usize,
        tested: usize,
        worst: Vec<NodeViolation>,
    },

    #[error("normalized subsolution not positive: min {min:.3e} below -{tol:.3e}")]
    NotPositive { min: f64, tol: f64 },

    #[error("degenerate subsolution: max of eta is {t_max:.3e}")]
    DegenerateSubsolution { t_max: f64 },

    #[error("mass above threshold, bound void: mass {mass:.6} >= {threshold:.6}")]
    MassAboveThreshold { mass: f64, threshold: f64 },

    #[error("profile not in decay regime; increase r_trunc (-r u' drifted by {drift:.3e} over the last decade)")]
    NotDecaying { drift: f64 },

    #[error("integrator blow-up at r = {r:.6e}")]
    Blowup { r: f64 },

    #[error("profile does not cover radius {r:.6e}")]
    OutOfRange { r: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
