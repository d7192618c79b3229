//! The conformal weight `V̂ e^{g} |x|^{-2α}` and its comparison curvature.

use std::fmt;
use std::sync::Arc;

use crate::error::{precondition, Result};
use crate::grid::{Field2d, ScalarField};

/// A coefficient function of the plane.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    Field(Arc<ScalarField>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
            Coefficient::Field(s) => write!(f, "Field({}x{})", s.grid.nx, s.grid.ny),
        }
    }
}

impl Coefficient {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(x, y),
            Coefficient::Field(s) => s.interpolate(x, y),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            _ => None,
        }
    }
}

impl Field2d for Coefficient {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y)
    }
}

/// Weight data: cone order `alpha`, bounded factor `vhat`, subharmonic `g`, comparison curvature `k0`.
#[derive(Debug, Clone)]
pub struct ConformalWeight {
    pub alpha: f64,
    pub k0: f64,
    vhat: Coefficient,
    vhat_low: f64,
    vhat_high: f64,
    g: Coefficient,
}

impl ConformalWeight {
    /// Weight with `V̂ ≡ 1` and `g ≡ 0`.
    pub fn new(alpha: f64, k0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return precondition(format!("cone order must lie in [0, 1), got {alpha}"));
        }
        if !(k0 >= 0.0 && k0.is_finite()) {
            return precondition(format!("comparison curvature must be nonnegative, got {k0}"));
        }
        Ok(Self {
            alpha,
            k0,
            vhat: Coefficient::Constant(1.0),
            vhat_low: 1.0,
            vhat_high: 1.0,
            g: Coefficient::Constant(0.0),
        })
    }

    /// Sets `V̂` with its essential bounds `0 < low <= V̂ <= high`.
    pub fn with_vhat(mut self, vhat: Coefficient, low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return precondition(format!(
                "V̂ bounds must satisfy 0 < low <= high < inf, got [{low}, {high}]"
            ));
        }
        if let Some(c) = vhat.as_constant() {
            if c < low || c > high {
                return precondition(format!("constant V̂ = {c} violates its bounds [{low}, {high}]"));
            }
        }
        self.vhat = vhat;
        self.vhat_low = low;
        self.vhat_high = high;
        Ok(self)
    }

    pub fn with_constant_vhat(self, c: f64) -> Result<Self> {
        self.with_vhat(Coefficient::Constant(c), c, c)
    }

    pub fn with_g(mut self, g: Coefficient) -> Self {
        self.g = g;
        self
    }

    pub fn vhat(&self) -> &Coefficient {
        &self.vhat
    }

    pub fn vhat_bounds(&self) -> (f64, f64) {
        (self.vhat_low, self.vhat_high)
    }

    pub fn g(&self) -> &Coefficient {
        &self.g
    }

    /// Whether `V̂ ≡ 1` exactly.
    pub fn vhat_is_unit(&self) -> bool {
        self.vhat.as_constant() == Some(1.0)
    }

    /// `K̂ = V̂ / 2`.
    #[inline]
    pub fn khat(&self, x: f64, y: f64) -> f64 {
        0.5 * self.vhat.eval(x, y)
    }

    /// `h_α = -2α log|x|`.
    #[inline]
    pub fn h_alpha(&self, x: f64, y: f64) -> f64 {
        if self.alpha == 0.0 {
            0.0
        } else {
            -self.alpha * (x * x + y * y).ln()
        }
    }

    /// Same weight with the comparison curvature replaced.
    pub fn with_k0(&self, k0: f64) -> Result<Self> {
        let mut w = Self::new(self.alpha, k0)?;
        w.vhat = self.vhat.clone();
        w.vhat_low = self.vhat_low;
        w.vhat_high = self.vhat_high;
        w.g = self.g.clone();
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ConformalWeight::new(1.0, 0.5).is_err());
        assert!(ConformalWeight::new(-0.1, 0.5).is_err());
        assert!(ConformalWeight::new(0.3, -1.0).is_err());
        let w = ConformalWeight::new(0.3, 0.5).unwrap();
        assert!(w.vhat_is_unit());
        assert!(w.clone().with_vhat(Coefficient::Constant(2.0), 0.5, 1.5).is_err());
        assert!(w.clone().with_vhat(Coefficient::Constant(1.0), 0.0, 1.5).is_err());
        let w3 = w.with_constant_vhat(3.0).unwrap();
        assert_eq!(w3.khat(0.2, 0.1), 1.5);
        assert!(!w3.vhat_is_unit());
    }

    #[test]
    fn singular_exponent() {
        let w = ConformalWeight::new(0.5, 0.0).unwrap();
        assert!((w.h_alpha(2.0, 0.0) - (-2f64.ln())).abs() < 1e-15);
        assert_eq!(w.h_alpha(1.0, 0.0), 0.0);
    }
}
