//! Seeded random strong subsolutions `v = bubble + κ + H` with `H` harmonic and `|H| <= κ`.
//!
//! The bubble solves `-Δb = e^{b+h_α}`, so `-Δv = e^{b+h_α} <= e^{v+h_α}` whenever `κ + H >= 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cosmic::{bubble_family, Bubble, BubbleKind};
use crate::error::{precondition, Result};
use crate::grid::Field2d;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomSubsolution {
    pub bubble: Bubble,
    pub kappa: f64,
    /// Coefficients of `x`, `y`, `x² - y²`, `xy`.
    pub harmonic: [f64; 4],
}

impl RandomSubsolution {
    /// Draws a sample valid on `|x| <= radius`.
    pub fn sample(seed: u64, alpha: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return precondition(format!("sampling radius must be positive, got {radius}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = rng.gen_range(0.5..2.0);
        let kappa = rng.gen_range(0.05..0.5);
        let raw: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let bound = (raw[0].abs() + raw[1].abs()) * radius + (raw[2].abs() + 0.5 * raw[3].abs()) * radius * radius;
        let share = rng.gen_range(0.0..1.0) * kappa / bound.max(1e-300);
        let kind = if alpha == 0.0 {
            BubbleKind::Flat
        } else {
            BubbleKind::Singular { alpha }
        };
        Ok(Self {
            bubble: bubble_family(kind, lambda)?,
            kappa,
            harmonic: raw.map(|c| c * share),
        })
    }

    pub fn harmonic_part(&self, x: f64, y: f64) -> f64 {
        let c = &self.harmonic;
        c[0] * x + c[1] * y + c[2] * (x * x - y * y) + c[3] * x * y
    }
}

impl Field2d for RandomSubsolution {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.bubble.value(x, y) + self.kappa + self.harmonic_part(x, y)
    }
}
