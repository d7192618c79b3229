//! Weighted length, area and curvature-defect functionals, and Huber's inequality.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::PlanarDomain;
use crate::error::{precondition, Result};
use crate::grid::{discrete_laplacian, Field2d, GridSpec, ScalarField};
use crate::integrate::{cell_integrals, CellLattice};
use crate::report::{default_tol, CaseInfo, InequalityReport, OriginRule};
use crate::weight::{Coefficient, ConformalWeight};

const LENGTH_REL_TOL: f64 = 1e-6;
const LENGTH_MAX_DEPTH: u32 = 24;

/// Grid resolution and verdict tolerance shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discretization {
    /// Cells across the larger side of the domain's bounding box.
    pub n: usize,
    /// Overrides the default `max(1e-3, 5 h)`.
    pub tol: Option<f64>,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { n: 256, tol: None }
    }
}

impl Discretization {
    pub fn new(n: usize) -> Self {
        Self { n, tol: None }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn grid(&self, domain: &PlanarDomain) -> Result<GridSpec> {
        domain.grid(self.n)
    }

    pub fn tol_for(&self, h: f64) -> f64 {
        self.tol.unwrap_or_else(|| default_tol(h))
    }
}

/// The zero field.
pub fn zero_field(_: f64, _: f64) -> f64 {
    0.0
}

pub fn origin_rule(domain: &PlanarDomain) -> OriginRule {
    if domain.encloses([0.0, 0.0]) {
        OriginRule::Enclosed
    } else {
        OriginRule::Exterior
    }
}

/// Rejects domains whose boundary passes within `h/2` of the origin.
pub fn require_clearance(domain: &PlanarDomain, h: f64) -> Result<()> {
    domain.require_origin_clearance(0.5 * h)
}

fn midpoint_adaptive(a: [f64; 2], b: [f64; 2], phi: &dyn Fn(f64, f64) -> f64, coarse: f64, depth: u32) -> f64 {
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let half = 0.5 * (b[0] - a[0]).hypot(b[1] - a[1]);
    let l = half * phi(0.5 * (a[0] + m[0]), 0.5 * (a[1] + m[1]));
    let r = half * phi(0.5 * (m[0] + b[0]), 0.5 * (m[1] + b[1]));
    let fine = l + r;
    if depth >= LENGTH_MAX_DEPTH || (fine - coarse).abs() <= LENGTH_REL_TOL * fine.abs() {
        return fine;
    }
    midpoint_adaptive(a, m, phi, l, depth + 1) + midpoint_adaptive(m, b, phi, r, depth + 1)
}

/// Weighted length of `∂ω` for `e^{(v+g+h_α)/2} dℓ`.
pub fn weighted_boundary_length(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<f64> {
    let grid = disc.grid(domain)?;
    require_clearance(domain, grid.h)?;
    let phi = |x: f64, y: f64| (0.5 * (v.value(x, y) + w.g().eval(x, y) + w.h_alpha(x, y))).exp();
    let mut total = 0.0;
    for (a, b) in domain.segments() {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let coarse = len * phi(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
        total += midpoint_adaptive(a, b, &phi, coarse, 0);
    }
    Ok(total)
}

/// Weighted mass `∫_ω e^{v+g+h_α}` together with the excess-curvature integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedIntegrals {
    pub mass: f64,
    /// `∫_{K̂ > K₀} (K̂ - K₀) e^{v+g+h_α}` with the set decided at cell centers.
    pub excess: f64,
    pub h: f64,
}

pub fn weighted_integrals(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<WeightedIntegrals> {
    let grid = disc.grid(domain)?;
    require_clearance(domain, grid.h)?;
    let lattice = CellLattice::primal(&grid);
    let density = |x: f64, y: f64| (v.value(x, y) + w.g().eval(x, y)).exp();
    let cells = cell_integrals(domain, &lattice, w.alpha, &density);
    let mass: f64 = cells.iter().sum();
    let excess = match w.vhat().as_constant() {
        Some(c) => (0.5 * c - w.k0).max(0.0) * mass,
        None => {
            let defect = |x: f64, y: f64| (w.khat(x, y) - w.k0) * density(x, y);
            let ex = cell_integrals(domain, &lattice, w.alpha, &defect);
            (0..lattice.len())
                .filter(|&k| {
                    let c = lattice.center(k);
                    w.khat(c[0], c[1]) > w.k0
                })
                .map(|k| ex[k])
                .sum()
        }
    };
    Ok(WeightedIntegrals {
        mass,
        excess,
        h: grid.h,
    })
}

/// `M_α(ω) = ∫_ω e^{v+g+h_α}`.
pub fn weighted_area(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<f64> {
    Ok(weighted_integrals(domain, v, w, disc)?.mass)
}

/// `γ_ω(λ, K₀) = 2πλ - ∫_{K̂ > K₀} (K̂ - K₀) e^{v+g+h_α}`.
pub fn gamma_omega(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    lambda: f64,
    disc: &Discretization,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return precondition(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    Ok(2.0 * PI * lambda - weighted_integrals(domain, v, w, disc)?.excess)
}

/// Weak subharmonicity screen for `g`: `Δ_h g >= -tol` at interior stencil nodes.
pub fn check_subharmonic(domain: &PlanarDomain, g: &Coefficient, grid: &GridSpec, tol: f64) -> Result<()> {
    if g.as_constant().is_some() {
        return Ok(());
    }
    let mask = domain.rasterize(grid).mask;
    let field = ScalarField::sample(*grid, mask, |x, y| g.eval(x, y))?;
    let lap = discrete_laplacian(&field)?;
    for k in 0..grid.len() {
        if lap.mask[k] && lap.values[k] < -tol {
            let (i, j) = grid.coords(k);
            return precondition(format!(
                "g is not subharmonic: discrete Laplacian {:.3e} at ({:.4},{:.4})",
                lap.values[k],
                grid.x(i),
                grid.y(j)
            ));
        }
    }
    Ok(())
}

/// `(∫_{∂ω} e^{(g+h_α)/2})² >= 4π c ∫_ω e^{g+h_α}`, `c = 1 - α` when the origin is enclosed.
pub fn huber_check(domain: &PlanarDomain, w: &ConformalWeight, disc: &Discretization) -> Result<InequalityReport> {
    let grid = disc.grid(domain)?;
    require_clearance(domain, grid.h)?;
    let tol = disc.tol_for(grid.h);
    check_subharmonic(domain, w.g(), &grid, tol)?;
    let ell = weighted_boundary_length(domain, &zero_field, w, disc)?;
    let m = weighted_area(domain, &zero_field, w, disc)?;
    let rule = origin_rule(domain);
    let rhs = 4.0 * PI * rule.cone_factor(w.alpha) * m;
    let case = CaseInfo {
        origin_rule: rule,
        alpha: w.alpha,
        k0: w.k0,
    };
    Ok(InequalityReport::new(ell * ell, rhs, tol, case).with_strict_expected(!domain.is_simple()))
}
