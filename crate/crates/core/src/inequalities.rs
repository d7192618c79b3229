//! Alexandrov, Bol and pointwise checks for strong subsolutions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::domain::PlanarDomain;
use crate::error::{precondition, Error, Result};
use crate::geometry::{origin_rule, weighted_boundary_length, weighted_integrals, Discretization};
use crate::grid::{Field2d, GridSpec, ScalarField};
use crate::rearrangement::screen_subsolution;
use crate::report::{CaseInfo, InequalityReport, OriginRule, Verdict, REPORT_VERSION};
use crate::weight::ConformalWeight;

/// Samples `v` at every node of the discretization's grid.
pub fn sample_field(domain: &PlanarDomain, v: &dyn Field2d, disc: &Discretization) -> Result<ScalarField> {
    let grid = disc.grid(domain)?;
    ScalarField::sample(grid, vec![true; grid.len()], |x, y| v.value(x, y))
}

fn screened(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<(GridSpec, f64)> {
    let field = sample_field(domain, v, disc)?;
    let tol = disc.tol_for(field.grid.h);
    screen_subsolution(domain, &field, w, tol)?;
    Ok((field.grid, tol))
}

/// `L²_α(∂ω) >= (2 γ_ω(λ, K₀) - K₀ M_α(ω)) M_α(ω)`, `λ = 1 - α` when the origin is enclosed.
///
/// The right-hand side may be negative; no sign condition is imposed. `K₀ = 0` is allowed.
pub fn check_alexandrov(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<InequalityReport> {
    let (_, tol) = screened(domain, v, w, disc)?;
    let ell = weighted_boundary_length(domain, v, w, disc)?;
    let integrals = weighted_integrals(domain, v, w, disc)?;
    let rule = origin_rule(domain);
    let gamma = 2.0 * PI * rule.cone_factor(w.alpha) - integrals.excess;
    let m = integrals.mass;
    let rhs = (2.0 * gamma - w.k0 * m) * m;
    let case = CaseInfo {
        origin_rule: rule,
        alpha: w.alpha,
        k0: w.k0,
    };
    Ok(InequalityReport::new(ell * ell, rhs, tol, case).with_strict_expected(!domain.is_simple()))
}

fn require_unit_vhat(w: &ConformalWeight) -> Result<()> {
    if w.vhat_is_unit() {
        Ok(())
    } else {
        precondition("this check requires V̂ ≡ 1; use the Alexandrov check for general V̂")
    }
}

/// `L²_α(∂ω) >= ½ (8πλ - M_α(ω)) M_α(ω)` for `V̂ ≡ 1`; the comparison curvature is fixed at ½.
pub fn check_bol(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<InequalityReport> {
    require_unit_vhat(w)?;
    let w = w.with_k0(0.5)?;
    let (_, tol) = screened(domain, v, &w, disc)?;
    let ell = weighted_boundary_length(domain, v, &w, disc)?;
    let m = weighted_integrals(domain, v, &w, disc)?.mass;
    let rule = origin_rule(domain);
    let rhs = 0.5 * (8.0 * PI * rule.cone_factor(w.alpha) - m) * m;
    let case = CaseInfo {
        origin_rule: rule,
        alpha: w.alpha,
        k0: w.k0,
    };
    Ok(InequalityReport::new(ell * ell, rhs, tol, case).with_strict_expected(!domain.is_simple()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub version: u32,
    /// `max e^v` over the closed domain.
    pub max_interior: f64,
    /// `max e^v` over the boundary.
    pub max_boundary: f64,
    pub mass: f64,
    /// `(1 - M / (8πλ))^{-2}`.
    pub bound_factor: f64,
    /// `(bound_factor · max_boundary - max_interior) / max_boundary`.
    pub margin: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub case: CaseInfo,
}

/// Pointwise threshold `8πλ` for the given origin rule.
pub fn pointwise_threshold(rule: OriginRule, alpha: f64) -> f64 {
    8.0 * PI * rule.cone_factor(alpha)
}

/// `(1 - mass / threshold)^{-2}`, or an error when the mass reaches the threshold.
pub fn bound_factor(mass: f64, threshold: f64) -> Result<f64> {
    if !(mass < threshold) {
        return Err(Error::MassAboveThreshold { mass, threshold });
    }
    Ok((1.0 - mass / threshold).powi(-2))
}

/// Boundary points spaced at most `spacing` apart, vertices included.
fn boundary_samples(domain: &PlanarDomain, spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for (a, b) in domain.segments() {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let pieces = ((len / spacing).ceil() as usize).max(1);
        for m in 0..pieces {
            let t = m as f64 / pieces as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// `max_ω̄ e^v <= (1 - M_α/(8πλ))^{-2} max_∂ω e^v` for `V̂ ≡ 1` and `M_α < 8πλ`.
pub fn check_pointwise(
    domain: &PlanarDomain,
    v: &dyn Field2d,
    w: &ConformalWeight,
    disc: &Discretization,
) -> Result<PointwiseReport> {
    require_unit_vhat(w)?;
    let (grid, tol) = screened(domain, v, w, disc)?;
    let mass = weighted_integrals(domain, v, w, disc)?.mass;
    let rule = origin_rule(domain);
    let factor = bound_factor(mass, pointwise_threshold(rule, w.alpha))?;
    let max_boundary = boundary_samples(domain, 0.25 * grid.h)
        .iter()
        .map(|p| v.value(p[0], p[1]))
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    let mask = domain.rasterize(&grid).mask;
    let nodal_max = (0..grid.len())
        .filter(|&k| mask[k])
        .map(|k| {
            let (i, j) = grid.coords(k);
            v.value(grid.x(i), grid.y(j))
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .exp();
    let max_interior = nodal_max.max(max_boundary);
    let margin = (factor * max_boundary - max_interior) / max_boundary;
    let verdict = if margin.is_finite() && margin >= -tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PointwiseReport {
        version: REPORT_VERSION,
        max_interior,
        max_boundary,
        mass,
        bound_factor: factor,
        margin,
        tol,
        verdict,
        case: CaseInfo {
            origin_rule: rule,
            alpha: w.alpha,
            k0: w.k0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::zero_field;
    use crate::weight::Coefficient;

    fn disk(r: f64) -> PlanarDomain {
        PlanarDomain::disk([0.0, 0.0], r, 4096).unwrap()
    }

    fn bubble(x: f64, y: f64) -> f64 {
        (8.0 / (1.0 + x * x + y * y).powi(2)).ln()
    }

    #[test]
    fn bol_on_bubble_is_equality() {
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let r = check_bol(&disk(1.0), &bubble, &w, &Discretization::new(128)).unwrap();
        assert!(r.rel_slack.abs() < 1e-3, "{r:?}");
        assert!(r.is_equality());
    }

    #[test]
    fn constant_fields() {
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let d = Discretization::new(64);
        let r = check_bol(&disk(1.0), &zero_field, &w, &d).unwrap();
        assert!((r.lhs - 4.0 * PI * PI).abs() < 1e-4);
        assert!((r.rhs - 3.5 * PI * PI).abs() < 1e-4);
        assert_eq!(r.verdict, Verdict::Pass);

        let w3 = ConformalWeight::new(0.0, 1.0).unwrap().with_constant_vhat(3.0).unwrap();
        let a = check_alexandrov(&disk(1.0), &zero_field, &w3, &d).unwrap();
        assert!((a.rhs - 2.0 * PI * PI).abs() < 1e-4, "{a:?}");
        assert!((a.slack - 2.0 * PI * PI).abs() < 1e-4);
        assert!(check_bol(&disk(1.0), &zero_field, &w3, &d).is_err());
    }

    #[test]
    fn specialization_is_bitwise() {
        let w = ConformalWeight::new(0.3, 0.5).unwrap();
        let d = Discretization::new(64);
        let field = |x: f64, y: f64| -0.2 + 0.1 * x - 0.3 * y * y;
        let dom = PlanarDomain::disk([0.2, -0.1], 0.8, 1024).unwrap();
        let a = check_alexandrov(&dom, &field, &w, &d).unwrap();
        let b = check_bol(&dom, &field, &w, &d).unwrap();
        assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
        assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
    }

    #[test]
    fn origin_in_hole_keeps_cone_factor() {
        let ann = PlanarDomain::annulus([0.0, 0.0], 0.5, 1.0, 1024).unwrap();
        let w = ConformalWeight::new(0.4, 0.5).unwrap();
        let r = check_alexandrov(&ann, &zero_field, &w, &Discretization::new(64)).unwrap();
        assert_eq!(r.case.origin_rule, OriginRule::Enclosed);
        assert!(r.strict_expected);
        let off = PlanarDomain::disk([3.0, 0.0], 1.0, 1024).unwrap();
        let r = check_alexandrov(&off, &zero_field, &w, &Discretization::new(64)).unwrap();
        assert_eq!(r.case.origin_rule, OriginRule::Exterior);
    }

    #[test]
    fn pointwise_zero_field() {
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let r = check_pointwise(&disk(1.0), &zero_field, &w, &Discretization::new(128)).unwrap();
        assert!((r.bound_factor - (7.0f64 / 8.0).powi(-2)).abs() < 1e-4, "{r:?}");
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.max_interior - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_rejects_large_mass() {
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let big = |_: f64, _: f64| 2.5;
        let err = check_pointwise(&disk(1.0), &big, &w, &Discretization::new(48)).unwrap_err();
        assert!(matches!(err, Error::MassAboveThreshold { .. }), "{err}");
        assert!(bound_factor(1.0, 1.0).is_err());
        assert!(bound_factor(0.5, 1.0).unwrap() == 4.0);
    }

    #[test]
    fn non_unit_vhat_rejected() {
        let w = ConformalWeight::new(0.0, 0.5)
            .unwrap()
            .with_vhat(Coefficient::function(|x, _| 1.0 + 0.1 * x), 0.8, 1.2)
            .unwrap();
        assert!(check_pointwise(&disk(1.0), &zero_field, &w, &Discretization::new(32)).is_err());
    }
}
