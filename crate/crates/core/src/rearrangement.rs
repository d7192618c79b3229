//! Normalized subsolutions and their weighted decreasing rearrangement.
//!
//! A subsolution `v` is split as `v = η + w + g1`, where `w` absorbs the defect of the
//! differential inequality and `g1` carries the boundary values. Then `η` vanishes on the boundary
//! and solves `-Δη = V̂ e^{g2 + h_α} e^{η}` with `g2 = w + g1 + g`. All three pieces use the same
//! cut-cell operator, so that identity holds exactly at the discrete level.
//!
//! Each dual cell is split into a few sub-cells carrying the bilinear value of `η` and an equal
//! share of the cell weight `τ = ∫ e^{g2+h_α}`. Sorting the sub-cells by `η` and accumulating
//! their weights gives the distribution function `μ` and its inverse `η*`, stored as a
//! piecewise-linear function through the sub-cell midpoints in the `s` coordinate.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::domain::PlanarDomain;
use crate::error::{precondition, Error, NodeViolation, Result};
use crate::geometry::{check_subharmonic, origin_rule, require_clearance};
use crate::grid::ScalarField;
use crate::integrate::{cell_integrals, CellLattice, SINGULAR_RADIUS_CELLS};
use crate::poisson::{dirichlet_operator, solve_on_raster};
use crate::report::Verdict;
use crate::weight::ConformalWeight;

/// Fraction of tested nodes allowed to fail the subsolution screen.
pub const SCREEN_FRACTION: f64 = 1e-3;
const SCREEN_WORST: usize = 5;
const DEGENERATE_LEVEL: f64 = 1e-12;
pub const MIN_LEVELS: usize = 64;
const LIPSCHITZ_PIECES: usize = 64;
const SUBCELLS: usize = 4;
/// Interior window, as fractions of `μ(0)`, for the strict positivity of `P`.
pub const INTERIOR_WINDOW: (f64, f64) = (0.1, 0.9);

/// `v = η + w + g1` on a rasterized domain.
#[derive(Debug, Clone)]
pub struct SubsolutionDecomposition {
    pub domain: PlanarDomain,
    pub v: ScalarField,
    /// `f = -Δ_h v - V̂ e^{g+h_α+v}` at interior nodes.
    pub defect: ScalarField,
    pub w: ScalarField,
    pub g1: ScalarField,
    /// Zero at nodes outside the domain.
    pub eta: ScalarField,
    /// Defined at every node; outside the domain it extends `g1` by the boundary data of `v`.
    pub g2: ScalarField,
    pub tol: f64,
    pub alpha: f64,
}

/// Outcome of the strong-subsolution screen.
#[derive(Debug, Clone)]
pub struct Screen {
    /// `f = -Δ_h v - V̂ e^{g+h_α+v}` at interior nodes, zero elsewhere.
    pub defect: ScalarField,
    pub tested: usize,
    pub violations: usize,
}

/// Checks `-Δ_h v <= V̂ e^{g+h_α+v}` up to `tol` (relative to the source where it exceeds 1).
///
/// Fails when more than 0.1% of the interior nodes violate the inequality. For `α > 0` the nodes
/// within three cells of the origin are not tested: the stencil does not resolve the cusp there.
pub fn screen_subsolution(
    domain: &PlanarDomain,
    v: &ScalarField,
    weight: &ConformalWeight,
    tol: f64,
) -> Result<Screen> {
    let grid = v.grid;
    if let Some(k) = v.values.iter().position(|x| !x.is_finite()) {
        let (i, j) = grid.coords(k);
        return precondition(format!(
            "field must be finite at every grid node; node ({i},{j}) is not"
        ));
    }
    require_clearance(domain, grid.h)?;
    check_subharmonic(domain, weight.g(), &grid, tol)?;
    let raster = domain.rasterize(&grid);
    let boundary = |x: f64, y: f64| v.interpolate(x, y);
    let lap = dirichlet_operator(&raster, &v.values, &boundary)?;

    let mut defect = lap.clone();
    let mut violations = Vec::new();
    let mut tested = 0usize;
    let cusp_radius = SINGULAR_RADIUS_CELLS * grid.h;
    for k in 0..grid.len() {
        if !lap.mask[k] {
            defect.values[k] = 0.0;
            continue;
        }
        let (i, j) = grid.coords(k);
        let (x, y) = (grid.x(i), grid.y(j));
        let source = weight.vhat().eval(x, y) * (weight.g().eval(x, y) + weight.h_alpha(x, y) + v.values[k]).exp();
        let f = lap.values[k] - source;
        defect.values[k] = f;
        if weight.alpha > 0.0 && x.hypot(y) < cusp_radius {
            continue;
        }
        tested += 1;
        let excess = f - tol * source.max(1.0);
        if excess > 0.0 {
            violations.push(NodeViolation { i, j, x, y, excess });
        }
    }
    if violations.len() as f64 > SCREEN_FRACTION * tested as f64 {
        violations.sort_by(|a, b| b.excess.total_cmp(&a.excess));
        let count = violations.len();
        violations.truncate(SCREEN_WORST);
        return Err(Error::SubsolutionScreen {
            violations: count,
            tested,
            worst: violations,
        });
    }
    Ok(Screen {
        defect,
        tested,
        violations: violations.len(),
    })
}

/// Screens `v` and splits it into `η + w + g1`.
pub fn decompose_subsolution(
    domain: &PlanarDomain,
    v: &ScalarField,
    weight: &ConformalWeight,
    tol: f64,
) -> Result<SubsolutionDecomposition> {
    let grid = v.grid;
    let defect = screen_subsolution(domain, v, weight, tol)?.defect;
    let raster = domain.rasterize(&grid);
    let boundary = |x: f64, y: f64| v.interpolate(x, y);
    let w = solve_on_raster(&raster, &defect, &|_, _| 0.0)?;
    let zero = ScalarField::new(grid, vec![0.0; grid.len()], vec![false; grid.len()])?;
    let g1 = solve_on_raster(&raster, &zero, &boundary)?;
    let mut eta = vec![0.0; grid.len()];
    let mut g2 = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        let wk = if w.mask[k] { w.values[k] } else { 0.0 };
        if w.mask[k] {
            eta[k] = v.values[k] - wk - g1.values[k];
        }
        g2[k] = wk + g1.values[k] + weight.g().eval(grid.x(i), grid.y(j));
    }
    let eta = ScalarField::new(grid, eta, w.mask.clone())?;
    let min = eta.masked_min();
    if min < -tol {
        return Err(Error::NotPositive { min, tol });
    }
    let g2 = ScalarField::new(grid, g2, vec![true; grid.len()])?;
    Ok(SubsolutionDecomposition {
        domain: domain.clone(),
        v: v.clone(),
        defect,
        w,
        g1,
        eta,
        g2,
        tol,
        alpha: weight.alpha,
    })
}

impl SubsolutionDecomposition {
    /// Dual-cell weights `τ_k = ∫_{cell_k ∩ ω} e^{g2+h_α}`, indexed like the grid.
    pub fn cell_weights(&self) -> Vec<f64> {
        let lattice = CellLattice::dual(&self.g2.grid);
        cell_integrals(&self.domain, &lattice, self.alpha, &|x, y| {
            self.g2.interpolate(x, y).exp()
        })
    }

    /// Sub-cell pieces of the dual cells: bilinear `η` at `SUBCELLS²` points per cell, each
    /// carrying an equal share of the cell weight.
    fn pieces(&self) -> Vec<Piece> {
        let grid = self.eta.grid;
        let tau = self.cell_weights();
        let mut out = Vec::new();
        for (node, &t) in tau.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let (i, j) = grid.coords(node);
            for b in 0..SUBCELLS {
                for a in 0..SUBCELLS {
                    let dx = ((a as f64 + 0.5) / SUBCELLS as f64 - 0.5) * grid.h;
                    let dy = ((b as f64 + 0.5) / SUBCELLS as f64 - 0.5) * grid.h;
                    let eta = self.eta.interpolate(grid.x(i) + dx, grid.y(j) + dy).max(0.0);
                    out.push(Piece {
                        node,
                        eta,
                        tau: t / (SUBCELLS * SUBCELLS) as f64,
                    });
                }
            }
        }
        out
    }

    /// Weighted length `∫_{η = t} e^{(g2+h_α)/2} dℓ` of a level curve, by marching squares.
    pub fn level_length(&self, t: f64) -> f64 {
        let g = self.eta.grid;
        let e = &self.eta.values;
        let weight = |p: [f64; 2]| {
            let ha = if self.alpha == 0.0 {
                0.0
            } else {
                -self.alpha * (p[0] * p[0] + p[1] * p[1]).ln()
            };
            (0.5 * (self.g2.interpolate(p[0], p[1]) + ha)).exp()
        };
        let mut total = 0.0;
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let k = g.index(i, j);
                let c = [e[k], e[k + 1], e[k + 1 + g.nx], e[k + g.nx]];
                let above = c.map(|z| z > t);
                if above.iter().all(|a| *a) || above.iter().all(|a| !*a) {
                    continue;
                }
                let corners = [
                    [g.x(i), g.y(j)],
                    [g.x(i + 1), g.y(j)],
                    [g.x(i + 1), g.y(j + 1)],
                    [g.x(i), g.y(j + 1)],
                ];
                let mut pts = Vec::with_capacity(4);
                for m in 0..4 {
                    let n = (m + 1) % 4;
                    if above[m] != above[n] {
                        let s = (t - c[m]) / (c[n] - c[m]);
                        pts.push([
                            corners[m][0] + s * (corners[n][0] - corners[m][0]),
                            corners[m][1] + s * (corners[n][1] - corners[m][1]),
                        ]);
                    }
                }
                let pairs: &[(usize, usize)] = if pts.len() == 4 {
                    let center = 0.25 * c.iter().sum::<f64>();
                    // Edges are ordered bottom, right, top, left; join so the centre keeps its side.
                    if (center > t) == above[0] {
                        &[(0, 1), (2, 3)]
                    } else {
                        &[(0, 3), (1, 2)]
                    }
                } else {
                    &[(0, 1)]
                };
                for &(a, b) in pairs {
                    let (p, q) = (pts[a], pts[b]);
                    let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                    total += (q[0] - p[0]).hypot(q[1] - p[1]) * weight(mid);
                }
            }
        }
        total
    }
}

struct Piece {
    node: usize,
    eta: f64,
    tau: f64,
}

/// Distribution function, rearrangement and the monotone functionals built on it.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetData {
    pub alpha: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    /// `1 - α` when the origin is enclosed, else 1.
    pub cone_factor: f64,
    /// `γ̃⁺ = ∫_{K̂ > K₀} (K̂ - K₀) e^{η} dτ`.
    pub gamma_plus: f64,
    pub tol: f64,
    pub t_m: f64,
    pub mu0: f64,
    /// Descending levels from `t_m` to 0.
    pub levels: Vec<f64>,
    pub mu: Vec<f64>,
    pub s: Vec<f64>,
    pub eta_star: Vec<f64>,
    #[serde(rename = "F")]
    pub mass: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    /// Level of `η` at the origin and its area coordinate, when the origin lies in the domain.
    pub t0: Option<f64>,
    pub s0: Option<f64>,
    /// Width in `s` of one ring of cells, `2 μ(0) h / √|ω|`.
    pub resolution: f64,
    #[serde(skip)]
    knot_s: Vec<f64>,
    #[serde(skip)]
    knot_eta: Vec<f64>,
    #[serde(skip)]
    knot_mass: Vec<f64>,
}

/// `∫ e^{a + (b-a) x} dx` over `[0, 1]`.
fn exp_mean(a: f64, b: f64) -> f64 {
    let d = b - a;
    if d.abs() < 1e-6 {
        a.exp() * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d / 24.0)))
    } else {
        (b.exp() - a.exp()) / d
    }
}

pub fn build_level_data(
    dec: &SubsolutionDecomposition,
    weight: &ConformalWeight,
    n_levels: usize,
) -> Result<LevelSetData> {
    if n_levels < MIN_LEVELS {
        return precondition(format!("at least {MIN_LEVELS} levels are required, got {n_levels}"));
    }
    let grid = dec.eta.grid;
    let pieces = dec.pieces();
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| pieces[b].eta.total_cmp(&pieces[a].eta));
    let t_m = order.first().map_or(0.0, |&k| pieces[k].eta);
    if t_m <= DEGENERATE_LEVEL {
        return Err(Error::DegenerateSubsolution { t_max: t_m });
    }

    let two_k0 = 2.0 * weight.k0;
    let mut knot_s = Vec::with_capacity(order.len() + 2);
    let mut knot_eta = Vec::with_capacity(order.len() + 2);
    knot_s.push(0.0);
    knot_eta.push(t_m);
    let mut acc = 0.0;
    let mut gamma_plus = 0.0;
    for &q in &order {
        let piece = &pieces[q];
        knot_s.push(acc + 0.5 * piece.tau);
        knot_eta.push(piece.eta);
        acc += piece.tau;
        let (i, j) = grid.coords(piece.node);
        let excess = weight.khat(grid.x(i), grid.y(j)) - weight.k0;
        if excess > 0.0 {
            gamma_plus += excess * piece.eta.exp() * piece.tau;
        }
    }
    let mu0 = acc;
    knot_s.push(mu0);
    knot_eta.push(0.0);
    let mut knot_mass = Vec::with_capacity(knot_s.len());
    knot_mass.push(0.0);
    for m in 1..knot_s.len() {
        let ds = knot_s[m] - knot_s[m - 1];
        knot_mass.push(knot_mass[m - 1] + two_k0 * ds * exp_mean(knot_eta[m - 1], knot_eta[m]));
    }

    let cone_factor = origin_rule(&dec.domain).cone_factor(weight.alpha);
    let mut data = LevelSetData {
        alpha: weight.alpha,
        k0: weight.k0,
        cone_factor,
        gamma_plus,
        tol: dec.tol,
        t_m,
        mu0,
        levels: Vec::new(),
        mu: Vec::new(),
        s: Vec::new(),
        eta_star: Vec::new(),
        mass: Vec::new(),
        p: Vec::new(),
        j: Vec::new(),
        t0: None,
        s0: None,
        resolution: 2.0 * mu0 * grid.h / dec.domain.area().sqrt(),
        knot_s,
        knot_eta,
        knot_mass,
    };

    for q in 0..n_levels {
        let rank = q * (order.len() - 1) / n_levels;
        let t = pieces[order[rank]].eta;
        data.levels.push(t);
        data.mu.push(data.mu_at(t));
    }
    data.levels.push(0.0);
    data.mu.push(mu0);

    for q in 0..=n_levels {
        let s = mu0 * q as f64 / n_levels as f64;
        let es = data.eta_star_at(s);
        let f = data.mass_at(s);
        data.s.push(s);
        data.eta_star.push(es);
        data.mass.push(f);
        data.p.push(data.p_of(s, f, two_k0 * es.exp()));
        data.j.push(if q == 0 {
            1.0 / (two_k0 * t_m.exp())
        } else {
            s / f - s / (8.0 * PI * cone_factor)
        });
    }

    if dec.domain.contains([0.0, 0.0]) {
        let t0 = dec.eta.interpolate(0.0, 0.0);
        data.t0 = Some(t0);
        data.s0 = Some(data.mu_at(t0));
    }
    Ok(data)
}

impl LevelSetData {
    fn locate(&self, s: f64) -> usize {
        let m = self.knot_s.partition_point(|x| *x <= s);
        m.clamp(1, self.knot_s.len() - 1)
    }

    /// `η*(s)`, clamped to `[0, μ(0)]`.
    pub fn eta_star_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.mu0);
        let m = self.locate(s);
        let (s0, s1) = (self.knot_s[m - 1], self.knot_s[m]);
        if s1 <= s0 {
            return self.knot_eta[m];
        }
        let x = (s - s0) / (s1 - s0);
        self.knot_eta[m - 1] + x * (self.knot_eta[m] - self.knot_eta[m - 1])
    }

    /// `F(s) = 2K₀ ∫₀^s e^{η*}`.
    pub fn mass_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.mu0);
        let m = self.locate(s);
        let (s0, s1) = (self.knot_s[m - 1], self.knot_s[m]);
        if s1 <= s0 {
            return self.knot_mass[m];
        }
        let x = (s - s0) / (s1 - s0);
        let (a, b) = (self.knot_eta[m - 1], self.knot_eta[m]);
        let end = a + x * (b - a);
        self.knot_mass[m - 1] + 2.0 * self.k0 * (s - s0) * exp_mean(a, end)
    }

    /// `μ(t) = |{s : η*(s) > t}|`; levels `t <= 0` map to the full measure `mu0`, and `μ(t_m) = 0`.
    pub fn mu_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mu0;
        }
        if t >= self.t_m {
            return 0.0;
        }
        // Knot levels are nonincreasing; find the first knot at or below `t`.
        let m = self.knot_eta.partition_point(|e| *e > t);
        let (e0, e1) = (self.knot_eta[m - 1], self.knot_eta[m]);
        let (s0, s1) = (self.knot_s[m - 1], self.knot_s[m]);
        s0 + (s1 - s0) * (e0 - t) / (e0 - e1)
    }

    fn p_of(&self, s: f64, f: f64, df: f64) -> f64 {
        4.0 * PI * self.cone_factor * (s * df - f) + 2.0 * self.gamma_plus * f + 0.5 * f * f
    }

    /// `P(s) = 4πλ (s F' - F) + 2 γ̃⁺ F + F²/2`, with `F' = 2K₀ e^{η*}`.
    pub fn p_at(&self, s: f64) -> f64 {
        self.p_of(s, self.mass_at(s), 2.0 * self.k0 * self.eta_star_at(s).exp())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_at(self.mu0)
    }

    pub fn tol_p(&self) -> f64 {
        10.0 * self.tol * (1.0 + self.total_mass()).powi(2)
    }

    pub fn tol_j(&self) -> f64 {
        self.tol / (2.0 * self.k0 * self.t_m.exp())
    }

    /// Writes a `# alpha=.. K0=.. mu0=.. t_m=..` header and the sampled curves.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "# alpha={} K0={} mu0={} t_m={}",
            self.alpha, self.k0, self.mu0, self.t_m
        )?;
        writeln!(out, "s,eta_star,F,P_alpha,J_alpha")?;
        for q in 0..self.s.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.s[q], self.eta_star[q], self.mass[q], self.p[q], self.j[q]
            )?;
        }
        Ok(())
    }
}

/// `γ̃⁺`, as accumulated by [`build_level_data`].
pub fn tilde_gamma_plus(dec: &SubsolutionDecomposition, weight: &ConformalWeight) -> f64 {
    let grid = dec.eta.grid;
    dec.pieces()
        .iter()
        .map(|p| {
            let (i, j) = grid.coords(p.node);
            let excess = weight.khat(grid.x(i), grid.y(j)) - weight.k0;
            if excess > 0.0 {
                excess * p.eta.exp() * p.tau
            } else {
                0.0
            }
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub tol_p: f64,
    pub tol_j: f64,
    pub min_p: f64,
    pub max_abs_p: f64,
    /// Minimum of `P` over the interior window.
    pub min_interior_p: f64,
    /// Largest decrease `P(s_j) - P(s_{j+1})`.
    pub max_p_decrease: f64,
    /// Largest increase of `J`; absent when `γ̃⁺ > 0`, where `J` need not be monotone.
    pub max_j_increase: Option<f64>,
    pub p_violations: usize,
    pub j_violations: usize,
    /// `P(μ(0)) - P(0)`.
    pub terminal: f64,
    pub verdict: Verdict,
}

pub fn verify_monotonicity(ls: &LevelSetData) -> MonotonicityReport {
    let (tol_p, tol_j) = (ls.tol_p(), ls.tol_j());
    let n = ls.p.len();
    let (lo, hi) = (INTERIOR_WINDOW.0 * ls.mu0, INTERIOR_WINDOW.1 * ls.mu0);
    let mut min_interior_p = f64::INFINITY;
    let mut p_violations = 0;
    let mut max_p_decrease = f64::NEG_INFINITY;
    for q in 0..n {
        if ls.p[q] < -tol_p {
            p_violations += 1;
        }
        if ls.s[q] >= lo && ls.s[q] <= hi {
            min_interior_p = min_interior_p.min(ls.p[q]);
        }
        if q + 1 < n {
            let drop = ls.p[q] - ls.p[q + 1];
            max_p_decrease = max_p_decrease.max(drop);
            if drop > tol_p {
                p_violations += 1;
            }
        }
    }
    let check_j = ls.gamma_plus <= 1e-12 * (1.0 + ls.total_mass());
    let mut j_violations = 0;
    let max_j_increase = check_j.then(|| {
        let mut worst = f64::NEG_INFINITY;
        for q in 0..n - 1 {
            let rise = ls.j[q + 1] - ls.j[q];
            worst = worst.max(rise);
            if rise > tol_j {
                j_violations += 1;
            }
        }
        worst
    });
    let terminal = ls.p[n - 1] - ls.p[0];
    let verdict =
        if p_violations == 0 && j_violations == 0 && terminal >= -tol_p && !ls.p.iter().any(|x| !x.is_finite()) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    MonotonicityReport {
        tol_p,
        tol_j,
        min_p: ls.p.iter().copied().fold(f64::INFINITY, f64::min),
        max_abs_p: ls.p.iter().fold(0.0, |a, x| a.max(x.abs())),
        min_interior_p,
        max_p_decrease,
        max_j_increase,
        p_violations,
        j_violations,
        terminal,
        verdict,
    }
}

/// Largest difference quotient `(η*(a) - η*(b)) / (b - a)` over a partition of the window into at
/// most 64 pieces, none narrower than the lattice resolution.
pub fn lipschitz_estimate(ls: &LevelSetData, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < b && b < ls.mu0) {
        return precondition(format!("window [{a}, {b}] must lie inside (0, {})", ls.mu0));
    }
    // Pieces narrower than one ring of cells only resolve ties between lattice values.
    let pieces = (((b - a) / ls.resolution).floor() as usize).clamp(1, LIPSCHITZ_PIECES);
    let step = (b - a) / pieces as f64;
    let mut best = 0.0f64;
    let mut prev = ls.eta_star_at(a);
    for q in 1..=pieces {
        let cur = ls.eta_star_at(a + q as f64 * step);
        best = best.max((prev - cur) / step);
        prev = cur;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{weighted_area, Discretization};
    use crate::report::default_tol;

    fn disk() -> PlanarDomain {
        PlanarDomain::disk([0.0, 0.0], 1.0, 2048).unwrap()
    }

    fn sampled(domain: &PlanarDomain, n: usize, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let g = domain.grid(n).unwrap();
        ScalarField::sample(g, vec![true; g.len()], f).unwrap()
    }

    fn bubble(x: f64, y: f64) -> f64 {
        (8.0 / (1.0 + x * x + y * y).powi(2)).ln()
    }

    #[test]
    fn bubble_splits_off_its_boundary_value() {
        let d = disk();
        let v = sampled(&d, 96, bubble);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let tol = default_tol(v.grid.h);
        let dec = decompose_subsolution(&d, &v, &w, tol).unwrap();
        let g = v.grid;
        for k in 0..g.len() {
            if dec.eta.mask[k] {
                let (i, j) = g.coords(k);
                let r2 = g.x(i).powi(2) + g.y(j).powi(2);
                let exact = (4.0 / (1.0 + r2).powi(2)).ln();
                assert!(
                    (dec.eta.values[k] - exact).abs() < 5e-3,
                    "{} vs {exact}",
                    dec.eta.values[k]
                );
                assert!(dec.eta.values[k] > 0.0);
            }
        }
    }

    #[test]
    fn constant_field_gives_negated_correction() {
        let d = disk();
        let v = sampled(&d, 64, |_, _| 0.7);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, 1e-2).unwrap();
        for k in 0..v.grid.len() {
            if dec.eta.mask[k] {
                assert!(dec.w.values[k] <= 0.0);
                assert!((dec.eta.values[k] + dec.w.values[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn screen_rejects_supersolutions() {
        let d = disk();
        let v = sampled(&d, 48, |x, y| -(x * x + y * y) * 10.0);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        match decompose_subsolution(&d, &v, &w, 1e-2) {
            Err(Error::SubsolutionScreen { violations, worst, .. }) => {
                assert!(violations > 0 && !worst.is_empty() && worst.len() <= SCREEN_WORST);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flat_eta_is_degenerate() {
        let d = disk();
        let v = sampled(&d, 48, |_, _| -1000.0);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, 1e-2).unwrap();
        assert!(matches!(
            build_level_data(&dec, &w, 64),
            Err(Error::DegenerateSubsolution { .. })
        ));
    }

    #[test]
    fn level_data_endpoints_and_mass() {
        let d = disk();
        let v = sampled(&d, 128, bubble);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let tol = default_tol(v.grid.h);
        let dec = decompose_subsolution(&d, &v, &w, tol).unwrap();
        let ls = build_level_data(&dec, &w, 128).unwrap();
        assert_eq!(ls.eta_star[0], ls.t_m);
        assert_eq!(*ls.eta_star.last().unwrap(), 0.0);
        assert_eq!(ls.mass[0], 0.0);
        assert_eq!(ls.mu_at(ls.t_m), 0.0);
        assert_eq!(ls.mu_at(0.0), ls.mu0);
        assert!(ls.eta_star.windows(2).all(|p| p[1] <= p[0]));
        assert!(ls.mass.windows(2).all(|p| p[1] >= p[0]));
        assert!(ls.mu.windows(2).all(|p| p[1] >= p[0]));
        let m = weighted_area(&d, &bubble, &w, &Discretization::new(128)).unwrap();
        assert!((ls.total_mass() - m).abs() / m < 1e-3, "{} vs {m}", ls.total_mass());
        // dτ = 2 dx for the unit-disk bubble
        assert!((ls.mu0 - 2.0 * PI).abs() < 1e-3);
        assert!(ls.gamma_plus == 0.0);
    }

    #[test]
    fn bubble_saturates_p() {
        let d = disk();
        let v = sampled(&d, 128, bubble);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, default_tol(v.grid.h)).unwrap();
        let ls = build_level_data(&dec, &w, 128).unwrap();
        let rep = verify_monotonicity(&ls);
        assert!(rep.max_abs_p <= rep.tol_p, "{rep:?}");
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_field_is_strict() {
        let d = disk();
        let v = sampled(&d, 96, |_, _| 0.0);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, default_tol(v.grid.h)).unwrap();
        let ls = build_level_data(&dec, &w, 128).unwrap();
        let rep = verify_monotonicity(&ls);
        assert!(rep.min_interior_p > 0.0, "{rep:?}");
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.j_violations, 0);
    }

    #[test]
    fn constant_excess_gamma() {
        let d = disk();
        let v = sampled(&d, 64, |_, _| 0.0);
        let w = ConformalWeight::new(0.0, 1.0).unwrap().with_constant_vhat(3.0).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, default_tol(v.grid.h)).unwrap();
        let ls = build_level_data(&dec, &w, 64).unwrap();
        let expected = 0.5 * ls.total_mass() / (2.0 * w.k0);
        assert!((ls.gamma_plus - expected).abs() / expected < 1e-3);
        assert!((tilde_gamma_plus(&dec, &w) - ls.gamma_plus).abs() < 1e-12);
        assert!(verify_monotonicity(&ls).max_j_increase.is_none());
        let unit = ConformalWeight::new(0.0, 0.5).unwrap();
        assert_eq!(tilde_gamma_plus(&dec, &unit), 0.0);
    }

    #[test]
    fn lipschitz_window_checks() {
        let d = disk();
        let v = sampled(&d, 64, bubble);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, default_tol(v.grid.h)).unwrap();
        let ls = build_level_data(&dec, &w, 64).unwrap();
        assert!(lipschitz_estimate(&ls, 0.0, 1.0).is_err());
        assert!(lipschitz_estimate(&ls, 1.0, ls.mu0).is_err());
        let s = 0.5 * ls.mu0;
        let c = lipschitz_estimate(&ls, s, s + 0.02 * ls.mu0).unwrap();
        // η* = log(4/(1+ρ)²) with s = 2πρ: -dη*/ds = 1/(π(1+ρ))
        let exact = 1.0 / (PI * (1.0 + s / (2.0 * PI)));
        assert!((c - exact).abs() / exact < 0.1, "{c} vs {exact}");
    }

    #[test]
    fn level_length_of_bubble_circles() {
        let d = disk();
        let v = sampled(&d, 128, bubble);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, default_tol(v.grid.h)).unwrap();
        // η = t on the circle 4/(1+r²)² = e^t, where e^{g2/2} = √2
        let r: f64 = 0.6;
        let t = (4.0 / (1.0 + r * r).powi(2)).ln();
        let exact = 2.0 * PI * r * 2f64.sqrt();
        let got = dec.level_length(t);
        assert!((got - exact).abs() / exact < 2e-3, "{got} vs {exact}");
    }

    #[test]
    fn csv_dump_has_header() {
        let d = disk();
        let v = sampled(&d, 48, |_, _| 0.0);
        let w = ConformalWeight::new(0.0, 0.5).unwrap();
        let dec = decompose_subsolution(&d, &v, &w, 1e-2).unwrap();
        let ls = build_level_data(&dec, &w, 64).unwrap();
        let mut buf = Vec::new();
        ls.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# alpha=0 K0=0.5 mu0="));
        assert_eq!(lines.next().unwrap(), "s,eta_star,F,P_alpha,J_alpha");
        assert_eq!(lines.count(), 65);
    }
}
