//! Dirichlet problems for `-Δw = f` on rasterized polygonal domains.
//!
//! Interior nodes use the 5-point stencil. A neighbour outside the domain is replaced by the
//! boundary value at the cut point, at fractional distance `theta h`, moved to the right-hand
//! side. This keeps the matrix symmetric positive definite and the error second order. The
//! system is solved by conjugate gradients with a modified incomplete Cholesky preconditioner.

use crate::domain::{PlanarDomain, Raster};
use crate::error::{precondition, Error, Result};
use crate::grid::{GridSpec, ScalarField};

const MIN_THETA: f64 = 1e-6;
const RESIDUAL_TARGET: f64 = 1e-10;

struct System {
    /// Grid index of each unknown.
    nodes: Vec<usize>,
    /// Unknown index of each grid node, `usize::MAX` outside.
    unknown: Vec<usize>,
    diag: Vec<f64>,
    /// Neighbour unknowns (west, east, south, north), `usize::MAX` when the neighbour is a boundary value.
    nbr: Vec<[usize; 4]>,
    /// Boundary contributions to the right-hand side.
    bc: Vec<f64>,
    inv_h2: f64,
}

fn assemble(raster: &Raster, boundary: &dyn Fn(f64, f64) -> f64) -> System {
    let g = raster.grid;
    let mask = &raster.mask;
    let inv_h2 = 1.0 / (g.h * g.h);
    let mut unknown = vec![usize::MAX; g.len()];
    let mut nodes = Vec::new();
    for (k, m) in mask.iter().enumerate() {
        let (i, j) = g.coords(k);
        // Nodes on the outermost ring cannot carry a stencil; domains never reach them.
        if *m && i > 0 && j > 0 && i + 1 < g.nx && j + 1 < g.ny {
            unknown[k] = nodes.len();
            nodes.push(k);
        }
    }
    let mut diag = vec![0.0; nodes.len()];
    let mut nbr = vec![[usize::MAX; 4]; nodes.len()];
    let mut bc = vec![0.0; nodes.len()];
    for (u, &k) in nodes.iter().enumerate() {
        let (i, j) = g.coords(k);
        let (x, y) = (g.x(i), g.y(j));
        let neighbours = [(k - 1, -1i32, 0i32), (k + 1, 1, 0), (k - g.nx, 0, -1), (k + g.nx, 0, 1)];
        for (d, &(q, di, dj)) in neighbours.iter().enumerate() {
            if unknown[q] != usize::MAX {
                nbr[u][d] = unknown[q];
                diag[u] += inv_h2;
                continue;
            }
            let (qx, qy) = (x + di as f64 * g.h, y + dj as f64 * g.h);
            let cut = if dj == 0 {
                raster.row_crossing(j, x, qx)
            } else {
                raster.col_crossing(i, y, qy)
            };
            let (theta, px, py) = match cut {
                Some(c) if dj == 0 => (((c - x) / g.h).abs(), c, y),
                Some(c) => (((c - y) / g.h).abs(), x, c),
                None => (1.0, qx, qy),
            };
            let theta = theta.clamp(MIN_THETA, 1.0);
            let coef = inv_h2 / theta;
            diag[u] += coef;
            bc[u] += coef * boundary(px, py);
        }
    }
    System {
        nodes,
        unknown,
        diag,
        nbr,
        bc,
        inv_h2,
    }
}

impl System {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for u in 0..x.len() {
            let mut s = self.diag[u] * x[u];
            for &q in &self.nbr[u] {
                if q != usize::MAX {
                    s -= self.inv_h2 * x[q];
                }
            }
            out[u] = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified incomplete Cholesky factor `(D + L) D^{-1} (D + L^T)` of the 5-point system.
///
/// Unknowns are numbered row-major, so west and south neighbours precede a node.
struct Preconditioner {
    inv_d: Vec<f64>,
}

const MIC_RELAXATION: f64 = 0.97;

impl Preconditioner {
    fn new(sys: &System) -> Self {
        let c = sys.inv_h2;
        let n = sys.nodes.len();
        let mut d = vec![0.0; n];
        for u in 0..n {
            let mut du = sys.diag[u];
            let [west, _, south, _] = sys.nbr[u];
            if west != usize::MAX {
                du -= c * c / d[west];
                if sys.nbr[west][3] != usize::MAX {
                    du -= MIC_RELAXATION * c * c / d[west];
                }
            }
            if south != usize::MAX {
                du -= c * c / d[south];
                if sys.nbr[south][1] != usize::MAX {
                    du -= MIC_RELAXATION * c * c / d[south];
                }
            }
            // Guards against breakdown on strongly cut cells.
            d[u] = du.max(0.05 * sys.diag[u]);
        }
        Self {
            inv_d: d.iter().map(|x| 1.0 / x).collect(),
        }
    }

    fn solve(&self, sys: &System, r: &[f64], z: &mut [f64]) {
        let c = sys.inv_h2;
        let n = r.len();
        for u in 0..n {
            let mut acc = r[u];
            for q in [sys.nbr[u][0], sys.nbr[u][2]] {
                if q != usize::MAX {
                    acc += c * z[q];
                }
            }
            z[u] = acc * self.inv_d[u];
        }
        for u in (0..n).rev() {
            let mut acc = 0.0;
            for q in [sys.nbr[u][1], sys.nbr[u][3]] {
                if q != usize::MAX {
                    acc += c * z[q];
                }
            }
            z[u] += acc * self.inv_d[u];
        }
    }
}

/// Preconditioned conjugate gradients; returns the iterate and the residual history.
fn pcg(sys: &System, b: &[f64], x: &mut [f64], max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(vec![0.0]);
    }
    let pre = Preconditioner::new(sys);
    let mut r = vec![0.0; n];
    sys.apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut z = vec![0.0; n];
    pre.solve(sys, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
        if rel <= RESIDUAL_TARGET {
            return Ok(history);
        }
        sys.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        pre.solve(sys, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let residual = dot(&r, &r).sqrt() / bnorm;
    if residual <= RESIDUAL_TARGET {
        return Ok(history);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        history,
    })
}

/// Solves `-Δw = rhs` in the domain with `w = boundary` on its boundary.
///
/// The result is masked to the rasterized domain. Nodes outside carry `boundary(x, y)`, which
/// serves as a continuous extension for interpolation near the boundary.
pub fn solve_poisson(
    domain: &PlanarDomain,
    rhs: &ScalarField,
    boundary: &dyn Fn(f64, f64) -> f64,
) -> Result<ScalarField> {
    let raster = domain.rasterize(&rhs.grid);
    solve_on_raster(&raster, rhs, boundary)
}

pub fn solve_on_raster(raster: &Raster, rhs: &ScalarField, boundary: &dyn Fn(f64, f64) -> f64) -> Result<ScalarField> {
    let g: GridSpec = raster.grid;
    if rhs.grid != g {
        return precondition("right-hand side lives on a different grid");
    }
    let sys = assemble(raster, boundary);
    if sys.nodes.is_empty() {
        return Err(Error::EmptyStencil);
    }
    let mut b = sys.bc.clone();
    for (u, &k) in sys.nodes.iter().enumerate() {
        let f = rhs.values[k];
        if !f.is_finite() {
            let (i, j) = g.coords(k);
            return precondition(format!("right-hand side not finite at node ({i},{j})"));
        }
        b[u] += f;
    }
    let mut x: Vec<f64> = sys
        .nodes
        .iter()
        .map(|&k| {
            let (i, j) = g.coords(k);
            boundary(g.x(i), g.y(j))
        })
        .collect();
    let max_iter = 20 * (g.nx + g.ny) + 1000;
    pcg(&sys, &b, &mut x, max_iter)?;
    let mut values = vec![0.0; g.len()];
    let mut mask = vec![false; g.len()];
    for (k, v) in values.iter_mut().enumerate() {
        let u = sys.unknown[k];
        if u != usize::MAX {
            *v = x[u];
            mask[k] = true;
        } else {
            let (i, j) = g.coords(k);
            *v = boundary(g.x(i), g.y(j));
        }
    }
    ScalarField::new(g, values, mask)
}

/// `-Δ_h u` at the unknown nodes of the raster, with `boundary` supplying values at cut points.
///
/// This is the operator inverted by [`solve_on_raster`]; nodes without an unknown are masked off.
pub fn dirichlet_operator(raster: &Raster, nodal: &[f64], boundary: &dyn Fn(f64, f64) -> f64) -> Result<ScalarField> {
    let g = raster.grid;
    if nodal.len() != g.len() {
        return precondition("nodal values do not match the grid");
    }
    let sys = assemble(raster, boundary);
    if sys.nodes.is_empty() {
        return Err(Error::EmptyStencil);
    }
    let x: Vec<f64> = sys.nodes.iter().map(|&k| nodal[k]).collect();
    let mut ax = vec![0.0; x.len()];
    sys.apply(&x, &mut ax);
    let mut values = vec![f64::NAN; g.len()];
    let mut mask = vec![false; g.len()];
    for (u, &k) in sys.nodes.iter().enumerate() {
        values[k] = ax[u] - sys.bc[u];
        mask[k] = true;
    }
    ScalarField::new(g, values, mask)
}

/// Discrete harmonic function with the given boundary values.
pub fn harmonic_extension(
    domain: &PlanarDomain,
    grid: &GridSpec,
    boundary: &dyn Fn(f64, f64) -> f64,
) -> Result<ScalarField> {
    let zero = ScalarField::new(*grid, vec![0.0; grid.len()], vec![false; grid.len()])?;
    solve_poisson(domain, &zero, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::discrete_laplacian;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_disk() -> PlanarDomain {
        PlanarDomain::disk([0.0, 0.0], 1.0, 1024).unwrap()
    }

    fn max_err(f: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = f.grid;
        let mut e = 0.0f64;
        for k in 0..g.len() {
            if f.mask[k] {
                let (i, j) = g.coords(k);
                e = e.max((f.values[k] - exact(g.x(i), g.y(j))).abs());
            }
        }
        e
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let d = unit_disk();
        let g = d.grid(32).unwrap();
        let w = harmonic_extension(&d, &g, &|_, _| 1.0).unwrap();
        assert!(max_err(&w, |_, _| 1.0) < 1e-8);
    }

    #[test]
    fn manufactured_quadratic_is_second_order() {
        let d = unit_disk();
        let err = |n| {
            let g = d.grid(n).unwrap();
            let rhs = ScalarField::new(g, vec![4.0; g.len()], vec![true; g.len()]).unwrap();
            let w = solve_poisson(&d, &rhs, &|x, y| -(x * x + y * y)).unwrap();
            max_err(&w, |x, y| -(x * x + y * y))
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 1e-3 && (e1 / e2).log2() > 1.5, "errors {e1} {e2}");
    }

    #[test]
    fn harmonic_x_converges() {
        let d = unit_disk();
        let err = |n| {
            let g = d.grid(n).unwrap();
            let w = harmonic_extension(&d, &g, &|x, y| x * x * x - 3.0 * x * y * y).unwrap();
            max_err(&w, |x, y| x * x * x - 3.0 * x * y * y)
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e2 < 1e-3);
        assert!((e1 / e2).log2() > 1.5, "errors {e1} {e2}");
    }

    #[test]
    fn maximum_principle_on_square() {
        let d = PlanarDomain::square([0.1, 0.0], 2.0).unwrap();
        let g = d.grid(48).unwrap();
        let w = harmonic_extension(&d, &g, &|x, y| x * x - y * y).unwrap();
        let bmax = (1.1f64).powi(2);
        assert!(w.masked_max() <= bmax + 1e-9);
        let lap = discrete_laplacian(&w).unwrap();
        let interior_max = (0..g.len())
            .filter(|k| lap.mask[*k])
            .map(|k| w.values[k])
            .fold(f64::MIN, f64::max);
        assert!(interior_max < bmax);
    }

    #[test]
    fn operator_inverts_the_solver() {
        let d = PlanarDomain::annulus([0.1, 0.0], 0.3, 1.0, 512).unwrap();
        let g = d.grid(40).unwrap();
        let rhs = ScalarField::sample(g, vec![true; g.len()], |x, y| 1.0 + x * y).unwrap();
        let bc = |x: f64, y: f64| x - 2.0 * y;
        let w = solve_poisson(&d, &rhs, &bc).unwrap();
        let raster = d.rasterize(&g);
        let back = dirichlet_operator(&raster, &w.values, &bc).unwrap();
        for k in 0..g.len() {
            if back.mask[k] {
                assert!((back.values[k] - rhs.values[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn non_convergence_carries_history() {
        let d = unit_disk();
        let g = d.grid(32).unwrap();
        let raster = d.rasterize(&g);
        let sys = assemble(&raster, &|_, _| 0.0);
        let b = vec![1.0; sys.nodes.len()];
        let mut x = vec![0.0; b.len()];
        match pcg(&sys, &b, &mut x, 3) {
            Err(Error::NoConvergence {
                iterations, history, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn nonpositive_rhs_gives_nonpositive_solution(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = unit_disk();
            let g = d.grid(24).unwrap();
            let values: Vec<f64> = (0..g.len()).map(|_| -rng.gen::<f64>() * 10.0).collect();
            let rhs = ScalarField::new(g, values, vec![true; g.len()]).unwrap();
            let w = solve_poisson(&d, &rhs, &|_, _| 0.0).unwrap();
            prop_assert!(w.masked_max() <= 1e-12);
        }
    }
}
