//! Quadrature of `f(x) |x|^{-2α}` over the cells of a square lattice intersected with a domain.
//!
//! Cells away from the boundary and the origin use a 3x3 tensor Gauss rule. Cells cut by the
//! boundary are clipped polygonally and integrated by a signed fan of triangles. Cells within
//! three spacings of the origin are fanned from the origin itself and integrated in polar
//! coordinates, with the factor `r^{1-2α}` carried exactly by a Gauss-Jacobi rule in `r`.

use std::sync::OnceLock;

use crate::domain::{PlanarDomain, Point};
use crate::grid::GridSpec;
use crate::quadrature::{legendre_cached, triangle_integral, PowerWeightRule};

/// Cell `(i, j)` is `[x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLattice {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CellLattice {
    /// Cells whose corners are grid nodes.
    pub fn primal(grid: &GridSpec) -> Self {
        Self {
            x0: grid.ox,
            y0: grid.oy,
            h: grid.h,
            nx: grid.nx - 1,
            ny: grid.ny - 1,
        }
    }

    /// Cells centered at grid nodes.
    pub fn dual(grid: &GridSpec) -> Self {
        Self {
            x0: grid.ox - 0.5 * grid.h,
            y0: grid.oy - 0.5 * grid.h,
            h: grid.h,
            nx: grid.nx,
            ny: grid.ny,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, k: usize) -> Point {
        let (i, j) = (k % self.nx, k / self.nx);
        [self.x0 + (i as f64 + 0.5) * self.h, self.y0 + (j as f64 + 0.5) * self.h]
    }

    fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fi = ((p[0] - self.x0) / self.h).floor();
        let fj = ((p[1] - self.y0) / self.h).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

/// Radius, in lattice spacings, of the disk around the origin integrated in polar form.
pub const SINGULAR_RADIUS_CELLS: f64 = 3.0;

const RADIAL_POINTS: usize = 10;
const ANGULAR_POINTS: usize = 10;

/// Sutherland-Hodgman clip of a closed loop against the half-plane `sign * (coord - c) >= 0`.
fn clip(poly: &[Point], axis: usize, c: f64, keep_above: bool) -> Vec<Point> {
    let inside = |p: &Point| if keep_above { p[axis] >= c } else { p[axis] <= c };
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 4);
    for k in 0..n {
        let cur = poly[k];
        let prev = poly[(k + n - 1) % n];
        let (ci, pi) = (inside(&cur), inside(&prev));
        if ci != pi {
            let t = (c - prev[axis]) / (cur[axis] - prev[axis]);
            let mut q = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
            q[axis] = c;
            out.push(q);
        }
        if ci {
            out.push(cur);
        }
    }
    out
}

fn gauss3() -> &'static [(f64, f64); 3] {
    static G: OnceLock<[(f64, f64); 3]> = OnceLock::new();
    G.get_or_init(|| {
        let r = legendre_cached(3);
        [
            (r.nodes[0], r.weights[0]),
            (r.nodes[1], r.weights[1]),
            (r.nodes[2], r.weights[2]),
        ]
    })
}

struct Integrand<'a> {
    alpha: f64,
    f: &'a (dyn Fn(f64, f64) -> f64 + 'a),
    radial: PowerWeightRule,
}

impl Integrand<'_> {
    #[inline]
    fn weighted(&self, x: f64, y: f64) -> f64 {
        let v = (self.f)(x, y);
        if self.alpha == 0.0 {
            v
        } else {
            v * (x * x + y * y).powf(-self.alpha)
        }
    }

    fn square(&self, x0: f64, y0: f64, h: f64) -> f64 {
        let g = gauss3();
        let half = 0.5 * h;
        let (cx, cy) = (x0 + half, y0 + half);
        let mut acc = 0.0;
        for (xi, wi) in g {
            for (yj, wj) in g {
                acc += wi * wj * self.weighted(cx + half * xi, cy + half * yj);
            }
        }
        acc * half * half
    }

    /// Signed integral over a closed polygon by a fan from `c`.
    fn fan(&self, poly: &[Point], c: Point) -> f64 {
        let n = poly.len();
        let mut acc = 0.0;
        let mut g = |x: f64, y: f64| self.weighted(x, y);
        for k in 0..n {
            acc += triangle_integral(c, poly[k], poly[(k + 1) % n], &mut g);
        }
        acc
    }

    /// Signed integral over a closed polygon by a fan from the origin, in polar coordinates.
    fn polar_fan(&self, poly: &[Point]) -> f64 {
        let n = poly.len();
        let ang = legendre_cached(ANGULAR_POINTS);
        let mut acc = 0.0;
        for k in 0..n {
            let p = poly[k];
            let q = poly[(k + 1) % n];
            let cr = p[0] * q[1] - p[1] * q[0];
            let scale = (p[0].abs() + p[1].abs()) * (q[0].abs() + q[1].abs());
            if cr.abs() <= 1e-14 * scale || scale == 0.0 {
                continue;
            }
            let dot = p[0] * q[0] + p[1] * q[1];
            let phi = cr.atan2(dot);
            let th0 = p[1].atan2(p[0]);
            let d = [q[0] - p[0], q[1] - p[1]];
            acc += ang.integrate(th0, th0 + phi, |th| {
                let (s, c) = th.sin_cos();
                let rho = cr / (c * d[1] - s * d[0]);
                self.radial.integrate(rho, |r| (self.f)(r * c, r * s))
            });
        }
        acc
    }
}

/// `∫_{cell ∩ domain} f(x) |x|^{-2α} dx` for every cell of the lattice, row-major.
pub fn cell_integrals(
    domain: &PlanarDomain,
    lattice: &CellLattice,
    alpha: f64,
    f: &dyn Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let h = lattice.h;
    let (nx, ny) = (lattice.nx, lattice.ny);
    let mut cut = vec![false; lattice.len()];
    for (a, b) in domain.segments() {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let pieces = ((len / (0.5 * h)).ceil() as usize).max(1);
        let mut prev = a;
        for m in 1..=pieces {
            let t = m as f64 / pieces as f64;
            let cur = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            for p in [prev, cur, [prev[0], cur[1]], [cur[0], prev[1]]] {
                if let Some((i, j)) = lattice.cell_of(p) {
                    cut[j * nx + i] = true;
                }
            }
            prev = cur;
        }
    }
    let inside = domain.lattice_mask(lattice.x0 + 0.5 * h, lattice.y0 + 0.5 * h, h, nx, ny);
    let integrand = Integrand {
        alpha,
        f,
        radial: PowerWeightRule::new(RADIAL_POINTS, 1.0 - 2.0 * alpha),
    };
    let singular_r2 = (SINGULAR_RADIUS_CELLS * h).powi(2);
    let loops: Vec<&[Point]> = domain.loops().collect();
    let mut out = vec![0.0; lattice.len()];
    for j in 0..ny {
        let y0 = lattice.y0 + j as f64 * h;
        let row_has_cut = (0..nx).any(|i| cut[j * nx + i]);
        let strips: Vec<Vec<Point>> = if row_has_cut {
            loops
                .iter()
                .map(|l| clip(&clip(l, 1, y0, true), 1, y0 + h, false))
                .filter(|s| s.len() >= 3)
                .collect()
        } else {
            Vec::new()
        };
        for i in 0..nx {
            let k = j * nx + i;
            let x0 = lattice.x0 + i as f64 * h;
            let c = lattice.center(k);
            let singular = c[0] * c[0] + c[1] * c[1] <= singular_r2;
            if !cut[k] {
                if !inside[k] {
                    continue;
                }
                out[k] = if singular {
                    let sq = [[x0, y0], [x0 + h, y0], [x0 + h, y0 + h], [x0, y0 + h]];
                    integrand.polar_fan(&sq)
                } else {
                    integrand.square(x0, y0, h)
                };
                continue;
            }
            let mut acc = 0.0;
            for s in &strips {
                let piece = clip(&clip(s, 0, x0, true), 0, x0 + h, false);
                if piece.len() < 3 {
                    continue;
                }
                acc += if singular {
                    integrand.polar_fan(&piece)
                } else {
                    integrand.fan(&piece, c)
                };
            }
            out[k] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn total(domain: &PlanarDomain, n: usize, alpha: f64, f: &dyn Fn(f64, f64) -> f64) -> f64 {
        let g = domain.grid(n).unwrap();
        cell_integrals(domain, &CellLattice::primal(&g), alpha, f).iter().sum()
    }

    #[test]
    fn areas_are_exact_for_polygons() {
        let sq = PlanarDomain::square([0.13, -0.07], 1.3).unwrap();
        assert!((total(&sq, 37, 0.0, &|_, _| 1.0) - 1.69).abs() < 1e-12);
        let ann = PlanarDomain::annulus([0.0, 0.0], 0.5, 1.0, 512).unwrap();
        assert!((total(&ann, 64, 0.0, &|_, _| 1.0) - ann.area()).abs() < 1e-12);
    }

    #[test]
    fn singular_weight_on_centered_disk() {
        let disk = PlanarDomain::disk([0.0, 0.0], 1.0, 4096).unwrap();
        for alpha in [0.0, 0.3, 0.5, 0.7, 0.9] {
            let exact = PI / (1.0 - alpha);
            let got = total(&disk, 128, alpha, &|_, _| 1.0);
            assert!(((got - exact) / exact).abs() < 1e-5, "alpha {alpha}: {got} vs {exact}");
        }
    }

    #[test]
    fn dual_lattice_partitions_the_domain() {
        let disk = PlanarDomain::disk([0.0, 0.0], 1.0, 2048).unwrap();
        let g = disk.grid(64).unwrap();
        let alpha = 0.6;
        let f = |x: f64, y: f64| 1.0 + x * y;
        let a: f64 = cell_integrals(&disk, &CellLattice::primal(&g), alpha, &f).iter().sum();
        let b: f64 = cell_integrals(&disk, &CellLattice::dual(&g), alpha, &f).iter().sum();
        assert!(((a - b) / a).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn smooth_integrand_off_center() {
        // ∫ over the unit square of x^2 y^4 e^{x}
        let sq = PlanarDomain::polygon(vec![[0.2, 0.3], [1.2, 0.3], [1.2, 1.3], [0.2, 1.3]], vec![]).unwrap();
        let f = |x: f64, y: f64| x * x * y.powi(4) * x.exp();
        let ix = {
            let r = legendre_cached(20);
            r.integrate(0.2, 1.2, |x| x * x * x.exp())
        };
        let iy = (1.3f64.powi(5) - 0.3f64.powi(5)) / 5.0;
        let got = total(&sq, 23, 0.0, &f);
        assert!(((got - ix * iy) / (ix * iy)).abs() < 1e-9);
    }
}
