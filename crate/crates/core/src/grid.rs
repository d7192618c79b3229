//! Uniform Cartesian grids, nodal scalar fields and the 5-point Laplacian.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{precondition, Error, Result};

/// Anything that can be evaluated at a point of the plane.
pub trait Field2d {
    fn value(&self, x: f64, y: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> Field2d for F {
    fn value(&self, x: f64, y: f64) -> f64 {
        self(x, y)
    }
}

/// Node `(i, j)` sits at `(ox + i h, oy + j h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub ox: f64,
    pub oy: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

fn is_half_offset(o: f64, h: f64) -> bool {
    let k = o / h;
    ((k - k.floor()) - 0.5).abs() < 1e-6
}

impl GridSpec {
    pub fn new(ox: f64, oy: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return precondition(format!("grid spacing must be positive, got {h}"));
        }
        if nx < 8 || ny < 8 {
            return precondition(format!("grid needs at least 8x8 nodes, got {nx}x{ny}"));
        }
        if !is_half_offset(ox, h) || !is_half_offset(oy, h) {
            return precondition("grid origin must sit half a cell off the lattice through 0");
        }
        Ok(Self { ox, oy, h, nx, ny })
    }

    /// Grid with spacing `max(width, height) / n` covering the box plus a margin of two cells.
    ///
    /// Nodes lie at half-integer multiples of `h`, so `(0, 0)` is the center of a grid cell.
    pub fn covering(xmin: f64, xmax: f64, ymin: f64, ymax: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return precondition(format!("resolution must be at least 4, got {n}"));
        }
        if !(xmax > xmin && ymax > ymin) {
            return precondition("empty bounding box");
        }
        let h = (xmax - xmin).max(ymax - ymin) / n as f64;
        let i0 = (xmin / h - 0.5).floor() as i64 - 2;
        let i1 = (xmax / h - 0.5).ceil() as i64 + 2;
        let j0 = (ymin / h - 0.5).floor() as i64 - 2;
        let j1 = (ymax / h - 0.5).ceil() as i64 + 2;
        let nx = ((i1 - i0 + 1) as usize).max(8);
        let ny = ((j1 - j0 + 1) as usize).max(8);
        Self::new((i0 as f64 + 0.5) * h, (j0 as f64 + 0.5) * h, h, nx, ny)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.ox + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.oy + j as f64 * self.h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn xmax(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn ymax(&self) -> f64 {
        self.y(self.ny - 1)
    }
}

/// Nodal values with a mask of nodes belonging to the active domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return precondition("field storage does not match the grid");
        }
        if let Some(k) = (0..grid.len()).find(|&k| mask[k] && !values[k].is_finite()) {
            let (i, j) = grid.coords(k);
            return precondition(format!("non-finite value at masked node ({i},{j})"));
        }
        Ok(Self { grid, values, mask })
    }

    /// Samples `f` at every node; the mask is kept as given.
    pub fn sample(grid: GridSpec, mask: Vec<bool>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self::new(grid, values, mask)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn active(&self, i: usize, j: usize) -> bool {
        self.mask[self.grid.index(i, j)]
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Maximum over masked nodes, `-inf` if none.
    pub fn masked_max(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .fold(f64::NEG_INFINITY, |a, (v, _)| a.max(*v))
    }

    pub fn masked_min(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .fold(f64::INFINITY, |a, (v, _)| a.min(*v))
    }

    /// Bilinear interpolation of the nodal values, clamped to the grid box.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = ((x - g.ox) / g.h).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((y - g.oy) / g.h).clamp(0.0, (g.ny - 1) as f64);
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let s = fx - i as f64;
        let t = fy - j as f64;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        (1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11)
    }

    /// Applies `f` to every value, keeping grid and mask.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            mask: self.mask.clone(),
        }
    }

    /// Writes the `# nx ny h ox oy` header followed by `i,j,value,mask` rows.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let g = &self.grid;
        writeln!(out, "# {} {} {} {} {}", g.nx, g.ny, g.h, g.ox, g.oy)?;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                writeln!(out, "{},{},{},{}", i, j, self.values[k], u8::from(self.mask[k]))?;
            }
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
        let parts: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("bad field header '{header}'")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let cnt = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let grid = GridSpec::new(
            num(parts[3])?,
            num(parts[4])?,
            num(parts[2])?,
            cnt(parts[0])?,
            cnt(parts[1])?,
        )?;
        let mut values = vec![f64::NAN; grid.len()];
        let mut mask = vec![false; grid.len()];
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!("bad field row '{line}'")));
            }
            let (i, j) = (cnt(cols[0])?, cnt(cols[1])?);
            if i >= grid.nx || j >= grid.ny {
                return Err(Error::Parse(format!("node ({i},{j}) outside the grid")));
            }
            let k = grid.index(i, j);
            values[k] = num(cols[2])?;
            mask[k] = cols[3].trim() == "1";
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::Parse(format!("expected {} rows, found {seen}", grid.len())));
        }
        Self::new(grid, values, mask)
    }
}

impl Field2d for ScalarField {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.interpolate(x, y)
    }
}

/// Nodes whose own mask and all four neighbours' masks are set.
pub fn stencil_nodes(mask: &[bool], grid: &GridSpec) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for j in 1..grid.ny.saturating_sub(1) {
        for i in 1..grid.nx.saturating_sub(1) {
            let k = grid.index(i, j);
            out[k] = mask[k] && mask[k - 1] && mask[k + 1] && mask[k - grid.nx] && mask[k + grid.nx];
        }
    }
    out
}

/// Five-point Laplacian `Δ_h u`; the result is masked to nodes with a full stencil and NaN elsewhere.
pub fn discrete_laplacian(field: &ScalarField) -> Result<ScalarField> {
    let g = field.grid;
    let mask = stencil_nodes(&field.mask, &g);
    if !mask.iter().any(|m| *m) {
        return Err(Error::EmptyStencil);
    }
    let inv = 1.0 / (g.h * g.h);
    let u = &field.values;
    let mut values = vec![f64::NAN; g.len()];
    for (k, m) in mask.iter().enumerate() {
        if *m {
            values[k] = (u[k - 1] + u[k + 1] + u[k - g.nx] + u[k + g.nx] - 4.0 * u[k]) * inv;
        }
    }
    Ok(ScalarField { grid: g, values, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full(grid: GridSpec) -> Vec<bool> {
        vec![true; grid.len()]
    }

    #[test]
    fn covering_grid_keeps_origin_off_nodes() {
        let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, 64).unwrap();
        assert!(g.x(0) < -1.0 - 1.5 * g.h && g.xmax() > 1.0 + 1.5 * g.h);
        for i in 0..g.nx {
            assert!(g.x(i).abs() > 0.49 * g.h);
        }
        assert!(GridSpec::new(0.0, 0.5, 1.0, 8, 8).is_err());
        assert!(GridSpec::new(0.5, 0.5, 1.0, 7, 8).is_err());
    }

    #[test]
    fn laplacian_of_constant_and_quadratic() {
        let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, 32).unwrap();
        let c = ScalarField::sample(g, full(g), |_, _| 3.5).unwrap();
        let lc = discrete_laplacian(&c).unwrap();
        let q = ScalarField::sample(g, full(g), |x, y| x * x + y * y).unwrap();
        let lq = discrete_laplacian(&q).unwrap();
        for k in 0..g.len() {
            if lc.mask[k] {
                assert_eq!(lc.values[k], 0.0);
                assert!((lq.values[k] - 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_stencil_is_reported() {
        let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, 8).unwrap();
        let mut mask = vec![false; g.len()];
        mask[g.index(3, 3)] = true;
        let f = ScalarField::sample(g, mask, |_, _| 0.0).unwrap();
        assert!(matches!(discrete_laplacian(&f), Err(Error::EmptyStencil)));
    }

    #[test]
    fn laplacian_of_log_converges_at_second_order() {
        // log(1/|x|) is harmonic off 0; compare the max error on the annulus 0.5 < |x| < 1.
        let err = |n: usize| {
            let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, n).unwrap();
            let f = ScalarField::sample(g, full(g), |x, y| -(x * x + y * y).sqrt().ln()).unwrap();
            let l = discrete_laplacian(&f).unwrap();
            let mut e = 0.0f64;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let r = g.x(i).hypot(g.y(j));
                    let k = g.index(i, j);
                    if l.mask[k] && r > 0.5 && r < 1.0 {
                        e = e.max(l.values[k].abs() * r.powi(4));
                    }
                }
            }
            e
        };
        let (e1, e2) = (err(32), err(64));
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::covering(-1.0, 1.0, -0.5, 0.5, 8).unwrap();
        let mask: Vec<bool> = (0..g.len()).map(|k| k % 3 != 0).collect();
        let f = ScalarField::sample(g, mask, |x, y| x - 0.25 * y).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = ScalarField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.values, f.values);
        assert_eq!(back.mask, f.mask);
    }

    proptest! {
        #[test]
        fn laplacian_annihilates_affine(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, 16).unwrap();
            let f = ScalarField::sample(g, full(g), |x, y| a * x + b * y + c).unwrap();
            let l = discrete_laplacian(&f).unwrap();
            for k in 0..g.len() {
                if l.mask[k] {
                    prop_assert!(l.values[k].abs() < 1e-9 * (1.0 + a.abs() + b.abs() + c.abs()) / (g.h * g.h));
                }
            }
        }

        #[test]
        fn bilinear_interpolation_is_exact_on_bilinear(a in -2.0..2.0f64, b in -2.0..2.0f64, x in -0.9..0.9f64, y in -0.9..0.9f64) {
            let g = GridSpec::covering(-1.0, 1.0, -1.0, 1.0, 16).unwrap();
            let f = ScalarField::sample(g, full(g), |x, y| a * x * y + b * x - y).unwrap();
            prop_assert!((f.interpolate(x, y) - (a * x * y + b * x - y)).abs() < 1e-12);
        }
    }
}
