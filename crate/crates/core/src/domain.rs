//! Polygonal domains bounded by Jordan loops and their rasterization onto grids.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::grid::GridSpec;

pub type Point = [f64; 2];

/// A bounded domain whose boundary is a finite union of simple closed polygons.
///
/// The outer loop is stored counter-clockwise and holes clockwise, so that the region is on
/// the left of every boundary edge.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarDomain {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for k in 0..n {
        let p = pts[k];
        let q = pts[(k + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

fn orient(mut pts: Vec<Point>, ccw: bool) -> Vec<Point> {
    if (signed_area(&pts) > 0.0) != ccw {
        pts.reverse();
    }
    pts
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Even-odd test against a single loop.
fn inside_loop(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let mut inside = false;
    for k in 0..n {
        let a = pts[k];
        let b = pts[(k + 1) % n];
        if (a[1] <= p[1]) != (b[1] <= p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x > p[0] {
                inside = !inside;
            }
        }
    }
    inside
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn regular_polygon(center: Point, radius: f64, segments: usize) -> Vec<Point> {
    (0..segments)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / segments as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// Sides used for disks and annuli at resolution `n`: `max(256, 8n)`.
pub fn polygon_sides(n: usize) -> usize {
    (8 * n).max(256)
}

impl PlanarDomain {
    /// Validated polygonal domain. Loops may be given in either orientation.
    pub fn polygon(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        for (k, l) in std::iter::once(&outer).chain(holes.iter()).enumerate() {
            if l.len() < 3 {
                return precondition(format!("loop {k} has fewer than 3 vertices"));
            }
            if l.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return precondition(format!("loop {k} has non-finite vertices"));
            }
            if signed_area(l).abs() == 0.0 {
                return precondition(format!("loop {k} has zero area"));
            }
        }
        let d = Self::from_loops(outer, holes);
        d.check_simple()?;
        for (k, hole) in d.holes.iter().enumerate() {
            if !hole.iter().all(|p| inside_loop(&d.outer, *p)) {
                return precondition(format!("hole {k} is not inside the outer loop"));
            }
            for (m, other) in d.holes.iter().enumerate() {
                if m != k && inside_loop(other, hole[0]) {
                    return precondition(format!("hole {k} lies inside hole {m}"));
                }
            }
        }
        Ok(d)
    }

    fn from_loops(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Self {
        Self {
            outer: orient(outer, true),
            holes: holes.into_iter().map(|h| orient(h, false)).collect(),
        }
    }

    /// Inscribed regular polygon with `segments` sides.
    pub fn disk(center: Point, radius: f64, segments: usize) -> Result<Self> {
        if !(radius > 0.0) || segments < 8 {
            return precondition("disk needs a positive radius and at least 8 segments");
        }
        Ok(Self::from_loops(regular_polygon(center, radius, segments), vec![]))
    }

    pub fn annulus(center: Point, inner: f64, outer: f64, segments: usize) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) || segments < 8 {
            return precondition("annulus needs 0 < inner < outer and at least 8 segments");
        }
        Ok(Self::from_loops(
            regular_polygon(center, outer, segments),
            vec![regular_polygon(center, inner, segments)],
        ))
    }

    pub fn square(center: Point, side: f64) -> Result<Self> {
        if !(side > 0.0) {
            return precondition("square needs a positive side");
        }
        let s = 0.5 * side;
        let (cx, cy) = (center[0], center[1]);
        Ok(Self::from_loops(
            vec![[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]],
            vec![],
        ))
    }

    fn check_simple(&self) -> Result<()> {
        struct Seg {
            a: Point,
            b: Point,
            lp: usize,
            idx: usize,
            len: usize,
        }
        let mut segs = Vec::new();
        for (lp, l) in self.loops().enumerate() {
            for k in 0..l.len() {
                segs.push(Seg {
                    a: l[k],
                    b: l[(k + 1) % l.len()],
                    lp,
                    idx: k,
                    len: l.len(),
                });
            }
        }
        segs.sort_by(|s, t| s.a[0].min(s.b[0]).total_cmp(&t.a[0].min(t.b[0])));
        for m in 0..segs.len() {
            let s = &segs[m];
            let xmax = s.a[0].max(s.b[0]);
            for t in &segs[m + 1..] {
                if t.a[0].min(t.b[0]) > xmax {
                    break;
                }
                if s.a[1].max(s.b[1]) < t.a[1].min(t.b[1]) || t.a[1].max(t.b[1]) < s.a[1].min(s.b[1]) {
                    continue;
                }
                if s.lp == t.lp {
                    let d = (s.idx + s.len - t.idx) % s.len;
                    if d == 1 || d == s.len - 1 {
                        continue;
                    }
                }
                if segments_intersect(s.a, s.b, t.a, t.b) {
                    return precondition("boundary loops are not simple or intersect each other");
                }
            }
        }
        Ok(())
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    /// Outer loop followed by the holes.
    pub fn loops(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Every boundary edge, oriented with the domain on its left.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.loops()
            .flat_map(|l| (0..l.len()).map(move |k| (l[k], l[(k + 1) % l.len()])))
    }

    pub fn is_simple(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        inside_loop(&self.outer, p) && !self.holes.iter().any(|h| inside_loop(h, p))
    }

    /// Whether `p` lies in a bounded component of the complement.
    pub fn in_hole(&self, p: Point) -> bool {
        self.holes.iter().any(|h| inside_loop(h, p))
    }

    /// Whether `p` lies in the closure of the domain together with its holes.
    pub fn encloses(&self, p: Point) -> bool {
        inside_loop(&self.outer, p) || self.distance_to_boundary(p) == 0.0
    }

    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Errors unless the origin keeps at least `limit` away from every boundary edge.
    pub fn require_origin_clearance(&self, limit: f64) -> Result<()> {
        let distance = self.distance_to_boundary([0.0, 0.0]);
        if distance < limit {
            return Err(Error::OriginOnBoundary { distance, limit });
        }
        Ok(())
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &self.outer {
            b.0 = b.0.min(p[0]);
            b.1 = b.1.max(p[0]);
            b.2 = b.2.min(p[1]);
            b.3 = b.3.max(p[1]);
        }
        b
    }

    pub fn area(&self) -> f64 {
        self.loops().map(signed_area).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|(a, b)| (b[0] - a[0]).hypot(b[1] - a[1])).sum()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let mv = |l: &Vec<Point>| l.iter().map(|p| [p[0] + dx, p[1] + dy]).collect::<Vec<_>>();
        Self {
            outer: mv(&self.outer),
            holes: self.holes.iter().map(mv).collect(),
        }
    }

    /// Grid covering the domain at resolution `n` cells across its larger side.
    pub fn grid(&self, n: usize) -> Result<GridSpec> {
        let (x0, x1, y0, y1) = self.bbox();
        GridSpec::covering(x0, x1, y0, y1, n)
    }

    pub fn rasterize(&self, grid: &GridSpec) -> Raster {
        let rows = self.row_crossings(grid.oy, grid.h, grid.ny);
        let mut cols = vec![Vec::new(); grid.nx];
        for (a, b) in self.segments() {
            push_crossings(&mut cols, a[0], b[0], a[1], b[1], grid.ox, grid.h);
        }
        for c in cols.iter_mut() {
            c.sort_by(f64::total_cmp);
        }
        let mask = mask_from_rows(&rows, grid.ox, grid.h, grid.nx);
        Raster {
            grid: *grid,
            mask,
            rows,
            cols,
        }
    }

    /// Even-odd membership of the lattice points `(ox + i h, oy + j h)`, row-major.
    pub fn lattice_mask(&self, ox: f64, oy: f64, h: f64, nx: usize, ny: usize) -> Vec<bool> {
        mask_from_rows(&self.row_crossings(oy, h, ny), ox, h, nx)
    }

    fn row_crossings(&self, oy: f64, h: f64, ny: usize) -> Vec<Vec<f64>> {
        let mut rows = vec![Vec::new(); ny];
        for (a, b) in self.segments() {
            push_crossings(&mut rows, a[1], b[1], a[0], b[0], oy, h);
        }
        for r in rows.iter_mut() {
            r.sort_by(f64::total_cmp);
        }
        rows
    }
}

fn mask_from_rows(rows: &[Vec<f64>], ox: f64, h: f64, nx: usize) -> Vec<bool> {
    let mut mask = vec![false; nx * rows.len()];
    for (j, row) in rows.iter().enumerate() {
        let mut c = 0;
        for i in 0..nx {
            let x = ox + i as f64 * h;
            while c < row.len() && row[c] < x {
                c += 1;
            }
            mask[j * nx + i] = c % 2 == 1;
        }
    }
    mask
}

/// Records, for each lattice line `s = o + k h`, where segment `(s0,t0)-(s1,t1)` crosses it.
fn push_crossings(lines: &mut [Vec<f64>], s0: f64, s1: f64, t0: f64, t1: f64, o: f64, h: f64) {
    if s0 == s1 {
        return;
    }
    let lo = s0.min(s1);
    let hi = s0.max(s1);
    let k0 = ((lo - o) / h).floor().max(0.0) as usize;
    let k1 = (((hi - o) / h).ceil().max(0.0) as usize).min(lines.len().saturating_sub(1));
    for (k, line) in lines.iter_mut().enumerate().take(k1 + 1).skip(k0) {
        let s = o + k as f64 * h;
        if (s0 <= s) != (s1 <= s) {
            line.push(t0 + (s - s0) * (t1 - t0) / (s1 - s0));
        }
    }
}

/// Node mask of a domain plus the boundary crossings along every grid row and column.
#[derive(Debug, Clone)]
pub struct Raster {
    pub grid: GridSpec,
    pub mask: Vec<bool>,
    rows: Vec<Vec<f64>>,
    cols: Vec<Vec<f64>>,
}

impl Raster {
    /// Boundary crossing on row `j` between abscissae `from` and `to` closest to `from`.
    pub fn row_crossing(&self, j: usize, from: f64, to: f64) -> Option<f64> {
        nearest_between(&self.rows[j], from, to)
    }

    pub fn col_crossing(&self, i: usize, from: f64, to: f64) -> Option<f64> {
        nearest_between(&self.cols[i], from, to)
    }
}

fn nearest_between(line: &[f64], from: f64, to: f64) -> Option<f64> {
    if to > from {
        let k = line.partition_point(|x| *x < from);
        line.get(k).copied().filter(|x| *x <= to)
    } else {
        let k = line.partition_point(|x| *x <= from);
        if k == 0 {
            return None;
        }
        Some(line[k - 1]).filter(|x| *x >= to)
    }
}
