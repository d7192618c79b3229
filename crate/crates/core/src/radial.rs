//! Radial solutions of `-Δu = r^{2N} e^u + r^{2L} e^{a u}`.
//!
//! The ODE `u'' + u'/r = -f` is integrated in `t = log r` with state `(u, p)`, `p = r u'`:
//! `u_t = p`, `p_t = -r^2 f`. Steps are Dormand-Prince 5(4) with a cap on the step in `t`,
//! so the stored nodes are geometrically graded toward the origin.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::quadrature::legendre_cached;

/// Largest accepted step in `log r`; keeps off-node interpolation accurate.
const MAX_STEP: f64 = 0.01;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialParams {
    /// Exponent of the `r^{2N} e^u` term.
    pub n: f64,
    /// Exponent of the `r^{2L} e^{a u}` term.
    pub l: f64,
    /// Coupling in the second exponential.
    pub a: f64,
}

impl RadialParams {
    pub fn new(n: f64, l: f64, a: f64) -> Result<Self> {
        if !(n > -1.0 && l > -1.0) {
            return precondition(format!("exponents must exceed -1, got N={n}, L={l}"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return precondition(format!("coupling must be positive, got a={a}"));
        }
        Ok(Self { n, l, a })
    }

    /// `f(r, u) = r^{2N} e^u + r^{2L} e^{a u}`.
    pub fn forcing(&self, r: f64, u: f64) -> f64 {
        r.powf(2.0 * self.n) * u.exp() + r.powf(2.0 * self.l) * (self.a * u).exp()
    }

    /// `r^2 f` written in `t = log r`.
    fn forcing_t(&self, t: f64, u: f64) -> f64 {
        ((2.0 * self.n + 2.0) * t + u).exp() + ((2.0 * self.l + 2.0) * t + self.a * u).exp()
    }
}

/// A radial profile sampled on increasing radii.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub params: RadialParams,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// Value at the center (for a Kelvin image, the limit as `r -> 0`).
    pub u0: f64,
    /// Radius below which the series expansion about 0 is used, if the profile has one.
    pub series_radius: Option<f64>,
}

fn series(params: &RadialParams, u0: f64, r: f64) -> (f64, f64) {
    let kn = 2.0 * params.n + 2.0;
    let kl = 2.0 * params.l + 2.0;
    let tn = u0.exp() * r.powf(kn);
    let tl = (params.a * u0).exp() * r.powf(kl);
    let u = u0 - tn / (kn * kn) - tl / (kl * kl);
    let du = -(tn / kn + tl / kl) / r;
    (u, du)
}

/// Quintic Hermite data on one interval in `t` for both `u` and `p`.
///
/// `p` gets its own interpolant because near the origin it is `O(r^2)` while `u` is `O(1)`;
/// differentiating the `u` interpolant twice there would lose all significant digits.
struct Segment {
    t0: f64,
    dt: f64,
    u: [f64; 6],
    p: [f64; 6],
}

/// Value and first two derivatives of the quintic Hermite interpolant at `s` in `[0, 1]`.
fn hermite5(y: &[f64; 6], h: f64, s: f64) -> (f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let b = [
        1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
        s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
        0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
        10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
        0.5 * s3 - s4 + 0.5 * s5,
    ];
    let d1 = [
        -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
        1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
        s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
        30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
        1.5 * s2 - 4.0 * s3 + 2.5 * s4,
    ];
    let d2 = [
        -60.0 * s + 180.0 * s2 - 120.0 * s3,
        -36.0 * s + 96.0 * s2 - 60.0 * s3,
        1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3,
        60.0 * s - 180.0 * s2 + 120.0 * s3,
        -24.0 * s + 84.0 * s2 - 60.0 * s3,
        3.0 * s - 12.0 * s2 + 10.0 * s3,
    ];
    let coef = [y[0], h * y[1], h * h * y[2], y[3], h * y[4], h * h * y[5]];
    let mut v = 0.0;
    let mut vt = 0.0;
    let mut vtt = 0.0;
    for k in 0..6 {
        v += b[k] * coef[k];
        vt += d1[k] * coef[k];
        vtt += d2[k] * coef[k];
    }
    (v, vt / h, vtt / (h * h))
}

impl Segment {
    /// `(u, p, p_t)` at `t`.
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let s = (t - self.t0) / self.dt;
        let (u, _, _) = hermite5(&self.u, self.dt, s);
        let (p, pt, _) = hermite5(&self.p, self.dt, s);
        (u, p, pt)
    }
}

impl RadialProfile {
    pub fn new(
        params: RadialParams,
        r: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        u0: f64,
        series_radius: Option<f64>,
    ) -> Result<Self> {
        if r.len() < 2 || u.len() != r.len() || du.len() != r.len() {
            return precondition("profile needs at least two nodes with matching columns");
        }
        if !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) {
            return precondition("profile radii must be positive and strictly increasing");
        }
        if u.iter().chain(&du).any(|v| !v.is_finite()) {
            return precondition("profile values must be finite");
        }
        if !(params.a > 0.0) {
            return precondition("coupling must be positive");
        }
        Ok(Self {
            params,
            r,
            u,
            du,
            u0,
            series_radius,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `p = r u'` at node `k`.
    fn p(&self, k: usize) -> f64 {
        self.r[k] * self.du[k]
    }

    fn segment(&self, k: usize) -> Segment {
        let t0 = self.r[k].ln();
        let t1 = self.r[k + 1].ln();
        let pr = &self.params;
        let node = |m: usize, t: f64| {
            let (u, p) = (self.u[m], self.p(m));
            let en = ((2.0 * pr.n + 2.0) * t + u).exp();
            let el = ((2.0 * pr.l + 2.0) * t + pr.a * u).exp();
            let pt = -(en + el);
            let ptt = -((2.0 * pr.n + 2.0 + p) * en + (2.0 * pr.l + 2.0 + pr.a * p) * el);
            (u, p, pt, ptt)
        };
        let (u0, p0, q0, s0) = node(k, t0);
        let (u1, p1, q1, s1) = node(k + 1, t1);
        Segment {
            t0,
            dt: t1 - t0,
            u: [u0, p0, q0, u1, p1, q1],
            p: [p0, q0, s0, p1, q1, s1],
        }
    }

    fn locate(&self, r: f64) -> usize {
        self.r
            .partition_point(|x| *x <= r)
            .saturating_sub(1)
            .min(self.r.len() - 2)
    }

    /// `(u(r), u'(r))`, below the first node by the series expansion if available.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        let rmax = self.r_max();
        if r > rmax * (1.0 + 1e-12) || !(r > 0.0) {
            return Err(Error::OutOfRange { r });
        }
        if r < self.r[0] {
            return match self.series_radius {
                Some(_) => Ok(series(&self.params, self.u0, r)),
                None => Err(Error::OutOfRange { r }),
            };
        }
        let seg = self.segment(self.locate(r));
        let (u, p, _) = seg.eval(r.min(rmax).ln());
        Ok((u, p / r))
    }

    /// `(1/2π) ∫_{B_R} f` by Gauss-Legendre on each stored interval plus the series core.
    pub fn mass_within(&self, radius: f64) -> Result<f64> {
        if radius > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { r: radius });
        }
        let rule = legendre_cached(8);
        let mut total = match self.series_radius {
            Some(_) => {
                let r0 = self.r[0].min(radius);
                let kn = 2.0 * self.params.n + 2.0;
                let kl = 2.0 * self.params.l + 2.0;
                self.u0.exp() * r0.powf(kn) / kn + (self.params.a * self.u0).exp() * r0.powf(kl) / kl
            }
            None => 0.0,
        };
        if radius <= self.r[0] {
            return Ok(total);
        }
        let tr = radius.ln();
        for k in 0..self.r.len() - 1 {
            if self.r[k] >= radius {
                break;
            }
            let seg = self.segment(k);
            let t1 = (seg.t0 + seg.dt).min(tr);
            total += rule.integrate(seg.t0, t1, |t| self.params.forcing_t(t, seg.eval(t).0));
        }
        Ok(total)
    }

    /// `(1/2π) ∫ f` over each annulus `r_k < |x| < r_{k+1}`.
    pub fn interval_masses(&self) -> Vec<f64> {
        let rule = legendre_cached(8);
        (0..self.r.len() - 1)
            .map(|k| {
                let seg = self.segment(k);
                rule.integrate(seg.t0, seg.t0 + seg.dt, |t| self.params.forcing_t(t, seg.eval(t).0))
            })
            .collect()
    }

    /// Max of `|-Δu - f| / max(1, f)` over interior points of every stored interval.
    ///
    /// The scaling only matters for `L < 0` or `N < 0`, where `f` is unbounded at the origin.
    pub fn equation_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.r.len() - 1 {
            let seg = self.segment(k);
            for s in [0.25, 0.5, 0.75] {
                let t = seg.t0 + s * seg.dt;
                let (u, _, pt) = seg.eval(t);
                let r2 = (2.0 * t).exp();
                let f = self.params.forcing_t(t, u) / r2;
                let res = (pt / r2 + f).abs() / f.max(1.0);
                worst = worst.max(res);
            }
        }
        worst
    }

    /// Writes a `# N=.. L=.. a=.. u0=..` comment, the `r,u,du` header and one row per node.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let p = &self.params;
        let series = self.series_radius.map_or("none".to_string(), |r| r.to_string());
        writeln!(out, "# N={} L={} a={} u0={} series={}", p.n, p.l, p.a, self.u0, series)?;
        writeln!(out, "r,u,du")?;
        for k in 0..self.r.len() {
            writeln!(out, "{},{},{}", self.r[k], self.u[k], self.du[k])?;
        }
        Ok(())
    }

    /// Reads a dump; parameters from the comment line take precedence over `fallback`.
    pub fn read_csv(input: impl BufRead, fallback: Option<RadialParams>) -> Result<Self> {
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}")));
        let mut params = fallback;
        let mut u0 = None;
        let mut series_radius = None;
        let (mut r, mut u, mut du) = (Vec::new(), Vec::new(), Vec::new());
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let mut kv = std::collections::HashMap::new();
                for item in meta.split_whitespace() {
                    if let Some((k, v)) = item.split_once('=') {
                        kv.insert(k.to_string(), v.to_string());
                    }
                }
                if let (Some(n), Some(l), Some(a)) = (kv.get("N"), kv.get("L"), kv.get("a")) {
                    params = Some(RadialParams {
                        n: num(n)?,
                        l: num(l)?,
                        a: num(a)?,
                    });
                }
                if let Some(v) = kv.get("u0") {
                    u0 = Some(num(v)?);
                }
                if let Some(v) = kv.get("series") {
                    series_radius = if v == "none" { None } else { Some(num(v)?) };
                }
                continue;
            }
            if line.starts_with("r,") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("bad profile row '{line}'")));
            }
            r.push(num(cols[0])?);
            u.push(num(cols[1])?);
            du.push(num(cols[2])?);
        }
        let params = params.ok_or_else(|| Error::Parse("profile parameters missing".into()))?;
        let u0 = u0
            .or_else(|| u.first().copied())
            .ok_or_else(|| Error::Parse("empty profile".into()))?;
        Self::new(params, r, u, du, u0, series_radius)
    }
}

/// The Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from the series start to `r_max` with local error below `tol`.
pub fn solve_radial_ode(n: f64, l: f64, a: f64, u0: f64, r_max: f64, tol: f64) -> Result<RadialProfile> {
    let params = RadialParams::new(n, l, a)?;
    if !(r_max > 0.0 && r_max.is_finite()) {
        return precondition(format!("r_max must be positive, got {r_max}"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return precondition(format!("tolerance must lie in (0, 1), got {tol}"));
    }
    if !u0.is_finite() {
        return precondition("center value must be finite");
    }
    let m = n.min(l);
    let r0 = 1e-4f64.min(tol.powf(1.0 / (2.0 * m + 2.0)));
    if r_max <= r0 {
        let (u, du) = series(&params, u0, r_max);
        let r1 = r_max * 0.5;
        let (ua, dua) = series(&params, u0, r1);
        return RadialProfile::new(params, vec![r1, r_max], vec![ua, u], vec![dua, du], u0, Some(r_max));
    }
    let rhs = |t: f64, y: [f64; 2]| [y[1], -params.forcing_t(t, y[0])];
    let (um, dum) = series(&params, u0, r0);
    let mut t = r0.ln();
    let t_end = r_max.ln();
    let mut y = [um, r0 * dum];
    let mut rs = vec![r0];
    let mut us = vec![y[0]];
    let mut ds = vec![dum];
    let mut dt = MAX_STEP.min(t_end - t);
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs(t, y);
    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::Blowup { r: t.exp() });
        }
        let last = t + dt >= t_end;
        if last {
            dt = t_end - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for m in 0..s {
                ys[0] += dt * A[s][m] * k[m][0];
                ys[1] += dt * A[s][m] * k[m][1];
            }
            k[s] = rhs(t + C[s] * dt, ys);
        }
        let mut ynew = y;
        for m in 0..6 {
            ynew[0] += dt * A[6][m] * k[m][0];
            ynew[1] += dt * A[6][m] * k[m][1];
        }
        let mut err = 0.0f64;
        for c in 0..2 {
            let e: f64 = dt * (0..7).map(|m| E[m] * k[m][c]).sum::<f64>();
            let sc = tol + tol * y[c].abs().max(ynew[c].abs());
            err = err.max((e / sc).abs());
        }
        if !ynew[0].is_finite() || !ynew[1].is_finite() || ynew[0] > 700.0 {
            if dt < 1e-12 {
                return Err(Error::Blowup { r: t.exp() });
            }
            dt *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + dt };
            y = ynew;
            k[0] = k[6];
            let r = t.exp();
            rs.push(r);
            us.push(y[0]);
            ds.push(y[1] / r);
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        dt = (dt * fac).min(MAX_STEP);
        if dt < 1e-14 {
            return Err(Error::Blowup { r: t.exp() });
        }
    }
    if let Some(last) = rs.last_mut() {
        *last = r_max;
    }
    RadialProfile::new(params, rs, us, ds, u0, Some(r0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bubble(lambda: f64, r: f64) -> f64 {
        (4.0 * lambda * lambda / (1.0 + lambda * lambda * r * r).powi(2)).ln()
    }

    #[test]
    fn bubble_is_reproduced() {
        let p = solve_radial_ode(0.0, 0.0, 1.0, 4f64.ln(), 100.0, 1e-10).unwrap();
        let mut worst = 0.0f64;
        for k in 0..p.len() {
            worst = worst.max((p.u[k] - bubble(1.0, p.r[k])).abs());
        }
        assert!(worst < 1e-7, "max error {worst}");
        assert!(p.equation_residual() <= 1e-9, "residual {}", p.equation_residual());
        let (u, du) = p.eval(3.3).unwrap();
        assert!((u - bubble(1.0, 3.3)).abs() < 1e-7);
        let exact_du = -4.0 * 3.3 / (1.0 + 3.3 * 3.3);
        assert!((du - exact_du).abs() < 1e-7);
    }

    #[test]
    fn series_start_tends_to_center_value() {
        let p = solve_radial_ode(0.3, -0.2, 1.5, 0.7, 1e-6, 1e-8).unwrap();
        assert!((p.u[0] - 0.7).abs() < 1e-6);
        assert!(p.du[0].abs() < 1e-3);
    }

    #[test]
    fn profile_decreases() {
        let p = solve_radial_ode(0.5, 0.0, 2.0, 0.0, 50.0, 1e-8).unwrap();
        assert!(p.u.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            solve_radial_ode(-1.0, 0.0, 1.0, 0.0, 1.0, 1e-8),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            solve_radial_ode(0.0, -1.5, 1.0, 0.0, 1.0, 1e-8),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            solve_radial_ode(0.0, 0.0, 0.0, 0.0, 1.0, 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mass_matches_flux() {
        let p = solve_radial_ode(0.0, 0.0, 1.0, 4f64.ln(), 10.0, 1e-10).unwrap();
        // (1/2π) ∫_{B_R} 2 e^u = 4 R²/(1+R²) for the unit bubble.
        for radius in [0.5, 1.0, 10.0] {
            let exact = 4.0 * radius * radius / (1.0 + radius * radius);
            assert!((p.mass_within(radius).unwrap() - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = solve_radial_ode(0.0, 0.0, 1.0, 1.0, 5.0, 1e-8).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = RadialProfile::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(p.r, q.r);
        assert_eq!(p.u, q.u);
        assert_eq!(p.du, q.du);
        assert_eq!(p.params, q.params);
        assert_eq!(p.series_radius, q.series_radius);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn residual_stays_within_tolerance_multiple(
            n in -0.5..1.5f64, l in -0.5..1.5f64, a in 0.3..3.0f64, u0 in -1.0..1.5f64
        ) {
            let tol = 1e-9;
            let p = solve_radial_ode(n, l, a, u0, 20.0, tol).unwrap();
            prop_assert!(p.equation_residual() <= 100.0 * tol, "residual {}", p.equation_residual());
        }
    }
}
