//! One- and two-dimensional quadrature rules.
//!
//! Gauss-Legendre and Gauss-Jacobi nodes are computed by Newton iteration on the three-term
//! recurrences. The Jacobi rule carries the power-law weight that resolves `|x|^{-2 alpha}`
//! analytically in polar coordinates.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of a rule on a fixed reference interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Integrates `f` over `[a, b]` for a rule defined on `[-1, 1]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Cached Gauss-Legendre rules for the sizes used by the integrators.
pub fn legendre_cached(n: usize) -> &'static Rule {
    static RULES: OnceLock<Vec<Rule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=32).map(gauss_legendre).collect());
    &rules[n - 1]
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COF: [f64; 14] = [
        57.156_235_665_862_92,
        -59.597_960_355_475_49,
        14.136_097_974_741_746,
        -0.491_913_816_097_620_2,
        0.339_946_499_848_118_9e-4,
        0.465_236_289_270_485_8e-4,
        -0.983_744_753_048_795_6e-4,
        0.158_088_703_224_912_5e-3,
        -0.210_264_441_724_104_9e-3,
        0.217_439_618_115_212_6e-3,
        -0.164_318_106_536_763_9e-3,
        0.844_182_239_838_527_4e-4,
        -0.261_908_384_015_814_1e-4,
        0.368_991_826_595_316_2e-5,
    ];
    let mut y = x;
    let tmp = x + 5.242_187_5;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_1;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Gauss-Jacobi rule for the weight `(1-x)^a (1+x)^b` on `[-1, 1]`, with `a, b > -1`.
///
/// Requires `n >= 8` so that the asymptotic initial guesses for the extreme nodes are valid.
#[allow(clippy::approx_constant)] // 6.28 is part of the empirical root guess, not 2π
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule {
    assert!(n >= 8, "gauss_jacobi needs at least 8 nodes");
    assert!(a > -1.0 && b > -1.0);
    let nf = n as f64;
    let ab = a + b;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z: f64 = 0.0;
    for i in 0..n {
        if i == 0 {
            let an = a / nf;
            let bn = b / nf;
            let r1 = (1.0 + a) * (2.78 / (4.0 + nf * nf) + 0.768 * an / nf);
            let r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn;
            z = 1.0 - r1 / r2;
        } else if i == 1 {
            let r1 = (4.1 + a) / ((1.0 + a) * (1.0 + 0.156 * a));
            let r2 = 1.0 + 0.06 * (nf - 8.0) * (1.0 + 0.12 * a) / nf;
            let r3 = 1.0 + 0.012 * b * (1.0 + 0.25 * a.abs()) / nf;
            z -= (1.0 - z) * r1 * r2 * r3;
        } else if i == 2 {
            let r1 = (1.67 + 0.28 * a) / (1.0 + 0.37 * a);
            let r2 = 1.0 + 0.22 * (nf - 8.0) / nf;
            let r3 = 1.0 + 8.0 * b / ((6.28 + b) * nf * nf);
            z -= (x[0] - z) * r1 * r2 * r3;
        } else if i == n - 2 {
            let r1 = (1.0 + 0.235 * b) / (0.766 + 0.119 * b);
            let r2 = 1.0 / (1.0 + 0.639 * (nf - 4.0) / (1.0 + 0.71 * (nf - 4.0)));
            let r3 = 1.0 / (1.0 + 20.0 * a / ((7.5 + a) * nf * nf));
            z += (z - x[n - 4]) * r1 * r2 * r3;
        } else if i == n - 1 {
            let r1 = (1.0 + 0.37 * b) / (1.67 + 0.28 * b);
            let r2 = 1.0 / (1.0 + 0.22 * (nf - 8.0) / nf);
            let r3 = 1.0 / (1.0 + 8.0 * a / ((6.28 + a) * nf * nf));
            z += (z - x[n - 3]) * r1 * r2 * r3;
        } else {
            z = 3.0 * x[i - 1] - 3.0 * x[i - 2] + x[i - 3];
        }
        let mut pp = 0.0;
        let mut p2 = 0.0;
        let mut temp = 0.0;
        for _ in 0..100 {
            temp = 2.0 + ab;
            let mut p1 = (a - b + temp * z) / 2.0;
            p2 = 1.0;
            for j in 2..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                temp = 2.0 * jf + ab;
                let aa = 2.0 * jf * (jf + ab) * (temp - 2.0);
                let bb = (temp - 1.0) * (a * a - b * b + temp * (temp - 2.0) * z);
                let cc = 2.0 * (jf - 1.0 + a) * (jf - 1.0 + b) * temp;
                p1 = (bb * p2 - cc * p3) / aa;
            }
            pp = (nf * (a - b - temp * z) * p1 + 2.0 * (nf + a) * (nf + b) * p2) / (temp * (1.0 - z * z));
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        w[i] = (ln_gamma(a + nf) + ln_gamma(b + nf) - ln_gamma(nf + 1.0) - ln_gamma(nf + ab + 1.0)).exp()
            * temp
            * 2f64.powf(ab)
            / (pp * p2);
    }
    x.reverse();
    w.reverse();
    Rule { nodes: x, weights: w }
}

/// Rule for `int_0^R f(r) r^beta dr`, `beta > -1`, exact for polynomial `f` of degree `2n-1`.
#[derive(Debug, Clone)]
pub struct PowerWeightRule {
    beta: f64,
    /// Nodes on `[0, 1]`.
    t: Vec<f64>,
    /// Weights for the weight `t^beta` on `[0, 1]`.
    w: Vec<f64>,
}

impl PowerWeightRule {
    pub fn new(n: usize, beta: f64) -> Self {
        let rule = gauss_jacobi(n, 0.0, beta);
        let scale = 2f64.powf(-beta - 1.0);
        let t = rule.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect();
        let w = rule.weights.iter().map(|w| w * scale).collect();
        Self { beta, t, w }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `int_0^R f(r) r^beta dr`.
    pub fn integrate(&self, radius: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.t.iter().zip(&self.w) {
            acc += w * f(radius * t);
        }
        acc * radius.powf(self.beta + 1.0)
    }
}

/// Seven-point degree-5 triangle rule in barycentric form `(l1, l2, l3, weight)`, weights sum to 1.
pub const TRIANGLE_7: [(f64, f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225),
    (
        0.059_715_871_789_770,
        0.470_142_064_105_115,
        0.470_142_064_105_115,
        0.132_394_152_788_506,
    ),
    (
        0.470_142_064_105_115,
        0.059_715_871_789_770,
        0.470_142_064_105_115,
        0.132_394_152_788_506,
    ),
    (
        0.470_142_064_105_115,
        0.470_142_064_105_115,
        0.059_715_871_789_770,
        0.132_394_152_788_506,
    ),
    (
        0.797_426_985_353_087,
        0.101_286_507_323_456,
        0.101_286_507_323_456,
        0.125_939_180_544_827,
    ),
    (
        0.101_286_507_323_456,
        0.797_426_985_353_087,
        0.101_286_507_323_456,
        0.125_939_180_544_827,
    ),
    (
        0.101_286_507_323_456,
        0.101_286_507_323_456,
        0.797_426_985_353_087,
        0.125_939_180_544_827,
    ),
];

/// Signed integral of `f` over the triangle `(a, b, c)`; positive for counter-clockwise order.
pub fn triangle_integral(a: [f64; 2], b: [f64; 2], c: [f64; 2], f: &mut impl FnMut(f64, f64) -> f64) -> f64 {
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    if area == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (l1, l2, l3, w) in TRIANGLE_7 {
        let x = l1 * a[0] + l2 * b[0] + l3 * c[0];
        let y = l1 * a[1] + l2 * b[1] + l3 * c[1];
        acc += w * f(x, y);
    }
    acc * area
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 3, 5, 8, 16] {
            let rule = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k} got={got}");
            }
        }
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for k in 1..15 {
            fact *= k as f64;
            assert_relative_eq!(ln_gamma(k as f64 + 1.0), fact.ln(), max_relative = 1e-13);
        }
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), max_relative = 1e-13);
    }

    #[test]
    fn power_weight_rule_moments() {
        for beta in [-0.8, -0.4, 0.0, 0.4, 1.0] {
            let rule = PowerWeightRule::new(12, beta);
            for k in 0..20 {
                // int_0^2 r^k r^beta dr
                let exact = 2f64.powf(k as f64 + beta + 1.0) / (k as f64 + beta + 1.0);
                let got = rule.integrate(2.0, |r| r.powi(k));
                assert_relative_eq!(got, exact, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn triangle_rule_is_degree_five() {
        let a = [0.1, -0.2];
        let b = [1.3, 0.4];
        let c = [0.2, 0.9];
        // Reference by a fine subdivision is avoided: compare against a Duffy-mapped tensor rule.
        let leg = gauss_legendre(10);
        for (p, q) in [(0, 0), (2, 1), (3, 2), (0, 5), (4, 1)] {
            let f = |x: f64, y: f64| x.powi(p) * y.powi(q);
            let got = triangle_integral(a, b, c, &mut |x, y| f(x, y));
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let exact = leg.integrate(0.0, 1.0, |u| {
                leg.integrate(0.0, 1.0, |v| {
                    let s = u;
                    let t = v * (1.0 - u);
                    let x = a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]);
                    let y = a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]);
                    f(x, y) * (1.0 - u)
                })
            }) * area2;
            assert_relative_eq!(got, exact, max_relative = 1e-11);
        }
    }
}
