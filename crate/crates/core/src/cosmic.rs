//! Self-gravitating string equation `-Δu = |x|^{2N} e^u + |x|^{2L} e^{au}`: masses, Kelvin
//! images, the auxiliary subsolution and blow-up floors.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::grid::{discrete_laplacian, Field2d, GridSpec, ScalarField};
use crate::quadrature::legendre_cached;
use crate::radial::{RadialParams, RadialProfile};
use crate::report::{default_tol, Verdict};

/// Decay is accepted when `-r u'` moves by less than this fraction over the last decade.
pub const DECAY_DRIFT: f64 = 0.01;
/// Radius, in grid spacings, of the disk around the origin left out of the subsolution check.
pub const EXCLUSION_CELLS: f64 = 3.0;
/// Fraction of tested nodes allowed to miss the subsolution inequality.
pub const VIOLATION_FRACTION: f64 = 1e-3;

fn neg(x: f64) -> f64 {
    x.min(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleKind {
    Flat,
    Singular { alpha: f64 },
}

/// Closed-form solutions of `-Δv = |x|^{-2α} e^v` on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bubble {
    pub kind: BubbleKind,
    pub lambda: f64,
}

/// The bubble of the given kind and concentration.
pub fn bubble_family(kind: BubbleKind, lambda: f64) -> Result<Bubble> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return precondition(format!("bubble concentration must be positive, got {lambda}"));
    }
    if let BubbleKind::Singular { alpha } = kind {
        if !(0.0..1.0).contains(&alpha) {
            return precondition(format!("cone exponent must lie in [0,1), got {alpha}"));
        }
    }
    Ok(Bubble { kind, lambda })
}

impl Bubble {
    pub fn alpha(&self) -> f64 {
        match self.kind {
            BubbleKind::Flat => 0.0,
            BubbleKind::Singular { alpha } => alpha,
        }
    }

    /// `v(r) = log(8(1-α)²λ²) - 2 log(1 + λ² r^{2-2α})`.
    pub fn at_radius(&self, r: f64) -> f64 {
        let k = 1.0 - self.alpha();
        let l2 = self.lambda * self.lambda;
        (8.0 * k * k * l2).ln() - 2.0 * (l2 * r.powf(2.0 * k)).ln_1p()
    }

    /// `e^{v} |x|^{-2α}` at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        (self.at_radius(r) - 2.0 * self.alpha() * r.ln()).exp()
    }

    /// `∫_{B_δ} e^v |x|^{-2α} = 8π(1-α) λ² δ^{2-2α} / (1 + λ² δ^{2-2α})`.
    pub fn mass_within(&self, delta: f64) -> f64 {
        let k = 1.0 - self.alpha();
        let s = self.lambda * self.lambda * delta.powf(2.0 * k);
        8.0 * PI * k * s / (1.0 + s)
    }

    pub fn total_mass(&self) -> f64 {
        8.0 * PI * (1.0 - self.alpha())
    }
}

impl Field2d for Bubble {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.at_radius(x.hypot(y))
    }
}

/// `u = log(4λ²/(1+λ²r²)²)`, the radial solution for `N = L = 0`, `a = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StringBubble {
    pub lambda: f64,
}

impl StringBubble {
    pub fn new(lambda: f64) -> Result<Self> {
        bubble_family(BubbleKind::Flat, lambda).map(|b| Self { lambda: b.lambda })
    }

    pub fn u(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        (4.0 * l2).ln() - 2.0 * (l2 * r * r).ln_1p()
    }

    pub fn du(&self, r: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        -4.0 * l2 * r / (1.0 + l2 * r * r)
    }

    /// `(1/2π) ∫_{B_δ} 2e^u = 4λ²δ²/(1+λ²δ²)`.
    pub fn local_mass(&self, delta: f64) -> f64 {
        let s = self.lambda * self.lambda * delta * delta;
        4.0 * s / (1.0 + s)
    }

    /// The exact profile sampled at nodes spaced `step` apart in `log r`.
    pub fn profile(&self, r_min: f64, r_max: f64, step: f64) -> Result<RadialProfile> {
        if !(r_min > 0.0 && r_max > r_min && step > 0.0) {
            return precondition("need 0 < r_min < r_max and a positive step");
        }
        let (t0, t1) = (r_min.ln(), r_max.ln());
        let m = ((t1 - t0) / step).ceil() as usize;
        let r: Vec<f64> = (0..=m).map(|k| (t0 + (t1 - t0) * k as f64 / m as f64).exp()).collect();
        let u = r.iter().map(|&r| self.u(r)).collect();
        let du = r.iter().map(|&r| self.du(r)).collect();
        RadialProfile::new(RadialParams::new(0.0, 0.0, 1.0)?, r, u, du, self.u(0.0), Some(r_min))
    }
}

/// Total mass `β = (1/2π) ∫ f` of a decaying radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassEstimate {
    pub beta: f64,
    /// `(1/2π) ∫_{B_R} f` by quadrature.
    pub core: f64,
    /// Contribution beyond `R` from `u ≈ -β log r + c`.
    pub tail: f64,
    /// Relative change of `-r u'` between `R/10` and `R`.
    pub drift: f64,
    pub r_trunc: f64,
    /// Change of the last self-consistency iteration plus the quadrature's disagreement with `-R u'(R)`.
    pub error: f64,
}

/// `(1/2π) ∫_{|x|>R} f` for `u = c - β log r` beyond `R`, or `None` if that tail diverges.
fn tail_mass(p: &RadialParams, r: f64, u_r: f64, beta: f64) -> Option<f64> {
    let e1 = 2.0 * p.n + 2.0 - beta;
    let e2 = 2.0 * p.l + 2.0 - p.a * beta;
    if !(e1 < 0.0 && e2 < 0.0) {
        return None;
    }
    let t = r.ln();
    Some(((2.0 * p.n + 2.0) * t + u_r).exp() / -e1 + ((2.0 * p.l + 2.0) * t + p.a * u_r).exp() / -e2)
}

pub fn total_mass(profile: &RadialProfile, r_trunc: f64) -> Result<MassEstimate> {
    if !(r_trunc <= profile.r_max() * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { r: r_trunc });
    }
    let r_trunc = r_trunc.min(profile.r_max());
    let (u_r, du_r) = profile.eval(r_trunc)?;
    let (_, du_low) = profile.eval(r_trunc / 10.0)?;
    let (p_hi, p_lo) = (r_trunc * du_r, 0.1 * r_trunc * du_low);
    let drift = ((p_hi - p_lo) / p_hi).abs();
    if !(p_hi < 0.0 && drift < DECAY_DRIFT) {
        return Err(Error::NotDecaying { drift });
    }
    let core = profile.mass_within(r_trunc)?;
    let params = &profile.params;
    let step = |beta: f64| tail_mass(params, r_trunc, u_r, beta).ok_or(Error::NotDecaying { drift });
    let beta1 = core + step(-p_hi)?;
    let tail = step(beta1)?;
    let beta = core + tail;
    Ok(MassEstimate {
        beta,
        core,
        tail,
        drift,
        r_trunc,
        error: (beta - beta1).abs() + (core + p_hi).abs(),
    })
}

/// A Kelvin image `û(r̂) = u(1/r̂) + β log(1/r̂)` with its transformed exponents.
#[derive(Debug, Clone, Serialize)]
pub struct KelvinImage {
    pub profile: RadialProfile,
    pub beta: f64,
    /// `(β - 2(N+2))/2`.
    pub n_hat: f64,
    /// `(aβ - 2(L+2))/2`.
    pub l_hat: f64,
    /// Both transformed weights are integrable at the origin: `β > 2(N+1)` and `aβ > 2(L+1)`.
    pub integrable: bool,
    /// Residual of the transformed equation on the image nodes.
    pub residual: f64,
}

pub fn kelvin_transform(profile: &RadialProfile, beta: f64) -> Result<KelvinImage> {
    if !(beta > 0.0 && beta.is_finite()) {
        return precondition(format!("total mass must be positive, got {beta}"));
    }
    if !(profile.r_max() > 1.0) {
        return Err(Error::OutOfRange { r: 1.0 });
    }
    let p = profile.params;
    let n_hat = 0.5 * (beta - 2.0 * (p.n + 2.0));
    let l_hat = 0.5 * (p.a * beta - 2.0 * (p.l + 2.0));
    let integrable = beta > 2.0 * (p.n + 1.0) && p.a * beta > 2.0 * (p.l + 1.0);
    let len = profile.len();

    // p̂ = -(p + β) cancels badly where p ≈ -β, so it is rebuilt from the mass outside each radius.
    let outer_mass = match total_mass(profile, profile.r_max()) {
        Ok(est) => {
            let pieces = profile.interval_masses();
            let mut outside = vec![est.tail; len];
            for k in (0..len - 1).rev() {
                outside[k] = outside[k + 1] + pieces[k];
            }
            Some((outside, est.beta))
        }
        Err(_) => None,
    };
    let mut r = Vec::with_capacity(len);
    let mut u = Vec::with_capacity(len);
    let mut du = Vec::with_capacity(len);
    for k in (0..len).rev() {
        let (rk, uk) = (profile.r[k], profile.u[k]);
        let p_hat = match &outer_mass {
            Some((outside, own)) => own - beta - outside[k],
            None => -(rk * profile.du[k] + beta),
        };
        let r_hat = 1.0 / rk;
        r.push(r_hat);
        u.push(uk + beta * rk.ln());
        du.push(p_hat / r_hat);
    }
    let (ur, _) = profile.eval(profile.r_max())?;
    let u0 = ur + beta * profile.r_max().ln();
    let params = RadialParams {
        n: n_hat,
        l: l_hat,
        a: p.a,
    };
    let image = RadialProfile::new(params, r, u, du, u0, None)?;
    let residual = image.equation_residual();
    Ok(KelvinImage {
        profile: image,
        beta,
        n_hat,
        l_hat,
        integrable,
        residual,
    })
}

/// Which case of the auxiliary construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxiliaryBranch {
    /// `N >= L`, `L >= 0`.
    RegularWeight,
    /// `N >= L`, `-1 < L < 0`.
    SingularWeight,
    /// `N < L`: the construction runs on `v = a u` with exponents swapped and coupling `1/a`.
    Swapped,
}

impl AuxiliaryBranch {
    pub fn select(p: &RadialParams) -> Self {
        if p.n < p.l {
            AuxiliaryBranch::Swapped
        } else if p.l >= 0.0 {
            AuxiliaryBranch::RegularWeight
        } else {
            AuxiliaryBranch::SingularWeight
        }
    }
}

/// Exponents `(n, l, a)` and scale `s` of the equation the construction runs on, `w = s u`.
fn working_params(p: &RadialParams) -> (f64, f64, f64, f64) {
    if p.n < p.l {
        (p.l, p.n, 1.0 / p.a, p.a)
    } else {
        (p.n, p.l, p.a, 1.0)
    }
}

/// `|∇V|² / (V (1+V)²)` at radius `r` from `u(r)` and `u'(r)`.
pub fn gradient_term(p: &RadialParams, r: f64, u: f64, du: f64) -> f64 {
    let (n, l, a, s) = working_params(p);
    let v = r.powf(2.0 * (n - l)) * ((1.0 - a) * s * u).exp();
    let log_slope = 2.0 * (n - l) / r + (1.0 - a) * s * du;
    v * log_slope * log_slope / (1.0 + v).powi(2)
}

/// Outcome of `-Δ_h η <= |x|^{2m} e^η` on the grid, `m = min(N, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsolutionCheck {
    pub tested: usize,
    pub violations: usize,
    /// Smallest `(|x|^{2m} e^η + Δ_h η) / max(1, |x|^{2m} e^η)`.
    pub min_margin: f64,
    pub max_abs_margin: f64,
    pub exclusion_radius: f64,
    pub tol: f64,
    /// `max{1, a}`, folded into η as `log max{1, a}`.
    pub c_a: f64,
    pub verdict: Verdict,
}

/// Mass `M_{a,N,L}` computed from `u` and, after the swap, from `v = a u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapMasses {
    pub original: f64,
    pub swapped: f64,
}

#[derive(Debug, Clone)]
pub struct AuxiliaryBundle {
    pub params: RadialParams,
    pub branch: AuxiliaryBranch,
    /// Exponent `m` of the weight `|x|^{2m}` in the subsolution inequality.
    pub weight_exponent: f64,
    pub v_a: ScalarField,
    pub xi_a: ScalarField,
    pub eta_a: ScalarField,
    pub check: SubsolutionCheck,
    pub swap_masses: Option<SwapMasses>,
}

fn screen_solution(u: &ScalarField, p: &RadialParams, tol: f64) -> Result<()> {
    let lap = discrete_laplacian(u)?;
    let g = u.grid;
    let cut = EXCLUSION_CELLS * g.h;
    let (mut tested, mut bad) = (0usize, 0usize);
    for k in 0..g.len() {
        if !lap.mask[k] {
            continue;
        }
        let (i, j) = g.coords(k);
        let r = g.x(i).hypot(g.y(j));
        if r < cut {
            continue;
        }
        let f = p.forcing(r, u.values[k]);
        tested += 1;
        if (-lap.values[k] - f).abs() > tol * f.max(1.0) {
            bad += 1;
        }
    }
    if tested == 0 {
        return Err(Error::EmptyStencil);
    }
    if bad as f64 > VIOLATION_FRACTION * tested as f64 {
        return precondition(format!("input fails the equation screen at {bad} of {tested} nodes"));
    }
    Ok(())
}

/// Builds `V_a`, `ξ_a`, `η_a` from nodal values of a solution and checks the subsolution inequality.
pub fn auxiliary_subsolution(u: &ScalarField, params: RadialParams, tol: f64) -> Result<AuxiliaryBundle> {
    if !(params.a > 0.0) {
        return precondition(format!("coupling must be positive, got a={}", params.a));
    }
    RadialParams::new(params.n, params.l, params.a)?;
    screen_solution(u, &params, tol)?;
    let g = u.grid;
    let (n, l, a, s) = working_params(&params);
    let c_a = params.a.max(1.0);
    let mut v_a = vec![f64::NAN; g.len()];
    let mut xi_a = vec![f64::NAN; g.len()];
    let mut eta_a = vec![f64::NAN; g.len()];
    for k in 0..g.len() {
        if !u.mask[k] {
            continue;
        }
        let (i, j) = g.coords(k);
        let r = g.x(i).hypot(g.y(j));
        let w = s * u.values[k];
        let v = r.powf(2.0 * (n - l)) * ((1.0 - a) * w).exp();
        let log_one_plus = v.ln_1p();
        v_a[k] = v;
        xi_a[k] = w + log_one_plus / a;
        eta_a[k] = a * w + log_one_plus + c_a.ln();
    }
    let field = |values| ScalarField::new(g, values, u.mask.clone());
    let eta = field(eta_a)?;
    let check = check_subsolution(&eta, l, c_a, tol)?;
    Ok(AuxiliaryBundle {
        params,
        branch: AuxiliaryBranch::select(&params),
        weight_exponent: l,
        v_a: field(v_a)?,
        xi_a: field(xi_a)?,
        eta_a: eta,
        check,
        swap_masses: None,
    })
}

fn check_subsolution(eta: &ScalarField, m: f64, c_a: f64, tol: f64) -> Result<SubsolutionCheck> {
    let lap = discrete_laplacian(eta)?;
    let g = eta.grid;
    let cut = EXCLUSION_CELLS * g.h;
    let (mut tested, mut violations) = (0usize, 0usize);
    let (mut min_margin, mut max_abs) = (f64::INFINITY, 0.0f64);
    for k in 0..g.len() {
        if !lap.mask[k] {
            continue;
        }
        let (i, j) = g.coords(k);
        let r = g.x(i).hypot(g.y(j));
        if r < cut {
            continue;
        }
        let rhs = r.powf(2.0 * m) * eta.values[k].exp();
        let margin = (rhs + lap.values[k]) / rhs.max(1.0);
        tested += 1;
        if !(margin >= -tol) {
            violations += 1;
        }
        min_margin = min_margin.min(margin);
        max_abs = max_abs.max(margin.abs());
    }
    if tested == 0 {
        return Err(Error::EmptyStencil);
    }
    let verdict = if violations as f64 <= VIOLATION_FRACTION * tested as f64 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SubsolutionCheck {
        tested,
        violations,
        min_margin,
        max_abs_margin: max_abs,
        exclusion_radius: cut,
        tol,
        c_a,
        verdict,
    })
}

/// Samples a radial profile on an `n`-cell grid over `B_δ` centered at the origin.
pub fn sample_profile(profile: &RadialProfile, delta: f64, n: usize) -> Result<ScalarField> {
    if !(delta > 0.0 && delta <= profile.r_max()) {
        return Err(Error::OutOfRange { r: delta });
    }
    let grid = GridSpec::covering(-delta, delta, -delta, delta, n)?;
    let mut mask = vec![false; grid.len()];
    let mut values = vec![f64::NAN; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        let r = grid.x(i).hypot(grid.y(j));
        if r < delta {
            mask[k] = true;
            values[k] = profile.eval(r)?.0;
        }
    }
    ScalarField::new(grid, values, mask)
}

/// [`auxiliary_subsolution`] on a sampled radial profile, with the swap mass identity when it applies.
pub fn auxiliary_from_profile(
    profile: &RadialProfile,
    delta: f64,
    n: usize,
    tol: Option<f64>,
) -> Result<AuxiliaryBundle> {
    let u = sample_profile(profile, delta, n)?;
    let tol = tol.unwrap_or_else(|| default_tol(u.grid.h));
    let residual = profile.equation_residual();
    if !(residual <= tol) {
        return precondition(format!("profile residual {residual:.3e} exceeds tolerance {tol:.3e}"));
    }
    let mut bundle = auxiliary_subsolution(&u, profile.params, tol)?;
    if bundle.branch == AuxiliaryBranch::Swapped {
        bundle.swap_masses = Some(swap_masses(profile, delta)?);
    }
    Ok(bundle)
}

/// `max{1,a} ∫_{B_δ} f` from `u`, and `max{1,1/a} ∫_{B_δ} a(|x|^{2L} e^v + |x|^{2N} e^{v/a})` from `v = a u`.
pub fn swap_masses(profile: &RadialProfile, delta: f64) -> Result<SwapMasses> {
    let p = profile.params;
    let original = p.a.max(1.0) * 2.0 * PI * profile.mass_within(delta)?;
    let rule = legendre_cached(8);
    let r0 = profile.r_min().min(delta);
    let mut acc = profile.mass_within(r0)?;
    let td = delta.ln();
    for k in 0..profile.len() - 1 {
        let (ta, tb) = (profile.r[k].ln(), profile.r[k + 1].ln().min(td));
        if ta >= td {
            break;
        }
        let mut err = None;
        acc += rule.integrate(ta, tb, |t| {
            let r = t.exp();
            let v = match profile.eval(r) {
                Ok((u, _)) => p.a * u,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            };
            r * r * (r.powf(2.0 * p.l) * v.exp() + r.powf(2.0 * p.n) * (v / p.a).exp())
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    let swapped = (1.0 / p.a).max(1.0) * p.a * 2.0 * PI * acc;
    Ok(SwapMasses { original, swapped })
}

/// Where a blow-up point sits, which selects the applicable floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupPoint {
    /// A finite point other than the origin.
    Regular,
    Origin,
    Infinity,
}

/// Lower bounds on the local mass `(1/2π) ∫_{B_δ} f` at a blow-up point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFloors {
    /// `4 / max{1,a}`.
    pub regular: f64,
    /// `4 (1 + N₋) / max{1,a}`.
    pub origin: f64,
    /// `(2 + min{(aβ-4)₋, (β-2(N+2))₋}) / max{1,a}`, when a total mass is known.
    pub infinity: Option<f64>,
}

impl BlowupFloors {
    pub fn new(n: f64, a: f64, beta: Option<f64>) -> Self {
        let c = a.max(1.0);
        Self {
            regular: 4.0 / c,
            origin: 4.0 * (1.0 + neg(n)) / c,
            infinity: beta.map(|b| (2.0 + neg(a * b - 4.0).min(neg(b - 2.0 * (n + 2.0)))) / c),
        }
    }

    pub fn at(&self, point: BlowupPoint) -> Option<f64> {
        match point {
            BlowupPoint::Regular => Some(self.regular),
            BlowupPoint::Origin => Some(self.origin),
            BlowupPoint::Infinity => self.infinity,
        }
    }
}

/// `8π (1 + min{N₋, L₋})`.
pub fn mass_threshold(n: f64, l: f64) -> f64 {
    8.0 * PI * (1.0 + neg(n).min(neg(l)))
}

/// `max e^u` over the closed ball against the boundary maximum scaled by the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseBound {
    pub max_interior: f64,
    pub max_boundary: f64,
    pub factor: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Provenance {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    pub r_trunc: Option<f64>,
    pub solver_tol: Option<f64>,
    pub equation_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub version: u32,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub a: f64,
    pub delta: f64,
    pub point: BlowupPoint,
    /// Total mass, when the profile decays within its range.
    pub beta_a: Option<f64>,
    pub beta_error: Option<f64>,
    /// `(1/2π) ∫_{B_δ} f`.
    pub local_mass: f64,
    /// `max{1,a} ∫_{B_δ} f`.
    #[serde(rename = "M_aNL")]
    pub m_anl: f64,
    pub threshold: f64,
    /// `(1 - M_aNL/threshold)^{-2}`, absent when the mass reaches the threshold.
    pub pointwise_bound: Option<f64>,
    pub pointwise: Option<PointwiseBound>,
    pub blowup_floors: BlowupFloors,
    /// The floor for `point`.
    pub floor: Option<f64>,
    pub provenance: Provenance,
}

/// Mass accounting in `B_δ` around the origin of a radial profile.
///
/// For a point at infinity pass the Kelvin image. `beta` overrides the total mass used by the
/// floor at infinity; otherwise it is estimated from the profile's far end when that decays.
pub fn mass_threshold_report(
    profile: &RadialProfile,
    delta: f64,
    point: BlowupPoint,
    beta: Option<f64>,
    solver_tol: Option<f64>,
) -> Result<MassReport> {
    let p = profile.params;
    let estimate = total_mass(profile, profile.r_max()).ok();
    let (beta_a, beta_error) = match (beta, estimate) {
        (Some(b), Some(e)) => (Some(b), Some((b - e.beta).abs() + e.error)),
        (Some(b), None) => (Some(b), None),
        (None, Some(e)) => (Some(e.beta), Some(e.error)),
        (None, None) => (None, None),
    };
    let local_mass = profile.mass_within(delta)?;
    let m_anl = p.a.max(1.0) * 2.0 * PI * local_mass;
    let threshold = mass_threshold(p.n, p.l);
    let pointwise_bound = (m_anl < threshold).then(|| (1.0 - m_anl / threshold).powi(-2));
    let pointwise = match pointwise_bound {
        Some(factor) => {
            let (u_edge, _) = profile.eval(delta)?;
            let interior = profile
                .u
                .iter()
                .zip(&profile.r)
                .filter(|(_, r)| **r <= delta)
                .map(|(u, _)| *u);
            let max_u = interior.chain([profile.u0, u_edge]).fold(f64::NEG_INFINITY, f64::max);
            let (max_interior, max_boundary) = (max_u.exp(), u_edge.exp());
            Some(PointwiseBound {
                max_interior,
                max_boundary,
                factor,
                holds: max_interior <= factor * max_boundary,
            })
        }
        None => None,
    };
    let blowup_floors = BlowupFloors::new(p.n, p.a, beta_a);
    Ok(MassReport {
        version: crate::report::REPORT_VERSION,
        n: p.n,
        l: p.l,
        a: p.a,
        delta,
        point,
        beta_a,
        beta_error,
        local_mass,
        m_anl,
        threshold,
        pointwise_bound,
        pointwise,
        blowup_floors,
        floor: blowup_floors.at(point),
        provenance: Provenance {
            r_min: profile.r_min(),
            r_max: profile.r_max(),
            nodes: profile.len(),
            r_trunc: estimate.map(|e| e.r_trunc),
            solver_tol,
            equation_residual: profile.equation_residual(),
        },
    })
}
