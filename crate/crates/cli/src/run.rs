//! Command execution. Every command returns its report and curve files; nothing is written here.

use std::fs::File;
use std::io::BufReader;

use conical_liouville::cosmic::{
    auxiliary_from_profile, kelvin_transform, mass_threshold, mass_threshold_report, total_mass, BlowupFloors,
    BlowupPoint,
};
use conical_liouville::geometry::{huber_check, Discretization};
use conical_liouville::inequalities::{check_alexandrov, check_bol, check_pointwise, sample_field};
use conical_liouville::radial::{solve_radial_ode, RadialParams, RadialProfile};
use conical_liouville::rearrangement::{
    build_level_data, decompose_subsolution, lipschitz_estimate, verify_monotonicity,
};
use conical_liouville::report::{Verdict, REPORT_VERSION};
use conical_liouville::weight::ConformalWeight;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CheckKind, Command, CosmicOp, GlobalArgs, PointArg, ProblemArgs, ProfileArgs};
use crate::error::{usage, CliResult};
use crate::inputs::{parse_background, parse_domain, parse_field, DomainSpec, FieldSpec};

const DEFAULT_N: usize = 256;
const DEFAULT_AUX_N: usize = 128;
/// Window of the Lipschitz estimate, as fractions of the total measure.
const LIPSCHITZ_WINDOW: (f64, f64) = (0.2, 0.8);

/// Result of one command: its JSON report, exit code and named curve files.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub exit: i32,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: impl Serialize, verdict: Option<Verdict>) -> CliResult<Self> {
        Ok(Self {
            report: serde_json::to_value(report).map_err(|e| crate::error::CliError::Parse(e.to_string()))?,
            exit: verdict.map_or(0, Verdict::exit_code),
            files: Vec::new(),
        })
    }

    fn with_file(mut self, name: &str, contents: Vec<u8>) -> Self {
        self.files
            .push((name.to_string(), String::from_utf8_lossy(&contents).into_owned()));
        self
    }
}

pub fn execute(command: &Command, global: &GlobalArgs) -> CliResult<Outcome> {
    match command {
        Command::Check { kind } => check(kind, global),
        Command::Rearrange(args) => rearrange(args, global),
        Command::Cosmic { op } => cosmic(op, global),
        Command::Sweep { .. } => usage("sweep cannot be nested"),
    }
}

struct Problem {
    domain: DomainSpec,
    field: FieldSpec,
    weight: ConformalWeight,
    disc: Discretization,
    flat_background: bool,
}

fn problem(args: &ProblemArgs, global: &GlobalArgs, needs_field: bool) -> CliResult<Problem> {
    let n = global.n.unwrap_or(DEFAULT_N);
    if n < 8 {
        return usage(format!("--n must be at least 8, got {n}"));
    }
    let Some(domain_spec) = args.domain.as_deref() else {
        return usage("missing --domain");
    };
    let domain = parse_domain(domain_spec, n)?;
    let field_spec = match (args.field.as_deref(), needs_field) {
        (Some(f), _) => f,
        (None, false) => "zero",
        (None, true) => return usage("missing --field"),
    };
    let field = parse_field(field_spec, args.alpha, global.seed.unwrap_or(0), &domain.domain)?;
    let weight = ConformalWeight::new(args.alpha, args.k0)?
        .with_constant_vhat(args.vhat)?
        .with_g(parse_background(&args.g)?);
    let mut disc = Discretization::new(n);
    if let Some(t) = global.tol {
        if t.is_nan() || t <= 0.0 {
            return usage(format!("--tol must be positive, got {t}"));
        }
        disc = disc.with_tol(t);
    }
    Ok(Problem {
        domain,
        field,
        weight,
        disc,
        flat_background: args.g == "zero",
    })
}

impl Problem {
    /// Disk and field for which the inequality is known to be an equality.
    fn bubble_equality(&self) -> bool {
        self.field.is_bubble
            && self.flat_background
            && self.domain.is_disk
            && (self.domain.centered_disk || self.weight.alpha == 0.0)
    }
}

fn check(kind: &CheckKind, global: &GlobalArgs) -> CliResult<Outcome> {
    match kind {
        CheckKind::Huber(args) => {
            let p = problem(args, global, false)?;
            let hint = p.flat_background && p.domain.is_disk && (p.domain.centered_disk || p.weight.alpha == 0.0);
            let r = huber_check(&p.domain.domain, &p.weight, &p.disc)?.with_equality_hint(hint);
            Outcome::new(&r, Some(r.verdict))
        }
        CheckKind::Bol(args) => {
            let p = problem(args, global, true)?;
            let r = check_bol(&p.domain.domain, p.field.field.as_ref(), &p.weight, &p.disc)?
                .with_equality_hint(p.bubble_equality());
            Outcome::new(&r, Some(r.verdict))
        }
        CheckKind::Alexandrov(args) => {
            let p = problem(args, global, true)?;
            let hint = p.bubble_equality() && p.weight.k0 == 0.5 && p.weight.vhat_is_unit();
            let r = check_alexandrov(&p.domain.domain, p.field.field.as_ref(), &p.weight, &p.disc)?
                .with_equality_hint(hint);
            Outcome::new(&r, Some(r.verdict))
        }
        CheckKind::Pointwise(args) => {
            let p = problem(args, global, true)?;
            let r = check_pointwise(&p.domain.domain, p.field.field.as_ref(), &p.weight, &p.disc)?;
            Outcome::new(&r, Some(r.verdict))
        }
    }
}

#[derive(Serialize)]
struct LevelSummary {
    alpha: f64,
    #[serde(rename = "K0")]
    k0: f64,
    cone_factor: f64,
    gamma_plus: f64,
    t_m: f64,
    mu0: f64,
    total_mass: f64,
    t0: Option<f64>,
    s0: Option<f64>,
    resolution: f64,
    levels: usize,
}

fn rearrange(args: &ProblemArgs, global: &GlobalArgs) -> CliResult<Outcome> {
    let p = problem(args, global, true)?;
    let v = sample_field(&p.domain.domain, p.field.field.as_ref(), &p.disc)?;
    let tol = p.disc.tol_for(v.grid.h);
    let dec = decompose_subsolution(&p.domain.domain, &v, &p.weight, tol)?;
    let ls = build_level_data(&dec, &p.weight, args.levels)?;
    let mono = verify_monotonicity(&ls);
    let lipschitz = lipschitz_estimate(&ls, LIPSCHITZ_WINDOW.0 * ls.mu0, LIPSCHITZ_WINDOW.1 * ls.mu0).ok();
    let summary = LevelSummary {
        alpha: ls.alpha,
        k0: ls.k0,
        cone_factor: ls.cone_factor,
        gamma_plus: ls.gamma_plus,
        t_m: ls.t_m,
        mu0: ls.mu0,
        total_mass: ls.total_mass(),
        t0: ls.t0,
        s0: ls.s0,
        resolution: ls.resolution,
        levels: ls.levels.len(),
    };
    let report = json!({
        "version": REPORT_VERSION,
        "tol": tol,
        "level_set": summary,
        "monotonicity": mono,
        "lipschitz": { "window": [LIPSCHITZ_WINDOW.0 * ls.mu0, LIPSCHITZ_WINDOW.1 * ls.mu0], "constant": lipschitz },
    });
    let mut csv = Vec::new();
    ls.write_csv(&mut csv)?;
    Ok(Outcome::new(report, Some(mono.verdict))?.with_file("level_set.csv", csv))
}

struct LoadedProfile {
    profile: RadialProfile,
    solver_tol: Option<f64>,
}

fn load_profile(args: &ProfileArgs) -> CliResult<LoadedProfile> {
    let params = match (args.n_exp, args.l_exp, args.a) {
        (None, None, None) => None,
        (n, l, a) => Some(RadialParams::new(n.unwrap_or(0.0), l.unwrap_or(0.0), a.unwrap_or(1.0))?),
    };
    if let Some(path) = &args.input {
        let profile = RadialProfile::read_csv(BufReader::new(File::open(path)?), params)?;
        return Ok(LoadedProfile {
            profile,
            solver_tol: None,
        });
    }
    let Some(u0) = args.u0 else {
        return usage("give --in PROFILE or --u0 with the equation parameters");
    };
    let p = params.unwrap_or(RadialParams::new(0.0, 0.0, 1.0)?);
    let profile = solve_radial_ode(p.n, p.l, p.a, u0, args.rmax, args.solver_tol)?;
    Ok(LoadedProfile {
        profile,
        solver_tol: Some(args.solver_tol),
    })
}

fn profile_csv(profile: &RadialProfile) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    profile.write_csv(&mut out)?;
    Ok(out)
}

fn cosmic(op: &CosmicOp, global: &GlobalArgs) -> CliResult<Outcome> {
    match op {
        CosmicOp::Solve(args) => {
            let loaded = load_profile(args)?;
            let prof = &loaded.profile;
            let mass = total_mass(prof, prof.r_max());
            let report = json!({
                "version": REPORT_VERSION,
                "params": prof.params,
                "u0": prof.u0,
                "r_max": prof.r_max(),
                "nodes": prof.len(),
                "solver_tol": loaded.solver_tol,
                "equation_residual": prof.equation_residual(),
                "mass": mass.as_ref().ok(),
                "mass_error": mass.as_ref().err().map(|e| e.to_string()),
            });
            Ok(Outcome::new(report, None)?.with_file("profile.csv", profile_csv(prof)?))
        }
        CosmicOp::Mass {
            profile,
            delta,
            point,
            beta,
        } => {
            let loaded = load_profile(profile)?;
            let point = match point {
                PointArg::Regular => BlowupPoint::Regular,
                PointArg::Origin => BlowupPoint::Origin,
                PointArg::Infinity => BlowupPoint::Infinity,
            };
            let r = mass_threshold_report(&loaded.profile, *delta, point, *beta, loaded.solver_tol)?;
            Outcome::new(r, None)
        }
        CosmicOp::Kelvin { profile, beta } => {
            let loaded = load_profile(profile)?;
            let prof = &loaded.profile;
            let beta = match beta {
                Some(b) => *b,
                None => total_mass(prof, prof.r_max())?.beta,
            };
            let img = kelvin_transform(prof, beta)?;
            let report = json!({
                "version": REPORT_VERSION,
                "beta": img.beta,
                "N_hat": img.n_hat,
                "L_hat": img.l_hat,
                "integrable": img.integrable,
                "equation_residual": img.residual,
                "nodes": img.profile.len(),
                "u0": img.profile.u0,
            });
            Ok(Outcome::new(report, None)?.with_file("kelvin.csv", profile_csv(&img.profile)?))
        }
        CosmicOp::Aux { profile, delta } => {
            let loaded = load_profile(profile)?;
            let n = global.n.unwrap_or(DEFAULT_AUX_N);
            let b = auxiliary_from_profile(&loaded.profile, *delta, n, global.tol)?;
            let report = json!({
                "version": REPORT_VERSION,
                "params": b.params,
                "branch": b.branch,
                "weight_exponent": b.weight_exponent,
                "check": b.check,
                "swap_masses": b.swap_masses,
            });
            let mut eta = Vec::new();
            b.eta_a.write_csv(&mut eta)?;
            Ok(Outcome::new(report, Some(b.check.verdict))?.with_file("eta.csv", eta))
        }
        CosmicOp::Floors { n_exp, l_exp, a, beta } => {
            RadialParams::new(*n_exp, *l_exp, *a)?;
            let floors = BlowupFloors::new(*n_exp, *a, *beta);
            let report = json!({
                "version": REPORT_VERSION,
                "N": n_exp,
                "L": l_exp,
                "a": a,
                "beta": beta,
                "threshold": mass_threshold(*n_exp, *l_exp),
                "blowup_floors": floors,
            });
            Outcome::new(report, None)
        }
    }
}
