use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "liouville",
    version,
    about = "Weighted isoperimetric checks, rearrangements and string-equation masses",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Grid cells across the domain's bounding box.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Verdict tolerance; defaults to max(1e-3, 5h).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Directory for report.json, curve CSVs and manifest.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the `random` field.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file whose keys act as default flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one inequality.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
    /// Decompose a subsolution and test the monotonicity of P and J.
    Rearrange(ProblemArgs),
    /// String-equation profiles, masses and floors.
    Cosmic {
        #[command(subcommand)]
        op: CosmicOp,
    },
    /// Run every `[[run]]` entry of a TOML file.
    Sweep {
        config_file: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckKind {
    Huber(ProblemArgs),
    Bol(ProblemArgs),
    Alexandrov(ProblemArgs),
    Pointwise(ProblemArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// `disk:R[@x,y]`, `annulus:r1,r2[@x,y]`, `square:s[@x,y]` or `poly:x,y;x,y;...[|hole...]`.
    #[arg(long)]
    pub domain: Option<String>,
    /// `zero`, `const:c`, `quad:c` (c|x|²), `bubble:λ`, `random` or `file:PATH`.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Comparison curvature.
    #[arg(long = "k0", default_value_t = 0.5)]
    pub k0: f64,
    /// Constant value of V̂.
    #[arg(long, default_value_t = 1.0)]
    pub vhat: f64,
    /// Subharmonic background: `zero`, `linear:a,b` or `quad:c` (c|x|², c >= 0).
    #[arg(long, default_value = "zero")]
    pub g: String,
    /// Number of levels in the level-set dump.
    #[arg(long, default_value_t = 256)]
    pub levels: usize,
}

#[derive(Debug, Subcommand)]
pub enum CosmicOp {
    /// Integrate the radial equation.
    Solve(ProfileArgs),
    /// Mass accounting in a ball and the blow-up floors.
    Mass {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = PointArg::Regular)]
        point: PointArg,
        /// Total mass used by the floor at infinity; estimated when omitted.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Kelvin transform of a profile.
    Kelvin {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Build and check the auxiliary subsolution on a ball.
    Aux {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Floors and threshold from the parameters alone.
    Floors {
        #[arg(long = "N", default_value_t = 0.0, allow_negative_numbers = true)]
        n_exp: f64,
        #[arg(long = "L", default_value_t = 0.0, allow_negative_numbers = true)]
        l_exp: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Profile CSV; otherwise the equation is solved from the parameters below.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "N", allow_negative_numbers = true)]
    pub n_exp: Option<f64>,
    #[arg(long = "L", allow_negative_numbers = true)]
    pub l_exp: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u0: Option<f64>,
    #[arg(long, default_value_t = 1e4)]
    pub rmax: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub solver_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointArg {
    Regular,
    Origin,
    Infinity,
}
