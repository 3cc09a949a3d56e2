//! Command-line front end: every run writes its resolved configuration next
//! to the data so that it can be replayed.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "EQUIDIST_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "equidist", version, about = "Equidistribution experiments for lattice points, Heegner points and closed geodesics")]
pub struct Cli {
    /// Seed for every random stream of the run
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; defaults to $EQUIDIST_OUTPUT_DIR/<command>.<ext>, else stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker thread cap
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Lattice points x₁² + x₂² + x₃² = n
    Enumerate(EnumerateArgs),
    /// Reduced binary quadratic forms and Heegner points of discriminant D
    Forms(FormsArgs),
    /// Primitive closed geodesics of discriminant D > 0
    Geodesics(GeodesicsArgs),
    /// Variance of a point set or geodesic set in annuli
    Variance(VarianceArgs),
    /// Linnik-type minima of |x₃|
    Linnik(LinnikArgs),
    /// Covering radius of Ê(n)
    Covering(CoveringArgs),
    /// Selberg–Harish-Chandra transform profile of an annulus
    Transforms(TransformsArgs),
    /// Identity suites
    Check(CheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Enumerate(_) => "enumerate",
            Command::Forms(_) => "forms",
            Command::Geodesics(_) => "geodesics",
            Command::Variance(_) => "variance",
            Command::Linnik(_) => "linnik",
            Command::Covering(_) => "covering",
            Command::Transforms(_) => "transforms",
            Command::Check(_) => "check",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub n: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct FormsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub d: i64,
    /// Table written in CSV mode
    #[arg(long, value_enum, default_value_t = FormsTable::Forms)]
    pub table: FormsTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormsTable {
    Forms,
    Heegner,
}

#[derive(Args, Debug, Serialize)]
pub struct GeodesicsArgs {
    #[arg(long)]
    pub d: i64,
    /// Include the sampled paths in JSON output
    #[arg(long)]
    pub paths: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct VarianceArgs {
    /// Sphere norms n (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u64>,
    /// Discriminants D (comma separated; D < 0 Heegner points, D > 0 geodesics)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub d: Vec<i64>,
    /// Sizes of synthetic i.i.d. uniform point sets (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub random: Vec<u64>,
    /// Run the 30-configuration sphere regression grid
    #[arg(long)]
    pub grid: bool,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 400)]
    pub lmax: u32,
    #[arg(long, value_enum, default_value_t = MembershipArg::Kernel)]
    pub membership: MembershipArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MembershipArg {
    Kernel,
    Quotient,
}

#[derive(Args, Debug, Serialize)]
pub struct LinnikArgs {
    /// Single n: report min |x₃| (and the rotated measure when --psi is given)
    #[arg(long, conflicts_with_all = ["lo", "hi"])]
    pub n: Option<u64>,
    #[arg(long, requires = "hi")]
    pub lo: Option<u64>,
    #[arg(long, requires = "lo")]
    pub hi: Option<u64>,
    /// Scan exponent; the bound is n^exponent
    #[arg(long, default_value_t = 0.5 - 1.0 / 18.0)]
    pub exponent: f64,
    #[arg(long, requires = "n")]
    pub psi: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct CoveringArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 64)]
    pub grid: u32,
}

#[derive(Args, Debug, Serialize)]
pub struct TransformsArgs {
    #[arg(long, value_enum, default_value_t = SpaceArg::Sphere)]
    pub space: SpaceArg,
    #[arg(long)]
    pub r: f64,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Frequencies (comma separated); defaults to 0..=fmax
    #[arg(long, value_delimiter = ',')]
    pub freq: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub fmax: f64,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceArg {
    Sphere,
    Hyperbolic,
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    /// miyake, voronoi, mellin, hfactor, mds, mainterm or all
    #[arg(long, default_value = "all")]
    pub suite: String,
}

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const DOMAIN: u8 = 1;
    pub const IDENTITY: u8 = 2;
    pub const RESOURCE: u8 = 3;
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => exit::OK,
                _ => exit::DOMAIN,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(exit::DOMAIN);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().expect("thread pool is configured once");
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<equidist::Error>() {
                Some(equidist::Error::Resource(_)) => exit::RESOURCE,
                _ => exit::DOMAIN,
            };
            ExitCode::from(code)
        }
    }
}
