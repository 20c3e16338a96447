use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvoptbl::cli::{error_exit_code, run, Command, Format, RunConfig, Tolerances};
use mvoptbl::families::{FamilyKind, FamilySpec};
use mvoptbl::tbl::RFormula;

/// Matrix orthogonal polynomials and commuting time-band limiting operators.
#[derive(Parser)]
#[command(name = "mvoptbl", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Pearson equations, symmetry and eigenvalue identities of a family.
    VerifyPearson(Opts),
    /// Solve the central identity for R.
    SolveR(Opts),
    /// Assemble T and optionally check that it commutes with time and band limiting.
    BuildT(Opts),
    /// Solve the identity for the free Hermite weight over random parameter draws.
    Counterexample(Opts),
    /// Run the whole acceptance grid.
    Regress(Opts),
    /// List the available families and parameter sets.
    Families(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaArg {
    TwoMSquared,
    MSquared,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct Opts {
    /// hermite, laguerre, gegenbauer, charlier or hermite-free
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 2)]
    size: usize,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1)]
    set: u8,
    /// Gegenbauer: size is 2 ell + 1
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Additive constant of the third parameter set
    #[arg(long = "c")]
    c_shift: Option<f64>,
    /// Charlier parameter
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lag_a: Option<f64>,
    /// Free Hermite alphas, comma separated
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Free Hermite t values, comma separated
    #[arg(long, value_delimiter = ',')]
    ts: Option<Vec<f64>>,
    #[arg(long = "M", default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    omega: f64,
    #[arg(long, value_enum, default_value_t = FormulaArg::TwoMSquared)]
    formula: FormulaArg,
    /// Run the commutation checks (build-t)
    #[arg(long)]
    check: bool,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_consistent: Option<f64>,
    #[arg(long)]
    tol_inconsistent: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6")]
    sizes: Vec<usize>,
    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

fn family_spec(o: &Opts) -> Result<Option<FamilySpec>, String> {
    let Some(name) = &o.family else { return Ok(None) };
    let kind: FamilyKind = name.parse().map_err(|_| format!("unknown family `{name}`"))?;
    let mut spec = match kind {
        FamilyKind::Hermite => FamilySpec::hermite(o.set, o.size, o.nu),
        FamilyKind::Laguerre => FamilySpec::laguerre(o.set, o.size, o.nu),
        FamilyKind::Gegenbauer => {
            let two_ell = match o.ell {
                Some(ell) if ell >= 0.0 && (2.0 * ell).fract() == 0.0 => (2.0 * ell) as usize,
                Some(ell) => return Err(format!("ell must be a non-negative multiple of 1/2, got {ell}")),
                None => o.size.checked_sub(1).ok_or("size must be at least 1")?,
            };
            FamilySpec::gegenbauer(two_ell, o.nu)
        }
        FamilyKind::Charlier => {
            if o.nu < 0.0 || o.nu.fract() != 0.0 {
                return Err(format!("charlier nu must be a non-negative integer, got {}", o.nu));
            }
            FamilySpec::charlier(o.size, o.nu as u32, o.a.unwrap_or(1.0))
        }
        FamilyKind::HermiteFree => FamilySpec::hermite_free(o.size),
    };
    if let Some(v) = o.lambda {
        spec = spec.with_lambda(v);
    }
    if let Some(v) = o.rho {
        spec = spec.with_rho(v);
    }
    if let Some(v) = o.c_shift {
        spec = spec.with_c_shift(v);
    }
    if let Some(v) = o.lag_a {
        spec = spec.with_lag_a(v);
    }
    if o.alphas.is_some() || o.ts.is_some() {
        let n = spec.size;
        let alphas = o.alphas.clone().unwrap_or_else(|| vec![1.0; n]);
        let ts = o.ts.clone().unwrap_or_else(|| (1..=n).map(|j| j as f64).collect());
        spec = spec.with_free_params(alphas, ts);
    }
    Ok(Some(spec))
}

fn config(command: Command, o: Opts) -> Result<RunConfig, String> {
    let mut c = RunConfig::new(command);
    c.family = family_spec(&o)?;
    c.m = o.m;
    c.omega = o.omega;
    c.formula = match o.formula {
        FormulaArg::TwoMSquared => RFormula::TwoMSquared,
        FormulaArg::MSquared => RFormula::MSquared,
    };
    c.check = o.check;
    let d = Tolerances::default();
    c.tolerances = Tolerances {
        identity: o.tol_identity.unwrap_or(d.identity),
        consistent: o.tol_consistent.unwrap_or(d.consistent),
        inconsistent: o.tol_inconsistent.unwrap_or(d.inconsistent),
    };
    c.nodes = o.nodes;
    c.n_max = o.n_max;
    c.seed = o.seed;
    c.trials = o.trials;
    c.sizes = o.sizes;
    c.format = match o.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    c.out = o.out;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("MVOPTBL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let (command, opts) = match cli.command {
        Cmd::VerifyPearson(o) => (Command::VerifyPearson, o),
        Cmd::SolveR(o) => (Command::SolveR, o),
        Cmd::BuildT(o) => (Command::BuildT, o),
        Cmd::Counterexample(o) => (Command::Counterexample, o),
        Cmd::Regress(o) => (Command::Regress, o),
        Cmd::Families(o) => (Command::Families, o),
    };
    let config = match config(command, opts) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(error_exit_code(&e) as u8);
        }
    };
    match config.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    if let Some(path) = &config.out {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
