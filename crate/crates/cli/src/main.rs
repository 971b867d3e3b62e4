//! Command-line driver: parse a problem document, build the expansion, and
//! verify the claimed decay rates.
//!
//! Exit codes: 0 all checks pass, 1 a verification check failed (or could
//! not be completed numerically), 2 malformed or inadmissible input.

mod document;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscex_core::expansion::{build_expansion, ExpansionResult, Problem};
use oscex_core::verify::{
    error_check, gamma_first_order, geometric_times, parameter_count, residual,
    ErrorCheckOptions, ErrorMode, FitOptions,
};

use document::{parse_file, varpi_of, ParsedProblem, RunOptions};

#[derive(Parser)]
#[command(name = "oscex", version, about = "Asymptotic expansions of quasilinear ODE systems with oscillating coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a problem document and print its spectral/rank summary.
    Info(InfoArgs),
    /// Build the expansion and write the coefficient listing.
    Expand(ExpandArgs),
    /// Sample the residual of the truncated sum and fit its decay.
    Residual(ResidualArgs),
    /// Run the full verification: residual, error decay, gamma diagnostics,
    /// and parameter counts.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InfoArgs {
    /// Problem document (TOML).
    problem: PathBuf,
}

#[derive(Args)]
struct ExpandArgs {
    problem: PathBuf,
    /// Truncation depth (rank index).
    #[arg(long)]
    k: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include a generation timestamp header (breaks byte-for-byte
    /// reproducibility).
    #[arg(long)]
    stamp: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Npi,
    Simple,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

#[derive(Args)]
struct ResidualArgs {
    problem: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Start of the sample window (defaults to the document t0).
    #[arg(long)]
    t0: Option<f64>,
    /// End of the sample window.
    #[arg(long, default_value_t = 1e5)]
    t_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    problem: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Asymptotic-character mode (defaults to the document option, then npi).
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Summability exponent for simple mode, e.g. "11/10" or "1.1".
    #[arg(long)]
    varpi: Option<String>,
    /// Display truncation depth for the error comparison (simple mode).
    #[arg(long)]
    k0: Option<usize>,
    /// Launch time for the error integration (defaults to the document t0).
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Output directory for CSV dumps and the summary (stdout summary only
    /// when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Info(args) => cmd_info(args),
        Command::Expand(args) => cmd_expand(args),
        Command::Residual(args) => cmd_residual(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(true) => ExitCode::from(0),
        Ok(false) => {
            eprintln!("oscex: verification checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("oscex: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// CLI failure with its exit class.
enum CliError {
    /// Malformed or inadmissible input (exit 2).
    Input(String),
    /// A check could not be completed numerically (exit 1).
    Check(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Check(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 1,
        }
    }
}

impl From<document::DocError> for CliError {
    fn from(e: document::DocError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<oscex_core::Error> for CliError {
    fn from(e: oscex_core::Error) -> Self {
        use oscex_core::Error::*;
        match e {
            StepSizeUnderflow { .. } | LeftDomain { .. } => CliError::Check(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CliResult = Result<bool, CliError>;

fn depth(flag: Option<usize>, options: &RunOptions) -> usize {
    flag.or(options.k).unwrap_or(1)
}

fn cmd_info(args: InfoArgs) -> CliResult {
    let ParsedProblem {
        problem,
        separation,
        separation_full,
        ..
    } = parse_file(&args.problem)?;
    println!("dimension {}", problem.dim);
    println!("generators {}", problem.basis().len());
    let lambdas = oscex_core::osc::spectrum(&problem.a)?;
    for (j, l) in lambdas.iter().enumerate() {
        println!(
            "eigenvalue j {} {} {}",
            j + 1,
            output::fnum(l.re),
            output::fnum(l.im)
        );
    }
    println!(
        "separation lattice-vs-spectrum {} (pass {})",
        output::fnum(separation.min_distance),
        separation.pass
    );
    println!(
        "separation lattice-vs-spectrum-and-differences {} (pass {})",
        output::fnum(separation_full.min_distance),
        separation_full.pass
    );
    let ranks = oscex_core::ranks::leading_ranks(&problem.eps, 8);
    for (s, rho) in ranks.iter().enumerate() {
        let kappa = oscex_core::ranks::monomials_of_rank(&problem.eps, rho).len();
        println!("rank s {} rho {} kappa {}", s + 1, rho, kappa);
    }
    println!("eps domain-floor {}", output::fnum(problem.eps.domain_floor()));
    Ok(true)
}

fn build(problem: &Problem<f64>, k: usize) -> Result<ExpansionResult<f64>, CliError> {
    Ok(build_expansion(problem, k)?)
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_expand(args: ExpandArgs) -> CliResult {
    let parsed = parse_file(&args.problem)?;
    let k = depth(args.k, &parsed.options);
    let e = build(&parsed.problem, k)?;
    let text = output::render_expansion(&e, args.stamp);
    write_or_print(args.out.as_ref(), &text)?;
    Ok(true)
}

fn cmd_residual(args: ResidualArgs) -> CliResult {
    let parsed = parse_file(&args.problem)?;
    let k = depth(args.k, &parsed.options);
    let e = build(&parsed.problem, k)?;
    let t_lo = args.t0.unwrap_or(parsed.problem.t0);
    if t_lo >= args.t_max {
        return Err(CliError::Input(format!(
            "empty sample window [{t_lo}, {}]",
            args.t_max
        )));
    }
    let samples = geometric_times(t_lo, args.t_max, 160);
    let check = residual(&parsed.problem, &e, k, &samples, &FitOptions::default())?;
    let content = match args.format {
        Format::Csv => output::residual_csv(&check),
        Format::Structured => output::residual_structured(&check),
    };
    write_or_print(args.out.as_ref(), &content)?;
    eprint!("{}", output::decay_summary("residual", &check.report));
    Ok(check.report.pass)
}

fn cmd_verify(args: VerifyArgs) -> CliResult {
    let parsed = parse_file(&args.problem)?;
    let problem = &parsed.problem;
    let k = depth(args.k, &parsed.options);
    let mode = match args.mode {
        Some(Mode::Npi) => ErrorMode::Npi,
        Some(Mode::Simple) => ErrorMode::Simple,
        None => match parsed.options.mode.as_deref() {
            Some("simple") => ErrorMode::Simple,
            _ => ErrorMode::Npi,
        },
    };
    let varpi = match &args.varpi {
        Some(s) => Some(document::parse_rational(s).map_err(CliError::Input)?),
        None => varpi_of(&parsed.options),
    };
    if mode == ErrorMode::Simple && varpi.is_none() {
        return Err(CliError::Input("simple mode requires --varpi".into()));
    }
    let t0 = args.t0.unwrap_or(problem.t0);
    let t_max = args
        .t_max
        .or(parsed.options.t_max)
        .unwrap_or(1e5);
    let rtol = args.rtol.or(parsed.options.rtol).unwrap_or(1e-10);

    let e = build(problem, k)?;
    let mut summary = String::new();
    summary.push_str(&format!(
        "# oscex verify\nmode {}\nk {}\n",
        match mode {
            ErrorMode::Npi => "npi",
            ErrorMode::Simple => "simple",
        },
        k
    ));
    if let Some(v) = &varpi {
        summary.push_str(&format!("varpi {}\n", document::rational_str(v)));
    }

    // Residual decay of the k-truncation.
    let res_samples = geometric_times(t0, t_max.max(t0 * 100.0), 160);
    let res = residual(problem, &e, k, &res_samples, &FitOptions::default())?;
    summary.push_str(&output::decay_summary("residual", &res.report));

    // Error decay of integrated trajectories.
    let mut opts = match mode {
        ErrorMode::Npi => ErrorCheckOptions::npi(t0, t_max),
        ErrorMode::Simple => ErrorCheckOptions::simple(
            t0,
            t_max,
            varpi.clone().expect("checked above"),
            args.k0,
        ),
    };
    opts.rtol = rtol;
    let err = error_check(problem, &e, k, &opts)?;
    for launch in &err.launches {
        summary.push_str(&output::decay_summary(
            &format!("error-launch-{}", launch.launch_time),
            &launch.report,
        ));
    }

    // Gamma diagnostics and parameter counts.
    let (count, gamma_text) = match mode {
        ErrorMode::Npi => {
            let count = parameter_count(problem, None, mode, k, None)?;
            (count, String::new())
        }
        ErrorMode::Simple => {
            let diag = gamma_first_order(problem, &e)?;
            let count = parameter_count(problem, Some(&diag), mode, k, varpi.as_ref())?;
            (count, output::gamma_summary(&diag))
        }
    };
    summary.push_str(&gamma_text);
    summary.push_str(&output::count_summary(&count));

    let pass = res.report.pass && err.pass();
    summary.push_str(&format!("verdict {}\n", if pass { "PASS" } else { "FAIL" }));

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let (res_name, err_name) = match args.format {
            Format::Csv => ("residual.csv", "error.csv"),
            Format::Structured => ("residual.txt", "error.txt"),
        };
        let res_content = match args.format {
            Format::Csv => output::residual_csv(&res),
            Format::Structured => output::residual_structured(&res),
        };
        std::fs::write(dir.join(res_name), res_content)?;
        std::fs::write(dir.join(err_name), output::error_csv(&err))?;
        std::fs::write(dir.join("summary.txt"), &summary)?;
    }
    print!("{summary}");
    Ok(pass)
}
