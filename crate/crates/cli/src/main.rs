//! `qcrb` — quantum Cramér-Rao bound calculator.
//!
//! Subcommands: `fisher` (Fisher matrices and SLDs at a point), `bounds`
//! (the C / C_A / C_R report), `frontier` (covariance frontier grids),
//! `povm` (stochastic measurement search) and `sweep` (bounds along a
//! parameter range). Exit codes: 0 success, 1 usage, 2 domain error,
//! 3 numeric/search failure.

mod config;
mod report;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qcrb_core::bounds::{bound_report, frontier_point, FrontierKind, FrontierParams, WeightMatrix};
use qcrb_core::error::{CoreError, ErrorClass};
use qcrb_core::families::{eval_derivs, parse_family_spec, StateFamily};
use qcrb_core::infogeo::point_info;
use qcrb_core::povmopt::{optimize, SearchOpts};

use config::{parse_range, parse_theta, parse_weight, ConfigEcho, OutputFormat};
use report::{
    write_frontier_csv, write_sweep_csv, FisherReport, FrontierReport, ReportEnvelope,
    ResultPayload, SweepReport, SweepRow,
};

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Io(std::io::Error),
    Config(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
            CliError::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Domain => 2,
                ErrorClass::Numeric => 3,
            },
            CliError::Io(_) | CliError::Config(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "qcrb", version, about = "Quantum Cramér-Rao bound calculator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fisher matrices and SLDs at one parameter point.
    Fisher(FisherArgs),
    /// Attainable, asymptotic and RLD bounds for one (family, θ, G) query.
    Bounds(BoundsArgs),
    /// Covariance frontier over a (y, z) grid.
    Frontier(FrontierArgs),
    /// Stochastic POVM search for the best measurement.
    Povm(PovmArgs),
    /// Bounds swept along r0 or the copy count.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json or csv (csv only for frontier and sweep).
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct FisherArgs {
    /// full | r-fixed:<r0> | phi-zero | thermal:<N>:<fock_dim>
    #[arg(long)]
    family: String,
    /// Comma-separated parameter point, e.g. 1.5707963,0
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    /// Weight matrix: row-major entries, or g1,g2,g3 for 2-parameter families.
    #[arg(long = "G", allow_hyphen_values = true)]
    weight: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct FrontierArgs {
    #[arg(long)]
    family: String,
    /// single | asymptotic
    #[arg(long)]
    kind: String,
    /// y grid as start:end:steps
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    /// z grid as start:end:steps
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// Required for the full family: the reference point (r, π/2, 0).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SearchArgs {
    /// Number of i.i.d. copies measured collectively.
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// POVM outcome count (defaults to 2d+2 single-copy, 2·dim+2 collective).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    /// RNG seed; the QCRB_SEED environment variable overrides this.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PovmArgs {
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long = "G", allow_hyphen_values = true)]
    weight: String,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long = "G", allow_hyphen_values = true)]
    weight: String,
    /// r0 | n-copies
    #[arg(long)]
    param: String,
    /// start:end:steps
    #[arg(long, allow_hyphen_values = true)]
    range: String,
    /// Also run the POVM search at every step (fills the `searched` column).
    #[arg(long, default_value_t = false)]
    search: bool,
    #[command(flatten)]
    search_opts: SearchArgs,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn seed_override(flag_seed: u64) -> Result<u64, CliError> {
    match std::env::var("QCRB_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("QCRB_SEED='{v}' is not a valid u64"))),
        Err(_) => Ok(flag_seed),
    }
}

fn search_opts(args: &SearchArgs) -> Result<(SearchOpts, usize), CliError> {
    let seed = seed_override(args.seed)?;
    Ok((
        SearchOpts {
            outcomes: args.m,
            restarts: args.restarts,
            iters: args.iters,
            seed,
        },
        args.copies,
    ))
}

fn write_output(
    out: &OutputArgs,
    default_format: OutputFormat,
    envelope: &ReportEnvelope,
) -> Result<(), CliError> {
    let format = out.format.unwrap_or(default_format);
    let mut sink: Box<dyn Write> = match &out.output {
        Some(path) => Box::new(File::create(path).map_err(CliError::Io)?),
        None => Box::new(std::io::stdout()),
    };
    match (&envelope.result, format) {
        (_, OutputFormat::Json) => envelope.write_json(&mut *sink),
        (ResultPayload::Frontier(fr), OutputFormat::Csv) => write_frontier_csv(fr, &mut *sink),
        (ResultPayload::Sweep(sw), OutputFormat::Csv) => write_sweep_csv(sw, &mut *sink),
        _ => Err(CliError::Config(
            "csv output is only available for frontier and sweep".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fisher(args) => run_fisher(args),
        Command::Bounds(args) => run_bounds(args),
        Command::Frontier(args) => run_frontier(args),
        Command::Povm(args) => run_povm(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

fn run_fisher(args: FisherArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = parse_family_spec(&args.family)?;
    let theta = parse_theta(&family, &args.theta)?;
    let info = point_info(&family, &theta)?;

    let mut config = ConfigEcho::new("fisher", &args.family, OutputFormat::Json);
    config.theta = Some(theta.coords.clone());
    config.output = args.out.output.as_ref().map(|p| p.display().to_string());

    let payload = ResultPayload::Fisher(FisherReport {
        j_sld: info.j_sld.clone(),
        j_rld: info.j_rld.clone(),
        rld_note: info.rld_note.to_string(),
        slds: info.slds.mats.clone(),
    });
    let envelope = ReportEnvelope::new(config, payload, ms_since(started));
    write_output(&args.out, OutputFormat::Json, &envelope)
}

fn run_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = parse_family_spec(&args.family)?;
    let theta = parse_theta(&family, &args.theta)?;
    let weight = parse_weight(family.param_dim(), &args.weight)?;
    let report = bound_report(&family, &theta, &weight)?;

    let mut config = ConfigEcho::new("bounds", &args.family, OutputFormat::Json);
    config.theta = Some(theta.coords.clone());
    config.weight = Some(weight_entries(&weight));
    config.output = args.out.output.as_ref().map(|p| p.display().to_string());

    let envelope = ReportEnvelope::new(config, ResultPayload::Bounds(report), ms_since(started));
    write_output(&args.out, OutputFormat::Json, &envelope)
}

fn run_frontier(args: FrontierArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = parse_family_spec(&args.family)?;
    let ys = parse_range(&args.y)?;
    let zs = parse_range(&args.z)?;

    let (kind, radius) = match (&family, args.kind.as_str()) {
        (StateFamily::QubitRFixed { r0 }, "single") => (FrontierKind::RFixedSingle, *r0),
        (StateFamily::QubitRFixed { r0 }, "asymptotic") => (FrontierKind::RFixedAsymptotic, *r0),
        (StateFamily::QubitFull, "asymptotic") => {
            let theta_spec = args.theta.as_ref().ok_or_else(|| {
                CliError::Config("full-family frontier needs --theta r,1.5707963...,0".into())
            })?;
            let theta = parse_theta(&family, theta_spec)?;
            let r = theta.coords[0];
            // The asymptotic frontier is stated at the reference point
            // (r, π/2, 0) only.
            if (theta.coords[1] - std::f64::consts::FRAC_PI_2).abs() > 1e-9
                || theta.coords[2].abs() > 1e-9
            {
                return Err(CliError::Core(CoreError::ParameterDomain {
                    what: "full-family frontier is defined at (r, π/2, 0)".into(),
                }));
            }
            (FrontierKind::FullAsymptotic, r)
        }
        (_, kind) => {
            return Err(CliError::Config(format!(
                "unsupported frontier kind '{kind}' for family '{}'",
                args.family
            )))
        }
    };

    let mut points = Vec::with_capacity(ys.len() * zs.len());
    for &y in &ys {
        for &z in &zs {
            let params = match kind {
                FrontierKind::RFixedSingle => FrontierParams::RFixedSingle { r0: radius, y, z },
                FrontierKind::RFixedAsymptotic => {
                    FrontierParams::RFixedAsymptotic { r0: radius, y, z }
                }
                FrontierKind::FullAsymptotic => FrontierParams::FullAsymptotic { r: radius, y, z },
                FrontierKind::FullSingleW => unreachable!("not grid-addressable"),
            };
            points.push(frontier_point(&params)?);
        }
    }

    let mut config = ConfigEcho::new("frontier", &args.family, OutputFormat::Csv);
    config.kind = Some(args.kind.clone());
    config.y_range = Some(args.y.clone());
    config.z_range = Some(args.z.clone());
    config.output = args.out.output.as_ref().map(|p| p.display().to_string());

    let envelope = ReportEnvelope::new(
        config,
        ResultPayload::Frontier(FrontierReport { kind, points }),
        ms_since(started),
    );
    write_output(&args.out, OutputFormat::Csv, &envelope)
}

fn run_povm(args: PovmArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = parse_family_spec(&args.family)?;
    let theta = parse_theta(&family, &args.theta)?;
    let weight = parse_weight(family.param_dim(), &args.weight)?;
    let (opts, copies) = search_opts(&args.search)?;

    let fp = eval_derivs(&family, &theta)?;
    let result = optimize(&fp, &weight, copies, &opts, &theta)?;

    let mut config = ConfigEcho::new("povm", &args.family, OutputFormat::Json);
    config.theta = Some(theta.coords.clone());
    config.weight = Some(weight_entries(&weight));
    config.copies = Some(copies);
    config.outcomes = opts.outcomes;
    config.restarts = Some(opts.restarts);
    config.iters = Some(opts.iters);
    config.seed = Some(opts.seed);
    config.output = args.out.output.as_ref().map(|p| p.display().to_string());

    let envelope = ReportEnvelope::new(
        config,
        ResultPayload::Povm(Box::new(result)),
        ms_since(started),
    );
    write_output(&args.out, OutputFormat::Json, &envelope)
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = parse_family_spec(&args.family)?;
    let theta = parse_theta(&family, &args.theta)?;
    let weight = parse_weight(family.param_dim(), &args.weight)?;
    let (opts, copies) = search_opts(&args.search_opts)?;
    let steps = parse_range(&args.range)?;

    let rows = match args.param.as_str() {
        "r0" => {
            if !matches!(family, StateFamily::QubitRFixed { .. }) {
                return Err(CliError::Config(
                    "an r0 sweep needs an r-fixed family".into(),
                ));
            }
            let mut rows = Vec::with_capacity(steps.len());
            for &r0 in &steps {
                let fam = StateFamily::QubitRFixed { r0 };
                let report = bound_report(&fam, &theta, &weight)?;
                let searched = if args.search {
                    let fp = eval_derivs(&fam, &theta)?;
                    Some(optimize(&fp, &weight, copies, &opts, &theta)?.best_value)
                } else {
                    None
                };
                rows.push(make_row(r0, &report, searched));
            }
            rows
        }
        "n-copies" | "n_copies" => {
            let report = bound_report(&family, &theta, &weight)?;
            let fp = eval_derivs(&family, &theta)?;
            let mut rows = Vec::with_capacity(steps.len());
            for &step in &steps {
                let n = step.round() as usize;
                if n == 0 || (step - n as f64).abs() > 1e-9 {
                    return Err(CliError::Config(format!(
                        "copy counts must be positive integers, got {step}"
                    )));
                }
                let searched = if args.search {
                    Some(optimize(&fp, &weight, n, &opts, &theta)?.best_value)
                } else {
                    None
                };
                rows.push(make_row(n as f64, &report, searched));
            }
            rows
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter '{other}' (expected r0 or n-copies)"
            )))
        }
    };

    let mut config = ConfigEcho::new("sweep", &args.family, OutputFormat::Csv);
    config.theta = Some(theta.coords.clone());
    config.weight = Some(weight_entries(&weight));
    config.sweep_param = Some(args.param.clone());
    config.sweep_range = Some(args.range.clone());
    config.search = Some(args.search);
    if args.search {
        config.copies = Some(copies);
        config.outcomes = opts.outcomes;
        config.restarts = Some(opts.restarts);
        config.iters = Some(opts.iters);
        config.seed = Some(opts.seed);
    }
    config.output = args.out.output.as_ref().map(|p| p.display().to_string());

    let envelope = ReportEnvelope::new(
        config,
        ResultPayload::Sweep(SweepReport { rows }),
        ms_since(started),
    );
    write_output(&args.out, OutputFormat::Csv, &envelope)
}

fn make_row(
    step_value: f64,
    report: &qcrb_core::bounds::BoundReport,
    searched: Option<f64>,
) -> SweepRow {
    let gap = match (report.c_single, report.c_asymptotic) {
        (Some(c), Some(ca)) => Some(c - ca),
        _ => None,
    };
    SweepRow {
        step_value,
        c: report.c_single,
        c_a: report.c_asymptotic,
        c_r: report.c_rld,
        searched,
        gap_c_ca: gap,
    }
}

fn weight_entries(w: &WeightMatrix) -> Vec<f64> {
    let d = w.dim();
    (0..d * d).map(|i| w.entry(i / d, i % d)).collect()
}

fn ms_since(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_error_class_maps_to_one_exit_code() {
        let usage = CliError::Core(CoreError::InvalidConfig { what: "x".into() });
        assert_eq!(usage.exit_code(), 1);
        let domain = CliError::Core(CoreError::ParameterDomain { what: "x".into() });
        assert_eq!(domain.exit_code(), 2);
        let numeric = CliError::Core(CoreError::SearchFailure { reason: "x".into() });
        assert_eq!(numeric.exit_code(), 3);
        assert_eq!(CliError::Config("bad".into()).exit_code(), 1);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 1);
    }
}
