//! Command-line front end. [`run`] returns the process exit code so the
//! commands can be driven from tests.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{bound_for, BoundSide, Prescription};
use crate::certify::{certify_gap, certify_prescription, GapBoxSet};
use crate::error::{invalid, Error, Result};
use crate::grid::fmt_num;
use crate::market::{
    generate_min_digital_quotes, generate_pairwise_digital_quotes, mc_benchmark_prices, quotes_from_csv, BSModel,
    CorrelationMatrix, MarketQuote, QuoteKind,
};
use crate::payoff::{IntegrationConfig, Order, PayoffDescriptor, PayoffKind};
use crate::pricing::{
    min_digital_prescription, pairwise_prescription, price_bounds_csv, quantile_strike_grid, ImprovedBounds,
    PriceBounds, QuotePolicy,
};
use crate::qcopula::{DependenceFunction, Point};
use crate::suites::{self, Fault, Suite, SuiteConfig};
use crate::svg::{LineChart, Series};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ENVELOPE: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "COPULA_BOUNDS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "copula-bounds", version, about = "Improved Fréchet–Hoeffding bounds and model-free price bounds")]
pub struct Cli {
    /// Seed for Monte Carlo and randomized suites.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_abs: f64,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol_rel: f64,
    /// Output directory; results are also printed to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the improved lower and upper bounds of a prescription.
    EvalBound(EvalBoundArgs),
    /// Search for a negative-volume box proving a bound is not a copula.
    Certify(CertifyArgs),
    /// Regenerate the pairwise-digital or min-digital price-bound sweeps.
    ReproduceFig(FigArgs),
    /// Price bounds for a payoff from quotes and a model's marginals.
    PriceBounds(PriceArgs),
    /// Run the randomized invariant suites.
    CheckProperties(CheckArgs),
}

#[derive(Debug, clap::Args)]
pub struct EvalBoundArgs {
    /// Prescription CSV (`d,side` header, then `x_1,...,x_d,value` rows).
    #[arg(long)]
    pub prescription: PathBuf,
    /// Evaluation point `u_1,...,u_d`; repeatable.
    #[arg(long = "point", allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// File with one evaluation point per line.
    #[arg(long = "points")]
    pub points_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reference {
    Independence,
    Comonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, clap::Args)]
pub struct CertifyArgs {
    /// Copula-scale prescription whose points avoid the gaps.
    #[arg(long, conflicts_with = "reference")]
    pub prescription: Option<PathBuf>,
    /// Reference copula prescribed on the whole gap-box set.
    #[arg(long, value_enum)]
    pub reference: Option<Reference>,
    /// Dimension when a reference copula is used.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Gap starts `s_1,s_2,s_3`.
    #[arg(long)]
    pub s: String,
    /// Gap widths `eps_1,eps_2,eps_3`.
    #[arg(long)]
    pub eps: String,
    /// The three 0-based coordinates carrying gaps.
    #[arg(long, default_value = "0,1,2")]
    pub indices: String,
    #[arg(long, value_enum, default_value_t = Side::Lower)]
    pub side: Side,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Digital put on the maximum from pairwise digital quotes.
    Fig1,
    /// Call on the minimum from two basket min-digital quotes.
    Fig2,
}

#[derive(Debug, clap::Args)]
pub struct FigArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Upper-triangle correlations `r12,r13,r23`; defaults to 0.3 (fig1)
    /// or 0 (fig2) for every pair.
    #[arg(long, allow_hyphen_values = true)]
    pub correlations: Option<String>,
    #[arg(long, default_value = "10,10,10")]
    pub spots: String,
    /// Model TOML; overrides spots and correlations.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of strikes in the evaluation grid.
    #[arg(long, default_value_t = 21)]
    pub strikes: usize,
    #[arg(long, default_value_t = 0.01)]
    pub q_min: f64,
    #[arg(long, default_value_t = 0.99)]
    pub q_max: f64,
    /// Quantile levels of the two quoted strikes (fig2).
    #[arg(long, default_value = "0.3,0.7")]
    pub quote_quantiles: String,
    /// Monte Carlo paths for the benchmark.
    #[arg(long, default_value_t = 1_000_000)]
    pub paths: usize,
    /// Clip envelope-violating quotes instead of rejecting them.
    #[arg(long)]
    pub clip_quotes: bool,
}

#[derive(Debug, clap::Args)]
pub struct PriceArgs {
    /// Model TOML with `spots`, `correlations` and optional `vols`.
    #[arg(long)]
    pub model: PathBuf,
    /// Quote CSV `kind,indices,strike,price`.
    #[arg(long, conflicts_with = "generate")]
    pub quotes: Option<PathBuf>,
    /// Generate quotes from the model instead of reading them.
    #[arg(long, value_enum)]
    pub generate: Option<GenerateKind>,
    /// Strikes of generated quotes.
    #[arg(long)]
    pub quote_strikes: Option<String>,
    /// Payoff kind, e.g. `call-on-min`.
    #[arg(long)]
    pub payoff: String,
    /// Comma-separated strikes; defaults to a quantile grid.
    #[arg(long)]
    pub strikes: Option<String>,
    #[arg(long, default_value_t = 21)]
    pub n_strikes: usize,
    #[arg(long, default_value_t = 0.01)]
    pub q_min: f64,
    #[arg(long, default_value_t = 0.99)]
    pub q_max: f64,
    /// Monte Carlo benchmark paths; 0 disables the benchmark.
    #[arg(long, default_value_t = 0)]
    pub paths: usize,
    #[arg(long)]
    pub clip_quotes: bool,
    /// Compare against linear-programming bounds (not available).
    #[arg(long)]
    pub compare_lp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    Pairwise,
    MinDigital,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    /// `all`, `subset`, `qc4`, `payoff`, `market` or `certify`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Dimension for the qc4 suite.
    #[arg(long = "d", default_value_t = 3)]
    pub dim: usize,
    /// Lattice resolution for the qc4 suite.
    #[arg(long = "n", default_value_t = 8)]
    pub resolution: usize,
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    /// Inject a known defect to confirm the suites fail.
    #[arg(long, value_enum)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    Lipschitz,
}

/// Builds the global worker pool from [`THREADS_ENV`], if set.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::EvalBound(a) => eval_bound(&cli, a, out),
        Command::Certify(a) => certify(&cli, a, out),
        Command::ReproduceFig(a) => reproduce_fig(&cli, a, out, err),
        Command::PriceBounds(a) => price_bounds(&cli, a, out, err),
        Command::CheckProperties(a) => check_properties(&cli, a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&cli.command, &e)
        }
    }
}

fn exit_code(cmd: &Command, e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::InvalidInput(_) | Error::DimensionTooLarge { .. } => EXIT_PARSE,
        Error::InvalidPrescription(_) | Error::InconsistentQuotes(_) => EXIT_ENVELOPE,
        _ => match cmd {
            Command::ReproduceFig(_) | Command::PriceBounds(_) => EXIT_COMPUTE,
            _ => EXIT_FAILURE,
        },
    }
}

fn integration(cli: &Cli) -> Result<IntegrationConfig> {
    let cfg = IntegrationConfig { abs_tol: cli.tol_abs, rel_tol: cli.tol_rel, ..Default::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {t:?}: {e}"))))
        .collect()
}

fn triple(s: &str) -> Result<[f64; 3]> {
    let v = numbers(s)?;
    v.try_into().map_err(|v: Vec<f64>| Error::Parse(format!("expected three numbers, got {}", v.len())))
}

fn write_output(cli: &Cli, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn eval_bound(cli: &Cli, a: &EvalBoundArgs, out: &mut dyn Write) -> Result<i32> {
    let p = Prescription::from_csv(&read(&a.prescription)?)?;
    let mut pts = a.points.clone();
    if let Some(f) = &a.points_file {
        pts.extend(read(f)?.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
    }
    if pts.is_empty() {
        return Err(Error::Parse("no evaluation points given".into()));
    }
    let lo = bound_for(&p, BoundSide::Lower)?;
    let hi = bound_for(&p, BoundSide::Upper)?;
    let mut s = String::new();
    for t in &pts {
        let u = Point::new(numbers(t)?).map_err(|e| Error::Parse(e.to_string()))?;
        if u.dim() != p.dim() {
            return Err(Error::Parse(format!("point {t:?} has {} coordinates, expected {}", u.dim(), p.dim())));
        }
        s.push_str(&format!("{},{}\n", fmt_num(lo.eval(u.coords())), fmt_num(hi.eval(u.coords()))));
    }
    out.write_all(s.as_bytes())?;
    write_output(cli, "bounds.csv", &format!("lower,upper\n{s}"))?;
    Ok(0)
}

fn certify(cli: &Cli, a: &CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let side = match a.side {
        Side::Lower => BoundSide::Lower,
        Side::Upper => BoundSide::Upper,
    };
    let idx = numbers(&a.indices)?;
    if idx.len() != 3 || idx.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
        return Err(Error::Parse("indices must be three nonnegative integers".into()));
    }
    let idx = [idx[0] as usize, idx[1] as usize, idx[2] as usize];
    let (s, eps) = (triple(&a.s)?, triple(&a.eps)?);
    let cert = match (&a.prescription, a.reference) {
        (Some(path), _) => {
            let p = Prescription::from_csv(&read(path)?)?;
            let gap = GapBoxSet::new(p.dim(), idx, s, eps)?;
            certify_prescription(&p, &gap, side)?
        }
        (None, Some(r)) => {
            let c = match r {
                Reference::Independence => DependenceFunction::independence(a.dim)?,
                Reference::Comonotone => DependenceFunction::upper_frechet(a.dim)?,
            };
            certify_gap(&c, &GapBoxSet::new(a.dim, idx, s, eps)?, side)?
        }
        (None, None) => return Err(Error::Parse("give --prescription or --reference".into())),
    };
    let text = match &cert {
        Some(c) => c.to_csv(),
        None => "none\n".to_string(),
    };
    out.write_all(text.as_bytes())?;
    write_output(cli, "certificate.csv", &text)?;
    Ok(0)
}

fn fig_model(a: &FigArgs) -> Result<BSModel> {
    if let Some(path) = &a.model {
        return BSModel::from_toml(&read(path)?);
    }
    let spots = numbers(&a.spots)?;
    let d = spots.len();
    let corr = match &a.correlations {
        Some(c) => numbers(c)?,
        None => {
            let rho = if a.figure == Figure::Fig1 { 0.3 } else { 0.0 };
            vec![rho; d * d.saturating_sub(1) / 2]
        }
    };
    BSModel::new(spots, CorrelationMatrix::from_upper_triangle(d, &corr)?)
}

fn compute_error(e: Error) -> Error {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) | Error::InvalidPrescription(_) | Error::InconsistentQuotes(_) => e,
        other => Error::ContractViolation(format!("computation failed: {other}")),
    }
}

/// Prices `payoffs` on `bounds`, attaching Monte Carlo benchmarks.
fn sweep(
    bounds: &ImprovedBounds,
    payoffs: &[PayoffDescriptor],
    model: &BSModel,
    paths: usize,
    seed: u64,
    cfg: &IntegrationConfig,
) -> Result<Vec<PriceBounds>> {
    let marginals = model.marginals();
    let mut rows = bounds.price_sweep(payoffs, &marginals, cfg)?;
    if paths > 0 {
        let mc = mc_benchmark_prices(payoffs, model, paths, seed)?;
        for (r, m) in rows.iter_mut().zip(mc) {
            r.benchmark = Some(m);
        }
    }
    Ok(rows)
}

fn chart(title: &str, rows: &[PriceBounds]) -> LineChart {
    let mut c = LineChart::new(title, "strike", "price");
    let col = |f: fn(&PriceBounds) -> f64| rows.iter().map(|r| (r.strike, f(r))).collect::<Vec<_>>();
    c.push(Series::new("standard lower", col(|r| r.standard_lower), "#1f77b4", true));
    c.push(Series::new("standard upper", col(|r| r.standard_upper), "#1f77b4", false));
    c.push(Series::new("improved lower", col(|r| r.improved_lower), "#d62728", true));
    c.push(Series::new("improved upper", col(|r| r.improved_upper), "#d62728", false));
    c.push(Series::new(
        "benchmark",
        rows.iter().filter_map(|r| r.benchmark.map(|b| (r.strike, b.price))).collect(),
        "#2ca02c",
        false,
    ));
    c
}

fn emit(cli: &Cli, name: &str, title: &str, rows: &[PriceBounds], out: &mut dyn Write) -> Result<()> {
    let csv = price_bounds_csv(rows);
    if cli.format.csv() || cli.out.is_none() {
        out.write_all(csv.as_bytes())?;
    }
    if cli.out.is_some() {
        if cli.format.csv() {
            write_output(cli, &format!("{name}.csv"), &csv)?;
        }
        if cli.format.svg() {
            write_output(cli, &format!("{name}.svg"), &chart(title, rows).to_svg())?;
        }
    }
    Ok(())
}

fn reproduce_fig(cli: &Cli, a: &FigArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = integration(cli)?;
    let model = fig_model(a)?;
    if model.dim() != 3 {
        return Err(invalid("the figure setups use three assets"));
    }
    let marginals = model.marginals();
    let strikes = quantile_strike_grid(&marginals, a.q_min, a.q_max, a.strikes)?;
    let policy = if a.clip_quotes { QuotePolicy::Clip } else { QuotePolicy::Reject };
    let (name, title, rows) = match a.figure {
        Figure::Fig1 => {
            let quotes = generate_pairwise_digital_quotes(&model, &strikes)?;
            let bounds = ImprovedBounds::new(pairwise_prescription(&quotes, &marginals, policy)?)?;
            let payoffs = strikes
                .iter()
                .map(|&k| PayoffDescriptor::new(PayoffKind::DigitalPutOnMax, k))
                .collect::<Result<Vec<_>>>()?;
            let rows = sweep(&bounds, &payoffs, &model, a.paths, cli.seed, &cfg).map_err(compute_error)?;
            ("fig1", "Digital put on the maximum of three assets", rows)
        }
        Figure::Fig2 => {
            let qs = numbers(&a.quote_quantiles)?;
            let quote_strikes: Vec<f64> = qs
                .iter()
                .map(|&q| quantile_strike_grid(&marginals, q, q, 1).map(|v| v[0]))
                .collect::<Result<_>>()?;
            let quotes = generate_min_digital_quotes(&model, &quote_strikes)?;
            let bounds = ImprovedBounds::new(min_digital_prescription(&quotes, &marginals, policy)?)?;
            let payoffs = strikes
                .iter()
                .map(|&k| PayoffDescriptor::new(PayoffKind::CallOnMin, k))
                .collect::<Result<Vec<_>>>()?;
            let rows = sweep(&bounds, &payoffs, &model, a.paths, cli.seed, &cfg).map_err(compute_error)?;
            let _ = writeln!(err, "quoted strikes: {}", quote_strikes.iter().map(|k| fmt_num(*k)).collect::<Vec<_>>().join(","));
            ("fig2", "Call on the minimum of three assets", rows)
        }
    };
    emit(cli, name, title, &rows, out)?;
    Ok(0)
}

fn price_bounds(cli: &Cli, a: &PriceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if a.compare_lp {
        let _ = writeln!(err, "note: --compare-lp is a hook only; no linear-programming solver is included");
    }
    let cfg = integration(cli)?;
    let model = BSModel::from_toml(&read(&a.model)?)?;
    let marginals = model.marginals();
    let kind: PayoffKind = a.payoff.parse()?;
    let quotes: Vec<MarketQuote> = match (&a.quotes, a.generate) {
        (Some(p), _) => quotes_from_csv(&read(p)?)?,
        (None, Some(g)) => {
            let ks = numbers(a.quote_strikes.as_deref().ok_or_else(|| Error::Parse("--generate needs --quote-strikes".into()))?)?;
            match g {
                GenerateKind::Pairwise => generate_pairwise_digital_quotes(&model, &ks)?,
                GenerateKind::MinDigital => generate_min_digital_quotes(&model, &ks)?,
            }
        }
        (None, None) => Vec::new(),
    };
    let policy = if a.clip_quotes { QuotePolicy::Clip } else { QuotePolicy::Reject };
    let min_side = kind.tonicity().map(|t| t.order()) == Some(Order::UpperOrthant);
    if quotes.iter().any(|q| (q.kind == QuoteKind::BasketDigitalMin) != min_side) {
        return Err(Error::UnsupportedPayoffOrder(format!(
            "{} cannot be bounded with the given quote kind",
            kind.name()
        )));
    }
    let p = if min_side {
        min_digital_prescription(&quotes, &marginals, policy)?
    } else {
        pairwise_prescription(&quotes, &marginals, policy)?
    };
    let strikes = match &a.strikes {
        Some(s) => numbers(s)?,
        None => quantile_strike_grid(&marginals, a.q_min, a.q_max, a.n_strikes)?,
    };
    let payoffs = strikes.iter().map(|&k| PayoffDescriptor::new(kind, k)).collect::<Result<Vec<_>>>()?;
    let bounds = ImprovedBounds::new(p)?;
    let rows = sweep(&bounds, &payoffs, &model, a.paths, cli.seed, &cfg).map_err(compute_error)?;
    emit(cli, "price_bounds", &format!("Bounds on {}", kind.name()), &rows, out)?;
    Ok(0)
}

fn check_properties(cli: &Cli, a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let suites = Suite::parse(&a.suite)?;
    let cfg = SuiteConfig {
        seed: cli.seed,
        dim: a.dim,
        resolution: a.resolution,
        cases: a.cases,
        fault: a.inject_fault.map(|f| match f {
            FaultArg::Lipschitz => Fault::Lipschitz,
        }),
        integration: integration(cli)?,
    };
    let mut ok = true;
    let mut report = String::new();
    for s in suites {
        let o = suites::run(s, &cfg)?;
        ok &= o.passed();
        report.push_str(&o.summary());
        report.push('\n');
        for n in o.notes.iter().take(5) {
            report.push_str(&format!("  {n}\n"));
        }
        for f in o.failures.iter().take(5) {
            report.push_str(&format!("  failure: {f}\n"));
        }
    }
    report.push_str(if ok { "all suites passed\n" } else { "some suites failed\n" });
    out.write_all(report.as_bytes())?;
    write_output(cli, "properties.txt", &report)?;
    Ok(if ok { 0 } else { EXIT_FAILURE })
}
