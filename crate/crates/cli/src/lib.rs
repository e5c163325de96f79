//! Command implementations behind the `flexserve` binary.
//!
//! Every command writes a JSON report (to `--out` or stdout) and maps failures
//! onto a fixed exit-code scheme: 0 success, 2 bad input, 3 infeasible
//! contract or supply, 4 internal invariant violated, 5 optimizer warning
//! under `--strict`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use flexserve::oracle::SmallInstanceBounds;
use flexserve::verify::{
    adequacy_suite, purchase_suite, rounding_suite, AdequacyPredicates, SuiteOutcome,
};
use flexserve::{
    decompose_portfolio, demand_duration, estimate_v_with, profit_with, realize_portfolio,
    realized_services, revenue_from_demand, simulate_delivery, solve, Caps, DecisionPoint,
    DemandDuration, EnergyVector, Execution, MarketFile, Portfolio, ScenarioGenerator, ScenarioSet,
    SolveReport, SolverConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Strict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Invariant(_) => 4,
            CliError::Strict(_) => 5,
        }
    }
}

impl From<flexserve::Error> for CliError {
    fn from(e: flexserve::Error) -> Self {
        use flexserve::Error as E;
        match e {
            E::InfeasibleService { .. } | E::InfeasibleAllocation { .. } | E::Inadequate { .. } => {
                CliError::Infeasible(e.to_string())
            }
            E::InvariantViolation(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "flexserve",
    version,
    about = "Adequacy, delivery and portfolio planning for rate-constrained energy services"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the unit-rate decomposition and demand-duration vector of a portfolio.
    Decompose(DecomposeArgs),
    /// Run real-time purchasing and delivery for every scenario.
    Simulate(SimulateArgs),
    /// Choose the profit-maximising demand-duration vector and day-ahead purchase.
    Optimize(OptimizeArgs),
    /// Cross-check the fast algorithms against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub portfolio: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// CSV scenario file, one scenario per row.
    #[arg(long, conflicts_with = "generate")]
    pub scenarios: Option<PathBuf>,
    /// Generate this many equiprobable scenarios instead of reading a file.
    #[arg(long)]
    pub generate: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mean renewable supply per slot for generated scenarios.
    #[arg(long, default_value_t = 2.0)]
    pub mean: f64,
    /// Standard deviation of generated supply.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Largest generated supply value.
    #[arg(long, default_value_t = 6)]
    pub max_supply: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub market: PathBuf,
    #[arg(long)]
    pub portfolio: PathBuf,
    #[command(flatten)]
    pub source: ScenarioArgs,
    /// Day-ahead purchase per slot, comma separated. Defaults to zero.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a per-slot trace as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub market: PathBuf,
    #[command(flatten)]
    pub source: ScenarioArgs,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub patience: usize,
    /// Skip the cutting-plane refinement after the supergradient ascent.
    #[arg(long)]
    pub no_polish: bool,
    /// Exit with status 5 when the optimizer reports a warning.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Enumeration bounds `T,N,D,P`: horizon, services, duration, supply.
    #[arg(long, default_value = "4,3,4,4")]
    pub bounds: String,
    /// Seed for the random markets of the rounding suite.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub markets: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Decompose(args) => cmd_decompose(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
        Command::Optimize(args) => cmd_optimize(&args, stdout),
        Command::Verify(args) => cmd_verify(&args, AdequacyPredicates::default(), stdout),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(report).map_err(|e| CliError::Invariant(e.to_string()))?;
    text.push('\n');
    let result = match out {
        Some(path) => fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    };
    result.map_err(|e| CliError::Input(format!("writing report: {e}")))
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn check_horizon(what: &str, expected: usize, actual: usize) -> CliResult<()> {
    if expected != actual {
        return Err(CliError::Input(format!(
            "{what} has horizon {actual}, market has {expected}"
        )));
    }
    Ok(())
}

/// Reads `--scenarios` or generates `--generate N` scenarios for `horizon`.
pub fn load_scenarios(args: &ScenarioArgs, horizon: usize) -> CliResult<ScenarioSet> {
    match (&args.scenarios, args.generate) {
        (Some(path), _) => {
            let set = ScenarioSet::from_csv_for_horizon(&read(path)?, horizon)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(set)
        }
        (None, Some(count)) => {
            let generator = ScenarioGenerator {
                mean: args.mean,
                spread: args.spread,
                cap: args.max_supply,
            };
            Ok(generator.generate(horizon, count, args.seed)?)
        }
        (None, None) => Err(CliError::Input(
            "either --scenarios or --generate is required".into(),
        )),
    }
}

fn parse_vector(text: &str, horizon: usize) -> CliResult<Vec<u64>> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("--y: {e}")))?;
    if values.len() != horizon {
        return Err(CliError::Input(format!(
            "--y has {} entries, horizon is {horizon}",
            values.len()
        )));
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
pub struct UnitRow {
    pub service: usize,
    pub duration: u64,
}

#[derive(Debug, Serialize)]
pub struct DecomposeReport {
    pub horizon: usize,
    pub units: Vec<UnitRow>,
    pub durations: Vec<u64>,
    pub demand_duration: Vec<u64>,
}

pub fn decompose_report(portfolio: &Portfolio) -> CliResult<DecomposeReport> {
    portfolio.validate()?;
    let units = decompose_portfolio(portfolio);
    let d = demand_duration(&units);
    Ok(DecomposeReport {
        horizon: portfolio.horizon,
        units: units
            .durations
            .iter()
            .zip(&units.origin)
            .map(|(&duration, o)| UnitRow {
                service: o.service,
                duration,
            })
            .collect(),
        durations: units.durations.clone(),
        demand_duration: d.as_slice().to_vec(),
    })
}

pub fn cmd_decompose(args: &DecomposeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let portfolio: Portfolio = read_json(&args.portfolio)?;
    let report = decompose_report(&portfolio)?;
    emit(&report, args.out.as_deref(), stdout)
}

#[derive(Debug, Serialize)]
pub struct ScenarioTrace {
    pub index: usize,
    pub weight: f64,
    pub r: Vec<u64>,
    pub a: Vec<u64>,
    pub q: Vec<u64>,
    pub purchase: u64,
    /// Delivered energy per consumer and slot.
    pub allocations: Vec<Vec<u64>>,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub scenarios: usize,
    pub expected_purchase: f64,
    pub expected_real_time_cost: f64,
    pub revenue: f64,
    pub day_ahead_cost: f64,
    pub profit: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub horizon: usize,
    pub demand_duration: Vec<u64>,
    pub y: Vec<u64>,
    pub traces: Vec<ScenarioTrace>,
    pub summary: SimulationSummary,
    pub warnings: Vec<String>,
}

pub fn simulate_report(
    market: &MarketFile,
    portfolio: &Portfolio,
    scenarios: &ScenarioSet,
    y: &[u64],
) -> CliResult<SimulateReport> {
    let mm = market.model()?;
    portfolio.validate()?;
    check_horizon("portfolio", mm.horizon, portfolio.horizon)?;
    check_horizon("scenario set", mm.horizon, scenarios.horizon())?;
    let y_vec = EnergyVector::new(y.to_vec())?;
    let exec = Execution::default();

    let traces = exec
        .map(scenarios.scenarios(), |r| -> CliResult<_> {
            let trace = simulate_delivery(portfolio, &y_vec, r)?;
            trace.check(portfolio)?;
            Ok(trace)
        })
        .into_iter()
        .collect::<CliResult<Vec<_>>>()?;

    let d = demand_duration(&decompose_portfolio(portfolio));
    let expected_purchase: f64 = traces
        .iter()
        .zip(scenarios.weights())
        .fold(0.0, |acc, (t, w)| acc + w * t.total_purchase as f64);
    let v = estimate_v_with(portfolio, &y_vec, scenarios, mm.c_rt, exec)?;
    if (v - mm.c_rt * expected_purchase).abs() > 1e-9 * v.abs().max(1.0) {
        return Err(CliError::Invariant(format!(
            "expected cost {v} disagrees with simulated purchases {expected_purchase}"
        )));
    }
    let revenue = revenue_from_demand(&mm, &d)?;
    let day_ahead_cost = mm.c_da * y.iter().sum::<u64>() as f64;
    let point = DecisionPoint::from_integers(&d, y);
    let profit = profit_with(&mm, &point, scenarios, exec)?;

    let mut warnings = Vec::new();
    if scenarios.is_empty() {
        warnings.push("no scenarios given; expected real-time cost taken as 0".to_string());
    }

    Ok(SimulateReport {
        horizon: mm.horizon,
        demand_duration: d.as_slice().to_vec(),
        y: y.to_vec(),
        traces: traces
            .into_iter()
            .enumerate()
            .map(|(index, t)| ScenarioTrace {
                index,
                weight: scenarios.weights()[index],
                r: t.profile.r.as_slice().to_vec(),
                a: t.profile.a.as_slice().to_vec(),
                q: t.profile.q.as_slice().to_vec(),
                purchase: t.total_purchase,
                allocations: t.merged,
            })
            .collect(),
        summary: SimulationSummary {
            scenarios: scenarios.len(),
            expected_purchase,
            expected_real_time_cost: v,
            revenue,
            day_ahead_cost,
            profit,
        },
        warnings,
    })
}

/// One row per scenario and slot: `scenario, slot, y, r, a, q`, then one
/// column per consumer.
pub fn trace_csv(report: &SimulateReport, consumers: usize) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "scenario".to_string(),
        "slot".into(),
        "y".into(),
        "r".into(),
        "a".into(),
        "q".into(),
    ];
    header.extend((0..consumers).map(|i| format!("consumer_{i}")));
    let io = |e: csv::Error| CliError::Invariant(e.to_string());
    w.write_record(&header).map_err(io)?;
    for trace in &report.traces {
        for t in 0..report.horizon {
            let mut row = vec![
                trace.index.to_string(),
                (t + 1).to_string(),
                report.y[t].to_string(),
                trace.r[t].to_string(),
                trace.a[t].to_string(),
                trace.q[t].to_string(),
            ];
            row.extend(trace.allocations.iter().map(|u| u[t].to_string()));
            w.write_record(&row).map_err(io)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let market: MarketFile = read_json(&args.market)?;
    let portfolio: Portfolio = read_json(&args.portfolio)?;
    let horizon = market.horizon;
    let scenarios = load_scenarios(&args.source, horizon)?;
    let y = match &args.y {
        Some(text) => parse_vector(text, horizon)?,
        None => vec![0; horizon],
    };
    let report = simulate_report(&market, &portfolio, &scenarios, &y)?;
    warn(&report.warnings);
    if let Some(path) = &args.csv {
        let text = trace_csv(&report, portfolio.len())?;
        fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    emit(&report, args.out.as_deref(), stdout)
}

#[derive(Debug, Serialize)]
pub struct OptimizeReport {
    pub caps: Caps,
    pub scenarios: usize,
    pub solution: SolveReport,
    pub demand_duration: Vec<u64>,
    pub unit_durations: Vec<u64>,
    /// The rounded portfolio as unit-rate services, in portfolio file format.
    pub portfolio: Portfolio,
    pub warnings: Vec<String>,
}

pub fn optimize_report(
    market: &MarketFile,
    scenarios: &ScenarioSet,
    config: &SolverConfig,
) -> CliResult<OptimizeReport> {
    let mm = market.model()?;
    let caps = market.caps()?;
    check_horizon("scenario set", mm.horizon, scenarios.horizon())?;
    let solution = solve(&mm, scenarios, caps, config)?;
    let d = DemandDuration::new(solution.rounded.d.clone())?;
    let units = realize_portfolio(&d);
    let portfolio = realized_services(&d);

    let mut warnings = Vec::new();
    if !solution.converged {
        warnings.push(format!(
            "optimizer stopped after {} iterations without meeting the tolerance",
            solution.iterations
        ));
    }
    if scenarios.is_empty() {
        warnings.push("no scenarios given; real-time cost taken as 0".to_string());
    }
    Ok(OptimizeReport {
        caps,
        scenarios: scenarios.len(),
        demand_duration: d.as_slice().to_vec(),
        unit_durations: units.durations,
        portfolio,
        solution,
        warnings,
    })
}

pub fn cmd_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let market: MarketFile = read_json(&args.market)?;
    let scenarios = load_scenarios(&args.source, market.horizon)?;
    let config = SolverConfig {
        iterations: args.iters,
        step0: args.step,
        tolerance: args.tol,
        patience: args.patience,
        polish: !args.no_polish,
        ..SolverConfig::default()
    };
    let report = optimize_report(&market, &scenarios, &config)?;
    warn(&report.warnings);
    emit(&report, args.out.as_deref(), stdout)?;
    if args.strict && !report.warnings.is_empty() {
        return Err(CliError::Strict(report.warnings.join("; ")));
    }
    Ok(())
}

pub fn parse_bounds(text: &str) -> CliResult<SmallInstanceBounds> {
    let parts: Vec<u64> = text
        .split(',')
        .map(|v| v.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("--bounds: {e}")))?;
    let [t, n, d, p] = parts[..] else {
        return Err(CliError::Input("--bounds expects T,N,D,P".into()));
    };
    Ok(SmallInstanceBounds::new(t as usize, n as usize, d, p)?)
}

/// Runs the three oracle suites, printing a table and any counterexamples.
/// The adequacy predicates are a parameter so a broken implementation can be
/// substituted to exercise the failure path.
pub fn cmd_verify(
    args: &VerifyArgs,
    preds: AdequacyPredicates,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let bounds = parse_bounds(&args.bounds)?;
    let exec = Execution::default();
    let outcomes: Vec<SuiteOutcome> = vec![
        adequacy_suite(&bounds, preds, exec)?,
        purchase_suite(&bounds, exec)?,
        rounding_suite(args.markets, bounds.t_max.min(2), args.seed, exec)?,
    ];

    let mut table = format!("{:<10} {:>8} {:>9}  result\n", "suite", "cases", "failures");
    for o in &outcomes {
        let verdict = if o.passed() { "pass" } else { "FAIL" };
        table.push_str(&format!(
            "{:<10} {:>8} {:>9}  {verdict}\n",
            o.name, o.cases, o.failures
        ));
    }
    for o in &outcomes {
        if let Some(c) = &o.counterexample {
            table.push_str(&format!("counterexample ({}): {c}\n", o.name));
        }
    }
    stdout
        .write_all(table.as_bytes())
        .map_err(|e| CliError::Input(format!("writing report: {e}")))?;
    if let Some(path) = &args.out {
        emit(&outcomes, Some(path), stdout)?;
    }

    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!(
            "oracle suites failed: {}",
            failed.join(", ")
        )))
    }
}
