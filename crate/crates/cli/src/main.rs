//! `medassign` — command-line front end for the mediator assignment toolkit.
//!
//! Subcommands cover the whole pipeline: corpus generation (`generate`),
//! value-added estimation (`estimate-va`), one-shot assignment solves
//! (`solve`), the policy × lambda × seed simulation matrix (`simulate`),
//! belief-drift replays (`drift`), and artifact re-aggregation (`report`).
//!
//! Exit codes: 0 success, 2 schema/config error, 3 solver failure,
//! 4 data-integrity error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use medassign_core::belief::{replay_belief_trajectory, ReplayComponents, TrajectoryPoint};
use medassign_core::corpus::{
    self, Corpus, CorpusError, RunConfig, ScaleSpec,
};
use medassign_core::qp::{self, SolveStatus};
use medassign_core::report::{
    self, ComparisonTable, RunSummary, ShadowPriceRow, TABLE_SCHEMA_LINE,
};
use medassign_core::sim::{self, SimInputs};
use medassign_core::svg::{self, Series};
use medassign_core::va::{self, ShrinkageConfig};
use medassign_core::Error as CoreError;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "MEDASSIGN_OUT";

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_INTEGRITY: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_SOLVER, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
        Failure::config(format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Failure {
        Failure {
            code: if e.is_integrity() { EXIT_INTEGRITY } else { EXIT_CONFIG },
            message: e.to_string(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        let code = match e {
            CoreError::SolverFailure { .. }
            | CoreError::Infeasible { .. }
            | CoreError::QuadratureFailure { .. } => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

// ---------------------------------------------------------------------------
// CLI surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "medassign",
    version,
    about = "Mediator assignment toolkit: corpora, value-added estimation, \
             assignment solves, and policy simulation"
)]
struct Cli {
    /// Worker threads for parallel simulation runs (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Generate(GenerateArgs),
    EstimateVa(EstimateVaArgs),
    Solve(SolveArgs),
    Simulate(SimulateArgs),
    Drift(DriftArgs),
    Report(ReportArgs),
}

/// Write a synthetic corpus or a named preset as CSV files.
#[derive(Args)]
struct GenerateArgs {
    /// Named preset: scenario1, scenario2, warm-start, or paper-scale.
    #[arg(
        long,
        conflicts_with_all = [
            "scale", "mediators", "stations", "case_types", "cases",
            "history_days", "sigma_mu", "capacity",
        ]
    )]
    preset: Option<String>,
    /// Base scale the dimension flags override.
    #[arg(long, value_enum, default_value_t = Scale::Small)]
    scale: Scale,
    /// Number of mediators.
    #[arg(long)]
    mediators: Option<usize>,
    /// Number of court stations.
    #[arg(long)]
    stations: Option<u32>,
    /// Number of case types.
    #[arg(long)]
    case_types: Option<u32>,
    /// Target historical case count.
    #[arg(long)]
    cases: Option<usize>,
    /// Length of the historical window in days.
    #[arg(long)]
    history_days: Option<u32>,
    /// True value-added standard deviation.
    #[arg(long)]
    sigma_mu: Option<f64>,
    /// Concurrent-case capacity per mediator.
    #[arg(long)]
    capacity: Option<u32>,
    /// World seed; the same seed writes byte-identical files.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Corpus directory (default: <output dir>/corpus).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    /// 24 mediators, 4 stations, 3 case types.
    Small,
    /// ~2,100 mediators, 87 stations, 13 case types.
    Paper,
}

/// Estimate mediator value added from a corpus's concluded cases.
#[derive(Args)]
struct EstimateVaArgs {
    /// Corpus directory (mediators.csv, cases.csv, rates.csv, durations.csv).
    #[arg(long)]
    corpus: PathBuf,
    /// Prior VA standard deviation fallback for degenerate fits.
    #[arg(long)]
    sigma_mu: Option<f64>,
    /// Output directory for tables/ and figures/.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Solve one assignment program from a text instance and print the solution.
#[derive(Args)]
struct SolveArgs {
    /// Instance file in the line-oriented `assignment-qp` format.
    instance: PathBuf,
    /// Solver tolerance applied to the KKT residual check.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Emit the solution as a JSON document instead of text.
    #[arg(long)]
    json: bool,
}

/// Run the policy x lambda x seed matrix described by a TOML run config.
#[derive(Args)]
struct SimulateArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's [output] dir and the
    /// environment default).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Replay one mediator's outcome stream to measure belief drift.
#[derive(Args)]
struct DriftArgs {
    /// Number of outcomes to replay.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Recalibration period in outcomes.
    #[arg(long, default_value_t = 7)]
    period: usize,
    /// Outcome pattern to replay.
    #[arg(long, value_enum, default_value_t = Pattern::Successes)]
    pattern: Pattern,
    /// Base resolution probability fed to every update.
    #[arg(long, default_value_t = 0.5)]
    base_p: f64,
    /// RNG seed for the random pattern.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory for tables/ and figures/.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    /// Every case resolves.
    Successes,
    /// No case resolves.
    Failures,
    /// Resolutions and non-resolutions alternate.
    Alternating,
    /// Independent coin flips at the base probability.
    Random,
}

/// Rebuild tables and figures from a raw runs file.
#[derive(Args)]
struct ReportArgs {
    /// runs.jsonl produced by `simulate`.
    #[arg(long)]
    runs: PathBuf,
    /// Output directory for tables/ and figures/.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`medassign ... | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::config("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::EstimateVa(a) => cmd_estimate_va(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Drift(a) => cmd_drift(a),
        Command::Report(a) => cmd_report(a),
    }
}

// ---------------------------------------------------------------------------
// Output-directory plumbing
// ---------------------------------------------------------------------------

/// Resolves the output directory: explicit flag, then config value, then the
/// `MEDASSIGN_OUT` environment variable, then `./out`.
fn resolve_out(explicit: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    explicit
        .or(from_config)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

/// Writes a `#schema:v1`-prefixed CSV table.
fn write_versioned_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Failure::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| Failure::io(path, e))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Failure::io(path, e))
        .and_then(|v| String::from_utf8(v).map_err(|e| Failure::io(path, e)))?;
    fs::write(path, format!("{TABLE_SCHEMA_LINE}\n{body}")).map_err(|e| Failure::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn cmd_generate(args: GenerateArgs) -> Result<(), Failure> {
    let dir = args
        .out
        .unwrap_or_else(|| resolve_out(None, None).join("corpus"));
    let corpus = match &args.preset {
        Some(name) => {
            let inputs = corpus::resolve_preset(name, args.seed)?;
            Corpus {
                roster: inputs.roster,
                cases: inputs.history,
                arrivals: inputs.arrivals,
                durations: inputs.durations,
            }
        }
        None => {
            let mut spec = match args.scale {
                Scale::Small => ScaleSpec::small(),
                Scale::Paper => ScaleSpec::paper_scale(),
            };
            if let Some(v) = args.mediators {
                spec.n_mediators = v;
            }
            if let Some(v) = args.stations {
                spec.n_stations = v;
            }
            if let Some(v) = args.case_types {
                spec.n_case_types = v;
            }
            if let Some(v) = args.cases {
                spec.target_cases = v;
            }
            if let Some(v) = args.history_days {
                spec.history_days = v;
            }
            if let Some(v) = args.sigma_mu {
                spec.sigma_mu = v;
            }
            if let Some(v) = args.capacity {
                spec.capacity = v;
            }
            corpus::generate_corpus(&spec, args.seed)?
        }
    };
    ensure_dir(&dir)?;
    corpus::write_corpus(&dir, &corpus)?;
    println!(
        "wrote corpus to {}: {} mediators, {} cases, {} arrival cells",
        dir.display(),
        corpus.roster.len(),
        corpus.cases.len(),
        corpus.arrivals.cells.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate-va
// ---------------------------------------------------------------------------

fn cmd_estimate_va(args: EstimateVaArgs) -> Result<(), Failure> {
    let corpus = corpus::load_corpus(&args.corpus)?;
    let mut cfg = ShrinkageConfig::default();
    if let Some(s) = args.sigma_mu {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Failure::config(format!("--sigma-mu must be positive, got {s}")));
        }
        cfg.default_sigma_mu = s;
    }
    let table = va::estimate_va(&corpus.cases, &cfg)?;

    let out = resolve_out(args.out, None);
    let tables = out.join("tables");
    let figures = out.join("figures");
    ensure_dir(&tables)?;
    ensure_dir(&figures)?;

    let true_vas: BTreeMap<&str, f64> = corpus
        .roster
        .iter()
        .filter_map(|m| m.true_va.map(|v| (m.id.as_str(), v)))
        .collect();
    // One row per roster mediator; without concluded history the posterior
    // is the prior (mean zero at full shrinkage).
    let rows: Vec<Vec<String>> = corpus
        .roster
        .iter()
        .map(|m| {
            let true_va = true_vas
                .get(m.id.as_str())
                .map(|v| v.to_string())
                .unwrap_or_default();
            match table.estimates.get(&m.id) {
                Some(e) => vec![
                    m.id.clone(),
                    e.n_cases.to_string(),
                    e.raw_mean.to_string(),
                    e.shrink_factor.to_string(),
                    e.mu_hat.to_string(),
                    e.posterior_var.to_string(),
                    true_va,
                ],
                None => vec![
                    m.id.clone(),
                    "0".to_string(),
                    String::new(),
                    "0".to_string(),
                    "0".to_string(),
                    table.components.sigma_mu_sq.to_string(),
                    true_va,
                ],
            }
        })
        .collect();
    write_versioned_csv(
        &tables.join("va_estimates.csv"),
        &[
            "mediator",
            "n_cases",
            "raw_mean",
            "shrink_factor",
            "mu_hat",
            "posterior_var",
            "true_va",
        ],
        &rows,
    )?;

    let c = table.components;
    write_versioned_csv(
        &tables.join("va_components.csv"),
        &[
            "sigma_mu_sq",
            "sigma_theta_sq",
            "sigma_eps_sq",
            "sigma_mu",
            "mediators_estimated",
        ],
        &[vec![
            c.sigma_mu_sq.to_string(),
            c.sigma_theta_sq.to_string(),
            c.sigma_eps_sq.to_string(),
            c.sigma_mu_sq.sqrt().to_string(),
            table.estimates.len().to_string(),
        ]],
    )?;

    let mu_hats: Vec<f64> = table.estimates.values().map(|e| e.mu_hat).collect();
    write_text(
        &figures.join("va_histogram.svg"),
        &svg::histogram(
            "Shrunk value-added estimates",
            &mu_hats,
            30,
            "estimated value added",
        ),
    )?;

    println!(
        "estimated value added for {} mediators (sigma_mu_hat = {:.4})",
        table.estimates.len(),
        c.sigma_mu_sq.sqrt()
    );
    let paired: Vec<(f64, f64)> = table
        .estimates
        .iter()
        .filter_map(|(id, e)| true_vas.get(id.as_str()).map(|&t| (e.mu_hat, t)))
        .collect();
    if paired.len() >= 2 {
        if let Some(r) = pearson(&paired) {
            println!("correlation with true value added: {r:.3} over {} mediators", paired.len());
        }
    }
    println!("tables and figures under {}", out.display());
    Ok(())
}

/// Pearson correlation; `None` when either side is constant.
fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in pairs {
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.instance).map_err(|e| Failure::io(&args.instance, e))?;
    let instance = qp::parse_qp_text(&text)?;
    let solution = qp::solve(&instance, args.tol)?;

    if args.json {
        let doc = serde_json::json!({
            "schema": "medassign-solution-v1",
            "instance": &instance,
            "solution": &solution,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc)
                .map_err(|e| Failure::config(format!("serializing solution: {e}")))?
        );
    } else {
        print!("{}", render_solution(&instance, &solution));
    }

    if solution.status != SolveStatus::Optimal {
        return Err(Failure::solver(format!(
            "solver stopped with status {:?}; max KKT residual {:.3e} exceeds tolerance {:.1e}",
            solution.status,
            solution.kkt.max(),
            args.tol
        )));
    }
    Ok(())
}

fn render_solution(instance: &qp::QpInstance, s: &qp::QpSolution) -> String {
    let g = &instance.graph;
    let mut out = String::new();
    let _ = writeln!(out, "status: {:?}  (max KKT residual {:.3e})", s.status, s.kkt.max());
    let _ = writeln!(out, "objective: {:.6}", s.objective);
    for (i, e) in g.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "  x[{} -> {}] = {:.6}  (weight {:.4})",
            g.mediators[e.mediator], g.cases[e.case], s.x[i], e.weight
        );
    }
    for (u, id) in g.mediators.iter().enumerate() {
        if s.xi[u].abs() > 1e-9 {
            let _ = writeln!(out, "  overload xi[{id}] = {:.6}", s.xi[u]);
        }
    }
    for &(c, v) in &s.duals_c1 {
        let _ = writeln!(out, "  dual case {} = {:.6}", g.cases[c], v);
    }
    for &(c, v) in &s.duals_c2 {
        if v.abs() > 1e-9 {
            let _ = writeln!(out, "  dual shadow {} = {:.6}", g.cases[c], v);
        }
    }
    let prices = qp::extract_shadow_prices(instance, s);
    for (u, id) in g.mediators.iter().enumerate() {
        if prices[u].abs() > 1e-9 {
            let _ = writeln!(out, "  shadow price {id} = {:.6}", prices[u]);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// simulate / report
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::io(&args.config, e))?;
    let cfg = RunConfig::parse(&text)?;
    let out = resolve_out(args.out, cfg.output.dir.clone());

    let inputs = load_inputs(&cfg, &args.config)?;
    let policies = cfg.policy_specs()?;
    let seeds = cfg.seeds();
    if seeds.is_empty() {
        return Err(Failure::config("run.seeds must name at least one seed"));
    }
    let base = cfg.sim_config();
    let results = sim::run_matrix(&inputs, &base, &policies, &seeds)?;
    let summaries: Vec<RunSummary> = results.iter().map(RunSummary::from).collect();

    let raw = out.join("raw");
    ensure_dir(&raw)?;
    report::write_run_summaries_jsonl(&raw.join("runs.jsonl"), &summaries)?;
    let table = write_tables_and_figures(&out, &summaries)?;

    println!(
        "{} runs ({} policies x {} seeds) -> {}",
        summaries.len(),
        policies.len(),
        seeds.len(),
        out.display()
    );
    print!("{}", render_comparison(&table));
    Ok(())
}

/// Resolves the config's data source; a relative `corpus_dir` is taken
/// relative to the config file's directory.
fn load_inputs(cfg: &RunConfig, config_path: &Path) -> Result<SimInputs, Failure> {
    match (&cfg.data.corpus_dir, &cfg.data.preset) {
        (Some(dir), None) => {
            let resolved = if dir.is_relative() {
                config_path.parent().unwrap_or(Path::new(".")).join(dir)
            } else {
                dir.clone()
            };
            Ok(corpus::load_corpus(&resolved)?.into_inputs())
        }
        (None, Some(name)) => Ok(corpus::resolve_preset(name, cfg.data.seed.unwrap_or(7))?),
        // RunConfig::parse enforces exactly one source.
        _ => Err(Failure::config("config must name exactly one data source")),
    }
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let summaries = report::read_run_summaries_jsonl(&args.runs)?;
    if summaries.is_empty() {
        return Err(Failure::config(format!(
            "{}: no runs to aggregate",
            args.runs.display()
        )));
    }
    let out = resolve_out(args.out, None);
    let table = write_tables_and_figures(&out, &summaries)?;
    println!("re-aggregated {} runs -> {}", summaries.len(), out.display());
    print!("{}", render_comparison(&table));
    Ok(())
}

/// Writes comparison/shadow-price/allocation tables plus the standard
/// figures; returns the aggregated table for stdout rendering.
fn write_tables_and_figures(
    out: &Path,
    summaries: &[RunSummary],
) -> Result<ComparisonTable, Failure> {
    let tables = out.join("tables");
    let figures = out.join("figures");
    ensure_dir(&tables)?;
    ensure_dir(&figures)?;

    let table = report::aggregate(summaries);
    report::write_comparison_csv(&tables.join("comparison.csv"), &table)?;
    let shadow = report::shadow_price_report(summaries);
    report::write_shadow_price_csv(&tables.join("shadow_prices.csv"), &shadow)?;
    let alloc = report::allocation_report(summaries);
    report::write_allocation_csv(&tables.join("allocation.csv"), &alloc)?;

    let categories: Vec<String> = table
        .rows
        .iter()
        .map(|r| arm_label(&r.policy, r.lambda))
        .collect();
    let metric_chart = |title: &str,
                        y_label: &str,
                        pick: &dyn Fn(&report::PolicyRow) -> report::MeanCi|
     -> String {
        let series = [Series {
            name: y_label.to_string(),
            values: table.rows.iter().map(|r| pick(r).mean).collect(),
        }];
        let errors = vec![table
            .rows
            .iter()
            .map(|r| pick(r).half_width.unwrap_or(0.0))
            .collect::<Vec<f64>>()];
        svg::grouped_bar_chart(title, &categories, &series, Some(&errors), y_label)
    };
    write_text(
        &figures.join("agreement.svg"),
        &metric_chart("Seed-mean agreement rate", "agreement rate", &|r| r.agreement),
    )?;
    write_text(
        &figures.join("ocdm.svg"),
        &metric_chart("Seed-mean over-capacity days per mediator-year", "OCDM", &|r| r.ocdm),
    )?;
    write_text(
        &figures.join("gini.svg"),
        &metric_chart("Seed-mean caseload Gini", "Gini", &|r| r.gini),
    )?;
    write_text(
        &figures.join("shadow_prices.svg"),
        &shadow_price_chart(&shadow),
    )?;
    Ok(table)
}

fn arm_label(policy: &str, lambda: Option<f64>) -> String {
    match lambda {
        Some(l) => format!("{policy} lambda={l}"),
        None => policy.to_string(),
    }
}

/// Mean shadow price against lambda, one series per (policy, mediator).
fn shadow_price_chart(rows: &[ShadowPriceRow]) -> String {
    let mut by_series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        if let Some(l) = r.lambda {
            by_series
                .entry((r.mediator.clone(), r.policy.clone()))
                .or_default()
                .push((l, r.mean_price));
        }
    }
    let series: Vec<(String, Vec<(f64, f64)>)> = by_series
        .into_iter()
        .map(|((mediator, policy), mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (format!("{mediator} ({policy})"), pts)
        })
        .collect();
    svg::line_chart(
        "Mean capacity shadow price vs lambda",
        &series,
        "lambda",
        "mean shadow price",
    )
}

fn render_comparison(table: &ComparisonTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:>6} {:>7}  {:>19} {:>19} {:>19}",
        "policy", "lambda", "seeds", "agreement", "ocdm", "gini"
    );
    let ci = |m: report::MeanCi| match m.half_width {
        Some(h) => format!("{:>9.4} ±{:<8.4}", m.mean, h),
        None => format!("{:>9.4} {:<9}", m.mean, ""),
    };
    for r in &table.rows {
        let lambda = r
            .lambda
            .map(|l| l.to_string())
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>7}  {} {} {}",
            r.policy,
            lambda,
            r.seeds,
            ci(r.agreement),
            ci(r.ocdm),
            ci(r.gini)
        );
    }
    out
}

// ---------------------------------------------------------------------------
// drift
// ---------------------------------------------------------------------------

fn cmd_drift(args: DriftArgs) -> Result<(), Failure> {
    if args.steps == 0 {
        return Err(Failure::config("--steps must be at least 1"));
    }
    let outcomes: Vec<bool> = match args.pattern {
        Pattern::Successes => vec![true; args.steps],
        Pattern::Failures => vec![false; args.steps],
        Pattern::Alternating => (0..args.steps).map(|i| i % 2 == 0).collect(),
        Pattern::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            (0..args.steps)
                .map(|_| rng.gen_bool(args.base_p.clamp(0.0, 1.0)))
                .collect()
        }
    };
    let ps = vec![args.base_p; args.steps];
    let traj = replay_belief_trajectory(&ps, &outcomes, args.period, &ReplayComponents::default())?;

    let out = resolve_out(args.out, None);
    let tables = out.join("tables");
    let figures = out.join("figures");
    ensure_dir(&tables)?;
    ensure_dir(&figures)?;

    let rows: Vec<Vec<String>> = traj
        .iter()
        .map(|t| {
            vec![
                (t.step + 1).to_string(),
                t.explicit_va.to_string(),
                t.posterior_mean.to_string(),
                t.recalibrated_mean.to_string(),
            ]
        })
        .collect();
    write_versioned_csv(
        &tables.join("drift.csv"),
        &["outcomes_seen", "explicit_va", "posterior_mean", "recalibrated_mean"],
        &rows,
    )?;

    let track = |name: &str, pick: &dyn Fn(&TrajectoryPoint) -> f64| {
        (
            name.to_string(),
            traj.iter()
                .map(|t| ((t.step + 1) as f64, pick(t)))
                .collect::<Vec<(f64, f64)>>(),
        )
    };
    let series = [
        track("explicit VA", &|t| t.explicit_va),
        track("posterior only", &|t| t.posterior_mean),
        track("recalibrated", &|t| t.recalibrated_mean),
    ];
    write_text(
        &figures.join("drift.svg"),
        &svg::line_chart(
            "Belief drift: sequential updates vs explicit estimator",
            &series,
            "outcomes seen",
            "estimated value added",
        ),
    )?;

    let last = traj.last().expect("steps >= 1 yields at least one point");
    println!("after {} outcomes (recalibration period {}):", args.steps, args.period);
    println!("  explicit VA           {:>9.4}", last.explicit_va);
    println!(
        "  posterior-only mean   {:>9.4}   (gap {:.4})",
        last.posterior_mean,
        (last.posterior_mean - last.explicit_va).abs()
    );
    println!(
        "  recalibrated mean     {:>9.4}   (gap {:.4})",
        last.recalibrated_mean,
        (last.recalibrated_mean - last.explicit_va).abs()
    );
    println!("tables and figures under {}", out.display());
    Ok(())
}
