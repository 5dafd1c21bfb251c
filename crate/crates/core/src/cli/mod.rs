//! Command-line front end: `prox`, `project`, `qp`, `allocate`, `reproduce`.

pub mod dto;
pub mod reproduce;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dykstra::{dykstra_cycle, DykstraConfig};
use crate::error::Error;
use crate::portfolio::stats::{effective_bets, StatsContext};
use crate::portfolio::{
    self, equal_weights, Constraints, DiversificationConstraint, PortfolioStats, PortfolioWeights, Target,
};
use crate::prox::{project, Prox, ProxOp};
use crate::qp::{qp_solve_from, QpConfig, QpProblem};
use dto::{AllocateRequest, ModelSpec, ProjectRequest, ProxRequest, QpRequest};
use reproduce::Reproduction;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("reproduction mismatch in {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) | Self::Io(_) => EXIT_INPUT,
            Self::Solver(e) => match e {
                Error::DimensionMismatch(_)
                | Error::BadDims(_)
                | Error::InvalidInput(_)
                | Error::NonFinite(_)
                | Error::UnsupportedNorm(_) => EXIT_INPUT,
                _ => EXIT_DOMAIN,
            },
            Self::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Table4,
    Table5,
    Erc,
    LassoTrace,
    BoxQpTrace,
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// JSON request file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (stdout when absent); written atomically.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Solver tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Initial ADMM penalty override.
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    /// Seed for stochastic commands.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Iteration or cycle cap override.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "proxport", version, about = "Proximal, Dykstra, coordinate descent and ADMM solvers for portfolio allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a catalogued proximal operator.
    Prox,
    /// Project onto a set or onto an intersection of sets.
    Project,
    /// Solve a quadratic program.
    Qp,
    /// Run an allocation model.
    Allocate,
    /// Regenerate a published table or convergence trace.
    Reproduce {
        #[arg(value_enum)]
        table: Table,
        /// Observations for `lasso-trace`.
        #[arg(long)]
        n: Option<usize>,
    },
}

/// Output of `prox` and `project`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorOutput {
    pub x: Vec<f64>,
    /// `‖P(x) − x‖∞` for projections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpOutput {
    pub x: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateOutput {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    pub stats: PortfolioStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    pub solver: String,
}

fn read_input<T: for<'de> Deserialize<'de>>(common: &Common) -> Result<T, CliError> {
    let path = common
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes to a sibling temporary file, then renames it into place.
fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)
}

fn emit(common: &Common, content: &str) -> Result<(), CliError> {
    match &common.output {
        Some(p) => write_atomic(p, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Input(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Input(e.to_string()))
}

fn vector_csv(x: &[f64]) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = x.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]).collect();
    csv_string(&["index".into(), "value".into()], &rows)
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn dykstra_cfg(common: &Common) -> DykstraConfig {
    DykstraConfig {
        tol: common.tol.unwrap_or(1e-12),
        max_cycles: common.max_iter.unwrap_or(100_000),
    }
}

pub fn cmd_prox(common: &Common) -> Result<(), CliError> {
    let req: ProxRequest = read_input(common)?;
    let op = req.op.build()?;
    let x = op.prox(&req.v)?;
    let out = VectorOutput { x, residual: None };
    match common.format {
        Format::Json => emit(common, &json(&out)?),
        Format::Csv => emit(common, &vector_csv(&out.x)?),
    }
}

pub fn cmd_project(common: &Common) -> Result<(), CliError> {
    let req: ProjectRequest = read_input(common)?;
    if req.sets.is_empty() {
        return Err(CliError::Input("at least one set is required".into()));
    }
    let sets = req.sets.iter().map(|s| s.build()).collect::<Result<Vec<_>, _>>()?;
    let ops: Vec<ProxOp> = sets.iter().cloned().map(ProxOp::Project).collect();
    let x = if ops.len() == 1 {
        ops[0].prox(&req.v)?
    } else {
        let refs: Vec<&dyn Prox> = ops.iter().map(|o| o as &dyn Prox).collect();
        dykstra_cycle(&refs, &req.v, &dykstra_cfg(common))?.0
    };
    let mut residual: f64 = 0.0;
    for s in &sets {
        let p = project(s, &x)?;
        residual = residual.max(crate::linalg::max_abs_diff(&p, &x));
    }
    let out = VectorOutput {
        x,
        residual: Some(residual),
    };
    match common.format {
        Format::Json => emit(common, &json(&out)?),
        Format::Csv => emit(common, &vector_csv(&out.x)?),
    }
}

pub fn cmd_qp(common: &Common) -> Result<(), CliError> {
    let req: QpRequest = read_input(common)?;
    let mut p = QpProblem::new(dto::matrix(&req.q)?, req.r.clone());
    if let Some(eq) = &req.eq {
        p = p.with_eq(dto::matrix(&eq.a)?, eq.b.clone());
    }
    if let Some(c) = &req.ineq {
        p = p.with_ineq(dto::matrix(&c.a)?, c.b.clone());
    }
    p.lo = req.lo.clone();
    p.hi = req.hi.clone();
    let mut cfg = QpConfig::default();
    if let Some(t) = common.tol {
        cfg = cfg.with_eps(t);
    }
    cfg.phi0 = common.phi;
    if let Some(m) = common.max_iter {
        cfg.admm.max_iter = m;
    }
    let n = p.dim();
    let start = req.start.clone().unwrap_or_else(|| vec![0.0; n]);
    let (x, report) = qp_solve_from(&p, &cfg, &start)?;
    let out = QpOutput {
        objective: p.objective(&x),
        max_violation: p.max_violation(&x),
        solver: report.summary(),
        x,
    };
    match common.format {
        Format::Json => emit(common, &json(&out)?),
        Format::Csv => emit(common, &vector_csv(&out.x)?),
    }
}

fn long_only_or_free(n: usize, long_only: bool) -> Constraints {
    if long_only {
        Constraints::long_only(n)
    } else {
        Constraints::none()
    }
}

/// Runs the model in a request; returns weights, `λ*` and a solver label.
pub fn run_model(req: &AllocateRequest) -> Result<(PortfolioWeights, Option<f64>, String), CliError> {
    let set = req.universe.load()?;
    let u = &set.universe;
    let n = u.n();
    let label = |s: &str| s.to_string();
    Ok(match &req.model {
        ModelSpec::Erc => (portfolio::erc(u)?, None, label("ccd_erc")),
        ModelSpec::RiskBudgeting { budgets, measure, engine } => (
            portfolio::risk_budgeting(u, budgets, *measure, *engine)?,
            None,
            format!("risk_budgeting ({engine:?})"),
        ),
        ModelSpec::Gmv { n_min, upper, method } => {
            let (w, lam) = portfolio::gmv_herfindahl(u, upper.as_deref(), n_min.unwrap_or(1.0), *method)?;
            (w, lam, format!("gmv_herfindahl ({method:?})"))
        }
        ModelSpec::GmvEntropy { min_entropy } => (
            portfolio::gmv_diversified(u, None, DiversificationConstraint::ShannonEntropyFloor(*min_entropy))?,
            None,
            label("gmv_diversified (admm)"),
        ),
        ModelSpec::Mdp { long_only, n_min } => {
            let d = n_min.map_or(DiversificationConstraint::None, DiversificationConstraint::EffectiveBets);
            (portfolio::mdp(u, *long_only, d)?, None, label("mdp (admm)"))
        }
        ModelSpec::Mvo { gamma, long_only } => (
            portfolio::mvo_gamma(u, *gamma, &long_only_or_free(n, *long_only))?,
            None,
            label("mvo_gamma (qp)"),
        ),
        ModelSpec::MvoTarget {
            target_return,
            target_volatility,
            long_only,
        } => {
            let target = match (target_return, target_volatility) {
                (Some(r), None) => Target::Return(*r),
                (None, Some(v)) => Target::Volatility(*v),
                _ => {
                    return Err(CliError::Input(
                        "exactly one of target_return and target_volatility is required".into(),
                    ))
                }
            };
            (
                portfolio::mvo_target(u, target, &long_only_or_free(n, *long_only))?,
                None,
                label("mvo_target (bisection on gamma)"),
            )
        }
        ModelSpec::Kl {
            reference,
            mu_min,
            sigma_max,
        } => {
            let reference = reference
                .clone()
                .or_else(|| set.benchmark.clone())
                .unwrap_or_else(|| equal_weights(n));
            (
                portfolio::kl_portfolio(u, &reference, mu_min.unwrap_or(f64::NEG_INFINITY), *sigma_max)?,
                None,
                label("kl_portfolio (admm)"),
            )
        }
        ModelSpec::Rqe { dissimilarity } => {
            let d = match dissimilarity {
                Some(rows) => dto::matrix(rows)?,
                None => {
                    let mut d = u.rho.clone();
                    for i in 0..n {
                        for j in 0..n {
                            d.set(i, j, 1.0 - u.rho.get(i, j));
                        }
                    }
                    d
                }
            };
            (
                portfolio::rqe_portfolio(&d, &Constraints::none())?,
                None,
                label("rqe_portfolio (admm)"),
            )
        }
    })
}

pub fn cmd_allocate(common: &Common) -> Result<(), CliError> {
    let req: AllocateRequest = read_input(common)?;
    let (w, lambda_star, solver) = run_model(&req)?;
    let set = req.universe.load()?;
    let ctx = StatsContext {
        benchmark: set.benchmark.as_deref(),
        ..StatsContext::default()
    };
    let stats = portfolio::stats(&w.w, &set.universe, &ctx)?;
    let out = AllocateOutput {
        names: set.universe.names.clone(),
        weights: w.w,
        stats,
        lambda_star,
        solver,
    };
    match common.format {
        Format::Json => emit(common, &json(&out)?),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = out
                .names
                .iter()
                .zip(&out.weights)
                .zip(&out.stats.risk_contributions)
                .map(|((a, w), rc)| vec![a.clone(), w.to_string(), rc.to_string()])
                .collect();
            rows.push(vec!["effective_bets".into(), effective_bets(&out.weights).to_string(), String::new()]);
            emit(common, &csv_string(&["asset".into(), "weight".into(), "risk_contribution".into()], &rows)?)
        }
    }
}

pub fn reproduction(table: Table, common: &Common, n: Option<usize>) -> Result<Reproduction, CliError> {
    Ok(match table {
        Table::Table4 => reproduce::table4()?,
        Table::Table5 => reproduce::table5()?,
        Table::Erc => reproduce::erc_table()?,
        Table::LassoTrace => reproduce::lasso_trace(common.seed, n, common.max_iter)?,
        Table::BoxQpTrace => reproduce::box_qp_trace(common.tol, common.max_iter)?,
    })
}

pub fn cmd_reproduce(table: Table, common: &Common, n: Option<usize>) -> Result<(), CliError> {
    let rep = reproduction(table, common, n)?;
    match common.format {
        Format::Json => emit(common, &json(&rep)?)?,
        Format::Csv => emit(common, &csv_string(&rep.header, &rep.rows)?)?,
    }
    eprint!("{}", rep.report());
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::Mismatch(rep.name))
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let common = &cli.common;
    let result = match cli.command {
        Command::Prox => cmd_prox(common),
        Command::Project => cmd_project(common),
        Command::Qp => cmd_qp(common),
        Command::Allocate => cmd_allocate(common),
        Command::Reproduce { table, n } => cmd_reproduce(table, common, n),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
