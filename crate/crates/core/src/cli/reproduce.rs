//! Table and trace reproduction with embedded expected values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::admm::{admm_lasso_lambda, AdmmConfig};
use crate::cd::{cd_lasso, ccd_qp_box, CdConfig};
use crate::error::Result;
use crate::fixtures::{self, LASSO_DEFAULT_N, LASSO_DEFAULT_P, LASSO_LAMBDA};
use crate::linalg::{max_abs_diff, solve_spd};
use crate::portfolio::stats::effective_bets;
use crate::portfolio::{erc, gmv_herfindahl, mdp, DiversificationConstraint, GmvMethod};

/// Column headers of the minimum variance table (`N⁻`).
pub const TABLE4_N: [f64; 10] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.5, 7.0, 7.5, 8.0];

/// Published minimum variance weights (in %), one row per asset.
pub const TABLE4_WEIGHTS: [[f64; 10]; 8] = [
    [0.0, 3.22, 9.60, 13.83, 15.18, 15.05, 14.69, 14.27, 13.75, 12.50],
    [0.0, 12.75, 14.14, 15.85, 16.19, 15.89, 15.39, 14.82, 14.13, 12.50],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.07, 2.05, 4.21, 6.79, 12.50],
    [0.0, 10.13, 15.01, 17.38, 17.21, 16.09, 15.40, 14.72, 13.97, 12.50],
    [0.0, 0.0, 0.0, 0.0, 0.71, 5.10, 6.33, 7.64, 9.17, 12.50],
    [0.0, 5.36, 8.95, 12.42, 13.68, 14.01, 13.80, 13.56, 13.25, 12.50],
    [100.0, 68.53, 52.31, 40.01, 31.52, 25.13, 22.92, 20.63, 18.00, 12.50],
    [0.0, 0.0, 0.0, 0.50, 5.51, 8.66, 9.41, 10.14, 10.95, 12.50],
];

/// Published `λ*` (in %); the last column is `∞`.
pub const TABLE4_LAMBDA: [f64; 10] = [0.0, 1.59, 3.10, 5.90, 10.38, 18.31, 23.45, 31.73, 49.79, f64::INFINITY];

/// MDP table columns: long/short, then long-only with no constraint and
/// `N⁻ = 3..7`.
pub const TABLE5_COLUMNS: [&str; 7] = ["L/S", "LO", "3", "4", "5", "6", "7"];

#[allow(clippy::approx_constant)]
pub const TABLE5_WEIGHTS: [[f64; 7]; 8] = [
    [41.81, 41.04, 35.74, 30.29, 26.08, 22.44, 18.83],
    [51.88, 50.92, 43.91, 36.68, 31.05, 26.12, 21.19],
    [8.20, 8.05, 10.12, 11.52, 12.33, 12.80, 13.01],
    [-0.43, 0.0, 2.48, 5.12, 7.16, 8.90, 10.51],
    [-0.26, 0.0, 0.92, 2.28, 3.60, 5.02, 6.85],
    [-0.38, 0.0, 2.03, 4.36, 6.28, 8.02, 9.79],
    [-0.51, 0.0, 3.47, 6.68, 8.85, 10.44, 11.65],
    [-0.31, 0.0, 1.32, 3.07, 4.65, 6.27, 8.17],
];

/// `𝒩` of the long-only columns (absent for long/short).
pub const TABLE5_BETS: [Option<f64>; 7] = [None, Some(2.30), Some(3.0), Some(4.0), Some(5.0), Some(6.0), Some(7.0)];

pub const ERC_WEIGHTS: [f64; 8] = [11.40, 12.29, 5.49, 11.91, 6.65, 10.81, 33.52, 7.93];

/// Tolerance on table cells in percentage points.
pub const CELL_TOL: f64 = 0.01;
/// Tolerance on `λ*` in percentage points.
pub const LAMBDA_TOL: f64 = 0.1;
/// Tolerance on the `𝒩` row.
pub const BETS_TOL: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct CellDiff {
    pub row: String,
    pub column: String,
    pub got: f64,
    pub expected: f64,
    pub diff: f64,
    pub tol: f64,
}

impl CellDiff {
    pub fn ok(&self) -> bool {
        if self.expected.is_infinite() {
            return self.got == self.expected;
        }
        self.diff <= self.tol + 1e-9
    }
}

/// A regenerated table or trace plus its comparison against the
/// embedded values.
#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub diffs: Vec<CellDiff>,
    /// Checks that are not table cells (cycle counts, trace shapes).
    pub checks: Vec<(String, bool)>,
    pub notes: Vec<String>,
}

impl Reproduction {
    fn new(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
            diffs: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.diffs.iter().all(CellDiff::ok) && self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn max_diff(&self) -> f64 {
        self.diffs
            .iter()
            .filter(|d| d.expected.is_finite())
            .map(|d| d.diff)
            .fold(0.0, f64::max)
    }

    /// Diff report: one line per failing cell or check, then a summary.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for d in self.diffs.iter().filter(|d| !d.ok()) {
            out.push_str(&format!(
                "MISMATCH {} [{}, {}]: got {} expected {} (|Δ| = {:.4} > {})\n",
                self.name, d.row, d.column, d.got, d.expected, d.diff, d.tol
            ));
        }
        for (c, ok) in &self.checks {
            out.push_str(&format!("{} {}: {}\n", if *ok { "ok" } else { "FAILED" }, self.name, c));
        }
        for n in &self.notes {
            out.push_str(&format!("note {}: {}\n", self.name, n));
        }
        out.push_str(&format!(
            "{}: {} cells, max |Δ| = {:.4}, {}\n",
            self.name,
            self.diffs.len(),
            self.max_diff(),
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Two decimals, without a negative zero.
pub fn fmt2(x: f64) -> String {
    if x.is_infinite() {
        return "inf".into();
    }
    let r = round2(x);
    if r == 0.0 {
        "0.00".into()
    } else {
        format!("{r:.2}")
    }
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn cell(row: &str, column: &str, got: f64, expected: f64, tol: f64) -> CellDiff {
    CellDiff {
        row: row.into(),
        column: column.into(),
        got,
        expected,
        diff: (got - expected).abs(),
        tol,
    }
}

fn header(first: &str, cols: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(first.to_string()).chain(cols).collect()
}

fn asset(i: usize) -> String {
    format!("x{}", i + 1)
}

/// Minimum variance portfolios with `𝒩(x) ≥ N⁻` on parameter set #1.
/// Cells are compared after rounding to the published two decimals.
pub fn table4() -> Result<Reproduction> {
    let u = fixtures::parameter_set_1().universe;
    let cols: Vec<String> = TABLE4_N.iter().map(|n| n.to_string()).collect();
    let mut rep = Reproduction::new("table4", header("asset", cols.clone()));
    let mut grid = vec![vec![0.0; TABLE4_N.len()]; 8];
    let mut lambdas = Vec::new();
    let mut raw_max: f64 = 0.0;
    for (j, &n_min) in TABLE4_N.iter().enumerate() {
        let (w, lam) = gmv_herfindahl(&u, None, n_min, GmvMethod::LambdaBisection)?;
        for i in 0..8 {
            grid[i][j] = 100.0 * w.w[i];
            raw_max = raw_max.max((grid[i][j] - TABLE4_WEIGHTS[i][j]).abs());
        }
        lambdas.push(100.0 * lam.unwrap_or(f64::NAN));
    }
    for i in 0..8 {
        let mut row = vec![asset(i)];
        for j in 0..TABLE4_N.len() {
            row.push(fmt2(grid[i][j]));
            rep.diffs.push(cell(&asset(i), &cols[j], round2(grid[i][j]), TABLE4_WEIGHTS[i][j], CELL_TOL));
        }
        rep.rows.push(row);
    }
    let mut row = vec!["lambda*".to_string()];
    for (j, &l) in lambdas.iter().enumerate() {
        row.push(fmt2(l));
        rep.diffs.push(cell("lambda*", &cols[j], l, TABLE4_LAMBDA[j], LAMBDA_TOL));
    }
    rep.rows.push(row);
    rep.notes.push(format!("max unrounded |Δ| = {raw_max:.4} pp"));
    Ok(rep)
}

/// MDP portfolios on parameter set #2 with `σ₈ = 25%`.
pub fn table5() -> Result<Reproduction> {
    let u = fixtures::parameter_set_2_table5().universe;
    let cols: Vec<String> = TABLE5_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut rep = Reproduction::new("table5", header("asset", cols.clone()));
    let mut ws = Vec::new();
    ws.push(mdp(&u, false, DiversificationConstraint::None)?);
    ws.push(mdp(&u, true, DiversificationConstraint::None)?);
    for n in 3..=7 {
        ws.push(mdp(&u, true, DiversificationConstraint::EffectiveBets(n as f64))?);
    }
    for i in 0..8 {
        let mut row = vec![asset(i)];
        for (j, w) in ws.iter().enumerate() {
            let g = 100.0 * w.w[i];
            row.push(fmt2(g));
            rep.diffs.push(cell(&asset(i), &cols[j], round2(g), TABLE5_WEIGHTS[i][j], CELL_TOL));
        }
        rep.rows.push(row);
    }
    let mut row = vec!["N".to_string()];
    for (j, w) in ws.iter().enumerate() {
        match TABLE5_BETS[j] {
            Some(e) => {
                let b = effective_bets(&w.w);
                row.push(fmt2(b));
                rep.diffs.push(cell("N", &cols[j], b, e, BETS_TOL));
            }
            None => row.push(String::new()),
        }
    }
    rep.rows.push(row);
    rep.notes.push("parameter set #2 with sigma_8 = 25%".into());
    Ok(rep)
}

/// ERC portfolio on parameter set #1.
pub fn erc_table() -> Result<Reproduction> {
    let u = fixtures::parameter_set_1().universe;
    let mut rep = Reproduction::new("erc", vec!["asset".into(), "weight".into()]);
    let w = erc(&u)?;
    for i in 0..8 {
        let g = 100.0 * w.w[i];
        rep.rows.push(vec![asset(i), fmt2(g)]);
        rep.diffs.push(cell(&asset(i), "weight", round2(g), ERC_WEIGHTS[i], CELL_TOL));
    }
    Ok(rep)
}

/// Cycle by which a CCD trace must be within `1e-6` of its limit.
pub const LASSO_FLAT_CYCLES: usize = 5;

/// Per-cycle lasso coefficients for CCD and ADMM on the synthetic fixture.
pub fn lasso_trace(seed: u64, n: Option<usize>, max_iter: Option<usize>) -> Result<Reproduction> {
    let n = n.unwrap_or(LASSO_DEFAULT_N);
    let p = LASSO_DEFAULT_P;
    let data = fixtures::lasso_synthetic(n, p, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let start: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let cfg = CdConfig {
        tol: 1e-12,
        max_cycles: max_iter.unwrap_or(1000),
        ..CdConfig::default()
    }
    .recording();
    let (limit, ccd) = cd_lasso(&data.x, &data.y, LASSO_LAMBDA, &start, &cfg)?;

    let ols = solve_spd(&data.x.gram(), &data.x.tr_matvec(&data.y))?;
    let acfg = AdmmConfig {
        phi0: LASSO_LAMBDA,
        x_change_tol: Some(1e-12),
        max_iter: max_iter.unwrap_or(10_000),
        record_path: true,
        ..AdmmConfig::default()
    };
    let (admm_beta, admm) = admm_lasso_lambda(&data.x, &data.y, LASSO_LAMBDA, Some(&ols), &acfg)?;

    let cols: Vec<String> = (1..=p).map(|j| format!("beta{j}")).collect();
    let mut head = vec!["solver".to_string(), "cycle".to_string()];
    head.extend(cols);
    let mut rep = Reproduction::new("lasso_trace", head);
    let mut push = |name: &str, k: usize, b: &[f64]| {
        let mut row = vec![name.to_string(), k.to_string()];
        row.extend(b.iter().map(|x| format!("{x:.10}")));
        rep.rows.push(row);
    };
    push("ccd", 0, &start);
    for (k, b) in ccd.path.iter().enumerate() {
        push("ccd", k + 1, b);
    }
    push("admm", 0, &ols);
    for (k, b) in admm.path.iter().enumerate() {
        push("admm", k + 1, b);
    }
    let flat = ccd
        .path
        .iter()
        .position(|b| max_abs_diff(b, &limit) <= 1e-6)
        .map(|k| k + 1);
    rep.checks.push((
        format!(
            "CCD within 1e-6 of its limit after {} cycles (limit {LASSO_FLAT_CYCLES})",
            flat.map_or("never".into(), |k| k.to_string())
        ),
        flat.is_some_and(|k| k <= LASSO_FLAT_CYCLES),
    ));
    let gap = max_abs_diff(&limit, &admm_beta);
    rep.checks.push((format!("CCD and ADMM agree to {gap:.2e} (limit 1e-6)"), gap <= 1e-6));
    rep.notes.push(format!("n = {n}, p = {p}, lambda = {LASSO_LAMBDA}, seed = {seed}"));
    rep.notes.push(format!("CCD {}; ADMM {}", ccd.summary(), admm.summary()));
    Ok(rep)
}

pub const BOX_QP_MAX_FROM_ZERO: usize = 50;
pub const BOX_QP_MAX_FROM_ONE: usize = 10;
pub const BOX_QP_MIN_UNCONSTRAINED: usize = 100;

/// CCD iterates on the 5×5 box QP from `x₀ = 0` and `x₀ = 1`, and the
/// unconstrained problem from `x₀ = 0`.
pub fn box_qp_trace(tol: Option<f64>, max_iter: Option<usize>) -> Result<Reproduction> {
    let (q, r, lo, hi) = fixtures::box_qp_example();
    let cfg = CdConfig {
        tol: tol.unwrap_or(1e-8),
        max_cycles: max_iter.unwrap_or(100_000),
        ..CdConfig::default()
    }
    .recording();
    let mut head = vec!["run".to_string(), "cycle".to_string()];
    head.extend((1..=5).map(|j| format!("x{j}")));
    head.push("objective".into());
    let mut rep = Reproduction::new("box_qp_trace", head);
    let free_lo = vec![f64::NEG_INFINITY; 5];
    let free_hi = vec![f64::INFINITY; 5];
    let runs = [
        ("box_from_0", &lo, &hi, vec![0.0; 5]),
        ("box_from_1", &lo, &hi, vec![1.0; 5]),
        ("free_from_0", &free_lo, &free_hi, vec![0.0; 5]),
    ];
    let mut cycles = Vec::new();
    for (name, l, h, x0) in runs {
        let (_, report) = ccd_qp_box(&q, &r, l, h, &x0, &cfg)?;
        for (k, x) in report.path.iter().enumerate() {
            let mut row = vec![name.to_string(), (k + 1).to_string()];
            row.extend(x.iter().map(|v| format!("{v:.10}")));
            row.push(format!("{:.12}", report.objective_trace.get(k + 1).copied().unwrap_or(f64::NAN)));
            rep.rows.push(row);
        }
        cycles.push(report.iterations);
    }
    rep.checks.push((
        format!("box QP from 0 converges in {} cycles (limit {BOX_QP_MAX_FROM_ZERO})", cycles[0]),
        cycles[0] <= BOX_QP_MAX_FROM_ZERO,
    ));
    rep.checks.push((
        format!("box QP from 1 converges in {} cycles (limit {BOX_QP_MAX_FROM_ONE})", cycles[1]),
        cycles[1] <= BOX_QP_MAX_FROM_ONE,
    ));
    rep.checks.push((
        format!("unconstrained QP needs {} cycles (more than {BOX_QP_MIN_UNCONSTRAINED})", cycles[2]),
        cycles[2] > BOX_QP_MIN_UNCONSTRAINED,
    ));
    Ok(rep)
}
