//! Convergence studies, observed orders and the problem registry used by the CLI.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WsldError};
use crate::solver::{
    cn_solve, power_derivative, solve_steady, DiffusionProblem, Grid1D, SpaceFn, SteadyBoundary,
};
use crate::util::max_of;
use crate::wsld::{apply_operator, ShiftTuple, Side, WsldScheme};

/// Reference maximum errors of the steady `x^8` problem (`nu = 5`, `p = 0`)
/// for `h = 1/10, 1/20, 1/40, 1/60`, keyed by `alpha`.
pub const TABLE1_REFERENCE: [(f64, [f64; 4], [f64; 3]); 3] = [
    (
        -0.5,
        [8.0041e-04, 4.9935e-05, 2.1214e-06, 3.0790e-07],
        [4.0026, 4.5570, 4.7601],
    ),
    (
        0.5,
        [4.0005e-03, 2.0652e-04, 7.8935e-06, 9.3316e-07],
        [4.2758, 4.7095, 5.2661],
    ),
    (
        1.8,
        [6.9882e-02, 2.8034e-03, 1.2005e-04, 1.3775e-05],
        [4.6397, 4.5454, 5.3397],
    ),
];

pub const TABLE1_HINV: [usize; 4] = [10, 20, 40, 60];

/// Reference errors at `t = 1` of the diffusion problem with `tau = h^2`
/// for `h = 1/10, 1/20, 1/40, 1/80`, keyed by `(nu, alpha)`.
pub const TABLE2_REFERENCE: [(u32, f64, [f64; 4], [f64; 3]); 6] = [
    (
        3,
        1.1,
        [1.8349e-02, 1.4015e-03, 8.8517e-05, 5.2342e-06],
        [3.7107, 3.9849, 4.0799],
    ),
    (
        3,
        1.5,
        [2.1073e-02, 1.8381e-03, 1.2004e-04, 7.5382e-06],
        [3.5191, 3.9367, 3.9931],
    ),
    (
        3,
        1.8,
        [2.3337e-02, 2.3106e-03, 1.6131e-04, 1.0478e-05],
        [3.3362, 3.8404, 3.9443],
    ),
    (
        4,
        1.1,
        [1.7241e-02, 7.9269e-04, 3.4558e-05, 1.4824e-06],
        [4.4430, 4.5197, 4.5430],
    ),
    (
        4,
        1.5,
        [9.6037e-03, 5.2600e-04, 2.4926e-05, 1.1512e-06],
        [4.1905, 4.3994, 4.4364],
    ),
    (
        4,
        1.8,
        [5.8735e-03, 3.4793e-04, 2.1158e-05, 1.3045e-06],
        [4.0774, 4.0395, 4.0196],
    ),
];

pub const TABLE2_HINV: [usize; 4] = [10, 20, 40, 80];

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(WsldError::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(WsldError::InvalidInput("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(WsldError::InvalidInput(
            "log-log fit needs positive finite data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(WsldError::InvalidInput("degenerate abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// `ln(e0 / e1) / ln(h0 / h1)`.
pub fn observed_rate(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Scientific notation with five significant digits and a signed two-digit
/// exponent, e.g. `8.0041e-04`.
pub fn fmt_sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub suite: String,
    pub problem: String,
    pub nu: u32,
    pub alpha: f64,
    pub shifts: Vec<i32>,
    pub nominal_order: u32,
    pub tau_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub meta: ReportMeta,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rows from `(h, error)` pairs in refinement order; rates use the general
    /// two-point formula so non-dyadic refinements are fine.
    pub fn from_errors(meta: ReportMeta, data: &[(f64, f64)]) -> Result<Self> {
        if let Some(&(h, e)) = data.iter().find(|&&(_, e)| !(e > 0.0) || !e.is_finite()) {
            return Err(WsldError::InvalidInput(format!(
                "error {e} at h = {h} is not positive and finite"
            )));
        }
        let rows = data
            .iter()
            .enumerate()
            .map(|(k, &(h, error))| ConvergenceRow {
                h,
                error,
                rate: (k > 0).then(|| observed_rate(data[k - 1].0, data[k - 1].1, h, error)),
            })
            .collect();
        Ok(Self { meta, rows })
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn hs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    /// `h,error,rate` with an empty rate on the first row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,error,rate\n");
        for r in &self.rows {
            let rate = r.rate.map(fmt_sci).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", fmt_sci(r.h), fmt_sci(r.error), rate);
        }
        out
    }
}

/// Parse `h,error,rate` CSV and return `(h, error, rate)` triples.
pub fn parse_report_csv(csv: &str) -> Result<Vec<(f64, f64, Option<f64>)>> {
    let bad = |line: &str| WsldError::InvalidInput(format!("malformed CSV line '{line}'"));
    csv.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(line));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(line));
            let rate = if cols[2].trim().is_empty() {
                None
            } else {
                Some(num(cols[2])?)
            };
            Ok((num(cols[0])?, num(cols[1])?, rate))
        })
        .collect()
}

/// Least-squares order over all rows of a report.
pub fn order_regression(report: &ConvergenceReport) -> Result<f64> {
    if report.rows.len() < 3 {
        return Err(WsldError::InvalidInput(format!(
            "order regression needs at least 3 rows, got {}",
            report.rows.len()
        )));
    }
    loglog_slope(&report.hs(), &report.errors())
}

/// `max_{1 <= i <= N-1} |h^{-alpha} (A u)_i - f(x_i)|` for `u = x^8` on `[0, 1]`
/// with the unshifted `nu = 5` operator: the local truncation error of the
/// steady problem at the interior nodes.
pub fn table1_error(alpha: f64, n_x: usize) -> Result<f64> {
    let scheme = WsldScheme::single(5, alpha, 0)?;
    let grid = Grid1D::new(0.0, 1.0, n_x)?;
    let nodes = grid.nodes();
    let u: Vec<f64> = nodes.iter().map(|x| x.powi(8)).collect();
    let au = apply_operator(&u, &scheme, Side::Left, grid.h())?;
    Ok(max_of((1..n_x).map(|i| {
        (au[i] - power_derivative(8, alpha, nodes[i])).abs()
    })))
}

/// Solve the steady `x^8` problem with `nu = 5`, `p = 0` and return the max
/// nodal error. Boundary data: `u(0) = 0` for `alpha > 0`, plus `u(1) = 1`
/// replacing the last equation for `alpha > 1`.
pub fn steady_x8_error(alpha: f64, n_x: usize) -> Result<f64> {
    let scheme = WsldScheme::single(5, alpha, 0)?;
    let grid = Grid1D::new(0.0, 1.0, n_x)?;
    let nodes = grid.nodes();
    let f: Vec<f64> = nodes
        .iter()
        .map(|&x| power_derivative(8, alpha, x))
        .collect();
    let bc = SteadyBoundary {
        left: (alpha > 0.0).then_some(0.0),
        right: (alpha > 1.0).then_some(1.0),
    };
    let u = solve_steady(&scheme, &grid, &f, bc)?;
    Ok(max_of(
        nodes.iter().zip(&u).map(|(x, v)| (x.powi(8) - v).abs()),
    ))
}

pub fn run_table1(alphas: &[f64], hinvs: &[usize]) -> Result<Vec<ConvergenceReport>> {
    alphas
        .iter()
        .map(|&alpha| {
            let data = hinvs
                .iter()
                .map(|&n| Ok((1.0 / n as f64, table1_error(alpha, n)?)))
                .collect::<Result<Vec<_>>>()?;
            ConvergenceReport::from_errors(
                ReportMeta {
                    suite: "table1".into(),
                    problem: "steady x^8 on [0,1]".into(),
                    nu: 5,
                    alpha,
                    shifts: vec![0],
                    nominal_order: 5,
                    tau_rule: None,
                },
                &data,
            )
        })
        .collect()
}

/// Error at `t = 1` of the diffusion problem on `[0, 2]` with `h = 1/hinv`,
/// `tau = h^2` and the stable fourth-order tuple.
pub fn table2_error(nu: u32, alpha: f64, hinv: usize) -> Result<f64> {
    let problem = DiffusionProblem::table2(alpha, 2 * hinv, hinv * hinv)?;
    let scheme = WsldScheme::stable_fourth_order(nu, alpha)?;
    cn_solve(&problem, &scheme)?
        .max_error
        .ok_or_else(|| WsldError::InvalidInput("problem has no exact solution".into()))
}

pub fn run_table2(nus: &[u32], alphas: &[f64], hinvs: &[usize]) -> Result<Vec<ConvergenceReport>> {
    let mut out = Vec::new();
    for &nu in nus {
        for &alpha in alphas {
            let data = hinvs
                .iter()
                .map(|&n| Ok((1.0 / n as f64, table2_error(nu, alpha, n)?)))
                .collect::<Result<Vec<_>>>()?;
            out.push(ConvergenceReport::from_errors(
                ReportMeta {
                    suite: "table2".into(),
                    problem: "sin(t+1) x^4 (2-x)^4 on [0,2]".into(),
                    nu,
                    alpha,
                    shifts: ShiftTuple::STABLE.as_array().to_vec(),
                    nominal_order: 4,
                    tau_rule: Some("tau = h^2".into()),
                },
                &data,
            )?);
        }
    }
    Ok(out)
}

/// Max of `|h^{-alpha} (A u)_i - D^alpha u(x_i)|` for `u = x^8` on `[0, 1]`
/// over the nodes `1 <= i <= N - m` whose stencil stays inside the grid.
pub fn consistency_error(scheme: &WsldScheme, n_x: usize) -> Result<f64> {
    let m = scheme.reach();
    let grid = Grid1D::new(0.0, 1.0, n_x)?;
    let nodes = grid.nodes();
    let u: Vec<f64> = nodes.iter().map(|x| x.powi(8)).collect();
    let au = apply_operator(&u, scheme, Side::Left, grid.h())?;
    let exact = |x| power_derivative(8, scheme.alpha, x);
    Ok(max_of(
        (1..=n_x.saturating_sub(m)).map(|i| (au[i] - exact(nodes[i])).abs()),
    ))
}

/// Shift lists for the four weighting levels built from the stable tuple.
pub fn level_shifts(level: u32) -> Result<Vec<i32>> {
    let t = ShiftTuple::STABLE.as_array();
    match level {
        1 => Ok(vec![t[0]]),
        2 => Ok(t[..2].to_vec()),
        3 => Ok(t[..4].to_vec()),
        4 => Ok(t.to_vec()),
        _ => Err(WsldError::InvalidInput(format!(
            "level {level} not in 1..=4"
        ))),
    }
}

pub const CONSISTENCY_HINV: [usize; 4] = [40, 80, 160, 320];

pub fn run_consistency(
    nus: &[u32],
    alpha: f64,
    levels: &[u32],
    hinvs: &[usize],
) -> Result<Vec<ConvergenceReport>> {
    let mut out = Vec::new();
    for &nu in nus {
        for &level in levels {
            let shifts = level_shifts(level)?;
            let scheme = WsldScheme::from_shifts(nu, alpha, &shifts)?;
            let data = hinvs
                .iter()
                .map(|&n| Ok((1.0 / n as f64, consistency_error(&scheme, n)?)))
                .collect::<Result<Vec<_>>>()?;
            out.push(ConvergenceReport::from_errors(
                ReportMeta {
                    suite: "consistency".into(),
                    problem: format!("x^8 on [0,1], level {level}"),
                    nu,
                    alpha,
                    shifts,
                    nominal_order: scheme.order(),
                    tau_rule: None,
                },
                &data,
            )?);
        }
    }
    Ok(out)
}

/// One pass/fail verdict of a convergence check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Errors within `rel_tol` relative and rates within `rate_tol` absolute of a reference.
pub fn check_reference(
    name: String,
    report: &ConvergenceReport,
    errors: &[f64],
    rates: &[f64],
    rel_tol: f64,
    rate_tol: f64,
) -> Check {
    let rel = max_of(
        report
            .errors()
            .iter()
            .zip(errors)
            .map(|(e, r)| ((e - r) / r).abs()),
    );
    let dr = max_of(report.rates().iter().zip(rates).map(|(a, b)| (a - b).abs()));
    let complete = report.rows.len() == errors.len();
    Check {
        pass: complete && rel <= rel_tol && dr <= rate_tol,
        detail: format!(
            "max rel err {rel:.3e} (tol {rel_tol}), max rate diff {dr:.4} (tol {rate_tol})"
        ),
        name,
    }
}

fn find_table1(alpha: f64) -> Option<&'static (f64, [f64; 4], [f64; 3])> {
    TABLE1_REFERENCE.iter().find(|r| r.0 == alpha)
}

fn find_table2(nu: u32, alpha: f64) -> Option<&'static (u32, f64, [f64; 4], [f64; 3])> {
    TABLE2_REFERENCE.iter().find(|r| r.0 == nu && r.1 == alpha)
}

/// Reference match (2 %, 0.15) for `alpha < 1`, observed order at least 4 otherwise.
pub fn table1_checks(reports: &[ConvergenceReport]) -> Vec<Check> {
    reports
        .iter()
        .map(|r| {
            let alpha = r.meta.alpha;
            let name = format!("steady nu=5 alpha={alpha}");
            match find_table1(alpha) {
                Some(&(_, errs, rates)) if alpha < 1.0 => {
                    check_reference(name, r, &errs, &rates, 0.02, 0.15)
                }
                _ => {
                    let min_rate = r.rates().into_iter().fold(f64::INFINITY, f64::min);
                    Check {
                        pass: min_rate >= 4.0,
                        detail: format!("min observed order {min_rate:.4} (need >= 4)"),
                        name,
                    }
                }
            }
        })
        .collect()
}

/// Reference match within 5 % on errors and 0.2 on rates.
pub fn table2_checks(reports: &[ConvergenceReport]) -> Vec<Check> {
    reports
        .iter()
        .map(|r| {
            let name = format!("diffusion nu={} alpha={}", r.meta.nu, r.meta.alpha);
            match find_table2(r.meta.nu, r.meta.alpha) {
                Some(&(_, _, errs, rates)) => check_reference(name, r, &errs, &rates, 0.05, 0.2),
                None => Check {
                    name,
                    pass: false,
                    detail: "no reference values".into(),
                },
            }
        })
        .collect()
}

/// Finest-pair observed order within 0.3 of the nominal order.
pub fn consistency_checks(reports: &[ConvergenceReport]) -> Vec<Check> {
    reports
        .iter()
        .map(|r| {
            let last = r.rates().last().copied().unwrap_or(f64::NAN);
            let nominal = r.meta.nominal_order as f64;
            Check {
                name: format!(
                    "consistency nu={} alpha={} shifts={:?}",
                    r.meta.nu, r.meta.alpha, r.meta.shifts
                ),
                pass: (last - nominal).abs() <= 0.3,
                detail: format!("finest observed order {last:.4}, nominal {nominal}"),
            }
        })
        .collect()
}

/// JSON problem description accepted by the `solve` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    #[serde(rename = "xL")]
    pub x_l: f64,
    #[serde(rename = "xR")]
    pub x_r: f64,
    #[serde(rename = "Nx")]
    pub n_x: usize,
    #[serde(rename = "T", default = "one")]
    pub t_final: f64,
    #[serde(rename = "Nt", default = "one_step")]
    pub n_t: usize,
    #[serde(default)]
    pub d_plus: Option<String>,
    /// Expression id, or a number meaning `kappa * d_plus`.
    #[serde(default)]
    pub d_minus: Option<serde_json::Value>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub initial: Option<String>,
    pub problem: ProblemKind,
}

fn one() -> f64 {
    1.0
}

fn one_step() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Table1,
    Table2,
    Custom,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| WsldError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_l < self.x_r) {
            return Err(WsldError::Config(format!(
                "xL = {} must be below xR = {}",
                self.x_l, self.x_r
            )));
        }
        if self.n_x < 2 || self.n_t == 0 || !(self.t_final > 0.0) {
            return Err(WsldError::Config("need Nx >= 2, Nt >= 1, T > 0".into()));
        }
        if self.problem != ProblemKind::Table1 && !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(WsldError::Config(format!(
                "alpha = {} outside (1, 2)",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Build the time-dependent problem. `table1` is steady and has none.
    pub fn diffusion_problem(&self) -> Result<DiffusionProblem> {
        let alpha = self.alpha;
        match self.problem {
            ProblemKind::Table1 => Err(WsldError::Config(
                "table1 is a steady problem; no time march".into(),
            )),
            ProblemKind::Table2 => {
                if self.x_l != 0.0 || self.x_r != 2.0 {
                    return Err(WsldError::Config("table2 lives on [0, 2]".into()));
                }
                let mut p = DiffusionProblem::table2(alpha, self.n_x, self.n_t)?;
                p.t_final = self.t_final;
                Ok(p)
            }
            ProblemKind::Custom => {
                let d_plus = expression(self.d_plus.as_deref().unwrap_or("one"), alpha)?;
                let kappa = match (&self.d_minus, self.kappa) {
                    (Some(_), Some(_)) => {
                        return Err(WsldError::Config(
                            "give either d_minus or kappa, not both".into(),
                        ))
                    }
                    (None, Some(k)) => Some(k),
                    (None, None) => Some(1.0),
                    (Some(serde_json::Value::Number(n)), None) => n.as_f64(),
                    (Some(_), None) => None,
                };
                let d_minus: SpaceFn = match (kappa, &self.d_minus) {
                    (Some(k), _) => {
                        let dp = d_plus.clone();
                        Arc::new(move |x| k * dp(x))
                    }
                    (None, Some(serde_json::Value::String(id))) => expression(id, alpha)?,
                    (None, v) => {
                        return Err(WsldError::Config(format!("bad d_minus {v:?}")));
                    }
                };
                let grid = Grid1D::new(self.x_l, self.x_r, self.n_x)?;
                let source = match self.source.as_deref().unwrap_or("zero") {
                    "zero" => Arc::new(|_: f64, _: f64| 0.0) as crate::solver::SpaceTimeFn,
                    other => return Err(WsldError::Config(format!("unknown source '{other}'"))),
                };
                let initial = expression(self.initial.as_deref().unwrap_or("zero"), alpha)?;
                let zero = Arc::new(|_: f64| 0.0);
                Ok(DiffusionProblem {
                    alpha,
                    grid,
                    d_plus,
                    d_minus,
                    kappa,
                    source,
                    initial,
                    boundary_left: zero.clone(),
                    boundary_right: zero,
                    exact: None,
                    t_final: self.t_final,
                    n_t: self.n_t,
                })
            }
        }
    }
}

/// Built-in coefficient and initial-data expressions.
pub fn expression(id: &str, alpha: f64) -> Result<SpaceFn> {
    let f: SpaceFn = match id {
        "zero" => Arc::new(|_| 0.0),
        "one" => Arc::new(|_| 1.0),
        "x^alpha" => Arc::new(move |x: f64| x.powf(alpha)),
        "2x^alpha" => Arc::new(move |x: f64| 2.0 * x.powf(alpha)),
        "bump" => Arc::new(crate::solver::bump),
        "sin(1)bump" => Arc::new(|x| 1f64.sin() * crate::solver::bump(x)),
        other => return Err(WsldError::Config(format!("unknown expression '{other}'"))),
    };
    Ok(f)
}
