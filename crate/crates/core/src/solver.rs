//! Steady fractional problems and Crank-Nicolson time stepping for
//! `u_t = d_+(x) D_left^alpha u + d_-(x) D_right^alpha u + f(x, t)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Result, WsldError};
use crate::util::max_of;
use crate::wsld::{assemble_left, WsldScheme};

/// `|U|_inf` above which a time march is declared unstable.
pub const BLOWUP_THRESHOLD: f64 = 1e10;

/// Uniform grid `x_i = x_L + i h`, `i = 0..=N_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub x_l: f64,
    pub x_r: f64,
    pub n_x: usize,
}

impl Grid1D {
    pub fn new(x_l: f64, x_r: f64, n_x: usize) -> Result<Self> {
        if !(x_l < x_r) {
            return Err(WsldError::InvalidInput(format!(
                "empty domain [{x_l}, {x_r}]"
            )));
        }
        if n_x < 2 {
            return Err(WsldError::InvalidInput(format!("N_x = {n_x} < 2")));
        }
        Ok(Self { x_l, x_r, n_x })
    }

    pub fn h(&self) -> f64 {
        (self.x_r - self.x_l) / self.n_x as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x_l + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_x).map(|i| self.node(i)).collect()
    }
}

/// `Gamma(n+1) / Gamma(n+1-alpha) x^{n-alpha}`, the left Riemann-Liouville
/// derivative of `x^n` from 0.
pub fn power_derivative(n: u32, alpha: f64, x: f64) -> f64 {
    let nf = n as f64;
    if x <= 0.0 {
        return 0.0;
    }
    gamma(nf + 1.0) / gamma(nf + 1.0 - alpha) * x.powf(nf - alpha)
}

/// Boundary data for a steady solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SteadyBoundary {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

/// Solve `h^{-alpha} A u = f` on the grid, where `A` is the left operator of
/// `scheme`. Prescribed boundary values replace the first/last equation.
///
/// For an unshifted single operator `A` is lower triangular and the system is
/// solved by forward substitution.
pub fn solve_steady(
    scheme: &WsldScheme,
    grid: &Grid1D,
    f: &[f64],
    bc: SteadyBoundary,
) -> Result<Vec<f64>> {
    let n = grid.n_x + 1;
    if f.len() != n {
        return Err(WsldError::LengthMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let mut a = assemble_left(scheme, grid.n_x)?
        .scaled(scheme.alpha, grid.h())
        .entries;
    let mut b = DVector::from_column_slice(f);
    if let Some(v) = bc.left {
        pin_row(&mut a, &mut b, 0, v);
    }
    if let Some(v) = bc.right {
        pin_row(&mut a, &mut b, n - 1, v);
    }
    let lower = (0..n).all(|i| (i + 1..n).all(|j| a[(i, j)] == 0.0));
    let u = if lower {
        forward_substitute(&a, &b)?
    } else {
        a.lu()
            .solve(&b)
            .ok_or_else(|| WsldError::Singular("steady system".into()))?
    };
    Ok(u.iter().copied().collect())
}

fn pin_row(a: &mut DMatrix<f64>, b: &mut DVector<f64>, row: usize, value: f64) {
    a.row_mut(row).fill(0.0);
    a[(row, row)] = 1.0;
    b[row] = value;
}

fn forward_substitute(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = b.len();
    let mut u = DVector::zeros(n);
    for i in 0..n {
        let diag = a[(i, i)];
        if diag == 0.0 {
            return Err(WsldError::Singular(format!("zero diagonal at row {i}")));
        }
        let s: f64 = (0..i).map(|j| a[(i, j)] * u[j]).sum();
        u[i] = (b[i] - s) / diag;
    }
    Ok(u)
}

/// Largest `|h^{-alpha} (A u)_i - f_i|` over the rows not replaced by boundary data.
pub fn steady_residual(
    scheme: &WsldScheme,
    grid: &Grid1D,
    u: &[f64],
    f: &[f64],
    bc: SteadyBoundary,
) -> Result<f64> {
    let a = assemble_left(scheme, grid.n_x)?
        .scaled(scheme.alpha, grid.h())
        .entries;
    let au = &a * DVector::from_column_slice(u);
    let n = u.len();
    Ok(max_of(
        (0..n)
            .filter(|&i| !(i == 0 && bc.left.is_some()) && !(i == n - 1 && bc.right.is_some()))
            .map(|i| (au[i] - f[i]).abs()),
    ))
}

pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A 1D space-fractional diffusion problem with Dirichlet boundaries.
#[derive(Clone)]
pub struct DiffusionProblem {
    pub alpha: f64,
    pub grid: Grid1D,
    pub d_plus: SpaceFn,
    pub d_minus: SpaceFn,
    /// When set, `d_minus = kappa * d_plus` holds exactly.
    pub kappa: Option<f64>,
    pub source: SpaceTimeFn,
    pub initial: SpaceFn,
    pub boundary_left: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub boundary_right: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub exact: Option<SpaceTimeFn>,
    pub t_final: f64,
    pub n_t: usize,
}

impl fmt::Debug for DiffusionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionProblem")
            .field("alpha", &self.alpha)
            .field("grid", &self.grid)
            .field("kappa", &self.kappa)
            .field("t_final", &self.t_final)
            .field("n_t", &self.n_t)
            .finish_non_exhaustive()
    }
}

impl DiffusionProblem {
    pub fn tau(&self) -> f64 {
        self.t_final / self.n_t as f64
    }

    /// Exact solution `sin(t+1) x^4 (2-x)^4` on `(0, 2)` with `d_+ = x^alpha`,
    /// `d_- = 2 x^alpha` and the matching manufactured source.
    pub fn table2(alpha: f64, n_x: usize, n_t: usize) -> Result<Self> {
        let grid = Grid1D::new(0.0, 2.0, n_x)?;
        let d_plus: SpaceFn = Arc::new(move |x: f64| x.powf(alpha));
        let d_minus: SpaceFn = Arc::new(move |x: f64| 2.0 * x.powf(alpha));
        Ok(Self {
            alpha,
            grid,
            d_plus,
            d_minus,
            kappa: Some(2.0),
            source: Arc::new(move |x, t| table2_source(alpha, x, t)),
            initial: Arc::new(|x| 1f64.sin() * bump(x)),
            boundary_left: Arc::new(|_| 0.0),
            boundary_right: Arc::new(|_| 0.0),
            exact: Some(Arc::new(|x, t| (t + 1.0).sin() * bump(x))),
            t_final: 1.0,
            n_t,
        })
    }

    /// Everything zero: the discrete solution must stay identically zero.
    pub fn zero(alpha: f64, n_x: usize, n_t: usize) -> Result<Self> {
        let zero: SpaceFn = Arc::new(|_| 0.0);
        Ok(Self {
            alpha,
            grid: Grid1D::new(0.0, 1.0, n_x)?,
            d_plus: Arc::new(|_| 1.0),
            d_minus: Arc::new(|_| 1.0),
            kappa: Some(1.0),
            source: Arc::new(|_, _| 0.0),
            initial: zero.clone(),
            boundary_left: zero.clone(),
            boundary_right: zero,
            exact: Some(Arc::new(|_, _| 0.0)),
            t_final: 1.0,
            n_t,
        })
    }

    fn sample(&self, f: &SpaceFn) -> Vec<f64> {
        self.grid.nodes().into_iter().map(|x| f(x)).collect()
    }

    /// Check `d_minus = kappa d_plus` at the nodes when `kappa` is declared.
    pub fn kappa_consistent(&self) -> bool {
        match self.kappa {
            None => true,
            Some(k) => self
                .grid
                .nodes()
                .into_iter()
                .all(|x| (self.d_minus)(x) == k * (self.d_plus)(x)),
        }
    }
}

/// `x^4 (2-x)^4`.
pub fn bump(x: f64) -> f64 {
    (x * (2.0 - x)).powi(4)
}

/// Manufactured source for the exact solution `sin(t+1) x^4 (2-x)^4` with
/// `d_+ = x^alpha`, `d_- = 2 x^alpha` on `(0, 2)`.
pub fn table2_source(alpha: f64, x: f64, t: f64) -> f64 {
    // x^4 (2-x)^4 = sum_n c_n x^n, n = 4..8; mirrored terms use (2-x).
    let terms = [(8u32, 1.0), (7, -8.0), (6, 24.0), (5, -32.0), (4, 16.0)];
    let y = 2.0 - x;
    let bracket: f64 = terms
        .iter()
        .map(|&(n, c)| {
            let nf = n as f64;
            let g = gamma(nf + 1.0) / gamma(nf + 1.0 - alpha);
            c * g * (pow_pos(x, nf - alpha) + 2.0 * pow_pos(y, nf - alpha))
        })
        .sum();
    (t + 1.0).cos() * bump(x) - x.powf(alpha) * (t + 1.0).sin() * bracket
}

fn pow_pos(x: f64, e: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}

/// Crank-Nicolson matrices with Dirichlet rows replaced by identity rows.
#[derive(Debug, Clone)]
pub struct CnSystem {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    pub tau: f64,
}

/// `[I -/+ tau/(2 h^alpha) (D_+ A + D_- A^T)]`, first and last rows pinned.
pub fn assemble_cn_system(problem: &DiffusionProblem, scheme: &WsldScheme) -> Result<CnSystem> {
    if (scheme.alpha - problem.alpha).abs() > 0.0 {
        return Err(WsldError::InvalidInput(format!(
            "scheme alpha {} differs from problem alpha {}",
            scheme.alpha, problem.alpha
        )));
    }
    let grid = &problem.grid;
    let a = assemble_left(scheme, grid.n_x)?.entries;
    let dp = DVector::from_vec(problem.sample(&problem.d_plus));
    let dm = DVector::from_vec(problem.sample(&problem.d_minus));
    let n = grid.n_x + 1;
    let at = a.transpose();
    let spatial = DMatrix::from_fn(n, n, |i, j| dp[i] * a[(i, j)] + dm[i] * at[(i, j)]);
    let tau = problem.tau();
    let c = tau / (2.0 * grid.h().powf(problem.alpha));
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = &eye - &spatial * c;
    let mut rhs = &eye + &spatial * c;
    for row in [0, n - 1] {
        lhs.row_mut(row).fill(0.0);
        rhs.row_mut(row).fill(0.0);
        lhs[(row, row)] = 1.0;
    }
    Ok(CnSystem { lhs, rhs, tau })
}

/// Solution after `n_t` steps, with the max-norm error when an exact solution is known.
#[derive(Debug, Clone)]
pub struct SolveState {
    pub u: Vec<f64>,
    pub step: usize,
    pub t: f64,
    pub max_error: Option<f64>,
    /// `sup_n |U^n|_inf` over the march.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CnOptions {
    /// Re-factor the left-hand matrix every step instead of once.
    pub refactor_each_step: bool,
    /// Override the number of steps (the step size stays `T / N_t`).
    pub steps: Option<usize>,
}

pub fn cn_solve(problem: &DiffusionProblem, scheme: &WsldScheme) -> Result<SolveState> {
    cn_solve_with(problem, scheme, CnOptions::default())
}

pub fn cn_solve_with(
    problem: &DiffusionProblem,
    scheme: &WsldScheme,
    opts: CnOptions,
) -> Result<SolveState> {
    let sys = assemble_cn_system(problem, scheme)?;
    let n = problem.grid.n_x + 1;
    let nodes = problem.grid.nodes();
    let tau = sys.tau;
    let steps = opts.steps.unwrap_or(problem.n_t);

    let factor = || sys.lhs.clone().lu();
    let mut lu = factor();
    if !lu.is_invertible() {
        return Err(WsldError::Singular(
            "Crank-Nicolson left-hand matrix".into(),
        ));
    }

    let mut u = DVector::from_vec(problem.sample(&problem.initial));
    let mut sup_norm = u.amax();
    for step in 0..steps {
        let t_next = (step + 1) as f64 * tau;
        let t_half = (step as f64 + 0.5) * tau;
        let mut b = &sys.rhs * &u;
        for i in 1..n - 1 {
            b[i] += tau * (problem.source)(nodes[i], t_half);
        }
        b[0] = (problem.boundary_left)(t_next);
        b[n - 1] = (problem.boundary_right)(t_next);
        if opts.refactor_each_step {
            lu = factor();
        }
        u = lu
            .solve(&b)
            .ok_or_else(|| WsldError::Singular(format!("solve failed at step {}", step + 1)))?;
        let norm = u.amax();
        if !norm.is_finite() || norm > BLOWUP_THRESHOLD {
            return Err(WsldError::Instability {
                step: step + 1,
                norm,
            });
        }
        sup_norm = sup_norm.max(norm);
    }
    let t = steps as f64 * tau;
    let max_error = problem.exact.as_ref().map(|ex| {
        max_of(
            nodes
                .iter()
                .zip(u.iter())
                .map(|(&x, &v)| (ex(x, t) - v).abs()),
        )
    });
    Ok(SolveState {
        u: u.iter().copied().collect(),
        step: steps,
        t,
        max_error,
        sup_norm,
    })
}

/// Outcome of an aggressive-step stability run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub tau: f64,
    pub steps: usize,
    pub sup_norm: f64,
    /// `sup |u|` of the exact solution over the same horizon (1 when unknown).
    pub scale: f64,
    pub bounded: bool,
}

/// Number of time steps taken by [`stability_probe`].
pub const STABILITY_PROBE_STEPS: usize = 200;

/// March with `tau = tau_over_h * h` for [`STABILITY_PROBE_STEPS`] steps and
/// report whether `sup_n |U^n|_inf` stays within 10x the exact-solution scale.
pub fn stability_probe(
    problem: &DiffusionProblem,
    scheme: &WsldScheme,
    tau_over_h: f64,
) -> Result<StabilityReport> {
    let tau = tau_over_h * problem.grid.h();
    let steps = STABILITY_PROBE_STEPS;
    let mut p = problem.clone();
    p.n_t = 1;
    p.t_final = tau;
    let scale = match &problem.exact {
        Some(ex) => {
            let nodes = problem.grid.nodes();
            max_of(
                (0..=steps)
                    .flat_map(|n| nodes.iter().map(move |&x| (x, n as f64 * tau)))
                    .map(|(x, t)| ex(x, t).abs()),
            )
        }
        None => 1.0,
    };
    let sup_norm = match cn_solve_with(
        &p,
        scheme,
        CnOptions {
            steps: Some(steps),
            ..CnOptions::default()
        },
    ) {
        Ok(state) => state.sup_norm,
        Err(WsldError::Instability { norm, .. }) => norm,
        Err(e) => return Err(e),
    };
    let bounded = sup_norm.is_finite() && sup_norm <= 10.0 * scale.max(0.0)
        || (scale <= f64::MIN_POSITIVE && sup_norm == 0.0);
    Ok(StabilityReport {
        tau,
        steps,
        sup_norm,
        scale,
        bounded,
    })
}
