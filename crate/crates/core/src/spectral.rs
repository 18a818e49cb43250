//! Fourier symbols, Toeplitz generating functions and eigenvalue probes.
//!
//! The symbol of a shifted operator applied to `e^{i omega x}` is
//! `h^{-alpha} (-i omega)^alpha W(z)` with `z = -i omega h` and
//! `W(z) = e^{pz} (P(e^{-z}) / z)^alpha`. Since `-ln(1 - w) = sum w^i / i`,
//! `P(e^{-z}) = z - R` with `R = sum_{i > nu} w^i / i`, `w = 1 - e^{-z}`, which
//! gives `W - 1` without cancellation near `z = 0`.
//!
//! A left operator matrix is Toeplitz with diagonals `phi_{d+m}`, so its
//! symmetric part has the real generating function
//! `f(x) = Re[ P(e^{ix})^alpha sum_j w_j e^{-i s_j x} ]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, WsldError};
use crate::wsld::{OperatorMatrix, ShiftTuple, WsldScheme};

/// Values above this count as a positive generating function.
pub const DEFINITENESS_TOL: f64 = 1e-12;

/// Largest matrix handled by [`eigen_probe`].
pub const EIGEN_MAX_N: usize = 512;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

fn check_nu(nu: u32) -> Result<()> {
    if (1..=5).contains(&nu) {
        Ok(())
    } else {
        Err(WsldError::InvalidNu(nu, "1..=5"))
    }
}

fn expm1_c(v: Complex64) -> Complex64 {
    let (s, c) = v.im.sin_cos();
    let half = (0.5 * v.im).sin();
    Complex64::new(v.re.exp_m1() * c - 2.0 * half * half, v.re.exp() * s)
}

fn ln1p_c(u: Complex64) -> Complex64 {
    Complex64::new(
        0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p(),
        u.im.atan2(1.0 + u.re),
    )
}

/// `R = sum_{i > nu} w^i / i` for `w = 1 - e^{-z}`.
fn tail_r(nu: u32, z: Complex64) -> Complex64 {
    let w = -expm1_c(-z);
    if w.norm() < 0.5 {
        let mut pow = w.powu(nu + 1);
        let mut sum = Complex64::new(0.0, 0.0);
        for i in (nu + 1).. {
            let term = pow / i as f64;
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
            pow *= w;
        }
        sum
    } else {
        let poly: Complex64 = (1..=nu).map(|i| w.powu(i) / i as f64).sum();
        z - poly
    }
}

/// `W(z) - 1` for the shifted operator `(nu, alpha, p)`.
pub fn symbol_w_minus_one(nu: u32, alpha: f64, p: i32, z: Complex64) -> Result<Complex64> {
    check_nu(nu)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(z);
    }
    let r = tail_r(nu, z);
    Ok(expm1_c(z * p as f64 + ln1p_c(-r / z) * alpha))
}

/// `W(z) = e^{pz} (P_nu(e^{-z}) / z)^alpha`, with `W(0) = 1`.
pub fn symbol_w(nu: u32, alpha: f64, p: i32, z: Complex64) -> Result<Complex64> {
    Ok(symbol_w_minus_one(nu, alpha, p, z)? + 1.0)
}

/// `Q(zeta) = P(zeta) / (1 - zeta) = sum_{i=1}^{nu} (1 - zeta)^{i-1} / i`, so `Q(1) = 1`.
fn q_poly(nu: u32, zeta: Complex64) -> Complex64 {
    let w = Complex64::new(1.0, 0.0) - zeta;
    (1..=nu).map(|i| w.powu(i - 1) / i as f64).sum()
}

/// The factored form `e^{pz} ((1 - e^{-z}) / z)^alpha Q(e^{-z})^alpha`, evaluated
/// literally with principal powers. Agrees with [`symbol_w`] for `|z| <= 1`.
pub fn symbol_w_factored(nu: u32, alpha: f64, p: i32, z: Complex64) -> Result<Complex64> {
    check_nu(nu)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let zeta = (-z).exp();
    let first = ((Complex64::new(1.0, 0.0) - zeta) / z).powf(alpha);
    Ok((z * p as f64).exp() * first * q_poly(nu, zeta).powf(alpha))
}

/// Least-squares slope of `log|W(-it) - 1|` against `log t` over `ts`.
pub fn symbol_slope(nu: u32, alpha: f64, p: i32, ts: &[f64]) -> Result<f64> {
    let ys = ts
        .iter()
        .map(|&t| symbol_w_minus_one(nu, alpha, p, Complex64::new(0.0, -t)).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    crate::bench::loglog_slope(ts, &ys)
}

/// Nine log-spaced points on `[1e-3, 1e-1]`.
pub fn default_symbol_ts() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect()
}

/// `P(e^{ix})^alpha = (1 - e^{ix})^alpha Q(e^{ix})^alpha`, principal powers per factor.
fn lubich_symbol(nu: u32, alpha: f64, x: f64) -> Complex64 {
    let zeta = Complex64::from_polar(1.0, x);
    (Complex64::new(1.0, 0.0) - zeta).powf(alpha) * q_poly(nu, zeta).powf(alpha)
}

/// Generating function of the symmetric part of `scheme`'s left matrix.
pub fn gen_fn_scheme(scheme: &WsldScheme, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let shifted: Complex64 = scheme
        .terms()
        .iter()
        .map(|&(w, s)| Complex64::from_polar(w, -(s as f64) * x))
        .sum();
    (lubich_symbol(scheme.nu, scheme.alpha, x) * shifted).re
}

/// Truncated Fourier sum `sum_{k=0}^{K} phi_k cos((k - m) x)` of the same function.
pub fn gen_fn_series(scheme: &WsldScheme, x: f64, k_max: usize) -> Result<f64> {
    let phi = scheme.phi(k_max)?;
    let m = scheme.reach() as f64;
    Ok(phi
        .iter()
        .enumerate()
        .map(|(k, v)| v * ((k as f64 - m) * x).cos())
        .sum())
}

fn trig_ab(nu: u32, x: f64) -> Result<(f64, f64)> {
    match nu {
        3 => Ok((
            (11.0 - 7.0 * x.cos() + 2.0 * (2.0 * x).cos()) / 6.0,
            (7.0 * x.sin() - 2.0 * (2.0 * x).sin()) / 6.0,
        )),
        4 => Ok((
            (25.0 - 23.0 * x.cos() + 13.0 * (2.0 * x).cos() - 3.0 * (3.0 * x).cos()) / 12.0,
            (23.0 * x.sin() - 13.0 * (2.0 * x).sin() + 3.0 * (3.0 * x).sin()) / 12.0,
        )),
        _ => Err(WsldError::InvalidNu(nu, "3 or 4")),
    }
}

/// Closed form of the generating function for the pair `(1, q)`:
/// `(2 sin(x/2))^alpha (a^2+b^2)^{alpha/2} [w_1 cos(alpha(x/2 - pi/2 + theta) - x)
/// + w_q cos(alpha(x/2 - pi/2 + theta) - q x)]`, `theta = atan2(-b, a)`.
///
/// Even in `x`; negative `x` is folded onto `[0, pi]`.
pub fn gen_fn_pair(nu: u32, alpha: f64, q: i32, x: f64) -> Result<f64> {
    let (w_1, w_q) = crate::wsld::weights2(1, q)?;
    let x = x.abs();
    let (a, b) = trig_ab(nu, x)?;
    let theta = (-b).atan2(a);
    let phase = alpha * (0.5 * x - 0.5 * PI + theta);
    let amp = (2.0 * (0.5 * x).sin()).powf(alpha) * (a * a + b * b).powf(0.5 * alpha);
    Ok(amp * (w_1 * (phase - x).cos() + w_q * (phase - q as f64 * x).cos()))
}

/// Weighted combination of [`gen_fn_pair`] over the four pairs of a tuple whose
/// pairs all start with shift 1.
pub fn gen_fn_combined(nu: u32, alpha: f64, shifts: &ShiftTuple, x: f64) -> Result<f64> {
    if [shifts.p, shifts.r, shifts.pb, shifts.rb] != [1; 4] {
        return Err(WsldError::InvalidShifts(format!(
            "pair generating functions need p = r = pb = rb = 1, got {shifts}"
        )));
    }
    let (w_pq, w_rs) = crate::wsld::weights3(shifts.p, shifts.q, shifts.r, shifts.s)?;
    let (w_pbqb, w_rbsb) = crate::wsld::weights3(shifts.pb, shifts.qb, shifts.rb, shifts.sb)?;
    let (w4, w4b) = crate::wsld::weights4(nu, alpha, shifts)?;
    let f = |q| gen_fn_pair(nu, alpha, q, x);
    Ok(w4 * (w_pq * f(shifts.q)? + w_rs * f(shifts.s)?)
        + w4b * (w_pbqb * f(shifts.qb)? + w_rbsb * f(shifts.sb)?))
}

/// `alpha = 1.01, 1.02, ..., 1.99`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=99).map(|k| 1.0 + 0.01 * k as f64).collect()
}

/// `n` uniform points on `[0, pi]`, both ends included.
pub fn default_x_grid(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanReport {
    pub max_value: f64,
    pub argmax_alpha: f64,
    pub argmax_x: f64,
    pub pass: bool,
}

/// Sup of the generating function of the scheme built from `shifts` over the
/// `(alpha, x)` grid. Passes iff the sup is at most [`DEFINITENESS_TOL`].
pub fn definiteness_scan(
    nu: u32,
    shifts: &[i32],
    alphas: &[f64],
    xs: &[f64],
) -> Result<ScanReport> {
    if alphas.is_empty() || xs.is_empty() {
        return Err(WsldError::InvalidInput("empty scan grid".into()));
    }
    let mut best = (f64::NEG_INFINITY, alphas[0], xs[0]);
    for &alpha in alphas {
        let scheme = WsldScheme::from_shifts(nu, alpha, shifts)?;
        for &x in xs {
            let v = gen_fn_scheme(&scheme, x);
            if v.is_nan() || v > best.0 {
                best = (v, alpha, x);
                if v.is_nan() {
                    break;
                }
            }
        }
    }
    Ok(ScanReport {
        max_value: best.0,
        argmax_alpha: best.1,
        argmax_x: best.2,
        pass: best.0 <= DEFINITENESS_TOL,
    })
}

/// `(min f, max f)` of the scheme's generating function on `[0, pi]`; the grid
/// extremes are polished by golden-section search.
pub fn gen_fn_range(scheme: &WsldScheme, n_grid: usize) -> (f64, f64) {
    let xs = default_x_grid(n_grid.max(3));
    let f = |x: f64| gen_fn_scheme(scheme, x);
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let pick = |better: &dyn Fn(f64, f64) -> bool| {
        let i = (0..vals.len())
            .reduce(|a, b| if better(vals[b], vals[a]) { b } else { a })
            .unwrap();
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(xs.len() - 1)];
        let sign = if better(1.0, 0.0) { 1.0 } else { -1.0 };
        let x = golden_max(|x| sign * f(x), lo, hi);
        if better(f(x), vals[i]) {
            f(x)
        } else {
            vals[i]
        }
    };
    let min = pick(&|a, b| a < b);
    let max = pick(&|a, b| a > b);
    (min, max)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Spectral extremes of an operator matrix and its symmetric part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenProbe {
    /// Largest real part among the eigenvalues of `A` itself.
    pub max_real_part: f64,
    pub min_real_part: f64,
    pub lambda_min_sym: f64,
    pub lambda_max_sym: f64,
}

/// Dense eigen-decompositions of `A` and `H = (A + A^T)/2`.
pub fn eigen_probe(matrix: &OperatorMatrix) -> Result<EigenProbe> {
    let n = matrix.n();
    if n > EIGEN_MAX_N {
        return Err(WsldError::InvalidInput(format!(
            "eigen probe limited to n <= {EIGEN_MAX_N}, got {n}"
        )));
    }
    let sym = SymmetricEigen::try_new(matrix.symmetric_part(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(WsldError::EigenNoConvergence)?;
    let lambda_min_sym = sym.eigenvalues.min();
    let lambda_max_sym = sym.eigenvalues.max();
    let re = real_parts(&matrix.entries)?;
    Ok(EigenProbe {
        max_real_part: re.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_real_part: re.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_min_sym,
        lambda_max_sym,
    })
}

fn real_parts(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let lower = (0..n).all(|i| (i + 1..n).all(|j| a[(i, j)] == 0.0));
    if lower {
        return Ok(a.diagonal().iter().copied().collect());
    }
    let schur = a
        .clone()
        .try_schur(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(WsldError::EigenNoConvergence)?;
    let re: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.re).collect();
    if re.iter().any(|v| !v.is_finite()) {
        return Err(WsldError::EigenNoConvergence);
    }
    Ok(re)
}
