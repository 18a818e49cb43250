//! Coefficients of Lubich's fractional generating functions
//! `(sum_{i=1}^{nu} (1-z)^i / i)^alpha` for nu = 1..=5.
//!
//! Two independent routes are provided. [`lubich_coeffs`] uses the
//! power-of-a-series recurrence directly on the polynomial coefficients.
//! [`lubich_coeffs_oracle`] factors the polynomial into binomial factors
//! `(1 - r z)^alpha` and convolves their series in complex arithmetic.

mod roots;

pub use roots::{root_factorization, RootFactorization};

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Result, WsldError};
use crate::util::max_of;

/// Largest admissible imaginary part left over by the complex oracle.
pub const ORACLE_IMAG_TOL: f64 = 1e-12;

/// Exact coefficients of `P_nu(z) = sum_{i=1}^{nu} (1-z)^i / i`, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingPolynomial {
    pub nu: u32,
    pub coeffs: Vec<Ratio<i64>>,
}

impl GeneratingPolynomial {
    pub fn new(nu: u32) -> Result<Self> {
        if !(1..=5).contains(&nu) {
            return Err(WsldError::InvalidNu(nu, "1..=5"));
        }
        let nu_i = nu as i64;
        let coeffs = (0..=nu_i)
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                (j.max(1)..=nu_i)
                    .map(|i| Ratio::new(sign * binomial(i, j), i))
                    .fold(Ratio::from_integer(0), |acc, t| acc + t)
            })
            .collect();
        Ok(Self { nu, coeffs })
    }

    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect()
    }

    /// `p_0 = sum_{i=1}^{nu} 1/i`.
    pub fn leading(&self) -> Ratio<i64> {
        self.coeffs[0]
    }
}

fn binomial(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// The coefficients `l_0..=l_K` of one generating function.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    pub nu: u32,
    pub alpha: f64,
    pub values: Vec<f64>,
}

impl CoeffSeries {
    /// Truncation index `K` (the series holds `K + 1` values).
    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `l_k`, with the convention `l_k = 0` for `k < 0`.
    ///
    /// Panics if `k` lies past the computed truncation.
    pub fn at(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.values[k as usize]
        }
    }

    pub fn partial_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Grunwald weights `(-1)^m binom(alpha, m)`, i.e. the `nu = 1` series.
pub fn grunwald_coeffs(alpha: f64, k_max: usize) -> CoeffSeries {
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(1.0);
    for m in 1..=k_max {
        let prev = values[m - 1];
        values.push((1.0 - (alpha + 1.0) / m as f64) * prev);
    }
    CoeffSeries {
        nu: 1,
        alpha,
        values,
    }
}

/// Lubich coefficients via the power-of-a-series recurrence
/// `k p_0 g_k = sum_{j=1}^{min(k,nu)} ((alpha+1) j - k) p_j g_{k-j}`.
pub fn lubich_coeffs(nu: u32, alpha: f64, k_max: usize) -> Result<CoeffSeries> {
    if nu == 1 {
        return Ok(grunwald_coeffs(alpha, k_max));
    }
    let p = GeneratingPolynomial::new(nu)?.coeffs_f64();
    let mut g = Vec::with_capacity(k_max + 1);
    g.push(p[0].powf(alpha));
    for k in 1..=k_max {
        let kf = k as f64;
        let acc: f64 = (1..=k.min(nu as usize))
            .map(|j| ((alpha + 1.0) * j as f64 - kf) * p[j] * g[k - j])
            .sum();
        g.push(acc / (kf * p[0]));
    }
    Ok(CoeffSeries {
        nu,
        alpha,
        values: g,
    })
}

/// Lubich coefficients by convolving the binomial series of each factor of
/// `p_0^alpha (1-z)^alpha prod_j (1 - r_j z)^alpha`.
///
/// The factor series are `r^m l^{1,alpha}_m`. Complex roots come in conjugate
/// pairs so the result is real; an imaginary part above [`ORACLE_IMAG_TOL`]
/// is reported as an error.
pub fn lubich_coeffs_oracle(nu: u32, alpha: f64, k_max: usize) -> Result<CoeffSeries> {
    let (values, _) = lubich_coeffs_oracle_raw(nu, alpha, k_max)?;
    let residue = values
        .iter()
        .enumerate()
        .map(|(k, v)| (k, v.im.abs()))
        .fold(
            (0, 0.0),
            |a, b| if b.1.is_nan() || b.1 > a.1 { b } else { a },
        );
    if residue.1 > ORACLE_IMAG_TOL {
        return Err(WsldError::ImaginaryResidue {
            index: residue.0,
            residue: residue.1,
        });
    }
    Ok(CoeffSeries {
        nu,
        alpha,
        values: values.iter().map(|v| v.re).collect(),
    })
}

/// Complex oracle values before the imaginary parts are discarded, together
/// with the largest imaginary magnitude.
pub fn lubich_coeffs_oracle_raw(
    nu: u32,
    alpha: f64,
    k_max: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let fac = root_factorization(nu)?;
    let base = grunwald_coeffs(alpha, k_max).values;
    let mut acc: Vec<Complex64> = base.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for &r in &fac.roots {
        let mut pow = Complex64::new(1.0, 0.0);
        let factor: Vec<Complex64> = base
            .iter()
            .map(|&l| {
                let term = pow * l;
                pow *= r;
                term
            })
            .collect();
        acc = convolve_truncated(&acc, &factor);
    }
    let scale = fac.leading_f64().powf(alpha);
    let values: Vec<Complex64> = acc.into_iter().map(|v| v * scale).collect();
    let max_im = max_of(values.iter().map(|v| v.im.abs()));
    Ok((values, max_im))
}

fn convolve_truncated(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    (0..a.len())
        .map(|k| (0..=k).map(|m| a[m] * b[k - m]).sum())
        .collect()
}
