//! Closed-form factorizations of the Lubich generating polynomials.
//!
//! For nu >= 2 the polynomial `P_nu(z) = sum_{i=1}^{nu} (1-z)^i / i` factors as
//! `p_0 (1-z) prod_j (1 - r_j z)`. The reciprocal roots `r_j` are computed here
//! from the quadratic formula (nu = 2, 3), the Shengjin cubic formulas (nu = 4)
//! and Ferrari's quartic reduction with a trigonometric Shengjin resolvent (nu = 5).

use num_complex::Complex64;
use num_rational::Ratio;

use super::GeneratingPolynomial;
use crate::error::{Result, WsldError};
use crate::util::max_of;

/// `P_nu(z) = leading * (1 - z) * prod_j (1 - roots[j] z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootFactorization {
    pub nu: u32,
    pub leading: Ratio<i64>,
    pub roots: Vec<Complex64>,
}

impl RootFactorization {
    pub fn leading_f64(&self) -> f64 {
        *self.leading.numer() as f64 / *self.leading.denom() as f64
    }

    /// Re-expand `leading * (1-z) * prod (1 - r z)` into monomial coefficients.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let mut poly = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        for &r in &self.roots {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            poly = next;
        }
        let lead = self.leading_f64();
        poly.into_iter().map(|c| c * lead).collect()
    }

    /// Largest absolute deviation between the re-expanded product and `P_nu`.
    pub fn reconstruction_error(&self) -> f64 {
        let exact = GeneratingPolynomial::new(self.nu)
            .expect("factorization built from a valid nu")
            .coeffs_f64();
        max_of(
            self.reconstruct()
                .iter()
                .zip(exact.iter())
                .map(|(c, &e)| (c - e).norm()),
        )
    }
}

pub fn root_factorization(nu: u32) -> Result<RootFactorization> {
    let roots = match nu {
        2 => vec![Complex64::new(1.0 / 3.0, 0.0)],
        3 => order3_roots(),
        4 => order4_roots(),
        5 => order5_roots(),
        _ => return Err(WsldError::InvalidNu(nu, "2..=5")),
    };
    let leading = GeneratingPolynomial::new(nu)?.coeffs[0];
    Ok(RootFactorization { nu, leading, roots })
}

// 11/6 - 7/6 z + 1/3 z^2 = 11/6 (1 - mu z)(1 - conj(mu) z), mu = 4 / (7 + sqrt(39) i)
fn order3_roots() -> Vec<Complex64> {
    let mu = Complex64::new(4.0, 0.0) / Complex64::new(7.0, 39f64.sqrt());
    vec![mu, mu.conj()]
}

// Cubic a z^3 + b z^2 + c z + d with one real and two complex roots (Delta > 0).
fn order4_roots() -> Vec<Complex64> {
    let (a, b, c, d): (f64, f64, f64, f64) = (-3.0 / 25.0, 13.0 / 25.0, -23.0 / 25.0, 1.0);
    let big_a = b * b - 3.0 * a * c;
    let big_b = b * c - 9.0 * a * d;
    let big_c = c * c - 3.0 * b * d;
    let delta = big_b * big_b - 4.0 * big_a * big_c;
    debug_assert!(delta > 0.0);
    let y1 = big_a * b + 1.5 * a * (-big_b - delta.sqrt());
    let y2 = big_a * b + 1.5 * a * (-big_b + delta.sqrt());
    let s = y1.cbrt() - (-y2).cbrt();
    let t = y1.cbrt() + (-y2).cbrt();
    let three_a = Complex64::new(3.0 * a, 0.0);

    let real = three_a / Complex64::new(-b - s, 0.0);
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mu = three_a / Complex64::new(-b + 0.5 * s, half_sqrt3 * t);
    let mu_bar = three_a / Complex64::new(-b + 0.5 * s, -half_sqrt3 * t);
    vec![real, mu, mu_bar]
}

// Quartic z^4 + b z^3 + c z^2 + d z + e. Ferrari splits it into the quadratics
// z^2 + (b +/- M)/2 z + (y +/- N/M), N = b y - d, using the root y of the
// resolvent cubic y^3 + bt y^2 + ct y + dt picked by the trigonometric Shengjin
// formula (three real roots, Delta < 0). That root is negative, M is imaginary
// and the two quadratics are complex conjugates of each other.
fn order5_roots() -> Vec<Complex64> {
    let (b, c, d, e): (f64, f64, f64, f64) =
        (-21.0 / 4.0, 137.0 / 12.0, -163.0 / 12.0, 137.0 / 12.0);
    let at: f64 = 1.0;
    let bt = -c / 2.0;
    let ct = (b * d - 4.0 * e) / 4.0;
    let dt = (4.0 * c * e - b * b * e - d * d) / 8.0;

    let big_a = bt * bt - 3.0 * at * ct;
    let big_b = bt * ct - 9.0 * at * dt;
    let t = (2.0 * big_a * bt - 3.0 * at * big_b) / (2.0 * big_a.powf(1.5));
    let theta = t.clamp(-1.0, 1.0).acos();
    let y = (-bt - 2.0 * big_a.sqrt() * (theta / 3.0).cos()) / (3.0 * at);

    let m = Complex64::new(8.0 * y + b * b - 4.0 * c, 0.0).sqrt();
    let n = b * y - d;

    let quad_roots = |lin: Complex64, cst: Complex64| -> [Complex64; 2] {
        // reciprocal roots 4 / (-lin +/- sqrt(lin^2 - 16 cst)) of z^2 + lin/2 z + cst
        let disc = (lin * lin - cst * 16.0).sqrt();
        let four = Complex64::new(4.0, 0.0);
        [four / (-lin + disc), four / (-lin - disc)]
    };
    let [nu5, mu5] = quad_roots(m + b, n / m + y);
    let [nu5_bar, mu5_bar] = quad_roots(-m + b, -n / m + y);
    vec![nu5, nu5_bar, mu5, mu5_bar]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order3_root_value() {
        let f = root_factorization(3).unwrap();
        let mu = f.roots[0];
        assert!((mu.re - 28.0 / 88.0).abs() < 1e-15);
        assert!((mu.im + 39f64.sqrt() * 4.0 / 88.0).abs() < 1e-15);
        assert!((mu.re - 0.3181818).abs() < 1e-7);
        assert!((mu.im + 0.2838636).abs() < 1e-7);
    }

    #[test]
    fn reconstruction_all_orders() {
        for nu in 2..=5 {
            let f = root_factorization(nu).unwrap();
            assert_eq!(f.roots.len() as u32, nu - 1);
            let err = f.reconstruction_error();
            assert!(err <= 1e-12, "nu={nu}: {err}");
            assert!(f.roots.iter().all(|r| r.re.is_finite() && r.im.is_finite()));
        }
    }

    #[test]
    fn order4_expansion() {
        let f = root_factorization(4).unwrap();
        let want = [25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25];
        for (c, w) in f.reconstruct().iter().zip(want) {
            assert!((c.re - w).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn complex_roots_in_conjugate_pairs() {
        for nu in 3..=5 {
            let f = root_factorization(nu).unwrap();
            for r in f.roots.iter().filter(|r| r.im.abs() > 1e-12) {
                assert!(f.roots.iter().any(|s| (s - r.conj()).norm() < 1e-12));
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(root_factorization(1).is_err());
        assert!(root_factorization(6).is_err());
    }
}
