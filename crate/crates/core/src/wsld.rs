//! Weighted and shifted Lubich difference (WSLD) operators.
//!
//! A shifted operator `A_p` applies the Lubich weights `l_k` to the samples
//! `u(x - (k - p) h)`. Shifting by `p != 0` drops the accuracy to first order;
//! weighted combinations of two, four or eight shifted operators cancel the
//! low-order error terms again and recover order 2, 3 or 4.
//!
//! On a finite grid `x_0..x_N` with zero extension outside, every operator is
//! the Toeplitz matrix `A[i][j] = phi_{i-j+m}` where `m` is the largest shift
//! magnitude. The right-sided operator is the transpose.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WsldError};
use crate::lubich::{lubich_coeffs, CoeffSeries};

/// The eight shifts `(p, q, r, s, pb, qb, rb, sb)` of a fourth-order scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftTuple {
    pub p: i32,
    pub q: i32,
    pub r: i32,
    pub s: i32,
    pub pb: i32,
    pub qb: i32,
    pub rb: i32,
    pub sb: i32,
}

impl ShiftTuple {
    /// `(1, -1, 1, 2, 1, -1, 1, 3)`, the tuple whose symmetric part is negative
    /// definite for nu = 3, 4 and every alpha in (1, 2).
    pub const STABLE: ShiftTuple = ShiftTuple {
        p: 1,
        q: -1,
        r: 1,
        s: 2,
        pb: 1,
        qb: -1,
        rb: 1,
        sb: 3,
    };

    pub fn new(v: [i32; 8]) -> Self {
        Self {
            p: v[0],
            q: v[1],
            r: v[2],
            s: v[3],
            pb: v[4],
            qb: v[5],
            rb: v[6],
            sb: v[7],
        }
    }

    pub fn as_array(&self) -> [i32; 8] {
        [
            self.p, self.q, self.r, self.s, self.pb, self.qb, self.rb, self.sb,
        ]
    }

    pub fn head(&self) -> [i32; 4] {
        [self.p, self.q, self.r, self.s]
    }

    pub fn tail(&self) -> [i32; 4] {
        [self.pb, self.qb, self.rb, self.sb]
    }

    /// `m = max |shift|`.
    pub fn reach(&self) -> usize {
        reach_of(&self.as_array())
    }
}

impl fmt::Display for ShiftTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.as_array().map(|s| s.to_string());
        write!(f, "{}", v.join(","))
    }
}

impl FromStr for ShiftTuple {
    type Err = WsldError;

    fn from_str(s: &str) -> Result<Self> {
        let v = parse_shift_list(s)?;
        let arr: [i32; 8] = v.try_into().map_err(|v: Vec<i32>| {
            WsldError::InvalidShifts(format!("expected 8 shifts, got {}", v.len()))
        })?;
        Ok(Self::new(arr))
    }
}

/// Parse a comma-separated list of integer shifts.
pub fn parse_shift_list(s: &str) -> Result<Vec<i32>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i32>()
                .map_err(|_| WsldError::InvalidShifts(format!("not an integer: {t:?}")))
        })
        .collect()
}

fn reach_of(shifts: &[i32]) -> usize {
    shifts
        .iter()
        .map(|s| s.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

/// Second-order weights `(q/(q-p), p/(p-q))`.
pub fn weights2(p: i32, q: i32) -> Result<(f64, f64)> {
    if p == q {
        return Err(WsldError::InvalidShifts(format!("p = q = {p}")));
    }
    let (p, q) = (p as f64, q as f64);
    Ok((q / (q - p), p / (p - q)))
}

/// Third-order weights `(rs/(rs-pq), pq/(pq-rs))`.
pub fn weights3(p: i32, q: i32, r: i32, s: i32) -> Result<(f64, f64)> {
    let pq = (p * q) as f64;
    let rs = (r * s) as f64;
    if pq == rs {
        return Err(WsldError::InvalidShifts(format!(
            "pq = rs = {pq} for ({p},{q},{r},{s})"
        )));
    }
    Ok((rs / (rs - pq), pq / (pq - rs)))
}

/// The constant `c^nu_{p,q,r,s}` whose difference drives the fourth-order weights.
///
/// For nu = 4 it is alpha-independent; for nu = 3 it is affine in alpha.
pub fn c_constant(nu: u32, alpha: f64, quad: [i32; 4]) -> Result<f64> {
    let [p, q, r, s] = quad.map(|v| v as f64);
    let denom = r * s - p * q;
    if denom == 0.0 {
        return Err(WsldError::InvalidShifts(format!("pq = rs in {quad:?}")));
    }
    let prod = p * q * r * s * (r + s - p - q);
    match nu {
        3 => Ok((2.0 * prod + 3.0 * alpha * (p * q - r * s)) / (12.0 * denom)),
        4 => Ok(prod / (6.0 * denom)),
        _ => Err(WsldError::InvalidNu(nu, "3 or 4")),
    }
}

/// Fourth-order weights `(cb/(cb-c), c/(c-cb))`.
pub fn weights4(nu: u32, alpha: f64, shifts: &ShiftTuple) -> Result<(f64, f64)> {
    let c = c_constant(nu, alpha, shifts.head())?;
    let cb = c_constant(nu, alpha, shifts.tail())?;
    // c and cb are rational in alpha; a gap at round-off level means they coincide
    if (c - cb).abs() <= 1e-12 * c.abs().max(cb.abs()) {
        return Err(WsldError::InvalidShifts(format!(
            "c^{nu} equal ({c}) for both quadruples of {shifts}"
        )));
    }
    Ok((cb / (cb - c), c / (c - cb)))
}

/// Every weight of a scheme, present where the level applies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Weights {
    pub w_p: Option<f64>,
    pub w_q: Option<f64>,
    pub w_r: Option<f64>,
    pub w_s: Option<f64>,
    pub w_pq: Option<f64>,
    pub w_rs: Option<f64>,
    pub w_pb: Option<f64>,
    pub w_qb: Option<f64>,
    pub w_rb: Option<f64>,
    pub w_sb: Option<f64>,
    pub w_pbqb: Option<f64>,
    pub w_rbsb: Option<f64>,
    pub w_pqrs: Option<f64>,
    pub w_pbqbrbsb: Option<f64>,
}

/// Which weighting level a scheme uses, with its shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stencil {
    Single(i32),
    Pair(i32, i32),
    Quad([i32; 4]),
    Full(ShiftTuple),
}

impl Stencil {
    pub fn shifts(&self) -> Vec<i32> {
        match *self {
            Stencil::Single(p) => vec![p],
            Stencil::Pair(p, q) => vec![p, q],
            Stencil::Quad(v) => v.to_vec(),
            Stencil::Full(t) => t.as_array().to_vec(),
        }
    }

    /// Build from 1, 2, 4 or 8 shifts.
    pub fn from_shifts(v: &[i32]) -> Result<Self> {
        match v.len() {
            1 => Ok(Stencil::Single(v[0])),
            2 => Ok(Stencil::Pair(v[0], v[1])),
            4 => Ok(Stencil::Quad([v[0], v[1], v[2], v[3]])),
            8 => Ok(Stencil::Full(ShiftTuple::new(v.try_into().unwrap()))),
            n => Err(WsldError::InvalidShifts(format!(
                "expected 1, 2, 4 or 8 shifts, got {n}"
            ))),
        }
    }
}

/// A (possibly weighted) shifted Lubich operator for one `(nu, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WsldScheme {
    pub nu: u32,
    pub alpha: f64,
    pub stencil: Stencil,
    pub weights: Weights,
    /// Flattened `(weight, shift)` pairs: `phi_k = sum w l_{k + shift - m}`.
    terms: Vec<(f64, i32)>,
}

impl WsldScheme {
    /// A single shifted operator `A_p`; first order unless `p = 0`.
    pub fn single(nu: u32, alpha: f64, p: i32) -> Result<Self> {
        if !(1..=5).contains(&nu) {
            return Err(WsldError::InvalidNu(nu, "1..=5"));
        }
        Ok(Self {
            nu,
            alpha,
            stencil: Stencil::Single(p),
            weights: Weights::default(),
            terms: vec![(1.0, p)],
        })
    }

    pub fn second_order(nu: u32, alpha: f64, p: i32, q: i32) -> Result<Self> {
        check_weighted_nu(nu)?;
        let (w_p, w_q) = weights2(p, q)?;
        Ok(Self {
            nu,
            alpha,
            stencil: Stencil::Pair(p, q),
            weights: Weights {
                w_p: Some(w_p),
                w_q: Some(w_q),
                ..Weights::default()
            },
            terms: vec![(w_p, p), (w_q, q)],
        })
    }

    pub fn third_order(nu: u32, alpha: f64, quad: [i32; 4]) -> Result<Self> {
        check_weighted_nu(nu)?;
        let [p, q, r, s] = quad;
        let (w_p, w_q) = weights2(p, q)?;
        let (w_r, w_s) = weights2(r, s)?;
        let (w_pq, w_rs) = weights3(p, q, r, s)?;
        Ok(Self {
            nu,
            alpha,
            stencil: Stencil::Quad(quad),
            weights: Weights {
                w_p: Some(w_p),
                w_q: Some(w_q),
                w_r: Some(w_r),
                w_s: Some(w_s),
                w_pq: Some(w_pq),
                w_rs: Some(w_rs),
                ..Weights::default()
            },
            terms: vec![
                (w_pq * w_p, p),
                (w_pq * w_q, q),
                (w_rs * w_r, r),
                (w_rs * w_s, s),
            ],
        })
    }

    pub fn fourth_order(nu: u32, alpha: f64, shifts: ShiftTuple) -> Result<Self> {
        check_weighted_nu(nu)?;
        let head = Self::third_order(nu, alpha, shifts.head())?;
        let tail = Self::third_order(nu, alpha, shifts.tail())?;
        let (w_pqrs, w_bar) = weights4(nu, alpha, &shifts)?;
        let (h, t) = (head.weights, tail.weights);
        let terms = head
            .terms
            .iter()
            .map(|&(w, s)| (w_pqrs * w, s))
            .chain(tail.terms.iter().map(|&(w, s)| (w_bar * w, s)))
            .collect();
        Ok(Self {
            nu,
            alpha,
            stencil: Stencil::Full(shifts),
            weights: Weights {
                w_pb: t.w_p,
                w_qb: t.w_q,
                w_rb: t.w_r,
                w_sb: t.w_s,
                w_pbqb: t.w_pq,
                w_rbsb: t.w_rs,
                w_pqrs: Some(w_pqrs),
                w_pbqbrbsb: Some(w_bar),
                ..h
            },
            terms,
        })
    }

    /// Fourth order with [`ShiftTuple::STABLE`].
    pub fn stable_fourth_order(nu: u32, alpha: f64) -> Result<Self> {
        Self::fourth_order(nu, alpha, ShiftTuple::STABLE)
    }

    /// Build the scheme whose level matches the number of shifts given.
    pub fn from_shifts(nu: u32, alpha: f64, shifts: &[i32]) -> Result<Self> {
        match Stencil::from_shifts(shifts)? {
            Stencil::Single(p) => Self::single(nu, alpha, p),
            Stencil::Pair(p, q) => Self::second_order(nu, alpha, p, q),
            Stencil::Quad(v) => Self::third_order(nu, alpha, v),
            Stencil::Full(t) => Self::fourth_order(nu, alpha, t),
        }
    }

    /// Nominal consistency order on smooth functions.
    pub fn order(&self) -> u32 {
        match self.stencil {
            Stencil::Single(0) => self.nu,
            Stencil::Single(_) => 1,
            Stencil::Pair(..) => 2,
            Stencil::Quad(_) => 3,
            Stencil::Full(_) => 4,
        }
    }

    pub fn reach(&self) -> usize {
        reach_of(&self.stencil.shifts())
    }

    pub fn terms(&self) -> &[(f64, i32)] {
        &self.terms
    }

    /// Whether the shifts are the tuple with a proven negative-definite symbol.
    pub fn stability_verified(&self) -> bool {
        matches!(self.stencil, Stencil::Full(t) if t == ShiftTuple::STABLE)
            && matches!(self.nu, 3 | 4)
            && self.alpha > 1.0
            && self.alpha < 2.0
    }

    /// `phi_0..=phi_K` from a precomputed coefficient series.
    pub fn phi_with(&self, series: &CoeffSeries, k_max: usize) -> Result<Vec<f64>> {
        if series.values.len() < k_max + 1 {
            return Err(WsldError::SeriesTooShort {
                need: k_max + 1,
                have: series.values.len(),
            });
        }
        let m = self.reach() as i64;
        Ok((0..=k_max as i64)
            .map(|k| {
                self.terms
                    .iter()
                    .map(|&(w, s)| w * series.at(k + s as i64 - m))
                    .sum()
            })
            .collect())
    }

    pub fn phi(&self, k_max: usize) -> Result<Vec<f64>> {
        let series = lubich_coeffs(self.nu, self.alpha, k_max)?;
        self.phi_with(&series, k_max)
    }
}

fn check_weighted_nu(nu: u32) -> Result<()> {
    if matches!(nu, 3 | 4) {
        Ok(())
    } else {
        Err(WsldError::InvalidNu(nu, "3 or 4 for weighted schemes"))
    }
}

/// The eight-term combined coefficients written out level by level:
/// `phi_k = w_pqrs (w_pq (w_p l_{k+p-m} + w_q l_{k+q-m}) + w_rs (...)) + w_bar (...)`.
pub fn phi_eight_term(
    nu: u32,
    alpha: f64,
    shifts: &ShiftTuple,
    series: &CoeffSeries,
    k_max: usize,
) -> Result<Vec<f64>> {
    let (w_p, w_q) = weights2(shifts.p, shifts.q)?;
    let (w_r, w_s) = weights2(shifts.r, shifts.s)?;
    let (w_pq, w_rs) = weights3(shifts.p, shifts.q, shifts.r, shifts.s)?;
    let (w_pb, w_qb) = weights2(shifts.pb, shifts.qb)?;
    let (w_rb, w_sb) = weights2(shifts.rb, shifts.sb)?;
    let (w_pbqb, w_rbsb) = weights3(shifts.pb, shifts.qb, shifts.rb, shifts.sb)?;
    let (w_head, w_tail) = weights4(nu, alpha, shifts)?;
    let m = shifts.reach() as i64;
    let l = |k: i64, s: i32| series.at(k + s as i64 - m);
    Ok((0..=k_max as i64)
        .map(|k| {
            w_head * w_pq * w_p * l(k, shifts.p)
                + w_head * w_pq * w_q * l(k, shifts.q)
                + w_head * w_rs * w_r * l(k, shifts.r)
                + w_head * w_rs * w_s * l(k, shifts.s)
                + w_tail * w_pbqb * w_pb * l(k, shifts.pb)
                + w_tail * w_pbqb * w_qb * l(k, shifts.qb)
                + w_tail * w_rbsb * w_rb * l(k, shifts.rb)
                + w_tail * w_rbsb * w_sb * l(k, shifts.sb)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = WsldError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(WsldError::InvalidInput(format!("unknown side {s:?}"))),
        }
    }
}

/// Dense `(N_x + 1) x (N_x + 1)` realization of an operator on a uniform grid.
///
/// Entries are unscaled; multiply by `h^{-alpha}` (see [`OperatorMatrix::scaled`])
/// to obtain the derivative approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub side: Side,
    pub entries: DMatrix<f64>,
    pub scaled: bool,
}

impl OperatorMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn scaled(&self, alpha: f64, h: f64) -> OperatorMatrix {
        OperatorMatrix {
            side: self.side,
            entries: &self.entries * h.powf(-alpha),
            scaled: true,
        }
    }

    pub fn is_toeplitz(&self, tol: f64) -> bool {
        let n = self.n();
        (0..n - 1).all(|i| {
            (0..n - 1).all(|j| (self.entries[(i, j)] - self.entries[(i + 1, j + 1)]).abs() <= tol)
        })
    }

    /// `(A + A^T) / 2`.
    pub fn symmetric_part(&self) -> DMatrix<f64> {
        (&self.entries + self.entries.transpose()) * 0.5
    }
}

fn check_grid(scheme: &WsldScheme, n_x: usize) -> Result<()> {
    let m = scheme.reach();
    if n_x < 2 || n_x <= m {
        return Err(WsldError::GridTooSmall { nx: n_x, m });
    }
    Ok(())
}

/// Toeplitz matrix with `A[i][j] = phi_{i-j+m}` (zero when the index is negative).
pub fn assemble_left(scheme: &WsldScheme, n_x: usize) -> Result<OperatorMatrix> {
    check_grid(scheme, n_x)?;
    let m = scheme.reach();
    let phi = scheme.phi(n_x + m)?;
    Ok(OperatorMatrix {
        side: Side::Left,
        entries: toeplitz_from_phi(&phi, n_x, m),
        scaled: false,
    })
}

/// Transpose of [`assemble_left`].
pub fn assemble_right(scheme: &WsldScheme, n_x: usize) -> Result<OperatorMatrix> {
    let left = assemble_left(scheme, n_x)?;
    Ok(OperatorMatrix {
        side: Side::Right,
        entries: left.entries.transpose(),
        scaled: false,
    })
}

pub fn assemble(scheme: &WsldScheme, n_x: usize, side: Side) -> Result<OperatorMatrix> {
    match side {
        Side::Left => assemble_left(scheme, n_x),
        Side::Right => assemble_right(scheme, n_x),
    }
}

fn toeplitz_from_phi(phi: &[f64], n_x: usize, m: usize) -> DMatrix<f64> {
    let n = n_x + 1;
    DMatrix::from_fn(n, n, |i, j| {
        let k = i as i64 - j as i64 + m as i64;
        if k < 0 {
            0.0
        } else {
            phi[k as usize]
        }
    })
}

/// Left matrix built the structural way: shifted single-operator matrices
/// `A_p[i][j] = l_{i-j+p}` combined level by level with the scheme's weights.
pub fn assemble_left_hierarchical(scheme: &WsldScheme, n_x: usize) -> Result<DMatrix<f64>> {
    check_grid(scheme, n_x)?;
    let m = scheme.reach();
    let series = lubich_coeffs(scheme.nu, scheme.alpha, n_x + 2 * m)?;
    let single = |p: i32| {
        DMatrix::from_fn(n_x + 1, n_x + 1, |i, j| {
            series.at(i as i64 - j as i64 + p as i64)
        })
    };
    let pair = |p: i32, q: i32| -> Result<DMatrix<f64>> {
        let (w_p, w_q) = weights2(p, q)?;
        Ok(single(p) * w_p + single(q) * w_q)
    };
    let quad = |v: [i32; 4]| -> Result<DMatrix<f64>> {
        let (w_pq, w_rs) = weights3(v[0], v[1], v[2], v[3])?;
        Ok(pair(v[0], v[1])? * w_pq + pair(v[2], v[3])? * w_rs)
    };
    match scheme.stencil {
        Stencil::Single(p) => Ok(single(p)),
        Stencil::Pair(p, q) => pair(p, q),
        Stencil::Quad(v) => quad(v),
        Stencil::Full(t) => {
            let (w_head, w_tail) = weights4(scheme.nu, scheme.alpha, &t)?;
            Ok(quad(t.head())? * w_head + quad(t.tail())? * w_tail)
        }
    }
}

/// Direct O(N^2) convolution of grid values with the combined weights, scaled
/// by `h^{-alpha}`. Samples outside `[0, N]` are taken as zero.
pub fn apply_operator(u: &[f64], scheme: &WsldScheme, side: Side, h: f64) -> Result<Vec<f64>> {
    if u.len() < 3 {
        return Err(WsldError::LengthMismatch {
            expected: 3,
            got: u.len(),
        });
    }
    let n_x = u.len() - 1;
    let m = scheme.reach();
    let phi = scheme.phi(n_x + m)?;
    let scale = h.powf(-scheme.alpha);
    let (n, m) = (n_x as i64, m as i64);
    // row i couples to column j through phi_{i-j+m} (left) or phi_{j-i+m} (right)
    let out = (0..=n)
        .map(|i| {
            let (lo, hi, sign) = match side {
                Side::Left => (0, (i + m).min(n), 1),
                Side::Right => ((i - m).max(0), n, -1),
            };
            let sum: f64 = (lo..=hi)
                .map(|j| phi[(sign * (i - j) + m) as usize] * u[j as usize])
                .sum();
            sum * scale
        })
        .collect();
    Ok(out)
}
