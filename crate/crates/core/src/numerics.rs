//! Complex scalar helpers, polynomial root finding and the small dense
//! linear algebra the rest of the crate is built on.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64 as C64;

use thiserror::Error;

/// Default relative floor below which leading coefficients are stripped.
pub const DEFAULT_COEFF_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("polynomial is a nonzero constant")]
    DegreeZero,
    #[error("all polynomial coefficients vanish")]
    ZeroPolynomial,
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Largest modulus in a slice, 0 for an empty slice.
pub fn max_abs(values: &[C64]) -> f64 {
    values.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Principal square root: `Re(w) >= 0`, and `Im(w) >= 0` when `Re(w) == 0`.
///
/// The cut sits on the negative real axis; both signed zeros of the
/// imaginary part map to the upper half plane there.
pub fn principal_sqrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let modulus = z.re.hypot(z.im);
    let t = ((modulus + z.re.abs()) * 0.5).sqrt();
    if z.re >= 0.0 {
        C64::new(t, z.im / (2.0 * t))
    } else {
        let im = if z.im >= 0.0 { t } else { -t };
        C64::new(z.im.abs() / (2.0 * t), im)
    }
}

/// Roots of `z^2 + p z + q = 0`.
///
/// The root of larger magnitude is computed first and the other one is
/// recovered from the product, so neither suffers cancellation.
pub fn solve_quadratic(p: C64, q: C64) -> [C64; 2] {
    let disc = principal_sqrt(p * p - 4.0 * q);
    // pick the sign that adds |p| and |disc| constructively
    let sum = if (p.conj() * disc).re >= 0.0 { p + disc } else { p - disc };
    let big = -sum * 0.5;
    if big.norm() == 0.0 {
        return [C64::new(0.0, 0.0); 2];
    }
    [big, q / big]
}

/// Univariate polynomial with complex coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        Poly::new(vec![c])
    }

    /// `c0 + c1 * z`
    pub fn linear(c0: C64, c1: C64) -> Self {
        Poly::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Nominal degree (length - 1), ignoring vanishing leading terms.
    pub fn nominal_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `sum |c_k| |z|^k`, the natural rounding scale of an evaluation at `z`.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn max_coeff(&self) -> f64 {
        max_abs(&self.coeffs)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// True when every coefficient is at most `tol` in modulus.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.norm() <= tol)
    }

    /// Drops leading coefficients below `floor * max|c|`.
    pub fn trimmed(&self, floor: f64) -> Poly {
        let cutoff = floor * self.max_coeff();
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= cutoff) {
            coeffs.pop();
        }
        Poly::new(coeffs)
    }

    /// Synthetic division by `(z - root)`; returns quotient and remainder.
    pub fn deflate(&self, root: C64) -> (Poly, C64) {
        let n = self.coeffs.len();
        if n <= 1 {
            return (Poly::new(vec![C64::new(0.0, 0.0)]), self.coeffs.first().copied().unwrap_or_default());
        }
        let mut quotient = vec![C64::new(0.0, 0.0); n - 1];
        let mut carry = C64::new(0.0, 0.0);
        for k in (0..n).rev() {
            let value = self.coeffs[k] + carry * root;
            if k == 0 {
                return (Poly::new(quotient), value);
            }
            quotient[k - 1] = value;
            carry = value;
        }
        unreachable!()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("({:.6e}{:+.6e}i)z^{}", c.re, c.im, k))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + rhs.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Poly::new(vec![]);
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Mul<C64> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: C64) -> Poly {
        self.scale(rhs)
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);

/// All complex roots (with multiplicity) of `poly`, using the default
/// leading-coefficient floor.
pub fn solve_poly(poly: &Poly) -> Result<Vec<C64>, NumericsError> {
    solve_poly_with_floor(poly, DEFAULT_COEFF_FLOOR)
}

/// Aberth–Ehrlich simultaneous iteration followed by Newton polishing of
/// every root against the untrimmed input.
pub fn solve_poly_with_floor(poly: &Poly, floor: f64) -> Result<Vec<C64>, NumericsError> {
    if poly.max_coeff() == 0.0 {
        return Err(NumericsError::ZeroPolynomial);
    }
    let trimmed = poly.trimmed(floor);
    let coeffs = trimmed.coeffs();
    if coeffs.len() <= 1 {
        return Err(NumericsError::DegreeZero);
    }
    let zeros_at_origin = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = Poly::new(coeffs[zeros_at_origin..].to_vec());
    let mut roots = vec![C64::new(0.0, 0.0); zeros_at_origin];
    let found = match reduced.nominal_degree() {
        0 => Vec::new(),
        1 => vec![-reduced.coeffs[0] / reduced.coeffs[1]],
        2 => {
            let lead = reduced.coeffs[2];
            solve_quadratic(reduced.coeffs[1] / lead, reduced.coeffs[0] / lead).to_vec()
        }
        _ => aberth(&reduced),
    };
    roots.extend(found.into_iter().map(|r| polish_root(&trimmed, r)));
    Ok(roots)
}

fn aberth(poly: &Poly) -> Vec<C64> {
    let n = poly.nominal_degree();
    let lead = poly.coeffs[n];
    let monic = poly.scale(lead.inv());
    let radius = {
        let r = (monic.coeffs[0].norm()).powf(1.0 / n as f64);
        if r.is_finite() && r > 0.0 {
            r
        } else {
            1.0
        }
    };
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64::from_polar(radius, theta)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = monic.eval_with_derivative(z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if is_finite(step) {
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if max_step <= 4.0 * f64::EPSILON {
            break;
        }
    }
    z
}

/// Newton polishing; keeps the iterate with the smallest scaled residual.
pub fn polish_root(poly: &Poly, start: C64) -> C64 {
    let mut best = start;
    let mut best_res = scaled_residual(poly, start);
    let mut z = start;
    for _ in 0..30 {
        if best_res <= 1e-15 {
            break;
        }
        let (p, dp) = poly.eval_with_derivative(z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !is_finite(step) {
            break;
        }
        z -= step;
        let res = scaled_residual(poly, z);
        if res < best_res {
            best_res = res;
            best = z;
        }
        if step.norm() <= f64::EPSILON * (1.0 + z.norm()) {
            break;
        }
    }
    best
}

/// `|p(z)| / sum |c_k| |z|^k`
pub fn scaled_residual(poly: &Poly, z: C64) -> f64 {
    let scale = poly.eval_scale(z);
    if scale == 0.0 {
        0.0
    } else {
        poly.eval(z).norm() / scale
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat { nrows, ncols, data: vec![C64::new(0.0, 0.0); nrows * ncols] }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        CMat { nrows, ncols, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        CMat::from_rows(&rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.nrows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `M M^H`
    pub fn gram(&self) -> CMat {
        let mut g = CMat::zeros(self.nrows, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.nrows {
                let v: C64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b.conj()).sum();
                g.set(i, j, v);
            }
        }
        g
    }

    pub fn conj_transpose(&self) -> CMat {
        let mut t = CMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t.set(j, i, self.get(i, j).conj());
            }
        }
        t
    }
}

fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Singular values of a small complex matrix, in descending order.
///
/// One-sided Jacobi on the rows, so the smallest singular value is
/// resolved to roughly machine precision relative to the largest.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut rows = m.rows();
    let n = rows.len();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norm_sq(&rows[p]);
                let beta = norm_sq(&rows[q]);
                let gamma = hdot(&rows[p], &rows[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (rp, rq) = (rows[p].clone(), rows[q].clone());
                for k in 0..rp.len() {
                    let qk = phase * rq[k];
                    rows[p][k] = rp[k] * c - qk * s;
                    rows[q][k] = rp[k] * s + qk * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = rows.iter().map(|r| norm_sq(r).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// `sigma_min / sigma_max` over the first `min(rows, cols)` values; 0 for
/// the zero matrix.
pub fn rank_ratio(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let k = m.nrows().min(m.ncols());
    match (sv.first(), sv.get(k.saturating_sub(1))) {
        (Some(&s1), Some(&sk)) if s1 > 0.0 => sk / s1,
        _ => 0.0,
    }
}

/// Solves `A x = b` for square `A` by Gaussian elimination with partial
/// pivoting. `None` when a pivot vanishes relative to the matrix scale.
pub fn solve_linear(a: &CMat, b: &[C64]) -> Option<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let scale = a.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return None;
    }
    let mut m = a.rows();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).unwrap())
            .unwrap();
        if m[pivot][col].norm() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let s: C64 = ((row + 1)..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

/// Minimum-norm solution of the underdetermined system `J x = r`
/// (`x = J^H (J J^H)^{-1} r`).
pub fn min_norm_step(j: &CMat, r: &[C64]) -> Option<Vec<C64>> {
    let y = solve_linear(&j.gram(), r)?;
    Some(j.conj_transpose().mul_vec(&y))
}

/// Orthonormal basis (as columns, returned as vectors) of `{v : M v = 0}`.
///
/// `rel_tol` decides the numerical rank of `M` relative to its largest row.
pub fn null_space(m: &CMat, rel_tol: f64) -> Vec<Vec<C64>> {
    let n = m.ncols();
    let scale = (0..m.nrows()).fold(0.0f64, |s, i| s.max(norm_sq(m.row(i)).sqrt()));
    // M v = 0  <=>  v is Hermitian-orthogonal to conj(row)
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for i in 0..m.nrows() {
        let mut v: Vec<C64> = m.row(i).iter().map(|z| z.conj()).collect();
        for u in &basis {
            let h = hdot(&v, u);
            for k in 0..n {
                v[k] -= h * u[k];
            }
        }
        let nv = norm_sq(&v).sqrt();
        if nv > rel_tol * scale.max(f64::MIN_POSITIVE) {
            basis.push(v.iter().map(|z| z / nv).collect());
        }
    }
    let rank = basis.len();
    let mut null: Vec<Vec<C64>> = Vec::new();
    while rank + null.len() < n {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..n {
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[e] = C64::new(1.0, 0.0);
            for u in basis.iter().chain(null.iter()) {
                let h = hdot(&v, u);
                for k in 0..n {
                    v[k] -= h * u[k];
                }
            }
            let nv = norm_sq(&v).sqrt();
            if best.as_ref().is_none_or(|(b, _)| nv > *b) {
                best = Some((nv, v));
            }
        }
        let (nv, v) = best.expect("n > 0");
        null.push(v.iter().map(|z| z / nv).collect());
    }
    null
}

/// Minimiser of `|A x - rhs|^2` for a real 2x2 `A`.
///
/// Regular systems are solved directly; when `A` is singular within
/// `1e-12` (relative) the minimum-norm least-squares solution is returned.
pub fn lstsq_2x2(a: [[f64; 2]; 2], rhs: [f64; 2]) -> [f64; 2] {
    let norm = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm == 0.0 {
        return [0.0, 0.0];
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() > 1e-12 * norm * norm {
        return [
            (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det,
            (a[0][0] * rhs[1] - rhs[0] * a[1][0]) / det,
        ];
    }
    // pseudo-inverse through the eigen-decomposition of A^T A
    let ata = [
        [a[0][0] * a[0][0] + a[1][0] * a[1][0], a[0][0] * a[0][1] + a[1][0] * a[1][1]],
        [a[0][1] * a[0][0] + a[1][1] * a[1][0], a[0][1] * a[0][1] + a[1][1] * a[1][1]],
    ];
    let atb = [a[0][0] * rhs[0] + a[1][0] * rhs[1], a[0][1] * rhs[0] + a[1][1] * rhs[1]];
    let (evals, evecs) = sym_eigen_2x2(ata);
    let top = evals[0].max(evals[1]);
    let mut x = [0.0, 0.0];
    for k in 0..2 {
        if evals[k] > 1e-24 * top.max(f64::MIN_POSITIVE) && evals[k] > 1e-12 * top {
            let v = evecs[k];
            let coef = (v[0] * atb[0] + v[1] * atb[1]) / evals[k];
            x[0] += coef * v[0];
            x[1] += coef * v[1];
        }
    }
    x
}

/// Eigenvalues and unit eigenvectors of a symmetric 2x2 matrix.
pub fn sym_eigen_2x2(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    if b == 0.0 {
        return ([a, d], [[1.0, 0.0], [0.0, 1.0]]);
    }
    let half_tr = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(b);
    let l1 = half_tr + r;
    let l2 = half_tr - r;
    // eigenvector for l1: (b, l1 - a) or (l1 - d, b), whichever is larger
    let v1 = if (l1 - a).abs() > (l1 - d).abs() { [b, l1 - a] } else { [l1 - d, b] };
    let n1 = v1[0].hypot(v1[1]);
    let v1 = [v1[0] / n1, v1[1] / n1];
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}
