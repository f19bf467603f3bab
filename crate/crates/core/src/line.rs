//! Complex lines `x = a + t b` on the level set, with `a_{k+3} = lambda a_k`
//! and `b_{k+3} = mu b_k`.
//!
//! The `t^2` equations force `b_k^2` to be the three radicands below (their
//! sum vanishes identically). The `t` equations force `u = (a_k b_k)` to be
//! parallel to `w`, the cross product of `(1,1,1)` with
//! `(c_k + lambda mu c_{k+3})`. The constant terms give two expressions for
//! `s^2` in `a_k = s w_k / b_k`; equating them clears to the polynomial
//! returned by [`compatibility_polynomial`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{c64, principal_sqrt, scaled_residual, solve_poly, solve_quadratic, Poly, C64};
use crate::quadrics::{evaluate, polarize, Point6, QuadricParams};
use crate::tolerances::Tolerances;

/// Sign triples for `(b1, b2, b3)` modulo a global sign.
pub const BRANCHES: [[i8; 3]; 4] = [[1, 1, 1], [1, 1, -1], [1, -1, 1], [-1, 1, 1]];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineError {
    #[error("d2 = 0: the lambda equation is undefined")]
    ZeroD2,
    #[error("no mu root accepted on any branch")]
    NoRoot,
    #[error("b{0} vanishes while w{0} does not")]
    ZeroB(usize),
    #[error("b{0} and w{0} both vanish")]
    DegenerateRadicand(usize),
    #[error("s^2 determinations disagree (relative gap {0:.3e})")]
    Inconsistent(f64),
    #[error("no line found; pipeline emptied at stage {:?}", .0.emptied_at)]
    NoLineFound(StageReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRoute {
    /// Radical-free polynomial from equating the two `s^2` expressions.
    Compatibility,
    /// The four-term radical equation, cleared by squaring twice.
    Radical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexLine {
    #[serde(with = "crate::cx::array")]
    pub a: [C64; 3],
    #[serde(with = "crate::cx::array")]
    pub b: [C64; 3],
    #[serde(with = "crate::cx")]
    pub lambda: C64,
    #[serde(with = "crate::cx")]
    pub mu: C64,
    pub branch: [i8; 3],
    #[serde(with = "crate::cx")]
    pub scale_s: C64,
}

impl ComplexLine {
    /// `(a1, a2, a3, lambda a1, lambda a2, lambda a3)`
    pub fn full_a(&self) -> Point6 {
        let [a1, a2, a3] = self.a;
        let l = self.lambda;
        Point6([a1, a2, a3, l * a1, l * a2, l * a3])
    }

    /// `(b1, b2, b3, mu b1, mu b2, mu b3)`
    pub fn full_b(&self) -> Point6 {
        let [b1, b2, b3] = self.b;
        let m = self.mu;
        Point6([b1, b2, b3, m * b1, m * b2, m * b3])
    }

    pub fn point(&self, t: C64) -> Point6 {
        let (a, b) = (self.full_a(), self.full_b());
        Point6(std::array::from_fn(|i| a.0[i] + t * b.0[i]))
    }

    /// `max(1, |c|, |d|, |a|^2, |b|^2)`, the scale for membership residuals.
    pub fn residual_scale(&self, params: &QuadricParams) -> f64 {
        params
            .scale()
            .max(self.full_a().max_abs().powi(2))
            .max(self.full_b().max_abs().powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuCandidate {
    #[serde(with = "crate::cx")]
    pub mu: C64,
    pub branch: [i8; 3],
    pub route: MuRoute,
    /// Scaled residual on the defining equation of `route`.
    pub equation_residual: f64,
    /// Relative residual of the four-term radical equation on `branch`.
    pub radical_residual: f64,
}

/// Roots of `lambda^2 - (d1/d2) lambda + 1 = 0`.
pub fn solve_lambda(d: [f64; 3]) -> Result<[C64; 2], LineError> {
    if d[1] == 0.0 {
        return Err(LineError::ZeroD2);
    }
    Ok(solve_quadratic(c64(-d[0] / d[1], 0.0), c64(1.0, 0.0)))
}

/// The three radicands `c_{k+1} - c_{k+2} + mu^2 (c_{k+4} - c_{k+5})` as
/// polynomials in `mu` (indices cyclic in 1..3).
pub fn radicand_polys(params: &QuadricParams) -> [Poly; 3] {
    let c = &params.c;
    std::array::from_fn(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        Poly::from_real(&[c[i] - c[j], 0.0, c[i + 3] - c[j + 3]])
    })
}

pub fn radicands(params: &QuadricParams, mu: C64) -> [C64; 3] {
    let c = &params.c;
    let m2 = mu * mu;
    std::array::from_fn(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        m2 * (c[i + 3] - c[j + 3]) + (c[i] - c[j])
    })
}

/// `b_k = branch_k * sqrt(radicand_k(mu))` with the principal root.
pub fn b_from_mu(params: &QuadricParams, mu: C64, branch: [i8; 3]) -> [C64; 3] {
    let r = radicands(params, mu);
    std::array::from_fn(|k| principal_sqrt(r[k]) * f64::from(branch[k]))
}

/// `w_k = q_{k+1} - q_{k+2}` with `q_k = c_k + lambda mu c_{k+3}`, as a
/// polynomial in `mu`.
pub fn w_polys(params: &QuadricParams, lambda: C64) -> [Poly; 3] {
    let c = &params.c;
    std::array::from_fn(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        Poly::linear(c64(c[i] - c[j], 0.0), lambda * (c[i + 3] - c[j + 3]))
    })
}

fn w_values(params: &QuadricParams, lambda: C64, mu: C64) -> [C64; 3] {
    let c = &params.c;
    let lm = lambda * mu;
    std::array::from_fn(|k| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        lm * (c[i + 3] - c[j + 3]) + (c[i] - c[j])
    })
}

/// `r_k = c_k + lambda^2 c_{k+3}`
fn r_values(params: &QuadricParams, lambda: C64) -> [C64; 3] {
    let l2 = lambda * lambda;
    std::array::from_fn(|k| l2 * params.c[k + 3] + params.c[k])
}

/// `e_k = d3 - (d2/lambda) r_k`
fn e_values(params: &QuadricParams, lambda: C64) -> [C64; 3] {
    let g = params.d[1] / lambda;
    r_values(params, lambda).map(|r| c64(params.d[2], 0.0) - g * r)
}

/// The four terms of the radical mu-equation, in display order, with the
/// radicals taken on `branch`.
pub fn mu_equation_terms(params: &QuadricParams, lambda: C64, mu: C64, branch: [i8; 3]) -> [C64; 4] {
    let c = &params.c;
    let [d1, d2, d3] = params.d;
    let _ = d1;
    let b = b_from_mu(params, mu, branch);
    let l2 = lambda * lambda;
    let lm = lambda * mu;
    let g = d2 / lambda;
    let first = c64(d3, 0.0) - g * (l2 * c[3] + c[0]);
    let second = g * (l2 * c[4] + c[1]) - d3;
    let t1 = b[0] * b[1] * first * (l2 * (c[4] - c[5]) + (c[1] - c[2]));
    let t2 = (l2 * (c[3] - c[5]) + (c[0] - c[2])) * second * (lm * (c[3] - c[4]) + (c[0] - c[1]));
    let t3 = b[0] * b[2] * second * (lm * (c[3] - c[5]) + (c[0] - c[2]));
    let t4 = b[1] * b[2] * first * (lm * (c[4] - c[5]) + (c[1] - c[2]));
    [t1, t2, t3, t4]
}

/// Left side of the radical mu-equation on `branch`.
pub fn mu_equation_residual(params: &QuadricParams, lambda: C64, mu: C64, branch: [i8; 3]) -> C64 {
    mu_equation_terms(params, lambda, mu, branch).iter().sum()
}

/// `|sum T_i| / sum |T_i|` (0 when all terms vanish).
pub fn mu_equation_relative_residual(params: &QuadricParams, lambda: C64, mu: C64, branch: [i8; 3]) -> f64 {
    let terms = mu_equation_terms(params, lambda, mu, branch);
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    if scale == 0.0 {
        0.0
    } else {
        terms.iter().sum::<C64>().norm() / scale
    }
}

/// The radical equation `B1 B2 X + Y + B1 B3 Z + B2 B3 W = 0` squared twice:
/// `R2 R3 (2 R1 X Z - 2 Y W)^2 - (Y^2 + R2 R3 W^2 - R1 R2 X^2 - R1 R3 Z^2)^2`.
/// Branch independent.
pub fn radical_cleared_polynomial(params: &QuadricParams, lambda: C64) -> Poly {
    let [r1, r2, r3] = radicand_polys(params);
    let [w1, w2, w3] = w_polys(params, lambda);
    let r = r_values(params, lambda);
    let e = e_values(params, lambda);
    let x = Poly::constant(e[0] * (r[1] - r[2]));
    let y = &w3 * (-(r[0] - r[2]) * e[1]);
    let z = &w2 * e[1];
    let w = &w1 * e[0];
    let two = c64(2.0, 0.0);
    let r23 = &r2 * &r3;
    let lhs_inner = &(&(&r1 * &x) * &z) * two - &(&y * &w) * two;
    let m = &(&y * &y) + &(&r23 * &(&w * &w)) - &(&(&r1 * &r2) * &(&x * &x)) - &(&(&r1 * &r3) * &(&z * &z));
    &(&r23 * &(&lhs_inner * &lhs_inner)) - &(&m * &m)
}

/// `sum_k e_k w_k^2 prod_{j != k} radicand_j`, before removing the double
/// root at `mu = lambda`.
pub fn compatibility_polynomial(params: &QuadricParams, lambda: C64) -> Poly {
    compatibility_terms(params, lambda).into_iter().fold(Poly::new(vec![]), |acc, t| acc + t)
}

fn compatibility_terms(params: &QuadricParams, lambda: C64) -> [Poly; 3] {
    let rad = radicand_polys(params);
    let w = w_polys(params, lambda);
    let e = e_values(params, lambda);
    std::array::from_fn(|k| {
        let others = &rad[(k + 1) % 3] * &rad[(k + 2) % 3];
        &(&(&w[k] * &w[k]) * &others) * e[k]
    })
}

/// True when `p` is negligible next to the parts that were summed into it.
fn cancels(p: &Poly, parts_scale: f64) -> bool {
    p.max_coeff() <= 1e-12 * parts_scale
}

fn dedup_push(list: &mut Vec<C64>, z: C64) {
    if !list.iter().any(|&y| (y - z).norm() <= 1e-8 * (1.0 + z.norm())) {
        list.push(z);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSolution {
    pub candidates: Vec<MuCandidate>,
    /// Radical-route roots whose residual fell in `(tau_mu, 10 tau_mu]`.
    pub ambiguous: Vec<MuCandidate>,
}

/// mu candidates for one `lambda`.
///
/// The compatibility route is branch independent and returns each root once
/// with branch `(+,+,+)`; the radical route filters the cleared polynomial's
/// roots on every branch class.
pub fn solve_mu(
    params: &QuadricParams,
    lambda: C64,
    route: MuRoute,
    tol: &Tolerances,
) -> Result<MuSolution, LineError> {
    let mut out = MuSolution { candidates: Vec::new(), ambiguous: Vec::new() };
    match route {
        MuRoute::Compatibility => {
            for mu in compatibility_roots(params, lambda) {
                let poly = compatibility_polynomial(params, lambda);
                let branch = BRANCHES[0];
                out.candidates.push(MuCandidate {
                    mu,
                    branch,
                    route,
                    equation_residual: scaled_residual(&poly, mu),
                    radical_residual: mu_equation_relative_residual(params, lambda, mu, branch),
                });
            }
        }
        MuRoute::Radical => {
            let poly = radical_cleared_polynomial(params, lambda);
            let roots = if poly.max_coeff() == 0.0 { Vec::new() } else { solve_poly(&poly).unwrap_or_default() };
            let mut seen = Vec::new();
            for mu in roots {
                for branch in BRANCHES {
                    let res = mu_equation_relative_residual(params, lambda, mu, branch);
                    let cand = MuCandidate { mu, branch, route, equation_residual: res, radical_residual: res };
                    if res <= tol.tau_mu {
                        if !seen.iter().any(|&y: &C64| (y - mu).norm() <= 1e-8 * (1.0 + mu.norm())) {
                            seen.push(mu);
                            out.candidates.push(cand);
                        }
                    } else if res <= 10.0 * tol.tau_mu {
                        out.ambiguous.push(cand);
                    }
                }
            }
        }
    }
    if out.candidates.is_empty() {
        return Err(LineError::NoRoot);
    }
    Ok(out)
}

/// Roots of the compatibility polynomial other than the double root at
/// `lambda`. When the polynomial vanishes identically, the common root of
/// `w(mu) = 0` (if any) is returned instead.
pub fn compatibility_roots(params: &QuadricParams, lambda: C64) -> Vec<C64> {
    let terms = compatibility_terms(params, lambda);
    let parts = terms.iter().fold(0.0f64, |m, t| m.max(t.max_coeff()));
    let poly = compatibility_polynomial(params, lambda);
    let mut roots = Vec::new();
    if parts == 0.0 || cancels(&poly, parts) {
        if let Some(mu) = common_w_root(params, lambda) {
            roots.push(mu);
        }
        return roots;
    }
    let mut reduced = poly.clone();
    for _ in 0..2 {
        let (q, rem) = reduced.deflate(lambda);
        if rem.norm() <= 1e-9 * reduced.eval_scale(lambda).max(f64::MIN_POSITIVE) {
            reduced = q;
        } else {
            break;
        }
    }
    if reduced.coeffs().len() <= 1 || reduced.max_coeff() == 0.0 {
        return roots;
    }
    for mu in solve_poly(&reduced).unwrap_or_default() {
        // polish against the undeflated polynomial
        let mu = crate::numerics::polish_root(&poly, mu);
        if (mu - lambda).norm() <= 1e-6 * (1.0 + lambda.norm()) {
            continue;
        }
        dedup_push(&mut roots, mu);
    }
    roots
}

/// `mu` with `w_1 = w_2 = w_3 = 0`, i.e. `(c_k + lambda mu c_{k+3})` parallel
/// to `(1,1,1)`.
fn common_w_root(params: &QuadricParams, lambda: C64) -> Option<C64> {
    let w = w_polys(params, lambda);
    let scale = params.scale() * (1.0 + lambda.norm());
    let mut mu = None;
    for p in &w {
        let [c0, c1] = [p.coeffs()[0], p.coeffs()[1]];
        if c1.norm() > 1e-12 * scale {
            mu = Some(-c0 / c1);
            break;
        }
    }
    let mu = mu?;
    w.iter().all(|p| p.eval(mu).norm() <= 1e-10 * scale * (1.0 + mu.norm())).then_some(mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ASolution {
    #[serde(with = "crate::cx::array")]
    pub a: [C64; 3],
    #[serde(with = "crate::cx")]
    pub scale_s: C64,
    /// `s^2` from `sum a_k^2 = d2/lambda` and from `sum r_k a_k^2 = d3`.
    #[serde(with = "crate::cx::array")]
    pub s2: [C64; 2],
}

fn zero_b_floor(params: &QuadricParams, mu: C64) -> f64 {
    1e-12 * params.c_inf().max(1.0) * (1.0 + mu.norm_sqr())
}

/// The two `s^2` determinations `(d2/lambda) / sum g_k` and
/// `d3 / sum r_k g_k`, `g_k = w_k^2 / b_k^2`. `None` if some `b_k` vanishes.
pub fn s2_determinations(params: &QuadricParams, lambda: C64, mu: C64, b: [C64; 3]) -> Option<[C64; 2]> {
    let floor = zero_b_floor(params, mu);
    if b.iter().any(|bk| bk.norm_sqr() <= floor) {
        return None;
    }
    let w = w_values(params, lambda, mu);
    let r = r_values(params, lambda);
    let g: [C64; 3] = std::array::from_fn(|k| w[k] * w[k] / (b[k] * b[k]));
    let s1: C64 = g.iter().sum();
    let s2: C64 = g.iter().zip(&r).map(|(g, r)| g * r).sum();
    Some([params.d[1] / lambda / s1, params.d[2] / s2])
}

/// `max(sum |g_k| / |sum g_k|, sum |r_k g_k| / |sum r_k g_k|)`, at least 1.
fn s2_cancellation(params: &QuadricParams, lambda: C64, mu: C64, b: [C64; 3]) -> f64 {
    let w = w_values(params, lambda, mu);
    let r = r_values(params, lambda);
    let g: [C64; 3] = std::array::from_fn(|k| w[k] * w[k] / (b[k] * b[k]));
    let ratio = |terms: [C64; 3]| {
        let total = terms.iter().sum::<C64>().norm();
        let mass: f64 = terms.iter().map(|z| z.norm()).sum();
        if total == 0.0 {
            f64::INFINITY
        } else {
            mass / total
        }
    };
    ratio(g).max(ratio(std::array::from_fn(|k| r[k] * g[k]))).max(1.0)
}

fn relative_gap(x: C64, y: C64) -> f64 {
    let m = x.norm().max(y.norm());
    if m == 0.0 {
        0.0
    } else if !(x.norm().is_finite() && y.norm().is_finite()) {
        f64::INFINITY
    } else {
        (x - y).norm() / m
    }
}

/// Recovers `a1, a2, a3` from `(lambda, mu, b)`.
///
/// Generic case: `a_k = s w_k / b_k`, one solution. When `w` vanishes the
/// products `a_k b_k` only need to sum to zero, and the constant terms give
/// a homogeneous quadratic with up to two solutions.
pub fn a_from_mu(
    params: &QuadricParams,
    lambda: C64,
    mu: C64,
    b: [C64; 3],
    tol: &Tolerances,
) -> Result<Vec<ASolution>, LineError> {
    let w = w_values(params, lambda, mu);
    let floor = zero_b_floor(params, mu);
    let w_floor = 1e-12 * params.c_inf().max(1.0) * (1.0 + (lambda * mu).norm());
    for k in 0..3 {
        if b[k].norm_sqr() <= floor {
            return Err(if w[k].norm() > w_floor { LineError::ZeroB(k + 1) } else { LineError::DegenerateRadicand(k + 1) });
        }
    }
    let g_lam = params.d[1] / lambda;
    let r = r_values(params, lambda);
    if w.iter().all(|wk| wk.norm() <= w_floor) {
        return Ok(a_on_parallel_branch(params, lambda, b, &r, g_lam, tol));
    }
    let s2 = s2_determinations(params, lambda, mu, b).expect("b checked nonzero");
    let gap = relative_gap(s2[0], s2[1]);
    // near mu = lambda both sums cancel and the gap loses digits accordingly
    if !(gap <= tol.s2_consistency * s2_cancellation(params, lambda, mu, b)) {
        return Err(LineError::Inconsistent(gap));
    }
    let s = principal_sqrt(s2[0]);
    Ok(vec![ASolution { a: std::array::from_fn(|k| s * w[k] / b[k]), scale_s: s, s2 }])
}

/// `w = 0`: `u = alpha (1,-1,0) + beta (0,1,-1)` with
/// `sum e_k u_k^2 / b_k^2 = 0`.
fn a_on_parallel_branch(
    params: &QuadricParams,
    lambda: C64,
    b: [C64; 3],
    r: &[C64; 3],
    g_lam: C64,
    tol: &Tolerances,
) -> Vec<ASolution> {
    let e = e_values(params, lambda);
    let h: [C64; 3] = b.map(|bk| 1.0 / (bk * bk));
    let (p1, p2, p3) = (e[0] * h[0], e[1] * h[1], e[2] * h[2]);
    // (p1 + p2) rho^2 - 2 p2 rho + (p2 + p3) = 0 for u = (rho, 1 - rho, -1)
    let lead = p1 + p2;
    let mut dirs: Vec<[C64; 3]> = Vec::new();
    let one = c64(1.0, 0.0);
    let scale = p1.norm() + p2.norm() + p3.norm();
    if lead.norm() > 1e-12 * scale {
        for rho in solve_quadratic(-2.0 * p2 / lead, (p2 + p3) / lead) {
            dirs.push([rho, one - rho, -one]);
        }
    } else {
        // one root escaped to infinity: u = (1, -1, 0)
        dirs.push([one, -one, c64(0.0, 0.0)]);
        if p2.norm() > 1e-12 * scale {
            let rho = (p2 + p3) / (2.0 * p2);
            dirs.push([rho, one - rho, -one]);
        }
    }
    let mut out = Vec::new();
    for u in dirs {
        let n1: C64 = (0..3).map(|k| u[k] * u[k] * h[k]).sum();
        let n2: C64 = (0..3).map(|k| r[k] * u[k] * u[k] * h[k]).sum();
        if n1.norm() == 0.0 || n2.norm() == 0.0 {
            continue;
        }
        let s2 = [g_lam / n1, params.d[2] / n2];
        if !(relative_gap(s2[0], s2[1]) <= tol.s2_consistency) {
            continue;
        }
        let s = principal_sqrt(s2[0]);
        let a: [C64; 3] = std::array::from_fn(|k| s * u[k] / b[k]);
        if out.iter().any(|o: &ASolution| (0..3).all(|k| (o.a[k] - a[k]).norm() <= 1e-10 * (1.0 + a[k].norm()))) {
            continue;
        }
        out.push(ASolution { a, scale_s: s, s2 });
    }
    out
}

/// Coefficients of `t^2, t, 1` in `f_j(a + t b) - d_j` for `j = 1, 2, 3`.
pub fn line_residuals(params: &QuadricParams, line: &ComplexLine) -> [C64; 9] {
    let (a, b) = (line.full_a(), line.full_b());
    let fa = evaluate(params, &a);
    let fb = evaluate(params, &b);
    let ab = polarize(params, &a, &b);
    std::array::from_fn(|i| {
        let j = i / 3;
        match i % 3 {
            0 => fb[j],
            1 => ab[j] * 2.0,
            _ => fa[j] - params.d[j],
        }
    })
}

/// Largest residual coefficient divided by [`ComplexLine::residual_scale`].
pub fn line_relative_residual(params: &QuadricParams, line: &ComplexLine) -> f64 {
    let worst = line_residuals(params, line).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    worst / line.residual_scale(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Lambda,
    Radicands,
    Mu,
    Coefficients,
    Residuals,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lambda_roots: usize,
    pub mu_candidates: usize,
    pub branch_attempts: usize,
    pub zero_b: usize,
    pub degenerate_radicand: usize,
    pub inconsistent: usize,
    pub coefficient_solutions: usize,
    pub residual_failures: usize,
    pub lines: usize,
    pub emptied_at: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConstruction {
    pub lines: Vec<ComplexLine>,
    pub stages: StageReport,
}

/// Every line of the ansatz found over both lambda roots, all mu roots of
/// the compatibility polynomial and all branch classes, ordered by
/// (lambda index, branch index, |mu|).
pub fn construct_line_detailed(params: &QuadricParams, tol: &Tolerances) -> LineConstruction {
    let mut stages = StageReport::default();
    let lambdas = match solve_lambda(params.d) {
        Ok(l) => l,
        Err(_) => {
            stages.emptied_at = Some(Stage::Lambda);
            return LineConstruction { lines: Vec::new(), stages };
        }
    };
    stages.lambda_roots = 2;
    if radicand_polys(params).iter().all(|p| p.max_coeff() == 0.0) {
        stages.emptied_at = Some(Stage::Radicands);
        return LineConstruction { lines: Vec::new(), stages };
    }
    let mut keyed: Vec<((usize, usize), ComplexLine)> = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        if li == 1 && (lambdas[1] - lambdas[0]).norm() <= 1e-14 * (1.0 + lambda.norm()) {
            continue;
        }
        let mus = compatibility_roots(params, lambda);
        stages.mu_candidates += mus.len();
        for &mu in &mus {
            for (bi, &branch) in BRANCHES.iter().enumerate() {
                stages.branch_attempts += 1;
                let b = b_from_mu(params, mu, branch);
                match a_from_mu(params, lambda, mu, b, tol) {
                    Err(LineError::ZeroB(_)) => stages.zero_b += 1,
                    Err(LineError::DegenerateRadicand(_)) => stages.degenerate_radicand += 1,
                    Err(_) => stages.inconsistent += 1,
                    Ok(sols) => {
                        for sol in sols {
                            stages.coefficient_solutions += 1;
                            let line = ComplexLine { a: sol.a, b, lambda, mu, branch, scale_s: sol.scale_s };
                            if line_relative_residual(params, &line) <= tol.line_residual {
                                keyed.push(((li, bi), line));
                            } else {
                                stages.residual_failures += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    keyed.sort_by(|(ka, la), (kb, lb)| {
        ka.cmp(kb)
            .then(la.mu.norm().total_cmp(&lb.mu.norm()))
            .then(la.mu.re.total_cmp(&lb.mu.re))
            .then(la.mu.im.total_cmp(&lb.mu.im))
    });
    let lines: Vec<ComplexLine> = keyed.into_iter().map(|(_, l)| l).collect();
    stages.lines = lines.len();
    if lines.is_empty() {
        stages.emptied_at = Some(if stages.mu_candidates == 0 {
            Stage::Mu
        } else if stages.coefficient_solutions == 0 {
            Stage::Coefficients
        } else {
            Stage::Residuals
        });
    }
    LineConstruction { lines, stages }
}

/// [`construct_line_detailed`] with an error when nothing survives.
pub fn construct_line(params: &QuadricParams, tol: &Tolerances) -> Result<Vec<ComplexLine>, LineError> {
    let out = construct_line_detailed(params, tol);
    if out.lines.is_empty() {
        Err(LineError::NoLineFound(out.stages))
    } else {
        Ok(out.lines)
    }
}
