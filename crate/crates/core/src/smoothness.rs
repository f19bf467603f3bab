//! Smoothness of the level set over R^6, C^6 and CP^6.
//!
//! A point is singular exactly when some combination of the three gradients
//! vanishes. Normalising the multiplier of `f3` leads, pair by pair, to
//! `(c_k - a)(c_{k+3} - a) = b^2` with `a = (d3 - 2 b d2) / d1`, and to the
//! ratio `x_{k+3} = ((c_k - a) / b) x_k`. The remaining case (no `f3` term)
//! is the condition on `d1` versus `2|d2|`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{c64, min_norm_step, rank_ratio, solve_linear, solve_quadratic, CMat, C64};
use crate::quadrics::{
    evaluate_homogeneous, jacobian, jacobian_homogeneous, residual_norm, residuals, Point6, QuadricParams,
};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmoothnessError {
    #[error("all three b-quadratics vanish identically; every b is a common root")]
    DegenerateSystem,
    #[error("inequality undefined: b = 0 or d2 = 0")]
    UndefinedForm,
    #[error("the linear system for x1^2, x2^2, x3^2 has no nonnegative solution")]
    NoRealPoint,
}

/// A common root of the three b-quadratics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSolution {
    #[serde(with = "crate::cx")]
    pub b: C64,
    /// `(d3 - 2 b d2) / d1` (when `d1 = 0`, `b` is pinned and `a` is the root).
    #[serde(with = "crate::cx")]
    pub a: C64,
    /// `|(c_k - a)(c_{k+3} - a) - b^2|` for k = 1, 2, 3.
    pub residuals: [f64; 3],
}

impl BSolution {
    fn from_ab(params: &QuadricParams, a: C64, b: C64) -> Self {
        let c = &params.c;
        let residuals = std::array::from_fn(|k| ((c[k] - a) * (c[k + 3] - a) - b * b).norm());
        BSolution { b, a, residuals }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Condition (a): real field `d1 > 2|d2|`; complex field `|d1| != 2|d2|`.
///
/// Exact comparisons; equality is the singular case.
pub fn check_condition_a(d: [f64; 3], field: Field) -> bool {
    match field {
        Field::Real => d[0] > 2.0 * d[1].abs(),
        Field::Complex => d[0].abs() != 2.0 * d[1].abs(),
    }
}

fn b_scale(params: &QuadricParams) -> f64 {
    1f64.max(params.c_inf().powi(2)).max(params.d_inf().powi(2))
}

/// Coefficients `(A, B, C)` of `A b^2 + B b + C` for the three equations
/// after substituting `a(b)`. Requires `d1 != 0`.
pub fn b_quadratics(params: &QuadricParams) -> [[f64; 3]; 3] {
    let [d1, d2, d3] = params.d;
    let alpha = d3 / d1;
    let beta = 2.0 * d2 / d1;
    std::array::from_fn(|k| {
        let u = params.c[k] - alpha;
        let v = params.c[k + 3] - alpha;
        [beta * beta - 1.0, beta * (u + v), u * v]
    })
}

/// Resultants of the pairs (1,2), (1,3), (2,3) of b-quadratics; a pair
/// shares a root iff its resultant vanishes.
pub fn b_system_resultants(params: &QuadricParams) -> [f64; 3] {
    let q = b_quadratics(params);
    let res = |p: [f64; 3], r: [f64; 3]| {
        let (a1, b1, c1) = (p[0], p[1], p[2]);
        let (a2, b2, c2) = (r[0], r[1], r[2]);
        (a1 * c2 - a2 * c1).powi(2) - (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1)
    };
    [res(q[0], q[1]), res(q[0], q[2]), res(q[1], q[2])]
}

/// Candidate roots of the first quadratic that does not vanish identically.
/// `None` when all three vanish identically.
fn first_equation_roots(quads: &[[C64; 3]; 3], tiny: f64) -> Option<Vec<C64>> {
    for q in quads {
        let [a, b, c] = *q;
        if a.norm() > tiny {
            let [r1, r2] = solve_quadratic(b / a, c / a);
            let mut roots = vec![r1];
            if (r1 - r2).norm() > 1e-14 * (1.0 + r1.norm()) {
                roots.push(r2);
            }
            return Some(roots);
        }
        if b.norm() > tiny {
            return Some(vec![-c / b]);
        }
        if c.norm() > tiny {
            return Some(Vec::new());
        }
    }
    None
}

/// All `b` solving the three equations simultaneously within `tau_b`
/// (scaled by `max(1, |c|^2, |d|^2, |a|^2, |b|^2)`).
///
/// With `d1 = 0` the relation `d3 = a d1 + 2 b d2` pins `b` instead, and
/// the equations are solved for `a`.
pub fn solve_b_system(
    params: &QuadricParams,
    field: Field,
    tol: &Tolerances,
) -> Result<Vec<BSolution>, SmoothnessError> {
    let [d1, d2, d3] = params.d;
    let scale = b_scale(params);
    let tiny = 1e-14 * scale;
    let pairs: Vec<(C64, C64)> = if d1 != 0.0 {
        let quads = b_quadratics(params).map(|q| q.map(|x| c64(x, 0.0)));
        let roots = first_equation_roots(&quads, tiny).ok_or(SmoothnessError::DegenerateSystem)?;
        roots
            .into_iter()
            .map(|b| (c64(d3 / d1, 0.0) - b * (2.0 * d2 / d1), b))
            .collect()
    } else {
        if d2 == 0.0 {
            return Err(SmoothnessError::DegenerateSystem);
        }
        let b = c64(d3 / (2.0 * d2), 0.0);
        let quads: [[C64; 3]; 3] = std::array::from_fn(|k| {
            let (u, v) = (params.c[k], params.c[k + 3]);
            [c64(1.0, 0.0), c64(-(u + v), 0.0), c64(u * v, 0.0) - b * b]
        });
        let roots = first_equation_roots(&quads, tiny).ok_or(SmoothnessError::DegenerateSystem)?;
        roots.into_iter().map(|a| (a, b)).collect()
    };
    let mut out = Vec::new();
    for (a, b) in pairs {
        let sol = BSolution::from_ab(params, a, b);
        let local = scale.max(a.norm_sqr()).max(b.norm_sqr());
        if sol.max_residual() > tol.tau_b * local {
            continue;
        }
        if field == Field::Real && (b.im.abs() > tol.tau_b * local.sqrt() || a.im.abs() > tol.tau_b * local.sqrt()) {
            continue;
        }
        out.push(sol);
    }
    Ok(out)
}

/// The three inequalities `(c_k - a)/(b d2) >= (1 + ((c_k - a)/b)^2) / d1`;
/// true iff at least one holds. Real parts of `a`, `b` are used.
pub fn check_inequalities(
    sol: &BSolution,
    params: &QuadricParams,
) -> Result<bool, SmoothnessError> {
    let [d1, d2, _] = params.d;
    let (a, b) = (sol.a.re, sol.b.re);
    if b.abs() <= 1e-12 * b_scale(params).sqrt() || d2 == 0.0 || d1 == 0.0 {
        return Err(SmoothnessError::UndefinedForm);
    }
    Ok((0..3).any(|k| {
        let kappa = (params.c[k] - a) / b;
        (params.c[k] - a) / (b * d2) >= (1.0 + kappa * kappa) / d1
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Smooth,
    Singular,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    /// Condition (a) fails.
    ConditionA,
    /// The b-system is identically satisfied.
    DegenerateSystem,
    /// A common root exists (complex) or exists and passes an inequality (real).
    CommonRoot,
    /// A real common root hits an undefined inequality (b = 0 or d2 = 0).
    UndefinedInequality,
    /// Real common roots exist, but none passes an inequality.
    InequalitiesFail,
    /// No common root; the real level set may also be empty.
    NoCommonRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldVerdict {
    pub field: Field,
    pub verdict: Verdict,
    pub reason: Reason,
    pub witnesses: Vec<BSolution>,
    /// Degenerate points built from the witnesses, when they exist.
    pub points: Vec<Point6>,
}

/// Real smoothness of `{f = d} in R^6`.
pub fn real_smoothness(params: &QuadricParams, tol: &Tolerances) -> FieldVerdict {
    let mut out = FieldVerdict {
        field: Field::Real,
        verdict: Verdict::Singular,
        reason: Reason::ConditionA,
        witnesses: Vec::new(),
        points: Vec::new(),
    };
    if !check_condition_a(params.d, Field::Real) {
        return out;
    }
    let sols = match solve_b_system(params, Field::Real, tol) {
        Ok(s) => s,
        Err(_) => {
            out.reason = Reason::DegenerateSystem;
            return out;
        }
    };
    let mut undefined = Vec::new();
    for sol in &sols {
        match check_inequalities(sol, params) {
            Ok(true) => {
                out.witnesses.push(*sol);
                if let Ok(x) = degenerate_point(params, sol) {
                    out.points.push(x);
                }
            }
            Ok(false) => {}
            Err(_) => undefined.push(*sol),
        }
    }
    if !out.witnesses.is_empty() {
        out.reason = Reason::CommonRoot;
    } else if !undefined.is_empty() {
        out.verdict = Verdict::Inconclusive;
        out.reason = Reason::UndefinedInequality;
        out.witnesses = undefined;
    } else {
        out.verdict = Verdict::Smooth;
        out.reason = if sols.is_empty() { Reason::NoCommonRoot } else { Reason::InequalitiesFail };
    }
    out
}

/// Complex smoothness of `{f = d} in C^6`.
pub fn complex_smoothness(params: &QuadricParams, tol: &Tolerances) -> FieldVerdict {
    let mut out = FieldVerdict {
        field: Field::Complex,
        verdict: Verdict::Singular,
        reason: Reason::ConditionA,
        witnesses: Vec::new(),
        points: Vec::new(),
    };
    if !check_condition_a(params.d, Field::Complex) {
        return out;
    }
    match solve_b_system(params, Field::Complex, tol) {
        Err(_) => out.reason = Reason::DegenerateSystem,
        Ok(sols) if !sols.is_empty() => {
            out.reason = Reason::CommonRoot;
            out.points = sols.iter().filter_map(|s| degenerate_point_complex(params, s)).collect();
            out.witnesses = sols;
        }
        Ok(_) => {
            out.verdict = Verdict::Smooth;
            out.reason = Reason::NoCommonRoot;
        }
    }
    out
}

/// Nonnegative `y` with `sum y_i (1 + k_i^2) = d1`, `sum y_i k_i = d2`.
fn nonnegative_squares(kappa: [f64; 3], d1: f64, d2: f64) -> Option<[f64; 3]> {
    if d1 <= 0.0 {
        return None;
    }
    let r1: [f64; 3] = kappa.map(|k| 1.0 + k * k);
    let r2 = kappa;
    // minimum-norm solution through the 2x2 Gram system
    let g11: f64 = r1.iter().map(|x| x * x).sum();
    let g12: f64 = r1.iter().zip(&r2).map(|(x, y)| x * y).sum();
    let g22: f64 = r2.iter().map(|x| x * x).sum();
    let det = g11 * g22 - g12 * g12;
    let slack = 1e-12 * d1;
    if det > 1e-12 * g11 * g22 {
        let l1 = (d1 * g22 - d2 * g12) / det;
        let l2 = (g11 * d2 - g12 * d1) / det;
        let y: [f64; 3] = std::array::from_fn(|i| l1 * r1[i] + l2 * r2[i]);
        if y.iter().all(|&v| v >= -slack) {
            return Some(y.map(|v| v.max(0.0)));
        }
    } else {
        // all kappa equal: consistent iff d2 (1 + k^2) = d1 k
        let k = kappa[0];
        if (d2 * (1.0 + k * k) - d1 * k).abs() <= 1e-12 * d1.abs().max(d2.abs()) {
            return Some([d1 / (3.0 * r1[0]); 3]);
        }
        return None;
    }
    // vertex solutions supported on one or two indices
    let g: [f64; 3] = std::array::from_fn(|i| r2[i] / r1[i]);
    let rho = d2 / d1;
    for i in 0..3 {
        if (g[i] - rho).abs() <= 1e-14 {
            let mut y = [0.0; 3];
            y[i] = d1 / r1[i];
            return Some(y);
        }
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            if g[i] == g[j] {
                continue;
            }
            let w = (rho - g[j]) / (g[i] - g[j]);
            if (0.0..=1.0).contains(&w) {
                let mut y = [0.0; 3];
                y[i] = d1 * w / r1[i];
                y[j] = d1 * (1.0 - w) / r1[j];
                return Some(y);
            }
        }
    }
    None
}

/// Real point where the Jacobian drops rank, built from a real common root.
///
/// `x_{k+3} = ((c_k - a)/b) x_k`, and the squares `x_k^2` solve the two
/// independent level equations (the third is `a` times the first plus `2b`
/// times the second at any common root).
pub fn degenerate_point(params: &QuadricParams, sol: &BSolution) -> Result<Point6, SmoothnessError> {
    let (a, b) = (sol.a.re, sol.b.re);
    if b.abs() <= 1e-12 * b_scale(params).sqrt() {
        return Err(SmoothnessError::UndefinedForm);
    }
    let kappa: [f64; 3] = std::array::from_fn(|k| (params.c[k] - a) / b);
    let y = nonnegative_squares(kappa, params.d[0], params.d[1]).ok_or(SmoothnessError::NoRealPoint)?;
    let x: [f64; 3] = y.map(f64::sqrt);
    Ok(Point6::from_real([
        x[0],
        x[1],
        x[2],
        kappa[0] * x[0],
        kappa[1] * x[1],
        kappa[2] * x[2],
    ]))
}

/// Complex analogue of [`degenerate_point`] (no sign constraint on the
/// squares); `None` when `b` vanishes or the system is rank deficient.
pub fn degenerate_point_complex(params: &QuadricParams, sol: &BSolution) -> Option<Point6> {
    if sol.b.norm() <= 1e-12 * b_scale(params).sqrt() {
        return None;
    }
    let kappa: [C64; 3] = std::array::from_fn(|k| (params.c[k] - sol.a) / sol.b);
    let m = CMat::from_rows(&[
        kappa.iter().map(|k| 1.0 + k * k).collect(),
        kappa.to_vec(),
    ]);
    let y = min_norm_step(&m, &[c64(params.d[0], 0.0), c64(params.d[1], 0.0)])?;
    let x: Vec<C64> = y.iter().map(|&v| crate::numerics::principal_sqrt(v)).collect();
    Some(Point6([x[0], x[1], x[2], kappa[0] * x[0], kappa[1] * x[1], kappa[2] * x[2]]))
}

/// Damped Gauss–Newton (minimum-norm steps) onto `{f = d}`. Real starts
/// stay real. `None` if the residual does not reach
/// `projection_residual * scale`.
pub fn project_to_level_set(params: &QuadricParams, start: Point6, tol: &Tolerances) -> Option<Point6> {
    let target = tol.projection_residual * params.scale();
    let mut x = start;
    let mut res = residual_norm(params, &x);
    for _ in 0..100 {
        if res <= target {
            return Some(x);
        }
        let r = residuals(params, &x);
        let step = min_norm_step(&jacobian(params, &x), &r)?;
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = Point6(std::array::from_fn(|i| x.0[i] - step[i] * damping));
            let tr = residual_norm(params, &trial);
            if tr < res {
                x = trial;
                res = tr;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    (res <= target).then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub points: Vec<Point6>,
    pub attempts: usize,
}

/// Up to `n` points of the level set (over `field`) from random starts.
pub fn sample_level_set<R: Rng + ?Sized>(
    params: &QuadricParams,
    field: Field,
    n: usize,
    max_attempts: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> SampleOutcome {
    let radius = (params.d[0].abs() + 1.0).sqrt();
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n && attempts < max_attempts {
        attempts += 1;
        let start = Point6(std::array::from_fn(|_| match field {
            Field::Real => c64(rng.gen_range(-radius..radius), 0.0),
            Field::Complex => c64(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)),
        }));
        if let Some(x) = project_to_level_set(params, start, tol) {
            points.push(x);
        }
    }
    SampleOutcome { points, attempts }
}

/// `sigma_3 / sigma_1` of the Jacobian at `x`.
pub fn jacobian_rank_ratio(params: &QuadricParams, x: &Point6) -> f64 {
    rank_ratio(&jacobian(params, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartMethod {
    /// Decided by [`complex_smoothness`].
    ClosedForm,
    /// Decided by sampling points and testing the Jacobian rank.
    Sampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartStatus {
    Smooth,
    SingularWitness,
    /// Samples found, but some rank ratio fell between the two thresholds.
    Ambiguous,
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartVerdict {
    /// `k` for the chart `X_k = 1` (0 is the affine chart).
    pub chart: usize,
    pub method: ChartMethod,
    pub status: ChartStatus,
    pub samples: usize,
    pub samples_at_infinity: usize,
    pub min_rank_ratio: Option<f64>,
    #[serde(with = "crate::cx::vec")]
    pub witness: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveReport {
    pub charts: Vec<ChartVerdict>,
}

impl ProjectiveReport {
    pub fn all_smooth(&self) -> bool {
        self.charts.iter().all(|c| c.status == ChartStatus::Smooth)
    }

    pub fn any_singular(&self) -> bool {
        self.charts.iter().any(|c| c.status == ChartStatus::SingularWitness)
    }
}

/// Newton onto the homogenised variety with the coordinates in `fixed`
/// held at their start values.
fn project_homogeneous(
    params: &QuadricParams,
    start: [C64; 7],
    fixed: &[usize],
    tol: &Tolerances,
) -> Option<[C64; 7]> {
    let free: Vec<usize> = (0..7).filter(|i| !fixed.contains(i)).collect();
    let norm = |x: &[C64; 7]| evaluate_homogeneous(params, x).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let target = tol.projection_residual * params.scale();
    let mut x = start;
    let mut res = norm(&x);
    for _ in 0..100 {
        if res <= target {
            return Some(x);
        }
        let full = jacobian_homogeneous(params, &x);
        let mut j = CMat::zeros(3, free.len());
        for r in 0..3 {
            for (c, &i) in free.iter().enumerate() {
                j.set(r, c, full.get(r, i));
            }
        }
        let f = evaluate_homogeneous(params, &x);
        let step = min_norm_step(&j, &f)?;
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = x;
            for (c, &i) in free.iter().enumerate() {
                trial[i] -= step[c] * damping;
            }
            let tr = norm(&trial);
            if tr < res {
                x = trial;
                res = tr;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    (res <= target).then_some(x)
}

/// Seven-chart check of the projective closure. Chart 0 is decided in
/// closed form; charts `X_k = 1` are sampled, half of the samples on the
/// hyperplane at infinity `X0 = 0`.
pub fn projective_smoothness<R: Rng + ?Sized>(
    params: &QuadricParams,
    samples_per_chart: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> ProjectiveReport {
    let mut charts = Vec::with_capacity(7);
    let affine = complex_smoothness(params, tol);
    charts.push(ChartVerdict {
        chart: 0,
        method: ChartMethod::ClosedForm,
        status: if affine.verdict == Verdict::Smooth { ChartStatus::Smooth } else { ChartStatus::SingularWitness },
        samples: 0,
        samples_at_infinity: 0,
        min_rank_ratio: None,
        witness: affine.points.first().map(|p| {
            let mut v = vec![c64(1.0, 0.0)];
            v.extend_from_slice(&p.0);
            v
        }).unwrap_or_default(),
    });
    let radius = (params.d[0].abs() + 1.0).sqrt();
    for k in 1..=6 {
        let mut verdict = ChartVerdict {
            chart: k,
            method: ChartMethod::Sampling,
            status: ChartStatus::NoSamples,
            samples: 0,
            samples_at_infinity: 0,
            min_rank_ratio: None,
            witness: Vec::new(),
        };
        let mut ambiguous = false;
        for s in 0..samples_per_chart {
            let at_infinity = s % 2 == 1;
            let mut start: [C64; 7] =
                std::array::from_fn(|_| c64(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)));
            start[k] = c64(1.0, 0.0);
            let fixed: Vec<usize> = if at_infinity {
                start[0] = c64(0.0, 0.0);
                vec![0, k]
            } else {
                vec![k]
            };
            let Some(x) = project_homogeneous(params, start, &fixed, tol) else { continue };
            verdict.samples += 1;
            if at_infinity {
                verdict.samples_at_infinity += 1;
            }
            let ratio = rank_ratio(&jacobian_homogeneous(params, &x));
            verdict.min_rank_ratio = Some(verdict.min_rank_ratio.map_or(ratio, |m: f64| m.min(ratio)));
            if ratio <= tol.singular_rank_ratio {
                if verdict.witness.is_empty() {
                    verdict.witness = x.to_vec();
                }
            } else if ratio < tol.smooth_rank_ratio {
                ambiguous = true;
            }
        }
        verdict.status = if !verdict.witness.is_empty() {
            ChartStatus::SingularWitness
        } else if verdict.samples == 0 {
            ChartStatus::NoSamples
        } else if ambiguous {
            ChartStatus::Ambiguous
        } else {
            ChartStatus::Smooth
        };
        charts.push(verdict);
    }
    ProjectiveReport { charts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub params: QuadricParams,
    pub real: FieldVerdict,
    pub complex: FieldVerdict,
    pub projective: Option<ProjectiveReport>,
}

/// Real, complex and (if `samples_per_chart > 0`) projective verdicts.
pub fn smoothness_report<R: Rng + ?Sized>(
    params: &QuadricParams,
    samples_per_chart: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> SmoothnessReport {
    SmoothnessReport {
        params: *params,
        real: real_smoothness(params, tol),
        complex: complex_smoothness(params, tol),
        projective: (samples_per_chart > 0).then(|| projective_smoothness(params, samples_per_chart, rng, tol)),
    }
}

/// Solves the square system `A x = b` with real entries; thin wrapper used
/// by tests that build instances backwards.
pub fn solve_real_3x3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = CMat::from_real_rows(&a.map(|r| r.to_vec()));
    let x = solve_linear(&m, &b.map(|v| c64(v, 0.0)))?;
    Some([x[0].re, x[1].re, x[2].re])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Singular instance built backwards from `(a, b, kappa, y)`.
    fn constructed(a: f64, b: f64, kappa: [f64; 3], y: [f64; 3]) -> QuadricParams {
        let c = [
            a + b * kappa[0],
            a + b * kappa[1],
            a + b * kappa[2],
            a + b / kappa[0],
            a + b / kappa[1],
            a + b / kappa[2],
        ];
        let d1: f64 = (0..3).map(|i| y[i] * (1.0 + kappa[i] * kappa[i])).sum();
        let d2: f64 = (0..3).map(|i| y[i] * kappa[i]).sum();
        QuadricParams::new(c, [d1, d2, a * d1 + 2.0 * b * d2])
    }

    #[test]
    fn condition_a_examples() {
        assert!(check_condition_a([5.0, 2.0, 0.0], Field::Real));
        assert!(!check_condition_a([4.0, 2.0, 0.0], Field::Real));
        assert!(!check_condition_a([4.0, 2.0, 0.0], Field::Complex));
        assert!(!check_condition_a([1.0, 2.0, 0.0], Field::Real));
        assert!(check_condition_a([1.0, 2.0, 0.0], Field::Complex));
        assert!(!check_condition_a([4.0, -2.0, 0.0], Field::Real));
        assert!(!check_condition_a([-4.0, 2.0, 0.0], Field::Complex));
    }

    #[test]
    fn equal_c_has_common_roots() {
        for k in [-2.0, 0.0, 1.5] {
            let p = QuadricParams::new([k; 6], [5.0, 2.0, 1.0]);
            let sols = solve_b_system(&p, Field::Complex, &tol()).unwrap();
            assert!(!sols.is_empty());
            for s in &sols {
                assert!(s.max_residual() <= 1e-9 * 25.0);
                // b solves k - a(b) = +-b
                assert!(((k - s.a) * (k - s.a) - s.b * s.b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn generic_params_have_no_common_root() {
        let p = QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [5.0, 2.0, 1.0]);
        assert!(solve_b_system(&p, Field::Complex, &tol()).unwrap().is_empty());
        // a shared root would make some pairwise resultant vanish
        let res = b_system_resultants(&p);
        assert!(res[0].abs() > 1e-6 && res[1].abs() > 1e-6);
    }

    #[test]
    fn resultant_vanishes_on_constructed_instance() {
        let p = constructed(0.3, 0.7, [1.7, -0.4, 2.5], [0.5, 1.0, 0.25]);
        let res = b_system_resultants(&p);
        for r in res {
            assert!(r.abs() < 1e-9, "{r}");
        }
        let sols = solve_b_system(&p, Field::Real, &tol()).unwrap();
        assert!(sols.iter().any(|s| (s.b.re - 0.7).abs() < 1e-9 && (s.a.re - 0.3).abs() < 1e-9));
    }

    #[test]
    fn inequality_examples() {
        // (c1 - a)/b = 1, d2 = 1, d1 = 5: 1 >= 2/5
        let p = QuadricParams::new([2.0, 10.0, 10.0, 0.0, 0.0, 0.0], [5.0, 1.0, 0.0]);
        let sol = BSolution::from_ab(&p, c64(1.0, 0.0), c64(1.0, 0.0));
        assert_eq!(check_inequalities(&sol, &p), Ok(true));
        // all (c_k - a)/b = 100: 100 >= 10001/5 is false
        let p = QuadricParams::new([100.0; 6], [5.0, 1.0, 0.0]);
        let sol = BSolution::from_ab(&p, c64(0.0, 0.0), c64(1.0, 0.0));
        assert_eq!(check_inequalities(&sol, &p), Ok(false));
        // d2 < 0 with positive ratios: left side negative
        let p = QuadricParams::new([1.0, 2.0, 3.0, 0.0, 0.0, 0.0], [5.0, -1.0, 0.0]);
        let sol = BSolution::from_ab(&p, c64(0.0, 0.0), c64(1.0, 0.0));
        assert_eq!(check_inequalities(&sol, &p), Ok(false));
        // undefined forms
        let sol = BSolution::from_ab(&p, c64(0.0, 0.0), c64(0.0, 0.0));
        assert_eq!(check_inequalities(&sol, &p), Err(SmoothnessError::UndefinedForm));
        let p0 = QuadricParams::new(p.c, [5.0, 0.0, 0.0]);
        let sol = BSolution::from_ab(&p0, c64(0.0, 0.0), c64(1.0, 0.0));
        assert_eq!(check_inequalities(&sol, &p0), Err(SmoothnessError::UndefinedForm));
    }

    #[test]
    fn real_smoothness_examples() {
        let eq = real_smoothness(&QuadricParams::new([2.0; 6], [5.0, 2.0, 1.0]), &tol());
        assert_eq!(eq.verdict, Verdict::Singular);
        assert_eq!(eq.reason, Reason::CommonRoot);
        assert!(!eq.witnesses.is_empty());
        let boundary = real_smoothness(&QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [4.0, 2.0, 1.0]), &tol());
        assert_eq!((boundary.verdict, boundary.reason), (Verdict::Singular, Reason::ConditionA));
        let generic = real_smoothness(&QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [5.0, 2.0, 1.0]), &tol());
        assert_eq!((generic.verdict, generic.reason), (Verdict::Smooth, Reason::NoCommonRoot));
    }

    #[test]
    fn dependent_quadrics_are_inconclusive_when_b_vanishes() {
        // f3 = 2 f1 and d3 = 2 d1: the common root is b = 0
        let p = QuadricParams::new([2.0; 6], [5.0, 2.0, 10.0]);
        let v = real_smoothness(&p, &tol());
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert_eq!(v.reason, Reason::UndefinedInequality);
    }

    #[test]
    fn complex_smoothness_examples() {
        let eq = complex_smoothness(&QuadricParams::new([-1.0; 6], [3.0, 0.5, 7.0]), &tol());
        assert_eq!(eq.verdict, Verdict::Singular);
        let b = complex_smoothness(&QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [4.0, 2.0, 1.0]), &tol());
        assert_eq!((b.verdict, b.reason), (Verdict::Singular, Reason::ConditionA));
        let g = complex_smoothness(&QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [5.0, 2.0, 1.0]), &tol());
        assert_eq!(g.verdict, Verdict::Smooth);
    }

    #[test]
    fn complex_witness_points_are_singular() {
        let p = constructed(0.3, 0.7, [1.7, -0.4, 2.5], [0.5, 1.0, 0.25]);
        let v = complex_smoothness(&p, &tol());
        assert_eq!(v.verdict, Verdict::Singular);
        assert!(!v.points.is_empty());
        for x in &v.points {
            assert!(residual_norm(&p, x) < 1e-8);
            assert!(jacobian_rank_ratio(&p, x) < 1e-8);
        }
    }

    #[test]
    fn degenerate_point_on_constructed_instance() {
        let p = constructed(1.0, 0.05, [1.3, 0.8, 1.1], [0.4, 0.7, 1.2]);
        let sols = solve_b_system(&p, Field::Real, &tol()).unwrap();
        let sol = sols.iter().find(|s| (s.b.re - 0.05).abs() < 1e-9).expect("constructed root");
        assert_eq!(check_inequalities(sol, &p), Ok(true));
        let x = degenerate_point(&p, sol).unwrap();
        assert!(residual_norm(&p, &x) <= 1e-8);
        assert!(jacobian_rank_ratio(&p, &x) <= 1e-8);
        let verdict = real_smoothness(&p, &tol());
        assert_eq!(verdict.verdict, Verdict::Singular);
        assert!(!verdict.points.is_empty());
    }

    #[test]
    fn swapped_ratio_variant_is_not_singular() {
        // x_{k+3} = ((c_{k+3} - a)/b) x_k instead of ((c_k - a)/b) x_k
        let p = constructed(1.0, 0.5, [1.6, 0.4, 2.2], [0.4, 0.7, 1.2]);
        let sol = solve_b_system(&p, Field::Real, &tol())
            .unwrap()
            .into_iter()
            .find(|s| (s.b.re - 0.5).abs() < 1e-9)
            .unwrap();
        let (a, b) = (sol.a.re, sol.b.re);
        let ratios: [f64; 3] = std::array::from_fn(|k| (p.c[k + 3] - a) / b);
        let y = nonnegative_squares(ratios, p.d[0], p.d[1]);
        let bad_ok = y.is_some_and(|y| {
            let x = y.map(f64::sqrt);
            let pt = Point6::from_real([x[0], x[1], x[2], ratios[0] * x[0], ratios[1] * x[1], ratios[2] * x[2]]);
            residual_norm(&p, &pt) <= 1e-8 && jacobian_rank_ratio(&p, &pt) <= 1e-8
        });
        assert!(!bad_ok);
        let good = degenerate_point(&p, &sol).unwrap();
        assert!(residual_norm(&p, &good) <= 1e-8 && jacobian_rank_ratio(&p, &good) <= 1e-8);
    }

    #[test]
    fn no_real_point_when_ratio_outside_hull() {
        // all kappa = 0.5 -> kappa/(1+kappa^2) = 0.4, but d2/d1 = 0.1
        let a = 1.0;
        let b = 0.5;
        let kappa = [0.5, 0.5, 0.5];
        let c = [a + b * 0.5, a + b * 0.5, a + b * 0.5, a + b / 0.5, a + b / 0.5, a + b / 0.5];
        let d1 = 5.0;
        let d2 = 0.5;
        let p = QuadricParams::new(c, [d1, d2, a * d1 + 2.0 * b * d2]);
        let sol = BSolution::from_ab(&p, c64(a, 0.0), c64(b, 0.0));
        assert!(sol.max_residual() < 1e-14);
        assert_eq!(nonnegative_squares(kappa, d1, d2), None);
        assert_eq!(degenerate_point(&p, &sol), Err(SmoothnessError::NoRealPoint));
    }

    #[test]
    fn real_solutions_are_subset_of_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = constructed(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.1..1.0),
                [rng.gen_range(0.2..3.0), rng.gen_range(-3.0..-0.2), rng.gen_range(0.2..3.0)],
                [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)],
            );
            let real = solve_b_system(&p, Field::Real, &tol()).unwrap();
            let cplx = solve_b_system(&p, Field::Complex, &tol()).unwrap();
            assert!(!real.is_empty());
            for r in &real {
                assert!(cplx.iter().any(|c| (c.b - r.b).norm() <= 1e-9));
            }
        }
    }

    #[test]
    fn complex_boundary_with_negative_d1_is_singular() {
        // d1 = -2 d2: points with x_{k+3} = -x_k make rows 1 and 2 dependent
        let p = QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [-4.0, 2.0, 1.0]);
        assert_eq!(complex_smoothness(&p, &tol()).reason, Reason::ConditionA);
        // u_k^2 = y_k with sum y = -2 and sum (c_k + c_{k+3}) y_k = 1, y3 = 0
        let y = [-7.5, 5.5, 0.0];
        let u: Vec<C64> = y.iter().map(|&v| crate::numerics::principal_sqrt(c64(v, 0.0))).collect();
        let x = Point6([u[0], u[1], u[2], -u[0], -u[1], -u[2]]);
        assert!(residual_norm(&p, &x) < 1e-12);
        assert!(jacobian_rank_ratio(&p, &x) < 1e-12);
    }

    #[test]
    fn d1_zero_solves_for_a() {
        let p = QuadricParams::new([1.0, 1.0, 1.0, 3.0, 3.0, 3.0], [0.0, 1.0, 2.0]);
        // b = d3 / (2 d2) = 1, equations (1 - a)(3 - a) = 1 -> a = 2 +- sqrt 2
        let sols = solve_b_system(&p, Field::Complex, &tol()).unwrap();
        assert_eq!(sols.len(), 2);
        for s in &sols {
            assert!((s.b - c64(1.0, 0.0)).norm() < 1e-15);
            assert!(((s.a.re - 2.0).abs() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_real_points_are_smooth_for_generic_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = [0.7, -0.3, 1.1, 0.2, 0.9, -0.5];
        let c = [1.0, -0.5, 2.0, 0.3, 1.7, -1.2];
        let f = crate::quadrics::evaluate(&QuadricParams::new(c, [0.0; 3]), &Point6::from_real(x));
        let p = QuadricParams::new(c, [f[0].re, f[1].re, f[2].re]);
        assert_eq!(real_smoothness(&p, &tol()).verdict, Verdict::Smooth);
        let s = sample_level_set(&p, Field::Real, 30, 300, &mut rng, &tol());
        assert_eq!(s.points.len(), 30);
        for x in &s.points {
            assert_eq!(x.max_imag(), 0.0);
            assert!(jacobian_rank_ratio(&p, x) >= 1e-6);
        }
    }

    #[test]
    fn projective_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let generic = QuadricParams::new([1.0, -0.5, 2.0, 0.3, 1.7, -1.2], [5.0, 2.0, 1.0]);
        let rep = projective_smoothness(&generic, 10, &mut rng, &tol());
        assert_eq!(rep.charts.len(), 7);
        assert!(rep.all_smooth(), "{rep:?}");
        assert_eq!(
            rep.charts[0].status == ChartStatus::Smooth,
            complex_smoothness(&generic, &tol()).verdict == Verdict::Smooth
        );
        let equal = QuadricParams::new([0.7; 6], [5.0, 2.0, 1.0]);
        let rep = projective_smoothness(&equal, 6, &mut rng, &tol());
        assert!(rep.any_singular());
        assert_eq!(rep.charts[0].status, ChartStatus::SingularWitness);
    }

    #[test]
    fn real_3x3_helper() {
        let x = solve_real_3x3([[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [1.0, 0.0, 1.0]], [2.0, 3.0, 2.0]).unwrap();
        assert_eq!(x, [1.0, 1.0, 1.0]);
    }
}
