//! Parameter search for instances where every smoothness and certificate
//! condition holds, and a sampling hunt for lines meeting a certified line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{certificate_from, certify_no_real_points, check_hypotheses, AffineLine6, CertVerdict, RealnessCertificate};
use crate::line::{construct_line, ComplexLine};
use crate::numerics::{c64, null_space, solve_linear, CMat, C64};
use crate::quadrics::{evaluate, polarize, residual_norm, Point6, QuadricParams};
use crate::smoothness::{complex_smoothness, real_smoothness, Verdict};
use crate::tolerances::Tolerances;

/// `c1c4(c2+c5-c3-c6) + c2c5(c3+c6-c1-c4) + c3c6(c1+c4-c2-c5)`; zero on
/// the integrable locus.
pub fn integrability_indicator(c: &[f64; 6]) -> f64 {
    c[0] * c[3] * (c[1] + c[4] - c[2] - c[5])
        + c[1] * c[4] * (c[2] + c[5] - c[0] - c[3])
        + c[2] * c[5] * (c[0] + c[3] - c[1] - c[4])
}

/// `max(1, |c|)^3`, the natural size of the indicator.
pub fn integrability_scale(c: &[f64; 6]) -> f64 {
    c.iter().fold(1.0f64, |m, x| m.max(x.abs())).powi(3)
}

/// The indicator is affine in `c6`; returns the `c6` that zeroes it.
pub fn integrable_c6(c: &[f64; 6]) -> Option<f64> {
    let slope = c[2] * (c[0] + c[3] - c[1] - c[4]) - c[0] * c[3] + c[1] * c[4];
    let mut z = *c;
    z[5] = 0.0;
    let offset = integrability_indicator(&z);
    (slope.abs() > 1e-12 * integrability_scale(c)).then(|| -offset / slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Grid,
    UniformRandom,
    CoordinateRefine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrability {
    Either,
    /// `c6` is solved from the other coefficients so the indicator vanishes.
    Integrable,
    /// `|indicator| >= 1e-6 * scale`.
    NonIntegrable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Filters {
    pub require_real_smooth: bool,
    pub require_complex_smooth: bool,
    pub integrability: Integrability,
}

impl Default for Filters {
    fn default() -> Self {
        Filters { require_real_smooth: true, require_complex_smooth: true, integrability: Integrability::Either }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub c_ranges: [[f64; 2]; 6],
    pub d_ranges: [[f64; 2]; 3],
    pub strategy: Strategy,
    pub budget: usize,
    pub seed: u64,
    pub filters: Filters,
    /// Stop after this many hits.
    pub max_hits: Option<usize>,
    /// Evaluate candidates on the rayon pool (grid and random strategies).
    pub parallel: bool,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            c_ranges: [[-3.0, 3.0]; 6],
            d_ranges: [[4.0, 8.0], [-2.0, 2.0], [-3.0, 3.0]],
            strategy: Strategy::UniformRandom,
            budget: 1000,
            seed: 0,
            filters: Filters::default(),
            max_hits: None,
            parallel: false,
        }
    }
}

impl SearchSpec {
    fn ranges(&self) -> [[f64; 2]; 9] {
        std::array::from_fn(|i| if i < 6 { self.c_ranges[i] } else { self.d_ranges[i - 6] })
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.budget == 0 {
            return Err(SearchError::InvalidSpec("budget must be at least 1".into()));
        }
        for [lo, hi] in self.ranges() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(SearchError::InvalidSpec(format!("empty or non-finite range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectStage {
    Integrability,
    RealSmooth,
    ComplexSmooth,
    Line,
    Certify,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub evaluations: usize,
    pub hits: usize,
    pub rejected_integrability: usize,
    pub rejected_real_smooth: usize,
    pub rejected_complex_smooth: usize,
    pub rejected_line: usize,
    pub rejected_certify: usize,
}

impl SearchStats {
    fn record(&mut self, outcome: &Outcome) {
        self.evaluations += 1;
        match outcome {
            Outcome::Hit(_) => self.hits += 1,
            Outcome::Rejected(s) => match s {
                RejectStage::Integrability => self.rejected_integrability += 1,
                RejectStage::RealSmooth => self.rejected_real_smooth += 1,
                RejectStage::ComplexSmooth => self.rejected_complex_smooth += 1,
                RejectStage::Line => self.rejected_line += 1,
                RejectStage::Certify => self.rejected_certify += 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    /// Evaluation index that produced the hit.
    pub index: usize,
    pub params: QuadricParams,
    pub line: ComplexLine,
    pub certificate: RealnessCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub spec: SearchSpec,
    pub hits: Vec<SearchHit>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("invalid search spec: {0}")]
    InvalidSpec(String),
    #[error("budget exhausted after {} evaluations without a hit", .0.evaluations)]
    BudgetExhausted(SearchStats),
}

#[derive(Debug, Clone)]
enum Outcome {
    Hit(Box<SearchHit>),
    Rejected(RejectStage),
}

impl Outcome {
    fn progress(&self) -> usize {
        match self {
            Outcome::Rejected(RejectStage::Integrability) => 0,
            Outcome::Rejected(RejectStage::RealSmooth) => 1,
            Outcome::Rejected(RejectStage::ComplexSmooth) => 2,
            Outcome::Rejected(RejectStage::Line) => 3,
            Outcome::Rejected(RejectStage::Certify) => 4,
            Outcome::Hit(_) => 5,
        }
    }
}

/// Runs every check on one parameter set.
fn evaluate_candidate(index: usize, mut params: QuadricParams, filters: &Filters, tol: &Tolerances) -> Outcome {
    match filters.integrability {
        Integrability::Either => {}
        Integrability::Integrable => match integrable_c6(&params.c) {
            Some(c6) => params.c[5] = c6,
            None => return Outcome::Rejected(RejectStage::Integrability),
        },
        Integrability::NonIntegrable => {
            if integrability_indicator(&params.c).abs() < 1e-6 * integrability_scale(&params.c) {
                return Outcome::Rejected(RejectStage::Integrability);
            }
        }
    }
    if filters.require_real_smooth && real_smoothness(&params, tol).verdict != Verdict::Smooth {
        return Outcome::Rejected(RejectStage::RealSmooth);
    }
    if filters.require_complex_smooth && complex_smoothness(&params, tol).verdict != Verdict::Smooth {
        return Outcome::Rejected(RejectStage::ComplexSmooth);
    }
    let Ok(lines) = construct_line(&params, tol) else {
        return Outcome::Rejected(RejectStage::Line);
    };
    for line in lines {
        let certificate = certify_no_real_points(&params, &line, tol);
        if certificate.verdict == CertVerdict::Certified {
            return Outcome::Hit(Box::new(SearchHit { index, params, line, certificate }));
        }
    }
    Outcome::Rejected(RejectStage::Certify)
}

fn task_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn params_from(v: [f64; 9]) -> QuadricParams {
    QuadricParams::new([v[0], v[1], v[2], v[3], v[4], v[5]], [v[6], v[7], v[8]])
}

fn draw_uniform(ranges: &[[f64; 2]; 9], rng: &mut ChaCha8Rng) -> [f64; 9] {
    std::array::from_fn(|i| {
        let [lo, hi] = ranges[i];
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..hi)
        }
    })
}

/// Point `index` of a grid with `per_axis` nodes on every non-degenerate
/// axis, in mixed-radix order.
fn grid_point(ranges: &[[f64; 2]; 9], per_axis: usize, index: usize) -> [f64; 9] {
    let mut rest = index;
    std::array::from_fn(|i| {
        let [lo, hi] = ranges[i];
        if lo == hi {
            return lo;
        }
        let k = rest % per_axis;
        rest /= per_axis;
        lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
    })
}

fn grid_shape(ranges: &[[f64; 2]; 9], budget: usize) -> (usize, usize) {
    let dims = ranges.iter().filter(|[lo, hi]| lo < hi).count() as u32;
    if dims == 0 {
        return (1, 1);
    }
    let mut per_axis = 2usize;
    while (per_axis + 1).checked_pow(dims).is_some_and(|n| n <= budget) {
        per_axis += 1;
    }
    let total = per_axis.checked_pow(dims).unwrap_or(usize::MAX).min(budget);
    (per_axis, total)
}

/// Deterministic search; returns every hit (up to `max_hits`) with
/// rejection statistics, or `BudgetExhausted`.
pub fn parameter_search(spec: &SearchSpec, tol: &Tolerances) -> Result<SearchOutcome, SearchError> {
    spec.validate()?;
    let ranges = spec.ranges();
    let max_hits = spec.max_hits.unwrap_or(usize::MAX);
    let mut stats = SearchStats::default();
    let mut hits = Vec::new();
    match spec.strategy {
        Strategy::Grid | Strategy::UniformRandom => {
            let total = match spec.strategy {
                Strategy::Grid => grid_shape(&ranges, spec.budget).1,
                _ => spec.budget,
            };
            let per_axis = grid_shape(&ranges, spec.budget).0;
            let candidate = |i: usize| -> QuadricParams {
                match spec.strategy {
                    Strategy::Grid => params_from(grid_point(&ranges, per_axis, i)),
                    _ => params_from(draw_uniform(&ranges, &mut task_rng(spec.seed, i))),
                }
            };
            let chunk = if spec.parallel { 256 } else { 1 };
            let mut start = 0;
            'outer: while start < total {
                let end = (start + chunk).min(total);
                let outcomes: Vec<Outcome> = if spec.parallel {
                    (start..end).into_par_iter().map(|i| evaluate_candidate(i, candidate(i), &spec.filters, tol)).collect()
                } else {
                    (start..end).map(|i| evaluate_candidate(i, candidate(i), &spec.filters, tol)).collect()
                };
                for o in outcomes {
                    stats.record(&o);
                    if let Outcome::Hit(h) = o {
                        hits.push(*h);
                        if hits.len() >= max_hits {
                            break 'outer;
                        }
                    }
                }
                start = end;
            }
        }
        Strategy::CoordinateRefine => {
            let free: Vec<usize> = (0..9).filter(|&i| ranges[i][0] < ranges[i][1]).collect();
            let mut current = draw_uniform(&ranges, &mut task_rng(spec.seed, 0));
            let mut current_progress = None;
            let mut since_restart = 0usize;
            for i in 0..spec.budget {
                let mut rng = task_rng(spec.seed, i);
                let mut x = current;
                if current_progress.is_some() && !free.is_empty() {
                    let axis = free[since_restart % free.len()];
                    let [lo, hi] = ranges[axis];
                    let step = (hi - lo) * 0.25 * 0.5f64.powi(((since_restart / free.len()) % 6) as i32);
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    x[axis] = (x[axis] + sign * step).clamp(lo, hi);
                }
                let o = evaluate_candidate(i, params_from(x), &spec.filters, tol);
                stats.record(&o);
                let progress = o.progress();
                since_restart += 1;
                if let Outcome::Hit(h) = o {
                    hits.push(*h);
                    if hits.len() >= max_hits {
                        break;
                    }
                    current = draw_uniform(&ranges, &mut rng);
                    current_progress = None;
                    since_restart = 0;
                } else if current_progress.is_none_or(|p| progress >= p) {
                    current = x;
                    current_progress = Some(progress);
                }
            }
        }
    }
    if hits.is_empty() {
        return Err(SearchError::BudgetExhausted(stats));
    }
    Ok(SearchOutcome { spec: *spec, hits, stats })
}

/// A direction `v` (with `|v|_inf = 1`) such that `p + s v` lies on the
/// level set for all `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoundDirection {
    pub v: Point6,
    /// Largest of the six membership values, relative to the point scale.
    pub residual: f64,
    /// Matches the direction of the line the point was sampled from.
    pub is_base: bool,
    /// Number of starts that converged to this direction.
    pub hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSearch {
    pub directions: Vec<FoundDirection>,
    pub starts: usize,
    pub converged: usize,
}

/// `max(1, |c|, |d|) * max(1, |p|^2)`
fn direction_scale(params: &QuadricParams, p: &Point6) -> f64 {
    params.scale() * p.max_abs().powi(2).max(1.0)
}

/// The six membership values `f_j(v)` and `B_j(p, v)`, with `v` scaled to
/// `|v|_inf = 1`.
pub fn direction_membership(params: &QuadricParams, p: &Point6, v: &Point6) -> [C64; 6] {
    let q = evaluate(params, v);
    let b = polarize(params, p, v);
    [q[0], q[1], q[2], b[0], b[1], b[2]]
}

/// Scales `v` so that its largest entry equals 1.
pub fn normalize_direction(v: &Point6) -> Point6 {
    let k = (0..6).fold(0, |best, i| if v.0[i].norm() > v.0[best].norm() { i } else { best });
    let pivot = v.0[k];
    Point6(v.0.map(|z| z / pivot))
}

/// Sine of the angle between two complex directions.
pub fn projective_distance(v: &Point6, w: &Point6) -> f64 {
    let vv: f64 = v.0.iter().map(|z| z.norm_sqr()).sum();
    let ww: f64 = w.0.iter().map(|z| z.norm_sqr()).sum();
    let vw: C64 = v.0.iter().zip(&w.0).map(|(a, b)| a.conj() * b).sum();
    (1.0 - vw.norm_sqr() / (vv * ww)).max(0.0).sqrt()
}

fn quad_form(m: &[[C64; 3]; 3], z: &[C64; 3]) -> C64 {
    (0..3).map(|i| (0..3).map(|j| m[i][j] * z[i] * z[j]).sum::<C64>()).sum()
}

fn mat_vec(m: &[[C64; 3]; 3], z: &[C64; 3]) -> [C64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| m[i][j] * z[j]).sum())
}

fn random_c3(rng: &mut ChaCha8Rng) -> [C64; 3] {
    std::array::from_fn(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Directions of lines on the level set through `p`.
///
/// The three polar constraints cut a 3-dimensional space `N`; restricted to
/// it the quadratic constraints are three conics `M_j = N^T S_j N`. Each
/// start runs Newton on two random combinations of the conics plus a random
/// affine chart, and keeps limits that also satisfy every conic. Start `i`
/// draws from stream `i` of `seed`, so a longer run extends a shorter one.
pub fn directions_through_point(
    params: &QuadricParams,
    p: &Point6,
    base: Option<&Point6>,
    starts: usize,
    seed: u64,
    tol: &Tolerances,
) -> DirectionSearch {
    let scale = direction_scale(params, p);
    let forms = params.form_matrices();
    let rows: Vec<Vec<C64>> = forms
        .iter()
        .map(|s| (0..6).map(|i| (0..6).map(|k| p.0[k] * s[i][k]).sum()).collect())
        .collect();
    let basis = null_space(&CMat::from_rows(&rows), 1e-12);
    let mut out = DirectionSearch { directions: Vec::new(), starts, converged: 0 };
    if basis.len() != 3 {
        return out;
    }
    let conics: Vec<[[C64; 3]; 3]> = forms
        .iter()
        .map(|s| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    (0..6).map(|i| (0..6).map(|k| basis[a][i] * s[i][k] * basis[b][k]).sum::<C64>()).sum()
                })
            })
        })
        .collect();
    let base_dir = base.map(normalize_direction);
    for i in 0..starts {
        let mut rng = task_rng(seed, i);
        let alpha = random_c3(&mut rng);
        let beta = random_c3(&mut rng);
        let h = random_c3(&mut rng);
        let combine = |w: &[C64; 3]| -> [[C64; 3]; 3] {
            std::array::from_fn(|a| std::array::from_fn(|b| (0..3).map(|j| w[j] * conics[j][a][b]).sum()))
        };
        let (q1, q2) = (combine(&alpha), combine(&beta));
        let mut z = random_c3(&mut rng);
        let hz: C64 = (0..3).map(|k| h[k] * z[k]).sum();
        if hz.norm() < 1e-8 {
            continue;
        }
        z = z.map(|x| x / hz);
        let mut ok = false;
        for _ in 0..60 {
            let f = [quad_form(&q1, &z), quad_form(&q2, &z), (0..3).map(|k| h[k] * z[k]).sum::<C64>() - 1.0];
            let fn_ = f.iter().fold(0.0f64, |m, x| m.max(x.norm()));
            let zn = z.iter().fold(0.0f64, |m, x| m.max(x.norm()));
            if !zn.is_finite() || zn > 1e12 {
                break;
            }
            if fn_ <= 1e-14 * scale * zn * zn.max(1.0) {
                ok = true;
                break;
            }
            let g1 = mat_vec(&q1, &z);
            let g2 = mat_vec(&q2, &z);
            let j = CMat::from_rows(&[g1.map(|x| x * 2.0).to_vec(), g2.map(|x| x * 2.0).to_vec(), h.to_vec()]);
            let Some(step) = solve_linear(&j, &f) else { break };
            for k in 0..3 {
                z[k] -= step[k];
            }
        }
        let v = Point6(std::array::from_fn(|r| (0..3).map(|k| basis[k][r] * z[k]).sum()));
        if v.max_abs() == 0.0 || !v.is_finite() {
            continue;
        }
        let v = normalize_direction(&v);
        let residual = direction_membership(params, p, &v).iter().fold(0.0f64, |m, x| m.max(x.norm())) / scale;
        if !ok && residual > tol.direction_residual {
            continue;
        }
        if residual > tol.direction_residual {
            continue;
        }
        out.converged += 1;
        if let Some(d) = out.directions.iter_mut().find(|d| projective_distance(&d.v, &v) <= 1e-6) {
            d.hits += 1;
            if residual < d.residual {
                d.v = v;
                d.residual = residual;
            }
            continue;
        }
        let is_base = base_dir.is_some_and(|b| projective_distance(&b, &v) <= 1e-6);
        out.directions.push(FoundDirection { v, residual, is_base, hits: 1 });
    }
    out
}

/// One sampled point on the base line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSample {
    #[serde(with = "crate::cx")]
    pub base_point_t: C64,
    pub point_residual: f64,
    pub base_recovered: bool,
    pub directions_found: Vec<FoundDirection>,
    /// One certificate per entry of `directions_found`.
    pub per_direction_certificates: Vec<RealnessCertificate>,
}

/// Heuristic report: a clean result is evidence, not proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub heuristic: bool,
    pub base_certificate: RealnessCertificate,
    pub window_radius: f64,
    pub starts_per_point: usize,
    pub coverage: usize,
    pub samples: Vec<BaseSample>,
    /// Non-base directions whose line carries a real point.
    pub flagged: usize,
    pub all_base_recovered: bool,
}

/// Radical inverse of `i` in `base`.
pub fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Samples `n_base_points` parameters `t` in the disk
/// `|t| <= 4 (1 + |a|/|b|)` (Halton in bases 2 and 3), finds directions
/// through each `line(t)`, and certifies every found line with the oracle.
/// The base direction keeps the theorem's hypothesis flags.
pub fn scan_intersecting_lines(
    params: &QuadricParams,
    line: &ComplexLine,
    n_base_points: usize,
    starts: usize,
    seed: u64,
    tol: &Tolerances,
) -> IntersectionReport {
    let base_certificate = certify_no_real_points(params, line, tol);
    let flags = check_hypotheses(params, line, tol);
    let (a, b) = (line.full_a(), line.full_b());
    let radius = 4.0 * (1.0 + a.max_abs() / b.max_abs());
    let mut samples = Vec::with_capacity(n_base_points);
    let mut flagged = 0;
    for i in 0..n_base_points {
        let r = radius * halton(i + 1, 2).sqrt();
        let theta = 2.0 * std::f64::consts::PI * halton(i + 1, 3);
        let t = C64::from_polar(r, theta);
        let p = line.point(t);
        let search = directions_through_point(params, &p, Some(&b), starts, seed.wrapping_add(i as u64), tol);
        let certs: Vec<RealnessCertificate> = search
            .directions
            .iter()
            .map(|d| {
                let through = AffineLine6 { a: p, b: d.v };
                let cert = certificate_from(d.is_base.then_some(flags), &through, tol);
                if !d.is_base && cert.verdict == CertVerdict::Refuted {
                    flagged += 1;
                }
                cert
            })
            .collect();
        samples.push(BaseSample {
            base_point_t: t,
            point_residual: residual_norm(params, &p),
            base_recovered: search.directions.iter().any(|d| d.is_base),
            directions_found: search.directions,
            per_direction_certificates: certs,
        });
    }
    IntersectionReport {
        heuristic: true,
        base_certificate,
        window_radius: radius,
        starts_per_point: starts,
        coverage: samples.len(),
        all_base_recovered: samples.iter().all(|s| s.base_recovered),
        samples,
        flagged,
    }
}
