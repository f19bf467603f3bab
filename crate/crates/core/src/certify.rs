//! Absence of real points on a constructed line: the five hypotheses of the
//! no-real-point theorem, plus an independent closed-form oracle.

use serde::{Deserialize, Serialize};

use crate::line::ComplexLine;
use crate::numerics::{c64, lstsq_2x2, C64};
use crate::quadrics::{Point6, QuadricParams};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    /// `(d2/lambda)(c2 + lambda^2 c5) - d3 != 0`
    pub h1: bool,
    /// not (`c1 = c2` and `c4 = c5`)
    pub h2: bool,
    /// not (`c1 = c3` and `c4 = c6`)
    pub h3: bool,
    /// `mu` differs from `lambda` and `-lambda`
    pub h4: bool,
    /// not all of `a1, a2, a3` are real
    pub h5: bool,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3 && self.h4 && self.h5
    }

    pub fn failing(&self) -> Vec<&'static str> {
        [(self.h1, "h1"), (self.h2, "h2"), (self.h3, "h3"), (self.h4, "h4"), (self.h5, "h5")]
            .into_iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, n)| n)
            .collect()
    }
}

/// Equality tests use `tau_eq * scale`; realness uses `|Im a_k| > tau_eq`.
pub fn check_hypotheses(params: &QuadricParams, line: &ComplexLine, tol: &Tolerances) -> HypothesisFlags {
    let c = &params.c;
    let eq = tol.tau_eq * params.scale();
    let lambda = line.lambda;
    let h1_value = params.d[1] / lambda * (lambda * lambda * c[4] + c[1]) - params.d[2];
    let same = |x: f64, y: f64| (x - y).abs() <= eq;
    HypothesisFlags {
        h1: h1_value.norm() > eq * (1.0 + lambda.norm()),
        h2: !(same(c[0], c[1]) && same(c[3], c[4])),
        h3: !(same(c[0], c[2]) && same(c[3], c[5])),
        h4: (line.mu - lambda).norm() > tol.tau_eq && (line.mu + lambda).norm() > tol.tau_eq,
        h5: line.a.iter().any(|a| a.im.abs() > tol.tau_eq),
    }
}

/// A line `A + t B` in C^6 with no structural assumption on `A`, `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineLine6 {
    pub a: Point6,
    pub b: Point6,
}

impl AffineLine6 {
    pub fn point(&self, t: C64) -> Point6 {
        Point6(std::array::from_fn(|i| self.a.0[i] + t * self.b.0[i]))
    }
}

impl From<&ComplexLine> for AffineLine6 {
    fn from(l: &ComplexLine) -> Self {
        AffineLine6 { a: l.full_a(), b: l.full_b() }
    }
}

/// `F(t) = sum_k (Im(A_k + t B_k))^2`.
pub fn imaginary_norm_sq(line: &AffineLine6, t: C64) -> f64 {
    line.point(t).0.iter().map(|z| z.im * z.im).sum()
}

/// Exact minimiser of [`imaginary_norm_sq`].
///
/// With `t = u + i v`, `Im(A_k + t B_k) = Im A_k + u Im B_k + v Re B_k`, so
/// `F` is a convex quadratic in `(u, v)`; the normal equations are 2x2 and
/// a flat direction falls back to the minimum-norm solution.
pub fn min_imaginary_norm(line: &AffineLine6) -> (C64, f64) {
    let mut m = [[0.0; 2]; 2];
    let mut rhs = [0.0; 2];
    for k in 0..6 {
        let row = [line.b.0[k].im, line.b.0[k].re];
        let g = line.a.0[k].im;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] -= row[i] * g;
        }
    }
    let [u, v] = lstsq_2x2(m, rhs);
    let t = c64(u, v);
    (t, imaginary_norm_sq(line, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertVerdict {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealnessCertificate {
    /// `None` when the line is not of the constructed form and only the
    /// oracle applies.
    pub hypothesis_flags: Option<HypothesisFlags>,
    pub oracle_min: f64,
    #[serde(with = "crate::cx")]
    pub oracle_argmin: C64,
    /// `tau_r (1 + |a|^2)`: Certified needs `oracle_min` at or above it,
    /// Refuted needs at most a tenth of it.
    pub threshold: f64,
    pub verdict: CertVerdict,
    pub note: Option<String>,
}

fn threshold(line: &AffineLine6, tol: &Tolerances) -> f64 {
    tol.tau_r * (1.0 + line.a.max_abs().powi(2))
}

/// Hypothesis path and oracle path combined; Certified only when both agree.
pub fn certify_no_real_points(params: &QuadricParams, line: &ComplexLine, tol: &Tolerances) -> RealnessCertificate {
    let flags = check_hypotheses(params, line, tol);
    certificate_from(Some(flags), &AffineLine6::from(line), tol)
}

/// Certificate for `line` given the hypothesis flags of the constructed line
/// it parametrises (`None`: oracle only, never Certified).
pub fn certificate_from(flags: Option<HypothesisFlags>, line: &AffineLine6, tol: &Tolerances) -> RealnessCertificate {
    let (t, value) = min_imaginary_norm(line);
    let tau = threshold(line, tol);
    let all = flags.is_some_and(|f| f.all());
    let (verdict, note) = if value <= tau / 10.0 {
        let note = if all { "real point found although every hypothesis holds" } else { "real point found" };
        (CertVerdict::Refuted, Some(note.to_string()))
    } else if all && value >= tau {
        (CertVerdict::Certified, None)
    } else if all {
        (CertVerdict::Inconclusive, Some("oracle minimum in the ambiguous band".to_string()))
    } else if let Some(f) = flags {
        let note = format!(
            "hypotheses {} fail but the oracle finds no real point; the theorem is sufficient, not necessary",
            f.failing().join(",")
        );
        (CertVerdict::Inconclusive, Some(note))
    } else {
        (CertVerdict::Inconclusive, Some("no real point found by the oracle".to_string()))
    };
    RealnessCertificate { hypothesis_flags: flags, oracle_min: value, oracle_argmin: t, threshold: tau, verdict, note }
}

/// Oracle-only certificate for an arbitrary line: Refuted or Inconclusive.
pub fn certify_oracle_only(line: &AffineLine6, tol: &Tolerances) -> RealnessCertificate {
    certificate_from(None, line, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::{b_from_mu, construct_line, line_relative_residual};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn real_line() -> ComplexLine {
        ComplexLine {
            a: [c64(1.0, 0.0), c64(-0.5, 0.0), c64(0.25, 0.0)],
            b: [c64(0.3, 0.0), c64(1.0, 0.0), c64(-2.0, 0.0)],
            lambda: c64(2.0, 0.0),
            mu: c64(0.5, 0.0),
            branch: [1, 1, 1],
            scale_s: c64(1.0, 0.0),
        }
    }

    /// Dense grid over a square, zoomed around the best cell.
    fn grid_min(line: &AffineLine6, center: C64, half: f64) -> f64 {
        let (mut c, mut h) = (center, half);
        let mut best = f64::INFINITY;
        for _ in 0..12 {
            let n = 100;
            let mut arg = c;
            for i in 0..=n {
                for j in 0..=n {
                    let t = c + c64(h * (2.0 * i as f64 / n as f64 - 1.0), h * (2.0 * j as f64 / n as f64 - 1.0));
                    let f = imaginary_norm_sq(line, t);
                    if f < best {
                        best = f;
                        arg = t;
                    }
                }
            }
            c = arg;
            h *= 0.1;
        }
        best
    }

    #[test]
    fn real_line_has_zero_minimum() {
        let l = AffineLine6::from(&real_line());
        let (_, v) = min_imaginary_norm(&l);
        assert!(v <= 1e-24);
        assert_eq!(imaginary_norm_sq(&l, c64(3.7, 0.0)), 0.0);
    }

    #[test]
    fn constant_imaginary_part_gives_at_least_one() {
        let mut l = real_line();
        l.a[0] = c64(0.0, 1.0);
        l.b[0] = c64(0.0, 0.0);
        let (_, v) = min_imaginary_norm(&AffineLine6::from(&l));
        assert!(v >= 1.0);
    }

    #[test]
    fn flat_direction_uses_minimum_norm() {
        // B = 0: every t is optimal; the minimiser reported is t = 0
        let l = AffineLine6 { a: Point6([c64(0.0, 2.0); 6]), b: Point6::zero() };
        let (t, v) = min_imaginary_norm(&l);
        assert_eq!(t, c64(0.0, 0.0));
        assert!((v - 24.0).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_examples() {
        let p = QuadricParams::new([1.0, 1.0, 3.0, 4.0, 4.0, 6.0], [5.0, 2.0, 1.0]);
        let f = check_hypotheses(&p, &real_line(), &tol());
        assert!(!f.h2);
        assert!(f.h3);
        assert!(!f.h5);
        let mut l = real_line();
        l.mu = -l.lambda;
        assert!(!check_hypotheses(&p, &l, &tol()).h4);
    }

    #[test]
    fn real_line_is_refuted() {
        let p = QuadricParams::new([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [5.0, 2.0, 1.0]);
        let cert = certify_no_real_points(&p, &real_line(), &tol());
        assert_eq!(cert.verdict, CertVerdict::Refuted);
    }

    #[test]
    fn constructed_lines_are_sound_and_match_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut certified = 0;
        for _ in 0..30 {
            let c = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let p = QuadricParams::new(c, [rng.gen_range(4.0..8.0), rng.gen_range(0.5..2.0), rng.gen_range(-3.0..3.0)]);
            let Ok(lines) = construct_line(&p, &tol()) else { continue };
            for l in &lines {
                assert!(line_relative_residual(&p, l) <= 1e-8);
                let cert = certify_no_real_points(&p, l, &tol());
                if cert.hypothesis_flags.unwrap().all() {
                    assert!(cert.oracle_min > cert.threshold / 10.0, "{cert:?}");
                }
                if cert.verdict == CertVerdict::Certified {
                    certified += 1;
                    let aff = AffineLine6::from(l);
                    let half = 4.0 * (1.0 + aff.a.max_abs() / aff.b.max_abs());
                    let g = grid_min(&aff, c64(0.0, 0.0), half.max(2.0 * cert.oracle_argmin.norm()));
                    assert!((g - cert.oracle_min).abs() <= 1e-6 * cert.oracle_min.max(1e-300), "{g} {}", cert.oracle_min);
                }
            }
        }
        assert!(certified > 0);
    }

    proptest! {
        #[test]
        fn oracle_is_a_lower_bound(
            are in prop::array::uniform6(-3.0f64..3.0),
            aim in prop::array::uniform6(-3.0f64..3.0),
            bre in prop::array::uniform6(-3.0f64..3.0),
            bim in prop::array::uniform6(-3.0f64..3.0),
            tre in -10.0f64..10.0,
            tim in -10.0f64..10.0,
        ) {
            let l = AffineLine6 {
                a: Point6(std::array::from_fn(|k| c64(are[k], aim[k]))),
                b: Point6(std::array::from_fn(|k| c64(bre[k], bim[k]))),
            };
            let (_, v) = min_imaginary_norm(&l);
            let f = imaginary_norm_sq(&l, c64(tre, tim));
            prop_assert!(v <= f + 1e-12 * (1.0 + f));
        }

        /// Real ratios `b2/b1`, `b3/b1` together with `sum b^2 = 0` force `b = 0`.
        #[test]
        fn real_ratios_force_zero_b(c in prop::array::uniform6(-5.0f64..5.0), re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let p = QuadricParams::new(c, [5.0, 2.0, 1.0]);
            let b = b_from_mu(&p, c64(re, im), [1, 1, 1]);
            let scale = b.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0);
            if b[0].norm() > 1e-8 * scale {
                let r2 = b[1] / b[0];
                let r3 = b[2] / b[0];
                if r2.im.abs() <= 1e-10 && r3.im.abs() <= 1e-10 {
                    prop_assert!(b.iter().all(|z| z.norm() <= 1e-8 * scale));
                }
            }
        }
    }
}
