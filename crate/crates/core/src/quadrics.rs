//! The three quadratic forms
//!
//! ```text
//! f1(x) = x1^2 + ... + x6^2
//! f2(x) = x1 x4 + x2 x5 + x3 x6
//! f3(x) = c1 x1^2 + ... + c6 x6^2
//! ```
//!
//! and the level data `d = (d1, d2, d3)`, evaluated over R^6 or C^6.

use serde::{Deserialize, Serialize};

use crate::numerics::{CMat, C64};

/// The nine real parameters `c1..c6, d1..d3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadricParams {
    pub c: [f64; 6],
    pub d: [f64; 3],
}

impl QuadricParams {
    pub fn new(c: [f64; 6], d: [f64; 3]) -> Self {
        QuadricParams { c, d }
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().chain(self.d.iter()).all(|x| x.is_finite())
    }

    pub fn c_inf(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn d_inf(&self) -> f64 {
        self.d.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max(1, |c|_inf, |d|_inf)`
    pub fn scale(&self) -> f64 {
        1f64.max(self.c_inf()).max(self.d_inf())
    }

    /// Parameters after the index swap `(1,2,3) <-> (4,5,6)`.
    pub fn swapped(&self) -> Self {
        let c = self.c;
        QuadricParams { c: [c[3], c[4], c[5], c[0], c[1], c[2]], d: self.d }
    }

    /// Read-only symmetric 6x6 matrices `S_j` with `f_j(x) = x^T S_j x`.
    pub fn form_matrices(&self) -> [[[f64; 6]; 6]; 3] {
        let mut m = [[[0.0; 6]; 6]; 3];
        for i in 0..6 {
            m[0][i][i] = 1.0;
            m[2][i][i] = self.c[i];
        }
        for i in 0..3 {
            m[1][i][i + 3] = 0.5;
            m[1][i + 3][i] = 0.5;
        }
        m
    }
}

/// A point of C^6; real points carry zero imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point6(#[serde(with = "crate::cx::array")] pub [C64; 6]);

impl Point6 {
    pub fn zero() -> Self {
        Point6([C64::new(0.0, 0.0); 6])
    }

    pub fn from_real(x: [f64; 6]) -> Self {
        Point6(x.map(|v| C64::new(v, 0.0)))
    }

    pub fn coords(&self) -> &[C64; 6] {
        &self.0
    }

    pub fn swapped(&self) -> Self {
        let x = self.0;
        Point6([x[3], x[4], x[5], x[0], x[1], x[2]])
    }

    pub fn max_abs(&self) -> f64 {
        crate::numerics::max_abs(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|&z| crate::numerics::is_finite(z))
    }

    pub fn max_imag(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

/// `(f1(x), f2(x), f3(x))`
pub fn evaluate(params: &QuadricParams, x: &Point6) -> [C64; 3] {
    let x = &x.0;
    let f1 = x.iter().map(|z| z * z).sum();
    let f2 = x[0] * x[3] + x[1] * x[4] + x[2] * x[5];
    let f3 = x.iter().zip(&params.c).map(|(z, &c)| z * z * c).sum();
    [f1, f2, f3]
}

/// `f_j(x) - d_j`
pub fn residuals(params: &QuadricParams, x: &Point6) -> [C64; 3] {
    let f = evaluate(params, x);
    [f[0] - params.d[0], f[1] - params.d[1], f[2] - params.d[2]]
}

/// Largest residual modulus.
pub fn residual_norm(params: &QuadricParams, x: &Point6) -> f64 {
    residuals(params, x).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// 3x6 matrix of partial derivatives `d f_j / d x_i`.
pub fn jacobian(params: &QuadricParams, x: &Point6) -> CMat {
    let x = &x.0;
    let mut j = CMat::zeros(3, 6);
    for i in 0..6 {
        j.set(0, i, x[i] * 2.0);
        j.set(1, i, x[(i + 3) % 6]);
        j.set(2, i, x[i] * (2.0 * params.c[i]));
    }
    j
}

/// Bilinear forms `B_j(x, v)` with `f_j(x + t v) = f_j(x) + 2 t B_j(x, v) + t^2 f_j(v)`.
pub fn polarize(params: &QuadricParams, x: &Point6, v: &Point6) -> [C64; 3] {
    let (x, v) = (&x.0, &v.0);
    let b1 = (0..6).map(|i| x[i] * v[i]).sum();
    let b2 = (0..3)
        .map(|i| x[i] * v[i + 3] + x[i + 3] * v[i])
        .sum::<C64>()
        * 0.5;
    let b3 = (0..6).map(|i| x[i] * v[i] * params.c[i]).sum();
    [b1, b2, b3]
}

/// Homogenised forms at `X = (X0, X1, .., X6)`:
/// `F_j(X) = f_j(X1..X6) - d_j X0^2`.
pub fn evaluate_homogeneous(params: &QuadricParams, x: &[C64; 7]) -> [C64; 3] {
    let affine = Point6([x[1], x[2], x[3], x[4], x[5], x[6]]);
    let f = evaluate(params, &affine);
    let x0sq = x[0] * x[0];
    [f[0] - x0sq * params.d[0], f[1] - x0sq * params.d[1], f[2] - x0sq * params.d[2]]
}

/// 3x7 Jacobian of the homogenised forms (column 0 is `X0`).
pub fn jacobian_homogeneous(params: &QuadricParams, x: &[C64; 7]) -> CMat {
    let affine = Point6([x[1], x[2], x[3], x[4], x[5], x[6]]);
    let ja = jacobian(params, &affine);
    let mut j = CMat::zeros(3, 7);
    for r in 0..3 {
        j.set(r, 0, x[0] * (-2.0 * params.d[r]));
        for i in 0..6 {
            j.set(r, i + 1, ja.get(r, i));
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;
    use proptest::prelude::*;

    fn params() -> QuadricParams {
        QuadricParams::new([1.5, -2.0, 0.25, 3.0, 0.5, -1.0], [5.0, 2.0, 1.0])
    }

    fn e(i: usize) -> Point6 {
        let mut x = [0.0; 6];
        x[i] = 1.0;
        Point6::from_real(x)
    }

    #[test]
    fn evaluate_examples() {
        let p = params();
        assert_eq!(evaluate(&p, &e(0)), [c64(1.0, 0.0), c64(0.0, 0.0), c64(p.c[0], 0.0)]);
        let x = Point6::from_real([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(evaluate(&p, &x), [c64(2.0, 0.0), c64(1.0, 0.0), c64(p.c[0] + p.c[3], 0.0)]);
        assert_eq!(evaluate(&p, &Point6::zero()), [c64(0.0, 0.0); 3]);
    }

    #[test]
    fn residual_examples() {
        let p = params();
        let r = residuals(&p, &Point6::zero());
        assert_eq!(r, [c64(-5.0, 0.0), c64(-2.0, 0.0), c64(-1.0, 0.0)]);
        let d1 = 3.0f64;
        let on = QuadricParams::new(p.c, [d1, 0.0, p.c[0] * d1]);
        let x = Point6::from_real([d1.sqrt(), 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(residual_norm(&on, &x) < 1e-15);
    }

    #[test]
    fn jacobian_examples() {
        let p = params();
        let j = jacobian(&p, &e(0));
        let expect = [
            [2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [2.0 * p.c[0], 0.0, 0.0, 0.0, 0.0, 0.0],
        ];
        for r in 0..3 {
            for i in 0..6 {
                assert_eq!(j.get(r, i), c64(expect[r][i], 0.0));
            }
        }
        assert_eq!(jacobian(&p, &Point6::zero()).frobenius_sq(), 0.0);
    }

    #[test]
    fn jacobian_matches_form_matrices() {
        let p = params();
        let x = Point6::from_real([0.3, -1.2, 0.7, 2.0, -0.1, 0.4]);
        let j = jacobian(&p, &x);
        let s = p.form_matrices();
        for r in 0..3 {
            for i in 0..6 {
                let grad: f64 = (0..6).map(|k| 2.0 * s[r][i][k] * x.0[k].re).sum();
                assert!((j.get(r, i).re - grad).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn homogeneous_chart_zero_matches_affine() {
        let p = params();
        let x = [c64(0.3, 0.1), c64(-1.0, 0.0), c64(0.5, 2.0), c64(1.0, -1.0), c64(0.0, 0.3), c64(2.0, 0.0)];
        let h = [c64(1.0, 0.0), x[0], x[1], x[2], x[3], x[4], x[5]];
        let a = residuals(&p, &Point6(x));
        let b = evaluate_homogeneous(&p, &h);
        for k in 0..3 {
            assert!((a[k] - b[k]).norm() < 1e-14);
        }
        // Euler: sum X_k dF/dX_k = 2 F
        let jh = jacobian_homogeneous(&p, &h);
        for r in 0..3 {
            let euler: C64 = (0..7).map(|k| jh.get(r, k) * h[k]).sum();
            assert!((euler - b[r] * 2.0).norm() < 1e-13);
        }
    }

    fn arb_c64() -> impl Strategy<Value = C64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c64(a, b))
    }

    fn arb_point() -> impl Strategy<Value = Point6> {
        proptest::array::uniform6(arb_c64()).prop_map(Point6)
    }

    fn arb_params() -> impl Strategy<Value = QuadricParams> {
        (proptest::array::uniform6(-4.0..4.0f64), proptest::array::uniform3(-4.0..4.0f64))
            .prop_map(|(c, d)| QuadricParams::new(c, d))
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_differences(p in arb_params(), x in proptest::array::uniform6(-2.0..2.0f64)) {
            let h = 1e-6;
            let j = jacobian(&p, &Point6::from_real(x));
            for i in 0..6 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fp = evaluate(&p, &Point6::from_real(xp));
                let fm = evaluate(&p, &Point6::from_real(xm));
                for r in 0..3 {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    prop_assert!((fd - j.get(r, i)).norm() < 1e-6);
                }
            }
        }

        #[test]
        fn polarization_identities(p in arb_params(), x in arb_point(), v in arb_point(), alpha in arb_c64()) {
            let diag = polarize(&p, &x, &x);
            let f = evaluate(&p, &x);
            for r in 0..3 {
                prop_assert!((diag[r] - f[r]).norm() <= 1e-12 * (1.0 + f[r].norm()));
            }
            // symmetric formula
            prop_assert_eq!(polarize(&p, &x, &v), polarize(&p, &v, &x));
            // linear in v
            let scaled = Point6(v.0.map(|z| z * alpha));
            let b = polarize(&p, &x, &v);
            let bs = polarize(&p, &x, &scaled);
            for r in 0..3 {
                prop_assert!((bs[r] - b[r] * alpha).norm() <= 1e-12 * (1.0 + b[r].norm() * alpha.norm()));
            }
            // expansion f(x+v) - f(x) - f(v) = 2 B(x, v)
            let sum = Point6(std::array::from_fn(|i| x.0[i] + v.0[i]));
            let fs = evaluate(&p, &sum);
            let fv = evaluate(&p, &v);
            for r in 0..3 {
                let lhs = fs[r] - f[r] - fv[r];
                let scale = 1.0 + fs[r].norm() + f[r].norm() + fv[r].norm();
                prop_assert!((lhs - b[r] * 2.0).norm() <= 1e-10 * scale);
            }
        }

        #[test]
        fn index_swap_symmetry(p in arb_params(), x in arb_point()) {
            let a = evaluate(&p, &x);
            let b = evaluate(&p.swapped(), &x.swapped());
            for r in 0..3 {
                prop_assert!((a[r] - b[r]).norm() <= 1e-12 * (1.0 + a[r].norm()));
            }
        }
    }
}
