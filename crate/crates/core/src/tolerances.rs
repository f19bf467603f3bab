use serde::{Deserialize, Serialize};

/// Every tolerance the analyses use, in one place.
///
/// Values are relative; each consumer multiplies by the scale documented at
/// the use site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Common-root test for the three b-quadratics.
    pub tau_b: f64,
    /// Acceptance of a mu root on its defining equation.
    pub tau_mu: f64,
    /// Certificate threshold on the minimum squared imaginary norm.
    pub tau_r: f64,
    /// Equality tests in the line hypotheses.
    pub tau_eq: f64,
    /// Line membership (nine expansion coefficients).
    pub line_residual: f64,
    /// Membership of directions found through a point.
    pub direction_residual: f64,
    /// Projection onto level sets stops at this residual.
    pub projection_residual: f64,
    /// `sigma_3 / sigma_1` at or above which a sampled point counts as smooth.
    pub smooth_rank_ratio: f64,
    /// `sigma_3 / sigma_1` at or below which a point is a singular witness.
    pub singular_rank_ratio: f64,
    /// Two s^2 determinations must agree to this relative tolerance.
    pub s2_consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_b: 1e-9,
            tau_mu: 1e-8,
            tau_r: 1e-8,
            tau_eq: 1e-10,
            line_residual: 1e-8,
            direction_residual: 1e-7,
            projection_residual: 1e-10,
            smooth_rank_ratio: 1e-6,
            singular_rank_ratio: 1e-8,
            s2_consistency: 1e-7,
        }
    }
}

impl Tolerances {
    /// Names accepted by the `--tol-<name>` flags and `tol_<name>` config keys.
    pub const NAMES: [&'static str; 6] = ["b", "mu", "r", "eq", "line", "direction"];

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {name} must be positive and finite, got {value}"));
        }
        let slot = match name {
            "b" => &mut self.tau_b,
            "mu" => &mut self.tau_mu,
            "r" => &mut self.tau_r,
            "eq" => &mut self.tau_eq,
            "line" => &mut self.line_residual,
            "direction" => &mut self.direction_residual,
            other => return Err(format!("unknown tolerance name {other:?}")),
        };
        *slot = value;
        Ok(())
    }
}
