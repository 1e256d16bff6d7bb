//! BB1 (Clayton–Gumbel) copula
//! `C(u, v) = (1 + [(u^{−θ}−1)^δ + (v^{−θ}−1)^δ]^{1/δ})^{−1/θ}`, `θ > 0`, `δ ≥ 1`.
//!
//! Evaluated in log space so that tails near zero stay finite.

use serde::{Deserialize, Serialize};

use super::Copula;
use crate::error::{Error, Result};
use crate::numeric::{ln_1p_exp, log_add_exp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bb1Params {
    theta: f64,
    delta: f64,
}

impl Bb1Params {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!("theta = {theta} must be positive")));
        }
        if !(delta >= 1.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta = {delta} must be at least 1")));
        }
        Ok(Bb1Params { theta, delta })
    }

    /// Parameters with the requested Kendall's tau in `(0, 1)`.
    ///
    /// Holds `θ = 1` and solves for `δ`; when that would need `δ < 1`
    /// (`τ < 1/3`) it holds `δ = 1` and solves for `θ` instead.
    pub fn with_kendall_tau(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!("kendall tau {tau} outside (0, 1)")));
        }
        let delta = 2.0 / (3.0 * (1.0 - tau));
        if delta >= 1.0 {
            Self::new(1.0, delta)
        } else {
            Self::new(2.0 * tau / (1.0 - tau), 1.0)
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1 − 2 / (δ(θ + 2))`.
    pub fn kendall_tau(&self) -> f64 {
        1.0 - 2.0 / (self.delta * (self.theta + 2.0))
    }

    /// `ln(u^{−θ} − 1)`.
    fn ln_phi(&self, u: f64) -> f64 {
        let z = -self.theta * u.ln();
        if z > 30.0 {
            z + (-(-z).exp()).ln_1p()
        } else {
            z.exp_m1().ln()
        }
    }

    fn ln_s(&self, u: f64, v: f64) -> f64 {
        log_add_exp(self.delta * self.ln_phi(u), self.delta * self.ln_phi(v))
    }

    /// `ln ∂C/∂u` at interior points.
    fn ln_partial(&self, u: f64, v: f64) -> f64 {
        let (th, de) = (self.theta, self.delta);
        let ln_s = self.ln_s(u, v);
        let ln_1pw = ln_1p_exp(ln_s / de);
        (-1.0 / th - 1.0) * ln_1pw + (1.0 / de - 1.0) * ln_s + (de - 1.0) * self.ln_phi(u)
            - (th + 1.0) * u.ln()
    }
}

impl Copula for Bb1Params {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        let ln_w = self.ln_s(u.min(1.0), v.min(1.0)) / self.delta;
        (-ln_1p_exp(ln_w) / self.theta).exp()
    }

    fn cond_u_given_v(&self, u: f64, v: f64) -> f64 {
        self.cond_v_given_u(u, v)
    }

    fn cond_v_given_u(&self, v: f64, u: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        let u = u.clamp(f64::MIN_POSITIVE, 1.0);
        if u == 1.0 {
            return if self.delta > 1.0 { 0.0 } else { v.powf(self.theta + 1.0) };
        }
        self.ln_partial(u, v).exp().clamp(0.0, 1.0)
    }
}
