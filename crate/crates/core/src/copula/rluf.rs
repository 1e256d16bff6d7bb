//! Rodriguez-Lallena–Úbeda-Flores asymmetric copula
//! `C(u, v) = uv + ϑ·uv·(1−u)^α·(1−v)^β` with `α, β > 1`.

use serde::{Deserialize, Serialize};

use super::{check_unit, Conditioning, Copula, Direction, DirectionalRho, EPS_ALPHA, EPS_U};
use crate::error::{Error, Result};

/// Parameters `(ϑ, α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlufParams {
    theta: f64,
    alpha: f64,
    beta: f64,
}

impl RlufParams {
    /// Validates `α, β > 1` and `|ϑ| ≤ admissibility_bound(α, β)`.
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        let bound = admissibility_bound(alpha, beta)?;
        if !theta.is_finite() || theta.abs() > bound {
            return Err(Error::Domain(format!(
                "|theta| = {} exceeds the admissibility bound {bound}",
                theta.abs()
            )));
        }
        Ok(RlufParams { theta, alpha, beta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn f(&self, u: f64) -> f64 {
        u * (1.0 - u).powf(self.alpha)
    }

    fn g(&self, v: f64) -> f64 {
        v * (1.0 - v).powf(self.beta)
    }

    fn df(&self, u: f64) -> f64 {
        (1.0 - u).powf(self.alpha - 1.0) * (1.0 - (1.0 + self.alpha) * u)
    }

    fn dg(&self, v: f64) -> f64 {
        (1.0 - v).powf(self.beta - 1.0) * (1.0 - (1.0 + self.beta) * v)
    }
}

impl Copula for RlufParams {
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v + self.theta * self.f(u) * self.g(v)
    }

    fn cond_u_given_v(&self, u: f64, v: f64) -> f64 {
        u + self.theta * self.f(u) * self.dg(v)
    }

    fn cond_v_given_u(&self, v: f64, u: f64) -> f64 {
        v + self.theta * self.df(u) * self.g(v)
    }
}

/// Evaluates the copula; `u, v` must lie in `[0, 1]`.
pub fn rluf_cdf(u: f64, v: f64, p: &RlufParams) -> Result<f64> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    Ok(p.cdf(u, v))
}

/// Partial derivative of the copula in the conditioning variable.
///
/// With [`Conditioning::OnV`] the result is `C_{U|V}(u, v)`; with
/// [`Conditioning::OnU`] it is `C_{V|U}(v, u)`.
pub fn rluf_conditional(u: f64, v: f64, p: &RlufParams, conditioning: Conditioning) -> Result<f64> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    Ok(match conditioning {
        Conditioning::OnV => p.cond_u_given_v(u, v),
        Conditioning::OnU => p.cond_v_given_u(v, u),
    })
}

/// Closed-form shape estimate from one coordinate's sample:
/// `Σ((1−x)ln(1−x) − x) / Σ x·ln(1−x)`.
pub fn rluf_shape_mle(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::DegenerateInput("empty sample".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if !(EPS_U..=1.0 - EPS_U).contains(&x) {
            return Err(Error::DegenerateInput(format!(
                "observation {i} = {x} within {EPS_U:e} of the unit interval boundary"
            )));
        }
        let l = (-x).ln_1p();
        num += (1.0 - x) * l - x;
        den += x * l;
    }
    let est = num / den;
    if !est.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "estimator undefined (numerator {num}, denominator {den})"
        )));
    }
    Ok(est)
}

/// Closed-form estimates `(α̂, β̂)` from paired pseudo-observations.
pub fn rluf_mle(pseudo_u: &[f64], pseudo_v: &[f64]) -> Result<(f64, f64)> {
    if pseudo_u.len() != pseudo_v.len() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} observations, v has {}",
            pseudo_u.len(),
            pseudo_v.len()
        )));
    }
    Ok((rluf_shape_mle(pseudo_u)?, rluf_shape_mle(pseudo_v)?))
}

fn shape_bound(a: f64) -> f64 {
    ((a + 1.0) / (a - 1.0)).powf(a - 1.0)
}

/// `min{((α+1)/(α−1))^(α−1), ((β+1)/(β−1))^(β−1)}`.
pub fn admissibility_bound(alpha: f64, beta: f64) -> Result<f64> {
    for (name, x) in [("alpha", alpha), ("beta", beta)] {
        if !(x > 1.0 + EPS_ALPHA) || !x.is_finite() {
            return Err(Error::Domain(format!(
                "{name} = {x} must exceed 1 + {EPS_ALPHA:e}"
            )));
        }
    }
    Ok(shape_bound(alpha).min(shape_bound(beta)))
}

/// Closed-form directional dependence:
/// `ρ_{v→u} = 3ϑ²α²β² / ((2+β)²(1+2α))`,
/// `ρ_{u→v} = 3ϑ²α²β² / ((2+α)²(1+2β))`.
pub fn directional_rho_closed(p: &RlufParams, direction: Direction) -> DirectionalRho {
    let (t, a, b) = (p.theta, p.alpha, p.beta);
    let num = 3.0 * t * t * a * a * b * b;
    let value = match direction {
        Direction::VToU => num / ((2.0 + b).powi(2) * (1.0 + 2.0 * a)),
        Direction::UToV => num / ((2.0 + a).powi(2) * (1.0 + 2.0 * b)),
    };
    DirectionalRho { value, direction }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::tests::{assert_copula_axioms, grid};
    use proptest::prelude::*;

    fn p(theta: f64, alpha: f64, beta: f64) -> RlufParams {
        RlufParams::new(theta, alpha, beta).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let q = p(1.0, 2.0, 2.0);
        assert_eq!(rluf_cdf(0.5, 1.0, &q).unwrap(), 0.5);
        assert_eq!(rluf_cdf(0.7, 0.0, &q).unwrap(), 0.0);
        assert!((rluf_cdf(0.5, 0.5, &q).unwrap() - 0.265625).abs() < 1e-15);
        assert!(matches!(rluf_cdf(1.2, 0.5, &q), Err(Error::Domain(_))));
        assert!(matches!(rluf_cdf(0.5, -0.1, &q), Err(Error::Domain(_))));
    }

    #[test]
    fn conditional_examples() {
        let indep = p(0.0, 2.0, 3.0);
        assert_eq!(rluf_conditional(0.5, 0.5, &indep, Conditioning::OnV).unwrap(), 0.5);
        let q = p(1.0, 2.0, 2.0);
        for v in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(rluf_conditional(1.0, v, &q, Conditioning::OnV).unwrap(), 1.0);
        }
        let got = rluf_conditional(0.5, 0.5, &q, Conditioning::OnV).unwrap();
        assert!((got - 0.46875).abs() < 1e-15);
        assert!(rluf_conditional(0.5, 1.5, &q, Conditioning::OnU).is_err());
    }

    #[test]
    fn conditionals_are_asymmetric() {
        let q = p(1.0, 2.0, 4.0);
        let a = q.cond_u_given_v(0.3, 0.6);
        let b = q.cond_v_given_u(0.3, 0.6);
        assert!((a - b).abs() > 1e-6);
    }

    #[test]
    fn mle_examples() {
        let a = rluf_shape_mle(&[0.5]).unwrap();
        assert!((a - 2.442695040888963).abs() < 1e-12);
        let a = rluf_shape_mle(&[1.0 - (-1f64).exp()]).unwrap();
        assert!((a - 1.5819767068693265).abs() < 1e-12);
        let (_, b) = rluf_mle(&[0.3, 0.6], &[0.5, 0.5]).unwrap();
        assert!((b - 2.442695040888963).abs() < 1e-12);
        assert!(matches!(rluf_shape_mle(&[0.5, 1e-12]), Err(Error::DegenerateInput(_))));
        assert!(matches!(rluf_shape_mle(&[1.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(rluf_mle(&[0.5], &[0.5, 0.4]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bound_examples() {
        assert!((admissibility_bound(3.0, 3.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((admissibility_bound(2.0, 2.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((admissibility_bound(2.0, 3.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(admissibility_bound(1.0, 3.0).is_err());
        assert!(admissibility_bound(2.0, 1.0 + 1e-9).is_err());
        assert!(RlufParams::new(3.5, 2.0, 2.0).is_err());
    }

    #[test]
    fn closed_rho_examples() {
        let indep = p(0.0, 2.5, 4.0);
        assert_eq!(directional_rho_closed(&indep, Direction::VToU).value, 0.0);
        let q = p(1.0, 2.0, 2.0);
        let vu = directional_rho_closed(&q, Direction::VToU);
        let uv = directional_rho_closed(&q, Direction::UToV);
        assert!((vu.value - 0.6).abs() < 1e-15);
        assert_eq!(vu.value, uv.value);
        assert_eq!(vu.direction, Direction::VToU);
    }

    #[test]
    fn copula_axioms_hold_inside_the_density_region() {
        // The density 1 + ϑ f'(u) g'(v) stays nonnegative for
        // ϑ ∈ [−1, admissibility_bound].
        for (a, b) in [(2.0, 2.0), (1.5, 4.0), (3.0, 1.2)] {
            let bound = admissibility_bound(a, b).unwrap();
            for theta in [-1.0, -0.3, 0.0, 0.7, bound] {
                assert_copula_axioms(&p(theta, a, b));
            }
        }
    }

    #[test]
    fn conditional_matches_finite_difference() {
        let h = 1e-6;
        let g = grid(21);
        for q in [p(1.0, 2.0, 2.0), p(-0.8, 1.5, 3.5), p(2.0, 3.0, 2.5)] {
            for &u in &g[1..20] {
                for &v in &g[1..20] {
                    let fd_v = (q.cdf(u, v + h) - q.cdf(u, v - h)) / (2.0 * h);
                    let fd_u = (q.cdf(u + h, v) - q.cdf(u - h, v)) / (2.0 * h);
                    assert!((fd_v - q.cond_u_given_v(u, v)).abs() < 1e-6);
                    assert!((fd_u - q.cond_v_given_u(v, u)).abs() < 1e-6);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bound_is_symmetric(a in 1.0001f64..20.0, b in 1.0001f64..20.0) {
            prop_assert_eq!(admissibility_bound(a, b).unwrap(), admissibility_bound(b, a).unwrap());
        }

        #[test]
        fn mle_is_permutation_invariant(
            mut xs in prop::collection::vec(0.001f64..0.999, 1..40),
            seed in any::<u64>(),
        ) {
            let before = rluf_shape_mle(&xs).unwrap();
            // Deterministic Fisher–Yates driven by the seed.
            let mut s = seed;
            for i in (1..xs.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                xs.swap(i, j);
            }
            let after = rluf_shape_mle(&xs).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
        }

        #[test]
        fn closed_rho_is_nonnegative(t in -1.0f64..1.0, a in 1.01f64..10.0, b in 1.01f64..10.0) {
            let q = RlufParams::new(t, a, b).unwrap();
            prop_assert!(directional_rho_closed(&q, Direction::VToU).value >= 0.0);
            prop_assert!(directional_rho_closed(&q, Direction::UToV).value >= 0.0);
        }
    }
}
