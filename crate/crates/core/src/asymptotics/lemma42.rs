//! Incomplete-gamma type integrals ∫₁^∞ e^{−ε²t} t^{−(α+βε)} (log t)^k dt and their singular parts.

use super::fit::poly_fit;
use super::quadrature::{integrate, integrate_to_infinity};
use super::special::gamma_and_derivative;
use crate::error::{KppError, Result};

const TOL: f64 = 1e-13;

fn check_eps(eps: f64) -> Result<()> {
    if !eps.is_finite() || eps.abs() >= 0.5 {
        return Err(KppError::EpsilonRange { eps, lo: -0.5, hi: 0.5 });
    }
    Ok(())
}

fn admissible(alpha: f64, beta: f64) -> Result<()> {
    if beta == 0.0 && alpha >= 1.0 && alpha == alpha.round() {
        return Err(KppError::InvalidParameter(format!(
            "alpha = {alpha} with beta = 0 is the logarithmic case"
        )));
    }
    Ok(())
}

/// Quadrature oracle for ∫₁^∞ e^{−ε²t} t^{−(α+βε)} (log t)^k dt, k = 0 or 1.
///
/// The range is split at t = 1/ε²: below it the integrand is algebraic and is
/// integrated in u = log t, above it the exponential dominates.
pub fn lemma42_integral(alpha: f64, beta: f64, eps: f64, with_log: bool) -> Result<f64> {
    check_eps(eps)?;
    let s = alpha + beta * eps;
    let e2 = eps * eps;
    let k = i32::from(with_log);
    if eps == 0.0 {
        if s <= 1.0 {
            return Err(KppError::Quadrature(format!("divergent at eps = 0 with exponent {s}")));
        }
        return Ok(if with_log { 1.0 / ((s - 1.0) * (s - 1.0)) } else { 1.0 / (s - 1.0) });
    }
    let t_split = (1.0 / e2).max(1.0);
    let u_max = t_split.ln();
    let body = integrate(
        |u: f64| (-e2 * u.exp() + (1.0 - s) * u).exp() * u.powi(k),
        0.0,
        u_max,
        0.0,
        TOL,
    )?;
    let tail = integrate_to_infinity(
        |t: f64| (-e2 * t).exp() * t.powf(-s) * t.ln().powi(k),
        t_split,
        1.0 / e2,
        0.0,
        TOL,
    )?;
    Ok(body.value + tail.value)
}

/// The displayed singular terms: |ε|^{2α−2+2βε}Γ(1−α−βε) + 1_{α=1}/(βε), or for the
/// log variant |ε|^{2α−2+2βε}[−2log|ε|Γ(x) + Γ′(x)] + 1_{α=1}/(βε)².
pub fn lemma42_singular(alpha: f64, beta: f64, eps: f64, with_log: bool) -> Result<f64> {
    check_eps(eps)?;
    admissible(alpha, beta)?;
    if eps == 0.0 {
        return Err(KppError::InvalidParameter("singular part is not defined at eps = 0".into()));
    }
    let x = 1.0 - alpha - beta * eps;
    let ae = eps.abs();
    let pref = ae.powf(2.0 * alpha - 2.0 + 2.0 * beta * eps);
    let (g, dg) = gamma_and_derivative(x)?;
    let pole = if alpha == 1.0 { 1.0 / (beta * eps) } else { 0.0 };
    Ok(if with_log {
        pref * (-2.0 * ae.ln() * g + dg) + pole * pole
    } else {
        pref * g + pole
    })
}

/// A_{α,β}(ε) (or Ã): integral minus singular part.
pub fn lemma42_analytic_part(alpha: f64, beta: f64, eps: f64, with_log: bool) -> Result<f64> {
    Ok(lemma42_integral(alpha, beta, eps, with_log)? - lemma42_singular(alpha, beta, eps, with_log)?)
}

/// Closed split valid for α < 1: A = −∫₀¹ e^{−ε²t} t^{−(α+βε)} (log t)^k dt.
pub fn lemma42_analytic_below_one(alpha: f64, beta: f64, eps: f64, with_log: bool) -> Result<f64> {
    check_eps(eps)?;
    let s = alpha + beta * eps;
    if s >= 1.0 {
        return Err(KppError::InvalidParameter(format!("exponent {s} must be below 1")));
    }
    let e2 = eps * eps;
    let k = i32::from(with_log);
    // t = e^{−u}
    let q = integrate_to_infinity(
        |u: f64| (-e2 * (-u).exp() - (1.0 - s) * u).exp() * (-u).powi(k),
        0.0,
        1.0 / (1.0 - s),
        0.0,
        TOL,
    )?;
    Ok(-q.value)
}

/// Right-hand side of the integration-by-parts identity relating α to α − 1:
/// I_α = [−e^{−ε²} + ε² I_{α−1}]/(1−α−βε), and for the log variant
/// Ĩ_α = [ε² Ĩ_{α−1} − I_α]/(1−α−βε).
pub fn lemma42_recursion_rhs(alpha: f64, beta: f64, eps: f64, with_log: bool) -> Result<f64> {
    let d = 1.0 - alpha - beta * eps;
    if d == 0.0 {
        return Err(KppError::InvalidParameter("1 − α − βε vanishes".into()));
    }
    let lower = lemma42_integral(alpha - 1.0, beta, eps, with_log)?;
    let e2 = eps * eps;
    Ok(if with_log {
        (e2 * lower - lemma42_integral(alpha, beta, eps, false)?) / d
    } else {
        (-(-e2).exp() + e2 * lower) / d
    })
}

/// Cubic-fit smoothness diagnostic of A_{α,β} on ε = ±radius·k/n, k = 1..n.
#[derive(Debug, Clone)]
pub struct Smoothness {
    pub radius: f64,
    pub eps: Vec<f64>,
    pub analytic: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
}

pub fn lemma42_smoothness(alpha: f64, beta: f64, with_log: bool, radius: f64, n: usize) -> Result<Smoothness> {
    let mut eps: Vec<f64> = (1..=n)
        .flat_map(|k| {
            let e = radius * k as f64 / n as f64;
            [-e, e]
        })
        .collect();
    eps.sort_by(f64::total_cmp);
    let analytic = eps
        .iter()
        .map(|&e| lemma42_analytic_part(alpha, beta, e, with_log))
        .collect::<Result<Vec<_>>>()?;
    let (coeffs, max_residual) = poly_fit(&eps, &analytic, 3)?;
    Ok(Smoothness {
        radius,
        eps,
        analytic,
        coeffs,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn elementary_value() {
        assert_eq!(lemma42_integral(1.5, 0.0, 0.0, false).unwrap(), 2.0);
        assert_relative_eq!(lemma42_integral(1.5, 0.0, 1e-4, false).unwrap(), 2.0, max_relative = 1e-3);
    }

    #[test]
    fn quadrature_regression_values() {
        // 30-digit reference values
        let cases = [
            (1.5, 1.5, 0.1, false, 1.370_673_483_883_349_4),
            (2.0, 1.5, 0.1, false, 0.835_162_289_404_639_6),
            (2.5, 1.5, 0.1, true, 0.348_544_821_211_732_4),
            (0.5, 0.0, 0.2, false, 6.888_618_945_263_870_5),
            (1.5, 1.5, -0.15, false, 2.053_109_115_807_910_5),
            (1.0, 0.5, 0.1, false, 3.624_250_879_243_517),
            (1.0, 0.5, 0.1, true, 7.660_153_206_707_947),
        ];
        for (a, b, e, lg, want) in cases {
            let got = lemma42_integral(a, b, e, lg).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn closed_split_for_alpha_below_one() {
        let eps = 0.2;
        let a = lemma42_analytic_below_one(0.5, 0.0, eps, false).unwrap();
        let via_gamma = PI.sqrt() / eps + a;
        assert_relative_eq!(via_gamma, lemma42_integral(0.5, 0.0, eps, false).unwrap(), max_relative = 1e-11);
        for (al, be, e, lg) in [(0.3, 1.0, -0.15, false), (0.5, 0.5, 0.1, true), (-0.5, 2.0, 0.2, true)] {
            let lhs = lemma42_analytic_part(al, be, e, lg).unwrap();
            let rhs = lemma42_analytic_below_one(al, be, e, lg).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_examples() {
        let s = lemma42_singular(1.5, 1.5, 0.1, false).unwrap();
        let g = super::super::special::gamma(-0.65).unwrap();
        assert_relative_eq!(s, 0.1f64.powf(1.3) * g, max_relative = 1e-14);
        for e in [-0.3, -0.1, 0.05, 0.2] {
            assert!(lemma42_singular(2.0, 1.5, e, false).unwrap().is_finite());
            assert!(lemma42_singular(2.5, 1.5, e, true).unwrap().is_finite());
        }
        assert!(lemma42_singular(1.5, 1.5, 0.0, false).is_err());
        assert!(lemma42_singular(2.0, 0.0, 0.1, false).is_err());
        assert!(matches!(
            lemma42_singular(2.5, 2.0, 0.25, false),
            Err(KppError::GammaPole(_))
        ));
    }

    #[test]
    fn recursion_identity() {
        for (a, b, e) in [(1.5, 1.5, 0.1), (2.0, 1.5, -0.12), (2.5, 1.5, 0.07), (1.7, 0.0, 0.3)] {
            for lg in [false, true] {
                let lhs = lemma42_integral(a, b, e, lg).unwrap();
                let rhs = lemma42_recursion_rhs(a, b, e, lg).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "({a},{b},{e},{lg})");
            }
        }
    }

    #[test]
    fn pole_term_for_alpha_one() {
        // A_{1,β}(0) = 0: integral − singular part tends to zero
        let a = lemma42_analytic_part(1.0, 0.5, 1e-3, false).unwrap();
        assert!(a.abs() < 1e-2, "{a}");
    }

    #[test]
    fn analytic_part_regular_near_zero() {
        // a cubic fit leaves O(r⁴) for an analytic function; a surviving kink would leave O(r^{≤3})
        for (a, b, lg) in [(1.5, 1.5, false), (2.0, 1.5, false), (2.5, 1.5, true)] {
            let r1 = lemma42_smoothness(a, b, lg, 0.1, 10).unwrap().max_residual;
            let r2 = lemma42_smoothness(a, b, lg, 0.05, 10).unwrap().max_residual;
            assert!(r1 / r2 > 12.0, "({a},{b},{lg}): {r1:e} / {r2:e}");
        }
    }
}
