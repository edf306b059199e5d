//! Front-position expansion, its fitter, and the small-ε expansions of I(ε) and Φ(2+ε).

use std::f64::consts::{LN_2, PI};

use super::fit::weighted_lsq;
use super::quadrature::{integrate, integrate_to_infinity};
use super::special::{gamma_and_derivative, EULER_GAMMA};
use crate::error::{KppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    PaperDefault,
    Fitted,
}

/// Coefficients of μ_t = 2t − (3/2)log t + a + b/√t + c·log t/t [+ d/t].
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Optional 1/t coefficient (fit only).
    pub d: Option<f64>,
    /// Optional coefficients of t^{−3/2} and log t/t^{3/2} (fit only).
    pub next: Option<(f64, f64)>,
    pub provenance: Provenance,
    /// Covariance of the fitted parameters in the order (a, b, c[, d[, e₁, e₂]]).
    pub covariance: Option<Vec<Vec<f64>>>,
    /// (t, μ_t − 2t + (3/2)log t − a − b/√t − c·log t/t) over the fitted range; any d/t stays in.
    pub residuals: Vec<(f64, f64)>,
}

/// b = (3/2)Γ(−1/2) = −3√π.
pub fn paper_b() -> f64 {
    -3.0 * PI.sqrt()
}

/// c = (9/8)(5 − 6 log 2).
pub fn paper_c() -> f64 {
    9.0 / 8.0 * (5.0 - 6.0 * LN_2)
}

impl ExpansionCoefficients {
    pub fn paper_default(a: f64) -> Self {
        ExpansionCoefficients {
            a,
            b: paper_b(),
            c: paper_c(),
            d: None,
            next: None,
            provenance: Provenance::PaperDefault,
            covariance: None,
            residuals: Vec::new(),
        }
    }

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        ExpansionCoefficients {
            a,
            b,
            c,
            d: None,
            next: None,
            provenance: Provenance::Fitted,
            covariance: None,
            residuals: Vec::new(),
        }
    }

    /// Standard errors of (a, b, c[, d]) when a covariance is available.
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|m| (0..m.len()).map(|i| m[i][i].max(0.0).sqrt()).collect())
    }
}

fn mu_model(t: f64, co: &ExpansionCoefficients) -> f64 {
    let lt = t.ln();
    2.0 * t - 1.5 * lt + co.a + co.b / t.sqrt() + co.c * lt / t
}

/// 2t − (3/2)log t + a + b/√t + c·(log t)/t.
pub fn mu_expansion(t: f64, co: &ExpansionCoefficients) -> Result<f64> {
    if !(t >= 3.0) {
        return Err(KppError::InvalidParameter(format!("t = {t} must be >= 3")));
    }
    Ok(mu_model(t, co))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitWeighting {
    /// Each sample weighted by its share of log t, so geometric and uniform sampling agree.
    #[default]
    LogUniform,
    Uniform,
}

/// Columns beyond {1, t^{−1/2}, log t/t}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitBasis {
    Leading,
    /// Adds 1/t.
    #[default]
    WithInvT,
    /// Adds 1/t, t^{−3/2} and log t/t^{3/2}.
    NextOrder,
}

/// Least-squares fit of μ_t − 2t + (3/2)log t on {1, t^{−1/2}, log t/t} and optionally 1/t.
pub fn fit_mu(
    series: &[(f64, f64)],
    t_min: f64,
    with_inv_t: bool,
    weighting: FitWeighting,
) -> Result<ExpansionCoefficients> {
    let basis = if with_inv_t { FitBasis::WithInvT } else { FitBasis::Leading };
    fit_mu_basis(series, t_min, basis, weighting)
}

/// As [`fit_mu`] with an explicit choice of correction columns.
pub fn fit_mu_basis(
    series: &[(f64, f64)],
    t_min: f64,
    basis: FitBasis,
    weighting: FitWeighting,
) -> Result<ExpansionCoefficients> {
    if !(t_min >= 50.0) {
        return Err(KppError::InvalidParameter(format!("t_min = {t_min} must be >= 50")));
    }
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= t_min).collect();
    let t_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if pts.len() < 8 || !(t_max >= 20.0 * t_min) {
        return Err(KppError::IllConditioned(format!(
            "fit range [{t_min}, {t_max}] with {} samples is too short",
            pts.len()
        )));
    }
    let design: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(t, _)| {
            let lt = t.ln();
            let mut row = vec![1.0, t.powf(-0.5), lt / t];
            if basis != FitBasis::Leading {
                row.push(1.0 / t);
            }
            if basis == FitBasis::NextOrder {
                let s = t.powf(-1.5);
                row.extend([s, lt * s]);
            }
            row
        })
        .collect();
    let y: Vec<f64> = pts.iter().map(|&(t, mu)| mu - 2.0 * t + 1.5 * t.ln()).collect();
    let w: Vec<f64> = match weighting {
        FitWeighting::Uniform => vec![1.0; pts.len()],
        FitWeighting::LogUniform => {
            let n = pts.len();
            (0..n)
                .map(|i| {
                    let lo = if i == 0 { pts[0].0.ln() } else { 0.5 * (pts[i - 1].0.ln() + pts[i].0.ln()) };
                    let hi = if i + 1 == n {
                        pts[n - 1].0.ln()
                    } else {
                        0.5 * (pts[i].0.ln() + pts[i + 1].0.ln())
                    };
                    (hi - lo).max(1e-300)
                })
                .collect()
        }
    };
    let fit = weighted_lsq(&design, &y, &w)?;
    let mut co = ExpansionCoefficients {
        a: fit.coeffs[0],
        b: fit.coeffs[1],
        c: fit.coeffs[2],
        d: (basis != FitBasis::Leading).then(|| fit.coeffs[3]),
        next: (basis == FitBasis::NextOrder).then(|| (fit.coeffs[4], fit.coeffs[5])),
        provenance: Provenance::Fitted,
        covariance: Some(fit.covariance),
        residuals: Vec::new(),
    };
    co.residuals = pts.iter().map(|&(t, mu)| (t, mu - mu_model(t, &co))).collect();
    Ok(co)
}

/// Singular part of I(ε) = ∫₁^∞ e^{−ε²t + (1+ε)(μ_t−2t)} dt:
/// e^{(1+ε)a}|ε|^{3ε}[Γ(−½)|ε| + (2b/3)ε + b(γ_E−⅓)ε² − (3/2)Γ′(−½)ε|ε| − 2cΓ(−3/2)|ε|³log|ε|].
pub fn i_singular(eps: f64, co: &ExpansionCoefficients) -> Result<f64> {
    if !(eps != 0.0 && eps.abs() < 0.3) {
        return Err(KppError::EpsilonRange { eps, lo: -0.3, hi: 0.3 });
    }
    let (g12, dg12) = gamma_and_derivative(-0.5)?;
    let (g32, _) = gamma_and_derivative(-1.5)?;
    let ae = eps.abs();
    let bracket = g12 * ae + 2.0 * co.b / 3.0 * eps + co.b * (EULER_GAMMA - 1.0 / 3.0) * eps * eps
        - 1.5 * dg12 * eps * ae
        - 2.0 * co.c * g32 * ae.powi(3) * ae.ln();
    Ok(((1.0 + eps) * co.a).exp() * ae.powf(3.0 * eps) * bracket)
}

/// Quadrature of ∫₁^∞ e^{−ε²t + (1+ε)(μ̂_t − 2t)} dt with μ̂ the model expansion.
pub fn i_quadrature(eps: f64, co: &ExpansionCoefficients) -> Result<f64> {
    if !(eps.abs() < 0.5) {
        return Err(KppError::EpsilonRange { eps, lo: -0.5, hi: 0.5 });
    }
    let r = 1.0 + eps;
    let e2 = eps * eps;
    let f = |t: f64| (-e2 * t + r * (mu_model(t, co) - 2.0 * t)).exp();
    let split = if eps == 0.0 { 1e4 } else { (1.0 / e2).max(1.0) };
    // algebraic part in u = log t
    let body = integrate(|u: f64| f(u.exp()) * u.exp(), 0.0, split.ln(), 1e-15, 1e-13)?;
    let scale = if eps == 0.0 { split } else { 1.0 / e2 };
    let tail = integrate_to_infinity(f, split, scale, 1e-15, 1e-13)?;
    Ok(body.value + tail.value)
}

/// The five bracket terms of the Φ(2+ε) expansion, in order
/// 2ε, 3ε²log ε, −3(1−γ_E/2)ε², (9/4)ε³log²ε, (3/4)(3γ_E−6log2−1)ε³log ε.
pub fn main_expansion_terms(eps: f64) -> [f64; 5] {
    let l = eps.ln();
    let e2 = eps * eps;
    let e3 = e2 * eps;
    [
        2.0 * eps,
        3.0 * e2 * l,
        -3.0 * (1.0 - EULER_GAMMA / 2.0) * e2,
        2.25 * e3 * l * l,
        0.75 * (3.0 * EULER_GAMMA - 6.0 * LN_2 - 1.0) * e3 * l,
    ]
}

fn check_main(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(KppError::EpsilonRange { eps, lo: 0.0, hi: 0.5 });
    }
    Ok(())
}

/// √π(α − βε/2)[2ε + 3ε²log ε − 3(1−γ_E/2)ε² + (9/4)ε³log²ε + (3/4)(3γ_E−6log2−1)ε³log ε].
pub fn main_expansion(eps: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_main(eps)?;
    let s: f64 = main_expansion_terms(eps).iter().sum();
    Ok(PI.sqrt() * (alpha - 0.5 * beta * eps) * s)
}

/// The expansion with its two ε³ logarithmic terms removed.
pub fn main_expansion_without_cubic_logs(eps: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_main(eps)?;
    let t = main_expansion_terms(eps);
    Ok(PI.sqrt() * (alpha - 0.5 * beta * eps) * (t[0] + t[1] + t[2]))
}

/// C(1+ε) = (α−βε)[2ε + 6ε²log ε + (3γ_E+6log2−4)ε² + 9ε³log²ε + 3(3γ_E+1)ε³log ε].
pub fn c_form(eps: f64, alpha: f64, beta: f64) -> f64 {
    let l = eps.ln();
    let e2 = eps * eps;
    let e3 = e2 * eps;
    (alpha - beta * eps)
        * (2.0 * eps
            + 6.0 * e2 * l
            + (3.0 * EULER_GAMMA + 6.0 * LN_2 - 4.0) * e2
            + 9.0 * e3 * l * l
            + 3.0 * (3.0 * EULER_GAMMA + 1.0) * e3 * l)
}

/// C(c/2) from Φ(c) via Φ(c)/√(4π) = (2/c)C(c/2).
pub fn c_from_phi(c: f64, phi: f64) -> f64 {
    phi * c / (4.0 * PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let (g12, _) = gamma_and_derivative(-0.5).unwrap();
        assert_relative_eq!(paper_b(), 1.5 * g12, max_relative = 1e-14);
        assert_relative_eq!(paper_b(), -5.317_361_552_716_548, max_relative = 1e-13);
        assert_relative_eq!(paper_c(), 0.946_256_531_220_369_6, max_relative = 1e-13);
        assert!((paper_c() - 0.94626).abs() < 1e-5);
    }

    #[test]
    fn mu_expansion_examples() {
        let zero = ExpansionCoefficients::new(0.0, 0.0, 0.0);
        let t = std::f64::consts::E.powi(2);
        assert_relative_eq!(mu_expansion(t, &zero).unwrap(), 2.0 * t - 3.0, max_relative = 1e-15);
        let p = ExpansionCoefficients::paper_default(0.0);
        let only_b = ExpansionCoefficients { c: 0.0, ..p.clone() };
        let base = 200.0 - 1.5 * 100f64.ln();
        assert_relative_eq!(mu_expansion(100.0, &only_b).unwrap() - base, -0.531_736_155_271_654_8, max_relative = 1e-12);
        let only_c = ExpansionCoefficients { b: 0.0, ..p };
        assert_relative_eq!(mu_expansion(100.0, &only_c).unwrap() - base, 0.043_576_723_658_725_57, max_relative = 1e-12);
        assert!(mu_expansion(2.0, &zero).is_err());
    }

    #[test]
    fn fit_recovers_synthetic_coefficients() {
        let truth = ExpansionCoefficients {
            d: Some(1.7),
            ..ExpansionCoefficients::paper_default(-0.8)
        };
        let series: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = 50.0 * 1.03f64.powi(k);
                (t, mu_model(t, &truth) + 1.7 / t)
            })
            .filter(|p| p.0 <= 2000.0)
            .collect();
        let f = fit_mu(&series, 50.0, true, FitWeighting::LogUniform).unwrap();
        assert_relative_eq!(f.a, truth.a, max_relative = 1e-4);
        assert_relative_eq!(f.b, truth.b, max_relative = 1e-4);
        assert_relative_eq!(f.c, truth.c, max_relative = 1e-4);
        assert_relative_eq!(f.d.unwrap(), 1.7, max_relative = 1e-4);
        let worst = f.residuals.iter().fold(0.0f64, |m, r| m.max((r.1 - 1.7 / r.0).abs()));
        assert!(worst < 1e-9, "{worst:e}");
        let g = fit_mu(&series, 50.0, true, FitWeighting::Uniform).unwrap();
        assert_relative_eq!(g.b, truth.b, max_relative = 1e-4);
    }

    #[test]
    fn next_order_basis_removes_truncation_bias() {
        let truth = ExpansionCoefficients::paper_default(-1.8);
        let series: Vec<(f64, f64)> = (0..300)
            .map(|k| 50.0 * 1.02f64.powi(k))
            .filter(|&t| t <= 2000.0)
            .map(|t| (t, mu_model(t, &truth) + 19.0 / t - (10.0 + 5.0 * t.ln()) * t.powf(-1.5)))
            .collect();
        let short = fit_mu(&series, 50.0, true, FitWeighting::LogUniform).unwrap();
        assert!((short.c / truth.c - 1.0).abs() > 0.3, "{}", short.c);
        let full = fit_mu_basis(&series, 50.0, FitBasis::NextOrder, FitWeighting::LogUniform).unwrap();
        assert_relative_eq!(full.b, truth.b, max_relative = 1e-6);
        assert_relative_eq!(full.c, truth.c, max_relative = 1e-6);
        let (e1, e2) = full.next.unwrap();
        assert_relative_eq!(e1, -10.0, max_relative = 1e-5);
        assert_relative_eq!(e2, -5.0, max_relative = 1e-5);
    }

    #[test]
    fn fit_rejects_short_range() {
        let series: Vec<(f64, f64)> = (0..100).map(|k| (50.0 + k as f64, 0.0)).collect();
        assert!(matches!(
            fit_mu(&series, 50.0, false, FitWeighting::LogUniform),
            Err(KppError::IllConditioned(_))
        ));
        assert!(fit_mu(&series, 10.0, false, FitWeighting::LogUniform).is_err());
    }

    #[test]
    fn b_cancels_linear_kink_for_negative_eps() {
        let p = ExpansionCoefficients::paper_default(0.0);
        let (g12, _) = gamma_and_derivative(-0.5).unwrap();
        for eps in [-0.2f64, -0.05, -0.001] {
            let s = g12 * eps.abs() + 2.0 * p.b / 3.0 * eps;
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn c_cancels_cubic_log() {
        let (g12, dg12) = gamma_and_derivative(-0.5).unwrap();
        let (g32, _) = gamma_and_derivative(-1.5).unwrap();
        let v = 3.0 * (paper_b() * (EULER_GAMMA - 1.0 / 3.0) + 1.5 * dg12) + 2.0 * paper_c() * g32;
        assert!(v.abs() < 1e-12, "{v}");
        let _ = g12;
    }

    #[test]
    fn positive_eps_kinks() {
        // I(ε) − I(−ε)-type kinks: the |ε| terms double for ε > 0
        let p = ExpansionCoefficients::paper_default(0.0);
        let (g12, dg12) = gamma_and_derivative(-0.5).unwrap();
        let (g32, _) = gamma_and_derivative(-1.5).unwrap();
        for eps in [0.01f64, 0.05, 0.1] {
            let smooth = {
                // bracket with |ε| → −ε
                2.0 * p.b / 3.0 * eps - g12 * eps + p.b * (EULER_GAMMA - 1.0 / 3.0) * eps * eps + 1.5 * dg12 * eps * eps
                    + 2.0 * p.c * g32 * eps.powi(3) * eps.ln()
            };
            let kinks = 2.0 * g12 * eps - 3.0 * dg12 * eps * eps - 4.0 * p.c * g32 * eps.powi(3) * eps.ln();
            let full = i_singular(eps, &p).unwrap() / eps.powf(3.0 * eps);
            assert_relative_eq!(full, smooth + kinks, max_relative = 1e-12);
        }
    }

    #[test]
    fn main_expansion_reference() {
        assert!((main_expansion(0.1, 1.0, 0.0).unwrap() - 0.22586).abs() < 1e-4);
        assert_relative_eq!(main_expansion(0.1, 1.0, 0.0).unwrap(), 0.225_861_277_297_798_63, max_relative = 1e-13);
        for eps in [1e-3f64, 1e-5, 1e-7] {
            let r = main_expansion(eps, 1.3, 0.4).unwrap() / eps;
            assert!((r / (2.0 * PI.sqrt() * 1.3) - 1.0).abs() < 4.0 * eps.ln().abs() * eps);
        }
        assert!(main_expansion(0.0, 1.0, 0.0).is_err());
        assert!(main_expansion(0.6, 1.0, 0.0).is_err());
    }

    #[test]
    fn c_form_consistency() {
        let (alpha, beta) = (3.55, -11.4);
        for eps in [0.01f64, 0.03, 0.05, 0.1, 0.2] {
            let phi = main_expansion(2.0 * eps, alpha, beta).unwrap();
            let lhs = c_from_phi(2.0 + 2.0 * eps, phi);
            let l = eps.ln();
            let k2 = -3.0 * (2.0 - EULER_GAMMA - 2.0 * LN_2);
            let k3 = 3.0 * (3.0 * EULER_GAMMA - 1.0);
            let mut remainder = (alpha - beta * eps) * (k2 * eps.powi(3) + 9.0 * eps.powi(4) * l * l + k3 * eps.powi(4) * l);
            // constants dropped when log(ε/2) was re-expanded in log ε
            let k = -2.25 * LN_2 * LN_2 + 0.75 * (3.0 * EULER_GAMMA - 1.0) * LN_2;
            remainder += 4.0 * (1.0 + eps) * (alpha - beta * eps) * eps.powi(3) * k;
            let diff = lhs - c_form(eps, alpha, beta) - remainder;
            assert!(diff.abs() < 1e-13, "eps = {eps}: {diff:e}");
        }
    }

    #[test]
    fn i_singular_smooth_for_negative_eps() {
        let p = ExpansionCoefficients::paper_default(0.0);
        let xs: Vec<f64> = (1..=20).map(|k| -0.01 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&e| i_singular(e, &p).unwrap()).collect();
        let (_, res) = super::super::fit::poly_fit(&xs, &ys, 3).unwrap();
        assert!(res < 1e-3, "{res}");
    }

    #[test]
    fn quadrature_minus_singular_is_smooth() {
        let p = ExpansionCoefficients::paper_default(0.0);
        let xs: Vec<f64> = (1..=10).flat_map(|k| [-0.01 * k as f64, 0.01 * k as f64]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&e| i_quadrature(e, &p).unwrap() - i_singular(e, &p).unwrap())
            .collect();
        let (c, res) = super::super::fit::poly_fit(&xs, &ys, 3).unwrap();
        let at = |e: f64| c[0] + c[1] * e + c[2] * e * e + c[3] * e * e * e;
        let q = i_quadrature(0.1, &p).unwrap();
        let s = i_singular(0.1, &p).unwrap();
        assert!((q - at(0.1) - s).abs() < 1e-3, "{} vs {}", q - at(0.1), s);
        assert!(res < 1e-3, "{res}");
    }
}
