//! Pointwise observables of a single field: μ_t, φ(ε,t) and g(r,t).

use crate::error::{KppError, Result};
use crate::interp::pchip_uniform;
use crate::logspace::{LogSumExp, LogValue};
use crate::model::{Nonlinearity, TiltedField};

/// Tilted coordinate z* of the rightmost h = 1/2 crossing (μ_t = z* + 2t).
pub fn front_offset(field: &TiltedField) -> Result<f64> {
    let n = field.len();
    let no_crossing = || KppError::NoCrossing { t: field.t };
    let i = (0..n).rev().find(|&i| field.h(i) >= 0.5).ok_or_else(no_crossing)?;
    if field.h(i) == 0.5 {
        return Ok(field.z(i));
    }
    if i + 1 >= n {
        return Err(no_crossing());
    }
    let lo = i.saturating_sub(2);
    let hi = (i + 3).min(n - 1);
    let z0 = field.z(lo);
    let local = &field.w[lo..=hi];
    let h = |z: f64| pchip_uniform(local, z0, field.dz, z).map_or(f64::NAN, |w| w * (-z).exp());
    let (mut a, mut b) = (field.z(i), field.z(i + 1));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h(m) >= 0.5 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(if (h(a) - 0.5).abs() <= (h(b) - 0.5).abs() { a } else { b })
}

/// μ_t: the largest x with h(x,t) = 1/2.
pub fn mu_of_t(field: &TiltedField) -> Result<f64> {
    Ok(front_offset(field)? + 2.0 * field.t)
}

fn check_phi_eps(eps: f64, nl: &Nonlinearity) -> Result<()> {
    let hi = nl.p().min(1.0) - 1e-3;
    if !(eps > -0.9 && eps < hi) {
        return Err(KppError::EpsilonRange { eps, lo: -0.9, hi });
    }
    Ok(())
}

/// Distance ahead of the front beyond which F(h)e^{(1+ε)ζ} is below e^{-37} of its scale.
pub(crate) fn phi_cutoff(eps: f64, nl: &Nonlinearity) -> f64 {
    10.0 + 37.0 / (nl.p().min(1.0) - eps).max(1e-3)
}

/// φ(ε,t) = ∫F[h(μ_t+ζ,t)]e^{(1+ε)ζ}dζ; `h_left` is h at and beyond the left edge.
pub fn phi_eps_t(field: &TiltedField, nl: &Nonlinearity, h_left: f64, eps: f64) -> Result<f64> {
    check_phi_eps(eps, nl)?;
    if nl.is_zero() {
        return Ok(0.0);
    }
    let m = front_offset(field)?;
    let s = 1.0 + eps;
    let dz = field.dz;
    let z_cut = m + phi_cutoff(eps, nl);
    let n = field.len();
    let mut sum = nl.f(h_left) * (s * (field.z_lo - m)).exp() / s;
    let mut last = 0.0;
    let mut i_end = 0;
    for i in 0..n {
        let z = field.z(i);
        if z > z_cut {
            break;
        }
        let wgt = if i == 0 { 0.5 * dz } else { dz };
        last = nl.f(field.h(i)) * (s * (z - m)).exp();
        sum += wgt * last;
        i_end = i;
    }
    if i_end + 1 >= n && field.z(i_end) < z_cut {
        let decay = (nl.p().min(1.0) - eps).max(1e-3);
        if last / decay > 1e-6 * sum {
            return Err(KppError::WindowTooShort(format!(
                "phi(eps = {eps}) integrand {last:e} at the right edge z = {}",
                field.z(i_end)
            )));
        }
    }
    Ok(sum)
}

/// g(r,t) = ∫h(x,t)e^{rx}dx in log form; left of the window h is `h_left`.
pub fn g_moment(field: &TiltedField, h_left: f64, r: f64) -> Result<LogValue> {
    if !(r > 0.0) {
        return Err(KppError::InvalidParameter(format!("moment order r = {r} must be positive")));
    }
    let n = field.len();
    let dz = field.dz;
    let lw = dz.ln();
    let mut acc = LogSumExp::new();
    if h_left > 0.0 {
        acc.push_log(h_left.ln() + r * field.z_lo - r.ln(), 1);
    }
    let edge_from = n.saturating_sub((1.0 / dz).ceil().max(10.0) as usize);
    let mut edge = f64::NEG_INFINITY;
    for (i, &w) in field.w.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let l = w.ln() + (r - 1.0) * field.z(i) + if i == 0 { lw - 2f64.ln() } else { lw };
        if i >= edge_from {
            edge = edge.max(l);
        }
        acc.push_log(l, 1);
    }
    let total = acc.value();
    if edge > total.log_mag + (1e-10f64).ln() {
        return Err(KppError::WindowTooShort(format!(
            "g(r = {r}) integrand not decayed at the right edge z = {}",
            field.z_hi()
        )));
    }
    Ok(total.scale_exp(2.0 * r * field.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tilt, InitialCondition};
    use crate::pde_solver::{evolve, Solver, SolverParams};

    fn step_field() -> TiltedField {
        tilt(&InitialCondition::Step, -40.0, 0.02, 30.0).unwrap()
    }

    #[test]
    fn step_front_at_origin() {
        assert_eq!(mu_of_t(&step_field()).unwrap(), 0.0);
    }

    #[test]
    fn step_moment_at_one() {
        let g = g_moment(&step_field(), 1.0, 1.0).unwrap();
        // trapezoid sum of e^z with the half-valued jump node: 1 + Δz²/12
        assert!((g.log_mag - 0.02f64.powi(2) / 12.0).abs() < 1e-9, "{}", g.log_mag);
        let g2 = g_moment(&step_field(), 1.0, 0.5).unwrap();
        assert!((g2.to_f64() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn no_crossing_is_an_error() {
        let mut f = step_field();
        f.w.iter_mut().for_each(|w| *w = 0.0);
        assert!(matches!(mu_of_t(&f), Err(KppError::NoCrossing { .. })));
    }

    #[test]
    fn crossing_is_exact_after_interpolation() {
        let mut mus = Vec::new();
        let mut obs = |s: &Solver| {
            if s.steps() % 50 == 7 {
                let f = s.field();
                let m = front_offset(f)?;
                let h = f.h_at_z(m)?;
                assert!((h - 0.5).abs() < 1e-9, "h(mu) = {h}");
                mus.push(m + 2.0 * f.t);
            }
            Ok(())
        };
        evolve(&InitialCondition::Step, Nonlinearity::Quadratic, SolverParams::default(), 5.0, &mut obs).unwrap();
        assert!(mus.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn phi_vanishes_without_reaction() {
        let f = step_field();
        for e in [-0.5, 0.0, 0.3] {
            assert_eq!(phi_eps_t(&f, &Nonlinearity::Zero, 1.0, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_of_step_is_elementary() {
        // F(h₀) = 1 left of 0 and F(1/2) = 1/4 at the node, so φ = 1/(1+ε) + O(Δz)
        let f = step_field();
        let nl = Nonlinearity::Quadratic;
        for e in [-0.5, 0.0, 0.5] {
            let v = phi_eps_t(&f, &nl, 1.0, e).unwrap();
            let want = 1.0 / (1.0 + e) - 0.5 * 0.02 + 0.25 * 0.02;
            assert!((v - want).abs() < 1e-3, "{e}: {v} vs {want}");
        }
        assert!(phi_eps_t(&f, &nl, 1.0, 1.0).is_err());
        assert!(phi_eps_t(&f, &nl, 1.0, -0.95).is_err());
    }

    #[test]
    fn linear_moment_grows_like_e_2t() {
        let p = SolverParams {
            c_max: 2.5,
            ..SolverParams::default()
        };
        let s = evolve(&InitialCondition::Step, Nonlinearity::Zero, p, 10.0, &mut |_: &Solver| Ok(())).unwrap();
        let g = g_moment(s.field(), s.h_left(), 1.0).unwrap();
        assert!((g.log_mag - 20.0 - 0.02f64.powi(2) / 12.0).abs() < 1e-8, "{}", g.log_mag - 20.0);
    }

    #[test]
    fn short_window_detected() {
        let p = SolverParams {
            k_sigma: 3.0,
            margin: 5.0,
            enforce_edge: false,
            ..SolverParams::default()
        };
        let s = evolve(&InitialCondition::Step, Nonlinearity::Quadratic, p, 20.0, &mut |_: &Solver| Ok(())).unwrap();
        assert!(g_moment(s.field(), s.h_left(), 1.9).is_err());
    }
}
