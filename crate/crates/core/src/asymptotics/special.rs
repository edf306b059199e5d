//! Γ, ψ and Γ′ on the real line.

use std::f64::consts::PI;

use crate::error::{KppError, Result};

/// Euler–Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.57721566490153286;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// sin(πx) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let n = (2.0 * x).round();
    let r = x - 0.5 * n;
    let s = (PI * r).sin();
    let c = (PI * r).cos();
    match (n as i64).rem_euclid(4) {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    }
}

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Γ(x) for real x off the poles.
pub fn gamma(x: f64) -> Result<f64> {
    if is_pole(x) || x.is_nan() {
        return Err(KppError::GammaPole(x));
    }
    if x < 0.5 {
        return Ok(PI / (sin_pi(x) * gamma(1.0 - x)?));
    }
    if x > 171.7 {
        return Ok(f64::INFINITY);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // split the power to keep t^{x+1/2} finite up to x ≈ 171
    let half = t.powf(0.5 * (x + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * a)
}

/// Digamma ψ(x) = Γ′(x)/Γ(x).
pub fn digamma(x: f64) -> Result<f64> {
    if is_pole(x) || x.is_nan() {
        return Err(KppError::GammaPole(x));
    }
    if x < 0.5 {
        // ψ(1-x) - ψ(x) = π cot(πx)
        let cot = sin_pi(x + 0.5) / sin_pi(x);
        return Ok(digamma(1.0 - x)? - PI * cot);
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 12.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / (y * y);
    // Bernoulli series B_{2k}/(2k y^{2k})
    let series = inv
        * (1.0 / 12.0
            - inv
                * (1.0 / 120.0
                    - inv
                        * (1.0 / 252.0
                            - inv * (1.0 / 240.0 - inv * (1.0 / 132.0 - inv * (691.0 / 32760.0 - inv / 12.0))))));
    Ok(acc + y.ln() - 0.5 / y - series)
}

/// (Γ(x), Γ′(x)) with Γ′ = Γψ.
pub fn gamma_and_derivative(x: f64) -> Result<(f64, f64)> {
    let g = gamma(x)?;
    Ok((g, g * digamma(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        let sp = PI.sqrt();
        let (g, dg) = gamma_and_derivative(-0.5).unwrap();
        assert_relative_eq!(g, -2.0 * sp, max_relative = 1e-13);
        assert_relative_eq!(g, -3.544_907_7, max_relative = 1e-7);
        assert_relative_eq!(gamma(-1.5).unwrap(), 4.0 / 3.0 * sp, max_relative = 1e-13);
        assert_relative_eq!(gamma(-1.5).unwrap(), 2.363_271_8, max_relative = 1e-7);
        let want = -2.0 * sp * (2.0 - EULER_GAMMA - 2.0 * 2f64.ln());
        assert_relative_eq!(dg, want, max_relative = 1e-12);
        assert_relative_eq!(dg, -0.129_353_589_795_540_06, max_relative = 1e-12);
    }

    #[test]
    fn integers_and_halves() {
        let mut f = 1.0;
        for n in 1..20 {
            assert_relative_eq!(gamma(n as f64).unwrap(), f, max_relative = 1e-13);
            f *= n as f64;
        }
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, max_relative = 1e-14);
        assert_relative_eq!(digamma(0.5).unwrap(), -EULER_GAMMA - 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn poles_are_errors() {
        for x in [0.0, -1.0, -2.0, -17.0] {
            assert!(gamma(x).is_err());
            assert!(digamma(x).is_err());
        }
    }

    #[test]
    fn agrees_with_statrs() {
        for k in 0..400 {
            let x = -4.97 + 0.0371 * k as f64;
            if (x - x.round()).abs() < 1e-3 && x <= 0.0 {
                continue;
            }
            let g = gamma(x).unwrap();
            let s = statrs::function::gamma::gamma(x);
            assert!((g - s).abs() <= 1e-12 * s.abs(), "x = {x}: {g} vs {s}");
            if x > 0.0 {
                let d = digamma(x).unwrap();
                let sd = statrs::function::gamma::digamma(x);
                assert!((d - sd).abs() <= 1e-12 * sd.abs().max(1.0), "psi({x}): {d} vs {sd}");
            }
        }
    }

    #[test]
    fn digamma_recurrence() {
        for k in 0..200 {
            let x = -3.9 + 0.0437 * k as f64;
            if is_pole(x) || is_pole(x + 1.0) {
                continue;
            }
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "x = {x}");
        }
    }
}
