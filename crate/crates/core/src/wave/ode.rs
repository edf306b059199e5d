//! Dormand–Prince 5(4) integrator for planar systems.

use crate::error::{KppError, Result};

pub type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Adaptive integrator with mixed absolute/relative error control.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-14,
            atol: 1e-300,
            h_max: 0.05,
            max_steps: 1_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrate y' = f(x, y) from x0 to x1 (either direction), landing exactly on x1.
    pub fn integrate<F: Fn(f64, &State) -> State>(&self, f: &F, x0: f64, y0: State, x1: f64) -> Result<State> {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut x = x0;
        let mut y = y0;
        let mut h = span.abs().min(self.h_max);
        let mut k1 = f(x, &y);
        for _ in 0..self.max_steps {
            let remaining = (x1 - x).abs();
            if remaining <= 1e-15 * (1.0 + x1.abs()) {
                return Ok(y);
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                x + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                x + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(x + hs, &y_new);
            let mut err2 = 0.0;
            for j in 0..2 {
                let e = hs * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
                let sc = self.atol + self.rtol * y[j].abs().max(y_new[j].abs());
                err2 += (e / sc) * (e / sc);
            }
            let err = (0.5 * err2).sqrt();
            if !err.is_finite() {
                return Err(KppError::WaveDiverged(format!("non-finite state near x = {x}")));
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + hs };
                y = y_new;
                k1 = k7;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs.abs() * fac).min(self.h_max);
            if h < 1e-14 * (1.0 + x.abs()) {
                return Err(KppError::WaveDiverged(format!("step size underflow near x = {x}")));
            }
        }
        Err(KppError::WaveDiverged("too many steps".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let f = |_x: f64, y: &State| [y[1], -y[0]];
        let ode = Dopri5::default();
        let y = ode.integrate(&f, 0.0, [0.0, 1.0], 10.0).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-12);
        assert!((y[1] - 10f64.cos()).abs() < 1e-12);
        let back = ode.integrate(&f, 10.0, y, 0.0).unwrap();
        assert!(back[0].abs() < 1e-12 && (back[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_relative_accuracy() {
        let f = |_x: f64, y: &State| [-y[0], -y[1]];
        let y = Dopri5::default().integrate(&f, 0.0, [1.0, 1e-30], 50.0).unwrap();
        assert!((y[0] / (-50f64).exp() - 1.0).abs() < 1e-11);
        assert!((y[1] / (1e-30 * (-50f64).exp()) - 1.0).abs() < 1e-11);
    }
}
