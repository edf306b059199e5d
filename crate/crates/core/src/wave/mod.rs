//! Critical traveling wave ω'' + 2ω' + ω − F(ω) = 0, ω(0) = 1/2, and its tail.
//!
//! The profile is integrated forward from the unstable manifold of ω = 1, in the
//! variable u = 1 − ω until ω = 1/2 and in ω afterwards. The seed amplitude is
//! tuned so that the crossing of 1/2 falls exactly on ζ = 0.

pub mod ode;

use crate::asymptotics::quadrature::{integrate, simpson_uniform};
use crate::error::{KppError, Result};
use crate::interp::pchip_uniform;
use crate::model::Nonlinearity;
use ode::{Dopri5, State};

/// Sampled wave with its tail coefficients.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub nl: Nonlinearity,
    /// Grid ζ_k = z0 + k·dz, with a node at ζ = 0.
    pub z0: f64,
    pub dz: f64,
    pub omega: Vec<f64>,
    /// 1 − ω where ω > 1/2 (accurate where ω ≈ 1); NaN elsewhere.
    pub one_minus: Vec<f64>,
    /// Tail coefficients from the fit on [ζ_max−15, ζ_max−5].
    pub alpha_t: f64,
    pub beta_t: f64,
    pub fit_window: (f64, f64),
    pub fit_residual: f64,
    /// α̃ from the disjoint window [ζ_max−25, ζ_max−15].
    pub alpha_t_check: f64,
    /// Growth rate of 1 − ω at −∞: √F'(1) − 1.
    pub lambda1: f64,
    /// Index of the first node with ω ≤ 1/2.
    pub junction: usize,
}

impl WaveProfile {
    pub fn z(&self, k: usize) -> f64 {
        self.z0 + k as f64 * self.dz
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.omega.len() - 1)
    }

    pub fn index_of_zero(&self) -> usize {
        (-self.z0 / self.dz).round() as usize
    }

    /// ω(ζ) inside the sampled range.
    pub fn omega_at(&self, z: f64) -> Result<f64> {
        pchip_uniform(&self.omega, self.z0, self.dz, z).ok_or(KppError::OutOfWindow {
            z,
            lo: self.z0,
            hi: self.z_max(),
        })
    }

    /// Max over interior nodes of |ω'' + 2ω' + ω − F(ω)| using sixth-order differences.
    pub fn ode_residual(&self) -> f64 {
        const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        let h = self.dz;
        let n = self.omega.len();
        let mut worst: f64 = 0.0;
        for k in 3..n - 3 {
            // differences of 1-ω on the left branch keep the digits near ω = 1
            let left = k + 3 < self.junction;
            let (mut d1, mut d2) = (0.0, 0.0);
            for j in 0..7 {
                let v = if left { -self.one_minus[k + j - 3] } else { self.omega[k + j - 3] };
                d1 += D1[j] * v;
                d2 += D2[j] * v;
            }
            let (d1, d2) = (d1 / h, d2 / (h * h));
            let w = self.omega[k];
            let rest = if left {
                -self.nl.defect_near_one(self.one_minus[k])
            } else {
                self.nl.f(w) - w
            };
            worst = worst.max((d2 + 2.0 * d1 - rest).abs());
        }
        worst
    }
}

fn rhs(nl: &Nonlinearity) -> impl Fn(f64, &State) -> State + '_ {
    move |_z, y| [y[1], -2.0 * y[1] - y[0] + nl.f(y[0])]
}

/// Same ODE written for u = 1 − ω.
fn rhs_u(nl: &Nonlinearity) -> impl Fn(f64, &State) -> State + '_ {
    move |_z, y| [y[1], -2.0 * y[1] + nl.defect_near_one(y[0])]
}

fn check_range(w: f64, z: f64) -> Result<()> {
    if !(-1e-300..=1.0 + 1e-6).contains(&w) {
        return Err(KppError::WaveDiverged(format!("omega = {w} at z = {z}")));
    }
    Ok(())
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let res = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - icpt).abs())
        .fold(0.0, f64::max);
    (slope, icpt, res)
}

/// Value of 1 − ω at which the unstable manifold of ω = 1 is seeded.
pub const DEFAULT_SEED: f64 = 1e-10;

/// Integrate the manifold branch from u(ζ_L) = a on nodes ζ_L + k·dz until ω reaches 1/2.
/// Returns the sampled u values, the state at the last node and the crossing offset.
fn left_branch(nl: &Nonlinearity, lambda1: f64, a: f64, zeta_l: f64, dz: f64) -> Result<(Vec<f64>, State, f64)> {
    let ode = Dopri5::default();
    let fu = rhs_u(nl);
    let mut u: State = [a, lambda1 * a];
    let mut out = vec![a];
    for k in 1.. {
        let z0 = zeta_l + (k - 1) as f64 * dz;
        let z1 = zeta_l + k as f64 * dz;
        let next = ode.integrate(&fu, z0, u, z1)?;
        if next[0] >= 0.5 {
            let (mut lo, mut hi) = (z0, z1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if ode.integrate(&fu, z0, u, mid)?[0] >= 0.5 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok((out, u, 0.5 * (lo + hi)));
        }
        if !(next[0] > 0.0) || k > 10_000_000 {
            return Err(KppError::WaveDiverged(format!("manifold branch lost at z = {z1}")));
        }
        u = next;
        out.push(u[0]);
    }
    unreachable!()
}

/// Solve for the critical wave on a grid of spacing `dz` up to `z_max`.
pub fn solve_wave(nl: &Nonlinearity, z_max: f64, dz: f64) -> Result<WaveProfile> {
    solve_wave_seeded(nl, z_max, dz, DEFAULT_SEED)
}

/// As [`solve_wave`], seeding the manifold at 1 − ω = `seed`.
pub fn solve_wave_seeded(nl: &Nonlinearity, z_max: f64, dz: f64, seed: f64) -> Result<WaveProfile> {
    if !(z_max >= 30.0) {
        return Err(KppError::InvalidParameter(format!("z_max = {z_max} must be >= 30")));
    }
    if !(dz > 0.0 && dz <= 0.1) {
        return Err(KppError::InvalidParameter(format!("dz = {dz} must be in (0, 0.1]")));
    }
    if !(seed > 0.0 && seed <= 1e-6) {
        return Err(KppError::InvalidParameter(format!("seed = {seed} must be in (0, 1e-6]")));
    }
    if nl.is_zero() {
        return Err(KppError::InvalidParameter("F = 0 has no traveling wave".into()));
    }
    let f1 = nl.df_at_one();
    let lambda1 = f1.sqrt() - 1.0;
    if !(lambda1 > 0.0) {
        return Err(KppError::WaveDiverged(format!("F'(1) = {f1} gives no decaying left mode")));
    }

    // locate ω = 1/2 relative to the seed point, then place the seed on the grid
    let (_, _, cross) = left_branch(nl, lambda1, seed, 0.0, dz)?;
    let k_l = (-cross / dz).floor() as i64;
    let zeta_l = k_l as f64 * dz;
    // ω(0) = 1/2 pins the amplitude at the grid seed point
    let target = |log_a: f64| -> Result<(f64, Vec<f64>, State)> {
        let (us, st, c) = left_branch(nl, lambda1, log_a.exp(), zeta_l, dz)?;
        Ok((c, us, st))
    };
    let mut x0 = seed.ln() + lambda1 * (zeta_l + cross);
    let (mut c0, _, _) = target(x0)?;
    let mut x1 = x0 + lambda1 * c0;
    let (mut c1, mut us, mut st) = target(x1)?;
    for _ in 0..60 {
        if c1.abs() < 1e-14 || c1 == c0 {
            break;
        }
        let x2 = x1 - c1 * (x1 - x0) / (c1 - c0);
        x0 = x1;
        c0 = c1;
        x1 = x2;
        (c1, us, st) = target(x1)?;
    }
    if !(c1.abs() < 1e-11) {
        return Err(KppError::WaveDiverged(format!("crossing offset {c1:e} after normalisation")));
    }

    let ode = Dopri5::default();
    let f = rhs(nl);
    let junction = us.len();
    let mut one_minus = us;
    let mut omega: Vec<f64> = one_minus.iter().map(|u| 1.0 - u).collect();
    let k_max = (z_max / dz).floor() as i64;
    let mut y: State = [1.0 - st[0], -st[1]];
    let mut z = zeta_l + (junction - 1) as f64 * dz;
    for k in (k_l + junction as i64)..=k_max {
        let zk = k as f64 * dz;
        y = ode.integrate(&f, z, y, zk)?;
        check_range(y[0], zk)?;
        z = zk;
        omega.push(y[0]);
        one_minus.push(f64::NAN);
    }
    for k in 1..omega.len() {
        if !(omega[k] < omega[k - 1]) {
            return Err(KppError::WaveDiverged(format!("profile not decreasing at node {k}")));
        }
    }

    let zeta_max = k_max as f64 * dz;
    let mut wave = WaveProfile {
        nl: nl.clone(),
        z0: zeta_l,
        dz,
        omega,
        one_minus,
        alpha_t: f64::NAN,
        beta_t: f64::NAN,
        fit_window: (zeta_max - 15.0, zeta_max - 5.0),
        fit_residual: f64::NAN,
        alpha_t_check: f64::NAN,
        lambda1,
        junction,
    };
    let fit = |lo: f64, hi: f64| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..wave.omega.len())
            .map(|k| (wave.z(k), wave.omega[k]))
            .filter(|(z, _)| *z >= lo - 1e-9 && *z <= hi + 1e-9)
            .map(|(z, w)| (z, z.exp() * w))
            .unzip();
        linear_fit(&xs, &ys)
    };
    let (a1, b1, r1) = fit(zeta_max - 15.0, zeta_max - 5.0);
    let (a2, _, _) = fit(zeta_max - 25.0, zeta_max - 15.0);
    wave.alpha_t = a1;
    wave.beta_t = b1;
    wave.fit_residual = r1;
    wave.alpha_t_check = a2;
    Ok(wave)
}

/// φ̂(ε) = ∫F[ω(ζ)]e^{(1+ε)ζ}dζ with analytic tails beyond the sampled range.
pub fn phi_hat(eps: f64, wave: &WaveProfile) -> Result<f64> {
    let p = wave.nl.p();
    let hi = p.min(1.0);
    if !(eps > -1.0 && eps < hi) {
        return Err(KppError::EpsilonRange { eps, lo: -1.0, hi });
    }
    let r = 1.0 + eps;
    let ys: Vec<f64> = (0..wave.omega.len())
        .map(|k| wave.nl.f(wave.omega[k]) * (r * wave.z(k)).exp())
        .collect();
    let body = simpson_uniform(&ys, wave.dz);
    let zl = wave.z0;
    let ul = wave.one_minus[0];
    let left = (r * zl).exp() * (1.0 / r - wave.nl.df_at_one() * ul / (r + wave.lambda1));
    let zm = wave.z_max();
    let (a, b) = (wave.alpha_t, wave.beta_t);
    let right = match wave.nl {
        Nonlinearity::Quadratic => {
            let k = 1.0 - eps;
            let l = a * zm + b;
            (-k * zm).exp() * (l * l / k + 2.0 * a * l / (k * k) + 2.0 * a * a / (k * k * k))
        }
        _ => {
            let nl = &wave.nl;
            let decay = (p - eps).max(1e-3);
            let span = 80.0 / decay;
            integrate(
                |z: f64| nl.f((a * z + b) * (-z).exp()) * (r * z).exp(),
                zm,
                zm + span,
                1e-16,
                1e-12,
            )?
            .value
        }
    };
    Ok(body + left + right)
}

/// ε²∫ω(ζ)e^{(1+ε)ζ}dζ for ε ∈ (−1, 0); equals φ̂(ε) there.
pub fn phi_hat_via_omega(eps: f64, wave: &WaveProfile) -> Result<f64> {
    if !(eps > -1.0 && eps < 0.0) {
        return Err(KppError::EpsilonRange { eps, lo: -1.0, hi: 0.0 });
    }
    let r = 1.0 + eps;
    let ys: Vec<f64> = (0..wave.omega.len())
        .map(|k| wave.omega[k] * (r * wave.z(k)).exp())
        .collect();
    let body = simpson_uniform(&ys, wave.dz);
    let zl = wave.z0;
    let ul = wave.one_minus[0];
    let left = (r * zl).exp() * (1.0 / r - ul / (r + wave.lambda1));
    let zm = wave.z_max();
    let k = -eps;
    let l = wave.alpha_t * zm + wave.beta_t;
    let right = (-k * zm).exp() * (l / k + wave.alpha_t / (k * k));
    Ok(eps * eps * (body + left + right))
}

/// Tail coefficients after translating the wave by `a`: α = α̃e^a, β = (β̃ − aα̃)e^a.
pub fn shift_coeffs(alpha_t: f64, beta_t: f64, a: f64) -> (f64, f64) {
    let e = a.exp();
    (alpha_t * e, (beta_t - a * alpha_t) * e)
}

/// φ̂(ε) = 1/(1+ε) for a front replaced by a moving absorbing boundary; a reference constant only.
pub fn moving_boundary_phi_hat(eps: f64) -> f64 {
    1.0 / (1.0 + eps)
}
