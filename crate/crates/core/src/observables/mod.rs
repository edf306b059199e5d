//! Observables of solver runs and four estimators of the prefactor Φ(c).
//!
//! * amplitude: √(4πt)·e^{(c²/4−1)t}·h(ct,t), extrapolated in t;
//! * moment: e^{−t(1+c²/4)}·g(c/2,t);
//! * magical: g(1+ε,0) − ∫₀^∞ e^{−ε²t}J(ε,t)dt with c = 2+2ε, the integral
//!   accumulated during the run and closed by a tail built from φ̂ and the fitted front;
//! * Feynman–Kac: Monte Carlo over Brownian paths in the archived field.

pub mod fk;
pub mod front;
pub mod recorder;

use std::f64::consts::PI;

pub use fk::{fk_phi, FkArchive, FkArchiveSpec, FkSettings};
pub use front::{front_offset, g_moment, mu_of_t, phi_eps_t};
pub use recorder::{run_front, FrontRun, MagicSeries, RecorderConfig};

use crate::asymptotics::expansion::{mu_expansion, ExpansionCoefficients};
use crate::asymptotics::quadrature::integrate_to_infinity;
use crate::error::{KppError, Result};
use crate::model::h0_moment;
use crate::wave::{phi_hat, WaveProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Route {
    Amplitude,
    Moment,
    Magical,
    FeynmanKac,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Amplitude => "amplitude",
            Route::Moment => "moment",
            Route::Magical => "magical",
            Route::FeynmanKac => "feynman_kac",
        }
    }
}

/// One estimate of Φ(c).
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEstimate {
    pub c: f64,
    pub value: f64,
    pub uncertainty: f64,
    pub route: Route,
    /// Named diagnostic numbers (samples used, tail share, ...).
    pub diagnostics: Vec<(String, f64)>,
    /// Warnings such as "low-signal" or "unreliable".
    pub flags: Vec<String>,
}

impl PhiEstimate {
    pub fn new(c: f64, value: f64, uncertainty: f64, route: Route) -> Self {
        PhiEstimate {
            c,
            value,
            uncertainty: uncertainty.abs(),
            route,
            diagnostics: Vec::new(),
            flags: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.diagnostics.push((key.to_string(), v));
        self
    }

    pub fn flag(mut self, f: &str) -> Self {
        self.flags.push(f.to_string());
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.iter().find(|(k, _)| k == key).map(|p| p.1)
    }
}

/// Two-point Richardson extrapolants of s(t) = Φ + A·t^{−p}; the last one is the estimate
/// and the spread of the last two the uncertainty.
pub fn richardson(samples: &[(f64, f64)], p: f64) -> Result<(f64, f64)> {
    if samples.len() < 3 {
        return Err(KppError::InvalidParameter(format!(
            "{} samples; extrapolation needs at least three",
            samples.len()
        )));
    }
    let ext: Vec<f64> = samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].0.powf(p), w[1].0.powf(p));
            (b * w[1].1 - a * w[0].1) / (b - a)
        })
        .collect();
    let n = ext.len();
    Ok((ext[n - 1], (ext[n - 1] - ext[n - 2]).abs()))
}

/// Settings of the amplitude route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSettings {
    /// Snapshots before this time are ignored.
    pub t_min: f64,
    /// Exponent of the t^{−p} correction removed by extrapolation.
    pub order: f64,
}

impl Default for AmplitudeSettings {
    fn default() -> Self {
        AmplitudeSettings { t_min: 20.0, order: 1.0 }
    }
}

fn check_c(run: &FrontRun, c: f64) -> Result<()> {
    if !(c > 2.0 && c <= run.params.c_max + 1e-12) {
        return Err(KppError::InvalidParameter(format!(
            "velocity c = {c} outside (2, c_max = {}]",
            run.params.c_max
        )));
    }
    Ok(())
}

/// Growth rate of e^{λz} under the discrete Laplacian with Crank–Nicolson steps;
/// λ² in the continuum.
pub fn discrete_rate(lambda: f64, dz: f64, dt: f64) -> f64 {
    let s = (0.5 * lambda * dz).sinh();
    let k = 4.0 * s * s / (dz * dz);
    ((1.0 + 0.5 * k * dt) / (1.0 - 0.5 * k * dt)).ln() / dt
}

/// Saddle point of the discrete heat kernel along z = vt: exponent rate and curvature,
/// −v²/4 and 2 in the continuum.
fn discrete_saddle(v: f64, dz: f64, dt: f64) -> (f64, f64) {
    let rho = |l: f64| discrete_rate(l, dz, dt);
    let h = 1e-4;
    let d1 = |l: f64| (rho(l + h) - rho(l - h)) / (2.0 * h);
    let d2 = |l: f64| (rho(l + h) - 2.0 * rho(l) + rho(l - h)) / (h * h);
    let mut lam = 0.5 * v;
    for _ in 0..50 {
        let step = (d1(lam) - v) / d2(lam);
        lam -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    (rho(lam) - lam * v, d2(lam))
}

/// s(t) = √(4πt)·w((c−2)t, t)·e^{(c−2)²t/4} at each usable snapshot, with the heat kernel
/// factors taken from the discrete Laplacian.
pub fn amplitude_series(run: &FrontRun, c: f64, t_min: f64) -> Result<(Vec<(f64, f64)>, usize)> {
    let mut out = Vec::new();
    let mut low = 0;
    let v = c - 2.0;
    let (rate, curv) = discrete_saddle(v, run.params.dz, run.params.dt);
    for snap in &run.snapshots {
        let f = &snap.field;
        let t = f.t;
        if t < t_min {
            continue;
        }
        let w = f.w_at(v * t)?;
        if v * v * t / 4.0 > 700.0 || w < 1e-250 {
            low += 1;
            continue;
        }
        let ls = 0.5 * (2.0 * PI * curv * t).ln() + w.ln() - rate * t;
        out.push((t, ls.exp()));
    }
    Ok((out, low))
}

/// Φ(c) from the amplitude of h along the ray x = ct.
pub fn phi_amplitude(run: &FrontRun, c: f64, set: AmplitudeSettings) -> Result<PhiEstimate> {
    check_c(run, c)?;
    let (s, low) = amplitude_series(run, c, set.t_min)?;
    if s.len() < 4 {
        return Err(KppError::InvalidParameter(format!(
            "{} usable snapshots for c = {c}; need at least four",
            s.len()
        )));
    }
    let (v, u) = richardson(&s, set.order)?;
    let mut e = PhiEstimate::new(c, v.max(0.0), u, Route::Amplitude)
        .with("samples", s.len() as f64)
        .with("t_last", s[s.len() - 1].0)
        .with("s_last", s[s.len() - 1].1);
    if low > 0 {
        e = e.flag("low-signal");
    }
    Ok(e)
}

/// (t, e^{−t(1+c²/4)}·g(c/2, t)) at the snapshots; (c/2−1)² is replaced by its discrete
/// counterpart so that F = 0 gives a constant sequence.
pub fn moment_series(run: &FrontRun, c: f64, t_min: f64) -> Result<Vec<(f64, f64)>> {
    let r = 0.5 * c;
    let rate = 2.0 * r + discrete_rate(r - 1.0, run.params.dz, run.params.dt);
    let mut out = Vec::new();
    for (snap, &hl) in run.snapshots.iter().zip(&run.snapshot_h_left) {
        let t = snap.field.t;
        if t < t_min {
            continue;
        }
        let g = g_moment(&snap.field, hl, r)?;
        out.push((t, g.scale_exp(-t * rate).to_f64()));
    }
    Ok(out)
}

/// Φ(c) from the exponential moment g(c/2, t). The sequence converges like e^{−(c/2−1)²t},
/// so the last value is the estimate and the last increment the uncertainty.
pub fn phi_moment(run: &FrontRun, c: f64, t_min: f64) -> Result<PhiEstimate> {
    check_c(run, c)?;
    let s = moment_series(run, c, t_min)?;
    if s.len() < 4 {
        return Err(KppError::InvalidParameter(format!(
            "{} snapshots for the moment route; need at least four",
            s.len()
        )));
    }
    let n = s.len();
    Ok(
        PhiEstimate::new(c, s[n - 1].1.max(0.0), (s[n - 1].1 - s[n - 2].1).abs(), Route::Moment)
            .with("samples", n as f64)
            .with("t_last", s[n - 1].0),
    )
}

/// Ingredients of the t > t_max completion: fitted front expansion and travelling wave.
#[derive(Debug, Clone, Copy)]
pub struct TailModel<'a> {
    pub mu: &'a ExpansionCoefficients,
    pub wave: &'a WaveProfile,
}

/// ∫_{t_max}^∞ e^{−ε²t}J dt with J = φ̂(ε)e^{(1+ε)(μ̂_t−2t)}, and the same tail rescaled to match
/// the recorded J at t_max.
fn magic_tail(run: &FrontRun, ms: &MagicSeries, tail: Option<TailModel>) -> Result<(f64, f64)> {
    if run.nonlinearity.is_zero() {
        return Ok((0.0, 0.0));
    }
    let tm = tail.ok_or_else(|| KppError::InvalidParameter("a tail model is required for F ≠ 0".into()))?;
    let eps = ms.eps;
    let ph = phi_hat(eps, tm.wave)?;
    let t0 = run.t_max;
    let model = |t: f64| -> f64 {
        let m = mu_expansion(t, tm.mu).unwrap_or(f64::NAN) - 2.0 * t;
        ph * (-eps * eps * t + (1.0 + eps) * m).exp()
    };
    let scale = (1.0 / (eps * eps).max(1e-12)).min(10.0 * t0.max(1.0));
    let q = integrate_to_infinity(model, t0, scale, 0.0, 1e-10)?;
    let at_end = model(t0);
    let matched = if at_end > 0.0 {
        q.value * (-eps * eps * t0).exp() * ms.last_j / at_end
    } else {
        q.value
    };
    Ok((q.value, matched))
}

fn check_magic_eps(run: &FrontRun, eps: f64) -> Result<&MagicSeries> {
    let gmax = run.ic.gamma() - 1.0;
    if !(eps > -0.9 && eps < gmax.min(0.5) && eps != 0.0) {
        return Err(KppError::EpsilonRange {
            eps,
            lo: -0.9,
            hi: gmax.min(0.5),
        });
    }
    run.magic_for(eps)
        .ok_or_else(|| KppError::InvalidParameter(format!("eps = {eps} was not accumulated during the run")))
}

/// ∫₀^∞ e^{−ε²t}J(ε,t)dt: recorded part plus tail, with its uncertainty and the tail share.
pub fn magic_integral(run: &FrontRun, eps: f64, tail: Option<TailModel>) -> Result<(f64, f64, f64)> {
    let ms = check_magic_eps(run, eps)?;
    let (tl, matched) = magic_tail(run, ms, tail)?;
    let total = ms.integral + tl;
    let unc = ms.quadrature_error() + (matched - tl).abs();
    Ok((total, unc, tl))
}

/// Φ(2+2ε) from the magical relation.
pub fn phi_magical(run: &FrontRun, eps: f64, tail: Option<TailModel>) -> Result<PhiEstimate> {
    if !(eps > 0.0) {
        return Err(KppError::EpsilonRange {
            eps,
            lo: 0.0,
            hi: (run.ic.gamma() - 1.0).min(0.5),
        });
    }
    let (integral, unc, tl) = magic_integral(run, eps, tail)?;
    let g0 = h0_moment(&run.ic, 1.0 + eps)?;
    let value = g0 - integral;
    let mut e = PhiEstimate::new(2.0 + 2.0 * eps, value.max(0.0), unc, Route::Magical)
        .with("eps", eps)
        .with("tail", tl)
        .with("t_max", run.t_max);
    if tl.abs() > 0.1 * value.abs() {
        e = e.flag("unreliable");
    }
    Ok(e)
}

/// (LHS, RHS) of ∫₀^∞φ(ε,t)e^{−ε²t+(1+ε)(μ_t−2t)}dt = g(1+ε,0) − 1_{ε>0}Φ(2+2ε).
pub fn magic_sides(run: &FrontRun, eps: f64, tail: Option<TailModel>, phi: Option<&PhiEstimate>) -> Result<(f64, f64)> {
    let (lhs, _, _) = magic_integral(run, eps, tail)?;
    let mut rhs = h0_moment(&run.ic, 1.0 + eps)?;
    if run.nonlinearity.is_zero() && eps < 0.0 {
        // without saturation e^{−(1+r²)t}g(r,t) is conserved for every r
        rhs = 0.0;
    } else if eps > 0.0 {
        let p = phi.ok_or_else(|| KppError::InvalidParameter("positive eps needs a Φ estimate".into()))?;
        if (p.c - (2.0 + 2.0 * eps)).abs() > 1e-12 {
            return Err(KppError::InvalidParameter(format!("Φ estimate at c = {} for eps = {eps}", p.c)));
        }
        rhs -= p.value;
    }
    Ok((lhs, rhs))
}

/// LHS − RHS of the magical relation; see [`magic_sides`].
pub fn magical_residual(run: &FrontRun, eps: f64, tail: Option<TailModel>, phi: Option<&PhiEstimate>) -> Result<f64> {
    let (lhs, rhs) = magic_sides(run, eps, tail, phi)?;
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialCondition, Nonlinearity};
    use crate::pde_solver::SolverParams;

    fn linear_run() -> FrontRun {
        let p = SolverParams {
            c_max: 4.0,
            ..SolverParams::default()
        };
        let cfg = RecorderConfig {
            magic_eps: vec![-0.25, 0.25],
            ..RecorderConfig::default()
        };
        run_front(&InitialCondition::Step, Nonlinearity::Zero, p, 100.0, &cfg).unwrap()
    }

    #[test]
    fn richardson_removes_leading_term() {
        let s: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&t| (t, 2.0 + 3.0 / t)).collect();
        let (v, u) = richardson(&s, 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-13 && u < 1e-13);
        assert!(richardson(&s[..2], 1.0).is_err());
    }

    #[test]
    fn linear_prefactor_all_routes() {
        let run = linear_run();
        for c in [2.5, 3.0, 4.0] {
            let a = phi_amplitude(&run, c, AmplitudeSettings::default()).unwrap();
            let m = phi_moment(&run, c, 10.0).unwrap();
            for e in [&a, &m] {
                assert!((e.value - 2.0 / c).abs() < 0.01 * 2.0 / c, "{c} {:?}", e);
            }
        }
        let g = phi_magical(&run, 0.25, None).unwrap();
        assert!((g.value - 0.8).abs() < 1e-15);
        for e in [-0.25, 0.25] {
            let phi = PhiEstimate::new(2.5, 0.8, 0.0, Route::Amplitude);
            assert!(magical_residual(&run, e, None, Some(&phi)).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn route_preconditions() {
        let run = linear_run();
        assert!(phi_amplitude(&run, 2.0, AmplitudeSettings::default()).is_err());
        assert!(phi_amplitude(&run, 4.5, AmplitudeSettings::default()).is_err());
        assert!(phi_magical(&run, 0.1, None).is_err());
        assert!(phi_magical(&run, -0.25, None).is_err());
        assert!(magical_residual(&run, 0.25, None, None).is_err());
    }

    #[test]
    fn recorded_series_shapes() {
        let run = linear_run();
        assert!(run.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(run.times.len(), 201);
        assert_eq!(run.phi[0].len(), run.times.len());
        assert!(run.phi[0].iter().all(|&v| v == 0.0));
        let ts: Vec<f64> = run.snapshots.iter().map(|s| s.field.t).collect();
        assert!(ts.contains(&10.0) && ts.contains(&100.0));
        assert!(ts.windows(2).all(|w| w[1] <= 1.15 * w[0] + 0.01 + 1e-9), "{ts:?}");
    }
}
