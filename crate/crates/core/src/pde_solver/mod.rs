//! Time stepping of the tilted equation w_t = w_zz - w·G(w e^{-z}).
//!
//! Diffusion is Crank–Nicolson, the reaction is extrapolated to the half step
//! from the two previous levels (one tridiagonal solve per step). The first
//! steps are replaced by pairs of backward-Euler half steps to damp the
//! initial jump. The reaction is multiplied by the discrete growth rate
//! κ = (2cosh Δz − 2)/Δz² of e^z so that h ≡ 1 is an exact discrete state.

pub mod archive;
mod tridiag;

pub use archive::{read_manifest, read_snapshot, write_manifest, write_snapshot, ManifestEntry, Snapshot};
pub use tridiag::TridiagFactor;

use crate::error::{KppError, Result};
use crate::model::{tilt, InitialCondition, Nonlinearity, TiltedField};

/// Values of w below this are set to zero.
const FLUSH: f64 = 1e-280;

/// Grid, time step and window policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub dz: f64,
    pub dt: f64,
    pub z_lo: f64,
    /// Diffusive width factor K_σ in the right-edge policy.
    pub k_sigma: f64,
    /// Largest velocity whose ray (c-2)t must stay inside the window.
    pub c_max: f64,
    pub margin: f64,
    /// Geometric growth factor of the window length when it is extended.
    pub growth: f64,
    /// Number of leading steps done as two backward-Euler half steps.
    pub rannacher_steps: u64,
    /// Abort when the field is not negligible next to the right edge.
    pub enforce_edge: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            dz: 0.02,
            dt: 0.01,
            z_lo: -40.0,
            k_sigma: 12.0,
            c_max: 2.0,
            margin: 30.0,
            growth: 1.5,
            rannacher_steps: 2,
            enforce_edge: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(KppError::InvalidParameter(m.to_string()));
        if !(self.dz > 0.0 && self.dt > 0.0) {
            return bad("dz and dt must be positive");
        }
        if self.dt > self.dz * (1.0 + 1e-12) {
            return bad("accuracy guard requires dt <= dz");
        }
        if !(self.z_lo <= -30.0) {
            return bad("z_lo must be <= -30");
        }
        if !(self.c_max >= 2.0 && self.k_sigma > 0.0 && self.margin > 0.0 && self.growth > 1.0) {
            return bad("window policy needs c_max >= 2, k_sigma > 0, margin > 0, growth > 1");
        }
        Ok(())
    }

    /// Right edge required at time t: the ray (c_max−2)t plus a diffusive width and the margin.
    pub fn required_z_hi(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        (self.c_max - 2.0) * t + self.k_sigma * t.sqrt() + self.margin
    }

    /// (2cosh Δz − 2)/Δz².
    pub fn kappa(&self) -> f64 {
        let s = (0.5 * self.dz).sinh();
        4.0 * s * s / (self.dz * self.dz)
    }
}

/// Solver state: the field plus cached factorization and reaction history.
#[derive(Debug, Clone)]
pub struct Solver {
    field: TiltedField,
    nl: Nonlinearity,
    params: SolverParams,
    kappa: f64,
    h_left: f64,
    steps: u64,
    factor: TridiagFactor,
    einv: Vec<f64>,
    r_prev: Vec<f64>,
    buf: Vec<f64>,
    max_clamp_rel: f64,
    max_h: f64,
    regrids: usize,
}

impl Solver {
    pub fn new(ic: &InitialCondition, nl: Nonlinearity, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let z_hi = params.required_z_hi(0.0).max(ic.transition_hi() + 10.0);
        let field = tilt(ic, params.z_lo, params.dz, z_hi)?;
        let h_left = ic.h0(params.z_lo);
        Self::from_field(field, nl, params, h_left)
    }

    /// Start from an arbitrary field; `h_left` is the value of h at the left edge.
    pub fn from_field(mut field: TiltedField, nl: Nonlinearity, params: SolverParams, h_left: f64) -> Result<Self> {
        params.validate()?;
        if field.len() < 4 {
            return Err(KppError::GridTooNarrow("need at least four nodes".into()));
        }
        if (field.dz - params.dz).abs() > 1e-15 || (field.z_lo - params.z_lo).abs() > 1e-12 {
            return Err(KppError::InvalidParameter("field grid does not match solver params".into()));
        }
        let n = field.len();
        field.w[0] = h_left * params.z_lo.exp();
        field.w[n - 1] = 0.0;
        field.z_hi_target = params.required_z_hi(field.t);
        let a = 0.5 * params.dt / (params.dz * params.dz);
        let einv = (0..n).map(|i| (-field.z(i)).exp()).collect();
        Ok(Solver {
            factor: TridiagFactor::new(a, n - 2),
            kappa: params.kappa(),
            einv,
            r_prev: vec![0.0; n],
            buf: vec![0.0; n],
            field,
            nl,
            params,
            h_left,
            steps: 0,
            max_clamp_rel: 0.0,
            max_h: 0.0,
            regrids: 0,
        })
    }

    pub fn field(&self) -> &TiltedField {
        &self.field
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn t(&self) -> f64 {
        self.field.t
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// h at the left edge (1 for Bramson F, e^{κt} for F = 0).
    pub fn h_left(&self) -> f64 {
        self.h_left
    }

    /// Largest clamped negative value relative to max w seen so far.
    pub fn max_clamp_rel(&self) -> f64 {
        self.max_clamp_rel
    }

    /// Largest h seen in any reaction evaluation.
    pub fn max_h(&self) -> f64 {
        self.max_h
    }

    pub fn regrids(&self) -> usize {
        self.regrids
    }

    /// Precomputed e^{-z_i}.
    pub fn einv(&self) -> &[f64] {
        &self.einv
    }

    /// log of e^{κt}·½erfc((z_lo+2t)/(2√t)), the linear step solution at the left edge.
    fn linear_left_log(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let x = (self.params.z_lo + 2.0 * t) / (2.0 * t.sqrt());
        let e = if x > 0.0 { (0.5 * erfcx(x)).ln() - x * x } else { (0.5 * erfc(x)).ln() };
        self.kappa * t + e
    }

    fn advance_left(&self, h: f64, dt: f64) -> f64 {
        if self.nl.is_zero() {
            let t = self.field.t;
            return h * (self.linear_left_log(t + dt) - self.linear_left_log(t)).exp();
        }
        let f = |x: f64| self.kappa * (x - self.nl.f(x));
        let k1 = f(h);
        let k2 = f(h + 0.5 * dt * k1);
        let k3 = f(h + 0.5 * dt * k2);
        let k4 = f(h + dt * k3);
        h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// One pass over the interior computing the reaction R = -κ w G(h) and the
    /// right-hand side. Explicit stage: buf = w + c_lap·Δw + c_now·R + c_old·r_prev.
    /// When `store` is set, R overwrites r_prev.
    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn rhs_pass<G: Fn(f64) -> f64>(
        w: &[f64],
        einv: &[f64],
        r_prev: &mut [f64],
        buf: &mut [f64],
        g: G,
        kappa: f64,
        c_lap: f64,
        c_now: f64,
        c_old: f64,
        store: bool,
        hmax: &mut f64,
    ) {
        let n = w.len();
        let mut hm = *hmax;
        for i in 1..n - 1 {
            let wi = w[i];
            let h = wi * einv[i];
            if h > hm {
                hm = h;
            }
            let r = -kappa * wi * g(h);
            let lap = w[i - 1] - 2.0 * wi + w[i + 1];
            buf[i] = wi + c_lap * lap + c_now * r + c_old * r_prev[i];
            if store {
                r_prev[i] = r;
            }
        }
        *hmax = hm;
    }

    fn build_rhs(&mut self, c_lap: f64, c_now: f64, c_old: f64, store: bool) {
        let kappa = self.kappa;
        let (w, einv) = (&self.field.w, &self.einv);
        let (rp, buf) = (&mut self.r_prev, &mut self.buf);
        let hm = &mut self.max_h;
        match &self.nl {
            Nonlinearity::Zero => Self::rhs_pass(w, einv, rp, buf, |_| 0.0, kappa, c_lap, c_now, c_old, store, hm),
            Nonlinearity::Quadratic => Self::rhs_pass(w, einv, rp, buf, |h| h, kappa, c_lap, c_now, c_old, store, hm),
            nl => Self::rhs_pass(w, einv, rp, buf, |h| nl.g(h), kappa, c_lap, c_now, c_old, store, hm),
        }
    }

    /// Solve (I - aL) x = buf on the interior, install the boundaries, clamp, swap into w.
    fn finish_solve(&mut self, w0: f64) -> Result<()> {
        let n = self.field.len();
        let a = 0.5 * self.params.dt / (self.params.dz * self.params.dz);
        self.buf[1] += a * w0;
        // the floor also flushes values that would turn subnormal
        let (vmax, clamp) = self.factor.solve_clamped(&mut self.buf[1..n - 1], FLUSH);
        let wmax = vmax.max(w0);
        if !wmax.is_finite() {
            return Err(KppError::SolveFailure { t: self.field.t });
        }
        self.buf[0] = w0;
        self.buf[n - 1] = 0.0;
        std::mem::swap(&mut self.field.w, &mut self.buf);
        if wmax > 0.0 {
            self.max_clamp_rel = self.max_clamp_rel.max(clamp / wmax);
        }
        let probe = self.field.w[n - 2];
        if self.params.enforce_edge && probe > 1e-12 * wmax {
            return Err(KppError::WindowPolicy {
                t: self.field.t,
                detail: format!("field reaches the right edge (w = {probe:e}, max = {wmax:e})"),
            });
        }
        Ok(())
    }

    /// Advance by one time step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.params.dt;
        let e_lo = self.params.z_lo.exp();
        if self.steps < self.params.rannacher_steps {
            let half = 0.5 * dt;
            // first half step stores R(w^n) for the extrapolation that follows
            self.build_rhs(0.0, half, 0.0, true);
            self.h_left = self.advance_left(self.h_left, half);
            self.field.t += half;
            self.finish_solve(self.h_left * e_lo)?;
            self.build_rhs(0.0, half, 0.0, false);
            self.h_left = self.advance_left(self.h_left, half);
            self.field.t += half;
            self.finish_solve(self.h_left * e_lo)?;
        } else {
            let a = 0.5 * dt / (self.params.dz * self.params.dz);
            self.build_rhs(a, 1.5 * dt, -0.5 * dt, true);
            self.h_left = self.advance_left(self.h_left, dt);
            self.finish_solve(self.h_left * e_lo)?;
        }
        self.steps += 1;
        self.field.t = self.steps as f64 * dt;
        self.field.z_hi_target = self.params.required_z_hi(self.field.t);
        if self.field.z_hi() < self.field.z_hi_target {
            self.grow();
        }
        Ok(())
    }

    fn grow(&mut self) {
        let p = &self.params;
        let len = self.field.z_hi() - p.z_lo;
        let want = (self.field.z_hi_target - p.z_lo).max(len * p.growth);
        let n_new = (want / p.dz).ceil() as usize + 1;
        let n_old = self.field.len();
        if n_new <= n_old {
            return;
        }
        self.field.w.resize(n_new, 0.0);
        self.r_prev.resize(n_new, 0.0);
        self.buf.resize(n_new, 0.0);
        for i in n_old..n_new {
            self.einv.push((-self.field.z(i)).exp());
        }
        let a = 0.5 * p.dt / (p.dz * p.dz);
        self.factor = TridiagFactor::new(a, n_new - 2);
        self.regrids += 1;
    }
}

/// Callback invoked at t = 0 and after every step.
pub trait Observer {
    fn observe(&mut self, solver: &Solver) -> Result<()>;
}

impl<F: FnMut(&Solver) -> Result<()>> Observer for F {
    fn observe(&mut self, solver: &Solver) -> Result<()> {
        self(solver)
    }
}

/// Run from t = 0 to `t_max` (rounded to a whole number of steps).
pub fn evolve(
    ic: &InitialCondition,
    nl: Nonlinearity,
    params: SolverParams,
    t_max: f64,
    observer: &mut dyn Observer,
) -> Result<Solver> {
    let mut s = Solver::new(ic, nl, params)?;
    let n_steps = (t_max / s.params.dt).round() as u64;
    observer.observe(&s)?;
    for _ in 0..n_steps {
        s.step()?;
        observer.observe(&s)?;
    }
    Ok(s)
}

/// ½e^{z+t}·erfc((z+2t)/(2√t)): the F = 0 solution from the step.
pub fn linear_step_solution(z: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if z < 0.0 { z.exp() } else if z == 0.0 { 0.5 } else { 0.0 };
    }
    let x = (z + 2.0 * t) / (2.0 * t.sqrt());
    if x > 5.0 {
        // scaled form avoids the underflow of erfc
        0.5 * erfcx(x) * (z + t - x * x).exp()
    } else {
        0.5 * (z + t).exp() * erfc(x)
    }
}

/// Complementary error function (double precision).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 0.5 {
        return 1.0 - erf_series(x);
    }
    erfcx(x) * (-x * x).exp()
}

fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -x2 / k;
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Scaled complementary error function e^{x²}erfc(x) for x ≥ 0.5.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.5 {
        return (x * x).exp() * (1.0 - erf_series(x));
    }
    // Lentz continued fraction: erfc(x) = e^{-x²}/√π · 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let ak = k as f64 * 0.5;
        d = x + ak * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + ak / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (f * std::f64::consts::PI.sqrt())
}
