//! Reaction terms, initial data and the tilted field w(z,t) = h(z+2t,t)·e^z.

use std::fmt;
use std::sync::Arc;

use crate::error::{KppError, Result};
use crate::interp::pchip_uniform;

type ReactionFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The nonlinearity F in h_t = h_xx + h - F(h).
#[derive(Clone)]
pub enum Nonlinearity {
    /// F = 0: the linearised equation, used as a closed-form oracle.
    Zero,
    /// F(h) = h².
    Quadratic,
    /// F(h) = h^(1+p).
    Power { p: f64 },
    /// User supplied F; `p` is the exponent of F'(h) ~ h^p near zero.
    Custom {
        name: String,
        f: ReactionFn,
        p: f64,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Zero => write!(fm, "Zero"),
            Nonlinearity::Quadratic => write!(fm, "Quadratic"),
            Nonlinearity::Power { p } => write!(fm, "Power {{ p: {p} }}"),
            Nonlinearity::Custom { name, p, .. } => write!(fm, "Custom {{ name: {name}, p: {p} }}"),
        }
    }
}

impl Nonlinearity {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(KppError::InvalidParameter(format!("power exponent p = {p} must be positive")));
        }
        Ok(Nonlinearity::Power { p })
    }

    /// Wrap a closure, checking F(0)=0, F(1)=1, 0 ≤ F(h) < h and monotonicity on a sample grid.
    pub fn custom<F>(name: &str, f: F, p: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if f(0.0) != 0.0 || f(1.0) != 1.0 {
            return Err(KppError::InvalidParameter(format!("{name}: need F(0)=0 and F(1)=1 exactly")));
        }
        if !(p > 0.0) {
            return Err(KppError::InvalidParameter(format!("{name}: tail exponent must be positive")));
        }
        let mut prev = 0.0;
        for k in 1..1000 {
            let h = k as f64 / 1000.0;
            let v = f(h);
            if !(v >= 0.0 && v < h && v >= prev) {
                return Err(KppError::InvalidParameter(format!(
                    "{name}: Bramson conditions fail at h = {h} (F = {v})"
                )));
            }
            prev = v;
        }
        Ok(Nonlinearity::Custom {
            name: name.to_string(),
            f: Arc::new(f),
            p,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::Quadratic => "quadratic".into(),
            Nonlinearity::Power { p } => format!("power({p})"),
            Nonlinearity::Custom { name, .. } => name.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    /// F(h).
    #[inline]
    pub fn f(&self, h: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Quadratic => h * h,
            Nonlinearity::Power { p } => {
                if h <= 0.0 {
                    0.0
                } else {
                    h.powf(1.0 + p)
                }
            }
            Nonlinearity::Custom { f, .. } => f(h.clamp(0.0, 1.0)),
        }
    }

    /// G(h) = F(h)/h with G(0) = 0.
    #[inline]
    pub fn g(&self, h: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Quadratic => h,
            Nonlinearity::Power { p } => {
                if h <= 0.0 {
                    0.0
                } else {
                    h.powf(*p)
                }
            }
            Nonlinearity::Custom { f, .. } => {
                if h <= 0.0 {
                    0.0
                } else {
                    let hc = h.min(1.0);
                    f(hc) / hc
                }
            }
        }
    }

    /// Tail exponent p (F'(h) ~ h^p near 0). Infinite for F = 0.
    pub fn p(&self) -> f64 {
        match self {
            Nonlinearity::Zero => f64::INFINITY,
            Nonlinearity::Quadratic => 1.0,
            Nonlinearity::Power { p } => *p,
            Nonlinearity::Custom { p, .. } => *p,
        }
    }

    /// F'(1).
    pub fn df_at_one(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Quadratic => 2.0,
            Nonlinearity::Power { p } => 1.0 + p,
            Nonlinearity::Custom { f, .. } => {
                let d = 1e-5;
                (3.0 * f(1.0) - 4.0 * f(1.0 - d) + f(1.0 - 2.0 * d)) / (2.0 * d)
            }
        }
    }

    /// (1-u) - F(1-u), evaluated without cancellation for small u where possible.
    pub fn defect_near_one(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 1.0 - u,
            Nonlinearity::Quadratic => u - u * u,
            Nonlinearity::Power { p } => (1.0 - u) * -(p * (-u).ln_1p()).exp_m1(),
            Nonlinearity::Custom { f, .. } => (1.0 - u) - f(1.0 - u),
        }
    }
}

/// Initial profile h₀.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// 1 for x < 0, 0 for x > 0 (1/2 at the jump).
    Step,
    /// Step plus a bounded perturbation given by equally spaced samples on [lo, hi],
    /// linearly interpolated; the sum is clamped to [0, 1].
    StepPlusBump { lo: f64, hi: f64, samples: Vec<f64> },
    /// min(1, e^{-γ₀x}) with γ₀ > 1.
    ExpTail { gamma0: f64 },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::Step => Ok(()),
            InitialCondition::StepPlusBump { lo, hi, samples } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(KppError::InvalidParameter("bump support must satisfy lo < hi".into()));
                }
                if samples.len() < 2 || samples.iter().any(|s| !s.is_finite()) {
                    return Err(KppError::InvalidParameter("bump needs at least two finite samples".into()));
                }
                Ok(())
            }
            InitialCondition::ExpTail { gamma0 } => {
                if *gamma0 > 1.0 && gamma0.is_finite() {
                    Ok(())
                } else {
                    Err(KppError::InvalidParameter(format!("ExpTail needs gamma0 > 1, got {gamma0}")))
                }
            }
        }
    }

    /// Moment abscissa γ = sup{r : ∫h₀e^{rx} < ∞}.
    pub fn gamma(&self) -> f64 {
        match self {
            InitialCondition::ExpTail { gamma0 } => *gamma0,
            _ => f64::INFINITY,
        }
    }

    fn bump_at(lo: f64, hi: f64, samples: &[f64], x: f64) -> f64 {
        if x < lo || x > hi {
            return 0.0;
        }
        let dx = (hi - lo) / (samples.len() - 1) as f64;
        crate::interp::linear_uniform(samples, lo, dx, x).unwrap_or(0.0)
    }

    /// h₀(x).
    pub fn h0(&self, x: f64) -> f64 {
        let step = if x.abs() < 1e-12 {
            0.5
        } else if x < 0.0 {
            1.0
        } else {
            0.0
        };
        match self {
            InitialCondition::Step => step,
            InitialCondition::StepPlusBump { lo, hi, samples } => {
                (step + Self::bump_at(*lo, *hi, samples, x)).clamp(0.0, 1.0)
            }
            InitialCondition::ExpTail { gamma0 } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-gamma0 * x).exp()
                }
            }
        }
    }

    /// Right end of the region where h₀ differs from the plain step by more than 1e-12·e^{-z}.
    pub fn transition_hi(&self) -> f64 {
        self.transition().1
    }

    /// Interval outside of which h₀ is exactly the step (or its exponential tail).
    fn transition(&self) -> (f64, f64) {
        match self {
            InitialCondition::Step => (0.0, 0.0),
            InitialCondition::StepPlusBump { lo, hi, .. } => (lo.min(0.0), hi.max(0.0)),
            InitialCondition::ExpTail { gamma0 } => (0.0, 27.7 / (gamma0 - 1.0)),
        }
    }
}

fn simpson_converged<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let mut n = 16usize;
    let mut prev = f64::NAN;
    loop {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + k as f64 * h);
        }
        let cur = s * h / 3.0;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) || n >= 1 << 22 {
            return cur;
        }
        prev = cur;
        n *= 2;
    }
}

/// g(r,0) = ∫h₀(x)e^{rx}dx; +∞ when r ≥ γ.
pub fn h0_moment(ic: &InitialCondition, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(KppError::InvalidParameter(format!("moment order r = {r} must be positive")));
    }
    ic.validate()?;
    match ic {
        InitialCondition::Step => Ok(1.0 / r),
        InitialCondition::ExpTail { gamma0 } => {
            if r >= *gamma0 {
                Ok(f64::INFINITY)
            } else {
                Ok(1.0 / r + 1.0 / (gamma0 - r))
            }
        }
        InitialCondition::StepPlusBump { lo, hi, samples } => {
            let dx = (hi - lo) / (samples.len() - 1) as f64;
            let mut cuts: Vec<f64> = (0..samples.len()).map(|k| lo + k as f64 * dx).collect();
            if *lo < 0.0 && *hi > 0.0 {
                cuts.push(0.0);
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let diff = |x: f64| (ic.h0(x) - InitialCondition::Step.h0(x)) * (r * x).exp();
            let mut extra = 0.0;
            for pair in cuts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if b - a > 0.0 {
                    // keep off the jump so the one-sided limits are used
                    let eps = 1e-14 * (1.0 + a.abs().max(b.abs()));
                    let (aa, bb) = if a == 0.0 { (eps, b) } else if b == 0.0 { (a, -eps) } else { (a, b) };
                    extra += simpson_converged(&diff, aa, bb, 1e-10);
                }
            }
            Ok(1.0 / r + extra)
        }
    }
}

/// Solver state: w on the uniform grid z_i = z_lo + i·dz at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedField {
    pub t: f64,
    pub z_lo: f64,
    pub dz: f64,
    pub w: Vec<f64>,
    /// Right edge the window policy currently asks for.
    pub z_hi_target: f64,
}

impl TiltedField {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        self.z_lo + i as f64 * self.dz
    }

    pub fn z_hi(&self) -> f64 {
        self.z(self.w.len().saturating_sub(1))
    }

    /// h at node i.
    #[inline]
    pub fn h(&self, i: usize) -> f64 {
        let w = self.w[i];
        if w == 0.0 {
            0.0
        } else {
            w * (-self.z(i)).exp()
        }
    }

    /// Monotone-cubic interpolant of w at tilted coordinate z.
    pub fn w_at(&self, z: f64) -> Result<f64> {
        pchip_uniform(&self.w, self.z_lo, self.dz, z).ok_or(KppError::OutOfWindow {
            z,
            lo: self.z_lo,
            hi: self.z_hi(),
        })
    }

    /// Unclamped h at tilted coordinate z (node values are reproduced exactly).
    pub fn h_at_z(&self, z: f64) -> Result<f64> {
        let s = (z - self.z_lo) / self.dz;
        let k = s.round();
        if (s - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.w.len() {
            return Ok(self.h(k as usize));
        }
        Ok(self.w_at(z)? * (-z).exp())
    }

    /// Check the state invariants. `h_cap` is the allowed maximum of h (None skips it).
    pub fn check_invariants(&self, h_cap: Option<f64>, left_h: f64) -> Result<()> {
        let mut wmax: f64 = 0.0;
        for (i, &w) in self.w.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(KppError::InvalidParameter(format!("w[{i}] = {w} is not a nonnegative number")));
            }
            wmax = wmax.max(w);
            if let Some(cap) = h_cap {
                let h = self.h(i);
                if h > cap {
                    return Err(KppError::InvalidParameter(format!("h = {h} exceeds {cap} at z = {}", self.z(i))));
                }
            }
        }
        let left = self.w[0] * (-self.z_lo).exp();
        if (left - left_h).abs() > 1e-10 * left_h.max(1.0) {
            return Err(KppError::InvalidParameter(format!("left boundary h = {left}, expected {left_h}")));
        }
        let right = *self.w.last().unwrap_or(&0.0);
        if right > 1e-12 * wmax {
            return Err(KppError::InvalidParameter(format!("right boundary w = {right} not negligible")));
        }
        Ok(())
    }
}

/// Sample w(z,0) = h₀(z)e^z on [z_lo, z_hi] with spacing dz.
pub fn tilt(ic: &InitialCondition, z_lo: f64, dz: f64, z_hi: f64) -> Result<TiltedField> {
    ic.validate()?;
    if !(dz > 0.0) || !(z_lo <= -30.0) || !(z_hi > z_lo) {
        return Err(KppError::InvalidParameter(format!(
            "grid needs dz > 0, z_lo <= -30, z_hi > z_lo (got dz={dz}, z_lo={z_lo}, z_hi={z_hi})"
        )));
    }
    let (a, b) = ic.transition();
    if !(a > z_lo + 5.0 * dz && b < z_hi - 5.0 * dz) {
        return Err(KppError::GridTooNarrow(format!(
            "initial transition [{a}, {b}] not inside ({z_lo}, {z_hi})"
        )));
    }
    let n = ((z_hi - z_lo) / dz).round() as usize + 1;
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            let z = z_lo + i as f64 * dz;
            ic.h0(z) * z.exp()
        })
        .collect();
    w[n - 1] = 0.0;
    Ok(TiltedField {
        t: 0.0,
        z_lo,
        dz,
        w,
        z_hi_target: z_hi,
    })
}

/// h(x,t) from the tilted field, clamped to [0, 1].
pub fn untilt_h(field: &TiltedField, x: f64) -> Result<f64> {
    let z = x - 2.0 * field.t;
    Ok(field.h_at_z(z)?.clamp(0.0, 1.0))
}
