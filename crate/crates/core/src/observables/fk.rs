//! Feynman–Kac Monte Carlo for Φ(c) over an archive of front-aligned profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{PhiEstimate, Route};
use crate::error::{KppError, Result};
use crate::model::{Nonlinearity, TiltedField};

/// Schedule and extent of the archive recorded for the Monte Carlo route.
#[derive(Debug, Clone, PartialEq)]
pub struct FkArchiveSpec {
    pub t_first: f64,
    pub ratio: f64,
    pub t_end: f64,
    /// Profiles are stored on ζ = z − z*(t) ∈ [zeta_lo, zeta_hi].
    pub zeta_lo: f64,
    pub zeta_hi: f64,
}

impl Default for FkArchiveSpec {
    fn default() -> Self {
        FkArchiveSpec {
            t_first: 0.01,
            ratio: 1.03,
            t_end: 400.0,
            zeta_lo: -30.0,
            zeta_hi: 45.0,
        }
    }
}

/// h(z*(t) + ζ, t) on a fixed ζ grid at increasing times.
#[derive(Debug, Clone)]
pub struct FkArchive {
    pub times: Vec<f64>,
    /// Front offsets z*(t) = μ_t − 2t.
    pub offsets: Vec<f64>,
    pub h_left: Vec<f64>,
    pub zeta_lo: f64,
    pub dzeta: f64,
    pub profiles: Vec<Vec<f64>>,
}

impl FkArchive {
    pub fn new(zeta_lo: f64, dzeta: f64) -> Self {
        FkArchive {
            times: Vec::new(),
            offsets: Vec::new(),
            h_left: Vec::new(),
            zeta_lo,
            dzeta,
            profiles: Vec::new(),
        }
    }

    /// Append the profile of `field` with front offset `m`.
    pub fn push(&mut self, field: &TiltedField, m: f64, h_left: f64, zeta_hi: f64) -> Result<()> {
        if self.times.last().is_some_and(|&t| field.t <= t) {
            return Err(KppError::Archive(format!("time {} is not increasing", field.t)));
        }
        let n = ((zeta_hi - self.zeta_lo) / self.dzeta).round() as usize + 1;
        let mut prof = Vec::with_capacity(n);
        for j in 0..n {
            let z = m + self.zeta_lo + j as f64 * self.dzeta;
            let h = if z <= field.z_lo {
                h_left
            } else if z >= field.z_hi() {
                0.0
            } else {
                field.h_at_z(z)?.clamp(0.0, 1.0)
            };
            prof.push(h);
        }
        self.times.push(field.t);
        self.offsets.push(m);
        self.h_left.push(h_left);
        self.profiles.push(prof);
        Ok(())
    }

    /// Check that consecutive times are close enough for linear interpolation.
    pub fn check_density(&self, max_ratio: f64) -> Result<()> {
        if self.times.len() < 2 {
            return Err(KppError::Archive("fewer than two archived profiles".into()));
        }
        for p in self.times.windows(2) {
            let gap_ok = if p[0] >= 1.0 { p[1] / p[0] <= max_ratio } else { p[1] - p[0] <= max_ratio - 1.0 };
            if !gap_ok {
                return Err(KppError::Archive(format!("gap between t = {} and t = {}", p[0], p[1])));
            }
        }
        Ok(())
    }

    fn profile_at(&self, k: usize, zeta: f64) -> f64 {
        let prof = &self.profiles[k];
        let s = (zeta - self.zeta_lo) / self.dzeta;
        if s <= 0.0 {
            return self.h_left[k];
        }
        let j = s as usize;
        if j + 1 >= prof.len() {
            return 0.0;
        }
        let u = s - j as f64;
        prof[j] + u * (prof[j + 1] - prof[j])
    }

    /// (h, ζ) at tilted position z and time s; `cursor` caches the bracketing index.
    fn h_at(&self, z: f64, s: f64, cursor: &mut usize) -> (f64, f64) {
        let n = self.times.len();
        while *cursor + 1 < n && self.times[*cursor + 1] <= s {
            *cursor += 1;
        }
        let k = *cursor;
        if k + 1 >= n || s < self.times[0] {
            let k = if s < self.times[0] { 0 } else { n - 1 };
            let m = if s > self.times[k] {
                self.offsets[k] - 1.5 * (s / self.times[k]).ln()
            } else {
                self.offsets[k]
            };
            let zeta = z - m;
            return (self.profile_at(k, zeta), zeta);
        }
        let th = (s - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let m = self.offsets[k] + th * (self.offsets[k + 1] - self.offsets[k]);
        let zeta = z - m;
        let h = (1.0 - th) * self.profile_at(k, zeta) + th * self.profile_at(k + 1, zeta);
        (h, zeta)
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkSettings {
    pub n_paths: usize,
    /// Step near the front; 5× and 20× this further away.
    pub ds: f64,
    pub seed: u64,
}

const CHUNK: usize = 1024;
/// ∫G beyond which e^{−∫G} is treated as zero.
const KILL: f64 = 50.0;

fn path_weight(c: f64, arch: &FkArchive, nl: &Nonlinearity, ds0: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random::<f64>();
    let y = 2.0 / c * (1.0 - u).ln();
    let mut z = y;
    let mut s = 0.0;
    let mut cursor = 0usize;
    let (h, mut zeta) = arch.h_at(z, s, &mut cursor);
    let mut g_prev = nl.g(h);
    let mut acc = 0.0;
    let drift = c - 2.0;
    loop {
        if z > 0.5 * drift * s + 40.0 || acc > KILL {
            break;
        }
        let d = zeta.abs();
        let ds = if d < 8.0 {
            ds0
        } else if d < 20.0 {
            5.0 * ds0
        } else {
            20.0 * ds0
        };
        let n: f64 = rng.sample(StandardNormal);
        z += drift * ds + (2.0 * ds).sqrt() * n;
        s += ds;
        let (h, zt) = arch.h_at(z, s, &mut cursor);
        zeta = zt;
        let g = nl.g(h);
        acc += 0.5 * (g_prev + g) * ds;
        g_prev = g;
    }
    (-acc).exp()
}

/// Φ(c) = (2/c)·E[exp(−∫₀^∞ G(h(B_s + cs + y, s))ds)] with y ~ (c/2)e^{cy/2} on (−∞, 0].
pub fn fk_phi(c: f64, arch: &FkArchive, nl: &Nonlinearity, set: FkSettings) -> Result<PhiEstimate> {
    if !(c > 2.0) {
        return Err(KppError::InvalidParameter(format!("velocity c = {c} must exceed 2")));
    }
    if set.n_paths < 100 {
        return Err(KppError::InvalidParameter(format!("{} paths; need at least 100", set.n_paths)));
    }
    if !(set.ds > 0.0 && set.ds <= 0.1) {
        return Err(KppError::InvalidParameter(format!("path step {} outside (0, 0.1]", set.ds)));
    }
    arch.check_density(1.2)?;
    let pref = 2.0 / c;
    if nl.is_zero() {
        return Ok(PhiEstimate::new(c, pref, 0.0, Route::FeynmanKac).with("paths", set.n_paths as f64));
    }
    let n_chunks = set.n_paths.div_ceil(CHUNK);
    let sums: Vec<(f64, f64, usize)> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(set.seed);
            rng.set_stream(k as u64);
            let m = CHUNK.min(set.n_paths - k * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..m {
                let v = path_weight(c, arch, nl, set.ds, &mut rng);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2, m)
        })
        .collect();
    let (s1, s2, n) = sums.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    let stderr = pref * (var / nf).sqrt();
    Ok(PhiEstimate::new(c, pref * mean, stderr, Route::FeynmanKac)
        .with("paths", nf)
        .with("ds", set.ds)
        .with("archive_t_end", *arch.times.last().unwrap_or(&0.0)))
}
