//! Observer that records μ_t, φ(ε,t), g(r,t), the magical-relation integrals and snapshots.

use std::path::PathBuf;
use std::sync::Arc;

use super::fk::{FkArchive, FkArchiveSpec};
use super::front::{front_offset, g_moment, phi_cutoff, phi_eps_t};
use crate::error::{KppError, Result};
use crate::logspace::LogValue;
use crate::model::{InitialCondition, Nonlinearity};
use crate::pde_solver::{evolve, write_manifest, write_snapshot, ManifestEntry, Observer, Snapshot, Solver, SolverParams};

/// What to record during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecorderConfig {
    /// Spacing of the μ_t and φ(ε,t) series.
    pub cadence: f64,
    pub phi_eps: Vec<f64>,
    /// ε values for which ∫e^{−ε²t}J(ε,t)dt is accumulated at every step.
    pub magic_eps: Vec<f64>,
    /// Orders r of the g(r,t) series, sampled at snapshot times.
    pub g_r: Vec<f64>,
    pub snapshot_start: f64,
    pub snapshot_ratio: f64,
    /// Write snapshots and a manifest here.
    pub snapshot_dir: Option<PathBuf>,
    pub fk: Option<FkArchiveSpec>,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        RecorderConfig {
            cadence: 0.5,
            phi_eps: vec![0.0],
            magic_eps: Vec::new(),
            g_r: Vec::new(),
            snapshot_start: 1.0,
            snapshot_ratio: 1.15,
            snapshot_dir: None,
            fk: None,
        }
    }
}

/// Running trapezoid sums of e^{−ε²t}J(ε,t) with J = ∫F(h)e^{(1+ε)z}dz (tilted frame).
#[derive(Debug, Clone)]
pub struct MagicSeries {
    pub eps: f64,
    /// Integral up to the last step (step dt).
    pub integral: f64,
    /// Same integral with step 2dt, for the quadrature error estimate.
    pub coarse: f64,
    /// J(ε, t) at the last step.
    pub last_j: f64,
    /// (t, running integral) at the cadence times.
    pub series: Vec<(f64, f64)>,
    prev: Option<(f64, f64)>,
    coarse_prev: Option<(f64, f64)>,
    parity: bool,
    weights: Vec<f64>,
}

impl MagicSeries {
    fn new(eps: f64) -> Self {
        MagicSeries {
            eps,
            integral: 0.0,
            coarse: 0.0,
            last_j: 0.0,
            series: Vec::new(),
            prev: None,
            coarse_prev: None,
            parity: false,
            weights: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, j: f64) {
        let v = (-self.eps * self.eps * t).exp() * j;
        if let Some((tp, vp)) = self.prev {
            self.integral += 0.5 * (v + vp) * (t - tp);
        }
        self.prev = Some((t, v));
        if !self.parity {
            if let Some((tp, vp)) = self.coarse_prev {
                self.coarse += 0.5 * (v + vp) * (t - tp);
            }
            self.coarse_prev = Some((t, v));
        }
        self.parity = !self.parity;
        self.last_j = j;
    }

    /// Trapezoid error estimate (Richardson on dt vs 2dt).
    pub fn quadrature_error(&self) -> f64 {
        let mut coarse = self.coarse;
        if let (Some((tc, vc)), Some((t, v))) = (self.coarse_prev, self.prev) {
            if t > tc {
                coarse += 0.5 * (v + vc) * (t - tc);
            }
        }
        (self.integral - coarse).abs() / 3.0
    }
}

/// Time series and snapshots of one solver run.
#[derive(Debug, Clone)]
pub struct FrontRun {
    pub ic: InitialCondition,
    pub nonlinearity: Nonlinearity,
    pub params: SolverParams,
    pub t_max: f64,
    pub times: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi_eps: Vec<f64>,
    /// phi[j][k] = φ(phi_eps[j], times[k]).
    pub phi: Vec<Vec<f64>>,
    pub g_r: Vec<f64>,
    pub g_times: Vec<f64>,
    /// log_g[j][k] = g(g_r[j], g_times[k]).
    pub log_g: Vec<Vec<LogValue>>,
    pub snapshots: Vec<Snapshot>,
    /// h at the left edge for each snapshot.
    pub snapshot_h_left: Vec<f64>,
    pub magic: Vec<MagicSeries>,
    pub fk_archive: Option<FkArchive>,
    pub max_clamp_rel: f64,
}

impl FrontRun {
    /// (t, μ_t) pairs.
    pub fn mu_series(&self) -> Vec<(f64, f64)> {
        self.times.iter().copied().zip(self.mu.iter().copied()).collect()
    }

    /// (t, φ(ε,t)) for a recorded ε.
    pub fn phi_series(&self, eps: f64) -> Option<Vec<(f64, f64)>> {
        let j = self.phi_eps.iter().position(|&e| e == eps)?;
        Some(self.times.iter().copied().zip(self.phi[j].iter().copied()).collect())
    }

    pub fn magic_for(&self, eps: f64) -> Option<&MagicSeries> {
        self.magic.iter().find(|m| m.eps == eps)
    }
}

struct Recorder {
    cfg: RecorderConfig,
    run: FrontRun,
    next_obs: f64,
    next_snap: f64,
    next_decade: f64,
    next_fk: f64,
    fk_spec: Option<FkArchiveSpec>,
    last_offset: f64,
    j_scratch: Vec<f64>,
    manifest: Vec<ManifestEntry>,
}

fn time_reached(t: f64, target: f64, dt: f64) -> bool {
    t >= target - 1e-9 * dt
}

impl Recorder {
    fn record_cadence(&mut self, s: &Solver) -> Result<()> {
        let f = s.field();
        let m = front_offset(f)?;
        self.last_offset = m;
        let t = f.t;
        let mu = m + 2.0 * t;
        if t >= 3.0 && (mu - 2.0 * t).abs() > 3.0 * t.ln() + 50.0 {
            return Err(KppError::InvalidParameter(format!("front position {mu} at t = {t} left the sanity envelope")));
        }
        self.run.times.push(t);
        self.run.mu.push(mu);
        for (j, &e) in self.cfg.phi_eps.iter().enumerate() {
            let v = phi_eps_t(f, &self.run.nonlinearity, s.h_left(), e)?;
            self.run.phi[j].push(v);
        }
        for ms in &mut self.run.magic {
            ms.series.push((t, ms.integral));
        }
        Ok(())
    }

    fn record_snapshot(&mut self, s: &Solver) -> Result<()> {
        let f = s.field();
        let m = front_offset(f)?;
        if self.run.snapshots.last().is_some_and(|p| p.field.t >= f.t) {
            return Ok(());
        }
        self.run.g_times.push(f.t);
        for (j, &r) in self.cfg.g_r.iter().enumerate() {
            let g = g_moment(f, s.h_left(), r)?;
            self.run.log_g[j].push(g);
        }
        if let Some(dir) = &self.cfg.snapshot_dir {
            let name = format!("snap_{:06}.bin", self.run.snapshots.len());
            write_snapshot(&dir.join(&name), f)?;
            self.manifest.push(ManifestEntry {
                t: f.t,
                mu: m + 2.0 * f.t,
                file: name,
            });
        }
        self.run.snapshots.push(Snapshot {
            field: Arc::new(f.clone()),
            mu: m + 2.0 * f.t,
        });
        self.run.snapshot_h_left.push(s.h_left());
        Ok(())
    }

    fn accumulate_magic(&mut self, s: &Solver) {
        if self.run.magic.is_empty() {
            return;
        }
        let f = s.field();
        let nl = &self.run.nonlinearity;
        let t = f.t;
        if nl.is_zero() {
            for ms in &mut self.run.magic {
                ms.push(t, 0.0);
            }
            return;
        }
        let n = f.len();
        let dz = f.dz;
        let eps_max = self.run.magic.iter().map(|m| m.eps).fold(f64::NEG_INFINITY, f64::max);
        let z_cut = self.last_offset + 5.0 + phi_cutoff(eps_max, nl);
        let i_cut = (((z_cut - f.z_lo) / dz).ceil().max(0.0) as usize).min(n - 1);
        for ms in &mut self.run.magic {
            while ms.weights.len() <= i_cut {
                let i = ms.weights.len();
                let w = if i == 0 { 0.5 * dz } else { dz };
                ms.weights.push(w * (ms.eps * f.z(i)).exp());
            }
        }
        let einv = s.einv();
        self.j_scratch.clear();
        self.j_scratch.resize(self.run.magic.len(), 0.0);
        for i in 0..=i_cut {
            let w = f.w[i];
            if w == 0.0 {
                continue;
            }
            let wg = w * nl.g(w * einv[i]);
            for (acc, ms) in self.j_scratch.iter_mut().zip(&self.run.magic) {
                *acc += wg * ms.weights[i];
            }
        }
        let left = nl.f(s.h_left());
        for (acc, ms) in self.j_scratch.iter().zip(&mut self.run.magic) {
            let sp = 1.0 + ms.eps;
            let j = acc + left * (sp * f.z_lo).exp() / sp;
            ms.push(t, j);
        }
    }
}

impl Observer for Recorder {
    fn observe(&mut self, s: &Solver) -> Result<()> {
        let t = s.t();
        let dt = s.params().dt;
        self.accumulate_magic(s);
        if time_reached(t, self.next_obs, dt) {
            self.record_cadence(s)?;
            while time_reached(t, self.next_obs, dt) {
                self.next_obs += self.cfg.cadence;
            }
        }
        let snap_due = time_reached(t, self.next_snap, dt) || time_reached(t, self.next_decade, dt);
        if snap_due {
            self.record_snapshot(s)?;
            while time_reached(t, self.next_snap, dt) {
                self.next_snap *= self.cfg.snapshot_ratio;
            }
            while time_reached(t, self.next_decade, dt) {
                self.next_decade *= 10.0;
            }
        }
        if let Some(spec) = &self.fk_spec {
            if t <= spec.t_end + 1e-9 && (t == 0.0 || time_reached(t, self.next_fk, dt)) {
                let m = front_offset(s.field())?;
                let arch = self.run.fk_archive.as_mut().expect("archive allocated with its spec");
                arch.push(s.field(), m, s.h_left(), spec.zeta_hi)?;
                if t > 0.0 {
                    while time_reached(t, self.next_fk, dt) {
                        self.next_fk *= spec.ratio;
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate(cfg: &RecorderConfig, nl: &Nonlinearity, ic: &InitialCondition) -> Result<()> {
    if !(cfg.cadence > 0.0) {
        return Err(KppError::InvalidParameter("cadence must be positive".into()));
    }
    if !(cfg.snapshot_start > 0.0 && cfg.snapshot_ratio > 1.0) {
        return Err(KppError::InvalidParameter("snapshot schedule needs start > 0 and ratio > 1".into()));
    }
    let hi = nl.p().min(1.0) - 1e-3;
    for &e in cfg.phi_eps.iter().chain(&cfg.magic_eps) {
        if !(e > -0.9 && e < hi) {
            return Err(KppError::EpsilonRange { eps: e, lo: -0.9, hi });
        }
    }
    for &r in &cfg.g_r {
        if !(r > 0.0 && r < ic.gamma()) {
            return Err(KppError::InvalidParameter(format!("moment order r = {r} outside (0, γ)")));
        }
    }
    if let Some(fk) = &cfg.fk {
        if !(fk.t_first > 0.0 && fk.ratio > 1.0 && fk.ratio <= 1.2 && fk.zeta_lo < 0.0 && fk.zeta_hi > 0.0) {
            return Err(KppError::InvalidParameter("invalid Feynman–Kac archive schedule".into()));
        }
    }
    Ok(())
}

/// Run the solver to `t_max` and record everything `cfg` asks for.
pub fn run_front(
    ic: &InitialCondition,
    nl: Nonlinearity,
    params: SolverParams,
    t_max: f64,
    cfg: &RecorderConfig,
) -> Result<FrontRun> {
    validate(cfg, &nl, ic)?;
    if let Some(dir) = &cfg.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let run = FrontRun {
        ic: ic.clone(),
        nonlinearity: nl.clone(),
        params: params.clone(),
        t_max,
        times: Vec::new(),
        mu: Vec::new(),
        phi_eps: cfg.phi_eps.clone(),
        phi: vec![Vec::new(); cfg.phi_eps.len()],
        g_r: cfg.g_r.clone(),
        g_times: Vec::new(),
        log_g: vec![Vec::new(); cfg.g_r.len()],
        snapshots: Vec::new(),
        snapshot_h_left: Vec::new(),
        magic: cfg.magic_eps.iter().map(|&e| MagicSeries::new(e)).collect(),
        fk_archive: cfg.fk.as_ref().map(|s| FkArchive::new(s.zeta_lo, params.dz)),
        max_clamp_rel: 0.0,
    };
    let mut rec = Recorder {
        next_obs: 0.0,
        next_snap: cfg.snapshot_start,
        next_decade: 10f64.powf(cfg.snapshot_start.log10().ceil()),
        next_fk: cfg.fk.as_ref().map_or(f64::INFINITY, |s| s.t_first),
        fk_spec: cfg.fk.clone(),
        cfg: cfg.clone(),
        run,
        last_offset: 0.0,
        j_scratch: Vec::new(),
        manifest: Vec::new(),
    };
    let solver = evolve(ic, nl, params, t_max, &mut rec)?;
    let last_obs = rec.run.times.last().copied().unwrap_or(-1.0);
    if solver.t() > last_obs {
        rec.record_cadence(&solver)?;
    }
    rec.record_snapshot(&solver)?;
    if let Some(dir) = &cfg.snapshot_dir {
        write_manifest(dir, &rec.manifest)?;
    }
    rec.run.max_clamp_rel = solver.max_clamp_rel();
    Ok(rec.run)
}
