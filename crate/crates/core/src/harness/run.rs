//! Orchestration of a configured run: evolve, record, estimate, fit, write tables.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::config::RunConfig;
use super::output::Table;
use crate::asymptotics::{fit_mu_basis, paper_b, paper_c, ExpansionCoefficients, FitWeighting};
use crate::error::{KppError, Result};
use crate::observables::{
    fk_phi, magic_sides, phi_amplitude, phi_magical, phi_moment, run_front, AmplitudeSettings, FkSettings, FrontRun,
    PhiEstimate, Route, TailModel,
};
use crate::wave::{solve_wave, WaveProfile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One pass/fail line with the measured value and the tolerance it was held to.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionRow {
    pub id: String,
    pub description: String,
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CriterionRow {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} | measured {} | required {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.description,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time: f64,
    pub dir: PathBuf,
    /// (table name, CSV path), in write order.
    pub tables: Vec<(String, PathBuf)>,
    pub rows: Vec<CriterionRow>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(config_hash: &str, dir: PathBuf) -> Self {
        Report {
            config_hash: config_hash.to_string(),
            version: VERSION,
            wall_time: 0.0,
            dir,
            tables: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn table(&self, name: &str) -> Option<&PathBuf> {
        self.tables.iter().find(|t| t.0 == name).map(|t| &t.1)
    }

    pub fn add_table(&mut self, t: &Table) -> Result<()> {
        let p = t.write(&self.dir, &self.config_hash)?;
        self.tables.push((t.name.clone(), p));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash: {}", self.config_hash);
        let _ = writeln!(s, "version: {}", self.version);
        let _ = writeln!(s, "wall_time_s: {:.3}", self.wall_time);
        for (n, p) in &self.tables {
            let _ = writeln!(s, "table {n}: {}", p.display());
        }
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.line());
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    /// Write `report.txt` into the run directory.
    pub fn write(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let p = self.dir.join("report.txt");
        fs::write(&p, self.render())?;
        Ok(p)
    }
}

/// Row of the magical-relation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicRow {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluate the magical relation at every accumulated ε ≠ 0. For ε > 0 the Φ term comes from
/// the amplitude route (the closed form 2/c when F = 0) and rows whose velocity lies outside
/// the window are skipped.
pub fn magic_check(run: &FrontRun, tail: Option<TailModel>) -> Result<Vec<MagicRow>> {
    let mut eps: Vec<f64> = run.magic.iter().map(|m| m.eps).filter(|&e| e != 0.0).collect();
    eps.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for e in eps {
        let phi = if e > 0.0 {
            let c = 2.0 + 2.0 * e;
            if c > run.params.c_max + 1e-12 {
                continue;
            }
            if run.nonlinearity.is_zero() {
                Some(PhiEstimate::new(c, 2.0 / c, 0.0, Route::Amplitude))
            } else {
                Some(phi_amplitude(run, c, AmplitudeSettings::default())?)
            }
        } else {
            None
        };
        let (lhs, rhs) = magic_sides(run, e, tail, phi.as_ref())?;
        rows.push(MagicRow {
            eps: e,
            lhs,
            rhs,
            residual: lhs - rhs,
        });
    }
    Ok(rows)
}

/// Front expansion used for the t > t_max tails: the configured fit when possible, otherwise
/// the closed-form b, c with a matched to the last recorded μ_t.
pub fn tail_expansion(cfg: &RunConfig, run: &FrontRun) -> Result<(ExpansionCoefficients, &'static str)> {
    if let Some(f) = &cfg.fit {
        if let Ok(co) = fit_mu_basis(&run.mu_series(), f.t_min, f.basis.into(), FitWeighting::LogUniform) {
            return Ok((co, "fit"));
        }
    }
    let (&t, &mu) = run
        .times
        .last()
        .zip(run.mu.last())
        .ok_or_else(|| KppError::Archive("empty μ series".into()))?;
    let lt = t.max(3.0).ln();
    let a = mu - 2.0 * t + 1.5 * lt - paper_b() / t.sqrt() - paper_c() * lt / t;
    Ok((ExpansionCoefficients::paper_default(a), "matched"))
}

fn route_rows(table: &mut Table, c: f64, results: Vec<(&'static str, Result<PhiEstimate>)>) {
    for (name, r) in results {
        match r {
            Ok(e) => table.push(vec![c.into(), name.into(), e.value.into(), e.uncertainty.into(), e.flags.join(";").into()]),
            Err(err) => table.push(vec![c.into(), name.into(), f64::NAN.into(), f64::NAN.into(), format!("error: {err}").into()]),
        }
    }
}

fn with_context<T>(r: Result<T>, what: &str, hash: &str) -> Result<T> {
    r.map_err(|e| KppError::Config(format!("{what} (config {}): {e}", &hash[..16])))
}

/// Execute a configured run and write its tables and report under `cfg.run_dir()`.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    cfg.validate()?;
    let hash = cfg.hash();
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    let cfg_path = dir.join("config.toml");
    let text = cfg.to_toml();
    if let Ok(prev) = fs::read_to_string(&cfg_path) {
        if RunConfig::from_toml(&prev).map(|p| p.hash()).ok().as_deref() != Some(hash.as_str()) {
            return Err(KppError::Config(format!("{} holds a different configuration", dir.display())));
        }
    }
    fs::write(&cfg_path, &text)?;
    let mut report = Report::new(&hash, dir.clone());

    let ic = cfg.ic.build();
    let nl = cfg.nonlinearity.build()?;
    let mut rec = cfg.recorder();
    if cfg.snapshots.write {
        rec.snapshot_dir = Some(dir.join("snapshots"));
    }
    let fr = with_context(run_front(&ic, nl.clone(), cfg.solver.build(), cfg.t_max, &rec), "evolve", &hash)?;

    let mut mu = Table::new("mu", &["t", "mu"]);
    for (t, m) in fr.mu_series() {
        mu.push(vec![t.into(), m.into()]);
    }
    report.add_table(&mu)?;
    let mut phi = Table::new("phi", &["t", "eps", "phi"]);
    for (j, &e) in fr.phi_eps.iter().enumerate() {
        for (k, &t) in fr.times.iter().enumerate() {
            phi.push(vec![t.into(), e.into(), fr.phi[j][k].into()]);
        }
    }
    report.add_table(&phi)?;
    let mut lg = Table::new("log_g", &["t", "r", "log_g"]);
    for (j, &r) in fr.g_r.iter().enumerate() {
        for (k, &t) in fr.g_times.iter().enumerate() {
            lg.push(vec![t.into(), r.into(), fr.log_g[j][k].log_mag.into()]);
        }
    }
    report.add_table(&lg)?;

    if let Some(f) = &cfg.fit {
        match fit_mu_basis(&fr.mu_series(), f.t_min, f.basis.into(), FitWeighting::LogUniform) {
            Ok(co) => {
                let se = co.std_errors().unwrap_or_default();
                let mut names = vec![("a", co.a), ("b", co.b), ("c", co.c)];
                if let Some(d) = co.d {
                    names.push(("d", d));
                }
                if let Some((e1, e2)) = co.next {
                    names.extend([("e1", e1), ("e2", e2)]);
                }
                let mut t = Table::new("mu_fit", &["coefficient", "value", "std_error"]);
                for (k, (n, v)) in names.into_iter().enumerate() {
                    t.push(vec![n.into(), v.into(), se.get(k).copied().unwrap_or(f64::NAN).into()]);
                }
                report.add_table(&t)?;
                let mut r = Table::new("mu_residual", &["t", "residual"]);
                for &(t, v) in &co.residuals {
                    r.push(vec![t.into(), v.into()]);
                }
                report.add_table(&r)?;
            }
            Err(e) => report.notes.push(format!("mu fit skipped: {e}")),
        }
    }

    let needs_tail = !nl.is_zero() && !fr.magic.is_empty();
    let wave: Option<WaveProfile> = if needs_tail {
        Some(with_context(solve_wave(&nl, 60.0, 0.01), "wave", &hash)?)
    } else {
        None
    };
    let (co, source) = tail_expansion(cfg, &fr)?;
    report.notes.push(format!("tail expansion: {source} (a = {})", co.a));
    let tail = wave.as_ref().map(|w| TailModel { mu: &co, wave: w });

    let mut routes = Table::new("phi_routes", &["c", "route", "value", "uncertainty", "flags"]);
    let per_c: Vec<(f64, Vec<(&'static str, Result<PhiEstimate>)>)> = cfg
        .c
        .par_iter()
        .map(|&c| {
            let mut v = vec![
                ("amplitude", phi_amplitude(&fr, c, AmplitudeSettings::default())),
                ("moment", phi_moment(&fr, c, 10.0)),
            ];
            let e = 0.5 * c - 1.0;
            if fr.magic_for(e).is_some() {
                v.push(("magical", phi_magical(&fr, e, tail)));
            }
            if let (true, Some(arch)) = (cfg.fk.enabled, fr.fk_archive.as_ref()) {
                let set = FkSettings {
                    n_paths: cfg.fk.n_paths,
                    ds: cfg.fk.ds,
                    seed: cfg.seed,
                };
                v.push(("feynman_kac", fk_phi(c, arch, &nl, set)));
            }
            (c, v)
        })
        .collect();
    for (c, v) in per_c {
        route_rows(&mut routes, c, v);
    }
    report.add_table(&routes)?;

    if !fr.magic.is_empty() {
        match magic_check(&fr, tail) {
            Ok(rows) => {
                let mut t = Table::new("magic_check", &["eps", "lhs", "rhs", "residual"]);
                for r in rows {
                    t.push(vec![r.eps.into(), r.lhs.into(), r.rhs.into(), r.residual.into()]);
                }
                report.add_table(&t)?;
            }
            Err(e) => report.notes.push(format!("magic check skipped: {e}")),
        }
    }

    report.notes.push(format!("max clamp / max w: {:e}", fr.max_clamp_rel));
    report.wall_time = start.elapsed().as_secs_f64();
    report.write()?;
    Ok(report)
}
