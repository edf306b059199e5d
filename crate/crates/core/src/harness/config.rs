//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::FitBasis;
use crate::error::{KppError, Result};
use crate::model::{InitialCondition, Nonlinearity};
use crate::observables::{FkArchiveSpec, RecorderConfig};
use crate::pde_solver::SolverParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcSpec {
    Step,
    ExpTail { gamma0: f64 },
    StepPlusBump { lo: f64, hi: f64, samples: Vec<f64> },
}

impl IcSpec {
    pub fn build(&self) -> InitialCondition {
        match self {
            IcSpec::Step => InitialCondition::Step,
            IcSpec::ExpTail { gamma0 } => InitialCondition::ExpTail { gamma0: *gamma0 },
            IcSpec::StepPlusBump { lo, hi, samples } => InitialCondition::StepPlusBump {
                lo: *lo,
                hi: *hi,
                samples: samples.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    Quadratic,
    Power { p: f64 },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match self {
            NonlinearitySpec::Zero => Ok(Nonlinearity::Zero),
            NonlinearitySpec::Quadratic => Ok(Nonlinearity::Quadratic),
            NonlinearitySpec::Power { p } => Nonlinearity::power(*p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub dz: f64,
    pub dt: f64,
    pub z_lo: f64,
    pub k_sigma: f64,
    pub c_max: f64,
    pub margin: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let p = SolverParams::default();
        SolverSpec {
            dz: p.dz,
            dt: p.dt,
            z_lo: p.z_lo,
            k_sigma: p.k_sigma,
            c_max: p.c_max,
            margin: p.margin,
        }
    }
}

impl SolverSpec {
    pub fn build(&self) -> SolverParams {
        SolverParams {
            dz: self.dz,
            dt: self.dt,
            z_lo: self.z_lo,
            k_sigma: self.k_sigma,
            c_max: self.c_max,
            margin: self.margin,
            ..SolverParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSpec {
    pub start: f64,
    pub ratio: f64,
    /// Write binary snapshots under `<out>/snapshots`.
    pub write: bool,
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        SnapshotSpec {
            start: 1.0,
            ratio: 1.15,
            write: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FkSpec {
    pub enabled: bool,
    pub n_paths: usize,
    pub ds: f64,
}

impl Default for FkSpec {
    fn default() -> Self {
        FkSpec {
            enabled: false,
            n_paths: 100_000,
            ds: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    Leading,
    WithInvT,
    NextOrder,
}

impl From<BasisSpec> for FitBasis {
    fn from(b: BasisSpec) -> Self {
        match b {
            BasisSpec::Leading => FitBasis::Leading,
            BasisSpec::WithInvT => FitBasis::WithInvT,
            BasisSpec::NextOrder => FitBasis::NextOrder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    pub t_min: f64,
    pub basis: BasisSpec,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            t_min: 100.0,
            basis: BasisSpec::NextOrder,
        }
    }
}

/// Everything a run needs; serialised back into the hash so outputs are traceable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ic: IcSpec,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "default_cadence")]
    pub cadence: f64,
    /// ε values for φ(ε,t) and the magical relation.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Orders of the g(r,t) series.
    #[serde(default)]
    pub r: Vec<f64>,
    /// Velocities at which Φ is estimated.
    #[serde(default)]
    pub c: Vec<f64>,
    pub t_max: f64,
    #[serde(default)]
    pub snapshots: SnapshotSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub fk: FkSpec,
    /// Fit μ_t when present.
    #[serde(default)]
    pub fit: Option<FitSpec>,
}

fn default_cadence() -> f64 {
    0.5
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Step initial condition, F = h², everything else at defaults.
    pub fn minimal(t_max: f64) -> Self {
        RunConfig {
            ic: IcSpec::Step,
            nonlinearity: NonlinearitySpec::Quadratic,
            solver: SolverSpec::default(),
            cadence: default_cadence(),
            eps: vec![0.0],
            r: Vec::new(),
            c: Vec::new(),
            t_max,
            snapshots: SnapshotSpec::default(),
            seed: 0,
            out_dir: default_out(),
            fk: FkSpec::default(),
            fit: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| KppError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KppError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serialises")
    }

    /// SHA-256 of the canonical TOML form, hex encoded. The output directory is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    /// `<out_dir>/<first 16 hex digits of the hash>`.
    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.hash()[..16])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KppError::Config(m));
        let ic = self.ic.build();
        ic.validate()?;
        let nl = self.nonlinearity.build()?;
        self.solver.build().validate()?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max = {} must be positive", self.t_max));
        }
        if !(self.cadence > 0.0) {
            return bad(format!("cadence = {} must be positive", self.cadence));
        }
        let eps_hi = (ic.gamma() - 1.0).min(0.5).min(nl.p().min(1.0) - 1e-3);
        for &e in &self.eps {
            if !(e > -0.9 && e < eps_hi) {
                return bad(format!("eps = {e} outside (-0.9, {eps_hi})"));
            }
        }
        for &r in &self.r {
            if !(r > 0.0 && r < ic.gamma()) {
                return bad(format!("r = {r} outside (0, {})", ic.gamma()));
            }
        }
        for &c in &self.c {
            if !(c > 2.0 && c <= self.solver.c_max) {
                return bad(format!("c = {c} outside (2, c_max = {}]", self.solver.c_max));
            }
        }
        if let Some(f) = &self.fit {
            if self.t_max < 100.0 {
                return bad(format!("t_max = {} is below 100 for a fit-bearing run", self.t_max));
            }
            if !(f.t_min >= 50.0) {
                return bad(format!("fit t_min = {} must be >= 50", f.t_min));
            }
        }
        if self.fk.enabled && (self.fk.n_paths < 100 || !(self.fk.ds > 0.0 && self.fk.ds <= 0.1)) {
            return bad("fk needs n_paths >= 100 and ds in (0, 0.1]".into());
        }
        if !(self.snapshots.start > 0.0 && self.snapshots.ratio > 1.0) {
            return bad("snapshots need start > 0 and ratio > 1".into());
        }
        Ok(())
    }

    /// Recorder settings implied by the config; `snapshot_dir` is set by the caller.
    pub fn recorder(&self) -> RecorderConfig {
        let mut g_r = self.r.clone();
        let mut magic_eps: Vec<f64> = self.eps.iter().copied().filter(|&e| e != 0.0).collect();
        for &c in &self.c {
            let r = 0.5 * c;
            if !g_r.iter().any(|&x| (x - r).abs() < 1e-12) {
                g_r.push(r);
            }
            let e = r - 1.0;
            if e < 0.5 && !magic_eps.iter().any(|&x| (x - e).abs() < 1e-12) {
                magic_eps.push(e);
            }
        }
        let fk = self.fk.enabled.then(|| FkArchiveSpec {
            t_end: self.t_max,
            ..FkArchiveSpec::default()
        });
        RecorderConfig {
            cadence: self.cadence,
            phi_eps: self.eps.clone(),
            magic_eps,
            g_r,
            snapshot_start: self.snapshots.start,
            snapshot_ratio: self.snapshots.ratio,
            snapshot_dir: None,
            fk,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
t_max = 200.0
eps = [-0.25, 0.0, 0.25]
c = [2.5]
seed = 7

[ic]
kind = "step"

[nonlinearity]
kind = "quadratic"

[solver]
c_max = 2.8

[fit]
t_min = 50.0
basis = "with_inv_t"
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.solver.c_max, 2.8);
        assert_eq!(c.solver.dz, 0.02);
        assert_eq!(c.fit.as_ref().unwrap().basis, BasisSpec::WithInvT);
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_tracks_content_not_location() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let mut moved = c.clone();
        moved.out_dir = PathBuf::from("elsewhere");
        assert_eq!(moved.hash(), c.hash());
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(other.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn invariants_enforced() {
        let base = RunConfig::from_toml(SAMPLE).unwrap();
        let mut c = base.clone();
        c.eps.push(0.6);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.c.push(3.0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.t_max = 80.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.ic = IcSpec::ExpTail { gamma0: 1.2 };
        c.eps = vec![0.25];
        assert!(c.validate().is_err());
        assert!(RunConfig::from_toml("t_max = 1.0\nbogus = 3\n[ic]\nkind = \"step\"\n[nonlinearity]\nkind = \"zero\"").is_err());
    }

    #[test]
    fn recorder_adds_velocity_moments() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        let r = c.recorder();
        assert_eq!(r.g_r, vec![1.25]);
        assert_eq!(r.magic_eps, vec![-0.25, 0.25]);
        assert_eq!(r.phi_eps, vec![-0.25, 0.0, 0.25]);
    }
}
