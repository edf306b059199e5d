//! The nine acceptance criteria, sharing their expensive runs.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::run::CriterionRow;
use crate::asymptotics::{
    fit_mu_basis, lemma42::lemma42_recursion_rhs, lemma42::lemma42_smoothness, lemma42_integral, main_expansion,
    main_expansion_without_cubic_logs, paper_b, paper_c, ExpansionCoefficients, FitBasis, FitWeighting,
};
use crate::error::Result;
use crate::model::{h0_moment, InitialCondition, Nonlinearity};
use crate::observables::{
    fk_phi, phi_amplitude, phi_magical, phi_moment, run_front, AmplitudeSettings, FkArchiveSpec, FkSettings, FrontRun,
    PhiEstimate, TailModel,
};
use crate::pde_solver::{linear_step_solution, Solver, SolverParams};
use crate::wave::{phi_hat, shift_coeffs, solve_wave, WaveProfile};

/// Sub-checks that fail for reasons analysed in the project notes; everything else must pass.
pub const KNOWN_FAILURES: &[&str] = &["6b", "7a"];

/// Outcome of one criterion: its report row and the individual checks it is made of.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub row: CriterionRow,
    pub parts: Vec<(String, bool)>,
}

impl Outcome {
    fn new(id: &str, description: &str, measured: String, tolerance: &str, parts: Vec<(&str, bool)>) -> Self {
        let parts: Vec<(String, bool)> = parts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Outcome {
            row: CriterionRow {
                id: id.to_string(),
                description: description.to_string(),
                measured,
                tolerance: tolerance.to_string(),
                pass: parts.iter().all(|p| p.1),
            },
            parts,
        }
    }

    /// Failed parts not listed in [`KNOWN_FAILURES`].
    pub fn unexpected_failures(&self) -> Vec<String> {
        self.parts
            .iter()
            .filter(|(k, ok)| !ok && !KNOWN_FAILURES.contains(&k.as_str()))
            .map(|(k, _)| k.clone())
            .collect()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let r: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t.ln(), v.abs().ln())).collect();
    let n = r.len() as f64;
    let mx = r.iter().map(|p| p.0).sum::<f64>() / n;
    let my = r.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = r.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = r.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// The F = h² run to t = 2000 with its fit and the critical wave.
pub struct LongRun {
    pub run: FrontRun,
    pub fit: ExpansionCoefficients,
    /// Fit on {1, t^{−1/2}, log t/t, 1/t} for comparison.
    pub short_fit: ExpansionCoefficients,
    pub wave: WaveProfile,
}

/// Lazily built runs shared by the criteria.
#[derive(Default)]
pub struct Suite {
    long: OnceLock<std::result::Result<LongRun, String>>,
    concordance: OnceLock<std::result::Result<FrontRun, String>>,
}

pub const LONG_T: f64 = 2000.0;
pub const FIT_T_MIN: f64 = 100.0;
pub const MAGIC_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
pub const PHI_EPS: [f64; 3] = [-0.1, 0.0, 0.1];
pub const CONCORDANCE_C: [f64; 3] = [2.3, 2.5, 2.8];
pub const CONCORDANCE_T: f64 = 400.0;
pub const FK_PATHS: usize = 100_000;

fn wave() -> Result<WaveProfile> {
    solve_wave(&Nonlinearity::Quadratic, 60.0, 0.01)
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn long(&self) -> Result<&LongRun> {
        let r = self.long.get_or_init(|| {
            let cfg = crate::observables::RecorderConfig {
                phi_eps: PHI_EPS.to_vec(),
                magic_eps: MAGIC_EPS.to_vec(),
                ..Default::default()
            };
            let build = || -> Result<LongRun> {
                let run = run_front(&InitialCondition::Step, Nonlinearity::Quadratic, SolverParams::default(), LONG_T, &cfg)?;
                let s = run.mu_series();
                let fit = fit_mu_basis(&s, FIT_T_MIN, FitBasis::NextOrder, FitWeighting::LogUniform)?;
                let short_fit = fit_mu_basis(&s, FIT_T_MIN, FitBasis::WithInvT, FitWeighting::LogUniform)?;
                Ok(LongRun {
                    run,
                    fit,
                    short_fit,
                    wave: wave()?,
                })
            };
            build().map_err(|e| e.to_string())
        });
        r.as_ref().map_err(|e| crate::KppError::Config(e.clone()))
    }

    fn concordance_run(&self) -> Result<&FrontRun> {
        let r = self.concordance.get_or_init(|| {
            let p = SolverParams {
                c_max: 2.8,
                ..SolverParams::default()
            };
            let cfg = crate::observables::RecorderConfig {
                magic_eps: CONCORDANCE_C.iter().map(|c| 0.5 * c - 1.0).collect(),
                fk: Some(FkArchiveSpec {
                    t_end: CONCORDANCE_T,
                    ..FkArchiveSpec::default()
                }),
                ..Default::default()
            };
            run_front(&InitialCondition::Step, Nonlinearity::Quadratic, p, CONCORDANCE_T, &cfg).map_err(|e| e.to_string())
        });
        r.as_ref().map_err(|e| crate::KppError::Config(e.clone()))
    }

    pub fn criterion(&self, k: u8) -> Result<Outcome> {
        match k {
            1 => criterion1(),
            2 => criterion2(),
            3 => criterion3(),
            4 => self.criterion4(),
            5 => self.criterion5(),
            6 => self.criterion6(),
            7 => criterion7(),
            8 => self.criterion8(),
            9 => criterion9(),
            _ => Err(crate::KppError::InvalidParameter(format!("no criterion {k}"))),
        }
    }

    /// Amplitude, moment, magical and Monte Carlo estimates of Φ agree pairwise.
    pub fn criterion4(&self) -> Result<Outcome> {
        let run = self.concordance_run()?;
        let long = self.long()?;
        let tail = TailModel {
            mu: &long.fit,
            wave: &long.wave,
        };
        let arch = run.fk_archive.as_ref().expect("archive requested");
        let mut worst: f64 = 0.0;
        let mut text = Vec::new();
        for (k, &c) in CONCORDANCE_C.iter().enumerate() {
            let est: Vec<PhiEstimate> = vec![
                phi_amplitude(run, c, AmplitudeSettings::default())?,
                phi_moment(run, c, 10.0)?,
                phi_magical(run, 0.5 * c - 1.0, Some(tail))?,
                fk_phi(
                    c,
                    arch,
                    &run.nonlinearity,
                    FkSettings {
                        n_paths: FK_PATHS,
                        ds: 0.01,
                        seed: 20 + k as u64,
                    },
                )?,
            ];
            for i in 0..est.len() {
                for j in i + 1..est.len() {
                    let (a, b) = (&est[i], &est[j]);
                    let allowed = (0.02 * 0.5 * (a.value + b.value)).max(3.0 * a.uncertainty.hypot(b.uncertainty));
                    worst = worst.max((a.value - b.value).abs() / allowed);
                }
            }
            let vals: Vec<String> = est
                .iter()
                .map(|e| format!("{}={:.5}±{:.1e}", e.route.name(), e.value, e.uncertainty))
                .collect();
            text.push(format!("c={c}: {}", vals.join(" ")));
        }
        Ok(Outcome::new(
            "4",
            "route concordance, F=h², c ∈ {2.3, 2.5, 2.8}",
            format!("worst |Δ|/allowed = {worst:.3}; {}", text.join("; ")),
            "pairwise |Δ| ≤ max(2%, 3 combined σ)",
            vec![("4", worst <= 1.0)],
        ))
    }

    /// Fitted b and c of the front expansion, and the decay of the fit residual.
    pub fn criterion5(&self) -> Result<Outcome> {
        let l = self.long()?;
        let (b, c) = (l.fit.b, l.fit.c);
        let slope = log_log_slope(&l.fit.residuals);
        let rb = rel(b, paper_b());
        let rc = rel(c, paper_c());
        Ok(Outcome::new(
            "5",
            "front expansion fit, F=h², Step, t ≤ 2000",
            format!(
                "b = {b:.4} ({:.2}%), c = {c:.4} ({:.1}%), residual slope {slope:.3}; four-term basis gives b = {:.4}, c = {:.4}",
                100.0 * rb,
                100.0 * rc,
                l.short_fit.b,
                l.short_fit.c
            ),
            "b within 10% of −3√π, c within 30% of (9/8)(5−6log2), slope −1 ± 0.3",
            vec![("5a", rb < 0.1), ("5b", rc < 0.3), ("5c", (slope + 1.0).abs() <= 0.3)],
        ))
    }

    /// |Φ(2+ε) − expansion|/ε³ stays bounded; without the cubic logarithms it grows.
    pub fn criterion6(&self) -> Result<Outcome> {
        let l = self.long()?;
        let (alpha, beta) = shift_coeffs(l.wave.alpha_t, l.wave.beta_t, l.fit.a);
        let tail = TailModel {
            mu: &l.fit,
            wave: &l.wave,
        };
        let mut with = Vec::new();
        let mut without = Vec::new();
        for &e in &MAGIC_EPS {
            let eps = 2.0 * e;
            let phi = phi_magical(&l.run, e, Some(tail))?.value;
            with.push((phi - main_expansion(eps, alpha, beta)?).abs() / eps.powi(3));
            without.push((phi - main_expansion_without_cubic_logs(eps, alpha, beta)?).abs() / eps.powi(3));
        }
        let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
        let (sw, so) = (spread(&with), spread(&without));
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
        Ok(Outcome::new(
            "6",
            "main expansion, ε ∈ {0.4, 0.2, 0.1, 0.05}",
            format!(
                "α = {alpha:.5}, β = {beta:.5}; ratio [{}] varies ×{sw:.2}; without cubic logs [{}] varies ×{so:.2}",
                fmt(&with),
                fmt(&without)
            ),
            "variation < 5 with all terms, > 10 without the ε³ logarithms",
            vec![("6a", sw < 5.0), ("6b", so > 10.0)],
        ))
    }

    /// t·|φ(ε,t) − φ̂(ε)| stays within twice its median over t ∈ [50, 1000].
    pub fn criterion8(&self) -> Result<Outcome> {
        let l = self.long()?;
        let mut parts = Vec::new();
        let mut text = Vec::new();
        for &e in &PHI_EPS {
            let ph = phi_hat(e, &l.wave)?;
            let series = l.run.phi_series(e).expect("recorded");
            let mut v: Vec<f64> = series
                .iter()
                .filter(|(t, _)| (50.0..=1000.0).contains(t))
                .map(|(t, p)| t * (p - ph).abs())
                .collect();
            v.sort_by(f64::total_cmp);
            let (max, med) = (v[v.len() - 1], v[v.len() / 2]);
            parts.push(max <= 2.0 * med);
            text.push(format!("ε={e}: max {max:.3}, median {med:.3}"));
        }
        Ok(Outcome::new(
            "8",
            "t·|φ(ε,t) − φ̂(ε)| bounded on [50, 1000]",
            text.join("; "),
            "max ≤ 2 × median for each ε",
            vec![("8", parts.iter().all(|&p| p))],
        ))
    }
}

/// Critical wave: ODE residual, normalisation, tail fit and window independence.
pub fn criterion1() -> Result<Outcome> {
    let w = wave()?;
    let res = w.ode_residual();
    let at0 = (w.omega[w.index_of_zero()] - 0.5).abs();
    let d_alpha = rel(w.alpha_t_check, w.alpha_t);
    Ok(Outcome::new(
        "1",
        "critical travelling wave, F=h²",
        format!(
            "ODE residual {res:.2e}, |ω(0) − 1/2| {at0:.1e}, tail fit residual {:.2e}, α̃ windows differ by {d_alpha:.2e}",
            w.fit_residual
        ),
        "residual < 1e-8, |ω(0) − 1/2| ≤ 1e-10, tail fit < 1e-6, α̃ agreement 1e-5",
        vec![("1", res < 1e-8 && at0 <= 1e-10 && w.fit_residual < 1e-6 && d_alpha < 1e-5)],
    ))
}

/// max|w − w*|/max|w*| at t = 10 for the linear equation from the step.
pub fn linear_oracle_error(dz: f64, dt: f64) -> Result<f64> {
    let p = SolverParams {
        dz,
        dt,
        ..SolverParams::default()
    };
    let mut s = Solver::new(&InitialCondition::Step, Nonlinearity::Zero, p)?;
    let n = (10.0 / dt).round() as usize;
    for _ in 0..n {
        s.step()?;
    }
    let f = s.field();
    let (mut err, mut wmax) = (0.0f64, 0.0f64);
    for i in 0..f.len() {
        let exact = linear_step_solution(f.z(i), f.t);
        err = err.max((f.w[i] - exact).abs());
        wmax = wmax.max(exact);
    }
    Ok(err / wmax)
}

pub fn criterion2() -> Result<Outcome> {
    let e1 = linear_oracle_error(0.02, 0.01)?;
    let e2 = linear_oracle_error(0.01, 0.005)?;
    let ratio = e1 / e2;
    Ok(Outcome::new(
        "2",
        "linear solver against the closed form, t = 10",
        format!("error {e1:.3e} at Δz = 0.02, {e2:.3e} at Δz = 0.01, ratio {ratio:.3}"),
        "error < 1e-4, ratio in [3.5, 4.5]",
        vec![("2", e1 < 1e-4 && (3.5..=4.5).contains(&ratio))],
    ))
}

/// Φ = 2/c for the linear equation, by the amplitude and moment routes.
pub fn criterion3() -> Result<Outcome> {
    let p = SolverParams {
        c_max: 4.0,
        ..SolverParams::default()
    };
    let run = run_front(&InitialCondition::Step, Nonlinearity::Zero, p, 100.0, &Default::default())?;
    let mut worst: f64 = 0.0;
    let mut text = Vec::new();
    for c in [2.5, 3.0, 4.0] {
        let a = phi_amplitude(&run, c, AmplitudeSettings::default())?.value;
        let m = phi_moment(&run, c, 10.0)?.value;
        let want = 2.0 / c;
        worst = worst.max(rel(a, want)).max(rel(m, want));
        text.push(format!("c={c}: {a:.6}, {m:.6}"));
    }
    Ok(Outcome::new(
        "3",
        "Φ = 2/c without reaction",
        format!("worst relative error {worst:.2e}; {}", text.join("; ")),
        "within 1% of 2/c",
        vec![("3", worst < 0.01)],
    ))
}

/// Smoothness of the analytic parts at radius 0.2, and the integration-by-parts identity.
pub fn criterion7() -> Result<Outcome> {
    let cases = [(1.5, 1.5, false), (2.0, 1.5, false), (2.5, 1.5, true)];
    let mut worst_fit: f64 = 0.0;
    let mut small_fit: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for (a, b, lg) in cases {
        worst_fit = worst_fit.max(lemma42_smoothness(a, b, lg, 0.2, 10)?.max_residual);
        small_fit = small_fit.max(lemma42_smoothness(a, b, lg, 0.04, 10)?.max_residual);
        for e in [-0.2, -0.1, 0.1, 0.2] {
            let lhs = lemma42_integral(a, b, e, lg)?;
            worst_rec = worst_rec.max((lhs - lemma42_recursion_rhs(a, b, e, lg)?).abs());
        }
    }
    Ok(Outcome::new(
        "7",
        "incomplete-gamma singular parts",
        format!("cubic-fit residual {worst_fit:.3e} at radius 0.2 ({small_fit:.2e} at radius 0.04); recursion error {worst_rec:.1e}"),
        "fit residual < 1e-4 on [−0.2, 0.2], recursion to 1e-10",
        vec![("7a", worst_fit < 1e-4), ("7b", worst_rec < 1e-10)],
    ))
}

/// h(x,t) ≤ e^{(1+r²)t}g(r,0)e^{−rx}/√(4πt) and g(r,t) ≤ e^{(1+r²)t}g(r,0).
pub fn criterion9() -> Result<Outcome> {
    let rs = [0.5, 1.0, 1.5];
    let p = SolverParams {
        c_max: 3.0,
        ..SolverParams::default()
    };
    let cfg = crate::observables::RecorderConfig {
        g_r: rs.to_vec(),
        ..Default::default()
    };
    let ic = InitialCondition::Step;
    let run = run_front(&ic, Nonlinearity::Quadratic, p, 100.0, &cfg)?;
    let mut pointwise: f64 = f64::INFINITY;
    let mut log_slack: f64 = f64::INFINITY;
    let mut integrated: f64 = f64::INFINITY;
    let mut samples = 0usize;
    for (j, &r) in rs.iter().enumerate() {
        let lg0 = h0_moment(&ic, r)?.ln();
        for snap in &run.snapshots {
            let f = &snap.field;
            let t = f.t;
            if !(1.0..=100.0).contains(&t) {
                continue;
            }
            let lpre = (1.0 + r * r) * t + lg0 - 0.5 * (4.0 * PI * t).ln();
            for i in 0..f.len() {
                let x = f.z(i) + 2.0 * t;
                let bound = (lpre - r * x).min(700.0).exp();
                pointwise = pointwise.min(bound + 1e-12 - f.h(i));
                if f.h(i) > 1e-200 {
                    log_slack = log_slack.min(lpre - r * x - f.h(i).ln());
                }
                samples += 1;
            }
        }
        for (k, &t) in run.g_times.iter().enumerate() {
            let lg = run.log_g[j][k].log_mag;
            integrated = integrated.min((1.0 + r * r) * t + lg0 - lg);
        }
    }
    Ok(Outcome::new(
        "9",
        "exponential bounds, r ∈ {0.5, 1, 1.5}, t ∈ [1, 100]",
        format!(
            "{samples} pointwise samples, min slack {pointwise:.3e} (min log-slack where h > 1e-200: {log_slack:.3e}); min log-slack of g {integrated:.3e}"
        ),
        "all slacks ≥ 0",
        vec![("9", pointwise >= 0.0 && integrated >= -1e-12)],
    ))
}
