use std::sync::OnceLock;

use kpp_core::asymptotics::lemma42::{lemma42_integral, lemma42_recursion_rhs};
use kpp_core::harness::config::RunConfig;
use kpp_core::harness::output::{format_num, read_config_hash, Cell, Table};
use kpp_core::model::{InitialCondition, Nonlinearity};
use kpp_core::observables::{mu_of_t, phi_amplitude, run_front, AmplitudeSettings, FrontRun, RecorderConfig};
use kpp_core::pde_solver::{evolve, Solver, SolverParams};
use kpp_core::wave::{phi_hat, phi_hat_via_omega, solve_wave};
use proptest::prelude::*;

fn coarse() -> SolverParams {
    SolverParams { dz: 0.05, dt: 0.02, c_max: 2.5, ..SolverParams::default() }
}

fn short_run() -> &'static FrontRun {
    static RUN: OnceLock<FrontRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = RecorderConfig { cadence: 0.5, ..RecorderConfig::default() };
        run_front(&InitialCondition::Step, Nonlinearity::Quadratic, coarse(), 80.0, &cfg).unwrap()
    })
}

#[test]
fn solution_stays_between_zero_and_one() {
    let mut worst = (0.0f64, 0.0f64);
    let mut watch = |s: &Solver| {
        let f = s.field();
        for i in 0..f.len() {
            let h = f.h(i);
            worst.0 = worst.0.min(h);
            worst.1 = worst.1.max(h);
        }
        Ok(())
    };
    let s = evolve(&InitialCondition::Step, Nonlinearity::Quadratic, coarse(), 30.0, &mut watch).unwrap();
    assert!(worst.0 >= 0.0, "min h = {}", worst.0);
    assert!(worst.1 <= 1.0 + 1e-8, "max h = {}", worst.1);
    assert!(s.max_h() <= 1.0 + 1e-8);
}

#[test]
fn front_never_moves_backwards() {
    let run = short_run();
    let mu: Vec<(f64, f64)> = run.mu_series().into_iter().filter(|&(t, _)| t >= 1.0).collect();
    assert!(mu.len() > 100);
    for w in mu.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-9, "μ drops at t = {}: {} -> {}", w[1].0, w[0].1, w[1].1);
    }
}

#[test]
fn larger_initial_data_stays_ahead() {
    let samples: Vec<f64> = (0..=20).map(|k| (std::f64::consts::PI * k as f64 / 20.0).sin() * 0.3).collect();
    let bump = InitialCondition::StepPlusBump { lo: 1.0, hi: 4.0, samples };
    let t = 20.0;
    let a = evolve(&InitialCondition::Step, Nonlinearity::Quadratic, coarse(), t, &mut |_: &Solver| Ok(())).unwrap();
    let b = evolve(&bump, Nonlinearity::Quadratic, coarse(), t, &mut |_: &Solver| Ok(())).unwrap();
    let (fa, fb) = (a.field(), b.field());
    let hi = fa.z_hi().min(fb.z_hi());
    let mut z = fa.z(0).max(fb.z(0));
    while z < hi {
        let (ha, hb) = (fa.h_at_z(z).unwrap(), fb.h_at_z(z).unwrap());
        assert!(hb >= ha - 1e-12 * ha.max(1e-300), "z = {z}: {hb} < {ha}");
        z += 0.5;
    }
    assert!(mu_of_t(fb).unwrap() >= mu_of_t(fa).unwrap());
}

#[test]
fn prefactor_positive_and_increasing_near_two() {
    let run = short_run();
    let set = AmplitudeSettings { t_min: 20.0, ..AmplitudeSettings::default() };
    let phis: Vec<f64> = [2.05, 2.1, 2.2, 2.3, 2.4, 2.5]
        .iter()
        .map(|&c| phi_amplitude(run, c, set).unwrap().value)
        .collect();
    assert!(phis[0] > 0.0, "{phis:?}");
    for w in phis.windows(2) {
        assert!(w[1] > w[0], "{phis:?}");
    }
}

#[test]
fn wave_integral_identity_for_negative_eps() {
    let w = solve_wave(&Nonlinearity::Quadratic, 60.0, 0.01).unwrap();
    for eps in [-0.8, -0.5, -0.3, -0.1] {
        let a = phi_hat(eps, &w).unwrap();
        let b = phi_hat_via_omega(eps, &w).unwrap();
        assert!((a - b).abs() < 1e-6, "ε = {eps}: {a} vs {b}");
    }
}

#[test]
fn tables_are_reproducible_and_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::minimal(10.0);
    let hash = cfg.hash();
    let mut t = Table::new("demo", &["t", "value"]);
    for k in 0..5 {
        let x = k as f64 / 7.0;
        t.push(vec![Cell::Num(x), Cell::Num(x.exp())]);
    }
    let p1 = t.write(&dir.path().join("a"), &hash).unwrap();
    let p2 = t.write(&dir.path().join("b"), &hash).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(read_config_hash(&p1).unwrap(), hash);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(t_max in 1.0f64..1e4, eps in -0.85f64..0.45, seed in any::<u64>()) {
        let mut cfg = RunConfig::minimal(t_max);
        cfg.eps = vec![eps];
        cfg.seed = seed;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn numbers_survive_text(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(format_num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn integration_by_parts_recursion(
        alpha in 1.3f64..2.6,
        beta in 0.0f64..1.5,
        eps in prop_oneof![-0.3f64..-0.05, 0.05f64..0.3],
        with_log in any::<bool>(),
    ) {
        prop_assume!((1.0 - alpha - beta * eps).abs() > 0.1);
        let lhs = lemma42_integral(alpha, beta, eps, with_log).unwrap();
        let rhs = lemma42_recursion_rhs(alpha, beta, eps, with_log).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }
}
