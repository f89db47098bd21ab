//! Split-step properties on resolved cusp and smooth bases: reversibility,
//! conservation, second-order convergence and the one-mode modulation.

use num_complex::Complex64;
use proptest::prelude::*;
use torus_nls::dynamics::{evolve, linear_step, nonlinear_step, IntegratorConfig, Monitor, SplitStep};
use torus_nls::experiments::{fit_modulation, lipschitz_experiment, LipschitzRun, RunSettings, Setup};
use torus_nls::field::{mass, FieldState, SobolevIndex};
use torus_nls::metric::{Family, PotentialProfile};

fn setup(family: Family, k: u32, modes: usize) -> Setup {
    Setup::new(PotentialProfile::new(family, k).unwrap(), modes).unwrap()
}

fn monitor(setup: &Setup) -> Monitor {
    Monitor {
        omega: setup.l4_fourth(),
        s: SobolevIndex::new(0.5).unwrap(),
    }
}

#[test]
fn forward_then_backward_returns() {
    let s = setup(Family::LipschitzCusp, 64, 16);
    let a = 64f64.powf(-2.0 / 3.0);
    let mut coeffs: Vec<Complex64> = (0..16)
        .map(|j| a * Complex64::from_polar(0.5f64.powi(j as i32), 0.3 * j as f64))
        .collect();
    let start = coeffs.clone();
    let cfg = s.plan(a, 1.0, &RunSettings { modes: 16, ..Default::default() }).unwrap();
    let mut stepper = SplitStep::new(&s.basis, 16).unwrap();
    stepper.advance(&mut coeffs, cfg.dt, 1000);
    assert!(coeffs.iter().zip(&start).map(|(x, y)| (x - y).norm()).sum::<f64>() > 1e-3 * a);
    stepper.advance(&mut coeffs, -cfg.dt, 1000);
    let defect = coeffs.iter().zip(&start).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    assert!(defect <= 1e-10 * mass(&start).sqrt(), "reversibility defect {defect:e}");
}

/// Final state of `aφ₀` after `t_end` at a fixed step.
fn final_state(s: &Setup, a: f64, t_end: f64, dt: f64) -> (Vec<Complex64>, f64, f64) {
    let steps = (t_end / dt).round() as usize;
    let cfg = IntegratorConfig {
        dt: t_end / steps as f64,
        t_end,
        modes: 16,
        record_every: steps,
    };
    let (end, trace) = evolve(&FieldState::ground_mode(a, 16), &s.basis, &cfg, &monitor(s)).unwrap();
    let e0 = trace.energy[0];
    let tail = *trace.tail_mass.last().unwrap();
    let compensated = (trace.energy.last().unwrap() + s.lambda0() * tail - e0).abs() / e0;
    (end.coeffs, compensated, trace.max_relative_mass_drift())
}

#[test]
fn strang_is_second_order() {
    let s = setup(Family::SmoothWell, 32, 16);
    let a = 0.2;
    let (t_end, dt) = (1.0, 2e-3);
    let (c1, e1, _) = final_state(&s, a, t_end, dt);
    let (c2, e2, _) = final_state(&s, a, t_end, dt / 2.0);
    let (c4, _, _) = final_state(&s, a, t_end, dt / 4.0);
    let diff = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let ratio = diff(&c1, &c2) / diff(&c2, &c4);
    assert!(ratio > 3.0 && ratio < 5.0, "self-convergence ratio {ratio}");
    assert!(e1 / e2 > 3.0, "energy error ratio {}", e1 / e2);
}

#[test]
fn one_mode_modulation_is_exact() {
    let s = setup(Family::LipschitzCusp, 64, 2);
    let a = 64f64.powf(-2.0 / 3.0);
    let settings = RunSettings {
        modes: 1,
        dt: Some(5e-6),
        records: 50,
        ..Default::default()
    };
    let (fit, _) = fit_modulation(&s, a, 0.5, &settings).unwrap();
    assert!((fit.mu_meas / fit.p_full - 1.0).abs() < 1e-3, "{}", fit.mu_meas / fit.p_full);
}

#[test]
fn linear_limit_has_no_modulation() {
    let s = setup(Family::LipschitzCusp, 64, 16);
    let settings = RunSettings {
        modes: 16,
        records: 50,
        ..Default::default()
    };
    let (fit, _) = fit_modulation(&s, 1e-6, 1.0, &settings).unwrap();
    assert!((fit.omega_total - s.lambda0()).abs() < 1e-9 * s.lambda0());
    assert!(fit.mu_meas.abs() * 1e-12 < 1e-9);
}

#[test]
fn identical_data_give_unit_quotient() {
    let s = setup(Family::SmoothWell, 32, 16);
    let sobolev = SobolevIndex::new(0.45).unwrap();
    let run = LipschitzRun::with_amplitudes(Family::SmoothWell, 32, sobolev, 0.05, 0.1, 0.0, 2.0);
    let settings = RunSettings {
        modes: 16,
        records: 20,
        ..Default::default()
    };
    let run = lipschitz_experiment(run, &s, &settings).unwrap();
    assert!(run.quotient.iter().all(|&q| q == 1.0));
}

#[test]
fn quotient_starts_at_one_and_stays_under_ceiling() {
    let s = setup(Family::SmoothWell, 32, 16);
    let run = LipschitzRun::new(Family::SmoothWell, 32, SobolevIndex::new(0.45).unwrap(), 0.05).unwrap();
    let settings = RunSettings {
        modes: 16,
        records: 40,
        ..Default::default()
    };
    let run = lipschitz_experiment(run, &s, &settings).unwrap();
    assert!((run.quotient[0] - 1.0).abs() < 1e-12);
    assert!((run.quotient[1] - 1.0).abs() < 0.05);
    assert!(run.below_ceiling());
    assert!(run.quotient.iter().all(|q| q.is_finite() && *q >= 0.0));
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sub_flows_conserve_mass(c in coefficients(8), v in coefficients(40), dt in -0.5f64..0.5) {
        let s = setup(Family::LipschitzCusp, 4, 8);
        let stepped = linear_step(&c, &s.basis, dt);
        prop_assert!((mass(&stepped) - mass(&c)).abs() <= 1e-14 * mass(&c).max(1e-300));
        let w = nonlinear_step(&v, dt);
        for (a, b) in v.iter().zip(&w) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-15);
        }
        let back = nonlinear_step(&w, -dt);
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).norm() <= 1e-14);
        }
    }
}
