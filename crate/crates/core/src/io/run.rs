//! Executes a validated config and collects its tables, audits and results.

use std::collections::BTreeMap;

use serde_json::Value;

use super::config::{RunConfig, Subcommand};
use super::emit::{Cell, Table};
use super::manifest::{RunManifest, VERSION};
use crate::airy::{hermite_ground_state, model_ground_state, AiryZeroTable};
use crate::dynamics::{
    evolve, Monitor, ENERGY_DRIFT_TOL, MASS_DRIFT_TOL, NONLINEAR_PHASE_LIMIT, TAIL_TOL,
};
use crate::eigen::{validate_ground_state, ORTHONORMALITY_TOL, RESIDUAL_TOL};
use crate::error::Result;
use crate::experiments::{
    fit_modulation, ground_phases, lipschitz_experiment, scaling_sweep, LipschitzRun, Prediction, Setup,
    FIT_RESIDUAL_TOL, L4_SLACK, MATCH_TOL, ORACLE_TOL, REMAINDER_SLACK,
};
use crate::field::FieldState;
use crate::metric::Family;

pub const TRACE_HEADER: [&str; 10] = [
    "t", "mass", "energy", "re_gamma", "im_gamma", "abs_gamma", "tail_mass", "q_l2", "q_l4", "q_hs",
];
pub const SWEEP_HEADER: [&str; 7] = ["k", "lambda0_minus_k2", "gap", "sup_ratio", "l4_fourth", "mu_meas", "Q_tstar"];
pub const EXPONENT_HEADER: [&str; 4] = ["quantity", "slope", "half_width", "expected"];
pub const EIG_HEADER: [&str; 4] = ["j", "lambda_j", "lambda_j_minus_k2_over_k43", "residual"];
pub const ORACLE_HEADER: [&str; 4] = ["index", "z_ai", "z_aip", "alpha_n_over_k43"];
pub const MODULATION_HEADER: [&str; 5] = ["t", "re_c0", "im_c0", "phase", "phase_fit"];
pub const LIPSCHITZ_HEADER: [&str; 4] = ["t", "Q", "Q_oracle", "ceiling"];

/// What a run produced, before it is written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub derived: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub audits: BTreeMap<String, bool>,
    pub results: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn derive(&mut self, key: &str, v: f64) {
        self.derived.insert(key.into(), v);
    }

    fn tolerance(&mut self, key: &str, v: f64) {
        self.tolerances.insert(key.into(), v);
    }

    fn audit(&mut self, key: &str, ok: bool) {
        self.audits.insert(key.into(), ok);
    }

    fn result(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.into(), v.into());
    }

    fn grid(&mut self, setup: &Setup) {
        self.derive("n", setup.grid().len() as f64);
        self.derive("h", setup.grid().spacing());
        self.derive("lambda0", setup.lambda0());
        self.derive("gap", setup.gap());
    }

    fn conservation(&mut self, mass: f64, energy: f64, tail: f64) {
        self.tolerance("mass_drift", MASS_DRIFT_TOL);
        self.tolerance("energy_drift", ENERGY_DRIFT_TOL);
        self.tolerance("tail_mass", TAIL_TOL);
        self.tolerance("nonlinear_phase", NONLINEAR_PHASE_LIMIT);
        self.result("mass_drift", mass);
        self.result("energy_drift", energy);
        self.result("tail_mass", tail);
        self.audit("mass_drift", mass <= MASS_DRIFT_TOL);
        self.audit("energy_drift", energy <= ENERGY_DRIFT_TOL);
        self.audit("tail_mass", tail <= TAIL_TOL);
    }

    pub fn passed(&self) -> bool {
        self.audits.values().all(|&ok| ok)
    }

    pub fn into_manifest(self, config: &RunConfig, wall_time_s: f64) -> (Vec<Table>, RunManifest) {
        let manifest = RunManifest {
            version: VERSION.into(),
            subcommand: config.subcommand,
            config: config.clone(),
            derived: self.derived,
            tolerances: self.tolerances,
            audits: self.audits,
            results: self.results,
            warnings: self.warnings,
            outputs: Vec::new(),
            wall_time_s,
        };
        (self.tables, manifest)
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match config.subcommand {
        Subcommand::Oracle => oracle(config),
        Subcommand::Eig => eig(config),
        Subcommand::Evolve => evolve_run(config),
        Subcommand::Modulation => modulation(config),
        Subcommand::Lipschitz => lipschitz(config),
        Subcommand::Sweep => sweep(config),
    }
}

fn oracle(config: &RunConfig) -> Result<Outcome> {
    let count = config.params.count.unwrap_or(1);
    let zeros = AiryZeroTable::new(count)?;
    let mut out = Outcome::default();
    let mut table = Table::new("oracle", &ORACLE_HEADER);
    for i in 0..count {
        table.push(vec![
            i.into(),
            zeros.ai_zeros[i].into(),
            zeros.aip_zeros[i].into(),
            zeros.unit_eigenvalue(i).into(),
        ]);
    }
    out.tables.push(table);
    out.audit("interlacing", zeros.interlaces());
    Ok(out)
}

fn eig(config: &RunConfig) -> Result<Outcome> {
    let profile = config.profile()?;
    let modes = config.settings().modes;
    let setup = Setup::on_grid(profile, config.grid()?, modes)?;
    let basis = setup.basis.truncated(modes.max(1).min(setup.basis.len()));
    let mut out = Outcome::default();
    out.grid(&setup);
    out.result("method", format!("{:?}", basis.method()).to_lowercase());
    out.result("lanczos_steps", basis.lanczos_steps());

    let k = profile.k_f64();
    let k43 = k.powf(4.0 / 3.0);
    let mut table = Table::new("eig", &EIG_HEADER);
    for (j, (l, r)) in basis.lambda().iter().zip(basis.residuals()).enumerate() {
        table.push(vec![j.into(), (*l).into(), ((l - k * k) / k43).into(), (*r).into()]);
    }
    out.tables.push(table);
    if config.params.vectors == Some(true) {
        let mut header = vec!["x".to_string()];
        header.extend((0..basis.len()).map(|j| format!("phi_{j}")));
        let mut vectors = Table {
            name: "eig_vectors".into(),
            header,
            rows: Vec::new(),
        };
        for i in 0..basis.grid().len() {
            let mut row = vec![Cell::from(basis.grid().x(i))];
            row.extend(basis.modes().map(|phi| Cell::from(phi[i])));
            vectors.push(row);
        }
        out.tables.push(vectors);
    }

    let oracle = match profile.family() {
        Family::LipschitzCusp => model_ground_state(profile.k(), setup.grid())?,
        Family::SmoothWell => {
            let (psi, predicted) = hermite_ground_state(&profile, setup.grid())?;
            out.result("hermite_lambda0", predicted);
            psi
        }
    };
    let report = validate_ground_state(&setup.basis, &oracle, profile.k())?;
    out.result("lambda0_minus_k2_over_k43", (setup.lambda0() - k * k) / k43);
    out.result("gap_over_k43", setup.gap() / k43);
    out.result("overlap_deficit", report.overlap_deficit);
    out.result("sup_ratio", report.sup_ratio);
    out.result("l4_fourth", report.l4_fourth);
    out.tolerance("orthonormality", ORTHONORMALITY_TOL);
    out.tolerance("residual_relative", RESIDUAL_TOL);
    out.tolerance("overlap_deficit", report.deficit_bound);
    let defect = basis.orthonormality_defect();
    out.result("orthonormality_defect", defect);
    out.audit("orthonormality", defect <= ORTHONORMALITY_TOL);
    out.audit(
        "residuals",
        basis.residuals().iter().zip(basis.lambda()).all(|(r, l)| *r <= RESIDUAL_TOL * (1.0 + l.abs())),
    );
    out.audit("ground_state_oracle", report.passed);
    out.audit("gap_positive", setup.gap() > 0.0);
    Ok(out)
}

fn trace_table(trace: &crate::dynamics::EvolutionTrace) -> Table {
    let mut table = Table::new("evolve", &TRACE_HEADER);
    for i in 0..trace.len() {
        let g = trace.gamma[i];
        table.push(vec![
            trace.times[i].into(),
            trace.mass[i].into(),
            trace.energy[i].into(),
            g.re.into(),
            g.im.into(),
            g.norm().into(),
            trace.tail_mass[i].into(),
            trace.q_l2[i].into(),
            trace.q_l4[i].into(),
            trace.q_hs[i].into(),
        ]);
    }
    table
}

fn evolve_run(config: &RunConfig) -> Result<Outcome> {
    let profile = config.profile()?;
    let settings = config.settings();
    let setup = Setup::new(profile, settings.modes)?;
    let a = config.params.amplitude.unwrap_or(1.0);
    let t_end = config.params.t_end.unwrap_or(1.0);
    let plan = setup.plan(a, t_end, &settings)?;
    let monitor = Monitor {
        omega: setup.l4_fourth(),
        s: config.s()?,
    };
    let (_, trace) = evolve(&FieldState::ground_mode(a, plan.modes), &setup.basis, &plan, &monitor)?;
    let mut out = Outcome::default();
    out.grid(&setup);
    out.derive("dt", plan.dt);
    out.derive("steps", trace.steps as f64);
    out.derive("omega", monitor.omega);
    let tail = trace.tail_mass[trace.len() - 1] / trace.mass[0];
    out.conservation(trace.max_relative_mass_drift(), trace.max_relative_energy_drift(), tail);
    out.result("final_abs_gamma", trace.gamma[trace.len() - 1].norm());
    out.tables.push(trace_table(&trace));
    Ok(out)
}

fn modulation(config: &RunConfig) -> Result<Outcome> {
    let profile = config.profile()?;
    let settings = config.settings();
    let setup = Setup::new(profile, settings.modes)?;
    let a = config.params.amplitude.unwrap_or(1.0);
    let t_end = config.params.t_end.unwrap_or(1.0);
    let plan = setup.plan(a, t_end, &settings)?;
    let (fit, trace) = fit_modulation(&setup, a, t_end, &settings)?;
    let mut out = Outcome::default();
    out.grid(&setup);
    out.derive("dt", plan.dt);
    out.derive("steps", trace.steps as f64);
    let ground: Vec<_> = trace.ground_coefficients().collect();
    let phases = ground_phases(&trace.times, &ground, fit.lambda0)?;
    let slope = fit.lambda0 - fit.omega_total;
    let intercept = {
        let n = phases.len() as f64;
        let mt = trace.times.iter().sum::<f64>() / n;
        phases.iter().sum::<f64>() / n - slope * mt
    };
    let mut table = Table::new("modulation", &MODULATION_HEADER);
    for ((t, c), ph) in trace.times.iter().zip(&ground).zip(&phases) {
        table.push(vec![(*t).into(), c.re.into(), c.im.into(), (*ph).into(), (intercept + slope * t).into()]);
    }
    out.tables.push(table);
    out.result("omega_total", fit.omega_total);
    out.result("mu_meas", fit.mu_meas);
    out.result("p_full", fit.p_full);
    out.result("p_half", fit.p_half);
    out.result("mu_over_p_full", fit.mu_meas / fit.p_full);
    out.result("fit_residual", fit.fit_residual);
    out.result("periods", fit.periods);
    out.result(
        "matched",
        match fit.matched {
            Some(Prediction::Full) => Value::from("full"),
            Some(Prediction::Half) => Value::from("half"),
            None => Value::Null,
        },
    );
    out.tolerance("fit_residual", FIT_RESIDUAL_TOL);
    out.tolerance("prediction_match", MATCH_TOL);
    out.audit("fit_residual", fit.residual_ok);
    out.audit("prediction_match", fit.matched.is_some());
    let tail = trace.tail_mass[trace.len() - 1] / trace.mass[0];
    out.conservation(trace.max_relative_mass_drift(), trace.max_relative_energy_drift(), tail);
    Ok(out)
}

fn lipschitz(config: &RunConfig) -> Result<Outcome> {
    let profile = config.profile()?;
    let settings = config.settings();
    let delta = config.params.delta.unwrap_or(0.05);
    let run = LipschitzRun::new(profile.family(), profile.k(), config.s()?, delta)?;
    let setup = Setup::new(profile, settings.modes)?;
    let plan = setup.plan(run.a1.max(run.a2), run.t_star, &settings)?;
    let mut out = Outcome::default();
    out.grid(&setup);
    out.derive("a1", run.a1);
    out.derive("eps", run.eps);
    out.derive("a2", run.a2);
    out.derive("t_star", run.t_star);
    out.derive("dt", plan.dt);
    out.derive("steps", plan.steps() as f64);
    let run = lipschitz_experiment(run, &setup, &settings)?;
    let mut table = Table::new("lipschitz", &LIPSCHITZ_HEADER);
    for i in 0..run.times.len() {
        table.push(vec![
            run.times[i].into(),
            run.quotient[i].into(),
            run.oracle[i].into(),
            run.ceiling[i].into(),
        ]);
    }
    out.tables.push(table);
    out.result("omega", run.omega);
    if let Some(fit) = &run.modulation {
        out.result("mu_over_p_full", fit.mu_meas / fit.p_full);
    }
    out.result("q_tstar", run.q_tstar());
    out.result("max_quotient", run.max_quotient());
    out.result("oracle_deviation", run.oracle_deviation());
    for (i, a) in run.audits.iter().enumerate() {
        let tag = i + 1;
        out.result(&format!("trajectory{tag}_l4_ratio"), a.l4_ratio);
        out.result(&format!("trajectory{tag}_l2_ratio"), a.l2_ratio);
        out.result(&format!("trajectory{tag}_depletion_ratio"), a.depletion_ratio);
        out.result(&format!("trajectory{tag}_hs_ratio"), a.hs_ratio);
    }
    out.tolerance("oracle_deviation", ORACLE_TOL);
    out.tolerance("l4_slack", L4_SLACK);
    out.tolerance("remainder_slack", REMAINDER_SLACK);
    out.audit("remainder_bounds", run.bounds_hold());
    out.audit("triangle_ceiling", run.below_ceiling());
    out.audit("oracle_agreement", run.oracle_deviation() <= ORACLE_TOL);
    out.audit("quotient_finite", run.quotient.iter().all(|q| q.is_finite() && *q >= 0.0));
    out.conservation(run.mass_drift, run.energy_drift, run.tail);
    Ok(out)
}

fn sweep(config: &RunConfig) -> Result<Outcome> {
    let settings = config.settings();
    let dynamics = config.params.dynamics == Some(true);
    let k_list = config.k_list();
    let sweep = scaling_sweep(
        &k_list,
        config.family(),
        config.s()?,
        config.params.delta.unwrap_or(0.05),
        dynamics.then_some(&settings),
    )?;
    let mut out = Outcome::default();
    let mut table = Table::new("sweep", &SWEEP_HEADER);
    for e in &sweep.entries {
        out.derive(&format!("n_k{}", e.k), e.n as f64);
        table.push(vec![
            e.k.into(),
            e.lambda0_minus_k2.into(),
            e.gap.into(),
            e.sup_ratio.into(),
            e.l4_fourth.into(),
            e.mu_meas.into(),
            e.q_tstar.into(),
        ]);
    }
    out.tables.push(table);
    let mut exps = Table::new("sweep_exponents", &EXPONENT_HEADER);
    for e in &sweep.exponents {
        exps.push(vec![
            Cell::Text(e.quantity.clone()),
            e.slope.into(),
            e.half_width.into(),
            e.expected.into(),
        ]);
        out.result(&format!("slope_{}", e.quantity), e.slope);
    }
    out.tables.push(exps);
    out.audit("all_k_resolved", sweep.warnings.is_empty());
    out.audit("gap_positive", sweep.entries.iter().all(|e| e.gap > 0.0));
    out.warnings = sweep.warnings;
    Ok(out)
}
