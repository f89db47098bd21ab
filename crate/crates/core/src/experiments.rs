//! Modulation measurement, remainder audits, the two-data Lipschitz quotient
//! and exponent sweeps over `k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, EvolutionTrace, IntegratorConfig, Monitor, DEFAULT_PHASE_FRACTION};
use crate::eigen::{assemble, lowest_eigenpairs, EigenBasis};
use crate::error::{Error, Result};
use crate::field::{lp_norms_real, weighted_norm, FieldState, LpNorms, SobolevIndex};
use crate::metric::{Family, Grid, PotentialProfile};

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_RECORDS: usize = 400;
/// Largest predicted ground-mode depletion `a²‖φ₀‖₄⁴/Γ` accepted by the fit.
pub const DEPLETION_LIMIT: f64 = 1e-2;
pub const FIT_RESIDUAL_TOL: f64 = 1e-2;
pub const MATCH_TOL: f64 = 0.05;
pub const L4_SLACK: f64 = 2.0;
pub const REMAINDER_SLACK: f64 = 4.0;
/// Largest relative deviation of `Q(t)` from the two-mode oracle.
pub const ORACLE_TOL: f64 = 0.1;
/// The oracle comparison covers the times before the quotient reaches this.
pub const ORACLE_CEILING: f64 = 10.0;

/// Numerical knobs shared by every evolution in an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub modes: usize,
    pub phase_fraction: f64,
    pub records: usize,
    /// Explicit time step in place of the automatic one; it must still pass
    /// the phase and nonlinear-step rules.
    pub dt: Option<f64>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            modes: DEFAULT_MODES,
            phase_fraction: DEFAULT_PHASE_FRACTION,
            records: DEFAULT_RECORDS,
            dt: None,
        }
    }
}

/// A resolved operator and its lowest eigenpairs.
#[derive(Clone, Debug)]
pub struct Setup {
    pub profile: PotentialProfile,
    pub basis: EigenBasis,
}

impl Setup {
    pub fn new(profile: PotentialProfile, modes: usize) -> Result<Self> {
        Self::on_grid(profile, Grid::resolving(&profile)?, modes)
    }

    /// As [`Setup::new`] on an explicit grid, which must resolve the profile.
    pub fn on_grid(profile: PotentialProfile, grid: Grid, modes: usize) -> Result<Self> {
        let op = assemble(&profile, &grid)?;
        let want = modes.max(2);
        let basis = lowest_eigenpairs(&op, want)?;
        basis.check_invariants()?;
        Ok(Self { profile, basis })
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    pub fn lambda0(&self) -> f64 {
        self.basis.lambda()[0]
    }

    /// `Γ = λ₁ - λ₀`.
    pub fn gap(&self) -> f64 {
        self.basis.lambda()[1] - self.basis.lambda()[0]
    }

    pub fn ground_norms(&self) -> LpNorms {
        lp_norms_real(self.basis.mode(0), self.grid().spacing())
    }

    /// `‖φ₀‖₄⁴`.
    pub fn l4_fourth(&self) -> f64 {
        self.ground_norms().l4.powi(4)
    }

    /// Integrator settings for data of amplitude at most `a` times `φ₀`.
    pub fn plan(&self, a: f64, t_end: f64, settings: &RunSettings) -> Result<IntegratorConfig> {
        let sup = a * self.ground_norms().linf;
        let mut config = IntegratorConfig::automatic(
            &self.basis,
            settings.modes.min(self.basis.len()),
            sup,
            t_end,
            settings.phase_fraction,
            settings.records,
        )?;
        if let Some(dt) = settings.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive (got {dt})")));
            }
            let steps = (t_end / dt).ceil().max(1.0) as usize;
            config.dt = t_end / steps as f64;
            config.record_every = steps.div_ceil(settings.records.max(1)).max(1);
            config
                .check(&self.basis, sup)
                .map_err(|e| Error::Config(format!("dt = {dt:e} rejected: {e}; drop --dt to use the automatic step")))?;
        }
        Ok(config)
    }
}

/// Candidate modulation coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    /// `‖φ₀‖₄⁴`, the one-mode projection `⟨|φ₀|²φ₀, φ₀⟩`.
    Full,
    /// `½‖φ₀‖₄⁴`.
    Half,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationFit {
    pub k: u32,
    pub family: Family,
    pub amplitude: f64,
    pub lambda0: f64,
    /// Measured rotation rate `Ω_tot` of `h⟨v, φ₀⟩`.
    pub omega_total: f64,
    /// `(Ω_tot - λ₀) / a²`.
    pub mu_meas: f64,
    pub p_full: f64,
    pub p_half: f64,
    /// RMS phase residual over the nonlinear phase `a² p_full t_end`.
    pub fit_residual: f64,
    pub residual_ok: bool,
    pub matched: Option<Prediction>,
    /// Modulation periods `a² p_full t_end / 2π` covered by the run.
    pub periods: f64,
}

impl ModulationFit {
    pub fn deviation(&self, p: Prediction) -> f64 {
        let target = match p {
            Prediction::Full => self.p_full,
            Prediction::Half => self.p_half,
        };
        (self.mu_meas - target).abs() / target
    }
}

/// Least-squares line through the unwrapped phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

/// Unwraps a phase sequence. Jumps larger than `π/2` between neighbours are
/// ambiguous and rejected.
pub fn unwrap_phases(phases: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let raw = p - phases[i - 1];
            let wrapped = raw - 2.0 * PI * (raw / (2.0 * PI)).round();
            if wrapped.abs() > 0.5 * PI {
                return Err(Error::Unwrap { sample: i, jump: wrapped });
            }
            offset += wrapped - raw;
        }
        out.push(p + offset);
    }
    Ok(out)
}

/// Ordinary least squares `y ≈ slope·x + intercept` with residual RMS and
/// the standard error of the slope.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (PhaseFit, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let stderr = (ss / dof / sxx).sqrt();
    (
        PhaseFit {
            slope,
            intercept,
            rms: (ss / n).sqrt(),
        },
        stderr,
    )
}

/// Fits the phase of `c₀(t) e^{iλ₀t}`. Removing the known linear rotation
/// first leaves only the slow nonlinear drift to unwrap.
pub fn fit_ground_phase(times: &[f64], ground: &[Complex64], lambda0: f64) -> Result<PhaseFit> {
    if times.len() < 3 || times.len() != ground.len() {
        return Err(Error::InvalidArgument("phase fit needs at least three samples".into()));
    }
    let unwrapped = ground_phases(times, ground, lambda0)?;
    Ok(linear_fit(times, &unwrapped).0)
}

/// Unwrapped phase of `c₀(t) e^{iλ₀t}`.
pub fn ground_phases(times: &[f64], ground: &[Complex64], lambda0: f64) -> Result<Vec<f64>> {
    let phases: Vec<f64> = times
        .iter()
        .zip(ground)
        .map(|(t, c)| (c * Complex64::from_polar(1.0, lambda0 * t)).arg())
        .collect();
    unwrap_phases(&phases)
}

fn predicted_depletion(setup: &Setup, a: f64) -> f64 {
    a * a * setup.l4_fourth() / setup.gap()
}

/// Evolves `aφ₀` to `t_end` and measures the modulation coefficient from the
/// rotation rate of the ground-mode coefficient.
pub fn fit_modulation(
    setup: &Setup,
    a: f64,
    t_end: f64,
    settings: &RunSettings,
) -> Result<(ModulationFit, EvolutionTrace)> {
    let depletion = predicted_depletion(setup, a);
    if depletion > DEPLETION_LIMIT {
        return Err(Error::Depletion(depletion));
    }
    let p_full = setup.l4_fourth();
    let config = setup.plan(a, t_end, settings)?;
    let monitor = Monitor {
        omega: p_full,
        s: SobolevIndex::new(0.0)?,
    };
    let state = FieldState::ground_mode(a, config.modes);
    let (_, trace) = evolve(&state, &setup.basis, &config, &monitor)?;
    let fit = modulation_from_trace(setup, a, &trace)?;
    Ok((fit, trace))
}

/// The modulation fit for an already computed trajectory starting at `aφ₀`.
pub fn modulation_from_trace(setup: &Setup, a: f64, trace: &EvolutionTrace) -> Result<ModulationFit> {
    let lambda0 = setup.lambda0();
    let ground: Vec<Complex64> = trace.ground_coefficients().collect();
    let phase = fit_ground_phase(&trace.times, &ground, lambda0)?;
    let p_full = setup.l4_fourth();
    let omega_total = lambda0 - phase.slope;
    let mu_meas = (omega_total - lambda0) / (a * a);
    let span = trace.times[trace.len() - 1] - trace.times[0];
    let scale = a * a * p_full * span;
    let fit_residual = phase.rms / scale;
    let mut fit = ModulationFit {
        k: setup.profile.k(),
        family: setup.profile.family(),
        amplitude: a,
        lambda0,
        omega_total,
        mu_meas,
        p_full,
        p_half: 0.5 * p_full,
        fit_residual,
        residual_ok: fit_residual <= FIT_RESIDUAL_TOL,
        matched: None,
        periods: scale / (2.0 * PI),
    };
    fit.matched = [Prediction::Full, Prediction::Half]
        .into_iter()
        .filter(|&p| fit.deviation(p) <= MATCH_TOL)
        .min_by(|&p, &q| fit.deviation(p).total_cmp(&fit.deviation(q)));
    Ok(fit)
}

/// Remainder bounds for data `aφ₀`, with the measured gap `Γ` in place of
/// the schematic `k^{4/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderBounds {
    /// `2a‖φ₀‖₄`.
    pub l4: f64,
    /// `½a⁴‖φ₀‖₄⁴ / Γ`, bounding `‖q‖₂²`.
    pub l2_sq: f64,
    /// `a²‖φ₀‖₄⁴ / Γ`, bounding `1 - |γ|²`.
    pub depletion: f64,
    /// `√(E((1+λ₀)^s/Γ + Γ^{s-1}))` with `E = ½a⁴‖φ₀‖₄⁴`, bounding `‖q‖_{H^s}`.
    pub hs: f64,
}

pub fn remainder_bounds(setup: &Setup, a: f64, s: SobolevIndex) -> RemainderBounds {
    let norms = setup.ground_norms();
    let l4f = norms.l4.powi(4);
    let gap = setup.gap();
    let e = 0.5 * a.powi(4) * l4f;
    let s = s.value();
    RemainderBounds {
        l4: 2.0 * a * norms.l4,
        l2_sq: e / gap,
        depletion: a * a * l4f / gap,
        hs: (e * ((1.0 + setup.lambda0()).powf(s) / gap + gap.powf(s - 1.0))).sqrt(),
    }
}

/// Largest measured/bound ratios along one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub amplitude: f64,
    pub l4_ratio: f64,
    pub l2_ratio: f64,
    pub depletion_ratio: f64,
    pub hs_ratio: f64,
    pub passed: bool,
}

pub fn audit_bounds(setup: &Setup, a: f64, s: SobolevIndex, trace: &EvolutionTrace) -> BoundAudit {
    let b = remainder_bounds(setup, a, s);
    let max = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0f64, f64::max);
    let l4_ratio = max(&mut trace.q_l4.iter().map(|q| q / b.l4));
    let l2_ratio = max(&mut trace.q_l2.iter().map(|q| q * q / b.l2_sq));
    let depletion_ratio = max(&mut trace.gamma.iter().map(|g| (1.0 - g.norm_sqr()) / b.depletion));
    let hs_ratio = max(&mut trace.q_hs.iter().map(|q| q / b.hs));
    BoundAudit {
        amplitude: a,
        l4_ratio,
        l2_ratio,
        depletion_ratio,
        hs_ratio,
        passed: l4_ratio <= L4_SLACK
            && l2_ratio <= REMAINDER_SLACK
            && depletion_ratio <= REMAINDER_SLACK
            && hs_ratio <= REMAINDER_SLACK,
    }
}

/// `|a₂e^{-ita₂²ω} - a₁e^{-ita₁²ω}| / ε` for the pure-modulation model.
pub fn quotient_oracle(a1: f64, a2: f64, omega: f64, t: f64) -> f64 {
    let z1 = a1 * Complex64::from_polar(1.0, -t * a1 * a1 * omega);
    let z2 = a2 * Complex64::from_polar(1.0, -t * a2 * a2 * omega);
    (z2 - z1).norm() / (a2 - a1).abs()
}

/// Parameters and results of one two-data experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRun {
    pub k: u32,
    pub family: Family,
    pub s: SobolevIndex,
    pub delta: f64,
    pub a1: f64,
    pub eps: f64,
    pub a2: f64,
    pub t_star: f64,
    /// Modulation coefficient used by the oracle (measured along `a₁`).
    pub omega: f64,
    pub modulation: Option<ModulationFit>,
    pub times: Vec<f64>,
    pub quotient: Vec<f64>,
    pub oracle: Vec<f64>,
    /// Triangle-inequality ceiling `(‖v₂‖ + ‖v₁‖)/‖v₂(0) - v₁(0)‖`.
    pub ceiling: Vec<f64>,
    pub audits: Vec<BoundAudit>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub tail: f64,
}

impl LipschitzRun {
    /// `a₁ = k^{-p+δ}`, `ε = k^{-p-2δ}`, `t_star = k^p` with `p = 2/3` (cusp)
    /// or `1/2` (smooth).
    pub fn new(family: Family, k: u32, s: SobolevIndex, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive (got {delta})")));
        }
        let p = family.length_exponent();
        if s.value() >= p {
            return Err(Error::Config(format!(
                "s = {} must stay below {p:.4} for the {family} family",
                s.value()
            )));
        }
        let profile = PotentialProfile::new(family, k)?;
        let kf = profile.k_f64();
        let a1 = kf.powf(-p + delta);
        let eps = kf.powf(-p - 2.0 * delta);
        if eps / a1 < 1e-12 {
            return Err(Error::DegenerateEpsilon(eps / a1));
        }
        Ok(Self::with_amplitudes(family, k, s, delta, a1, eps, profile.instability_time()))
    }

    /// Explicit amplitudes; `eps = 0` gives identical data.
    pub fn with_amplitudes(
        family: Family,
        k: u32,
        s: SobolevIndex,
        delta: f64,
        a1: f64,
        eps: f64,
        t_star: f64,
    ) -> Self {
        Self {
            k,
            family,
            s,
            delta,
            a1,
            eps,
            a2: a1 + eps,
            t_star,
            omega: f64::NAN,
            modulation: None,
            times: Vec::new(),
            quotient: Vec::new(),
            oracle: Vec::new(),
            ceiling: Vec::new(),
            audits: Vec::new(),
            mass_drift: f64::NAN,
            energy_drift: f64::NAN,
            tail: f64::NAN,
        }
    }

    /// The oracle at the run's own times and `omega`.
    pub fn two_mode_oracle(&self, omega: f64) -> Vec<f64> {
        two_mode_quotient_oracle(self, omega)
    }

    pub fn q_tstar(&self) -> f64 {
        self.quotient.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_quotient(&self) -> f64 {
        self.quotient.iter().copied().fold(f64::NAN, f64::max)
    }

    /// Largest relative deviation from the oracle before either reaches
    /// [`ORACLE_CEILING`].
    pub fn oracle_deviation(&self) -> f64 {
        self.quotient
            .iter()
            .zip(&self.oracle)
            .take_while(|(q, o)| **q < ORACLE_CEILING && **o < ORACLE_CEILING)
            .map(|(q, o)| (q - o).abs() / o)
            .fold(0.0, f64::max)
    }

    pub fn below_ceiling(&self) -> bool {
        self.quotient
            .iter()
            .zip(&self.ceiling)
            .all(|(q, c)| *q <= c * (1.0 + 1e-12))
    }

    pub fn bounds_hold(&self) -> bool {
        !self.audits.is_empty() && self.audits.iter().all(|a| a.passed)
    }
}

/// `Q_pred(t)` at the run's recorded times (or at `t_star` if none).
pub fn two_mode_quotient_oracle(run: &LipschitzRun, omega: f64) -> Vec<f64> {
    let times: &[f64] = if run.times.is_empty() {
        std::slice::from_ref(&run.t_star)
    } else {
        &run.times
    };
    times
        .iter()
        .map(|&t| {
            if run.eps == 0.0 {
                1.0
            } else {
                quotient_oracle(run.a1, run.a2, omega, t)
            }
        })
        .collect()
}

/// Evolves both data to `t_star`, measures the modulation along the first,
/// and fills the quotient trace, oracle, ceiling and bound audits.
pub fn lipschitz_experiment(mut run: LipschitzRun, setup: &Setup, settings: &RunSettings) -> Result<LipschitzRun> {
    if setup.profile.family() != run.family || setup.profile.k() != run.k {
        return Err(Error::InvalidArgument(format!(
            "setup is {} k={}, run wants {} k={}",
            setup.profile.family(),
            setup.profile.k(),
            run.family,
            run.k
        )));
    }
    let config = setup.plan(run.a1.max(run.a2), run.t_star, settings)?;
    let monitor = Monitor {
        omega: setup.l4_fourth(),
        s: run.s,
    };
    let depletion = predicted_depletion(setup, run.a2.max(run.a1));
    if depletion > DEPLETION_LIMIT {
        return Err(Error::Depletion(depletion));
    }
    let (_, t1) = evolve(&FieldState::ground_mode(run.a1, config.modes), &setup.basis, &config, &monitor)?;
    let fit = modulation_from_trace(setup, run.a1, &t1)?;
    run.omega = fit.mu_meas;
    run.modulation = Some(fit);
    let (_, t2) = if run.eps == 0.0 {
        (FieldState::new(0.0, Vec::new()), t1.clone())
    } else {
        evolve(&FieldState::ground_mode(run.a2, config.modes), &setup.basis, &config, &monitor)?
    };

    let lambda = &setup.basis.lambda()[..config.modes];
    let s = run.s.value();
    let diff_norm = |c1: &[Complex64], c2: &[Complex64]| {
        let d: Vec<Complex64> = c2.iter().zip(c1).map(|(x, y)| x - y).collect();
        weighted_norm(lambda, &d, s)
    };
    let d0 = diff_norm(&t1.snapshots[0], &t2.snapshots[0]);
    run.times = t1.times.clone();
    if d0 == 0.0 {
        run.quotient = vec![1.0; t1.len()];
        run.ceiling = vec![f64::INFINITY; t1.len()];
    } else {
        run.quotient = t1
            .snapshots
            .iter()
            .zip(&t2.snapshots)
            .map(|(c1, c2)| diff_norm(c1, c2) / d0)
            .collect();
        run.ceiling = t1
            .snapshots
            .iter()
            .zip(&t2.snapshots)
            .map(|(c1, c2)| (weighted_norm(lambda, c1, s) + weighted_norm(lambda, c2, s)) / d0)
            .collect();
    }
    run.oracle = two_mode_quotient_oracle(&run, run.omega);
    run.audits = vec![
        audit_bounds(setup, run.a1, run.s, &t1),
        audit_bounds(setup, run.a2, run.s, &t2),
    ];
    run.mass_drift = t1.max_relative_mass_drift().max(t2.max_relative_mass_drift());
    run.energy_drift = t1.max_relative_energy_drift().max(t2.max_relative_energy_drift());
    let tail = |t: &EvolutionTrace| t.tail_mass[t.len() - 1] / t.mass[0];
    run.tail = tail(&t1).max(tail(&t2));
    Ok(run)
}

/// Per-`k` quantities of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: u32,
    pub n: usize,
    pub lambda0_minus_k2: f64,
    pub gap: f64,
    pub sup_ratio: f64,
    pub l4_fourth: f64,
    pub l6: f64,
    pub mu_meas: Option<f64>,
    pub q_tstar: Option<f64>,
}

/// Fitted log-log slope with a two-standard-error half-width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub quantity: String,
    pub slope: f64,
    pub half_width: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub family: Family,
    pub k_list: Vec<u32>,
    pub entries: Vec<SweepEntry>,
    pub exponents: Vec<Exponent>,
    pub warnings: Vec<String>,
}

impl ScalingSweep {
    pub fn exponent(&self, quantity: &str) -> Option<&Exponent> {
        self.exponents.iter().find(|e| e.quantity == quantity)
    }
}

pub fn loglog_slope(k: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = k.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (fit, stderr) = linear_fit(&lx, &ly);
    (fit.slope, 2.0 * stderr)
}

/// Spectral quantities at every `k`, plus `μ_meas` and `Q(t_star)` when
/// `dynamics` is given.
pub fn scaling_sweep(
    k_list: &[u32],
    family: Family,
    s: SobolevIndex,
    delta: f64,
    dynamics: Option<&RunSettings>,
) -> Result<ScalingSweep> {
    if k_list.len() < 3 || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("k list must be strictly increasing with at least 3 entries".into()));
    }
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for &k in k_list {
        let profile = PotentialProfile::new(family, k)?;
        let modes = dynamics.map_or(2, |d| d.modes);
        let setup = match Setup::new(profile, modes) {
            Ok(s) => s,
            Err(e) => {
                warnings.push(format!("k={k} excluded: {e}"));
                continue;
            }
        };
        let norms = setup.ground_norms();
        let kf = profile.k_f64();
        let mut entry = SweepEntry {
            k,
            n: setup.grid().len(),
            lambda0_minus_k2: setup.lambda0() - kf * kf,
            gap: setup.gap(),
            sup_ratio: norms.linf / norms.l2,
            l4_fourth: norms.l4.powi(4),
            l6: norms.l6,
            mu_meas: None,
            q_tstar: None,
        };
        if let Some(settings) = dynamics {
            let run = LipschitzRun::new(family, k, s, delta)?;
            let run = lipschitz_experiment(run, &setup, settings)?;
            entry.mu_meas = Some(run.omega);
            entry.q_tstar = Some(run.q_tstar());
        }
        entries.push(entry);
    }
    if entries.len() < 2 {
        return Err(Error::Config("fewer than two usable k values in the sweep".into()));
    }
    let ks: Vec<f64> = entries.iter().map(|e| f64::from(e.k)).collect();
    let p = family.length_exponent();
    let (level_exp, sup_exp, l6_exp) = match family {
        Family::LipschitzCusp => (4.0 / 3.0, 1.0 / 3.0, 2.0 / 9.0),
        Family::SmoothWell => (1.0, 1.0 / 4.0, 1.0 / 6.0),
    };
    let mut series: Vec<(&str, Vec<f64>, f64)> = vec![
        ("lambda0_minus_k2", entries.iter().map(|e| e.lambda0_minus_k2).collect(), level_exp),
        ("gap", entries.iter().map(|e| e.gap).collect(), level_exp),
        ("sup_ratio", entries.iter().map(|e| e.sup_ratio).collect(), sup_exp),
        ("l4_fourth", entries.iter().map(|e| e.l4_fourth).collect(), p),
        ("l6", entries.iter().map(|e| e.l6).collect(), l6_exp),
    ];
    if dynamics.is_some() {
        series.push(("mu_meas", entries.iter().filter_map(|e| e.mu_meas).collect(), p));
        series.push(("Q_tstar", entries.iter().filter_map(|e| e.q_tstar).collect(), 2.0 * delta));
    }
    let exponents = series
        .into_iter()
        .map(|(name, y, expected)| {
            let (slope, half_width) = loglog_slope(&ks, &y);
            Exponent {
                quantity: name.to_string(),
                slope,
                half_width,
                expected,
            }
        })
        .collect();
    Ok(ScalingSweep {
        family,
        k_list: k_list.to_vec(),
        entries,
        exponents,
        warnings,
    })
}
