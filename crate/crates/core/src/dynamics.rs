//! Strang splitting for `i ∂_t v = H v + |v|² v` in a truncated eigenbasis.
//!
//! Each step is `N(dt/2) ∘ L(dt) ∘ N(dt/2)`. The linear flow `L` is exact in
//! coefficient space (`c_j ← c_j e^{-iλ_j dt}`); the nonlinear flow `N` is
//! exact pointwise on the grid (`v ← v e^{-i|v|² dt}`) and is followed by
//! projection back onto the retained modes. Whatever the projection drops is
//! accumulated as tail mass, so `mass + tail` is conserved to roundoff.
//!
//! Between recorded samples consecutive half steps of `N` are merged into one
//! full step; the merged sequence is the same Strang composition.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::field::{energy_with_values, lp_norms, weighted_norm, FieldState, SobolevIndex};

/// Per-step phase advance of the top retained mode relative to the ground mode,
/// as a fraction of `π`.
pub const DEFAULT_PHASE_FRACTION: f64 = 0.1;
/// Largest nonlinear phase `dt ‖v₀‖²_∞` per step.
pub const NONLINEAR_PHASE_LIMIT: f64 = 1e-2;
pub const MASS_DRIFT_TOL: f64 = 1e-10;
pub const TAIL_TOL: f64 = 1e-8;
pub const ENERGY_DRIFT_TOL: f64 = 1e-6;
pub const INITIAL_TAIL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Galerkin mode count `M`.
    pub modes: usize,
    /// Monitor cadence in steps.
    pub record_every: usize,
}

impl IntegratorConfig {
    /// Time step from the retained band and the initial amplitude:
    /// `dt = min(f π / (λ_{M-1} - λ₀), 10⁻² / ‖v₀‖²_∞, t_end / records)`,
    /// then shrunk so that `t_end` is a whole number of steps.
    pub fn automatic(
        basis: &EigenBasis,
        modes: usize,
        sup_norm: f64,
        t_end: f64,
        phase_fraction: f64,
        records: usize,
    ) -> Result<Self> {
        if modes == 0 || modes > basis.len() {
            return Err(Error::InvalidArgument(format!(
                "mode count {modes} outside 1..={}",
                basis.len()
            )));
        }
        if !(t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("t_end {t_end} must be positive")));
        }
        let band = basis.lambda()[modes - 1] - basis.lambda()[0];
        let mut dt = f64::INFINITY;
        if band > 0.0 {
            dt = dt.min(phase_fraction * PI / band);
        }
        if sup_norm > 0.0 {
            dt = dt.min(NONLINEAR_PHASE_LIMIT / (sup_norm * sup_norm));
        }
        dt = dt.min(t_end / records.max(1) as f64);
        let steps = (t_end / dt).ceil().max(1.0) as usize;
        let records = records.max(1);
        let record_every = steps.div_ceil(records).max(1);
        Ok(Self {
            dt: t_end / steps as f64,
            t_end,
            modes,
            record_every,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Phase-resolution and nonlinear-phase invariants.
    pub fn check(&self, basis: &EigenBasis, sup_norm: f64) -> Result<()> {
        if self.modes == 0 || self.modes > basis.len() {
            return Err(Error::InvalidArgument(format!(
                "mode count {} outside 1..={}",
                self.modes,
                basis.len()
            )));
        }
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || self.record_every == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad integrator settings dt={} t_end={} record_every={}",
                self.dt, self.t_end, self.record_every
            )));
        }
        let band = basis.lambda()[self.modes - 1] - basis.lambda()[0];
        if self.dt * band >= PI {
            return Err(Error::InvalidArgument(format!(
                "dt·(λ_M-1 - λ0) = {:.3} must stay below π",
                self.dt * band
            )));
        }
        let nonlinear = self.dt * sup_norm * sup_norm;
        if nonlinear > NONLINEAR_PHASE_LIMIT * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "dt·‖v0‖∞² = {nonlinear:.3e} exceeds {NONLINEAR_PHASE_LIMIT:e}"
            )));
        }
        Ok(())
    }
}

/// Caller-supplied parameters for the monitored quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    /// Frequency modulation `ω` used in the demodulated `γ(t)`.
    pub omega: f64,
    /// Sobolev index for `‖q‖_{H^s}`.
    pub s: SobolevIndex,
}

/// Time series recorded every `record_every` steps (and at both ends).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// `γ(t) = a⁻¹ e^{it(λ₀ + a²ω)} h⟨v, φ₀⟩`.
    pub gamma: Vec<Complex64>,
    /// Cumulative mass removed by projection.
    pub tail_mass: Vec<f64>,
    pub q_l2: Vec<f64>,
    pub q_l4: Vec<f64>,
    pub q_hs: Vec<f64>,
    /// Full coefficient vectors at the recorded times.
    pub snapshots: Vec<Vec<Complex64>>,
    pub amplitude: f64,
    pub steps: usize,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_relative_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass
            .iter()
            .map(|m| (m - m0).abs() / m0)
            .fold(0.0, f64::max)
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs())
            .fold(0.0, f64::max)
    }

    /// `h⟨v, φ₀⟩` at each recorded time.
    pub fn ground_coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.snapshots.iter().map(|c| c[0])
    }
}

/// `c_j ← c_j e^{-iλ_j dt}`.
pub fn linear_step(coeffs: &[Complex64], basis: &EigenBasis, dt: f64) -> Vec<Complex64> {
    coeffs
        .iter()
        .zip(basis.lambda())
        .map(|(c, l)| c * Complex64::from_polar(1.0, -l * dt))
        .collect()
}

/// `v ← v e^{-i|v|² dt}` pointwise.
pub fn nonlinear_step(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    values
        .iter()
        .map(|v| v * Complex64::from_polar(1.0, -v.norm_sqr() * dt))
        .collect()
}

/// `(cos θ - 1, sin θ)` without cancellation, with a short Taylor evaluation
/// for the tiny phases the nonlinear sub-step produces.
#[inline]
fn rotation(theta: f64) -> (f64, f64) {
    if theta.abs() < 1e-2 {
        let t2 = theta * theta;
        let cm1 = -t2 * (0.5 - t2 * (1.0 / 24.0 - t2 / 720.0));
        let s = theta * (1.0 - t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0 - t2 / 5040.0)));
        (cm1, s)
    } else {
        let half = (0.5 * theta).sin();
        (-2.0 * half * half, theta.sin())
    }
}

/// Dot products of a real row with the real and imaginary parts, four
/// accumulators in a fixed order.
#[inline]
fn dot2(phi: &[f64], re: &[f64], im: &[f64]) -> (f64, f64) {
    let mut ar = [0.0; 4];
    let mut ai = [0.0; 4];
    let chunks = phi.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let i = 4 * c + l;
            ar[l] += phi[i] * re[i];
            ai[l] += phi[i] * im[i];
        }
    }
    for i in 4 * chunks..phi.len() {
        ar[0] += phi[i] * re[i];
        ai[0] += phi[i] * im[i];
    }
    ((ar[0] + ar[1]) + (ar[2] + ar[3]), (ai[0] + ai[1]) + (ai[2] + ai[3]))
}

/// Reusable split-step propagator for one basis and mode count.
pub struct SplitStep<'a> {
    basis: &'a EigenBasis,
    modes: usize,
    active: Vec<usize>,
    window: Range<usize>,
    /// Active modes restricted to the window, re-orthonormalized there.
    rows: Vec<f64>,
    /// Window-relative support of each row; each contains the previous one.
    spans: Vec<Range<usize>>,
    h: f64,
    re: Vec<f64>,
    im: Vec<f64>,
    /// `e^{-iλ_j τ}` for the active modes at the current sub-step.
    phase: Vec<Complex64>,
    current: Vec<Complex64>,
    tail: f64,
}

impl<'a> SplitStep<'a> {
    pub fn new(basis: &'a EigenBasis, modes: usize) -> Result<Self> {
        Self::with_active(basis, modes, (0..modes).collect())
    }

    /// Propagates only the listed modes; the others keep their coefficients.
    /// Used for invariant sectors such as the even modes.
    pub fn with_active(basis: &'a EigenBasis, modes: usize, active: Vec<usize>) -> Result<Self> {
        if modes == 0 || modes > basis.len() {
            return Err(Error::InvalidArgument(format!(
                "mode count {modes} outside 1..={}",
                basis.len()
            )));
        }
        if active.is_empty() || active.iter().any(|&j| j >= modes) {
            return Err(Error::InvalidArgument("active modes must lie below the mode count".into()));
        }
        let (window, spans) = supports(basis, &active);
        let w = window.len();
        let h = basis.grid().spacing();
        let mut rows = vec![0.0; active.len() * w];
        for (pos, &j) in active.iter().enumerate() {
            let span = spans[pos].clone();
            let shift = window.start;
            rows[pos * w + span.start..pos * w + span.end]
                .copy_from_slice(&basis.mode(j)[span.start + shift..span.end + shift]);
        }
        orthonormalize(&mut rows, &spans, w, h);
        Ok(Self {
            basis,
            modes,
            active,
            window,
            rows,
            spans,
            h,
            re: vec![0.0; w],
            im: vec![0.0; w],
            phase: vec![Complex64::new(1.0, 0.0); modes],
            current: vec![Complex64::new(0.0, 0.0); modes],
            tail: 0.0,
        })
    }

    /// Grid index range outside which every active mode is below `10⁻¹³` of
    /// its peak (the eigenvector noise floor is near `10⁻¹⁵`).
    pub fn window(&self) -> Range<usize> {
        self.window.clone()
    }

    /// Mass removed by projections so far.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    fn row(&self, pos: usize) -> (&[f64], Range<usize>) {
        let w = self.re.len();
        let span = self.spans[pos].clone();
        (&self.rows[pos * w + span.start..pos * w + span.end], span)
    }

    fn synthesize(&mut self, coeffs: &[Complex64]) {
        self.re.iter_mut().for_each(|x| *x = 0.0);
        self.im.iter_mut().for_each(|x| *x = 0.0);
        let w = self.re.len();
        for (pos, &j) in self.active.iter().enumerate() {
            let span = self.spans[pos].clone();
            let phi = &self.rows[pos * w + span.start..pos * w + span.end];
            let (cr, ci) = (coeffs[j].re, coeffs[j].im);
            let (re, im) = (&mut self.re[span.clone()], &mut self.im[span]);
            for ((r, i), p) in re.iter_mut().zip(im.iter_mut()).zip(phi) {
                *r += cr * p;
                *i += ci * p;
            }
        }
    }

    /// Adds the projection of the grid increment held in `re`/`im` to the
    /// coefficients and books what the projection drops as tail.
    fn project_increment(&mut self, frame: &mut [Complex64]) {
        let before = self.h * self.re.iter().zip(&self.im).map(|(r, i)| r * r + i * i).sum::<f64>();
        let mut after = 0.0;
        for (pos, &j) in self.active.iter().enumerate() {
            let (phi, span) = self.row(pos);
            let (r, i) = dot2(phi, &self.re[span.clone()], &self.im[span]);
            let d = Complex64::new(self.h * r, self.h * i);
            frame[j] += self.phase[j].conj() * d;
            after += d.norm_sqr();
        }
        self.tail += before - after;
    }

    /// Replaces the grid values by the increment `v (e^{-i|v|² dt} - 1)`.
    fn rotation_increment(&mut self, dt: f64) {
        for (r, i) in self.re.iter_mut().zip(self.im.iter_mut()) {
            let (cm1, s) = rotation(-(*r * *r + *i * *i) * dt);
            let (a, b) = (*r, *i);
            *r = a * cm1 - b * s;
            *i = a * s + b * cm1;
        }
    }

    /// Nonlinear sub-step at local time `τ` on rotating-frame coefficients
    /// `b_j = c_j e^{iλ_j τ}`: `c ← P(v e^{-i|v|² dt})` with `v = Φc`,
    /// evaluated as `c + P Δv`. Only the small increment passes through
    /// rounded transforms, so neither the round trip nor the linear phases
    /// add a systematic mass drift, and the dropped mass is `‖(I - P) Δv‖²`.
    fn nonlinear(&mut self, frame: &mut [Complex64], tau: f64, dt: f64) {
        let lambda = self.basis.lambda();
        for &j in &self.active {
            self.phase[j] = Complex64::from_polar(1.0, -lambda[j] * tau);
            self.current[j] = frame[j] * self.phase[j];
        }
        let current = std::mem::take(&mut self.current);
        self.synthesize(&current);
        self.current = current;
        self.rotation_increment(dt);
        self.project_increment(frame);
    }

    /// `count` Strang steps of size `dt` (negative `dt` runs backwards).
    /// Consecutive nonlinear halves are merged, and the linear flow is carried
    /// exactly by the rotating frame.
    pub fn advance(&mut self, coeffs: &mut [Complex64], dt: f64, count: usize) {
        if count == 0 {
            return;
        }
        let mut frame = coeffs[..self.modes].to_vec();
        self.nonlinear(&mut frame, 0.0, 0.5 * dt);
        for s in 0..count {
            let tau = (s + 1) as f64 * dt;
            let sub = if s + 1 == count { 0.5 * dt } else { dt };
            self.nonlinear(&mut frame, tau, sub);
        }
        let tau = count as f64 * dt;
        for ((c, b), l) in coeffs.iter_mut().zip(&frame).zip(self.basis.lambda()) {
            *c = b * Complex64::from_polar(1.0, -l * tau);
        }
    }

    /// Grid values of the retained part of `coeffs` over the window.
    fn values(&mut self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.synthesize(coeffs);
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }
}

/// `h Σ x²` with exact products and compensated summation.
fn weighted_square_sum(x: &[f64], h: f64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in x {
        let p = v * v;
        let e = v.mul_add(v, -p);
        let t = sum + p;
        comp += if sum.abs() >= p { (sum - t) + p } else { (p - t) + sum } + e;
        sum = t;
    }
    h * (sum + comp)
}

/// Two Gram–Schmidt sweeps in the `h`-weighted inner product, then
/// normalization to `h Σ φ² = 1` as exactly as rounding allows. Any residual
/// norm defect would show up as a steady mass drift over millions of steps.
fn orthonormalize(rows: &mut [f64], spans: &[Range<usize>], w: usize, h: f64) {
    for (r, span) in spans.iter().enumerate() {
        let (done, rest) = rows.split_at_mut(r * w);
        let row = &mut rest[..w];
        for _ in 0..2 {
            for (q, qspan) in done.chunks_exact(w).zip(spans) {
                let q = &q[qspan.clone()];
                let part = &mut row[qspan.clone()];
                let c = h * q.iter().zip(part.iter()).map(|(a, b)| a * b).sum::<f64>();
                part.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let row = &mut row[span.clone()];
        for _ in 0..3 {
            let scale = 1.0 / weighted_square_sum(row, h).sqrt();
            row.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

/// Overall window plus nested per-row supports (window-relative) outside
/// which each active mode is below `10⁻¹³` of its peak.
fn supports(basis: &EigenBasis, active: &[usize]) -> (Range<usize>, Vec<Range<usize>>) {
    let n = basis.grid().len();
    let mut own = Vec::with_capacity(active.len());
    let (mut lo, mut hi) = (n, 0);
    for &j in active {
        let phi = basis.mode(j);
        let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = 1e-13 * peak;
        let first = phi.iter().position(|v| v.abs() > thr).unwrap_or(0);
        let last = phi.iter().rposition(|v| v.abs() > thr).map_or(n, |i| i + 1);
        lo = lo.min(first);
        hi = hi.max(last);
        own.push(lo..hi);
    }
    let window = lo..hi;
    let spans = own
        .into_iter()
        .map(|r| r.start - window.start..r.end - window.start)
        .collect();
    (window, spans)
}

/// `Some(true)` for an even mode, `Some(false)` for an odd one, `None` when
/// the mode has no clean parity (for instance inside a degenerate pair).
pub fn mode_parity(basis: &EigenBasis, j: usize) -> Option<bool> {
    let grid = basis.grid();
    let phi = basis.mode(j);
    let peak = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for (i, v) in phi.iter().enumerate() {
        let w = phi[grid.mirror(i)];
        even = even.max((v - w).abs());
        odd = odd.max((v + w).abs());
    }
    let tol = 1e-8 * peak;
    if even <= tol {
        Some(true)
    } else if odd <= tol {
        Some(false)
    } else {
        None
    }
}

/// Modes that the evolution of `coeffs` can reach: the even modes when the
/// data are even and every retained mode has a definite parity, otherwise
/// all of them.
fn reachable(basis: &EigenBasis, coeffs: &[Complex64]) -> Vec<usize> {
    let m = coeffs.len();
    let parity: Vec<Option<bool>> = (0..m).map(|j| mode_parity(basis, j)).collect();
    let clean = parity.iter().all(Option::is_some);
    let even_data = coeffs
        .iter()
        .zip(&parity)
        .all(|(c, p)| *c == Complex64::new(0.0, 0.0) || *p == Some(true));
    if clean && even_data {
        (0..m).filter(|&j| parity[j] == Some(true)).collect()
    } else {
        (0..m).collect()
    }
}

fn record(
    trace: &mut EvolutionTrace,
    stepper: &mut SplitStep<'_>,
    coeffs: &[Complex64],
    t: f64,
    monitor: &Monitor,
) {
    let basis = stepper.basis;
    let m = stepper.modes;
    let lambda = &basis.lambda()[..m];
    let h = stepper.h;
    let values = stepper.values(coeffs);
    let a = trace.amplitude;
    trace.times.push(t);
    trace.mass.push(crate::field::mass(&coeffs[..m]));
    trace.energy.push(energy_with_values(lambda, &coeffs[..m], &values, h));
    let demod = Complex64::from_polar(1.0, t * (lambda[0] + a * a * monitor.omega));
    trace.gamma.push(demod * coeffs[0] / a);
    trace.tail_mass.push(stepper.tail);
    let mut q = coeffs[..m].to_vec();
    q[0] = Complex64::new(0.0, 0.0);
    trace.q_l2.push(crate::field::mass(&q).sqrt());
    let q_values = stepper.values(&q);
    trace.q_l4.push(lp_norms(&q_values, h).l4);
    trace.q_hs.push(weighted_norm(lambda, &q, monitor.s.value()));
    trace.snapshots.push(coeffs[..m].to_vec());
}

fn audit(trace: &EvolutionTrace) -> Result<()> {
    let i = trace.len() - 1;
    let (m0, t) = (trace.mass[0], trace.times[i]);
    let m = trace.mass[i];
    let tail = trace.tail_mass[i];
    if !m.is_finite() || !trace.energy[i].is_finite() {
        return Err(Error::Invariant {
            time: t,
            what: "non-finite mass or energy".into(),
        });
    }
    let defect = (m + tail - m0).abs() / m0;
    if defect > MASS_DRIFT_TOL {
        return Err(Error::Invariant {
            time: t,
            what: format!("mass + tail drifted by {defect:.3e} (relative)"),
        });
    }
    if tail > TAIL_TOL * m0 {
        return Err(Error::Invariant {
            time: t,
            what: format!("tail mass {:.3e} of the initial mass exceeds {TAIL_TOL:e}", tail / m0),
        });
    }
    Ok(())
}

/// Evolves `initial` to `config.t_end`, auditing the invariants at every
/// record. Mass is conserved up to the cumulative projection tail, which
/// must stay below `10⁻⁸` of the initial mass.
pub fn evolve(
    initial: &FieldState,
    basis: &EigenBasis,
    config: &IntegratorConfig,
    monitor: &Monitor,
) -> Result<(FieldState, EvolutionTrace)> {
    let m = config.modes;
    if initial.coeffs.len() > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} coefficients, basis only {}",
            initial.coeffs.len(),
            basis.len()
        )));
    }
    let mut coeffs = initial.coeffs.clone();
    coeffs.resize(basis.len(), Complex64::new(0.0, 0.0));
    let outside: f64 = coeffs[m..].iter().map(|c| c.norm_sqr()).sum();
    let mass0: f64 = crate::field::mass(&coeffs);
    if mass0 <= 0.0 {
        return Err(Error::InvalidArgument("initial state has zero mass".into()));
    }
    if outside > INITIAL_TAIL_TOL * mass0 {
        return Err(Error::InvalidArgument(format!(
            "initial tail mass {:.3e} outside the retained modes",
            outside / mass0
        )));
    }
    coeffs.truncate(m);

    let mut stepper = SplitStep::with_active(basis, m, reachable(basis, &coeffs))?;
    let sup = stepper
        .values(&coeffs)
        .iter()
        .fold(0.0f64, |s, v| s.max(v.norm()));
    config.check(basis, sup)?;

    let amplitude = if coeffs[0].norm() > 0.0 {
        coeffs[0].norm()
    } else {
        mass0.sqrt()
    };
    let mut trace = EvolutionTrace {
        amplitude,
        ..Default::default()
    };
    let steps = config.steps();
    trace.steps = steps;
    let mut t = initial.time;
    record(&mut trace, &mut stepper, &coeffs, t, monitor);
    let mut done = 0;
    while done < steps {
        let chunk = config.record_every.min(steps - done);
        stepper.advance(&mut coeffs, config.dt, chunk);
        done += chunk;
        t = initial.time + done as f64 * config.dt;
        record(&mut trace, &mut stepper, &coeffs, t, monitor);
        audit(&trace)?;
    }
    coeffs.resize(basis.len(), Complex64::new(0.0, 0.0));
    Ok((FieldState::new(t, coeffs), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{assemble, lowest_eigenpairs, DiscreteOperator};
    use crate::field::{lp_norms, mass, project, synthesize};
    use crate::metric::{Grid, PotentialProfile};
    use approx::assert_abs_diff_eq;

    fn small_basis(m: usize) -> EigenBasis {
        let p = PotentialProfile::cusp(8).unwrap();
        let grid = Grid::resolving(&p).unwrap();
        lowest_eigenpairs(&assemble(&p, &grid).unwrap(), m).unwrap()
    }

    fn monitor() -> Monitor {
        Monitor {
            omega: 0.0,
            s: SobolevIndex::new(0.5).unwrap(),
        }
    }

    #[test]
    fn linear_step_examples() {
        let b = small_basis(4);
        let c = vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.0),
            Complex64::new(0.0, 0.05),
            Complex64::new(0.01, 0.01),
        ];
        assert_eq!(linear_step(&c, &b, 0.0), c);
        let out = linear_step(&c, &b, 0.37);
        for (x, y) in c.iter().zip(&out) {
            assert_abs_diff_eq!(x.norm(), y.norm(), epsilon = 1e-16);
        }
        assert_abs_diff_eq!(mass(&c), mass(&out), epsilon = 1e-16);
        let single = vec![Complex64::new(1.0, 0.0)];
        let period = 2.0 * PI / b.lambda()[0];
        let back = linear_step(&single, &b, period);
        assert!((back[0] - single[0]).norm() < 1e-12);
    }

    #[test]
    fn nonlinear_step_examples() {
        let ones = vec![Complex64::new(1.0, 0.0); 8];
        let out = nonlinear_step(&ones, PI);
        for v in &out {
            assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        }
        assert_eq!(nonlinear_step(&ones, 0.0), ones);
        let v: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.1).cos()))
            .collect();
        let two = nonlinear_step(&nonlinear_step(&v, 0.21), 0.34);
        let one = nonlinear_step(&v, 0.55);
        for (a, b) in two.iter().zip(&one) {
            assert!((a - b).norm() < 1e-15);
        }
        let n0 = lp_norms(&v, 0.1);
        let n1 = lp_norms(&one, 0.1);
        assert_abs_diff_eq!(n0.l4, n1.l4, epsilon = 1e-15);
        assert_abs_diff_eq!(n0.linf, n1.linf, epsilon = 1e-15);
    }

    #[test]
    fn taylor_rotation_matches_libm() {
        for i in -100..=100 {
            let th = i as f64 * 1e-4;
            let (cm1, s) = rotation(th);
            assert_abs_diff_eq!(cm1 + 1.0, th.cos(), epsilon = 1e-16);
            assert_abs_diff_eq!(s, th.sin(), epsilon = 1e-17);
        }
    }

    #[test]
    fn stepper_matches_reference_sub_flows() {
        // One Strang step through SplitStep against the plain sub-flow functions.
        let b = small_basis(12);
        let c0: Vec<Complex64> = (0..12)
            .map(|j| Complex64::new(0.2 / (1.0 + j as f64), 0.01 * j as f64))
            .collect();
        let dt = 1e-3;
        let half = |c: &[Complex64]| project(&b, &nonlinear_step(&synthesize(&b, c), 0.5 * dt)).unwrap();
        let reference = half(&linear_step(&half(&c0), &b, dt));
        let mut c = c0.clone();
        let mut st = SplitStep::new(&b, 12).unwrap();
        st.advance(&mut c, dt, 1);
        for (x, y) in c.iter().zip(&reference) {
            assert!((x - y).norm() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn config_rules() {
        let b = small_basis(16);
        let cfg = IntegratorConfig::automatic(&b, 16, 0.3, 1.0, DEFAULT_PHASE_FRACTION, 10).unwrap();
        let band = b.lambda()[15] - b.lambda()[0];
        assert!(cfg.dt * band <= 0.1 * PI * (1.0 + 1e-12));
        assert_abs_diff_eq!(cfg.steps() as f64 * cfg.dt, 1.0, epsilon = 1e-14);
        cfg.check(&b, 0.3).unwrap();
        let bad = IntegratorConfig { dt: 1.1 * PI / band, ..cfg.clone() };
        assert!(bad.check(&b, 0.3).is_err());
        let bad = IntegratorConfig { dt: 0.02, modes: 1, ..cfg };
        assert!(bad.check(&b, 1.0).is_err());
    }

    #[test]
    fn linear_limit_keeps_single_mode() {
        let b = small_basis(8);
        let a = 1e-8;
        let state = FieldState::ground_mode(a, 8);
        let cfg = IntegratorConfig::automatic(&b, 8, a, 0.5, DEFAULT_PHASE_FRACTION, 20).unwrap();
        let (end, trace) = evolve(&state, &b, &cfg, &monitor()).unwrap();
        for g in &trace.gamma {
            assert_abs_diff_eq!(g.norm(), 1.0, epsilon = 1e-12);
        }
        let expected = a * Complex64::from_polar(1.0, -b.lambda()[0] * end.time);
        assert!((end.coeffs[0] - expected).norm() < 1e-12 * a);
    }

    #[test]
    fn evolve_rejects_bad_initial_data() {
        let b = small_basis(8);
        let cfg = IntegratorConfig::automatic(&b, 4, 0.1, 0.1, DEFAULT_PHASE_FRACTION, 2).unwrap();
        let mut state = FieldState::ground_mode(0.1, 8);
        state.coeffs[6] = Complex64::new(0.01, 0.0);
        assert!(evolve(&state, &b, &cfg, &monitor()).is_err());
        let zero = FieldState::new(0.0, vec![Complex64::new(0.0, 0.0); 4]);
        assert!(evolve(&zero, &b, &cfg, &monitor()).is_err());
    }

    #[test]
    fn window_covers_the_modes() {
        let p = PotentialProfile::cusp(64).unwrap();
        let grid = Grid::resolving(&p).unwrap();
        let b = lowest_eigenpairs(&assemble(&p, &grid).unwrap(), 16).unwrap();
        let st = SplitStep::new(&b, 16).unwrap();
        let w = st.window();
        assert!(w.start > 0 && w.end < grid.len());
        assert!(w.contains(&grid.origin()));
        // Constant-potential modes are delocalized: the window is everything.
        let flat = DiscreteOperator::from_potential(Grid::new(64).unwrap(), &vec![0.0; 64]).unwrap();
        let fb = lowest_eigenpairs(&flat, 4).unwrap();
        assert_eq!(SplitStep::new(&fb, 4).unwrap().window(), 0..64);
    }
}
