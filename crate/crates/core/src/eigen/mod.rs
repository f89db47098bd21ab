//! Lowest eigenpairs of the periodic Schrödinger operator
//! `H = -d²/dx² + V(x)` discretized by second-order central differences.

mod cyclic;
mod lanczos;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::lp_norm;
use crate::metric::{potential_values, Grid, PotentialProfile};
use cyclic::CyclicSolver;

/// Largest grid handled by the dense path under [`SolverMethod::Auto`].
pub const DENSE_LIMIT: usize = 2048;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-8;

/// `-d²/dx² + V` on a periodic grid: diagonal `2/h² + V_i`, every
/// off-diagonal neighbour (including the wraparound pair `0, n-1`) `-1/h²`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Grid,
    diag: Vec<f64>,
    offdiag: f64,
    k: Option<u32>,
}

impl DiscreteOperator {
    /// Operator for an arbitrary sampled potential. No resolution check.
    pub fn from_potential(grid: Grid, potential: &[f64]) -> Result<Self> {
        grid.check_same(&Grid::new(potential.len())?)?;
        let h = grid.spacing();
        let diag = potential.iter().map(|v| 2.0 / (h * h) + v).collect();
        Ok(Self {
            grid,
            diag,
            offdiag: -1.0 / (h * h),
            k: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> f64 {
        self.offdiag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)` of the matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        if i == j {
            self.diag[i]
        } else if (i + 1) % n == j || (j + 1) % n == i {
            self.offdiag
        } else {
            0.0
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let left = x[(i + n - 1) % n];
            let right = x[(i + 1) % n];
            out[i] = self.diag[i] * x[i] + self.offdiag * (left + right);
        }
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        self.diag
            .iter()
            .map(|d| d - 2.0 * self.offdiag.abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_i V_i`; the discrete Laplacian is positive semidefinite so the
    /// spectrum lies above it.
    pub fn potential_min(&self) -> f64 {
        self.diag
            .iter()
            .map(|d| d + 2.0 * self.offdiag)
            .fold(f64::INFINITY, f64::min)
    }

    fn dense(&self) -> Mat<f64> {
        Mat::from_fn(self.len(), self.len(), |i, j| self.entry(i, j))
    }
}

/// Builds `H` for `profile`, refusing grids coarser than a sixteenth of the
/// ground-state length scale.
pub fn assemble(profile: &PotentialProfile, grid: &Grid) -> Result<DiscreteOperator> {
    let limit = profile.max_spacing();
    if grid.spacing() > limit {
        return Err(Error::UnderResolved {
            h: grid.spacing(),
            limit,
        });
    }
    let v = potential_values(profile, grid);
    let mut op = DiscreteOperator::from_potential(grid.clone(), &v)?;
    op.k = Some(profile.k());
    Ok(op)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    /// Dense for `n ≤ 2048`, Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// The `M` lowest eigenpairs, eigenvectors orthonormal under the grid weight `h`.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    grid: Grid,
    lambda: Vec<f64>,
    /// Row-major `M × n`.
    phi: Vec<f64>,
    residuals: Vec<f64>,
    method: SolverMethod,
    lanczos_steps: usize,
}

impl EigenBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        let n = self.grid.len();
        &self.phi[j * n..(j + 1) * n]
    }

    pub fn modes(&self) -> impl Iterator<Item = &[f64]> {
        self.phi.chunks_exact(self.grid.len())
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Method actually used (never `Auto`).
    pub fn method(&self) -> SolverMethod {
        self.method
    }

    pub fn lanczos_steps(&self) -> usize {
        self.lanczos_steps
    }

    /// Spectral gap `λ₁ - λ₀`.
    pub fn gap(&self) -> Option<f64> {
        (self.len() >= 2).then(|| self.lambda[1] - self.lambda[0])
    }

    /// Keeps the lowest `m` pairs.
    pub fn truncated(&self, m: usize) -> EigenBasis {
        let m = m.min(self.len());
        EigenBasis {
            grid: self.grid.clone(),
            lambda: self.lambda[..m].to_vec(),
            phi: self.phi[..m * self.grid.len()].to_vec(),
            residuals: self.residuals[..m].to_vec(),
            method: self.method,
            lanczos_steps: self.lanczos_steps,
        }
    }

    /// `max |h⟨φ_i, φ_j⟩ - δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let h = self.grid.spacing();
        let mut worst: f64 = 0.0;
        for (i, a) in self.modes().enumerate() {
            for (j, b) in self.modes().enumerate().skip(i) {
                let g = h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Checks the basis invariants: orthonormality, residuals, and a
    /// nodeless positive ground state.
    pub fn check_invariants(&self) -> Result<()> {
        let defect = self.orthonormality_defect();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "orthonormality defect {defect:.3e}"
            )));
        }
        for (j, (&r, &l)) in self.residuals.iter().zip(&self.lambda).enumerate() {
            if r > RESIDUAL_TOL * (1.0 + l.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "residual of pair {j} is {r:.3e}"
                )));
            }
        }
        if !self.is_empty() {
            let phi0 = self.mode(0);
            let peak = phi0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // Entries below roundoff of the peak carry no sign information.
            if phi0.iter().any(|&v| v < -1e-12 * peak) || phi0[self.grid.origin()] <= 0.0 {
                return Err(Error::InvalidArgument("ground state changes sign".into()));
            }
        }
        Ok(())
    }
}

/// Sign convention: scanning outward from `x = 0` to the right, the first
/// entry above `10⁻⁶` of the peak is positive. For the ground state this is
/// `φ₀(0) > 0`.
fn fix_sign(v: &mut [f64], origin: usize) {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = v.len();
    if let Some(i) = (0..n)
        .map(|s| (origin + s) % n)
        .find(|&i| v[i].abs() > 1e-6 * peak)
    {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn residual(op: &DiscreteOperator, lambda: f64, v: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply(v, scratch);
    let h = op.grid.spacing();
    (h * scratch
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>())
    .sqrt()
}

fn finish(
    op: &DiscreteOperator,
    mut pairs: Vec<(f64, Vec<f64>)>,
    method: SolverMethod,
    steps: usize,
) -> EigenBasis {
    let grid = op.grid.clone();
    let scale = 1.0 / grid.spacing().sqrt();
    let n = grid.len();
    let mut lambda = Vec::with_capacity(pairs.len());
    let mut phi = Vec::with_capacity(pairs.len() * n);
    let mut residuals = Vec::with_capacity(pairs.len());
    let mut scratch = vec![0.0; n];
    for (value, vector) in pairs.iter_mut() {
        vector.iter_mut().for_each(|x| *x *= scale);
        fix_sign(vector, grid.origin());
        residuals.push(residual(op, *value, vector, &mut scratch));
        lambda.push(*value);
        phi.extend_from_slice(vector);
    }
    EigenBasis {
        grid,
        lambda,
        phi,
        residuals,
        method,
        lanczos_steps: steps,
    }
}

fn dense_pairs(op: &DiscreteOperator, m: usize) -> Vec<(f64, Vec<f64>)> {
    let evd = op.dense().selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut order: Vec<usize> = (0..op.len()).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    order
        .into_iter()
        .take(m)
        .map(|j| {
            let v: Vec<f64> = (0..op.len()).map(|i| u.read(i, j)).collect();
            (s.read(j), v)
        })
        .collect()
}

const START_A: f64 = 0.618_033_988_749_894_8;
const START_B: f64 = 0.414_213_562_373_095_1;

fn krylov_pairs(op: &DiscreteOperator, m: usize) -> Result<(Vec<(f64, Vec<f64>)>, usize)> {
    let n = op.len();
    let sigma = op.potential_min() - 1.0;
    let shifted: Vec<f64> = op.diag.iter().map(|d| d - sigma).collect();
    let solver = CyclicSolver::new(&shifted, op.offdiag);
    let apply = |x: &[f64], out: &mut [f64]| op.apply(x, out);
    let si = lanczos::ShiftInvert {
        solver: &solver,
        sigma,
        apply: &apply,
    };
    // Euclidean residual tolerance for unit vectors equals the weighted one
    // for h-normalized vectors; keep a margin below the basis invariant.
    let tol = |l: f64| 1e-2 * RESIDUAL_TOL * (1.0 + l.abs());
    let max_steps = (4 * m + 200).min(n);
    let first = lanczos::lowest(&si, &lanczos::start_vector(n, START_A), &[], m, tol, max_steps)?;
    let mut steps = first.steps;
    let mut pairs: Vec<(f64, Vec<f64>)> =
        first.pairs.into_iter().map(|p| (p.value, p.vector)).collect();

    // Deflated pass: anything below the current top eigenvalue that the
    // first Krylov space missed (e.g. an exact multiplicity) shows up here.
    for _ in 0..m {
        if pairs.len() >= n {
            break;
        }
        let locked: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let extra = lanczos::lowest(
            &si,
            &lanczos::start_vector(n, START_B),
            &locked,
            1,
            tol,
            max_steps,
        )?;
        steps += extra.steps;
        let candidate = extra.pairs.into_iter().next().expect("one pair requested");
        let top = pairs.last().map(|p| p.0).unwrap_or(f64::INFINITY);
        if candidate.value < top - 1e-10 * (1.0 + top.abs()) {
            pairs.push((candidate.value, candidate.vector));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.truncate(m);
        } else {
            break;
        }
    }
    Ok((pairs, steps))
}

/// The `m` lowest eigenpairs of `op`.
pub fn lowest_eigenpairs(op: &DiscreteOperator, m: usize) -> Result<EigenBasis> {
    lowest_eigenpairs_with(op, m, SolverMethod::Auto)
}

pub fn lowest_eigenpairs_with(
    op: &DiscreteOperator,
    m: usize,
    method: SolverMethod,
) -> Result<EigenBasis> {
    let n = op.len();
    if m == 0 || m > n / 4 {
        return Err(Error::InvalidArgument(format!(
            "requested {m} eigenpairs, must lie in 1..={}",
            n / 4
        )));
    }
    let method = match method {
        SolverMethod::Auto if n <= DENSE_LIMIT => SolverMethod::Dense,
        SolverMethod::Auto => SolverMethod::Krylov,
        other => other,
    };
    let basis = match method {
        SolverMethod::Dense => finish(op, dense_pairs(op, m), method, 0),
        _ => {
            let (pairs, steps) = krylov_pairs(op, m)?;
            finish(op, pairs, method, steps)
        }
    };
    Ok(basis)
}

/// Comparison of the computed ground state with an oracle profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `1 - |h⟨φ₀, ψ₀⟩|`.
    pub overlap_deficit: f64,
    /// `‖φ₀‖_∞ / ‖φ₀‖₂`.
    pub sup_ratio: f64,
    /// `‖φ₀‖₄⁴`.
    pub l4_fourth: f64,
    /// `‖φ₀‖₄⁴ / k^{2/3}`.
    pub l4_constant: f64,
    /// `max(10⁻⁶, h² k²)`.
    pub deficit_bound: f64,
    pub passed: bool,
}

pub fn validate_ground_state(basis: &EigenBasis, oracle: &[f64], k: u32) -> Result<ValidationReport> {
    let grid = basis.grid();
    grid.check_same(&Grid::new(oracle.len())?)?;
    let h = grid.spacing();
    let phi0 = basis.mode(0);
    let overlap = h * phi0.iter().zip(oracle).map(|(a, b)| a * b).sum::<f64>();
    let l2 = lp_norm(phi0, h, 2.0);
    let sup = phi0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l4_fourth = lp_norm(phi0, h, 4.0).powi(4);
    let kf = f64::from(k);
    let overlap_deficit = 1.0 - overlap.abs();
    let deficit_bound = (h * h * kf * kf).max(1e-6);
    Ok(ValidationReport {
        overlap_deficit,
        sup_ratio: sup / l2,
        l4_fourth,
        l4_constant: l4_fourth / kf.powf(2.0 / 3.0),
        deficit_bound,
        passed: overlap_deficit <= deficit_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn free_laplacian_modes() {
        let n = 64;
        let grid = Grid::new(n).unwrap();
        let op = DiscreteOperator::from_potential(grid.clone(), &vec![0.0; n]).unwrap();
        let basis = lowest_eigenpairs(&op, 9).unwrap();
        let h = grid.spacing();
        let mut expected: Vec<f64> = (0..n)
            .map(|j| (2.0 - 2.0 * (2.0 * PI * j as f64 / n as f64).cos()) / (h * h))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (l, e) in basis.lambda().iter().zip(&expected) {
            assert_abs_diff_eq!(l, e, epsilon = 1e-10);
        }
        // continuum limit {0, 1, 1, 4, 4, ...}
        assert_abs_diff_eq!(basis.lambda()[1], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(basis.lambda()[4], 4.0, epsilon = 2e-2);
    }

    #[test]
    fn constant_shift() {
        let n = 128;
        let grid = Grid::new(n).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| x.abs() * 9.0).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 17.25).collect();
        let a = lowest_eigenpairs(&DiscreteOperator::from_potential(grid.clone(), &v).unwrap(), 8).unwrap();
        let b = lowest_eigenpairs(&DiscreteOperator::from_potential(grid, &shifted).unwrap(), 8).unwrap();
        for (x, y) in a.lambda().iter().zip(b.lambda()) {
            assert_abs_diff_eq!(y - x, 17.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn assembled_operator_is_symmetric() {
        let p = PotentialProfile::cusp(100).unwrap();
        let grid = Grid::resolving(&p).unwrap();
        let op = assemble(&p, &grid).unwrap();
        let n = op.len();
        for i in 0..n {
            for j in [(i + 1) % n, (i + n - 1) % n, (i + 7) % n] {
                assert_eq!(op.entry(i, j), op.entry(j, i));
            }
        }
        assert!(op.gershgorin_lower().is_finite());
        assert!(op.gershgorin_lower() <= op.potential_min());
    }

    #[test]
    fn under_resolved_grid_is_an_error() {
        let p = PotentialProfile::cusp(100).unwrap();
        assert!(matches!(
            assemble(&p, &Grid::new(512).unwrap()),
            Err(Error::UnderResolved { .. })
        ));
        let p = PotentialProfile::smooth(100).unwrap();
        assert!(matches!(
            assemble(&p, &Grid::new(256).unwrap()),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn mode_count_bounds() {
        let grid = Grid::new(64).unwrap();
        let op = DiscreteOperator::from_potential(grid, &vec![1.0; 64]).unwrap();
        assert!(lowest_eigenpairs(&op, 0).is_err());
        assert!(lowest_eigenpairs(&op, 17).is_err());
        assert!(lowest_eigenpairs(&op, 16).is_ok());
    }

    #[test]
    fn dense_and_krylov_agree() {
        let p = PotentialProfile::cusp(16).unwrap();
        let grid = Grid::new(1024).unwrap();
        let op = assemble(&p, &grid).unwrap();
        let d = lowest_eigenpairs_with(&op, 24, SolverMethod::Dense).unwrap();
        let k = lowest_eigenpairs_with(&op, 24, SolverMethod::Krylov).unwrap();
        assert_eq!(d.method(), SolverMethod::Dense);
        assert_eq!(k.method(), SolverMethod::Krylov);
        d.check_invariants().unwrap();
        k.check_invariants().unwrap();
        for j in 0..24 {
            assert_abs_diff_eq!(d.lambda()[j], k.lambda()[j], epsilon = 1e-8);
            let diff = d
                .mode(j)
                .iter()
                .zip(k.mode(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                * grid.spacing();
            assert!(diff.sqrt() < 1e-8, "mode {j}: {}", diff.sqrt());
        }
    }

    #[test]
    fn krylov_recovers_degenerate_pairs() {
        let n = 96;
        let grid = Grid::new(n).unwrap();
        let op = DiscreteOperator::from_potential(grid, &vec![0.0; n]).unwrap();
        let d = lowest_eigenpairs_with(&op, 7, SolverMethod::Dense).unwrap();
        let k = lowest_eigenpairs_with(&op, 7, SolverMethod::Krylov).unwrap();
        for (a, b) in d.lambda().iter().zip(k.lambda()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert!(k.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn monotone_under_pointwise_increase() {
        let grid = Grid::new(256).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| 50.0 * (1.0 - x.cos())).collect();
        let bump: Vec<f64> = grid
            .points()
            .iter()
            .zip(&v)
            .map(|(x, v)| v + 1.0 + (3.0 * x).sin().powi(2))
            .collect();
        let a = lowest_eigenpairs(&DiscreteOperator::from_potential(grid.clone(), &v).unwrap(), 12).unwrap();
        let b = lowest_eigenpairs(&DiscreteOperator::from_potential(grid, &bump).unwrap(), 12).unwrap();
        for (x, y) in a.lambda().iter().zip(b.lambda()) {
            assert!(y >= x);
        }
    }
}
