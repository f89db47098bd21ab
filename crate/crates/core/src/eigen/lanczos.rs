//! Shift-and-invert Lanczos with full reorthogonalization.
//!
//! The lowest eigenvalues of `H` are the largest of `(H - σ)⁻¹` for a shift
//! `σ` below the spectrum, where they are well separated and converge in a
//! few dozen steps. Every new Lanczos vector is orthogonalized twice against
//! the whole basis and against any locked vectors, so the tridiagonal
//! projection stays faithful and deflated restarts are possible.

use faer::{Mat, Side};

use super::cyclic::CyclicSolver;
use crate::error::{Error, Result};

pub(crate) struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

pub(crate) struct LanczosOutcome {
    pub pairs: Vec<RitzPair>,
    pub steps: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two rounds of classical Gram–Schmidt against `basis`.
fn orthogonalize<'a>(w: &mut [f64], basis: impl Iterator<Item = &'a [f64]> + Clone) {
    for _ in 0..2 {
        for q in basis.clone() {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Deterministic start vector with components on every eigenvector: a
/// constant plus a low-discrepancy sequence that breaks the reflection
/// symmetry of the grid.
pub(crate) fn start_vector(n: usize, irrational: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 * irrational).fract() - 0.5))
        .collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub(crate) struct ShiftInvert<'a> {
    pub solver: &'a CyclicSolver,
    pub sigma: f64,
    /// `H x` for residual checks.
    pub apply: &'a dyn Fn(&[f64], &mut [f64]),
}

/// Computes the `want` lowest eigenpairs of `H` restricted to the orthogonal
/// complement of `locked` (unit vectors). Returned vectors have unit
/// Euclidean norm and eigenvalues ascend.
pub(crate) fn lowest(
    op: &ShiftInvert<'_>,
    start: &[f64],
    locked: &[Vec<f64>],
    want: usize,
    residual_tol: impl Fn(f64) -> f64,
    max_steps: usize,
) -> Result<LanczosOutcome> {
    let n = start.len();
    let room = n.saturating_sub(locked.len());
    let max_steps = max_steps.min(room);
    let mut q0 = start.to_vec();
    orthogonalize(&mut q0, locked.iter().map(|v| v.as_slice()));
    let s = norm(&q0);
    q0.iter_mut().for_each(|x| *x /= s);

    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut hv = vec![0.0; n];
    let mut worst = f64::INFINITY;
    let mut converged = 0;

    for j in 0..max_steps {
        op.solver.solve(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(
            &mut w,
            basis
                .iter()
                .map(|v| v.as_slice())
                .chain(locked.iter().map(|v| v.as_slice())),
        );
        let b = norm(&w);
        let steps = j + 1;
        let exhausted = b <= 1e-13 * a.abs().max(1e-300) || steps == max_steps;

        if steps >= want && (steps % 8 == 0 || exhausted) {
            let t = Mat::<f64>::from_fn(steps, steps, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let evd = t.selfadjoint_eigendecomposition(Side::Lower);
            let theta = evd.s().column_vector();
            let s_mat = evd.u();
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&x, &y| theta.read(y).total_cmp(&theta.read(x)));
            let top = &order[..want];
            let estimates_ok = top.iter().all(|&i| {
                (b * s_mat.read(steps - 1, i)).abs() <= 1e-12 * theta.read(i).abs()
            });
            if estimates_ok || exhausted {
                let mut pairs = Vec::with_capacity(want);
                worst = 0.0;
                converged = 0;
                for &i in top {
                    let mut y = vec![0.0; n];
                    for (r, q) in basis.iter().enumerate() {
                        axpy(s_mat.read(r, i), q, &mut y);
                    }
                    let ny = norm(&y);
                    y.iter_mut().for_each(|x| *x /= ny);
                    let value = op.sigma + 1.0 / theta.read(i);
                    (op.apply)(&y, &mut hv);
                    let res = hv
                        .iter()
                        .zip(&y)
                        .map(|(h, v)| (h - value * v).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if res <= residual_tol(value) {
                        converged += 1;
                    }
                    worst = worst.max(res / residual_tol(value));
                    pairs.push(RitzPair { value, vector: y });
                }
                if converged == want {
                    pairs.sort_by(|p, q| p.value.total_cmp(&q.value));
                    return Ok(LanczosOutcome { pairs, steps });
                }
            }
        }
        if exhausted {
            break;
        }
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(std::mem::replace(&mut w, vec![0.0; n]));
        beta.push(b);
    }
    Err(Error::NonConvergence {
        iterations: basis.len(),
        converged,
        wanted: want,
        worst_residual: worst,
    })
}
