//! The reduced field `v(x, t)` in grid and eigen-coefficient form, and the
//! norms used to track it.
//!
//! The common angular factor `e^{iky}` never appears: every norm is taken in
//! the one-dimensional reduced representation. Sobolev norms are spectral,
//! `‖v‖²_{H^s} = Σ_j (1 + λ_j)^s |c_j|²`, with `λ_j` the eigenvalues of the
//! sector operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{DiscreteOperator, EigenBasis};
use crate::error::{Error, Result};

/// Sobolev exponent `s ∈ [0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if (0.0..1.0).contains(&s) {
            Ok(Self(s))
        } else {
            Err(Error::Config("s must lie in [0,1)".into()))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SobolevIndex {
    type Error = Error;

    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<SobolevIndex> for f64 {
    fn from(s: SobolevIndex) -> f64 {
        s.0
    }
}

/// State of the reduced equation at time `t`, as coefficients in an eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub coeffs: Vec<Complex64>,
}

impl FieldState {
    pub fn new(time: f64, coeffs: Vec<Complex64>) -> Self {
        Self { time, coeffs }
    }

    /// `a φ₀` at `t = 0` in a basis of `m` modes.
    pub fn ground_mode(amplitude: f64, m: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
        coeffs[0] = Complex64::new(amplitude, 0.0);
        Self::new(0.0, coeffs)
    }

    pub fn mass(&self) -> f64 {
        mass(&self.coeffs)
    }
}

fn check_basis(basis: &EigenBasis, len: usize) -> Result<()> {
    if basis.grid().len() == len {
        Ok(())
    } else {
        Err(Error::GridMismatch(basis.grid().len(), len))
    }
}

/// `c_j = h ⟨v, φ_j⟩`.
pub fn project(basis: &EigenBasis, values: &[Complex64]) -> Result<Vec<Complex64>> {
    check_basis(basis, values.len())?;
    let h = basis.grid().spacing();
    Ok(basis
        .modes()
        .map(|phi| {
            let (re, im) = phi.iter().zip(values).fold((0.0, 0.0), |(re, im), (p, v)| {
                (re + p * v.re, im + p * v.im)
            });
            Complex64::new(h * re, h * im)
        })
        .collect())
}

/// `v = Σ_j c_j φ_j` on the grid.
pub fn synthesize(basis: &EigenBasis, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); basis.grid().len()];
    for (c, phi) in coeffs.iter().zip(basis.modes()) {
        for (o, p) in out.iter_mut().zip(phi) {
            *o += c * p;
        }
    }
    out
}

/// Grid `L²` mass that `project` discards: `h Σ|v|² - Σ|c_j|²`.
pub fn tail_mass(basis: &EigenBasis, values: &[Complex64]) -> Result<f64> {
    let c = project(basis, values)?;
    Ok(grid_mass(values, basis.grid().spacing()) - mass(&c))
}

/// `(Σ_j (1 + λ_j)^s |c_j|²)^{1/2}`.
pub fn hs_norm(basis: &EigenBasis, coeffs: &[Complex64], s: SobolevIndex) -> f64 {
    weighted_norm(basis.lambda(), coeffs, s.value())
}

pub(crate) fn weighted_norm(lambda: &[f64], coeffs: &[Complex64], s: f64) -> f64 {
    lambda
        .iter()
        .zip(coeffs)
        .map(|(l, c)| (1.0 + l).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `(h Σ |v|^p)^{1/p}` for real samples.
pub fn lp_norm(values: &[f64], h: f64, p: f64) -> f64 {
    (h * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpNorms {
    pub l2: f64,
    pub l4: f64,
    pub l6: f64,
    pub linf: f64,
}

pub fn lp_norms(values: &[Complex64], h: f64) -> LpNorms {
    let (mut s2, mut s4, mut s6, mut sup) = (0.0, 0.0, 0.0, 0.0f64);
    for v in values {
        let a2 = v.norm_sqr();
        s2 += a2;
        s4 += a2 * a2;
        s6 += a2 * a2 * a2;
        sup = sup.max(a2);
    }
    LpNorms {
        l2: (h * s2).sqrt(),
        l4: (h * s4).powf(0.25),
        l6: (h * s6).powf(1.0 / 6.0),
        linf: sup.sqrt(),
    }
}

pub fn lp_norms_real(values: &[f64], h: f64) -> LpNorms {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    lp_norms(&complex, h)
}

pub fn grid_mass(values: &[Complex64], h: f64) -> f64 {
    h * values.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// `Σ |c_j|²`.
pub fn mass(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum()
}

/// `Σ λ_j |c_j|² + ½ ‖v‖₄⁴`.
pub fn energy(basis: &EigenBasis, coeffs: &[Complex64]) -> f64 {
    let values = synthesize(basis, coeffs);
    energy_with_values(basis.lambda(), coeffs, &values, basis.grid().spacing())
}

pub(crate) fn energy_with_values(
    lambda: &[f64],
    coeffs: &[Complex64],
    values: &[Complex64],
    h: f64,
) -> f64 {
    let linear: f64 = lambda.iter().zip(coeffs).map(|(l, c)| l * c.norm_sqr()).sum();
    let quartic = h * values.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>();
    linear + 0.5 * quartic
}

/// Grid form of the energy, `h Σ (|D⁺v|² + V|v|² + ½|v|⁴)`, using only the
/// operator's stencil and never the eigenbasis.
pub fn grid_energy(op: &DiscreteOperator, values: &[Complex64]) -> Result<f64> {
    if op.len() != values.len() {
        return Err(Error::GridMismatch(op.len(), values.len()));
    }
    let n = values.len();
    let h = op.grid().spacing();
    let mut total = 0.0;
    for i in 0..n {
        let next = values[(i + 1) % n];
        let grad = (next - values[i]) / h;
        // diag = 2/h² + V
        let v = op.diag()[i] + 2.0 * op.offdiag();
        let a2 = values[i].norm_sqr();
        total += grad.norm_sqr() + v * a2 + 0.5 * a2 * a2;
    }
    Ok(h * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::lowest_eigenpairs;
    use crate::metric::Grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn basis(m: usize) -> EigenBasis {
        let grid = Grid::new(256).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| 400.0 * (x.abs() + 1.0)).collect();
        let op = DiscreteOperator::from_potential(grid, &v).unwrap();
        lowest_eigenpairs(&op, m).unwrap()
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn projecting_basis_vectors() {
        let b = basis(6);
        let c = project(&b, &real(b.mode(0))).unwrap();
        assert_abs_diff_eq!(c[0].re, 1.0, epsilon = 1e-12);
        assert!(c[1..].iter().all(|z| z.norm() < 1e-12));

        let mix: Vec<f64> = b
            .mode(0)
            .iter()
            .zip(b.mode(1))
            .map(|(a, c)| (a + c) * FRAC_1_SQRT_2)
            .collect();
        let c = project(&b, &real(&mix)).unwrap();
        assert_abs_diff_eq!(c[0].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(c[1].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(c[2..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn mismatched_grid_rejected() {
        let b = basis(2);
        assert!(matches!(
            project(&b, &vec![Complex64::new(1.0, 0.0); 128]),
            Err(Error::GridMismatch(256, 128))
        ));
    }

    #[test]
    fn tail_matches_gram_schmidt_remainder() {
        let b = basis(10);
        let grid = b.grid().clone();
        let h = grid.spacing();
        let f: Vec<Complex64> = grid
            .points()
            .iter()
            .map(|x| Complex64::new((-4.0 * x * x).exp() * (1.0 + x), 0.3 * (2.0 * x).sin() * (-x * x).exp()))
            .collect();
        let recon = synthesize(&b, &project(&b, &f).unwrap());
        let residual = grid_mass(
            &f.iter().zip(&recon).map(|(a, r)| a - r).collect::<Vec<_>>(),
            h,
        );
        // Independent remainder: modified Gram–Schmidt sweep with fresh inner products.
        let mut r = f.clone();
        for phi in b.modes() {
            let c: Complex64 = r.iter().zip(phi).map(|(v, p)| v * p).sum::<Complex64>() * h;
            for (ri, p) in r.iter_mut().zip(phi) {
                *ri -= c * p;
            }
        }
        let gs = grid_mass(&r, h);
        assert_abs_diff_eq!(residual, gs, epsilon = 1e-12);
        assert_abs_diff_eq!(tail_mass(&b, &f).unwrap(), gs, epsilon = 1e-12);
        assert!(gs > 0.0);
    }

    #[test]
    fn round_trip_on_span() {
        let b = basis(8);
        let c: Vec<Complex64> = (0..8).map(|j| Complex64::new(1.0 / (1.0 + j as f64), 0.1 * j as f64)).collect();
        let back = project(&b, &synthesize(&b, &c)).unwrap();
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).norm() < 1e-10);
        }
        assert_abs_diff_eq!(grid_mass(&synthesize(&b, &c), b.grid().spacing()), mass(&c), epsilon = 1e-10);
    }

    #[test]
    fn sobolev_examples() {
        let b = basis(4);
        let mut c = vec![Complex64::new(0.0, 0.0); 4];
        c[0] = Complex64::new(0.3, 0.0);
        let s = SobolevIndex::new(0.6).unwrap();
        assert_abs_diff_eq!(hs_norm(&b, &c, s), 0.3 * (1.0 + b.lambda()[0]).powf(0.3), epsilon = 1e-14);
        let c: Vec<Complex64> = (0..4).map(|j| Complex64::new(j as f64, 1.0)).collect();
        let zero = SobolevIndex::new(0.0).unwrap();
        assert_abs_diff_eq!(hs_norm(&b, &c, zero), mass(&c).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn sobolev_range() {
        assert!(SobolevIndex::new(1.2).unwrap_err().to_string().contains("s must lie in [0,1)"));
        assert!(SobolevIndex::new(-0.1).is_err());
        assert!(SobolevIndex::new(1.0).is_err());
        assert!(SobolevIndex::new(0.999).is_ok());
    }

    #[test]
    fn constant_function_norms() {
        let grid = Grid::new(64).unwrap();
        let n = lp_norms(&vec![Complex64::new(1.0, 0.0); 64], grid.spacing());
        assert_abs_diff_eq!(n.l2, (2.0 * PI).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(n.l4, (2.0 * PI).powf(0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(n.l6, (2.0 * PI).powf(1.0 / 6.0), epsilon = 1e-14);
        assert_eq!(n.linf, 1.0);
    }

    #[test]
    fn zero_state() {
        let b = basis(3);
        let c = vec![Complex64::new(0.0, 0.0); 3];
        assert_eq!(mass(&c), 0.0);
        assert_eq!(energy(&b, &c), 0.0);
    }

    #[test]
    fn energy_two_ways() {
        let grid = Grid::new(512).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| 900.0 * (x.abs() + 1.0)).collect();
        let op = DiscreteOperator::from_potential(grid, &v).unwrap();
        let b = lowest_eigenpairs(&op, 4).unwrap();
        let c = vec![
            Complex64::new(0.4, 0.1),
            Complex64::new(0.0, -0.25),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.05, 0.02),
        ];
        let spectral = energy(&b, &c);
        let direct = grid_energy(&op, &synthesize(&b, &c)).unwrap();
        assert!((spectral - direct).abs() <= 1e-6 * spectral.abs(), "{spectral} vs {direct}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn coeffs(m: usize) -> impl Strategy<Value = Vec<Complex64>> {
            proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), m)
                .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn hs_is_a_norm(x in coeffs(6), y in coeffs(6), t in -3.0..3.0f64, s in 0.0..0.99f64) {
                let b = basis(6);
                let s = SobolevIndex::new(s).unwrap();
                let sum: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                prop_assert!(hs_norm(&b, &sum, s) <= hs_norm(&b, &x, s) + hs_norm(&b, &y, s) + 1e-12);
                let scaled: Vec<Complex64> = x.iter().map(|a| a * t).collect();
                prop_assert!((hs_norm(&b, &scaled, s) - t.abs() * hs_norm(&b, &x, s)).abs() <= 1e-10 * (1.0 + hs_norm(&b, &x, s)));
            }

            #[test]
            fn hs_nondecreasing_in_s(x in coeffs(6), s1 in 0.0..0.99f64, s2 in 0.0..0.99f64) {
                let b = basis(6);
                let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
                prop_assert!(
                    hs_norm(&b, &x, SobolevIndex::new(lo).unwrap())
                        <= hs_norm(&b, &x, SobolevIndex::new(hi).unwrap()) * (1.0 + 1e-14)
                );
            }

            #[test]
            fn parseval_with_nonnegative_tail(re in proptest::collection::vec(-1.0..1.0f64, 256)) {
                let b = basis(5);
                let f: Vec<Complex64> = re.iter().map(|&x| Complex64::new(x, 0.5 * x)).collect();
                let h = b.grid().spacing();
                let c = project(&b, &f).unwrap();
                let tail = tail_mass(&b, &f).unwrap();
                prop_assert!(tail >= -1e-12);
                prop_assert!((grid_mass(&f, h) - mass(&c) - tail).abs() <= 1e-10);
            }
        }
    }
}
