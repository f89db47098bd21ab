//! Self-contained Airy function oracle and the model problems built on it.
//!
//! `Ai` and `Ai′` are evaluated by their Maclaurin series near the origin and
//! by the standard Poincaré asymptotic expansions for large `|x|`. Zeros are
//! located by bisection inside brackets centred on the asymptotic zero
//! formula. None of this shares code with the eigensolver, so the model
//! spectrum and model ground state below are genuine independent references.
//!
//! The model operator `-d²/dx² + k²|x|` on the line scales to
//! `k^{4/3}(-d²/dy² + |y|)`. Its even eigenfunctions are `Ai(|y| - z′_m)`
//! (Neumann condition at the origin), its odd ones `sign(y) Ai(|y| - z_m)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metric::{quadratic_well_coefficient, Grid, PotentialProfile};

/// `Ai(0) = 3^{-2/3}/Γ(2/3)`.
const AI0: f64 = 0.355_028_053_887_817_2;
/// `-Ai′(0) = 3^{-1/3}/Γ(1/3)`.
const AIP0: f64 = 0.258_819_403_792_806_8;

/// Series is used for `-SERIES_SWITCH_NEG ≤ x ≤ SERIES_SWITCH_POS`,
/// asymptotics beyond. The two branches agree to about 1e-12 there.
pub const SERIES_SWITCH_POS: f64 = 6.0;
pub const SERIES_SWITCH_NEG: f64 = 7.0;
pub const MAX_ARG: f64 = 20.0;

pub const MAX_ZERO_INDEX: usize = 10;

fn check_range(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= MAX_ARG {
        Ok(())
    } else {
        Err(Error::OutOfRange(x))
    }
}

/// Maclaurin series for `(Ai(x), Ai′(x))`.
pub fn airy_series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = Σ a_k x^{3k}, g = Σ d_k x^{3k+1}; Ai = c1 f - c2 g.
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    // f′ and g′ term by term.
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut tfp, mut tgp) = (1.0, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tfp = if k == 1 {
            x * x / 2.0
        } else {
            tfp * x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0))
        };
        tgp *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        g += tg;
        fp += tfp;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

/// Coefficients `u_k` and `v_k` of the asymptotic expansions.
fn asymptotic_coefficients(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    u.push(1.0);
    v.push(1.0);
    for k in 1..count {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * next);
    }
    (u, v)
}

/// Sums `Σ (-1)^k c_k ζ^{-k}` with optimal truncation, plus the even/odd
/// partial sums used on the oscillatory side.
struct AsymptoticSums {
    alternating: f64,
    even: f64,
    odd: f64,
}

fn asymptotic_sums(coeffs: &[f64], zeta: f64) -> AsymptoticSums {
    let mut alternating = 0.0;
    let (mut even, mut odd) = (0.0, 0.0);
    let mut last = f64::INFINITY;
    let mut pow = 1.0;
    for (k, c) in coeffs.iter().enumerate() {
        let term = c * pow;
        if term.abs() > last {
            break;
        }
        last = term.abs();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        alternating += sign * term;
        // Σ(-1)^j c_{2j} ζ^{-2j} and Σ(-1)^j c_{2j+1} ζ^{-2j-1}
        let j_sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += j_sign * term;
        } else {
            odd += j_sign * term;
        }
        if term.abs() < 1e-17 * alternating.abs().max(even.abs()).max(1e-300) {
            break;
        }
        pow /= zeta;
    }
    AsymptoticSums {
        alternating,
        even,
        odd,
    }
}

/// Asymptotic expansion for `(Ai(x), Ai′(x))`, valid for large `|x|`.
pub fn airy_asymptotic(x: f64) -> (f64, f64) {
    let (u, v) = asymptotic_coefficients(40);
    let z = x.abs();
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let su = asymptotic_sums(&u, zeta);
    let sv = asymptotic_sums(&v, zeta);
    let q = z.powf(0.25);
    if x > 0.0 {
        let e = (-zeta).exp() / (2.0 * PI.sqrt());
        (e / q * su.alternating, -e * q * sv.alternating)
    } else {
        let (s, c) = (zeta - PI / 4.0).sin_cos();
        let ai = (c * su.even + s * su.odd) / (PI.sqrt() * q);
        let aip = q / PI.sqrt() * (s * sv.even - c * sv.odd);
        (ai, aip)
    }
}

fn airy_pair(x: f64) -> Result<(f64, f64)> {
    check_range(x)?;
    if (-SERIES_SWITCH_NEG..=SERIES_SWITCH_POS).contains(&x) {
        Ok(airy_series(x))
    } else {
        Ok(airy_asymptotic(x))
    }
}

/// `Ai(x)` for `|x| ≤ 20`.
pub fn airy_ai(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.0)
}

/// `Ai′(x)` for `|x| ≤ 20`.
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    airy_pair(x).map(|p| p.1)
}

/// Asymptotic estimate of the `m`th zero magnitude given the phase argument `t`.
fn zero_estimate(t: f64) -> f64 {
    t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 * t.powi(-2) - 5.0 / 36.0 * t.powi(-4))
}

fn derivative_zero_estimate(t: f64) -> f64 {
    t.powf(2.0 / 3.0) * (1.0 - 7.0 / 48.0 * t.powi(-2) + 35.0 / 288.0 * t.powi(-4))
}

fn bisect(
    f: impl Fn(f64) -> Result<f64>,
    which: &'static str,
    index: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(-a)?, f(-b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            which,
            index,
            lo,
            hi,
        });
    }
    while b - a > 1e-14 * b.max(1.0) {
        let mid = 0.5 * (a + b);
        let fm = f(-mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn bracket(center: f64) -> (f64, f64) {
    (center - 0.3, center + 0.3)
}

/// `z_m > 0` with `Ai(-z_m) = 0`, for `1 ≤ m ≤ 10`.
pub fn airy_zero(m: usize) -> Result<f64> {
    if m == 0 || m > MAX_ZERO_INDEX {
        return Err(Error::ZeroIndex(m));
    }
    let t = 3.0 * PI / 8.0 * (4.0 * m as f64 - 1.0);
    let (lo, hi) = bracket(zero_estimate(t));
    bisect(airy_ai, "Ai", m, lo, hi)
}

/// `z′_m > 0` with `Ai′(-z′_m) = 0`, for `1 ≤ m ≤ 10`.
pub fn airy_prime_zero(m: usize) -> Result<f64> {
    if m == 0 || m > MAX_ZERO_INDEX {
        return Err(Error::ZeroIndex(m));
    }
    let t = 3.0 * PI / 8.0 * (4.0 * m as f64 - 3.0);
    let (lo, hi) = bracket(derivative_zero_estimate(t));
    bisect(airy_ai_prime, "Ai'", m, lo, hi)
}

/// Zeros of `Ai` and `Ai′` on the negative axis, stored as positive magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct AiryZeroTable {
    pub ai_zeros: Vec<f64>,
    pub aip_zeros: Vec<f64>,
}

impl AiryZeroTable {
    pub fn new(count: usize) -> Result<Self> {
        let ai_zeros = (1..=count).map(airy_zero).collect::<Result<Vec<_>>>()?;
        let aip_zeros = (1..=count).map(airy_prime_zero).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ai_zeros,
            aip_zeros,
        })
    }

    /// `z′_1 < z_1 < z′_2 < z_2 < …`
    pub fn interlaces(&self) -> bool {
        let n = self.ai_zeros.len().min(self.aip_zeros.len());
        (0..n).all(|i| {
            self.aip_zeros[i] < self.ai_zeros[i]
                && (i + 1 >= self.aip_zeros.len() || self.ai_zeros[i] < self.aip_zeros[i + 1])
        })
    }

    /// Unit-scale eigenvalue `ζ_n` of `-d²/dy² + |y|`.
    pub fn unit_eigenvalue(&self, n: usize) -> Option<f64> {
        if n % 2 == 0 {
            self.aip_zeros.get(n / 2).copied()
        } else {
            self.ai_zeros.get(n / 2).copied()
        }
    }
}

/// Eigenvalues `α_n = k^{4/3} ζ_n` of `-d²/dx² + k²|x|` on the line.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpectrum {
    pub k: u32,
    pub alpha: Vec<f64>,
}

impl ModelSpectrum {
    pub fn unit_scaled(&self) -> Vec<f64> {
        let s = f64::from(self.k).powf(4.0 / 3.0);
        self.alpha.iter().map(|a| a / s).collect()
    }
}

pub fn model_spectrum(k: u32, count: usize) -> Result<ModelSpectrum> {
    if k < 1 {
        return Err(Error::InvalidMode(k as i64));
    }
    if count > MAX_ZERO_INDEX {
        return Err(Error::InvalidArgument(format!(
            "model spectrum limited to {MAX_ZERO_INDEX} levels (asked {count})"
        )));
    }
    let table = AiryZeroTable::new(count.div_ceil(2).max(1))?;
    let scale = f64::from(k).powf(4.0 / 3.0);
    let alpha = (0..count)
        .map(|n| scale * table.unit_eigenvalue(n).expect("table sized for count"))
        .collect();
    Ok(ModelSpectrum { k, alpha })
}

fn normalize_on_grid(values: &mut [f64], h: f64) {
    let norm = (h * values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
}

/// `ψ₀(x) = C₀ Ai(k^{2/3}|x| - z′_1)`, normalized in the grid `L²`.
pub fn model_ground_state(k: u32, grid: &Grid) -> Result<Vec<f64>> {
    if k < 1 {
        return Err(Error::InvalidMode(k as i64));
    }
    let scale = f64::from(k).powf(2.0 / 3.0);
    let limit = 1.0 / (8.0 * scale);
    if grid.spacing() > limit {
        return Err(Error::UnderResolved {
            h: grid.spacing(),
            limit,
        });
    }
    let shift = airy_prime_zero(1)?;
    let mut values = (0..grid.len())
        .map(|i| {
            let y = scale * grid.x(i).abs() - shift;
            // Beyond the evaluator's range the function is below 1e-27.
            if y > MAX_ARG {
                Ok(0.0)
            } else {
                airy_ai(y)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_on_grid(&mut values, grid.spacing());
    Ok(values)
}

/// Gaussian ground state of the harmonic approximation of the smooth well,
/// with its predicted eigenvalue `k² + b`.
pub fn hermite_ground_state(profile: &PotentialProfile, grid: &Grid) -> Result<(Vec<f64>, f64)> {
    let curvature = quadratic_well_coefficient(profile)?;
    let k = profile.k_f64();
    let limit = k.powf(-0.5) / 8.0;
    if grid.spacing() > limit {
        return Err(Error::UnderResolved {
            h: grid.spacing(),
            limit,
        });
    }
    let b = hermite_width(curvature);
    let mut values: Vec<f64> = (0..grid.len())
        .map(|i| (-0.5 * b * grid.x(i).powi(2)).exp())
        .collect();
    normalize_on_grid(&mut values, grid.spacing());
    Ok((values, k * k + b))
}

/// `b = √(V″(0)/2)`: `-u″ + b² x² u` has ground state `e^{-b x²/2}` at energy `b`.
pub fn hermite_width(curvature: f64) -> f64 {
    (curvature / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn values_at_origin() {
        assert_abs_diff_eq!(airy_ai(0.0).unwrap(), 0.355_028_053_8, epsilon = 1e-10);
        assert_abs_diff_eq!(airy_ai_prime(0.0).unwrap(), -0.258_819_403_7, epsilon = 1e-10);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(airy_ai(20.5), Err(Error::OutOfRange(_))));
        assert!(matches!(airy_ai_prime(f64::NAN), Err(Error::OutOfRange(_))));
        assert!(airy_ai(-20.0).is_ok());
    }

    #[test]
    fn switchover_agrees() {
        for x in [SERIES_SWITCH_POS, -SERIES_SWITCH_NEG] {
            let (a, ap) = airy_series(x);
            let (b, bp) = airy_asymptotic(x);
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
            assert_abs_diff_eq!(ap, bp, epsilon = 1e-11);
        }
    }

    #[test]
    fn decays_monotonically_on_positive_axis() {
        let mut prev = airy_ai(0.0).unwrap();
        for i in 1..=200 {
            let v = airy_ai(i as f64 * 0.1).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        assert!(airy_ai(10.0).unwrap() < 1e-9);
    }

    #[test]
    fn zero_index_bounds() {
        assert!(matches!(airy_zero(0), Err(Error::ZeroIndex(0))));
        assert!(matches!(airy_prime_zero(11), Err(Error::ZeroIndex(11))));
    }

    #[test]
    fn first_zeros() {
        assert_abs_diff_eq!(airy_prime_zero(1).unwrap(), 1.018_792_97, epsilon = 1e-8);
        assert_abs_diff_eq!(airy_zero(1).unwrap(), 2.338_107_41, epsilon = 1e-8);
    }

    #[test]
    fn stored_zeros_are_roots_and_interlace() {
        let table = AiryZeroTable::new(MAX_ZERO_INDEX).unwrap();
        assert!(table.interlaces());
        for (&z, &zp) in table.ai_zeros.iter().zip(&table.aip_zeros) {
            assert!(airy_ai(-z).unwrap().abs() <= 1e-10);
            assert!(airy_ai_prime(-zp).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = model_spectrum(1, 2).unwrap();
        assert_abs_diff_eq!(s.alpha[0], 1.018_792_97, epsilon = 1e-8);
        assert_abs_diff_eq!(s.alpha[1], 2.338_107_41, epsilon = 1e-8);
        let s = model_spectrum(100, 2).unwrap();
        // 100^{4/3} · 1.01879297 = 472.8818
        assert_abs_diff_eq!(s.alpha[0], 472.8818, epsilon = 1e-3);
        for k in [3, 64, 1000] {
            let s = model_spectrum(k, 10).unwrap();
            let gap = s.alpha[1] - s.alpha[0];
            assert_abs_diff_eq!(gap / f64::from(k).powf(4.0 / 3.0), 1.319_314_44, epsilon = 1e-8);
            assert!(s.alpha.windows(2).all(|w| w[0] < w[1]));
        }
        assert!(model_spectrum(5, 11).is_err());
    }

    #[test]
    fn ground_state_resolution_and_symmetry() {
        let grid = Grid::new(256).unwrap();
        assert!(matches!(
            model_ground_state(128, &grid),
            Err(Error::UnderResolved { .. })
        ));
        let grid = Grid::new(2048).unwrap();
        let psi = model_ground_state(64, &grid).unwrap();
        for i in 0..grid.len() {
            assert_eq!(psi[i], psi[grid.mirror(i)]);
        }
        assert!(psi[grid.origin()] > 0.0);
        let mass: f64 = grid.spacing() * psi.iter().map(|v| v * v).sum::<f64>();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hermite_width_is_k_over_root_two() {
        for k in [8u32, 64, 300] {
            let p = PotentialProfile::smooth(k).unwrap();
            let b = hermite_width(quadratic_well_coefficient(&p).unwrap());
            assert_abs_diff_eq!(b, f64::from(k) / 2f64.sqrt(), epsilon = 1e-12);
        }
        let p = PotentialProfile::cusp(8).unwrap();
        assert!(hermite_ground_state(&p, &Grid::new(256).unwrap()).is_err());
    }
}
