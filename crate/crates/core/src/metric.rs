//! Metric families on the torus of revolution and the effective potential
//! of the angular sector `e^{iky}`.
//!
//! With `ds² = dx² + g(x) dy²` the Laplacian restricted to the sector with
//! angular mode `k` is `-d²/dx² + k² g⁻¹(x)` on the periodic interval
//! `[-π, π)`. Two canonical profiles are provided: a Lipschitz cusp with
//! `g⁻¹ = |x| + 1` and a smooth well with `g⁻¹ = 2 - cos x`. Both have their
//! unique minimum of `g⁻¹` (maximum of `g`) at `x = 0`, where `g⁻¹ = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `g = (|x| + 1)⁻¹`, Lipschitz with a corner at the maximum.
    #[serde(rename = "cusp")]
    LipschitzCusp,
    /// `g⁻¹ = 2 - cos x`, smooth with a quadratic minimum.
    #[serde(rename = "smooth")]
    SmoothWell,
}

impl Family {
    pub fn token(self) -> &'static str {
        match self {
            Family::LipschitzCusp => "cusp",
            Family::SmoothWell => "smooth",
        }
    }

    /// Inverse metric coefficient `g⁻¹(x)` for `x` in `[-π, π]`.
    pub fn inverse_metric(self, x: f64) -> f64 {
        match self {
            Family::LipschitzCusp => x.abs() + 1.0,
            Family::SmoothWell => 2.0 - x.cos(),
        }
    }

    /// Exponent `p` of the ground-state length scale `k^{-p}`.
    pub fn length_exponent(self) -> f64 {
        match self {
            Family::LipschitzCusp => 2.0 / 3.0,
            Family::SmoothWell => 0.5,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cusp" => Ok(Family::LipschitzCusp),
            "smooth" => Ok(Family::SmoothWell),
            other => Err(Error::Config(format!(
                "unknown family `{other}`, expected `cusp` or `smooth`"
            ))),
        }
    }
}

/// A metric family together with the angular Fourier mode `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PotentialProfile {
    family: Family,
    k: u32,
}

impl PotentialProfile {
    pub fn new(family: Family, k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidMode(k as i64));
        }
        Ok(Self { family, k })
    }

    pub fn cusp(k: u32) -> Result<Self> {
        Self::new(Family::LipschitzCusp, k)
    }

    pub fn smooth(k: u32) -> Result<Self> {
        Self::new(Family::SmoothWell, k)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn k_f64(&self) -> f64 {
        f64::from(self.k)
    }

    /// `V(x) = k² g⁻¹(x)`.
    pub fn potential_at(&self, x: f64) -> f64 {
        let k = self.k_f64();
        k * k * self.family.inverse_metric(x)
    }

    /// Ground-state length scale: `k^{-2/3}` for the cusp, `k^{-1/2}` for the well.
    pub fn length_scale(&self) -> f64 {
        self.k_f64().powf(-self.family.length_exponent())
    }

    /// Largest admissible grid spacing for the operator: a sixteenth of the
    /// ground-state length scale.
    pub fn max_spacing(&self) -> f64 {
        self.length_scale() / 16.0
    }

    /// Growth time scale at which the modulation instability becomes
    /// visible: `k^{2/3}` (cusp) or `k^{1/2}` (smooth).
    pub fn instability_time(&self) -> f64 {
        self.k_f64().powf(self.family.length_exponent())
    }
}

/// `V″(0)`, the curvature of the smooth well at its minimum.
pub fn quadratic_well_coefficient(profile: &PotentialProfile) -> Result<f64> {
    match profile.family {
        Family::SmoothWell => Ok(profile.k_f64() * profile.k_f64()),
        Family::LipschitzCusp => Err(Error::NoQuadraticWell),
    }
}

/// Uniform periodic grid `x_i = -π + i h` on `[-π, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::OddGrid(n));
        }
        if n < 16 {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self {
            n,
            h: 2.0 * PI / n as f64,
        })
    }

    /// Smallest even grid whose spacing does not exceed `h_max`.
    pub fn with_max_spacing(h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::InvalidArgument(format!("spacing {h_max} must be positive")));
        }
        let mut n = (2.0 * PI / h_max).ceil() as usize;
        n += n % 2;
        Self::new(n.max(16))
    }

    /// Grid satisfying the operator resolution rule for `profile`.
    pub fn resolving(profile: &PotentialProfile) -> Result<Self> {
        Self::with_max_spacing(profile.max_spacing())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `x_i = -π + i h`, computed as `(i - n/2) h` so that `x_{n-i} = -x_i` exactly.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of `x = 0`.
    pub fn origin(&self) -> usize {
        self.n / 2
    }

    /// Index of `-x_i` under periodic wraparound.
    pub fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch(self.n, other.n))
        }
    }
}

pub fn build_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}

pub fn potential_values(profile: &PotentialProfile, grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| profile.potential_at(grid.x(i)))
        .collect()
}
