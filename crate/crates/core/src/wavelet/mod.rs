//! Compactly supported scaling functions and the wavelet projection kernel.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

mod kernel;
mod taps;

pub use kernel::{kernel_transform, KernelProjection, ProjectionKernel};

/// Tolerance on the eigenvalue-1 residual at integer points.
const EIGEN_TOL: f64 = 1e-10;

/// Scaling-function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Haar,
    /// Daubechies with `N` vanishing moments, `2 <= N <= 10`; support `[0, 2N - 1]`.
    Daubechies(u8),
}

impl Family {
    pub fn daubechies(order: u8) -> Result<Self> {
        if (2..=10).contains(&order) {
            Ok(Family::Daubechies(order))
        } else {
            Err(Error::UnsupportedFamily(format!("db{order}")))
        }
    }

    /// Low-pass refinement coefficients `h_0 .. h_{2N-1}`.
    pub fn refinement_coeffs(&self) -> Result<Vec<f64>> {
        match *self {
            Family::Haar => Ok(vec![std::f64::consts::FRAC_1_SQRT_2; 2]),
            Family::Daubechies(2) => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                Ok(vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d])
            }
            Family::Daubechies(n @ 3..=10) => Ok(taps::DAUBECHIES[n as usize - 2].to_vec()),
            Family::Daubechies(n) => Err(Error::UnsupportedFamily(format!("db{n}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Haar => write!(f, "haar"),
            Family::Daubechies(n) => write!(f, "db{n}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "haar" || lower == "db1" {
            return Ok(Family::Haar);
        }
        let digits = lower
            .strip_prefix("daubechies")
            .or_else(|| lower.strip_prefix("db"))
            .ok_or_else(|| Error::UnsupportedFamily(s.to_string()))?;
        let order: u8 = digits
            .parse()
            .map_err(|_| Error::UnsupportedFamily(s.to_string()))?;
        Family::daubechies(order).map_err(|_| Error::UnsupportedFamily(s.to_string()))
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A father wavelet tabulated on the dyadic grid of spacing `2^-r` over its
/// support `[b1, b2]`. Between grid points values are linearly interpolated;
/// Haar is evaluated in closed form.
#[derive(Debug, Clone)]
pub struct ScalingFunction {
    family: Family,
    coeffs: Vec<f64>,
    b1: f64,
    b2: f64,
    resolution: u32,
    values: Vec<f64>,
}

impl ScalingFunction {
    /// Builds φ with the cascade algorithm: integer values from the
    /// eigenvalue-1 eigenvector of the refinement matrix, then dyadic
    /// refinement down to spacing `2^-table_resolution`.
    pub fn build(family: Family, table_resolution: u32) -> Result<Self> {
        if !(8..=20).contains(&table_resolution) {
            return Err(Error::InvalidParameter {
                name: "table_resolution",
                reason: format!("must lie in [8, 20], got {table_resolution}"),
            });
        }
        let coeffs = family.refinement_coeffs()?;
        let sum: f64 = coeffs.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "refinement_coeffs",
                reason: format!("taps sum to {sum}, expected sqrt(2)"),
            });
        }
        let last = coeffs.len() - 1;
        let scale = 1usize << table_resolution;
        let mut values = vec![0.0; last * scale + 1];

        match family {
            Family::Haar => {
                values[..scale].iter_mut().for_each(|v| *v = 1.0);
            }
            Family::Daubechies(_) => {
                let at_integers = integer_values(&coeffs)?;
                for (i, v) in at_integers.iter().enumerate() {
                    values[i * scale] = *v;
                }
                cascade(&coeffs, &mut values, table_resolution);
            }
        }

        Ok(Self {
            family,
            coeffs,
            b1: 0.0,
            b2: last as f64,
            resolution: table_resolution,
            values,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn refinement_coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Support bounds `(B1, B2)`.
    pub fn support(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }

    pub fn table_resolution(&self) -> u32 {
        self.resolution
    }

    /// Tabulated values at `b1 + m 2^-r`.
    pub fn table(&self) -> &[f64] {
        &self.values
    }

    /// Spacing of the breakpoints between which φ is smooth: 1 for Haar,
    /// the table spacing otherwise.
    pub fn knot_spacing(&self) -> f64 {
        match self.family {
            Family::Haar => 1.0,
            Family::Daubechies(_) => 1.0 / (1u64 << self.resolution) as f64,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if let Family::Haar = self.family {
            return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        if x <= self.b1 || x >= self.b2 {
            return 0.0;
        }
        let t = (x - self.b1) * (1u64 << self.resolution) as f64;
        let i = t as usize;
        let frac = t - i as f64;
        let lo = self.values[i];
        match self.values.get(i + 1) {
            Some(hi) => lo + frac * (hi - lo),
            None => lo,
        }
    }

    /// Largest `|φ(x) − √2 Σ_k h_k φ(2x − k)|` over dyadic points of depth
    /// `r − 1`, read straight from the table.
    pub fn refinement_residual(&self) -> f64 {
        let scale = 1i64 << self.resolution;
        let len = self.values.len() as i64;
        let mut worst: f64 = 0.0;
        // Points of depth r - 1 are even table indices.
        for m in (0..len).step_by(2) {
            let mut acc = 0.0;
            for (k, h) in self.coeffs.iter().enumerate() {
                let idx = 2 * m - k as i64 * scale;
                if (0..len).contains(&idx) {
                    acc += h * self.values[idx as usize];
                }
            }
            let rhs = std::f64::consts::SQRT_2 * acc;
            worst = worst.max((self.values[m as usize] - rhs).abs());
        }
        worst
    }
}

/// Solves φ(i) = √2 Σ_m h_{2i−m} φ(m) at the integers with Σ φ(i) = 1.
fn integer_values(coeffs: &[f64]) -> Result<Vec<f64>> {
    let last = coeffs.len() - 1;
    // φ vanishes at both support ends, so only 1..last-1 are unknown.
    let dim = last - 1;
    let tap = |i: usize, m: usize| -> f64 {
        let idx = 2 * i as i64 - m as i64;
        if (0..coeffs.len() as i64).contains(&idx) {
            std::f64::consts::SQRT_2 * coeffs[idx as usize]
        } else {
            0.0
        }
    };
    let refine = DMatrix::from_fn(dim, dim, |r, c| tap(r + 1, c + 1));
    let mut system = &refine - DMatrix::identity(dim, dim);
    // Replace the last (redundant) equation by the normalization.
    for c in 0..dim {
        system[(dim - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(dim);
    rhs[dim - 1] = 1.0;
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::CascadeDivergence { residual: f64::INFINITY })?;
    let residual = (&refine * &solution - &solution).amax();
    if !residual.is_finite() || residual > EIGEN_TOL {
        return Err(Error::CascadeDivergence { residual });
    }
    let mut out = vec![0.0; last + 1];
    out[1..last].copy_from_slice(solution.as_slice());
    Ok(out)
}

fn cascade(coeffs: &[f64], values: &mut [f64], resolution: u32) {
    let scale = 1usize << resolution;
    let len = values.len();
    for level in 1..=resolution {
        let step = 1usize << (resolution - level);
        // New points at this level are odd multiples of `step`.
        let mut m = step;
        while m < len {
            let mut acc = 0.0;
            for (k, h) in coeffs.iter().enumerate() {
                // 2x - k in table units.
                if let Some(idx) = (2 * m).checked_sub(k * scale) {
                    if idx < len {
                        acc += h * values[idx];
                    }
                }
            }
            values[m] = std::f64::consts::SQRT_2 * acc;
            m += 2 * step;
        }
    }
}
