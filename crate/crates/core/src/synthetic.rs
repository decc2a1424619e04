//! Closed-form densities on `[0, 1]` bounded away from zero, with exact
//! inverse-CDF samplers and cached oracle divergences.

use std::collections::HashMap;
use std::f64::consts::PI;

use once_cell::sync::Lazy;
use std::sync::Mutex;

use crate::divergence::{true_divergence_with, DivergenceSpec};
use crate::error::{Error, Result};
use crate::quadrature::{Interval, Quadrature, MAX_NODES};
use crate::rng::UniformStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Shape {
    Uniform,
    Linear,
    Bump,
    Cosine,
}

/// A density on `[0, 1]` with `κ₁ ≤ pdf ≤ κ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyntheticDensity {
    shape: Shape,
}

impl SyntheticDensity {
    /// `pdf ≡ 1`
    pub const U: Self = Self { shape: Shape::Uniform };
    /// `pdf(x) = x + 0.5`
    pub const LIN: Self = Self { shape: Shape::Linear };
    /// `pdf(x) = 0.2 + 4.8 x (1 − x)`
    pub const BUMP: Self = Self { shape: Shape::Bump };
    /// `pdf(x) = 1 + 0.5 cos(2πx)`
    pub const COS: Self = Self { shape: Shape::Cosine };

    pub fn id(&self) -> &'static str {
        match self.shape {
            Shape::Uniform => "U",
            Shape::Linear => "LIN",
            Shape::Bump => "BUMP",
            Shape::Cosine => "COS",
        }
    }

    pub fn support(&self) -> Interval {
        Interval::unit()
    }

    pub fn kappa1(&self) -> f64 {
        match self.shape {
            Shape::Uniform => 1.0,
            Shape::Linear | Shape::Cosine => 0.5,
            Shape::Bump => 0.2,
        }
    }

    pub fn kappa2(&self) -> f64 {
        match self.shape {
            Shape::Uniform => 1.0,
            Shape::Linear | Shape::Cosine => 1.5,
            Shape::Bump => 1.4,
        }
    }

    /// Density; zero outside `[0, 1]`.
    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self.shape {
            Shape::Uniform => 1.0,
            Shape::Linear => x + 0.5,
            Shape::Bump => 0.2 + 4.8 * x * (1.0 - x),
            Shape::Cosine => 1.0 + 0.5 * (2.0 * PI * x).cos(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.shape {
            Shape::Uniform => x,
            Shape::Linear => 0.5 * x * x + 0.5 * x,
            Shape::Bump => 0.2 * x + 2.4 * x * x - 1.6 * x * x * x,
            Shape::Cosine => x + 0.25 * (2.0 * PI * x).sin() / PI,
        }
    }

    /// Quantile function; closed form for U and LIN, bisection to `1e-12`
    /// otherwise.
    pub fn inv_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self.shape {
            Shape::Uniform => u,
            Shape::Linear => 0.5 * ((1.0 + 8.0 * u).sqrt() - 1.0),
            Shape::Bump | Shape::Cosine => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

impl std::str::FromStr for SyntheticDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        catalog()
            .into_iter()
            .find(|d| d.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownDensity(s.to_string()))
    }
}

pub fn catalog() -> Vec<SyntheticDensity> {
    vec![
        SyntheticDensity::U,
        SyntheticDensity::LIN,
        SyntheticDensity::BUMP,
        SyntheticDensity::COS,
    ]
}

pub fn by_id(id: &str) -> Result<SyntheticDensity> {
    id.parse()
}

/// `n` draws by inverse-CDF transform of stream 0 of `seed`.
pub fn sample(density: &SyntheticDensity, n: usize, seed: u64) -> Vec<f64> {
    sample_stream(density, n, seed, 0)
}

pub fn sample_stream(density: &SyntheticDensity, n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut uniforms = UniformStream::new(seed, stream);
    (0..n).map(|_| density.inv_cdf(uniforms.next_f64())).collect()
}

type OracleKey = (SyntheticDensity, SyntheticDensity, crate::divergence::DivergenceKind, u64);

static ORACLE_CACHE: Lazy<Mutex<HashMap<OracleKey, f64>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Ground-truth divergence on a fixed `2^16 + 1`-node Simpson grid, cached
/// per `(spec, a, b)`.
pub fn oracle_divergence(
    spec: &DivergenceSpec,
    a: &SyntheticDensity,
    b: &SyntheticDensity,
) -> Result<f64> {
    let key = (*a, *b, spec.kind, spec.alpha.unwrap_or(f64::NAN).to_bits());
    if let Some(v) = ORACLE_CACHE.lock().expect("oracle cache poisoned").get(&key) {
        return Ok(*v);
    }
    let value = true_divergence_with(
        spec,
        |x| a.pdf(x),
        |x| b.pdf(x),
        Interval::unit(),
        Quadrature::fixed(MAX_NODES),
    )?;
    ORACLE_CACHE
        .lock()
        .expect("oracle cache poisoned")
        .insert(key, value);
    Ok(value)
}
