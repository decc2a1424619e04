//! Divergence functionals `J(f, g) = ∫ φ(f(x), g(x)) dx` and their plug-in
//! estimates.
//!
//! The Hellinger integral `I(f, g) = ∫ f^α g^{1−α}` carries the Tsallis and
//! Rényi divergences: `(I − 1)/(α − 1)` and `log(I)/(α − 1)` respectively.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::WaveletDensityEstimate;
use crate::error::{Error, Result};
use crate::quadrature::{Interval, Quadrature, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    HellingerIntegral,
    Tsallis,
    Renyi,
    KullbackLeibler,
    L2,
}

impl DivergenceKind {
    pub fn needs_alpha(&self) -> bool {
        matches!(self, Self::HellingerIntegral | Self::Tsallis | Self::Renyi)
    }

    /// Value of the functional at `f = g`.
    pub fn null_value(&self) -> f64 {
        match self {
            Self::HellingerIntegral => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::HellingerIntegral => "hellinger_integral",
            Self::Tsallis => "tsallis",
            Self::Renyi => "renyi",
            Self::KullbackLeibler => "kullback_leibler",
            Self::L2 => "l2",
        };
        f.write_str(s)
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hellinger" | "hellinger_integral" => Ok(Self::HellingerIntegral),
            "tsallis" => Ok(Self::Tsallis),
            "renyi" => Ok(Self::Renyi),
            "kl" | "kullback_leibler" => Ok(Self::KullbackLeibler),
            "l2" => Ok(Self::L2),
            _ => Err(Error::InvalidParameter {
                name: "kind",
                reason: format!("unknown divergence `{s}`"),
            }),
        }
    }
}

/// Divergence kind with its order `α` (kept only for the α-families).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct DivergenceSpec {
    pub kind: DivergenceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: DivergenceKind,
    #[serde(default)]
    alpha: Option<f64>,
}

impl TryFrom<RawSpec> for DivergenceSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        DivergenceSpec::new(raw.kind, raw.alpha)
    }
}

impl DivergenceSpec {
    pub fn new(kind: DivergenceKind, alpha: Option<f64>) -> Result<Self> {
        if !kind.needs_alpha() {
            return Ok(Self { kind, alpha: None });
        }
        let alpha = alpha.ok_or(Error::InvalidAlpha(f64::NAN))?;
        if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self {
            kind,
            alpha: Some(alpha),
        })
    }

    pub fn hellinger(alpha: f64) -> Result<Self> {
        Self::new(DivergenceKind::HellingerIntegral, Some(alpha))
    }

    pub fn tsallis(alpha: f64) -> Result<Self> {
        Self::new(DivergenceKind::Tsallis, Some(alpha))
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Self::new(DivergenceKind::Renyi, Some(alpha))
    }

    pub fn kl() -> Self {
        Self {
            kind: DivergenceKind::KullbackLeibler,
            alpha: None,
        }
    }

    pub fn l2() -> Self {
        Self {
            kind: DivergenceKind::L2,
            alpha: None,
        }
    }

    /// `α − 1` for the α-families.
    pub(crate) fn alpha_offset(&self) -> f64 {
        self.alpha.map_or(0.0, |a| a - 1.0)
    }

    /// Whether estimates are clipped at the floor before entering `φ`.
    pub fn clips_estimates(&self) -> bool {
        self.kind != DivergenceKind::L2
    }

    /// The functional integrated before any post-transform.
    pub fn phi(&self) -> PhiFunctional {
        phi_for(self)
    }

    /// Maps `∫ φ(f, g)` to the divergence value.
    pub fn finish(&self, integral: f64) -> Result<f64> {
        let value = match self.kind {
            DivergenceKind::Tsallis => (integral - 1.0) / self.alpha_offset(),
            DivergenceKind::Renyi => {
                if integral <= 0.0 {
                    return Err(Error::NonFiniteIntegral);
                }
                integral.ln() / self.alpha_offset()
            }
            _ => integral,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteIntegral)
        }
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha {
            Some(a) => write!(f, "{}(alpha={a})", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PhiForm {
    /// `s^α t^{1−α}`
    Power { alpha: f64 },
    /// `s log(s / t)`
    RelativeEntropy,
    /// `(s − t)²`
    SquaredDifference,
}

/// `φ(s, t)` with its first and second partial derivatives in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiFunctional {
    form: PhiForm,
}

/// Hellinger, Tsallis and Rényi share `s^α t^{1−α}`; the last two are
/// post-transforms of its integral.
pub fn phi_for(spec: &DivergenceSpec) -> PhiFunctional {
    let form = match spec.kind {
        DivergenceKind::HellingerIntegral | DivergenceKind::Tsallis | DivergenceKind::Renyi => {
            PhiForm::Power {
                alpha: spec.alpha.expect("validated spec carries alpha"),
            }
        }
        DivergenceKind::KullbackLeibler => PhiForm::RelativeEntropy,
        DivergenceKind::L2 => PhiForm::SquaredDifference,
    };
    PhiFunctional { form }
}

impl PhiFunctional {
    #[inline]
    pub fn value(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => s.powf(alpha) * t.powf(1.0 - alpha),
            PhiForm::RelativeEntropy => s * (s / t).ln(),
            PhiForm::SquaredDifference => (s - t) * (s - t),
        }
    }

    /// `∂φ/∂s`
    #[inline]
    pub fn d1(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => alpha * s.powf(alpha - 1.0) * t.powf(1.0 - alpha),
            PhiForm::RelativeEntropy => 1.0 + (s / t).ln(),
            PhiForm::SquaredDifference => 2.0 * (s - t),
        }
    }

    /// `∂φ/∂t`
    #[inline]
    pub fn d2(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => (1.0 - alpha) * s.powf(alpha) * t.powf(-alpha),
            PhiForm::RelativeEntropy => -s / t,
            PhiForm::SquaredDifference => -2.0 * (s - t),
        }
    }

    pub fn d11(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => {
                alpha * (alpha - 1.0) * s.powf(alpha - 2.0) * t.powf(1.0 - alpha)
            }
            PhiForm::RelativeEntropy => 1.0 / s,
            PhiForm::SquaredDifference => 2.0,
        }
    }

    pub fn d22(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => {
                -alpha * (1.0 - alpha) * s.powf(alpha) * t.powf(-alpha - 1.0)
            }
            PhiForm::RelativeEntropy => s / (t * t),
            PhiForm::SquaredDifference => 2.0,
        }
    }

    pub fn d12(&self, s: f64, t: f64) -> f64 {
        match self.form {
            PhiForm::Power { alpha } => alpha * (1.0 - alpha) * s.powf(alpha - 1.0) * t.powf(-alpha),
            PhiForm::RelativeEntropy => -1.0 / t,
            PhiForm::SquaredDifference => -2.0,
        }
    }
}

/// Rejects densities that are not strictly positive on a grid over `domain`.
fn check_positive<F: Fn(f64) -> f64>(f: F, domain: Interval, points: usize) -> Result<()> {
    let points = points.max(2);
    let mut worst = (f64::INFINITY, domain.lo);
    for i in 0..points {
        let x = if i + 1 == points {
            domain.hi
        } else {
            domain.lo + domain.len() * i as f64 / (points - 1) as f64
        };
        let v = f(x);
        if v.is_nan() || v <= worst.0 {
            worst = (v, x);
        }
    }
    if worst.0 > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveDensity {
            min: worst.0,
            at: worst.1,
        })
    }
}

fn integrate_phi<F, G>(
    spec: &DivergenceSpec,
    f: F,
    g: G,
    breaks: &[f64],
    quad: Quadrature,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    quad.validate()?;
    let phi = spec.phi();
    let r = quad.integrate(|x| phi.value(f(x), g(x)), breaks);
    if r.value.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFiniteIntegral)
    }
}

/// `∫ φ(f, g)` over `domain` (before the Tsallis/Rényi transform).
pub fn functional_integral<F, G>(
    spec: &DivergenceSpec,
    f: F,
    g: G,
    domain: Interval,
    quad: Quadrature,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    integrate_phi(spec, f, g, &[domain.lo, domain.hi], quad).map(|r| r.value)
}

/// Exact divergence between two known densities by adaptive Simpson
/// quadrature starting at `quad_points` nodes.
pub fn true_divergence<F, G>(
    spec: &DivergenceSpec,
    f: F,
    g: G,
    domain: Interval,
    quad_points: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    true_divergence_with(spec, f, g, domain, Quadrature::starting_at(quad_points))
}

pub fn true_divergence_with<F, G>(
    spec: &DivergenceSpec,
    f: F,
    g: G,
    domain: Interval,
    quad: Quadrature,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_positive(&f, domain, quad.start_nodes)?;
    check_positive(&g, domain, quad.start_nodes)?;
    let integral = functional_integral(spec, &f, &g, domain, quad)?;
    spec.finish(integral)
}

/// Value the estimate enters `φ` with: clipped for log/power functionals,
/// raw for L2.
fn plug<'a>(spec: &DivergenceSpec, est: &'a WaveletDensityEstimate) -> impl Fn(f64) -> f64 + 'a {
    let clip = spec.clips_estimates();
    move |x| {
        if clip {
            est.evaluate_clipped(x)
        } else {
            est.evaluate(x)
        }
    }
}

/// Hellinger integral / functional value `∫ φ(f_n, g)` before transforms.
pub fn one_sided_f_integral<G: Fn(f64) -> f64>(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    g: G,
    quad_points: usize,
) -> Result<f64> {
    let domain = f_est.domain();
    check_positive(&g, domain, quad_points)?;
    integrate_phi(spec, plug(spec, f_est), g, &f_est.breaks(), Quadrature::starting_at(quad_points))
        .map(|r| r.value)
}

/// `J(f_n, g)` with `g` known.
pub fn estimate_one_sided_f<G: Fn(f64) -> f64>(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    g: G,
    quad_points: usize,
) -> Result<f64> {
    spec.finish(one_sided_f_integral(spec, f_est, g, quad_points)?)
}

pub fn one_sided_g_integral<F: Fn(f64) -> f64>(
    spec: &DivergenceSpec,
    f: F,
    g_est: &WaveletDensityEstimate,
    quad_points: usize,
) -> Result<f64> {
    let domain = g_est.domain();
    check_positive(&f, domain, quad_points)?;
    integrate_phi(spec, f, plug(spec, g_est), &g_est.breaks(), Quadrature::starting_at(quad_points))
        .map(|r| r.value)
}

/// `J(f, g_n)` with `f` known.
pub fn estimate_one_sided_g<F: Fn(f64) -> f64>(
    spec: &DivergenceSpec,
    f: F,
    g_est: &WaveletDensityEstimate,
    quad_points: usize,
) -> Result<f64> {
    spec.finish(one_sided_g_integral(spec, f, g_est, quad_points)?)
}

pub fn two_sided_integral(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    g_est: &WaveletDensityEstimate,
    quad_points: usize,
) -> Result<f64> {
    if f_est.domain() != g_est.domain() {
        return Err(Error::DomainMismatch);
    }
    if f_est.n() != g_est.n() {
        return Err(Error::SampleSizeMismatch {
            n_f: f_est.n(),
            n_g: g_est.n(),
        });
    }
    let mut breaks = f_est.breaks();
    if g_est.level() != f_est.level() {
        breaks.extend(g_est.breaks());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    integrate_phi(
        spec,
        plug(spec, f_est),
        plug(spec, g_est),
        &breaks,
        Quadrature::starting_at(quad_points),
    )
    .map(|r| r.value)
}

/// `J(f_n, g_n)` from two samples of equal size.
pub fn estimate_two_sided(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    g_est: &WaveletDensityEstimate,
    quad_points: usize,
) -> Result<f64> {
    spec.finish(two_sided_integral(spec, f_est, g_est, quad_points)?)
}
