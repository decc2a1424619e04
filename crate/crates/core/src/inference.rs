//! Plug-in asymptotic variances, confidence intervals and test statistics.
//!
//! For a linear functional `∫ f_n h`, `√n ∫ (f_n − f) h` is asymptotically
//! normal with variance `Var K_j(h)(X)`. The divergence estimators linearize
//! onto the influence functions `h₁ = ∂φ/∂s (f, g)` and `h₂ = ∂φ/∂t (f, g)`,
//! so each side contributes the empirical variance of `K_j(h)` over its
//! sample and the two-sample variance is the sum of both sides.

use serde::{Deserialize, Serialize};

use crate::density::WaveletDensityEstimate;
use crate::divergence::{self, DivergenceKind, DivergenceSpec, PhiFunctional};
use crate::error::{Error, Result};
use crate::quadrature::{Interval, DEFAULT_NODES};
use crate::stats::{normal_quantile, two_sided_p_value};
use crate::wavelet::{KernelProjection, ProjectionKernel};

/// Lower bound on `σ̂` in the denominator of test statistics.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// Default Simpson nodes per unit length of the scaling-function support
/// used for `K_j(h)` coefficients.
pub const DEFAULT_VARIANCE_NODES: usize = 256;

pub const DEGENERATE_NULL_WARNING: &str = "under H0 (f = g) the influence function is constant, \
     so the limiting variance is degenerate and the normal p-value is not calibrated";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    FSide,
    GSide,
    TwoSided,
}

/// Empirical variance of `K_j(h)(X_i)` over a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma2: f64,
    pub side: Side,
    pub mean: f64,
    pub second_moment: f64,
}

/// Influence functions `(h₁, h₂)` of a divergence at a pair of densities.
///
/// For Kullback-Leibler `h₂` is returned as `f/g`, the negative of
/// `∂φ/∂t`; only its square enters a variance.
pub struct Influence<F, G> {
    kind: DivergenceKind,
    phi: PhiFunctional,
    f: F,
    g: G,
}

pub fn h_functions<F, G>(spec: &DivergenceSpec, f: F, g: G) -> Result<Influence<F, G>>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let spec = DivergenceSpec::new(spec.kind, spec.alpha)?;
    Ok(Influence {
        kind: spec.kind,
        phi: spec.phi(),
        f,
        g,
    })
}

impl<F, G> Influence<F, G>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    pub fn h1(&self, x: f64) -> f64 {
        self.phi.d1((self.f)(x), (self.g)(x))
    }

    pub fn h2(&self, x: f64) -> f64 {
        let d2 = self.phi.d2((self.f)(x), (self.g)(x));
        match self.kind {
            DivergenceKind::KullbackLeibler => -d2,
            _ => d2,
        }
    }
}

/// `σ² = mean(v²) − mean(v)²` with `v_i = K_j(h)(X_i)`, clamped at 0.
///
/// `K_j(h)` is computed once through its scaling coefficients;
/// `quad_points` is the number of Simpson nodes per unit length of the
/// support of `φ` (at least 64).
pub fn plug_in_variance<H: Fn(f64) -> f64>(
    sample: &[f64],
    kernel: &ProjectionKernel,
    h: H,
    domain: Interval,
    quad_points: usize,
    side: Side,
) -> Result<VarianceEstimate> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if quad_points < 64 {
        return Err(Error::InvalidParameter {
            name: "quad_points",
            reason: format!("need at least 64, got {quad_points}"),
        });
    }
    let knot = kernel.scaling().knot_spacing();
    let per_knot = ((quad_points as f64 * knot).ceil() as usize).max(2);
    let projection = KernelProjection::new(kernel, &h, domain, per_knot);
    let n = sample.len() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in sample {
        let v = projection.eval(domain.close_right(x));
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n;
    let second_moment = s2 / n;
    Ok(VarianceEstimate {
        sigma2: (second_moment - mean * mean).max(0.0),
        side,
        mean,
        second_moment,
    })
}

/// One variance for one-sided estimates, one per side for two-sided ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceInput {
    OneSided(VarianceEstimate),
    TwoSided(VarianceEstimate, VarianceEstimate),
}

impl VarianceInput {
    /// Unscaled `σ²` (`σ₁² + σ₂²` in the two-sided case).
    pub fn raw_sigma2(&self) -> f64 {
        match self {
            Self::OneSided(v) => v.sigma2,
            Self::TwoSided(a, b) => a.sigma2 + b.sigma2,
        }
    }
}

/// Where and how an estimate was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelet: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known_density: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub spec: DivergenceSpec,
    pub estimate: f64,
    pub sigma_hat: f64,
    /// Unscaled variance of the influence projection(s).
    pub sigma2_raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2_g: Option<f64>,
    pub ci_level: f64,
    pub ci: [f64; 2],
    pub z_stat: Option<f64>,
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_value: Option<f64>,
    pub n: usize,
    pub j_n: u32,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EstimateReport {
    pub fn covers(&self, value: f64) -> bool {
        self.ci[0] <= value && value <= self.ci[1]
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

/// Inputs of [`report`] that travel together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportInput {
    pub estimate: f64,
    pub variance: VarianceInput,
    pub n: usize,
    pub j_n: u32,
    pub ci_level: f64,
    pub null_value: Option<f64>,
    /// Hellinger integral `I` at the estimates; required for Rényi.
    pub renyi_base: Option<f64>,
}

/// Scales the influence variance to the reported divergence, then builds
/// the interval `estimate ± z σ̂/√n` and, with a null value, the statistic
/// `√n (estimate − null)/max(σ̂, σ_floor)` with its two-sided normal p-value.
pub fn report(spec: &DivergenceSpec, input: ReportInput) -> Result<EstimateReport> {
    if !(input.ci_level > 0.0 && input.ci_level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "ci_level",
            reason: format!("must lie in (0, 1), got {}", input.ci_level),
        });
    }
    if input.n == 0 {
        return Err(Error::EmptySample);
    }
    let raw = input.variance.raw_sigma2();
    if !raw.is_finite() {
        return Err(Error::NonFiniteIntegral);
    }
    let scaled = match spec.kind {
        DivergenceKind::Tsallis => raw / spec.alpha_offset().powi(2),
        DivergenceKind::Renyi => {
            let base = input.renyi_base.ok_or(Error::MissingRenyiBase)?;
            raw / (spec.alpha_offset().powi(2) * base * base)
        }
        _ => raw,
    };
    let sigma_hat = scaled.max(0.0).sqrt();
    let sqrt_n = (input.n as f64).sqrt();
    let z = normal_quantile(1.0 - (1.0 - input.ci_level) / 2.0);
    let half = z * sigma_hat / sqrt_n;
    let (z_stat, p_value) = match input.null_value {
        Some(null) => {
            let stat = sqrt_n * (input.estimate - null) / sigma_hat.max(SIGMA_FLOOR);
            (Some(stat), Some(two_sided_p_value(stat)))
        }
        None => (None, None),
    };
    let (sigma2_f, sigma2_g) = match input.variance {
        VarianceInput::OneSided(v) => match v.side {
            Side::GSide => (None, Some(v.sigma2)),
            _ => (Some(v.sigma2), None),
        },
        VarianceInput::TwoSided(a, b) => (Some(a.sigma2), Some(b.sigma2)),
    };
    Ok(EstimateReport {
        spec: *spec,
        estimate: input.estimate,
        sigma_hat,
        sigma2_raw: raw,
        sigma2_f,
        sigma2_g,
        ci_level: input.ci_level,
        ci: [input.estimate - half, input.estimate + half],
        z_stat,
        p_value,
        null_value: input.null_value,
        n: input.n,
        j_n: input.j_n,
        provenance: Provenance::default(),
        warnings: Vec::new(),
    })
}

/// Numerical settings shared by the estimation pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub quad_points: usize,
    pub variance_nodes: usize,
    pub ci_level: f64,
    pub null_value: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            quad_points: DEFAULT_NODES,
            variance_nodes: DEFAULT_VARIANCE_NODES,
            ci_level: 0.95,
            null_value: None,
        }
    }
}

/// Estimate of `J(f, g)` from a sample of `f` against a known `g`, with the
/// plug-in variance of `h₁` evaluated at the (clipped) estimate.
pub fn one_sided_f_report<G>(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    sample: &[f64],
    g: G,
    opts: &PipelineOptions,
) -> Result<EstimateReport>
where
    G: Fn(f64) -> f64,
{
    let integral = divergence::one_sided_f_integral(spec, f_est, &g, opts.quad_points)?;
    let estimate = spec.finish(integral)?;
    let plug = |x: f64| plugged(spec, f_est, x);
    let influence = h_functions(spec, plug, &g)?;
    let var = plug_in_variance(
        sample,
        f_est.kernel(),
        |x| influence.h1(x),
        f_est.domain(),
        opts.variance_nodes,
        Side::FSide,
    )?;
    report(
        spec,
        ReportInput {
            estimate,
            variance: VarianceInput::OneSided(var),
            n: f_est.n(),
            j_n: f_est.level(),
            ci_level: opts.ci_level,
            null_value: opts.null_value,
            renyi_base: Some(integral),
        },
    )
}

/// Estimate of `J(f, g)` from two samples of equal size; `σ² = σ₁² + σ₂²`.
pub fn two_sided_report(
    spec: &DivergenceSpec,
    f_est: &WaveletDensityEstimate,
    xs: &[f64],
    g_est: &WaveletDensityEstimate,
    ys: &[f64],
    opts: &PipelineOptions,
) -> Result<EstimateReport> {
    let integral = divergence::two_sided_integral(spec, f_est, g_est, opts.quad_points)?;
    let estimate = spec.finish(integral)?;
    let f_plug = |x: f64| plugged(spec, f_est, x);
    let g_plug = |x: f64| plugged(spec, g_est, x);
    let influence = h_functions(spec, f_plug, g_plug)?;
    let var_f = plug_in_variance(
        xs,
        f_est.kernel(),
        |x| influence.h1(x),
        f_est.domain(),
        opts.variance_nodes,
        Side::FSide,
    )?;
    let var_g = plug_in_variance(
        ys,
        g_est.kernel(),
        |x| influence.h2(x),
        g_est.domain(),
        opts.variance_nodes,
        Side::GSide,
    )?;
    report(
        spec,
        ReportInput {
            estimate,
            variance: VarianceInput::TwoSided(var_f, var_g),
            n: f_est.n(),
            j_n: f_est.level(),
            ci_level: opts.ci_level,
            null_value: opts.null_value,
            renyi_base: Some(integral),
        },
    )
}

fn plugged(spec: &DivergenceSpec, est: &WaveletDensityEstimate, x: f64) -> f64 {
    if spec.clips_estimates() {
        est.evaluate_clipped(x)
    } else {
        est.evaluate(x)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::wavelet::{Family, ScalingFunction};

    fn haar_kernel(level: u32) -> ProjectionKernel {
        ProjectionKernel::new(Arc::new(ScalingFunction::build(Family::Haar, 10).unwrap()), level)
    }

    fn one(v: f64) -> VarianceInput {
        VarianceInput::OneSided(VarianceEstimate {
            sigma2: v,
            side: Side::FSide,
            mean: 0.0,
            second_moment: v,
        })
    }

    fn input(estimate: f64, variance: VarianceInput, n: usize) -> ReportInput {
        ReportInput {
            estimate,
            variance,
            n,
            j_n: 1,
            ci_level: 0.95,
            null_value: None,
            renyi_base: None,
        }
    }

    #[test]
    fn influence_functions() {
        let lin = |x: f64| x + 0.5;
        let l2 = h_functions(&DivergenceSpec::l2(), |_| 1.0, lin).unwrap();
        assert_eq!(l2.h1(0.0), 1.0);
        assert_eq!(l2.h1(1.0), -1.0);
        assert_eq!(l2.h2(0.3), -l2.h1(0.3));

        let kl = h_functions(&DivergenceSpec::kl(), lin, lin).unwrap();
        for x in [0.0, 0.4, 1.0] {
            assert_eq!(kl.h1(x), 1.0);
            assert_eq!(kl.h2(x), 1.0);
        }
        let hel = h_functions(&DivergenceSpec::hellinger(2.0).unwrap(), |_| 1.0, lin).unwrap();
        assert_eq!(hel.h1(0.5), 2.0);
    }

    #[test]
    fn constant_h_has_zero_variance() {
        let sample = [0.1, 0.2, 0.6, 0.9, 0.33, 0.999];
        let v = plug_in_variance(&sample, &haar_kernel(2), |_| 3.5, Interval::unit(), 64, Side::FSide)
            .unwrap();
        assert!(v.sigma2.abs() < 1e-10);
    }

    #[test]
    fn haar_indicator_variance_by_hand() {
        let sample = [0.1, 0.2, 0.6, 0.9];
        let v = plug_in_variance(
            &sample,
            &haar_kernel(1),
            |y| if y < 0.5 { 1.0 } else { 0.0 },
            Interval::unit(),
            64,
            Side::FSide,
        )
        .unwrap();
        assert!((v.mean - 0.5).abs() < 1e-12);
        assert!((v.sigma2 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ci_half_width_at_95() {
        let r = report(&DivergenceSpec::l2(), input(0.0, one(1.0), 100)).unwrap();
        assert!((r.ci[1] - 0.195_996_398_454_005_4).abs() < 1e-9);
        assert!((r.ci[0] + 0.195_996_398_454_005_4).abs() < 1e-9);
        assert!(r.z_stat.is_none() && r.p_value.is_none());
    }

    #[test]
    fn degenerate_null_is_floored() {
        let mut inp = input(0.25, one(0.0), 100);
        inp.null_value = Some(0.25);
        let r = report(&DivergenceSpec::l2(), inp).unwrap();
        assert_eq!(r.z_stat, Some(0.0));
        assert_eq!(r.p_value, Some(1.0));
    }

    #[test]
    fn divergence_specific_scaling() {
        let t = report(&DivergenceSpec::tsallis(2.0).unwrap(), input(0.1, one(4.0), 50)).unwrap();
        assert!((t.sigma_hat - 2.0).abs() < 1e-15);
        let t3 = report(&DivergenceSpec::tsallis(3.0).unwrap(), input(0.1, one(4.0), 50)).unwrap();
        assert!((t3.sigma_hat - 1.0).abs() < 1e-15);

        let renyi = DivergenceSpec::renyi(2.0).unwrap();
        assert_eq!(
            report(&renyi, input(0.1, one(4.0), 50)).unwrap_err(),
            Error::MissingRenyiBase
        );
        let mut inp = input(0.1, one(4.0), 50);
        inp.renyi_base = Some(2.0);
        let r = report(&renyi, inp).unwrap();
        assert!((r.sigma_hat - 1.0).abs() < 1e-15);

        let kl = report(&DivergenceSpec::kl(), input(0.1, one(4.0), 50)).unwrap();
        assert_eq!(kl.sigma_hat, 2.0);
    }

    #[test]
    fn two_sided_variances_add() {
        let a = VarianceEstimate {
            sigma2: 0.3,
            side: Side::FSide,
            mean: 0.0,
            second_moment: 0.3,
        };
        let b = VarianceEstimate {
            sigma2: 0.45,
            side: Side::GSide,
            mean: 0.0,
            second_moment: 0.45,
        };
        let r = report(&DivergenceSpec::l2(), input(0.2, VarianceInput::TwoSided(a, b), 64)).unwrap();
        assert_eq!(r.sigma2_raw, 0.3 + 0.45);
        assert_eq!(r.sigma2_f, Some(0.3));
        assert_eq!(r.sigma2_g, Some(0.45));
    }

    #[test]
    fn ci_width_scales_with_root_n() {
        let w = |n| {
            let r = report(&DivergenceSpec::l2(), input(0.0, one(2.0), n)).unwrap();
            r.ci[1] - r.ci[0]
        };
        assert!((w(100) / w(400) - 2.0).abs() < 1e-12);
        assert!((w(64) / w(4096) - 8.0).abs() < 1e-12);
    }
}
