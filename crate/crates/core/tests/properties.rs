use std::sync::Arc;

use proptest::prelude::*;
use wavediv::divergence::{true_divergence, DivergenceKind};
use wavediv::inference::{plug_in_variance, Side};
use wavediv::quadrature::DEFAULT_NODES;
use wavediv::synthetic::{catalog, sample};
use wavediv::wavelet::kernel_transform;
use wavediv::{
    fit_density, DivergenceSpec, Family, Interval, ProjectionKernel, ScalingFunction,
    SyntheticDensity, WaveletDensityEstimate,
};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Haar), (2u8..=10).prop_map(Family::Daubechies)]
}

fn scaling(fam: Family) -> Arc<ScalingFunction> {
    Arc::new(ScalingFunction::build(fam, 12).unwrap())
}

fn all_specs(alpha: f64) -> Vec<DivergenceSpec> {
    vec![
        DivergenceSpec::hellinger(alpha).unwrap(),
        DivergenceSpec::tsallis(alpha).unwrap(),
        DivergenceSpec::renyi(alpha).unwrap(),
        DivergenceSpec::kl(),
        DivergenceSpec::l2(),
    ]
}

fn alpha() -> impl Strategy<Value = f64> {
    prop_oneof![0.2f64..0.95, 1.05f64..3.0]
}

/// Convex mixture of the catalog: positive and bounded on `[0, 1]`.
#[derive(Debug, Clone)]
struct Mixture(Vec<f64>);

impl Mixture {
    fn pdf(&self, x: f64) -> f64 {
        let total: f64 = self.0.iter().sum();
        catalog().iter().zip(&self.0).map(|(d, w)| w * d.pdf(x)).sum::<f64>() / total
    }
}

fn mixture() -> impl Strategy<Value = Mixture> {
    prop::collection::vec(0.05f64..1.0, 4).prop_map(Mixture)
}

fn haar_histogram(sample: &[f64], j: u32, x: f64) -> f64 {
    let a = (1u64 << j) as f64;
    let cell = |t: f64| ((a * t).floor() as i64).min(a as i64 - 1);
    sample.iter().filter(|&&s| cell(s) == cell(x)).count() as f64 * a / sample.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_exactly_symmetric(fam in family(), j in 0u32..6, x in -1.0f64..2.0, y in -1.0f64..2.0) {
        let k = ProjectionKernel::new(scaling(fam), j);
        prop_assert_eq!(k.eval(x, y), k.eval(y, x));
    }

    #[test]
    fn haar_kernel_matches_closed_form(j in 0u32..8, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let k = ProjectionKernel::new(scaling(Family::Haar), j);
        let a = (1u64 << j) as f64;
        let closed = if (a * x).floor() == (a * y).floor() { a } else { 0.0 };
        prop_assert_eq!(k.eval(x, y), closed);
        prop_assert_eq!(k.eval(x, x), a);
    }

    #[test]
    fn kernel_reproduces_constants_in_the_interior(fam in family(), j in 1u32..4, t in 0.0f64..1.0) {
        let k = ProjectionKernel::new(scaling(fam), j);
        let (b1, b2) = k.scaling().support();
        let margin = (b2 - b1) / k.dilation();
        let domain = Interval::new(0.0, 2.0 * margin + 1.0).unwrap();
        let x = margin + 1e-9 + t * (1.0 - 2e-9);
        let v = kernel_transform(&k, |_| 1.0, domain, x, 1 << 14).unwrap();
        prop_assert!((v - 1.0).abs() < 1e-6, "{fam} j={j} x={x}: {v}");
    }

    #[test]
    fn haar_estimate_is_the_histogram(
        sample in prop::collection::vec(0.0f64..=1.0, 1..=64),
        j in 1u32..6,
    ) {
        let est = WaveletDensityEstimate::fit_at_level(&sample, scaling(Family::Haar), j, Interval::unit(), 0.0)
            .unwrap();
        for i in 0..=512 {
            let x = i as f64 / 512.0;
            let d = (est.evaluate(x) - haar_histogram(&sample, j, x)).abs();
            prop_assert!(d <= 1e-12, "x={x}: {d}");
        }
    }

    #[test]
    fn coefficient_path_equals_kernel_path(
        fam in family(),
        sample in prop::collection::vec(0.0f64..=1.0, 2..=40),
        x in 0.0f64..1.0,
    ) {
        let est = fit_density(&sample, scaling(fam), Interval::unit(), 0.0).unwrap();
        let kernel_path = sample.iter().map(|&xi| est.kernel().eval(x, xi)).sum::<f64>() / sample.len() as f64;
        prop_assert!((est.evaluate(x) - kernel_path).abs() <= 1e-10);
    }

    #[test]
    fn self_divergence_is_null(m in mixture(), a in alpha()) {
        for spec in all_specs(a) {
            let v = true_divergence(&spec, |x| m.pdf(x), |x| m.pdf(x), Interval::unit(), DEFAULT_NODES).unwrap();
            prop_assert!((v - spec.kind.null_value()).abs() <= 1e-9, "{spec:?}: {v}");
        }
    }

    #[test]
    fn l2_is_symmetric(m1 in mixture(), m2 in mixture()) {
        let spec = DivergenceSpec::l2();
        let fg = true_divergence(&spec, |x| m1.pdf(x), |x| m2.pdf(x), Interval::unit(), DEFAULT_NODES).unwrap();
        let gf = true_divergence(&spec, |x| m2.pdf(x), |x| m1.pdf(x), Interval::unit(), DEFAULT_NODES).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-12);
    }

    #[test]
    fn true_divergences_are_nonnegative(m1 in mixture(), m2 in mixture(), a in alpha()) {
        for spec in [DivergenceSpec::kl(), DivergenceSpec::l2(), DivergenceSpec::tsallis(a).unwrap()] {
            let v = true_divergence(&spec, |x| m1.pdf(x), |x| m2.pdf(x), Interval::unit(), DEFAULT_NODES).unwrap();
            prop_assert!(v >= -1e-10, "{spec:?}: {v}");
        }
    }

    #[test]
    fn phi_partials_match_finite_differences(s in 0.1f64..3.0, t in 0.1f64..3.0, a in alpha()) {
        for spec in all_specs(a) {
            let phi = spec.phi();
            let h = 1e-5;
            let close = |fd: f64, exact: f64, tol: f64| (fd - exact).abs() <= tol * exact.abs().max(1.0);
            let d1 = (phi.value(s + h, t) - phi.value(s - h, t)) / (2.0 * h);
            let d2 = (phi.value(s, t + h) - phi.value(s, t - h)) / (2.0 * h);
            prop_assert!(close(d1, phi.d1(s, t), 1e-6), "{spec:?} d1 at ({s}, {t})");
            prop_assert!(close(d2, phi.d2(s, t), 1e-6), "{spec:?} d2 at ({s}, {t})");
            let d11 = (phi.d1(s + h, t) - phi.d1(s - h, t)) / (2.0 * h);
            let d22 = (phi.d2(s, t + h) - phi.d2(s, t - h)) / (2.0 * h);
            let d12 = (phi.d1(s, t + h) - phi.d1(s, t - h)) / (2.0 * h);
            let d21 = (phi.d2(s + h, t) - phi.d2(s - h, t)) / (2.0 * h);
            prop_assert!(close(d11, phi.d11(s, t), 1e-5), "{spec:?} d11");
            prop_assert!(close(d22, phi.d22(s, t), 1e-5), "{spec:?} d22");
            prop_assert!(close(d12, phi.d12(s, t), 1e-5), "{spec:?} d12");
            prop_assert!(close(d21, phi.d12(s, t), 1e-5), "{spec:?} d21");
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), n in 1usize..200) {
        for d in catalog() {
            let a = sample(&d, n, seed);
            prop_assert_eq!(&a, &sample(&d, n, seed));
            prop_assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    /// `f = g` makes every influence function constant, which a Haar
    /// projection reproduces exactly.
    #[test]
    fn variance_degenerates_at_the_null(m in mixture(), a in alpha(), seed in any::<u64>()) {
        let xs = sample(&SyntheticDensity::BUMP, 300, seed);
        let kernel = ProjectionKernel::new(scaling(Family::Haar), 2);
        for spec in all_specs(a) {
            let influence = wavediv::inference::h_functions(&spec, |x| m.pdf(x), |x| m.pdf(x)).unwrap();
            let v = plug_in_variance(&xs, &kernel, |x| influence.h1(x), Interval::unit(), 256, Side::FSide).unwrap();
            prop_assert!(v.sigma2 <= 1e-6, "{spec:?}: {}", v.sigma2);
        }
    }
}

/// Daubechies projections reproduce constants only away from the edges, so
/// the degenerate-null check uses interior sample points.
#[test]
fn variance_degenerates_at_the_null_for_daubechies_in_the_interior() {
    for fam in [Family::Daubechies(2), Family::Daubechies(3), Family::Daubechies(6)] {
        let kernel = ProjectionKernel::new(scaling(fam), 2);
        let (b1, b2) = kernel.scaling().support();
        let margin = (b2 - b1) / kernel.dilation();
        let domain = Interval::new(-margin, 1.0 + margin).unwrap();
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
        let lin = |x: f64| x + 1.0;
        for spec in all_specs(1.7) {
            let influence = wavediv::inference::h_functions(&spec, lin, lin).unwrap();
            let v = plug_in_variance(&xs, &kernel, |x| influence.h1(x), domain, 1024, Side::FSide).unwrap();
            assert!(v.sigma2 <= 1e-6, "{fam} {spec:?}: {}", v.sigma2);
        }
    }
}

#[test]
fn alpha_families_approach_kullback_leibler() {
    let eps = 1e-3;
    let pairs: Vec<(SyntheticDensity, SyntheticDensity)> = catalog()
        .into_iter()
        .flat_map(|a| catalog().into_iter().map(move |b| (a, b)))
        .collect();
    for (a, b) in pairs {
        let kl = true_divergence(&DivergenceSpec::kl(), |x| a.pdf(x), |x| b.pdf(x), Interval::unit(), DEFAULT_NODES)
            .unwrap();
        for spec in [
            DivergenceSpec::tsallis(1.0 + eps).unwrap(),
            DivergenceSpec::renyi(1.0 + eps).unwrap(),
        ] {
            let v = true_divergence(&spec, |x| a.pdf(x), |x| b.pdf(x), Interval::unit(), DEFAULT_NODES).unwrap();
            assert!((v - kl).abs() <= 0.05, "{} vs {}: {:?} {v} vs KL {kl}", a.id(), b.id(), spec.kind);
        }
    }
}

#[test]
fn influence_integrals_are_finite_on_catalog_pairs() {
    for a in catalog() {
        for b in catalog() {
            for spec in all_specs(1.5) {
                let influence = wavediv::inference::h_functions(&spec, |x| a.pdf(x), |x| b.pdf(x)).unwrap();
                let a1 = wavediv::quadrature::simpson(|x| influence.h1(x).abs(), 0.0, 1.0, 4096);
                let a2 = wavediv::quadrature::simpson(|x| influence.h2(x).abs(), 0.0, 1.0, 4096);
                assert!(a1.is_finite() && a2.is_finite(), "{} {} {:?}", a.id(), b.id(), spec.kind);
            }
        }
    }
}

#[test]
fn estimates_conserve_mass_on_synthetic_data() {
    for fam in [Family::Haar, Family::Daubechies(2), Family::Daubechies(3), Family::Daubechies(8)] {
        for d in catalog() {
            for n in [64, 4096] {
                let xs = sample(&d, n, 99);
                let est = fit_density(&xs, scaling(fam), Interval::unit(), 1e-4).unwrap();
                let mass = est.mass();
                assert!((mass - 1.0).abs() <= 1e-3, "{fam} {} n={n}: {mass}", d.id());
            }
        }
    }
}

/// One-sample Kolmogorov-Smirnov check of each sampler against its CDF.
#[test]
fn samplers_follow_their_laws() {
    let n = 20_000;
    for d in catalog() {
        let mut xs = sample(&d, n, 5);
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = d.cdf(x);
                ((i + 1) as f64 / n as f64 - c).max(c - i as f64 / n as f64)
            })
            .fold(0.0, f64::max);
        // 1.95/√n is the 0.001 critical value.
        assert!(ks < 1.95 / (n as f64).sqrt(), "{}: {ks}", d.id());
        let mean = xs.iter().sum::<f64>() / n as f64;
        let exact = wavediv::quadrature::simpson(|x| x * d.pdf(x), 0.0, 1.0, 4096);
        assert!((mean - exact).abs() < 4.0 * (1.0 / 12f64).sqrt() / (n as f64).sqrt(), "{}", d.id());
    }
}

#[test]
fn oracle_kl_is_zero_only_on_the_diagonal() {
    for a in catalog() {
        for b in catalog() {
            let v = wavediv::synthetic::oracle_divergence(&DivergenceSpec::kl(), &a, &b).unwrap();
            if a == b {
                assert!(v.abs() <= 1e-9);
            } else {
                assert!(v > 1e-9, "{} {}: {v}", a.id(), b.id());
            }
        }
    }
    assert_eq!(DivergenceKind::HellingerIntegral.null_value(), 1.0);
}
