//! Seeded Monte Carlo experiments over the synthetic catalog: rate sweeps,
//! normality of the standardized estimates, interval coverage and the
//! size/power of the goodness-of-fit test.
//!
//! Replicate `r` draws from `base_seed ⊕ r·0x9E3779B97F4A7C15`; the sample of
//! `f` uses stream 0, the sample of `g` (two-sided runs) stream 1 and the
//! null sample of the goodness-of-fit test stream 2. Rows come back ordered
//! by `(n, replicate)` under either execution mode.

pub mod config;
mod parallel;
mod result;

use std::sync::Arc;

pub use config::{ExperimentConfig, ExperimentKind, MIN_REPLICATES};
pub use result::{rows_from_csv, Aggregates, ExperimentResult, NAggregate, Row};

use crate::density::{fit_density, sup_norm_error, WaveletDensityEstimate};
use crate::error::{Error, Result};
use crate::inference::{
    h_functions, one_sided_f_report, two_sided_report, EstimateReport, PipelineOptions,
    DEGENERATE_NULL_WARNING, SIGMA_FLOOR,
};
use crate::quadrature::{simpson, MAX_NODES};
use crate::rng::{replicate_seed, PRNG_NAME};
use crate::synthetic::{oracle_divergence, sample_stream, SyntheticDensity};
use crate::wavelet::ScalingFunction;

/// How replicates are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Rayon thread pool (falls back to sequential without the `parallel`
    /// feature).
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

/// Sizes the global worker pool used by [`Execution::Parallel`]. Must be
/// called before the first parallel run; without the `parallel` feature
/// this is a no-op.
pub fn set_thread_count(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::InvalidParameter {
            name: "threads",
            reason: "must be at least 1".into(),
        });
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameter {
            name: "threads",
            reason: e.to_string(),
        })?;
    Ok(())
}

/// Runs the experiment named in the config.
pub fn run(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    match config.experiment {
        ExperimentKind::RateSweep => run_rate_sweep(config, exec),
        ExperimentKind::Normality => run_normality(config, exec),
        ExperimentKind::Coverage => run_coverage(config, exec),
        ExperimentKind::GofSizePower => run_gof(config, exec),
    }
}

pub fn run_rate_sweep(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::RateSweep)?;
    simulate(config, exec)
}

/// Fails with `DegenerateVariance` when the median `σ̂` at some `n` is
/// below the floor.
pub fn run_normality(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Normality)?;
    let result = simulate(config, exec)?;
    if let Some(agg) = result
        .aggregates
        .per_n
        .iter()
        .find(|a| a.median_sigma_hat < SIGMA_FLOOR)
    {
        return Err(Error::DegenerateVariance {
            median: agg.median_sigma_hat,
            floor: SIGMA_FLOOR,
        });
    }
    Ok(result)
}

pub fn run_coverage(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Coverage)?;
    simulate(config, exec)
}

/// Rejection rates under H₁ (`f = density_f`) and under H₀ (a second
/// sample drawn from `density_g`).
pub fn run_gof(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::GofSizePower)?;
    simulate(config, exec)
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment == kind {
        Ok(())
    } else {
        Err(Error::InvalidConfig {
            field: "experiment",
            reason: format!("expected {kind:?}, got {:?}", config.experiment),
        })
    }
}

/// Everything a replicate needs, shared across threads.
struct Setup<'a> {
    config: &'a ExperimentConfig,
    f: SyntheticDensity,
    g: SyntheticDensity,
    scaling: Arc<ScalingFunction>,
    j_oracle: f64,
    opts: PipelineOptions,
}

fn simulate(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    config.validate()?;
    let (f, g) = config.densities()?;
    let spec = &config.spec;
    let scaling = Arc::new(ScalingFunction::build(config.wavelet, config.table_resolution)?);
    let j_oracle = oracle_divergence(spec, &f, &g)?;
    let gof = config.experiment == ExperimentKind::GofSizePower;
    let setup = Setup {
        config,
        f,
        g,
        scaling,
        j_oracle,
        opts: PipelineOptions {
            quad_points: config.quad_points,
            variance_nodes: config.variance_nodes,
            ci_level: config.ci_level,
            null_value: gof.then(|| spec.kind.null_value()),
        },
    };

    let influence = h_functions(spec, |x| f.pdf(x), |x| g.pdf(x))?;
    let domain = f.support();
    let a1 = simpson(|x| influence.h1(x).abs(), domain.lo, domain.hi, MAX_NODES - 1);
    let a2 = simpson(|x| influence.h2(x).abs(), domain.lo, domain.hi, MAX_NODES - 1);

    let reps = config.replicates;
    let tasks = config.n_values.len() * reps;
    let rows = parallel::ordered_map(tasks, exec, |t| {
        replicate(&setup, config.n_values[t / reps], t % reps)
    })
    .into_iter()
    .collect::<Result<Vec<Row>>>()?;

    let mut warnings = Vec::new();
    if gof || f == g {
        warnings.push(DEGENERATE_NULL_WARNING.to_string());
    }
    Ok(ExperimentResult {
        config: config.clone(),
        prng: PRNG_NAME.to_string(),
        j_oracle,
        a1,
        a2,
        aggregates: Aggregates::from_rows(&rows),
        warnings,
        rows,
    })
}

fn fit(setup: &Setup, xs: &[f64]) -> Result<WaveletDensityEstimate> {
    fit_density(
        xs,
        setup.scaling.clone(),
        setup.f.support(),
        setup.config.clip_floor,
    )
}

fn replicate(setup: &Setup, n: usize, r: usize) -> Result<Row> {
    let config = setup.config;
    let spec = &config.spec;
    let seed = replicate_seed(config.base_seed, r as u64);
    let (f, g) = (setup.f, setup.g);

    let xs = sample_stream(&f, n, seed, 0);
    let f_est = fit(setup, &xs)?;
    let a_n = sup_norm_error(&f_est, |x| f.pdf(x), config.grid_size)?.a_n;

    let (report, b_n) = if config.two_sided {
        let ys = sample_stream(&g, n, seed, 1);
        let g_est = fit(setup, &ys)?;
        let b_n = sup_norm_error(&g_est, |x| g.pdf(x), config.grid_size)?.a_n;
        let report = two_sided_report(spec, &f_est, &xs, &g_est, &ys, &setup.opts)?;
        (report, Some(b_n))
    } else {
        let report = one_sided_f_report(spec, &f_est, &xs, |x| g.pdf(x), &setup.opts)?;
        (report, None)
    };

    let null: Option<EstimateReport> = match setup.opts.null_value {
        Some(_) => {
            let zs = sample_stream(&g, n, seed, 2);
            let z_est = fit(setup, &zs)?;
            Some(one_sided_f_report(spec, &z_est, &zs, |x| g.pdf(x), &setup.opts)?)
        }
        None => None,
    };

    let sqrt_n = (n as f64).sqrt();
    let c_n = b_n.map_or(a_n, |b| a_n.max(b));
    let abs_error = (report.estimate - setup.j_oracle).abs();
    let rejects = |p: Option<f64>| p.map(|p| p < config.test_level);
    Ok(Row {
        n,
        replicate: r,
        seed,
        j_n: report.j_n,
        estimate: report.estimate,
        sigma_hat: report.sigma_hat,
        a_n,
        b_n,
        c_n,
        abs_error,
        ratio: abs_error / c_n,
        remainder: sqrt_n * c_n * c_n,
        z: sqrt_n * (report.estimate - setup.j_oracle) / report.sigma_hat.max(SIGMA_FLOOR),
        ci_lo: report.ci[0],
        ci_hi: report.ci[1],
        covered: report.covers(setup.j_oracle),
        p_value: report.p_value,
        rejected: rejects(report.p_value),
        null_estimate: null.as_ref().map(|r| r.estimate),
        null_sigma_hat: null.as_ref().map(|r| r.sigma_hat),
        null_p_value: null.as_ref().and_then(|r| r.p_value),
        null_rejected: null.as_ref().and_then(|r| rejects(r.p_value)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DivergenceSpec;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            kind,
            "BUMP",
            "U",
            DivergenceSpec::l2(),
            vec![64, 256],
            50,
            11,
        );
        c.grid_size = 1024;
        c.quad_points = 513;
        c.wavelet = crate::wavelet::Family::Haar;
        c
    }

    #[test]
    fn rows_are_ordered_and_consistent() {
        let result = run(&small(ExperimentKind::Coverage), Execution::Parallel).unwrap();
        assert_eq!(result.rows.len(), 100);
        for (i, row) in result.rows.iter().enumerate() {
            assert_eq!(row.n, [64, 256][i / 50]);
            assert_eq!(row.replicate, i % 50);
        }
        assert_eq!(Aggregates::from_rows(&result.rows), result.aggregates);
        let seq = run(&small(ExperimentKind::Coverage), Execution::Sequential).unwrap();
        assert_eq!(seq, result);
        // h₁ = 2(f − g) changes sign at x = (1 ± 1/√3)/2.
        let antiderivative = |x: f64| 2.4 * x * x - 1.6 * x.powi(3) - 0.8 * x;
        let root = |s: f64| 0.5 * (1.0 + s / 3f64.sqrt());
        let a1 = 4.0 * (antiderivative(root(1.0)) - antiderivative(root(-1.0)));
        assert!((result.a1 - a1).abs() < 1e-9, "{} vs {a1}", result.a1);
    }

    #[test]
    fn gof_fills_null_columns() {
        let result = run(&small(ExperimentKind::GofSizePower), Execution::Parallel).unwrap();
        assert!(result.rows.iter().all(|r| r.null_p_value.is_some() && r.rejected.is_some()));
        assert_eq!(result.warnings, vec![DEGENERATE_NULL_WARNING.to_string()]);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        assert!(matches!(
            run_gof(&small(ExperimentKind::Coverage), Execution::Sequential),
            Err(Error::InvalidConfig { field: "experiment", .. })
        ));
    }
}
