//! Linear wavelet density estimator `f_n(x) = n⁻¹ Σ_i K_{j_n}(x, X_i)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Interval, Quadrature};
use crate::wavelet::{ProjectionKernel, ScalingFunction};

/// Floor applied to estimates inside logarithms and fractional powers.
pub const DEFAULT_CLIP_FLOOR: f64 = 1e-4;

/// Resolution level with `2^{j_n} ≈ n^{1/4}`: `max(1, round(log2(n) / 4))`.
pub fn resolution_level(n: usize) -> u32 {
    let j = ((n.max(1) as f64).log2() / 4.0).round();
    (j as u32).max(1)
}

/// Uniform grid of `size` points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub size: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("size must be at least 2, got {size}"),
            });
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("bad bounds [{lo}, {hi}]"),
            });
        }
        Ok(Self { lo, hi, size })
    }

    pub fn over(domain: Interval, size: usize) -> Result<Self> {
        Self::new(domain.lo, domain.hi, size)
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.size {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.size - 1) as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(|i| self.point(i))
    }
}

/// Fitted estimator: empirical scaling coefficients
/// `α̂_k = n⁻¹ Σ_i 2^{j/2} φ(2^j X_i − k)` at level `j`.
#[derive(Debug, Clone)]
pub struct WaveletDensityEstimate {
    kernel: ProjectionKernel,
    n: usize,
    k_min: i64,
    coeffs: Vec<f64>,
    domain: Interval,
    clip_floor: f64,
}

/// Fits at the level chosen by [`resolution_level`].
pub fn fit_density(
    sample: &[f64],
    scaling: Arc<ScalingFunction>,
    domain: Interval,
    clip_floor: f64,
) -> Result<WaveletDensityEstimate> {
    let level = resolution_level(sample.len());
    WaveletDensityEstimate::fit_at_level(sample, scaling, level, domain, clip_floor)
}

impl WaveletDensityEstimate {
    pub fn fit_at_level(
        sample: &[f64],
        scaling: Arc<ScalingFunction>,
        level: u32,
        domain: Interval,
        clip_floor: f64,
    ) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(clip_floor >= 0.0 && clip_floor.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "clip_floor",
                reason: format!("must be finite and non-negative, got {clip_floor}"),
            });
        }
        if let Some((index, &value)) = sample
            .iter()
            .enumerate()
            .find(|(_, x)| !domain.contains(**x))
        {
            return Err(Error::OutOfDomainValue {
                index,
                value,
                lo: domain.lo,
                hi: domain.hi,
            });
        }

        let kernel = ProjectionKernel::new(scaling, level);
        let a = kernel.dilation();
        let (k_min, k_max) = kernel.shifts_over(domain);
        let mut coeffs = vec![0.0; (k_max - k_min + 1) as usize];
        let phi = kernel.scaling().clone();
        for &x in sample {
            let u = a * domain.close_right(x);
            for k in kernel.shifts_at(u) {
                coeffs[(k - k_min) as usize] += phi.eval(u - k as f64);
            }
        }
        // Stored as `2^{j/2} α̂_k` so dyadic histograms evaluate exactly.
        let n = sample.len() as f64;
        coeffs.iter_mut().for_each(|c| *c = *c * a / n);

        Ok(Self {
            kernel,
            n: sample.len(),
            k_min,
            coeffs,
            domain,
            clip_floor,
        })
    }

    pub fn kernel(&self) -> &ProjectionKernel {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.kernel.level()
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn clip_floor(&self) -> f64 {
        self.clip_floor
    }

    /// `(k, α̂_k)` pairs.
    pub fn coefficients(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.k_min + i as i64, *c / self.kernel.dilation().sqrt()))
    }

    /// `f_n(x) = Σ_k α̂_k 2^{j/2} φ(2^j x − k)`; raw, possibly negative.
    pub fn evaluate(&self, x: f64) -> f64 {
        let a = self.kernel.dilation();
        let u = a * self.domain.close_right(x);
        let phi = self.kernel.scaling();
        let k_max = self.k_min + self.coeffs.len() as i64 - 1;
        let mut acc = 0.0;
        for k in self.kernel.shifts_at(u) {
            if k >= self.k_min && k <= k_max {
                acc += self.coeffs[(k - self.k_min) as usize] * phi.eval(u - k as f64);
            }
        }
        acc
    }

    /// `max(f_n(x), ε_c)`, the value fed to logarithms and powers.
    pub fn evaluate_clipped(&self, x: f64) -> f64 {
        self.evaluate(x).max(self.clip_floor)
    }

    /// Pointwise values on a grid inside the domain; no clipping.
    pub fn evaluate_on_grid(&self, grid: &UniformGrid) -> Result<Vec<f64>> {
        if !(self.domain.contains(grid.lo) && self.domain.contains(grid.hi)) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!(
                    "[{}, {}] leaves the domain [{}, {}]",
                    grid.lo, grid.hi, self.domain.lo, self.domain.hi
                ),
            });
        }
        Ok(grid.points().map(|x| self.evaluate(x)).collect())
    }

    /// Breakpoints over `domain` between which `f_n` is smooth.
    pub fn breaks(&self) -> Vec<f64> {
        self.domain.lattice_breaks(1.0 / self.kernel.dilation())
    }

    /// Hull of the supports of the basis functions carrying the estimate.
    pub fn support(&self) -> Interval {
        let a = self.kernel.dilation();
        let (b1, b2) = self.kernel.scaling().support();
        let k_max = self.k_min + self.coeffs.len() as i64 - 1;
        Interval {
            lo: (self.k_min as f64 + b1) / a,
            hi: (k_max as f64 + b2) / a,
        }
    }

    /// `∫ f_n` over its whole support on a `2^12`-interval Simpson grid.
    pub fn mass(&self) -> f64 {
        let support = self.support();
        let breaks = support.lattice_breaks(1.0 / self.kernel.dilation());
        Quadrature::fixed((1 << 12) + 1)
            .integrate(|x| self.evaluate_unclosed(x), &breaks)
            .value
    }

    /// `∫ f_n` restricted to the domain.
    pub fn domain_mass(&self) -> f64 {
        Quadrature::fixed((1 << 12) + 1)
            .integrate(|x| self.evaluate(x), &self.breaks())
            .value
    }

    fn evaluate_unclosed(&self, x: f64) -> f64 {
        let a = self.kernel.dilation();
        let u = a * x;
        let phi = self.kernel.scaling();
        let k_max = self.k_min + self.coeffs.len() as i64 - 1;
        self.kernel
            .shifts_at(u)
            .filter(|k| *k >= self.k_min && *k <= k_max)
            .map(|k| self.coeffs[(k - self.k_min) as usize] * phi.eval(u - k as f64))
            .sum::<f64>()
    }
}

/// Sup-norm distance `a_n = ‖f_n − f‖_∞` measured on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormReport {
    pub a_n: f64,
    pub grid_size: usize,
    pub level: u32,
}

pub fn sup_norm_error<F: Fn(f64) -> f64>(
    est: &WaveletDensityEstimate,
    truth: F,
    grid_size: usize,
) -> Result<SupNormReport> {
    if grid_size < 1 << 10 {
        return Err(Error::InvalidParameter {
            name: "grid_size",
            reason: format!("must be at least 1024, got {grid_size}"),
        });
    }
    let grid = UniformGrid::over(est.domain(), grid_size)?;
    let a_n = grid
        .points()
        .map(|x| (est.evaluate(x) - truth(x)).abs())
        .fold(0.0, f64::max);
    Ok(SupNormReport {
        a_n,
        grid_size,
        level: est.level(),
    })
}
