use std::sync::Arc;

use super::ScalingFunction;
use crate::error::{Error, Result};
use crate::quadrature::{simpson_pieces, Interval};

/// Orthogonal projection kernel `K_j(x, y) = 2^j Σ_k φ(2^j x − k) φ(2^j y − k)`.
#[derive(Debug, Clone)]
pub struct ProjectionKernel {
    scaling: Arc<ScalingFunction>,
    level: u32,
}

impl ProjectionKernel {
    pub fn new(scaling: Arc<ScalingFunction>, level: u32) -> Self {
        Self { scaling, level }
    }

    pub fn scaling(&self) -> &Arc<ScalingFunction> {
        &self.scaling
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `2^j`.
    #[inline]
    pub fn dilation(&self) -> f64 {
        (1u64 << self.level) as f64
    }

    /// Translations `k` whose `φ(u − k)` can be nonzero.
    #[inline]
    pub(crate) fn shifts_at(&self, u: f64) -> std::ops::RangeInclusive<i64> {
        let (b1, b2) = self.scaling.support();
        ((u - b2).ceil() as i64)..=((u - b1).floor() as i64)
    }

    /// Range of `k` whose `φ_{jk}` overlaps `domain`.
    pub(crate) fn shifts_over(&self, domain: Interval) -> (i64, i64) {
        let (b1, b2) = self.scaling.support();
        let a = self.dilation();
        ((a * domain.lo - b2).ceil() as i64, (a * domain.hi - b1).floor() as i64)
    }

    /// Spacing in `y` of the breakpoints where `K_j(x, ·)` may be non-smooth.
    pub(crate) fn knot_spacing(&self) -> f64 {
        self.scaling.knot_spacing() / self.dilation()
    }

    /// Kernel value; the terms are summed in increasing `k` over the shifts
    /// that keep both arguments inside the support, so the result is exactly
    /// symmetric in `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let a = self.dilation();
        let (u, v) = (a * x, a * y);
        let (b1, b2) = self.scaling.support();
        let k_lo = (u.max(v) - b2).ceil() as i64;
        let k_hi = (u.min(v) - b1).floor() as i64;
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            let kf = k as f64;
            acc += self.scaling.eval(u - kf) * self.scaling.eval(v - kf);
        }
        a * acc
    }

    /// Closed interval outside of which `K_j(x, ·)` vanishes.
    pub fn support_in_y(&self, x: f64) -> Interval {
        let a = self.dilation();
        let (b1, b2) = self.scaling.support();
        let shifts = self.shifts_at(a * x);
        Interval {
            lo: (*shifts.start() as f64 + b1) / a,
            hi: (*shifts.end() as f64 + b2) / a,
        }
    }
}

/// `K_j(h)(x) = ∫ K_j(x, y) h(y) dy` over `domain ∩ supp K_j(x, ·)` by
/// direct composite Simpson quadrature.
///
/// `quad_points` fixes a uniform grid over `domain`; at least four of its
/// nodes must fall inside the effective support. The integral is split at
/// the kernel's knots so each piece is smooth.
pub fn kernel_transform<H: Fn(f64) -> f64>(
    kernel: &ProjectionKernel,
    h: H,
    domain: Interval,
    x: f64,
    quad_points: usize,
) -> Result<f64> {
    if quad_points < 64 {
        return Err(Error::InvalidParameter {
            name: "quad_points",
            reason: format!("need at least 64, got {quad_points}"),
        });
    }
    let support = kernel.support_in_y(x);
    let Some(eff) = support.intersect(&domain) else {
        return Err(Error::QuadratureUnderflow { nodes: 0 });
    };
    let spacing = domain.len() / (quad_points - 1) as f64;
    let first = ((eff.lo - domain.lo) / spacing).ceil() as i64;
    let last = ((eff.hi - domain.lo) / spacing).floor() as i64;
    let inside = (last - first + 1).max(0) as usize;
    if inside < 4 {
        return Err(Error::QuadratureUnderflow { nodes: inside });
    }
    let breaks = eff.lattice_breaks(kernel.knot_spacing());
    let pieces = breaks.len() - 1;
    let budget = quad_points.max(2 * pieces);
    Ok(simpson_pieces(|y| kernel.eval(x, y) * h(y), &breaks, budget))
}

/// `K_j(h)` held through its scaling coefficients
/// `β_k = ∫_domain 2^{j/2} φ(2^j y − k) h(y) dy`, so that
/// `K_j(h)(x) = Σ_k β_k 2^{j/2} φ(2^j x − k)`.
#[derive(Debug, Clone)]
pub struct KernelProjection {
    kernel: ProjectionKernel,
    k_min: i64,
    coeffs: Vec<f64>,
}

impl KernelProjection {
    /// `per_knot` Simpson subintervals are spent on each smooth piece of
    /// `φ` (at least 2).
    pub fn new<H: Fn(f64) -> f64>(
        kernel: &ProjectionKernel,
        h: H,
        domain: Interval,
        per_knot: usize,
    ) -> Self {
        let a = kernel.dilation();
        let (k_min, k_max) = kernel.shifts_over(domain);
        let phi = kernel.scaling();
        let (b1, b2) = phi.support();
        let knot = phi.knot_spacing();
        let norm = a.sqrt();
        let coeffs = (k_min..=k_max)
            .map(|k| {
                let kf = k as f64;
                // Substitute y = (u + k) / a.
                let lo = b1.max(a * domain.lo - kf);
                let hi = b2.min(a * domain.hi - kf);
                if lo >= hi {
                    return 0.0;
                }
                let piece = Interval { lo, hi };
                let breaks = piece.lattice_breaks(knot);
                let budget = per_knot.max(2) * (breaks.len() - 1);
                simpson_pieces(|u| phi.eval(u) * h((u + kf) / a), &breaks, budget) / norm
            })
            .collect();
        Self {
            kernel: kernel.clone(),
            k_min,
            coeffs,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = self.kernel.dilation();
        let u = a * x;
        let phi = self.kernel.scaling();
        let k_max = self.k_min + self.coeffs.len() as i64 - 1;
        let mut acc = 0.0;
        for k in self.kernel.shifts_at(u) {
            if k < self.k_min || k > k_max {
                continue;
            }
            acc += self.coeffs[(k - self.k_min) as usize] * phi.eval(u - k as f64);
        }
        acc * a.sqrt()
    }
}
