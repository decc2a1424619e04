//! Composite Simpson quadrature over compact intervals.
//!
//! Integrands are split at caller-supplied breakpoints and each piece is
//! integrated on its own uniform grid. Piece right endpoints are evaluated at
//! their left limit, so right-continuous step functions (the Haar scaling
//! function and anything built from it) integrate exactly piece by piece.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of Simpson nodes for divergence integrals.
pub const DEFAULT_NODES: usize = (1 << 12) + 1;
/// Upper bound on the node count reached by automatic doubling.
pub const MAX_NODES: usize = (1 << 16) + 1;
/// Stopping tolerance on successive Simpson values.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidParameter {
                name: "domain",
                reason: format!("need finite lo < hi, got [{lo}, {hi}]"),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// Maps the closed right endpoint onto its left neighbour so that
    /// half-open dyadic cells `[k 2^-j, (k+1) 2^-j)` tile the closed domain.
    pub fn close_right(&self, x: f64) -> f64 {
        if x >= self.hi {
            self.hi.next_down()
        } else {
            x
        }
    }

    /// Sorted breakpoints: `lo`, every multiple of `spacing` strictly inside,
    /// and `hi`.
    pub fn lattice_breaks(&self, spacing: f64) -> Vec<f64> {
        let mut breaks = vec![self.lo];
        let first = (self.lo / spacing).floor() as i64 + 1;
        let mut k = first;
        loop {
            let x = k as f64 * spacing;
            if x >= self.hi {
                break;
            }
            if x > self.lo {
                breaks.push(x);
            }
            k += 1;
        }
        breaks.push(self.hi);
        breaks
    }
}

/// Value of an integral together with the number of nodes spent on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub nodes: usize,
}

/// Fixed composite Simpson rule with `intervals` (even, ≥ 2) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let m = even_at_least_two(intervals);
    let h = (b - a) / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..m {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b.next_down()))
}

/// Composite Simpson over the pieces delimited by `breaks` (sorted, first
/// and last entries are the integration bounds). `intervals` is the total
/// budget; each piece receives a share proportional to its length, at least
/// two subintervals.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], intervals: usize) -> f64 {
    assert!(breaks.len() >= 2, "need at least one piece");
    let total = breaks[breaks.len() - 1] - breaks[0];
    breaks
        .windows(2)
        .map(|w| {
            let share = (intervals as f64 * (w[1] - w[0]) / total).round() as usize;
            simpson(&f, w[0], w[1], share)
        })
        .sum()
}

fn even_at_least_two(m: usize) -> usize {
    let m = m.max(2);
    m + m % 2
}

/// Simpson quadrature that doubles its grid until two successive values
/// agree to `tol` or the node cap is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub start_nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            start_nodes: DEFAULT_NODES,
            max_nodes: MAX_NODES,
            tol: DEFAULT_TOL,
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    intervals: usize,
    trapezoid: f64,
}

impl Piece {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, intervals: usize) -> Self {
        let h = (b - a) / intervals as f64;
        let inner: f64 = (1..intervals).map(|i| f(a + i as f64 * h)).sum();
        Self {
            a,
            b,
            intervals,
            trapezoid: h * (0.5 * f(a) + inner + 0.5 * f(b.next_down())),
        }
    }

    fn refine<F: Fn(f64) -> f64>(&mut self, f: &F) {
        let h = (self.b - self.a) / (2 * self.intervals) as f64;
        let mids: f64 = (0..self.intervals)
            .map(|i| f(self.a + (2 * i + 1) as f64 * h))
            .sum();
        self.trapezoid = 0.5 * self.trapezoid + h * mids;
        self.intervals *= 2;
    }
}

impl Quadrature {
    /// Fixed grid: no doubling beyond `nodes`.
    pub fn fixed(nodes: usize) -> Self {
        Self {
            start_nodes: nodes,
            max_nodes: nodes,
            tol: DEFAULT_TOL,
        }
    }

    /// Starts at `nodes` and doubles up to the larger of `nodes` and the
    /// default cap.
    pub fn starting_at(nodes: usize) -> Self {
        Self {
            start_nodes: nodes,
            max_nodes: nodes.max(MAX_NODES),
            tol: DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_nodes < 3 {
            return Err(Error::InvalidParameter {
                name: "quad_points",
                reason: format!("need at least 3 Simpson nodes, got {}", self.start_nodes),
            });
        }
        Ok(())
    }

    /// Integrates over the pieces delimited by `breaks`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> QuadResult {
        assert!(breaks.len() >= 2, "need at least one piece");
        let total_len = breaks[breaks.len() - 1] - breaks[0];
        let budget = even_at_least_two(self.start_nodes.saturating_sub(1));

        // Each piece starts from half its Simpson budget so that the first
        // Simpson value is (4 T(m) - T(m/2)) / 3.
        let mut pieces: Vec<Piece> = breaks
            .windows(2)
            .map(|w| {
                let share = (budget as f64 * (w[1] - w[0]) / total_len).round() as usize;
                let m = even_at_least_two(share);
                Piece::new(&f, w[0], w[1], m / 2)
            })
            .collect();
        let coarse: f64 = pieces.iter().map(|p| p.trapezoid).sum();
        for p in pieces.iter_mut() {
            p.refine(&f);
        }
        let fine: f64 = pieces.iter().map(|p| p.trapezoid).sum();
        let mut value = (4.0 * fine - coarse) / 3.0;
        let mut intervals: usize = pieces.iter().map(|p| p.intervals).sum();

        while 2 * intervals < self.max_nodes {
            let coarse = pieces.iter().map(|p| p.trapezoid).sum::<f64>();
            for p in pieces.iter_mut() {
                p.refine(&f);
            }
            let fine = pieces.iter().map(|p| p.trapezoid).sum::<f64>();
            let next = (4.0 * fine - coarse) / 3.0;
            intervals *= 2;
            let converged = (next - value).abs() < self.tol;
            value = next;
            if converged || !value.is_finite() {
                break;
            }
        }
        QuadResult {
            value,
            nodes: intervals + 1,
        }
    }

    /// Integrates over `domain` without interior breakpoints.
    pub fn integrate_over<F: Fn(f64) -> f64>(&self, f: F, domain: Interval) -> QuadResult {
        self.integrate(f, &[domain.lo, domain.hi])
    }
}
