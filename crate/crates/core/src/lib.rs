//! Linear wavelet density estimation and plug-in estimation of divergence
//! functionals `J(f, g) = ∫ φ(f(x), g(x)) dx` between univariate densities.
//!
//! The crate covers:
//!
//! * compactly supported scaling functions (Haar, Daubechies 2..=10) built by
//!   the cascade algorithm, and the orthogonal projection kernel
//!   `K_j(x, y) = 2^j Σ_k φ(2^j x − k) φ(2^j y − k)` ([`wavelet`]);
//! * the linear estimator `f_n(x) = n⁻¹ Σ_i K_{j_n}(x, X_i)` with
//!   `2^{j_n} ≈ n^{1/4}` ([`density`]);
//! * Hellinger-integral, Tsallis, Rényi, Kullback-Leibler and L2 divergences,
//!   their exact values by quadrature and their one- and two-sided plug-in
//!   estimates ([`divergence`]);
//! * plug-in asymptotic variances, confidence intervals and goodness-of-fit
//!   statistics ([`inference`]);
//! * a catalog of bounded synthetic densities on `[0, 1]` with exact samplers
//!   ([`synthetic`]) and a Monte Carlo laboratory ([`simulation`]).

pub mod density;
pub mod divergence;
mod error;
pub mod inference;
pub mod io;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod synthetic;
pub mod wavelet;

pub use density::{fit_density, resolution_level, SupNormReport, UniformGrid, WaveletDensityEstimate};
pub use divergence::{DivergenceKind, DivergenceSpec, PhiFunctional};
pub use error::{Error, Result};
pub use inference::{EstimateReport, Side, VarianceEstimate};
pub use quadrature::Interval;
pub use synthetic::SyntheticDensity;
pub use wavelet::{Family, ProjectionKernel, ScalingFunction};
