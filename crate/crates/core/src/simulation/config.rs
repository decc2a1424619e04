use serde::{Deserialize, Serialize};

use crate::density::DEFAULT_CLIP_FLOOR;
use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::inference::DEFAULT_VARIANCE_NODES;
use crate::quadrature::DEFAULT_NODES;
use crate::synthetic::{by_id, SyntheticDensity};
use crate::wavelet::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RateSweep,
    Normality,
    Coverage,
    GofSizePower,
}

/// JSON experiment description. Unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Catalog id of the sampled density (`f`).
    pub density_f: String,
    /// Catalog id of the reference density (`g`).
    pub density_g: String,
    pub spec: DivergenceSpec,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default = "default_wavelet")]
    pub wavelet: Family,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Output stem: rows go to `<stem>.csv`, aggregates to `<stem>.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    /// Estimate both densities from samples instead of treating `g` as known.
    #[serde(default)]
    pub two_sided: bool,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    /// Nominal level of the goodness-of-fit test.
    #[serde(default = "default_test_level")]
    pub test_level: f64,
    #[serde(default = "default_table_resolution")]
    pub table_resolution: u32,
    #[serde(default = "default_clip_floor")]
    pub clip_floor: f64,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_variance_nodes")]
    pub variance_nodes: usize,
}

fn default_wavelet() -> Family {
    Family::Daubechies(2)
}
fn default_grid_size() -> usize {
    1 << 12
}
fn default_ci_level() -> f64 {
    0.95
}
fn default_test_level() -> f64 {
    0.05
}
fn default_table_resolution() -> u32 {
    12
}
fn default_clip_floor() -> f64 {
    DEFAULT_CLIP_FLOOR
}
fn default_quad_points() -> usize {
    DEFAULT_NODES
}
fn default_variance_nodes() -> usize {
    DEFAULT_VARIANCE_NODES
}

pub const MIN_REPLICATES: usize = 50;

impl ExperimentConfig {
    /// Minimal config with every optional field at its default.
    pub fn new(
        experiment: ExperimentKind,
        density_f: &str,
        density_g: &str,
        spec: DivergenceSpec,
        n_values: Vec<usize>,
        replicates: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            experiment,
            density_f: density_f.to_string(),
            density_g: density_g.to_string(),
            spec,
            n_values,
            replicates,
            base_seed,
            wavelet: default_wavelet(),
            grid_size: default_grid_size(),
            output_path: None,
            two_sided: false,
            ci_level: default_ci_level(),
            test_level: default_test_level(),
            table_resolution: default_table_resolution(),
            clip_floor: default_clip_floor(),
            quad_points: default_quad_points(),
            variance_nodes: default_variance_nodes(),
        }
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::ConfigSchema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn densities(&self) -> Result<(SyntheticDensity, SyntheticDensity)> {
        Ok((by_id(&self.density_f)?, by_id(&self.density_g)?))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidConfig { field, reason });
        if self.replicates < MIN_REPLICATES {
            return bad(
                "replicates",
                format!("need at least {MIN_REPLICATES}, got {}", self.replicates),
            );
        }
        if self.n_values.is_empty() {
            return bad("n_values", "must not be empty".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values", "must be strictly increasing".into());
        }
        if self.n_values[0] < 2 {
            return bad("n_values", "sample sizes must be at least 2".into());
        }
        if self.grid_size < 1 << 10 {
            return bad("grid_size", format!("need at least 1024, got {}", self.grid_size));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad("ci_level", format!("must lie in (0, 1), got {}", self.ci_level));
        }
        if !(self.test_level > 0.0 && self.test_level < 1.0) {
            return bad("test_level", format!("must lie in (0, 1), got {}", self.test_level));
        }
        if !(8..=20).contains(&self.table_resolution) {
            return bad(
                "table_resolution",
                format!("must lie in [8, 20], got {}", self.table_resolution),
            );
        }
        if !(self.clip_floor >= 0.0 && self.clip_floor.is_finite()) {
            return bad("clip_floor", format!("must be non-negative, got {}", self.clip_floor));
        }
        if self.quad_points < 3 {
            return bad("quad_points", format!("need at least 3, got {}", self.quad_points));
        }
        if self.variance_nodes < 64 {
            return bad(
                "variance_nodes",
                format!("need at least 64, got {}", self.variance_nodes),
            );
        }
        let (f, g) = match self.densities() {
            Ok(pair) => pair,
            Err(Error::UnknownDensity(id)) => {
                let field = if by_id(&self.density_f).is_err() {
                    "density_f"
                } else {
                    "density_g"
                };
                return bad(field, format!("unknown density id `{id}`"));
            }
            Err(e) => return Err(e),
        };
        if self.experiment == ExperimentKind::Normality && f == g {
            return bad(
                "density_g",
                "normality needs density_f != density_g (the variance degenerates at f = g)".into(),
            );
        }
        if self.experiment == ExperimentKind::GofSizePower && self.two_sided {
            return bad("two_sided", "the goodness-of-fit test uses a known g".into());
        }
        Ok(())
    }
}
