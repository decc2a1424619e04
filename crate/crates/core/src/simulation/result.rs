use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::stats::{ks_p_value, ks_statistic_normal, mean, median, ols_slope, sample_variance};

/// One replicate at one sample size. Column order of the CSV output is the
/// field order below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub j_n: u32,
    pub estimate: f64,
    pub sigma_hat: f64,
    /// `‖f_n − f‖_∞`
    pub a_n: f64,
    /// `‖g_n − g‖_∞` (two-sided runs only)
    pub b_n: Option<f64>,
    /// `max(a_n, b_n)`
    pub c_n: f64,
    pub abs_error: f64,
    /// `|Ĵ − J| / c_n`
    pub ratio: f64,
    /// `√n c_n²`
    pub remainder: f64,
    /// `√n (Ĵ − J) / max(σ̂, σ_floor)`
    pub z: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
    pub p_value: Option<f64>,
    pub rejected: Option<bool>,
    pub null_estimate: Option<f64>,
    pub null_sigma_hat: Option<f64>,
    pub null_p_value: Option<f64>,
    pub null_rejected: Option<bool>,
}

/// Summaries over the replicates of one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NAggregate {
    pub n: usize,
    pub j_n: u32,
    pub replicates: usize,
    pub median_a_n: f64,
    pub median_c_n: f64,
    pub median_abs_error: f64,
    pub median_ratio: f64,
    pub median_remainder: f64,
    pub median_sigma_hat: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub coverage: f64,
    pub rejection_rate: Option<f64>,
    pub null_rejection_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_n: Vec<NAggregate>,
    /// Least-squares slope of `log median a_n` on `log n`.
    pub slope_log_median_a_n: Option<f64>,
    pub slope_log_median_abs_error: Option<f64>,
}

fn rate(flags: &[Option<bool>]) -> Option<f64> {
    let known: Vec<bool> = flags.iter().filter_map(|f| *f).collect();
    (!known.is_empty()).then(|| known.iter().filter(|b| **b).count() as f64 / known.len() as f64)
}

impl Aggregates {
    /// Pure function of the rows; groups by `n` in order of appearance.
    pub fn from_rows(rows: &[Row]) -> Self {
        let mut sizes: Vec<usize> = Vec::new();
        for r in rows {
            if !sizes.contains(&r.n) {
                sizes.push(r.n);
            }
        }
        let per_n: Vec<NAggregate> = sizes
            .iter()
            .map(|&n| {
                let group: Vec<&Row> = rows.iter().filter(|r| r.n == n).collect();
                let col = |f: fn(&Row) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
                let z = col(|r| r.z);
                let ks = ks_statistic_normal(&z);
                NAggregate {
                    n,
                    j_n: group[0].j_n,
                    replicates: group.len(),
                    median_a_n: median(&col(|r| r.a_n)),
                    median_c_n: median(&col(|r| r.c_n)),
                    median_abs_error: median(&col(|r| r.abs_error)),
                    median_ratio: median(&col(|r| r.ratio)),
                    median_remainder: median(&col(|r| r.remainder)),
                    median_sigma_hat: median(&col(|r| r.sigma_hat)),
                    mean_z: mean(&z),
                    var_z: if z.len() > 1 { sample_variance(&z) } else { 0.0 },
                    ks_statistic: ks,
                    ks_p_value: ks_p_value(ks, z.len()),
                    coverage: group.iter().filter(|r| r.covered).count() as f64 / group.len() as f64,
                    rejection_rate: rate(&group.iter().map(|r| r.rejected).collect::<Vec<_>>()),
                    null_rejection_rate: rate(
                        &group.iter().map(|r| r.null_rejected).collect::<Vec<_>>(),
                    ),
                }
            })
            .collect();
        let slope = |f: fn(&NAggregate) -> f64| {
            (per_n.len() >= 2).then(|| {
                let xs: Vec<f64> = per_n.iter().map(|a| (a.n as f64).ln()).collect();
                let ys: Vec<f64> = per_n.iter().map(|a| f(a).ln()).collect();
                ols_slope(&xs, &ys)
            })
        };
        Self {
            slope_log_median_a_n: slope(|a| a.median_a_n),
            slope_log_median_abs_error: slope(|a| a.median_abs_error),
            per_n,
        }
    }
}

/// Rows plus aggregates of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub prng: String,
    /// Quadrature value of the true divergence.
    pub j_oracle: f64,
    /// `∫ |h₁(f, g)|`
    pub a1: f64,
    /// `∫ |h₂(f, g)|`
    pub a2: f64,
    pub aggregates: Aggregates,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl ExperimentResult {
    pub fn aggregate(&self, n: usize) -> Option<&NAggregate> {
        self.aggregates.per_n.iter().find(|a| a.n == n)
    }

    pub fn rows_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer
                .serialize(row)
                .map_err(|e| Error::Io(format!("csv: {e}")))?;
        }
        writer
            .into_inner()
            .map_err(|e| Error::Io(format!("csv: {e}")))
    }

    pub fn summary_json(&self) -> Result<Vec<u8>> {
        let mut bytes =
            serde_json::to_vec_pretty(self).map_err(|e| Error::Io(format!("json: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Writes `<stem>.csv` and `<stem>.json`; returns both paths.
    pub fn write(&self, stem: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = with_suffix(stem, "csv");
        let json_path = with_suffix(stem, "json");
        write_atomic(&csv_path, &self.rows_csv()?)?;
        write_atomic(&json_path, &self.summary_json()?)?;
        Ok((csv_path, json_path))
    }
}

fn with_suffix(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Reads rows back from CSV bytes.
pub fn rows_from_csv(bytes: &[u8]) -> Result<Vec<Row>> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<std::result::Result<Vec<Row>, _>>()
        .map_err(|e| Error::Io(format!("csv: {e}")))
}
