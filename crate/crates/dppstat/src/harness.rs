//! Reproducible Monte Carlo experiments: replicate, contaminate, estimate,
//! aggregate.
//!
//! Every replication runs on its own ChaCha stream derived from the master
//! seed and the replication index, with a fixed in-replication draw order
//! (sampling, contamination, jitter per ladder grid). The aggregator merges
//! per-replication records in index order, so reports are byte-identical for
//! any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contamination::ContaminationSpec;
use crate::estimators::{
    default_bandwidth, ladder_estimates, lambda_std, sample_quantile, sigma2_hat, Taper,
};
use crate::kernel::KernelConfig;
use crate::pattern::{digest, Window};
use crate::rng::{replication_rng, splitmix64};
use crate::sampler::{sample_dpp, SpectralModel};
use crate::{Error, Result};

/// Settings for the optional asymptotic-variance estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Config {
    /// `c_b` in `b_n = c_b |W|^{-1/(2d)}`.
    #[serde(default = "default_bandwidth_scale")]
    pub bandwidth_scale: f64,
}

fn default_bandwidth_scale() -> f64 {
    1.0
}

impl Default for Sigma2Config {
    fn default() -> Self {
        Sigma2Config {
            bandwidth_scale: default_bandwidth_scale(),
        }
    }
}

/// One Monte Carlo experiment: a model on `[-n, n]^2`, a contamination
/// setting and the estimator set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    /// Window scale `n` (window is `[-n, n]^2`).
    pub window_scale: f64,
    pub replications: u64,
    #[serde(default = "default_ladder")]
    pub kn_ladder: Vec<u32>,
    #[serde(default)]
    pub contamination: ContaminationSpec,
    pub master_seed: u64,
    /// Frequency-lattice truncation override (default: model heuristic).
    #[serde(default)]
    pub truncation: Option<u32>,
    #[serde(default)]
    pub sigma2: Option<Sigma2Config>,
    /// Retain per-replication records in the report.
    #[serde(default)]
    pub keep_replications: bool,
}

pub fn default_ladder() -> Vec<u32> {
    vec![9, 16, 25, 36, 49]
}

impl ExperimentConfig {
    pub fn window(&self) -> Result<Window> {
        Window::centred_square(self.window_scale)
    }

    pub fn estimator_tags(&self) -> Vec<String> {
        let mut tags = vec!["std".to_string()];
        tags.extend(self.kn_ladder.iter().map(|k| format!("med{k}")));
        tags.push("med-dd".to_string());
        tags
    }
}

/// Values of every configured estimator for one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: u64,
    /// Stream id used (equals the replication index).
    pub stream: u64,
    /// Points after contamination.
    pub count: usize,
    /// Estimator values aligned with `ExperimentConfig::estimator_tags`.
    pub values: Vec<f64>,
    pub sigma2: Option<f64>,
}

/// Aggregate row for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub k_n: Option<u32>,
    pub mean: f64,
    pub sd: f64,
    pub bias: f64,
    pub mse: f64,
    /// MSE gain over the standard estimator, percent.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub lambda: f64,
    pub window_volume: f64,
    pub truncation_used: u32,
    pub model_digest: String,
    pub summaries: Vec<EstimatorSummary>,
    pub sigma2_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<Vec<ReplicationRecord>>,
}

impl ExperimentReport {
    pub fn summary(&self, tag: &str) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == tag)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation")
    }
}

/// Relative MSE gain in percent: `(mse_std - mse_est) / mse_std * 100`.
pub fn gain(mse_std: f64, mse_est: f64) -> Result<f64> {
    if mse_std == 0.0 {
        return Err(Error::ZeroReferenceMse);
    }
    Ok((mse_std - mse_est) / mse_std * 100.0)
}

/// Run the experiment; `workers` bounds the rayon pool (None = global pool).
/// Reports are identical for every worker count.
pub fn run_experiment(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExperimentReport> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            pool.install(|| run_experiment_inner(config))
        }
        None => run_experiment_inner(config),
    }
}

fn run_experiment_inner(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.replications == 0 {
        return Err(Error::InvalidConfig("replications must be >= 1".into()));
    }
    if config.kn_ladder.is_empty() {
        return Err(Error::InvalidConfig("kn_ladder must not be empty".into()));
    }
    let spec = config.kernel.build()?;
    let window = config.window()?;
    // Fail fast on ladder entries that cannot tile the window.
    for &k in &config.kn_ladder {
        crate::estimators::make_grid(&window, k)?;
    }
    config.contamination.validate()?;
    let truncation = config
        .truncation
        .unwrap_or_else(|| SpectralModel::default_truncation(&spec, &window));
    let model = SpectralModel::build(&spec, &window, truncation)?;
    let bandwidth = config
        .sigma2
        .map(|s| default_bandwidth(&window, s.bandwidth_scale));

    let records: Vec<Result<ReplicationRecord>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            run_replication(config, &model, bandwidth, rep).map_err(|e| Error::ReplicationFailed {
                replication: rep,
                seed: config.master_seed,
                source: Box::new(e),
            })
        })
        .collect();
    let records: Vec<ReplicationRecord> = records.into_iter().collect::<Result<_>>()?;

    let lambda = spec.lambda();
    let tags = config.estimator_tags();
    let r = records.len() as f64;
    let mut summaries = Vec::with_capacity(tags.len());
    let mse_of = |col: usize| -> f64 {
        records
            .iter()
            .map(|rec| (rec.values[col] - lambda).powi(2))
            .sum::<f64>()
            / r
    };
    let mse_std = mse_of(0);
    for (col, tag) in tags.iter().enumerate() {
        let mean = records.iter().map(|rec| rec.values[col]).sum::<f64>() / r;
        let sd = if records.len() > 1 {
            (records
                .iter()
                .map(|rec| (rec.values[col] - mean).powi(2))
                .sum::<f64>()
                / (r - 1.0))
                .sqrt()
        } else {
            0.0
        };
        let mse = mse_of(col);
        summaries.push(EstimatorSummary {
            estimator: tag.clone(),
            k_n: tag
                .strip_prefix("med")
                .and_then(|rest| rest.parse::<u32>().ok()),
            mean,
            sd,
            bias: mean - lambda,
            mse,
            gain: if mse_std > 0.0 {
                gain(mse_std, mse)?
            } else {
                0.0
            },
        });
    }
    let sigma2_mean = if config.sigma2.is_some() {
        let vals: Vec<f64> = records.iter().filter_map(|rec| rec.sigma2).collect();
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    } else {
        None
    };

    Ok(ExperimentReport {
        config: config.clone(),
        lambda,
        window_volume: window.volume(),
        truncation_used: truncation,
        model_digest: model.digest().to_string(),
        summaries,
        sigma2_mean,
        replications: config.keep_replications.then_some(records),
    })
}

fn run_replication(
    config: &ExperimentConfig,
    model: &SpectralModel,
    bandwidth: Option<f64>,
    rep: u64,
) -> Result<ReplicationRecord> {
    let mut rng = replication_rng(config.master_seed, rep);
    let clean = sample_dpp(model, &mut rng)?;
    let contaminated = config.contamination.apply(&clean, &mut rng)?.pattern;

    let mut values = Vec::with_capacity(config.kn_ladder.len() + 2);
    values.push(lambda_std(&contaminated)?.value);
    let ladder = ladder_estimates(&contaminated, &config.kn_ladder, &mut rng)?;
    values.extend(ladder.iter().map(|e| e.value));
    let ladder_values: Vec<f64> = ladder.iter().map(|e| e.value).collect();
    values.push(sample_quantile(&ladder_values, 0.5)?);

    let sigma2 = match bandwidth {
        Some(b_n) => Some(sigma2_hat(&contaminated, &Taper::default(), b_n)?),
        None => None,
    };

    Ok(ReplicationRecord {
        replication: rep,
        stream: rep,
        count: contaminated.len(),
        values,
        sigma2,
    })
}

/// A batch of experiments sharing seeds/ladder defaults; its report renders
/// as one CSV row per run (the layout of the simulation-study tables).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub master_seed: u64,
    pub replications: u64,
    #[serde(default = "default_ladder")]
    pub kn_ladder: Vec<u32>,
    #[serde(default)]
    pub truncation: Option<u32>,
    #[serde(default)]
    pub sigma2: Option<Sigma2Config>,
    #[serde(default)]
    pub keep_replications: bool,
    pub runs: Vec<RunSpec>,
}

/// One row of a suite: a model preset (or explicit kernel), window scale and
/// contamination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(default)]
    pub label: Option<String>,
    /// "dpp1" (R = M/4) or "dpp2" (R = 3M/4); alternative to `kernel`.
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    #[serde(default = "default_scale")]
    pub n: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub contamination: Option<ContaminationSpec>,
    #[serde(default)]
    pub replications: Option<u64>,
}

fn default_scale() -> f64 {
    1.0
}

impl RunSpec {
    pub fn kernel_config(&self) -> Result<KernelConfig> {
        if let Some(k) = &self.kernel {
            return Ok(k.clone());
        }
        let lambda = self.lambda.unwrap_or(50.0);
        match self.model.as_deref() {
            Some("dpp1") => Ok(KernelConfig::dpp1(lambda)),
            Some("dpp2") => Ok(KernelConfig::dpp2(lambda)),
            Some(other) => Err(Error::InvalidConfig(format!(
                "unknown model preset {other:?} (expected dpp1 or dpp2)"
            ))),
            None => Err(Error::InvalidConfig(
                "run needs either a model preset or an explicit kernel".into(),
            )),
        }
    }

    fn default_label(&self, kernel: &KernelConfig, contamination: &ContaminationSpec) -> String {
        let model = self
            .model
            .clone()
            .unwrap_or_else(|| format!("{}-f{}", kernel.family, kernel.r_fraction));
        format!(
            "{model} n={} {:?} rho={}",
            self.n, contamination.kind, contamination.rho
        )
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("suite serialisation")
    }

    /// Expand into per-run experiment configs; each run gets its own master
    /// seed derived from the suite seed and the run index.
    pub fn materialize(&self) -> Result<Vec<(String, ExperimentConfig)>> {
        self.runs
            .iter()
            .enumerate()
            .map(|(idx, run)| {
                let kernel = run.kernel_config()?;
                let contamination = run.contamination.unwrap_or_default();
                let label = run
                    .label
                    .clone()
                    .unwrap_or_else(|| run.default_label(&kernel, &contamination));
                let config = ExperimentConfig {
                    kernel,
                    window_scale: run.n,
                    replications: run.replications.unwrap_or(self.replications),
                    kn_ladder: self.kn_ladder.clone(),
                    contamination,
                    master_seed: splitmix64(
                        self.master_seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    ),
                    truncation: self.truncation,
                    sigma2: self.sigma2,
                    keep_replications: self.keep_replications,
                };
                Ok((label, config))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite_digest: String,
    pub rows: Vec<SuiteRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub label: String,
    pub report: ExperimentReport,
}

pub fn run_suite(suite: &SuiteConfig, workers: Option<usize>) -> Result<SuiteReport> {
    let rows = suite
        .materialize()?
        .into_iter()
        .map(|(label, config)| {
            run_experiment(&config, workers).map(|report| SuiteRow { label, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        suite_digest: digest(&suite.to_toml()),
        rows,
    })
}

impl SuiteReport {
    /// CSV table: one row per run, per-estimator mean/sd/bias/mse/gain
    /// columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            return out;
        }
        let tags: Vec<String> = self.rows[0]
            .report
            .summaries
            .iter()
            .map(|s| s.estimator.clone())
            .collect();
        out.push_str("label,model,n,contamination,rho,replications");
        for t in &tags {
            for field in ["mean", "sd", "bias", "mse", "gain"] {
                out.push_str(&format!(",{t}_{field}"));
            }
        }
        out.push('\n');
        for row in &self.rows {
            let cfg = &row.report.config;
            out.push_str(&format!(
                "{},{} fr={},{},{:?},{},{}",
                row.label,
                cfg.kernel.family,
                cfg.kernel.r_fraction,
                cfg.window_scale,
                cfg.contamination.kind,
                cfg.contamination.rho,
                cfg.replications
            ));
            for s in &row.report.summaries {
                out.push_str(&format!(
                    ",{},{},{},{},{}",
                    s.mean, s.sd, s.bias, s.mse, s.gain
                ));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serialisation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contamination::ContaminationKind;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            kernel: KernelConfig::dpp2(50.0),
            window_scale: 1.0,
            replications: 16,
            kn_ladder: vec![9, 16, 25],
            contamination: ContaminationSpec::none(),
            master_seed: 424242,
            truncation: Some(48),
            sigma2: None,
            keep_replications: true,
        }
    }

    #[test]
    fn gain_formula() {
        assert_eq!(gain(4.0, 3.0).unwrap(), 25.0);
        assert_eq!(gain(4.0, 4.0).unwrap(), 0.0);
        assert!(gain(4.0, 5.0).unwrap() < 0.0);
        assert!(matches!(gain(0.0, 1.0), Err(Error::ZeroReferenceMse)));
    }

    #[test]
    fn report_identities_and_determinism() {
        let config = tiny_config();
        let a = run_experiment(&config, Some(1)).unwrap();
        let b = run_experiment(&config, Some(2)).unwrap();
        // Worker-count invariance, byte for byte.
        assert_eq!(a.to_json(), b.to_json());

        // gain(std) = 0 and the MSE identity per estimator.
        let r = config.replications as f64;
        assert_eq!(a.summaries[0].gain, 0.0);
        for s in &a.summaries {
            let identity = s.bias * s.bias + s.sd * s.sd * (r - 1.0) / r;
            assert!(
                (s.mse - identity).abs() < 1e-9,
                "{}: mse {} vs identity {identity}",
                s.estimator,
                s.mse
            );
        }

        // Aggregates recompute exactly from the retained records.
        let records = a.replications.as_ref().unwrap();
        assert_eq!(records.len(), 16);
        for (col, s) in a.summaries.iter().enumerate() {
            let mean = records.iter().map(|rec| rec.values[col]).sum::<f64>() / r;
            assert_eq!(mean, s.mean);
        }
    }

    #[test]
    fn single_replication_degenerates() {
        let mut config = tiny_config();
        config.replications = 1;
        let rep = run_experiment(&config, Some(1)).unwrap();
        for s in &rep.summaries {
            assert_eq!(s.sd, 0.0);
        }
        let records = rep.replications.unwrap();
        assert_eq!(records[0].values[0], rep.summaries[0].mean);
    }

    #[test]
    fn invalid_configs_error() {
        let mut c = tiny_config();
        c.replications = 0;
        assert!(run_experiment(&c, Some(1)).is_err());
        let mut c = tiny_config();
        c.kn_ladder = vec![10];
        assert!(run_experiment(&c, Some(1)).is_err());
        let mut c = tiny_config();
        c.contamination = ContaminationSpec {
            kind: ContaminationKind::AddUniform,
            rho: 1.2,
            squares: 1,
            side_fraction: 0.1,
        };
        assert!(run_experiment(&c, Some(1)).is_err());
    }

    #[test]
    fn suite_toml_round_trip_and_seeds() {
        let text = r#"
master_seed = 7
replications = 4
kn_ladder = [9, 16]

[[runs]]
model = "dpp1"
n = 1.0

[[runs]]
model = "dpp2"
n = 1.0
[runs.contamination]
kind = "add-subsquare"
rho = 0.05
"#;
        let suite = SuiteConfig::from_toml(text).unwrap();
        let runs = suite.materialize().unwrap();
        assert_eq!(runs.len(), 2);
        // Distinct per-run seeds derived from the suite seed.
        assert_ne!(runs[0].1.master_seed, runs[1].1.master_seed);
        assert_eq!(runs[1].1.contamination.kind, ContaminationKind::AddSubsquare);
        let back = SuiteConfig::from_toml(&suite.to_toml()).unwrap();
        assert_eq!(back.master_seed, suite.master_seed);
        assert!(SuiteConfig::from_toml("runs = 3").is_err());
    }

    #[test]
    fn suite_csv_layout() {
        let suite = SuiteConfig {
            master_seed: 5,
            replications: 3,
            kn_ladder: vec![9],
            truncation: Some(48),
            sigma2: None,
            keep_replications: false,
            runs: vec![RunSpec {
                label: Some("toy".into()),
                model: Some("dpp2".into()),
                kernel: None,
                n: 1.0,
                lambda: None,
                contamination: None,
                replications: None,
            }],
        };
        let report = run_suite(&suite, Some(2)).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("label,model,n,contamination,rho,replications"));
        assert!(header.contains("std_mean") && header.contains("med9_gain"));
        assert!(header.contains("med-dd_mean"));
        assert_eq!(lines.count(), 1);
    }
}
