//! Multi-seed benchmark harness.
//!
//! A [`RunConfig`] names a dataset, a fairness metric and an experiment
//! protocol. [`run_bench`] repeats split / transform / train / evaluate over
//! `n_splits` seeds for up to three arms (original labels, mechanism-perturbed
//! labels with freshly calibrated t*, fair-sampling baseline) and aggregates
//! mean and standard deviation per metric per arm. [`run_sweep`] repeats the
//! whole benchmark across target disparities. All randomness derives from
//! `base_seed` and the seed index, so reruns are bit-identical.

pub mod report;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_t, CalibrationConfig};
use crate::data::{
    adapter_preset, fair_sample, load_csv_full, split, synthesize, synthetic_preset, AdapterSpec,
    Dataset, RawTable, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::mechanism::{
    estimate_group_probs, perturb, solve_design_matrix, DesignMatrix, FairnessMetric,
    GroupProbabilities,
};
use crate::metrics::{evaluate_all, EvaluationReport};
use crate::model::{predict, train, StepRule, TrainConfig};
use crate::seeds::{mix, TAG_CALIBRATION, TAG_FAIR_SAMPLE, TAG_PERTURB_FINAL, TAG_PREP, TAG_SPLIT};

pub const ARM_ORIGINAL: &str = "original";
pub const ARM_FAIRRR: &str = "fairrr";
pub const ARM_FAIR_SAMPLING: &str = "fair_sampling";

/// Where the benchmark data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    /// A shipped preset: either a pinned generator fixture or a pinned
    /// adapter for `<data_dir>/<preset>.csv`.
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_dir: Option<PathBuf>,
    },
    /// An explicit CSV file with its adapter.
    File { path: PathBuf, adapter: AdapterSpec },
    /// An inline generator specification.
    Synthetic { synthetic: SyntheticSpec },
}

impl DatasetSource {
    /// Loads or generates the dataset; raw rows accompany CSV sources.
    pub fn resolve_full(&self) -> Result<(Dataset, Option<RawTable>)> {
        match self {
            DatasetSource::Preset { preset, data_dir } => {
                if let Some(spec) = synthetic_preset(preset) {
                    return Ok((synthesize(&spec)?, None));
                }
                let Some(adapter) = adapter_preset(preset) else {
                    return Err(Error::Config(format!("unknown dataset preset {preset:?}")));
                };
                let dir = data_dir.clone().unwrap_or_else(|| PathBuf::from("data"));
                let path = dir.join(format!("{preset}.csv"));
                let (ds, raw) = load_csv_full(&path, &adapter)?;
                Ok((ds, Some(raw)))
            }
            DatasetSource::File { path, adapter } => {
                let (ds, raw) = load_csv_full(path, adapter)?;
                Ok((ds, Some(raw)))
            }
            DatasetSource::Synthetic { synthetic } => Ok((synthesize(synthetic)?, None)),
        }
    }

    pub fn resolve(&self) -> Result<Dataset> {
        Ok(self.resolve_full()?.0)
    }
}

/// Calibration knobs exposed in run configurations; seeds and the target come
/// from the surrounding [`RunConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub max_iterations: usize,
    pub disparity_tolerance: f64,
    pub repeats_per_evaluation: usize,
    pub validation_fraction: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        let d = CalibrationConfig::default();
        CalibrationSettings {
            max_iterations: d.max_iterations,
            disparity_tolerance: d.disparity_tolerance,
            repeats_per_evaluation: d.repeats_per_evaluation,
            validation_fraction: d.validation_fraction,
        }
    }
}

/// Classifier knobs exposed in run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    /// `None` selects 1/n of the training slice, the usual C=1.0 equivalent.
    pub l2_strength: Option<f64>,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_rule: StepRule,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            l2_strength: None,
            max_iterations: d.max_iterations,
            gradient_tolerance: d.gradient_tolerance,
            step_rule: d.step_rule,
        }
    }
}

impl TrainSettings {
    /// Concrete config for a training slice of `n` rows.
    pub fn for_n(&self, n: usize) -> TrainConfig {
        TrainConfig {
            l2_strength: self.l2_strength.unwrap_or(1.0 / n.max(1) as f64),
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            step_rule: self.step_rule,
        }
    }
}

fn default_train_fraction() -> f64 {
    0.8
}
fn default_n_splits() -> usize {
    1
}

/// One benchmark experiment: dataset, metric, protocol and arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub metric: FairnessMetric,
    #[serde(default)]
    pub target_delta: f64,
    #[serde(default = "default_n_splits")]
    pub n_splits: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub train: TrainSettings,
    /// Extra arms beyond original and fairrr; only "fair_sampling" is known.
    #[serde(default)]
    pub baselines: Vec<String>,
    /// Target disparities for the sweep subcommand.
    #[serde(default)]
    pub sweep_deltas: Vec<f64>,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_delta >= 0.0 && self.target_delta.is_finite()) {
            return Err(Error::Config(format!(
                "target_delta = {} must be finite and non-negative",
                self.target_delta
            )));
        }
        if self.n_splits == 0 {
            return Err(Error::Config("n_splits must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction = {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        for arm in &self.baselines {
            if arm != ARM_FAIR_SAMPLING {
                return Err(Error::Config(format!(
                    "unknown baseline {arm:?}; known: {ARM_FAIR_SAMPLING:?}"
                )));
            }
        }
        for &delta in &self.sweep_deltas {
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(Error::Config(format!(
                    "sweep delta {delta} must be finite and non-negative"
                )));
            }
        }
        if let DatasetSource::Synthetic { synthetic } = &self.dataset {
            synthetic.validate()?;
        }
        Ok(())
    }

    fn calibration_config(&self, base_seed: u64, n_train: usize) -> CalibrationConfig {
        CalibrationConfig {
            target_delta: self.target_delta,
            max_iterations: self.calibration.max_iterations,
            disparity_tolerance: self.calibration.disparity_tolerance,
            repeats_per_evaluation: self.calibration.repeats_per_evaluation,
            base_seed,
            train_config: self.train.for_n(n_train),
            validation_fraction: self.calibration.validation_fraction,
        }
    }
}

/// Mean and sample standard deviation (0 for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Stat {
        let n = values.len();
        assert!(n > 0, "no values to aggregate");
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

/// Per-arm aggregates over seeds: the five metrics plus disparity magnitudes
/// (tables report magnitudes, per-seed rows keep signs).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub accuracy: Stat,
    pub f1: Stat,
    pub ddp: Stat,
    pub deo: Stat,
    pub dpe: Stat,
    pub abs_ddp: Stat,
    pub abs_deo: Stat,
    pub abs_dpe: Stat,
}

impl ArmAggregate {
    pub fn from_reports(reports: &[EvaluationReport]) -> ArmAggregate {
        let pick = |f: fn(&EvaluationReport) -> f64| {
            Stat::from_values(&reports.iter().map(f).collect::<Vec<_>>())
        };
        ArmAggregate {
            accuracy: pick(|r| r.accuracy),
            f1: pick(|r| r.f1),
            ddp: pick(|r| r.ddp),
            deo: pick(|r| r.deo),
            dpe: pick(|r| r.dpe),
            abs_ddp: pick(|r| r.ddp.abs()),
            abs_deo: pick(|r| r.deo.abs()),
            abs_dpe: pick(|r| r.dpe.abs()),
        }
    }

    /// Signed stats for the chosen fairness metric.
    pub fn disparity(&self, metric: FairnessMetric) -> Stat {
        match metric {
            FairnessMetric::DemographicParity => self.ddp,
            FairnessMetric::EqualityOfOpportunity => self.deo,
            FairnessMetric::PredictiveEquality => self.dpe,
        }
    }

    /// Magnitude stats for the chosen fairness metric.
    pub fn abs_disparity(&self, metric: FairnessMetric) -> Stat {
        match metric {
            FairnessMetric::DemographicParity => self.abs_ddp,
            FairnessMetric::EqualityOfOpportunity => self.abs_deo,
            FairnessMetric::PredictiveEquality => self.abs_dpe,
        }
    }
}

/// One seed × arm evaluation on the untouched test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed_index: usize,
    pub arm: String,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

/// Per-cell counts of labels changed by the final perturbation draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipCounts {
    pub c11: usize,
    pub c10: usize,
    pub c01: usize,
    pub c00: usize,
}

impl FlipCounts {
    pub fn count(before: &[u8], after: &[u8], sensitive: &[u8]) -> FlipCounts {
        let mut c = FlipCounts { c11: 0, c10: 0, c01: 0, c00: 0 };
        for ((&y, &z), &a) in before.iter().zip(after).zip(sensitive) {
            if y != z {
                match (a, y) {
                    (1, 1) => c.c11 += 1,
                    (1, 0) => c.c10 += 1,
                    (0, 1) => c.c01 += 1,
                    _ => c.c00 += 1,
                }
            }
        }
        c
    }
}

/// Mechanism audit for one calibration: everything needed to check the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub group_probs: GroupProbabilities,
    pub t_star: f64,
    pub design_matrix: DesignMatrix,
    pub flip_counts: FlipCounts,
    pub calibration_trace: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAudit {
    pub seed_index: usize,
    #[serde(flatten)]
    pub audit: AuditRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub metric: FairnessMetric,
    pub target_delta: f64,
    pub n_splits: usize,
    pub rows: Vec<SeedRow>,
    pub aggregates: BTreeMap<String, ArmAggregate>,
    pub audits: Vec<SeedAudit>,
    pub failures: Vec<SeedFailure>,
}

impl BenchmarkReport {
    pub fn arm(&self, name: &str) -> Option<&ArmAggregate> {
        self.aggregates.get(name)
    }

    pub fn failure_fraction(&self) -> f64 {
        self.failures.len() as f64 / self.n_splits as f64
    }

    /// Harness contract: more than 10% failed seeds invalidates the run.
    pub fn exceeds_failure_budget(&self) -> bool {
        self.failure_fraction() > 0.10
    }
}

fn test_checksum(ds: &Dataset) -> u64 {
    let mut hasher = DefaultHasher::new();
    ds.labels().hash(&mut hasher);
    ds.sensitive().hash(&mut hasher);
    ds.n().hash(&mut hasher);
    hasher.finish()
}

struct SeedOutcome {
    rows: Vec<SeedRow>,
    audit: SeedAudit,
}

fn run_single_seed(cfg: &RunConfig, ds: &Dataset, seed_index: usize) -> Result<SeedOutcome> {
    let i = seed_index as u64;
    let (train_ds, test_ds) = split(ds, cfg.train_fraction, mix(cfg.base_seed, TAG_SPLIT, i))?;
    train_ds.require_all_cells()?;
    let test_before = test_checksum(&test_ds);
    let train_config = cfg.train.for_n(train_ds.n());
    let test_x = test_ds.features_with_sensitive();
    let mut rows = Vec::new();

    // classifiers observe the group, matching the calibration-time model
    let evaluate_arm = |arm: &str, data: &Dataset| -> Result<EvaluationReport> {
        let fitted = train(data.features_with_sensitive().view(), data.labels(), &train_config)?;
        let pred = predict(&fitted.model, test_x.view(), 0.5)?;
        let report = evaluate_all(&pred, test_ds.labels(), test_ds.sensitive())?;
        // test-split purity: no arm may have touched the test partition
        assert_eq!(test_checksum(&test_ds), test_before, "test split mutated during arm {arm}");
        Ok(report)
    };

    let original = evaluate_arm(ARM_ORIGINAL, &train_ds)?;
    rows.push(SeedRow { seed_index, arm: ARM_ORIGINAL.into(), report: original });

    let cal_cfg = cfg.calibration_config(mix(cfg.base_seed, TAG_CALIBRATION, i), train_ds.n());
    let calibration = calibrate_t(&train_ds, cfg.metric, &cal_cfg)?;
    let p = estimate_group_probs(train_ds.labels(), train_ds.sensitive())?;
    let dm = solve_design_matrix(cfg.metric, &p, calibration.t_star)?;
    let perturbed = perturb(
        train_ds.labels(),
        train_ds.sensitive(),
        &dm,
        mix(cfg.base_seed, TAG_PERTURB_FINAL, i),
    )?;
    let flip_counts = FlipCounts::count(train_ds.labels(), &perturbed, train_ds.sensitive());
    let fairrr_ds = train_ds.with_labels(perturbed)?;
    let fairrr = evaluate_arm(ARM_FAIRRR, &fairrr_ds)?;
    rows.push(SeedRow { seed_index, arm: ARM_FAIRRR.into(), report: fairrr });

    if cfg.baselines.iter().any(|b| b == ARM_FAIR_SAMPLING) {
        let resampled = fair_sample(&train_ds, mix(cfg.base_seed, TAG_FAIR_SAMPLE, i))?;
        let report = evaluate_arm(ARM_FAIR_SAMPLING, &resampled)?;
        rows.push(SeedRow { seed_index, arm: ARM_FAIR_SAMPLING.into(), report });
    }

    Ok(SeedOutcome {
        rows,
        audit: SeedAudit {
            seed_index,
            audit: AuditRecord {
                group_probs: p,
                t_star: calibration.t_star,
                design_matrix: dm,
                flip_counts,
                calibration_trace: calibration.iterations,
            },
        },
    })
}

/// Runs the full multi-seed benchmark. Failed seeds are recorded and excluded
/// from aggregates; the run errors only when every seed fails.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let ds = cfg.dataset.resolve()?;
    let mut rows = Vec::new();
    let mut audits = Vec::new();
    let mut failures = Vec::new();
    for seed_index in 0..cfg.n_splits {
        match run_single_seed(cfg, &ds, seed_index) {
            Ok(outcome) => {
                rows.extend(outcome.rows);
                audits.push(outcome.audit);
            }
            Err(e) => {
                log::warn!("seed {seed_index} failed: {e}");
                failures.push(SeedFailure { seed_index, message: e.to_string() });
            }
        }
    }
    if failures.len() == cfg.n_splits {
        return Err(Error::TooManyFailures { failed: failures.len(), total: cfg.n_splits });
    }

    let mut by_arm: BTreeMap<String, Vec<EvaluationReport>> = BTreeMap::new();
    for row in &rows {
        by_arm.entry(row.arm.clone()).or_default().push(row.report);
    }
    let aggregates = by_arm
        .into_iter()
        .map(|(arm, reports)| (arm, ArmAggregate::from_reports(&reports)))
        .collect();
    Ok(BenchmarkReport {
        metric: cfg.metric,
        target_delta: cfg.target_delta,
        n_splits: cfg.n_splits,
        rows,
        aggregates,
        audits,
        failures,
    })
}

/// One aggregate row of a disparity sweep. `disparity_mean` is the signed
/// across-seed mean of the configured metric (its magnitude is the achieved
/// disparity); the `abs` columns average magnitudes instead, which inflates
/// near zero by folding seed noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub disparity_mean: f64,
    pub disparity_std: f64,
    pub disparity_abs_mean: f64,
    pub disparity_abs_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metric: FairnessMetric,
    pub rows: Vec<SweepRow>,
    pub failed_seeds: usize,
    pub total_seeds: usize,
}

/// Runs the benchmark once per target disparity and keeps the mechanism arm's
/// aggregates, for plotting accuracy/disparity trade-off curves.
pub fn run_sweep(cfg: &RunConfig, deltas: &[f64]) -> Result<SweepReport> {
    cfg.validate()?;
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one delta".into()));
    }
    let mut rows = Vec::new();
    let mut failed_seeds = 0;
    let mut total_seeds = 0;
    for &delta in deltas {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sweep delta {delta} must be finite and non-negative"
            )));
        }
        let mut per_delta = cfg.clone();
        per_delta.target_delta = delta;
        let report = run_bench(&per_delta)?;
        failed_seeds += report.failures.len();
        total_seeds += report.n_splits;
        let agg = report
            .arm(ARM_FAIRRR)
            .ok_or_else(|| Error::Numeric("benchmark produced no mechanism arm".into()))?;
        let signed = agg.disparity(cfg.metric);
        let abs = agg.abs_disparity(cfg.metric);
        rows.push(SweepRow {
            delta,
            accuracy_mean: agg.accuracy.mean,
            accuracy_std: agg.accuracy.std,
            f1_mean: agg.f1.mean,
            f1_std: agg.f1.std,
            disparity_mean: signed.mean,
            disparity_std: signed.std,
            disparity_abs_mean: abs.mean,
            disparity_abs_std: abs.std,
        });
    }
    Ok(SweepReport { metric: cfg.metric, rows, failed_seeds, total_seeds })
}

/// Prepared output: the input table (or generated features) with a perturbed
/// label column appended, plus the calibration audit.
#[derive(Clone, Debug)]
pub struct PrepOutput {
    pub audit: AuditRecord,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Calibrates on the full dataset and applies one final perturbation draw.
pub fn run_calibrate(cfg: &RunConfig) -> Result<(AuditRecord, Vec<u8>, Dataset)> {
    cfg.validate()?;
    let (ds, _) = cfg.dataset.resolve_full()?;
    let cal_cfg = cfg.calibration_config(mix(cfg.base_seed, TAG_PREP, 0), ds.n());
    let calibration = calibrate_t(&ds, cfg.metric, &cal_cfg)?;
    let p = estimate_group_probs(ds.labels(), ds.sensitive())?;
    let dm = solve_design_matrix(cfg.metric, &p, calibration.t_star)?;
    let perturbed = perturb(ds.labels(), ds.sensitive(), &dm, mix(cfg.base_seed, TAG_PREP, 1))?;
    let flip_counts = FlipCounts::count(ds.labels(), &perturbed, ds.sensitive());
    let audit = AuditRecord {
        group_probs: p,
        t_star: calibration.t_star,
        design_matrix: dm,
        flip_counts,
        calibration_trace: calibration.iterations,
    };
    Ok((audit, perturbed, ds))
}

/// Calibrates, perturbs, and lays out the prepared table for CSV emission:
/// original columns (or generated features) plus `label_perturbed`.
pub fn run_prep(cfg: &RunConfig) -> Result<PrepOutput> {
    cfg.validate()?;
    let (_, raw) = cfg.dataset.resolve_full()?;
    let (audit, perturbed, ds) = run_calibrate(cfg)?;
    let (header, rows) = match raw {
        Some(table) => {
            let mut header = table.header;
            header.push("label_perturbed".into());
            let rows = table
                .rows
                .into_iter()
                .zip(&perturbed)
                .map(|(mut row, &y)| {
                    row.push(y.to_string());
                    row
                })
                .collect();
            (header, rows)
        }
        None => {
            let mut header: Vec<String> = (0..ds.d()).map(|j| format!("x{j}")).collect();
            header.extend(["sensitive".into(), "label".into(), "label_perturbed".into()]);
            let rows = ds
                .features()
                .outer_iter()
                .zip(ds.sensitive().iter().zip(ds.labels().iter().zip(&perturbed)))
                .map(|(x, (&a, (&y, &z)))| {
                    let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                    row.extend([a.to_string(), y.to_string(), z.to_string()]);
                    row
                })
                .collect();
            (header, rows)
        }
    };
    Ok(PrepOutput { audit, header, rows })
}
