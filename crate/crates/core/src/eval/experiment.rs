//! Patient-based cross-validation of the channel stack.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balance::balance_undersample;
use super::head::{softmax_head_train, HeadConfig};
use super::metrics::{compute_metrics, MetricsReport};
use super::split::{Fold, Role, SplitPlan};
use crate::autoencoder::{ae_train, AEModel, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{
    FeatureBank, FeatureLayout, DFT_BINS, FIDUCIAL_LEN, PCA_COMPONENTS, STAT_LEN,
};
use crate::segment::BeatWindow;
use crate::tda::betti_pair_of;
use crate::wfdb::AnnotationCode;

pub const MAX_CLASSES: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Normal against every other beat type.
    Detection,
    /// The most frequent non-normal beat types, normals removed.
    Classification,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Detection => "detection",
            Task::Classification => "classification",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detection" => Ok(Task::Detection),
            "classification" => Ok(Task::Classification),
            _ => Err(Error::invalid(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ChannelMask {
    pub betti: bool,
    pub features: bool,
    pub latent: bool,
    pub residual: bool,
}

impl Default for ChannelMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl ChannelMask {
    pub const ALL: Self = Self {
        betti: true,
        features: true,
        latent: true,
        residual: true,
    };
    pub const NAMES: [&'static str; 4] = ["betti", "features", "latent", "residual"];

    pub fn validate(&self) -> Result<()> {
        if self.flags().iter().any(|&f| f) {
            Ok(())
        } else {
            Err(Error::invalid("at least one channel must be enabled"))
        }
    }

    fn flags(&self) -> [bool; 4] {
        [self.betti, self.features, self.latent, self.residual]
    }

    pub fn with_betti(self, betti: bool) -> Self {
        Self { betti, ..self }
    }

    pub fn uses_autoencoder(&self) -> bool {
        self.latent || self.residual
    }

    /// Enabled channel names joined by `+`, or `none`.
    pub fn label(&self) -> String {
        let on: Vec<&str> = Self::NAMES
            .iter()
            .zip(self.flags())
            .filter_map(|(n, f)| f.then_some(*n))
            .collect();
        if on.is_empty() {
            "none".into()
        } else {
            on.join("+")
        }
    }
}

impl From<ChannelMask> for String {
    fn from(mask: ChannelMask) -> Self {
        mask.label().replace('+', ",")
    }
}

impl TryFrom<String> for ChannelMask {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for ChannelMask {
    type Err = Error;

    /// Comma-separated channel names.
    fn from_str(s: &str) -> Result<Self> {
        let mut mask = Self {
            betti: false,
            features: false,
            latent: false,
            residual: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "betti" => mask.betti = true,
                "features" => mask.features = true,
                "latent" => mask.latent = true,
                "residual" => mask.residual = true,
                _ => return Err(Error::invalid(format!("unknown channel {name:?}"))),
            }
        }
        mask.validate()?;
        Ok(mask)
    }
}

/// Block layout of the concatenated channel vector.
pub fn channel_layout(mask: &ChannelMask, bins: usize, latent_len: usize) -> FeatureLayout {
    let mut blocks: Vec<(&str, usize)> = Vec::new();
    if mask.betti {
        blocks.push(("betti_sub", bins));
        blocks.push(("betti_super", bins));
    }
    if mask.features {
        blocks.push(("dft", DFT_BINS));
        blocks.push(("fiducial", FIDUCIAL_LEN));
        blocks.push(("stat", STAT_LEN));
        blocks.push(("pca", PCA_COMPONENTS));
    }
    if mask.latent {
        blocks.push(("latent", latent_len));
    }
    if mask.residual {
        blocks.push(("residual_score", 1));
    }
    FeatureLayout::new(&blocks)
}

/// Maps beat symbols onto the class indices of a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub task: Task,
    pub classes: Vec<String>,
    /// Window count per class over the whole dataset.
    pub counts: Vec<usize>,
}

impl LabelMap {
    pub fn for_task(task: Task, windows: &[BeatWindow]) -> Result<Self> {
        match task {
            Task::Detection => {
                let normal = windows
                    .iter()
                    .filter(|w| w.label == AnnotationCode::NORMAL)
                    .count();
                Ok(Self {
                    task,
                    classes: vec!["normal".into(), "abnormal".into()],
                    counts: vec![normal, windows.len() - normal],
                })
            }
            Task::Classification => {
                let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
                for w in windows.iter().filter(|w| w.label != AnnotationCode::NORMAL) {
                    *freq.entry(w.label.symbol()).or_default() += 1;
                }
                let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
                ranked.truncate(MAX_CLASSES);
                if ranked.len() < 2 {
                    return Err(Error::invalid(
                        "classification needs at least two non-normal beat types",
                    ));
                }
                Ok(Self {
                    task,
                    classes: ranked.iter().map(|r| r.0.to_string()).collect(),
                    counts: ranked.iter().map(|r| r.1).collect(),
                })
            }
        }
    }

    pub fn class_of(&self, code: AnnotationCode) -> Option<usize> {
        match self.task {
            Task::Detection => Some(usize::from(code != AnnotationCode::NORMAL)),
            Task::Classification => self.classes.iter().position(|c| c == code.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub channels: ChannelMask,
    pub bins: usize,
    pub seed: u64,
    pub head: HeadConfig,
    pub autoencoder: TrainConfig,
    /// Run only the first folds of the plan.
    pub max_folds: Option<usize>,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Detection,
            channels: ChannelMask::ALL,
            bins: crate::tda::DEFAULT_BINS,
            seed: 0,
            head: HeadConfig::default(),
            autoencoder: TrainConfig::default(),
            max_folds: None,
            jobs: 1,
        }
    }
}

/// Which patients' windows a fitted component saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitAudit {
    pub component: String,
    pub windows: usize,
    pub patients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_patients: usize,
    pub validation_patients: usize,
    pub test_patients: usize,
    /// Training windows after balancing.
    pub train_windows: usize,
    pub validation: Option<MetricsReport>,
    pub validation_balanced: Option<MetricsReport>,
    pub test: Option<MetricsReport>,
    pub audit: Vec<FitAudit>,
    pub leakage_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4} (n={})", self.mean, self.std, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub test_weighted_accuracy: Option<Summary>,
    pub test_macro_ppv: Option<Summary>,
    pub test_macro_sensitivity: Option<Summary>,
    pub validation_weighted_accuracy: Option<Summary>,
    pub validation_balanced_weighted_accuracy: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: Task,
    pub channels: String,
    pub labels: LabelMap,
    pub layout: FeatureLayout,
    pub folds: Vec<FoldReport>,
    pub aggregate: Aggregate,
}

impl ExperimentReport {
    pub fn leakage_free(&self) -> bool {
        self.folds.iter().all(|f| f.leakage_free)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "fold,split,windows,accuracy,weighted_accuracy,macro_ppv,macro_sensitivity"
        )?;
        for f in &self.folds {
            let splits = [
                ("validation", &f.validation),
                ("validation_balanced", &f.validation_balanced),
                ("test", &f.test),
            ];
            for (name, m) in splits {
                if let Some(m) = m {
                    writeln!(
                        out,
                        "{},{name},{},{},{},{},{}",
                        f.fold,
                        m.support.iter().sum::<u64>(),
                        m.accuracy,
                        m.weighted_accuracy,
                        m.macro_ppv,
                        m.macro_sensitivity
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn audit(component: &str, windows: &[&BeatWindow]) -> FitAudit {
    let patients: BTreeSet<&str> = windows.iter().map(|w| w.patient_id.as_str()).collect();
    FitAudit {
        component: component.into(),
        windows: windows.len(),
        patients: patients.into_iter().map(String::from).collect(),
    }
}

/// Encoder widths for a window length: `W, W/2, W/4, 20, W/4, W/2, W`.
pub fn autoencoder_sizes(window_len: usize) -> Vec<usize> {
    let (a, b) = (window_len / 2, window_len / 4);
    vec![window_len, a, b, 20, b, a, window_len]
}

struct Channels<'a> {
    mask: ChannelMask,
    bins: usize,
    bank: Option<FeatureBank>,
    ae: Option<AEModel>,
    layout: &'a FeatureLayout,
}

impl Channels<'_> {
    fn vectors(&self, windows: &[&BeatWindow]) -> Result<Vec<Vec<f64>>> {
        let ae = match &self.ae {
            Some(m) => {
                Some(m.encode_batch(&windows.iter().map(|w| &w.samples[..]).collect::<Vec<_>>())?)
            }
            None => None,
        };
        windows
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut v = Vec::with_capacity(self.layout.len());
                if self.mask.betti {
                    let (sub, sup) = betti_pair_of(&w.samples, self.bins)?;
                    v.extend(sub.counts_f64());
                    v.extend(sup.counts_f64());
                }
                if let Some(bank) = &self.bank {
                    v.extend(bank.extract(w)?.values);
                }
                if let Some(ae) = &ae {
                    if self.mask.latent {
                        v.extend(&ae[i].latent);
                    }
                    if self.mask.residual {
                        v.push(ae[i].score);
                    }
                }
                debug_assert_eq!(v.len(), self.layout.len());
                Ok(v)
            })
            .collect()
    }
}

fn run_fold(
    windows: &[BeatWindow],
    fold: &Fold,
    labels: &LabelMap,
    layout: &FeatureLayout,
    cfg: &ExperimentConfig,
) -> Result<FoldReport> {
    let fold_seed = cfg.seed.wrapping_add(fold.index as u64);
    let roles: BTreeMap<&str, Role> = fold
        .train
        .iter()
        .map(|p| (p.as_str(), Role::Train))
        .chain(
            fold.validation
                .iter()
                .map(|p| (p.as_str(), Role::Validation)),
        )
        .chain(fold.test.iter().map(|p| (p.as_str(), Role::Test)))
        .collect();
    let pick = |role: Role| -> Vec<&BeatWindow> {
        windows
            .iter()
            .filter(|w| roles.get(w.patient_id.as_str()) == Some(&role))
            .filter(|w| labels.class_of(w.label).is_some())
            .collect()
    };
    let class = |w: &&BeatWindow| labels.class_of(w.label).expect("filtered");

    let mut train = pick(Role::Train);
    if labels.task == Task::Detection {
        train = balance_undersample(&train, class, fold_seed)?;
    }
    if train.is_empty() {
        return Err(Error::invalid(format!(
            "fold {} has no training windows",
            fold.index
        )));
    }
    let mut audits = Vec::new();

    let bank = if cfg.channels.features {
        audits.push(audit("pca", &train));
        Some(FeatureBank::fit(&train)?)
    } else {
        None
    };
    let ae = if cfg.channels.uses_autoencoder() {
        let normals: Vec<&BeatWindow> = windows
            .iter()
            .filter(|w| w.label == AnnotationCode::NORMAL)
            .filter(|w| roles.get(w.patient_id.as_str()) == Some(&Role::Train))
            .collect();
        if normals.is_empty() {
            return Err(Error::invalid(format!(
                "fold {} has no normal training windows",
                fold.index
            )));
        }
        audits.push(audit("autoencoder", &normals));
        let mut model =
            AEModel::with_sizes(&autoencoder_sizes(normals[0].samples.len()), fold_seed)?;
        let samples: Vec<&[f64]> = normals.iter().map(|w| &w.samples[..]).collect();
        let train_cfg = TrainConfig {
            seed: fold_seed,
            ..cfg.autoencoder.clone()
        };
        ae_train(&mut model, &samples, &train_cfg)?;
        Some(model)
    } else {
        None
    };
    let channels = Channels {
        mask: cfg.channels,
        bins: cfg.bins,
        bank,
        ae,
        layout,
    };

    let x = channels.vectors(&train)?;
    let y: Vec<usize> = train.iter().map(class).collect();
    audits.push(audit("classifier", &train));
    let head = softmax_head_train(
        &x,
        &y,
        labels.classes.len(),
        &HeadConfig {
            seed: fold_seed,
            ..cfg.head.clone()
        },
    )?;

    let evaluate = |set: &[&BeatWindow]| -> Result<Option<MetricsReport>> {
        if set.is_empty() {
            return Ok(None);
        }
        let pred: Vec<usize> = head
            .predict_batch(&channels.vectors(set)?)?
            .into_iter()
            .map(|p| p.label)
            .collect();
        let truth: Vec<usize> = set.iter().map(class).collect();
        compute_metrics(&pred, &truth, &labels.classes).map(Some)
    };
    let validation_set = pick(Role::Validation);
    let validation_balanced = match balance_undersample(&validation_set, class, fold_seed) {
        Ok(b) => evaluate(&b)?,
        Err(_) => None,
    };

    let allowed: BTreeSet<&str> = fold.train.iter().map(String::as_str).collect();
    let leakage_free = audits
        .iter()
        .all(|a| a.patients.iter().all(|p| allowed.contains(p.as_str())));
    Ok(FoldReport {
        fold: fold.index,
        train_patients: fold.train.len(),
        validation_patients: fold.validation.len(),
        test_patients: fold.test.len(),
        train_windows: train.len(),
        validation: evaluate(&validation_set)?,
        validation_balanced,
        test: evaluate(&pick(Role::Test))?,
        audit: audits,
        leakage_free,
    })
}

/// Runs every fold of `plan` (or the first `cfg.max_folds`): per fold, fits
/// PCA, autoencoder and classifier on training patients only and scores
/// validation and test patients.
pub fn run_experiment(
    windows: &[BeatWindow],
    plan: &SplitPlan,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.channels.validate()?;
    if windows.is_empty() {
        return Err(Error::invalid("no windows to evaluate"));
    }
    let labels = LabelMap::for_task(cfg.task, windows)?;
    let layout = channel_layout(&cfg.channels, cfg.bins, 20);
    let folds = &plan.folds[..cfg
        .max_folds
        .unwrap_or(plan.folds.len())
        .min(plan.folds.len())];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let reports: Vec<FoldReport> = pool.install(|| {
        folds
            .par_iter()
            .map(|f| run_fold(windows, f, &labels, &layout, cfg))
            .collect::<Result<_>>()
    })?;
    let metric = |pick: fn(&FoldReport) -> Option<&MetricsReport>,
                  value: fn(&MetricsReport) -> f64| {
        Summary::of(reports.iter().filter_map(pick).map(value))
    };
    let aggregate = Aggregate {
        test_weighted_accuracy: metric(|f| f.test.as_ref(), |m| m.weighted_accuracy),
        test_macro_ppv: metric(|f| f.test.as_ref(), |m| m.macro_ppv),
        test_macro_sensitivity: metric(|f| f.test.as_ref(), |m| m.macro_sensitivity),
        validation_weighted_accuracy: metric(|f| f.validation.as_ref(), |m| m.weighted_accuracy),
        validation_balanced_weighted_accuracy: metric(
            |f| f.validation_balanced.as_ref(),
            |m| m.weighted_accuracy,
        ),
    };
    Ok(ExperimentReport {
        task: cfg.task,
        channels: cfg.channels.label(),
        labels,
        layout,
        folds: reports,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationColumn {
    pub task: Task,
    pub betti: bool,
    pub channels: String,
    pub feature_len: usize,
}

/// Test weighted accuracy per fold (rows) and per task with and without the
/// Betti channel (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationGrid {
    pub columns: Vec<AblationColumn>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub summary: Vec<Option<Summary>>,
    pub reports: Vec<ExperimentReport>,
}

impl AblationGrid {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows.len(), self.columns.len())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names: Vec<String> = self
            .columns
            .iter()
            .map(|c| {
                format!(
                    "{}_{}",
                    c.task,
                    if c.betti {
                        "with_betti"
                    } else {
                        "without_betti"
                    }
                )
            })
            .collect();
        writeln!(out, "fold,{}", names.join(","))?;
        for (i, row) in self.rows.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_default())
                .collect();
            writeln!(out, "{i},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Runs `cfg` for each task with the Betti channel switched on and off.
pub fn run_ablation(
    windows: &[BeatWindow],
    plan: &SplitPlan,
    cfg: &ExperimentConfig,
    tasks: &[Task],
) -> Result<AblationGrid> {
    let mut columns = Vec::new();
    let mut reports = Vec::new();
    for &task in tasks {
        for betti in [true, false] {
            let mask = cfg.channels.with_betti(betti);
            let run = ExperimentConfig {
                task,
                channels: mask,
                ..cfg.clone()
            };
            let report = run_experiment(windows, plan, &run)?;
            columns.push(AblationColumn {
                task,
                betti,
                channels: mask.label(),
                feature_len: report.layout.len(),
            });
            reports.push(report);
        }
    }
    let n_rows = reports.first().map_or(0, |r| r.folds.len());
    let rows = (0..n_rows)
        .map(|i| {
            reports
                .iter()
                .map(|r| r.folds[i].test.as_ref().map(|m| m.weighted_accuracy))
                .collect()
        })
        .collect();
    let summary = reports
        .iter()
        .map(|r| r.aggregate.test_weighted_accuracy)
        .collect();
    Ok(AblationGrid {
        columns,
        rows,
        summary,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_parsing() {
        let m: ChannelMask = "betti,latent".parse().unwrap();
        assert_eq!(m.label(), "betti+latent");
        assert!("".parse::<ChannelMask>().is_err());
        assert!("betti,tda".parse::<ChannelMask>().is_err());
        assert!(ChannelMask::ALL.with_betti(false).validate().is_ok());
        let off = ChannelMask {
            betti: false,
            features: false,
            latent: false,
            residual: false,
        };
        assert!(off.validate().is_err());
    }

    #[test]
    fn layout_depends_on_betti() {
        let with = channel_layout(&ChannelMask::ALL, 100, 20);
        let without = channel_layout(&ChannelMask::ALL.with_betti(false), 100, 20);
        assert_eq!(with.len(), without.len() + 200);
        assert_eq!(
            without.len(),
            DFT_BINS + FIDUCIAL_LEN + STAT_LEN + PCA_COMPONENTS + 21
        );
        assert_eq!(
            autoencoder_sizes(400),
            crate::autoencoder::AE_SIZES.to_vec()
        );
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of([1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.n), (2.0, 1.0, 3));
        assert!(Summary::of([]).is_none());
    }
}
