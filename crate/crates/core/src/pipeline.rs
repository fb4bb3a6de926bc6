//! Records to beat windows: preprocessing followed by slicing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{preprocess_record, PreprocessConfig, StageReport};
use crate::error::{Error, Result};
use crate::segment::{slice_windows, BeatWindow, SegmentConfig};
use crate::wfdb::AnnotatedRecord;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub segment: SegmentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub patient_id: String,
    pub beats: usize,
    pub windows: usize,
    pub stages: StageReport,
}

pub fn record_windows(
    record: &AnnotatedRecord,
    cfg: &PipelineConfig,
) -> Result<(Vec<BeatWindow>, RecordOutcome)> {
    let (clean, stages) = preprocess_record(record, &cfg.preprocess)?;
    let windows = slice_windows(&clean, &cfg.segment)?;
    let outcome = RecordOutcome {
        patient_id: record.patient_id.clone(),
        beats: clean.beat_annotations.len(),
        windows: windows.len(),
        stages,
    };
    Ok((windows, outcome))
}

/// Processes records on up to `jobs` threads; output order follows input.
pub fn cohort_windows(
    records: &[AnnotatedRecord],
    cfg: &PipelineConfig,
    jobs: usize,
) -> Result<(Vec<BeatWindow>, Vec<RecordOutcome>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let parts: Vec<(Vec<BeatWindow>, RecordOutcome)> = pool.install(|| {
        records
            .par_iter()
            .map(|r| record_windows(r, cfg))
            .collect::<Result<_>>()
    })?;
    let mut windows = Vec::new();
    let mut outcomes = Vec::with_capacity(parts.len());
    for (w, o) in parts {
        windows.extend(w);
        outcomes.push(o);
    }
    Ok((windows, outcomes))
}
