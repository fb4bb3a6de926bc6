use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::signal::Signal;
use crate::wfdb::{AnnotatedRecord, BeatAnnotation};

use super::{
    kalman_smooth, normalize, remap_index, remove_baseline, resample_linear, FirFilter,
    PreprocessConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageInfo {
    pub stage: String,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stages: Vec<StageInfo>,
    pub wavelet_levels_used: usize,
    pub flags: Vec<String>,
}

impl StageReport {
    fn record(&mut self, stage: &str, s: &Signal) {
        self.stages.push(StageInfo {
            stage: stage.to_string(),
            samples: s.len(),
            sample_rate_hz: s.sample_rate_hz(),
            energy: s.energy(),
        });
    }
}

/// resample -> baseline removal -> band-pass -> (Kalman) -> normalize.
pub fn preprocess_signal(signal: &Signal, cfg: &PreprocessConfig) -> Result<(Signal, StageReport)> {
    cfg.validate()?;
    let mut report = StageReport::default();
    report.record("input", signal);

    let s = resample_linear(signal, cfg.target_rate_hz)?;
    report.record("resample", &s);

    let base = remove_baseline(&s, cfg)?;
    report.wavelet_levels_used = base.levels_used;
    if base.degraded {
        report.flags.push(format!(
            "baseline: signal too short for {} levels, used {}",
            cfg.wavelet_levels, base.levels_used
        ));
    }
    let s = base.signal;
    report.record("baseline", &s);

    let fir = FirFilter::from_config(cfg)?;
    let s = s.with_samples(fir.apply(s.samples()))?;
    report.record("fir", &s);

    let s = if cfg.kalman_enabled {
        let k = kalman_smooth(&s, cfg)?;
        report.record("kalman", &k);
        k
    } else {
        s
    };

    let norm = normalize(&s)?;
    if norm.degenerate {
        report.flags.push("normalize: constant signal".into());
    }
    report.record("normalize", &norm.signal);
    Ok((norm.signal, report))
}

/// Runs [`preprocess_signal`] and moves the beat annotations to the new
/// sample rate.
pub fn preprocess_record(
    record: &AnnotatedRecord,
    cfg: &PreprocessConfig,
) -> Result<(AnnotatedRecord, StageReport)> {
    let (signal, report) = preprocess_signal(&record.signal, cfg)?;
    let source = record.signal.sample_rate_hz();
    let n = signal.len();
    let mut beats: Vec<BeatAnnotation> = record
        .beat_annotations
        .iter()
        .map(|b| BeatAnnotation {
            sample: remap_index(b.sample, source, cfg.target_rate_hz, n),
            code: b.code,
        })
        .collect();
    beats.dedup_by_key(|b| b.sample);
    Ok((
        AnnotatedRecord {
            patient_id: record.patient_id.clone(),
            signal,
            beat_annotations: beats,
            source_rate_hz: record.source_rate_hz,
            adc_gain: record.adc_gain,
            adc_zero: record.adc_zero,
        },
        report,
    ))
}
