use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::annotation::{
    decode_annotations, encode_annotations, Annotation, AnnotationCode, BeatCodes,
};
use super::header::{read_header, RecordHeader, SignalFormat, SignalSpec};
use super::signal::{decode_channel, encode_16, encode_212, to_adc, to_physical};

/// One beat annotation: sample index and type code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeatAnnotation {
    pub sample: usize,
    pub code: AnnotationCode,
}

/// A single-channel signal with its heartbeat annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub patient_id: String,
    pub signal: Signal,
    /// Strictly increasing, all `< signal.len()`.
    pub beat_annotations: Vec<BeatAnnotation>,
    pub source_rate_hz: f64,
    pub adc_gain: f64,
    pub adc_zero: i32,
}

impl AnnotatedRecord {
    /// Builds a record, keeping only beat codes inside the signal and
    /// dropping repeated sample indices (first one wins).
    pub fn new(
        patient_id: impl Into<String>,
        signal: Signal,
        annotations: impl IntoIterator<Item = BeatAnnotation>,
        beat_codes: &BeatCodes,
    ) -> Self {
        let n = signal.len();
        let mut beats: Vec<BeatAnnotation> = annotations
            .into_iter()
            .filter(|a| a.sample < n && beat_codes.is_beat(a.code))
            .collect();
        beats.sort_by_key(|a| a.sample);
        beats.dedup_by_key(|a| a.sample);
        Self {
            patient_id: patient_id.into(),
            source_rate_hz: signal.sample_rate_hz(),
            signal,
            beat_annotations: beats,
            adc_gain: 1.0,
            adc_zero: 0,
        }
    }

    pub fn beat_count(&self) -> usize {
        self.beat_annotations.len()
    }

    pub fn label_histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for b in &self.beat_annotations {
            *h.entry(b.code.symbol().to_string()).or_insert(0) += 1;
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub channel: usize,
    /// Annotation file extension, e.g. `atr`.
    pub annotator: String,
    pub beat_codes: BeatCodes,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            channel: 0,
            annotator: "atr".to_string(),
            beat_codes: BeatCodes::default(),
        }
    }
}

/// Strips a `.hea`/`.dat`/`.atr` extension if present.
pub fn record_base(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("hea" | "dat" | "atr") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Loads `<base>.hea`, its signal file and `<base>.<annotator>`.
pub fn load_record(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<AnnotatedRecord> {
    let base = record_base(path.as_ref());
    let header = read_header(with_ext(&base, "hea"))?;
    let dir = base.parent().unwrap_or_else(|| Path::new(""));
    let (group, pos) = header.file_group(opts.channel)?;
    let spec = &header.signals[opts.channel];
    if group
        .iter()
        .any(|&i| header.signals[i].format != spec.format)
    {
        return Err(Error::invalid(format!(
            "signals sharing {} use different formats",
            spec.file_name
        )));
    }
    let bytes = std::fs::read(dir.join(&spec.file_name))?;
    let raw = decode_channel(&bytes, spec.format, group.len(), header.n_samples, pos)?;
    let signal = to_physical(&raw, spec.adc_gain, spec.baseline, header.sample_rate_hz)?;

    let ann_path = with_ext(&base, &opts.annotator);
    let ann_bytes = std::fs::read(&ann_path)?;
    let anns = decode_annotations(&ann_bytes).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::parse(&ann_path, line, message),
        other => other,
    })?;

    let mut rec = AnnotatedRecord::new(
        header.name.clone(),
        signal,
        anns.iter().map(|a| BeatAnnotation {
            sample: a.sample as usize,
            code: a.code,
        }),
        &opts.beat_codes,
    );
    rec.adc_gain = spec.adc_gain;
    rec.adc_zero = spec.baseline;
    Ok(rec)
}

/// Channels and annotations to be written as a WFDB record.
#[derive(Debug, Clone)]
pub struct RecordWriter {
    pub name: String,
    pub sample_rate_hz: f64,
    pub format: SignalFormat,
    pub adc_gain: f64,
    pub adc_zero: i32,
    /// Physical-unit channels, all the same length.
    pub channels: Vec<Vec<f64>>,
    pub annotations: Vec<Annotation>,
}

impl RecordWriter {
    /// Writes `<dir>/<name>.hea`, `.dat` and `.atr`; returns the record base
    /// path.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let n = self.channels.first().map_or(0, Vec::len);
        if self.channels.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("channels differ in length"));
        }
        let adc: Vec<Vec<i32>> = self
            .channels
            .iter()
            .map(|c| to_adc(c, self.adc_gain, self.adc_zero))
            .collect();
        let mut frames = Vec::with_capacity(n * adc.len());
        for i in 0..n {
            frames.extend(adc.iter().map(|c| c[i]));
        }
        let (bytes, resolution) = match self.format {
            SignalFormat::Format212 => (encode_212(&frames)?, 12),
            SignalFormat::Format16 => (encode_16(&frames)?, 16),
        };
        let dat_name = format!("{}.dat", self.name);
        let header = RecordHeader {
            name: self.name.clone(),
            sample_rate_hz: self.sample_rate_hz,
            n_samples: Some(n),
            signals: adc
                .iter()
                .enumerate()
                .map(|(i, c)| SignalSpec {
                    file_name: dat_name.clone(),
                    format: self.format,
                    adc_gain: self.adc_gain,
                    baseline: self.adc_zero,
                    units: "mV".into(),
                    adc_resolution: resolution,
                    adc_zero: self.adc_zero,
                    initial_value: c.first().copied().unwrap_or(0),
                    checksum: Some(c.iter().fold(0i32, |s, &v| s.wrapping_add(v)) as i16 as i32),
                    description: format!("ch{i}"),
                })
                .collect(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.hea", self.name)), header.to_text())?;
        std::fs::write(dir.join(&dat_name), bytes)?;
        std::fs::write(
            dir.join(format!("{}.atr", self.name)),
            encode_annotations(&self.annotations)?,
        )?;
        Ok(dir.join(&self.name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub record_path: PathBuf,
    pub database: String,
    pub patient_id: String,
    pub beats: usize,
    pub duration_hours: f64,
    pub labels: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatabaseSummary {
    pub patients: usize,
    pub labels: usize,
    pub duration_hours: f64,
    pub label_histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub databases: BTreeMap<String, DatabaseSummary>,
    /// Records that failed to load, with the reason.
    pub failures: Vec<(PathBuf, String)>,
}

impl DatasetManifest {
    pub fn total_patients(&self) -> usize {
        self.databases.values().map(|d| d.patients).sum()
    }

    pub fn total_labels(&self) -> usize {
        self.databases.values().map(|d| d.labels).sum()
    }
}

/// The database a record belongs to: its parent directory name.
pub fn database_of(path: &Path) -> String {
    path.parent()
        .and_then(Path::file_name)
        .and_then(|s| s.to_str())
        .unwrap_or("default")
        .to_string()
}

/// Loads every record and tallies patients and beat labels per database.
/// Records that fail to load are listed in `failures` and otherwise skipped.
pub fn build_manifest(paths: &[PathBuf], opts: &LoadOptions) -> Result<DatasetManifest> {
    let mut m = DatasetManifest::default();
    for path in paths {
        let base = record_base(path);
        let rec = match load_record(&base, opts) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping {}: {e}", base.display());
                m.failures.push((base, e.to_string()));
                continue;
            }
        };
        let database = database_of(&base);
        if m.entries
            .iter()
            .any(|e| e.database == database && e.patient_id == rec.patient_id)
        {
            return Err(Error::invalid(format!(
                "patient {} appears twice in database {database}",
                rec.patient_id
            )));
        }
        let entry = ManifestEntry {
            record_path: base,
            database: database.clone(),
            patient_id: rec.patient_id.clone(),
            beats: rec.beat_count(),
            duration_hours: rec.signal.duration_s() / 3600.0,
            labels: rec.label_histogram(),
        };
        let db = m.databases.entry(database).or_default();
        db.patients += 1;
        db.labels += entry.beats;
        db.duration_hours += entry.duration_hours;
        for (k, v) in &entry.labels {
            *db.label_histogram.entry(k.clone()).or_insert(0) += v;
        }
        m.entries.push(entry);
    }
    Ok(m)
}
