//! Slicing annotated records into fixed-length windows of consecutive beats.
//!
//! A window covering beats `b[i] .. b[i+k-1]` starts halfway between `b[i-1]`
//! and `b[i]` and ends halfway between `b[i+k-1]` and `b[i+k]`, so its raw
//! length follows the local rhythm. The raw slice is then linearly
//! interpolated to a fixed number of samples. The label is the beat at
//! `i + k / 2`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wfdb::{AnnotatedRecord, AnnotationCode, BeatCodes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub beats_per_window: usize,
    pub window_len: usize,
    pub stride_beats: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            beats_per_window: 3,
            window_len: 400,
            stride_beats: 1,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beats_per_window == 0 {
            return Err(Error::invalid("beats_per_window must be at least 1"));
        }
        if self.window_len < 8 {
            return Err(Error::invalid(format!(
                "window_len must be at least 8, got {}",
                self.window_len
            )));
        }
        if self.stride_beats == 0 {
            return Err(Error::invalid("stride_beats must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatWindow {
    pub patient_id: String,
    pub samples: Vec<f64>,
    pub label: AnnotationCode,
    pub beat_count: usize,
    /// Index of the labelled beat in the record's beat list.
    pub center_beat_index: usize,
    /// Inclusive raw sample range before length standardization.
    pub raw_span: (usize, usize),
    /// Position of the labelled beat in window coordinates.
    pub center_position: f64,
    /// Sample rate of the record the window was cut from.
    pub source_rate_hz: f64,
}

impl BeatWindow {
    /// Samples per second after stretching the raw span to `samples.len()`.
    pub fn effective_rate_hz(&self) -> f64 {
        let (start, end) = self.raw_span;
        let raw = (end - start).max(1) as f64;
        (self.samples.len() - 1) as f64 * self.source_rate_hz / raw
    }

    pub fn raw_len(&self) -> usize {
        self.raw_span.1 - self.raw_span.0 + 1
    }
}

/// Linear interpolation of `raw` onto `len` evenly spaced positions; both
/// end samples are kept exactly.
pub fn standardize_length(raw: &[f64], len: usize) -> Result<Vec<f64>> {
    if raw.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples to interpolate, got {}",
            raw.len()
        )));
    }
    if len < 2 {
        return Err(Error::invalid(format!(
            "target length must be at least 2, got {len}"
        )));
    }
    let n = raw.len();
    let denom = (len - 1) as f64;
    Ok((0..len)
        .map(|j| {
            let pos = (j * (n - 1)) as f64 / denom;
            let i = pos.floor() as usize;
            if i >= n - 1 {
                return raw[n - 1];
            }
            let t = pos - i as f64;
            raw[i] + (raw[i + 1] - raw[i]) * t
        })
        .collect())
}

/// Cuts every complete window from `record`. Records with fewer than
/// `k + 2` beats yield no windows.
pub fn slice_windows(record: &AnnotatedRecord, cfg: &SegmentConfig) -> Result<Vec<BeatWindow>> {
    slice_windows_with(record, cfg, &BeatCodes::default())
}

pub fn slice_windows_with(
    record: &AnnotatedRecord,
    cfg: &SegmentConfig,
    beat_codes: &BeatCodes,
) -> Result<Vec<BeatWindow>> {
    cfg.validate()?;
    let k = cfg.beats_per_window;
    let beats: Vec<_> = record
        .beat_annotations
        .iter()
        .filter(|b| beat_codes.is_beat(b.code))
        .collect();
    let x = record.signal.samples();
    let mut out = Vec::new();
    let mut i = 1;
    while i + k < beats.len() {
        let start = (beats[i - 1].sample + beats[i].sample) / 2;
        let end = ((beats[i + k - 1].sample + beats[i + k].sample) / 2).min(x.len() - 1);
        if end > start {
            let center = i + k / 2;
            let samples = standardize_length(&x[start..=end], cfg.window_len)?;
            out.push(BeatWindow {
                patient_id: record.patient_id.clone(),
                samples,
                label: beats[center].code,
                beat_count: k,
                center_beat_index: center,
                raw_span: (start, end),
                center_position: (beats[center].sample - start) as f64
                    * (cfg.window_len - 1) as f64
                    / (end - start) as f64,
                source_rate_hz: record.signal.sample_rate_hz(),
            });
        }
        i += cfg.stride_beats;
    }
    Ok(out)
}

const TABLE_MAGIC: &[u8; 4] = b"ECGW";
const TABLE_VERSION: u16 = 1;

/// Binary window table: a header (`ECGW`, version, window length, row
/// count) followed by one row per window, all little-endian.
pub fn write_table<W: Write>(mut out: W, windows: &[BeatWindow]) -> Result<()> {
    let len = windows.first().map_or(0, |w| w.samples.len());
    if windows.iter().any(|w| w.samples.len() != len) {
        return Err(Error::invalid("windows differ in length"));
    }
    out.write_all(TABLE_MAGIC)?;
    out.write_all(&TABLE_VERSION.to_le_bytes())?;
    out.write_all(&(len as u32).to_le_bytes())?;
    out.write_all(&(windows.len() as u64).to_le_bytes())?;
    for w in windows {
        let id = w.patient_id.as_bytes();
        let id_len = u16::try_from(id.len()).map_err(|_| Error::invalid("patient id too long"))?;
        out.write_all(&[w.label.value()])?;
        out.write_all(&id_len.to_le_bytes())?;
        out.write_all(id)?;
        out.write_all(&(w.beat_count as u16).to_le_bytes())?;
        out.write_all(&(w.center_beat_index as u64).to_le_bytes())?;
        out.write_all(&(w.raw_span.0 as u64).to_le_bytes())?;
        out.write_all(&(w.raw_span.1 as u64).to_le_bytes())?;
        out.write_all(&w.center_position.to_le_bytes())?;
        out.write_all(&w.source_rate_hz.to_le_bytes())?;
        for v in &w.samples {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::invalid("window table is truncated"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_table<R: Read>(mut input: R) -> Result<Vec<BeatWindow>> {
    if &take::<4>(&mut input)? != TABLE_MAGIC {
        return Err(Error::invalid("not a window table (bad magic)"));
    }
    let version = u16::from_le_bytes(take(&mut input)?);
    if version != TABLE_VERSION {
        return Err(Error::invalid(format!(
            "unsupported window table version {version}"
        )));
    }
    let len = u32::from_le_bytes(take(&mut input)?) as usize;
    let count = u64::from_le_bytes(take(&mut input)?) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let label = AnnotationCode::new(take::<1>(&mut input)?[0])?;
        let id_len = u16::from_le_bytes(take(&mut input)?) as usize;
        let mut id = vec![0u8; id_len];
        input.read_exact(&mut id)?;
        let patient_id =
            String::from_utf8(id).map_err(|_| Error::invalid("patient id is not UTF-8"))?;
        let beat_count = u16::from_le_bytes(take(&mut input)?) as usize;
        let center_beat_index = u64::from_le_bytes(take(&mut input)?) as usize;
        let start = u64::from_le_bytes(take(&mut input)?) as usize;
        let end = u64::from_le_bytes(take(&mut input)?) as usize;
        let center_position = f64::from_le_bytes(take(&mut input)?);
        let source_rate_hz = f64::from_le_bytes(take(&mut input)?);
        let samples = (0..len)
            .map(|_| take(&mut input).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        out.push(BeatWindow {
            patient_id,
            samples,
            label,
            beat_count,
            center_beat_index,
            raw_span: (start, end),
            center_position,
            source_rate_hz,
        });
    }
    Ok(out)
}

/// One row per window: metadata columns then `s0..s{W-1}`.
pub fn write_table_csv<W: Write>(mut out: W, windows: &[BeatWindow]) -> Result<()> {
    let len = windows.first().map_or(0, |w| w.samples.len());
    write!(out, "patient_id,label,center_beat_index,start,end")?;
    for j in 0..len {
        write!(out, ",s{j}")?;
    }
    writeln!(out)?;
    for w in windows {
        write!(
            out,
            "{},{},{},{},{}",
            w.patient_id, w.label, w.center_beat_index, w.raw_span.0, w.raw_span.1
        )?;
        for v in &w.samples {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
