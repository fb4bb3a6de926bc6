//! Sample decoding for formats 212 and 16.
//!
//! Format 212 packs each pair of consecutive samples `(a, b)` of the
//! interleaved stream into three bytes:
//!
//! ```text
//! byte0 = a[7:0]
//! byte1 = b[11:8] << 4 | a[11:8]
//! byte2 = b[7:0]
//! ```
//!
//! An odd trailing sample occupies the first two bytes of a triple.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::header::SignalFormat;

fn sign_extend_12(v: u16) -> i32 {
    let v = i32::from(v & 0x0FFF);
    if v & 0x800 != 0 {
        v - 0x1000
    } else {
        v
    }
}

/// Decodes `total` interleaved samples from format-212 bytes.
pub fn decode_212(bytes: &[u8], total: usize) -> Result<Vec<i32>> {
    let needed = SignalFormat::Format212.byte_len(total);
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    let mut out = Vec::with_capacity(total);
    for (k, chunk) in bytes.chunks(3).enumerate() {
        if 2 * k >= total {
            break;
        }
        let a = u16::from(chunk[0]) | (u16::from(chunk[1] & 0x0F) << 8);
        out.push(sign_extend_12(a));
        if 2 * k + 1 < total {
            let b = u16::from(chunk[2]) | (u16::from(chunk[1] & 0xF0) << 4);
            out.push(sign_extend_12(b));
        }
    }
    Ok(out)
}

/// Encodes samples in `[-2048, 2047]` as format 212.
pub fn encode_212(samples: &[i32]) -> Result<Vec<u8>> {
    if let Some(v) = samples.iter().find(|v| !(-2048..=2047).contains(*v)) {
        return Err(Error::invalid(format!(
            "sample {v} does not fit in 12 bits"
        )));
    }
    let mut out = Vec::with_capacity(SignalFormat::Format212.byte_len(samples.len()));
    for pair in samples.chunks(2) {
        let a = (pair[0] & 0x0FFF) as u16;
        out.push((a & 0xFF) as u8);
        match pair.get(1) {
            Some(&b) => {
                let b = (b & 0x0FFF) as u16;
                out.push((((b >> 8) << 4) | (a >> 8)) as u8);
                out.push((b & 0xFF) as u8);
            }
            None => out.push((a >> 8) as u8),
        }
    }
    Ok(out)
}

pub fn decode_16(bytes: &[u8], total: usize) -> Result<Vec<i32>> {
    let needed = total * 2;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            found: bytes.len(),
        });
    }
    Ok(bytes[..needed]
        .chunks_exact(2)
        .map(|c| i32::from(i16::from_le_bytes([c[0], c[1]])))
        .collect())
}

pub fn encode_16(samples: &[i32]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(samples.len() * 2);
    for &v in samples {
        let v = i16::try_from(v)
            .map_err(|_| Error::invalid(format!("sample {v} does not fit in 16 bits")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Picks one channel out of an interleaved frame stream.
pub fn deinterleave(frames: &[i32], channel_count: usize, channel_index: usize) -> Vec<i32> {
    frames
        .iter()
        .skip(channel_index)
        .step_by(channel_count)
        .copied()
        .collect()
}

fn check_channel(channel_count: usize, channel_index: usize) -> Result<()> {
    if channel_count == 0 || channel_index >= channel_count {
        return Err(Error::invalid(format!(
            "channel {channel_index} out of range for {channel_count} channels"
        )));
    }
    Ok(())
}

/// Decodes one channel from in-memory signal-file bytes. With
/// `n_samples = None` the sample count is inferred from the byte length.
pub fn decode_channel(
    bytes: &[u8],
    format: SignalFormat,
    channel_count: usize,
    n_samples: Option<usize>,
    channel_index: usize,
) -> Result<Vec<i32>> {
    check_channel(channel_count, channel_index)?;
    let n = n_samples.unwrap_or_else(|| match format {
        SignalFormat::Format212 => bytes.len() * 2 / 3 / channel_count,
        SignalFormat::Format16 => bytes.len() / 2 / channel_count,
    });
    let total = n * channel_count;
    let frames = match format {
        SignalFormat::Format212 => decode_212(bytes, total)?,
        SignalFormat::Format16 => decode_16(bytes, total)?,
    };
    Ok(deinterleave(&frames, channel_count, channel_index))
}

/// Reads `n_samples` samples of one channel from a format-212 file.
pub fn read_signal_212(
    path: impl AsRef<Path>,
    channel_count: usize,
    n_samples: usize,
    channel_index: usize,
) -> Result<Vec<i32>> {
    check_channel(channel_count, channel_index)?;
    let bytes = std::fs::read(path)?;
    decode_channel(
        &bytes,
        SignalFormat::Format212,
        channel_count,
        Some(n_samples),
        channel_index,
    )
}

/// `(raw - adc_zero) / adc_gain`, in physical units (mV for ECG leads).
pub fn to_physical(
    raw: &[i32],
    adc_gain: f64,
    adc_zero: i32,
    sample_rate_hz: f64,
) -> Result<Signal> {
    if adc_gain == 0.0 || !adc_gain.is_finite() {
        return Err(Error::invalid(format!(
            "ADC gain must be non-zero, got {adc_gain}"
        )));
    }
    Signal::new(
        raw.iter()
            .map(|&r| f64::from(r - adc_zero) / adc_gain)
            .collect(),
        sample_rate_hz,
    )
}

/// Nearest ADC code for a physical value; the inverse of [`to_physical`] up
/// to half a quantization step.
pub fn to_adc(physical: &[f64], adc_gain: f64, adc_zero: i32) -> Vec<i32> {
    physical
        .iter()
        .map(|v| (v * adc_gain).round() as i32 + adc_zero)
        .collect()
}
