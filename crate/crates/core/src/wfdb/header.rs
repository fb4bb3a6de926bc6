use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WFDB default when a record line omits the sampling frequency.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 250.0;
/// WFDB default when a signal line omits the gain or gives it as zero.
pub const DEFAULT_ADC_GAIN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalFormat {
    /// Two 12-bit two's-complement samples packed in three bytes.
    Format212,
    /// Little-endian 16-bit two's complement.
    Format16,
}

impl SignalFormat {
    pub fn from_code(code: u16) -> Result<Self> {
        match code {
            212 => Ok(Self::Format212),
            16 => Ok(Self::Format16),
            other => Err(Error::UnsupportedFormat(other)),
        }
    }

    pub fn code(self) -> u16 {
        match self {
            Self::Format212 => 212,
            Self::Format16 => 16,
        }
    }

    /// Bytes needed to hold `total` interleaved samples.
    pub fn byte_len(self, total: usize) -> usize {
        match self {
            Self::Format212 => (total * 3).div_ceil(2),
            Self::Format16 => total * 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub file_name: String,
    pub format: SignalFormat,
    /// ADC units per physical unit.
    pub adc_gain: f64,
    /// ADC value corresponding to 0 physical units.
    pub baseline: i32,
    pub units: String,
    pub adc_resolution: u32,
    pub adc_zero: i32,
    pub initial_value: i32,
    pub checksum: Option<i32>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub name: String,
    pub sample_rate_hz: f64,
    /// Samples per channel; `None` when the header leaves it out.
    pub n_samples: Option<usize>,
    pub signals: Vec<SignalSpec>,
}

impl RecordHeader {
    pub fn channel_count(&self) -> usize {
        self.signals.len()
    }

    /// Signals stored in the same file as `channel`, and the position of
    /// `channel` among them.
    pub fn file_group(&self, channel: usize) -> Result<(Vec<usize>, usize)> {
        let spec = self.signals.get(channel).ok_or_else(|| {
            Error::invalid(format!(
                "channel {channel} out of range for {} signals",
                self.signals.len()
            ))
        })?;
        let group: Vec<usize> = (0..self.signals.len())
            .filter(|&i| self.signals[i].file_name == spec.file_name)
            .collect();
        let pos = group.iter().position(|&i| i == channel).unwrap_or(0);
        Ok((group, pos))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {}",
            self.name,
            self.signals.len(),
            self.sample_rate_hz
        );
        if let Some(n) = self.n_samples {
            s.push_str(&format!(" {n}"));
        }
        s.push('\n');
        for sig in &self.signals {
            s.push_str(&format!(
                "{} {} {}({})/{} {} {} {} {} 0 {}\n",
                sig.file_name,
                sig.format.code(),
                sig.adc_gain,
                sig.baseline,
                sig.units,
                sig.adc_resolution,
                sig.adc_zero,
                sig.initial_value,
                sig.checksum.unwrap_or(0),
                sig.description
            ));
        }
        s
    }
}

pub fn read_header(path: impl AsRef<Path>) -> Result<RecordHeader> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_header(&text, path)
}

/// Parses `.hea` text. `origin` is only used to label errors.
pub fn parse_header(text: &str, origin: &Path) -> Result<RecordHeader> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, record_line) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "missing record line"))?;
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);

    let fields: Vec<&str> = record_line.split_whitespace().collect();
    let name = fields[0];
    if name.contains('/') {
        return Err(err(
            line_no,
            "multi-segment records are not supported".into(),
        ));
    }
    if !name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(err(line_no, format!("invalid record name {name:?}")));
    }
    let n_signals: usize = fields
        .get(1)
        .ok_or_else(|| err(line_no, "missing signal count".into()))?
        .parse()
        .map_err(|_| err(line_no, format!("invalid signal count {:?}", fields[1])))?;

    let sample_rate_hz = match fields.get(2) {
        None => DEFAULT_SAMPLE_RATE_HZ,
        Some(tok) => {
            // "360", "360/1000(0)": the counter frequency is not needed here.
            let f = tok.split(['/', '(']).next().unwrap_or_default();
            let v: f64 = f
                .parse()
                .map_err(|_| err(line_no, format!("invalid sampling frequency {tok:?}")))?;
            if v > 0.0 {
                v
            } else {
                DEFAULT_SAMPLE_RATE_HZ
            }
        }
    };
    let n_samples = match fields.get(3) {
        None => None,
        Some(tok) => {
            let n: usize = tok
                .parse()
                .map_err(|_| err(line_no, format!("invalid sample count {tok:?}")))?;
            (n > 0).then_some(n)
        }
    };

    let mut signals = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| err(line_no, format!("expected {n_signals} signal lines")))?;
        signals.push(parse_signal_line(line).map_err(|m| err(ln, m))?);
    }

    Ok(RecordHeader {
        name: name.to_string(),
        sample_rate_hz,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line: &str) -> std::result::Result<SignalSpec, String> {
    let mut parts = line.split_whitespace();
    let file_name = parts.next().ok_or("empty signal line")?.to_string();
    let fmt_tok = parts.next().ok_or("missing format field")?;
    let digits: String = fmt_tok.chars().take_while(|c| c.is_ascii_digit()).collect();
    let code: u16 = digits
        .parse()
        .map_err(|_| format!("invalid format field {fmt_tok:?}"))?;
    // Keep the typed error message; the caller wraps it with the line number.
    let format = SignalFormat::from_code(code).map_err(|e| e.to_string())?;
    if fmt_tok[digits.len()..].contains(['x', ':', '+']) {
        return Err(format!(
            "format modifiers (samples/frame, skew, offset) are not supported: {fmt_tok:?}"
        ));
    }

    let rest: Vec<&str> = parts.collect();
    let int_at = |i: usize, default: i32| -> std::result::Result<i32, String> {
        match rest.get(i) {
            None => Ok(default),
            Some(t) => t
                .parse()
                .map_err(|_| format!("invalid integer field {t:?}")),
        }
    };

    let adc_resolution = int_at(1, 12)? as u32;
    let adc_zero = int_at(2, 0)?;
    let initial_value = int_at(3, 0)?;
    let checksum = match rest.get(4) {
        None => None,
        Some(t) => Some(t.parse().map_err(|_| format!("invalid checksum {t:?}"))?),
    };
    let description = if rest.len() > 6 {
        rest[6..].join(" ")
    } else {
        String::new()
    };

    let (mut adc_gain, mut baseline, mut units) = (DEFAULT_ADC_GAIN, adc_zero, "mV".to_string());
    if let Some(tok) = rest.first() {
        let (gain_part, unit_part) = match tok.split_once('/') {
            Some((g, u)) => (g, Some(u)),
            None => (*tok, None),
        };
        let (g, b) = match gain_part.split_once('(') {
            Some((g, b)) => (g, Some(b.trim_end_matches(')'))),
            None => (gain_part, None),
        };
        let gain: f64 = g.parse().map_err(|_| format!("invalid gain {tok:?}"))?;
        if gain != 0.0 {
            adc_gain = gain;
        }
        if let Some(b) = b {
            baseline = b.parse().map_err(|_| format!("invalid baseline {tok:?}"))?;
        }
        if let Some(u) = unit_part {
            units = u.to_string();
        }
    }

    Ok(SignalSpec {
        file_name,
        format,
        adc_gain,
        baseline,
        units,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        description,
    })
}
