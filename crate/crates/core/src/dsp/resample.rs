use crate::error::{Error, Result};
use crate::signal::Signal;

/// Linear-interpolation resampling to `target_rate_hz`. The output has
/// `round(n * target / source)` samples (at least one).
pub fn resample_linear(signal: &Signal, target_rate_hz: f64) -> Result<Signal> {
    if !(target_rate_hz.is_finite() && target_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "invalid target rate {target_rate_hz}"
        )));
    }
    let source = signal.sample_rate_hz();
    if source == target_rate_hz {
        return Ok(signal.clone());
    }
    let x = signal.samples();
    let n = x.len();
    let ratio = source / target_rate_hz;
    let out_len = ((n as f64 / ratio).round() as usize).max(1);
    let out = (0..out_len)
        .map(|j| {
            let pos = j as f64 * ratio;
            let i = pos.floor() as usize;
            if i + 1 >= n {
                return x[n - 1];
            }
            let t = pos - i as f64;
            x[i] + (x[i + 1] - x[i]) * t
        })
        .collect();
    Signal::new(out, target_rate_hz)
}

/// Maps a sample index from the source rate to the target rate, clamped to
/// the resampled length.
pub fn remap_index(
    index: usize,
    source_rate_hz: f64,
    target_rate_hz: f64,
    out_len: usize,
) -> usize {
    let j = (index as f64 * target_rate_hz / source_rate_hz).round() as usize;
    j.min(out_len.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_second_stays_one_second() {
        let s = Signal::new(vec![0.0; 360], 360.0).unwrap();
        let r = resample_linear(&s, 200.0).unwrap();
        assert_eq!(r.len(), 200);
        assert_eq!(r.sample_rate_hz(), 200.0);
    }

    #[test]
    fn identity_rate() {
        let s = Signal::new(vec![1.0, 2.0, 5.0], 200.0).unwrap();
        assert_eq!(resample_linear(&s, 200.0).unwrap(), s);
    }

    #[test]
    fn sinusoid_accuracy() {
        let f = 5.0;
        let x: Vec<f64> = (0..3600)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / 360.0).sin())
            .collect();
        let r = resample_linear(&Signal::new(x, 360.0).unwrap(), 200.0).unwrap();
        let err = r
            .samples()
            .iter()
            .enumerate()
            .map(|(j, v)| (v - (2.0 * std::f64::consts::PI * f * j as f64 / 200.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "max error {err}");
    }

    #[test]
    fn index_remap() {
        assert_eq!(remap_index(360, 360.0, 200.0, 1000), 200);
        assert_eq!(remap_index(9, 360.0, 200.0, 1000), 5);
        assert_eq!(remap_index(10_000, 360.0, 200.0, 100), 99);
    }

    #[test]
    fn rejects_bad_rate() {
        let s = Signal::new(vec![1.0], 360.0).unwrap();
        assert!(resample_linear(&s, 0.0).is_err());
        assert!(resample_linear(&s, f64::NAN).is_err());
    }
}
