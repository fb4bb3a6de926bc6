use crate::error::Result;
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub signal: Signal,
    /// The input was constant; the output is all zeros.
    pub degenerate: bool,
}

/// Min-max rescale to `[0, 1]`, then subtract the mean of the result.
pub fn normalize(signal: &Signal) -> Result<Normalized> {
    let x = signal.samples();
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Ok(Normalized {
            signal: signal.with_samples(vec![0.0; x.len()])?,
            degenerate: true,
        });
    }
    let span = hi - lo;
    let scaled: Vec<f64> = x.iter().map(|v| (v - lo) / span).collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    Ok(Normalized {
        signal: signal.with_samples(scaled.into_iter().map(|v| v - mean).collect())?,
        degenerate: false,
    })
}
