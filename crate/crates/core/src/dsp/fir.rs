use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::{reflect_index, PreprocessConfig};

/// Linear-phase windowed-sinc band-pass filter (Hamming window).
///
/// Built as the difference of two low-pass kernels, each normalized to unit
/// DC gain, so the band-pass has exactly zero gain at DC.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    sample_rate_hz: f64,
}

fn hamming(n: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
}

fn lowpass(cutoff_hz: f64, taps: usize, rate_hz: f64) -> Vec<f64> {
    let fc = cutoff_hz / rate_hz;
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * x).sin() / (PI * x)
            };
            sinc * hamming(n, taps)
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    h
}

impl FirFilter {
    pub fn bandpass(low_hz: f64, high_hz: f64, taps: usize, rate_hz: f64) -> Result<Self> {
        if taps.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "FIR tap count must be odd, got {taps}"
            )));
        }
        if !(0.0 < low_hz && low_hz < high_hz && high_hz < rate_hz / 2.0) {
            return Err(Error::invalid(format!(
                "band edges {low_hz}..{high_hz} Hz invalid at {rate_hz} Hz"
            )));
        }
        let hi = lowpass(high_hz, taps, rate_hz);
        let lo = lowpass(low_hz, taps, rate_hz);
        Ok(Self {
            taps: hi.iter().zip(&lo).map(|(a, b)| a - b).collect(),
            sample_rate_hz: rate_hz,
        })
    }

    pub fn from_config(cfg: &PreprocessConfig) -> Result<Self> {
        Self::bandpass(
            cfg.fir_low_hz,
            cfg.fir_high_hz,
            cfg.fir_taps,
            cfg.target_rate_hz,
        )
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Magnitude of the frequency response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (k, h)| {
                let ph = w * k as f64;
                (re + h * ph.cos(), im - h * ph.sin())
            });
        re.hypot(im)
    }

    /// Zero-phase filtering: the kernel is centred on each output sample,
    /// which cancels the `(taps - 1) / 2` group delay, and the input is
    /// mirror-extended at both ends.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let half = (self.taps.len() / 2) as isize;
        (0..n as isize)
            .map(|i| {
                let start = i - half;
                let interior = start >= 0 && (start as usize + self.taps.len()) <= n;
                if interior {
                    let s = start as usize;
                    self.taps
                        .iter()
                        .zip(&x[s..s + self.taps.len()])
                        .map(|(h, v)| h * v)
                        .sum()
                } else {
                    self.taps
                        .iter()
                        .enumerate()
                        .map(|(k, h)| h * x[reflect_index(start + k as isize, n)])
                        .sum()
                }
            })
            .collect()
    }
}

pub fn fir_bandpass(signal: &Signal, cfg: &PreprocessConfig) -> Result<Signal> {
    let filter = FirFilter::bandpass(
        cfg.fir_low_hz,
        cfg.fir_high_hz,
        cfg.fir_taps,
        signal.sample_rate_hz(),
    )?;
    signal.with_samples(filter.apply(signal.samples()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / rate).sin())
            .collect()
    }

    fn peak(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn designed_gains() {
        let f = FirFilter::from_config(&PreprocessConfig::default()).unwrap();
        assert!((0.9..=1.1).contains(&f.gain_at(1.0)), "{}", f.gain_at(1.0));
        assert!(f.gain_at(90.0) <= 0.1);
        assert!(f.gain_at(0.0) <= 1e-9);
        // Symmetric taps: linear phase.
        let t = f.taps();
        assert!(t
            .iter()
            .zip(t.iter().rev())
            .all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn passband_and_stopband_sinusoids() {
        let cfg = PreprocessConfig::default();
        let n = 8000;
        let mid = 2000..6000;
        let pass = fir_bandpass(&Signal::new(sine(1.0, 200.0, n), 200.0).unwrap(), &cfg).unwrap();
        let a = peak(&pass.samples()[mid.clone()]);
        assert!((0.9..=1.1).contains(&a), "1 Hz amplitude {a}");
        let stop = fir_bandpass(&Signal::new(sine(90.0, 200.0, n), 200.0).unwrap(), &cfg).unwrap();
        assert!(peak(&stop.samples()[mid]) <= 0.1);
    }

    #[test]
    fn dc_offset_is_removed() {
        let cfg = PreprocessConfig::default();
        let x = sine(3.0, 200.0, 6000);
        let shifted: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        let a = fir_bandpass(&Signal::new(x, 200.0).unwrap(), &cfg).unwrap();
        let b = fir_bandpass(&Signal::new(shifted, 200.0).unwrap(), &cfg).unwrap();
        let diff = a
            .samples()
            .iter()
            .zip(b.samples())
            .fold(0.0, |m: f64, (u, v)| m.max((u - v).abs()));
        assert!(diff <= 0.1, "{diff}");
    }

    #[test]
    fn no_phase_shift() {
        let cfg = PreprocessConfig::default();
        let x = sine(5.0, 200.0, 6000);
        let y = fir_bandpass(&Signal::new(x.clone(), 200.0).unwrap(), &cfg).unwrap();
        for i in 2000..4000 {
            assert!((x[i] - y.samples()[i]).abs() < 0.02);
        }
    }

    #[test]
    fn even_taps_rejected() {
        assert!(FirFilter::bandpass(0.05, 50.0, 1000, 200.0).is_err());
        assert!(FirFilter::bandpass(50.0, 0.05, 1001, 200.0).is_err());
    }

    #[test]
    fn short_input_uses_reflection() {
        let f = FirFilter::bandpass(0.5, 40.0, 101, 200.0).unwrap();
        let y = f.apply(&[1.0, -1.0, 2.0]);
        assert_eq!(y.len(), 3);
        assert!(y.iter().all(|v| v.is_finite()));
    }
}
