//! ECG conditioning: resampling, baseline-wander removal, band-pass
//! filtering, optional Kalman smoothing and amplitude normalization.

mod fir;
mod kalman;
mod normalize;
mod pipeline;
mod resample;
mod wavelet;

pub use fir::{fir_bandpass, FirFilter};
pub use kalman::kalman_smooth;
pub use normalize::{normalize, Normalized};
pub use pipeline::{preprocess_record, preprocess_signal, StageInfo, StageReport};
pub use resample::{remap_index, resample_linear};
pub use wavelet::{remove_baseline, BaselineRemoval, Wavelet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub target_rate_hz: f64,
    pub fir_low_hz: f64,
    pub fir_high_hz: f64,
    /// Odd.
    pub fir_taps: usize,
    pub wavelet_name: String,
    /// Decomposition depth. The zeroed approximation band of an `L`-level
    /// transform ends at `rate / 2^(L+1)`: 8 levels at 200 Hz cut near 0.39 Hz.
    pub wavelet_levels: usize,
    pub kalman_enabled: bool,
    pub kalman_q: f64,
    pub kalman_r: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_rate_hz: 200.0,
            fir_low_hz: 0.05,
            fir_high_hz: 50.0,
            fir_taps: 1001,
            wavelet_name: "db8".into(),
            wavelet_levels: 8,
            kalman_enabled: false,
            kalman_q: 1e-5,
            kalman_r: 1e-2,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.target_rate_hz / 2.0;
        if !(self.target_rate_hz > 0.0) {
            return Err(Error::invalid("target_rate_hz must be positive"));
        }
        if !(0.0 < self.fir_low_hz
            && self.fir_low_hz < self.fir_high_hz
            && self.fir_high_hz < nyquist)
        {
            return Err(Error::invalid(format!(
                "need 0 < fir_low_hz < fir_high_hz < {nyquist}, got {} and {}",
                self.fir_low_hz, self.fir_high_hz
            )));
        }
        if self.fir_taps.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "fir_taps must be odd, got {}",
                self.fir_taps
            )));
        }
        if self.wavelet_levels == 0 {
            return Err(Error::invalid("wavelet_levels must be at least 1"));
        }
        Wavelet::by_name(&self.wavelet_name)?;
        if !(self.kalman_q > 0.0 && self.kalman_r > 0.0) {
            return Err(Error::invalid("kalman_q and kalman_r must be positive"));
        }
        Ok(())
    }
}

/// Index into `0..n` for any integer position, mirroring about the end
/// samples without repeating them (`... x2 x1 | x0 x1 x2 ... | x(n-2) ...`).
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}
