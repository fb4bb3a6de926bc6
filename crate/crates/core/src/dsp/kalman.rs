use crate::error::{Error, Result};
use crate::signal::Signal;

use super::PreprocessConfig;

/// Forward scalar Kalman filter under a random-walk model: the latent
/// amplitude drifts with variance `q` per sample and is observed with
/// variance `r`.
pub fn kalman_smooth(signal: &Signal, cfg: &PreprocessConfig) -> Result<Signal> {
    let (q, r) = (cfg.kalman_q, cfg.kalman_r);
    if !(q > 0.0 && r > 0.0) {
        return Err(Error::invalid("Kalman variances must be positive"));
    }
    let x = signal.samples();
    let mut est = x[0];
    let mut var = r;
    let out = x
        .iter()
        .map(|&z| {
            let prior = var + q;
            let gain = prior / (prior + r);
            est += gain * (z - est);
            var = (1.0 - gain) * prior;
            est
        })
        .collect();
    signal.with_samples(out)
}
