//! Orthogonal Daubechies wavelets and baseline-wander removal.
//!
//! The transform is periodized and runs on a mirror-extended copy of the
//! signal padded to a multiple of `2^levels`, which keeps it exactly
//! invertible while the reflection keeps the wrap-around seam smooth.

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::{reflect_index, PreprocessConfig};

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Wavelet {
    name: &'static str,
    lowpass: &'static [f64],
    highpass: Vec<f64>,
}

impl Wavelet {
    pub fn by_name(name: &str) -> Result<Self> {
        let (name, lowpass): (&'static str, &'static [f64]) = match name {
            "db4" => ("db4", &DB4),
            "db8" => ("db8", &DB8),
            other => return Err(Error::invalid(format!("unknown wavelet {other:?}"))),
        };
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        Ok(Self {
            name,
            lowpass,
            highpass,
        })
    }

    pub fn name(&self) -> &str {
        self.name
    }

    /// Scaling (reconstruction low-pass) filter.
    pub fn lowpass(&self) -> &[f64] {
        self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn filter_len(&self) -> usize {
        self.lowpass.len()
    }

    /// Deepest useful level for `n` samples: `floor(log2(n / (L - 1)))`.
    pub fn max_level(&self, n: usize) -> usize {
        let ratio = n as f64 / (self.filter_len() - 1) as f64;
        if ratio < 2.0 {
            0
        } else {
            ratio.log2().floor() as usize
        }
    }

    /// One periodized analysis step; `x.len()` must be even.
    pub fn analyze(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.len();
        let half = n / 2;
        let mut approx = vec![0.0; half];
        let mut detail = vec![0.0; half];
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (j, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                let v = x[(2 * k + j) % n];
                a += h * v;
                d += g * v;
            }
            approx[k] = a;
            detail[k] = d;
        }
        (approx, detail)
    }

    /// Inverse of [`Wavelet::analyze`].
    pub fn synthesize(&self, approx: &[f64], detail: &[f64]) -> Vec<f64> {
        let n = approx.len() * 2;
        let mut x = vec![0.0; n];
        for k in 0..approx.len() {
            for (j, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                x[(2 * k + j) % n] += h * approx[k] + g * detail[k];
            }
        }
        x
    }

    /// Multi-level decomposition: `(approx_levels, [detail_1 .. detail_levels])`.
    pub fn decompose(&self, x: &[f64], levels: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut approx = x.to_vec();
        let mut details = Vec::with_capacity(levels);
        for _ in 0..levels {
            let (a, d) = self.analyze(&approx);
            details.push(d);
            approx = a;
        }
        (approx, details)
    }

    pub fn reconstruct(&self, approx: &[f64], details: &[Vec<f64>]) -> Vec<f64> {
        details
            .iter()
            .rev()
            .fold(approx.to_vec(), |a, d| self.synthesize(&a, d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRemoval {
    pub signal: Signal,
    pub levels_used: usize,
    /// Set when the signal was too short for the configured depth.
    pub degraded: bool,
}

/// Removes baseline wander by zeroing the deepest approximation band of a
/// multi-level Daubechies decomposition. At 200 Hz and 8 levels that band
/// sits below roughly 0.39 Hz; see [`PreprocessConfig::wavelet_levels`].
pub fn remove_baseline(signal: &Signal, cfg: &PreprocessConfig) -> Result<BaselineRemoval> {
    let wavelet = Wavelet::by_name(&cfg.wavelet_name)?;
    let x = signal.samples();
    let n = x.len();
    let max_level = wavelet.max_level(n);
    let levels = cfg.wavelet_levels.min(max_level);
    let degraded = levels < cfg.wavelet_levels;
    if degraded {
        log::warn!(
            "{n}-sample signal supports {levels} of {} wavelet levels",
            cfg.wavelet_levels
        );
    }
    if levels == 0 {
        let mean = x.iter().sum::<f64>() / n as f64;
        return Ok(BaselineRemoval {
            signal: signal.with_samples(x.iter().map(|v| v - mean).collect())?,
            levels_used: 0,
            degraded: true,
        });
    }

    let block = 1usize << levels;
    let margin = n.min(4 * block);
    let padded_len = (n + 2 * margin).div_ceil(block) * block;
    let left = (padded_len - n) / 2;
    let ext: Vec<f64> = (0..padded_len)
        .map(|i| x[reflect_index(i as isize - left as isize, n)])
        .collect();

    let (approx, details) = wavelet.decompose(&ext, levels);
    let rec = wavelet.reconstruct(&vec![0.0; approx.len()], &details);
    Ok(BaselineRemoval {
        signal: signal.with_samples(rec[left..left + n].to_vec())?,
        levels_used: levels,
        degraded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_orthonormal(w: &Wavelet) {
        let h = w.lowpass();
        let l = h.len();
        assert!((h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs() < 1e-12);
        for m in 0..l / 2 {
            let dot: f64 = (0..l - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
            let expect = if m == 0 { 1.0 } else { 0.0 };
            assert!(
                (dot - expect).abs() < 1e-12,
                "{} shift {m}: {dot}",
                w.name()
            );
        }
        // Vanishing moments of the wavelet: sum (-1)^k k^p h_k = 0 for p < L/2.
        for p in 0..l / 2 {
            let m: f64 = h
                .iter()
                .enumerate()
                .map(|(k, v)| if k % 2 == 0 { 1.0 } else { -1.0 } * (k as f64).powi(p as i32) * v)
                .sum();
            let scale: f64 = (l as f64).powi(p as i32);
            assert!(m.abs() / scale < 1e-9, "{} moment {p}: {m}", w.name());
        }
    }

    #[test]
    fn filters_are_orthonormal_daubechies() {
        check_orthonormal(&Wavelet::by_name("db4").unwrap());
        check_orthonormal(&Wavelet::by_name("db8").unwrap());
    }

    #[test]
    fn perfect_reconstruction() {
        let w = Wavelet::by_name("db8").unwrap();
        let x: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let (a, d) = w.decompose(&x, 4);
        let y = w.reconstruct(&a, &d);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
        let energy = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
        let coeff_energy = energy(&a) + d.iter().map(|v| energy(v)).sum::<f64>();
        assert!((coeff_energy - energy(&x)).abs() < 1e-9 * energy(&x));
    }

    #[test]
    fn constant_and_zero_inputs() {
        let cfg = PreprocessConfig::default();
        let s = Signal::new(vec![3.0; 4000], 200.0).unwrap();
        let out = remove_baseline(&s, &cfg).unwrap();
        assert!(out.signal.samples().iter().all(|v| v.abs() < 1e-9));
        let z = Signal::new(vec![0.0; 4000], 200.0).unwrap();
        let out = remove_baseline(&z, &cfg).unwrap();
        assert!(out.signal.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_signals_degrade() {
        let cfg = PreprocessConfig::default();
        let s = Signal::new((0..400).map(|i| (i as f64 * 0.1).sin()).collect(), 200.0).unwrap();
        let out = remove_baseline(&s, &cfg).unwrap();
        assert!(out.degraded);
        assert_eq!(out.levels_used, 4);
        assert_eq!(out.signal.len(), 400);
        let tiny = Signal::new(vec![1.0, 2.0, 3.0], 200.0).unwrap();
        let out = remove_baseline(&tiny, &cfg).unwrap();
        assert_eq!(out.levels_used, 0);
        assert!((out.signal.samples().iter().sum::<f64>()).abs() < 1e-12);
    }
}
