//! Handcrafted per-window features: DFT magnitudes, PQRST fiducial
//! relations, amplitude statistics and a PCA projection.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::BeatWindow;
use crate::wfdb::AnnotationCode;

pub const DFT_BINS: usize = 50;
pub const PCA_COMPONENTS: usize = 10;
pub const HISTOGRAM_BINS: usize = 50;
pub const FEATURE_LAYOUT_VERSION: u32 = 1;

pub const FIDUCIAL_LEN: usize = 19;
pub const STAT_LEN: usize = 8;

/// Magnitudes of every DFT bin of `window` (no tapering).
pub fn dft_magnitudes(window: &[f64]) -> Vec<f64> {
    let fft = FftPlanner::new().plan_fft_forward(window.len());
    magnitudes_with(&*fft, window)
}

fn magnitudes_with(fft: &dyn Fft<f64>, window: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = window.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Magnitudes of DFT bins `0..50`.
pub fn dft_features(window: &[f64]) -> Result<Vec<f64>> {
    if window.len() < 2 * DFT_BINS {
        return Err(Error::invalid(format!(
            "window of {} samples is too short for {DFT_BINS} DFT bins",
            window.len()
        )));
    }
    let mut m = dft_magnitudes(window);
    m.truncate(DFT_BINS);
    Ok(m)
}

/// P, Q, R, S, T locations and the relations between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fiducials {
    /// Window index of P, Q, R, S, T.
    pub positions: [usize; 5],
    pub amplitudes: [f64; 5],
    /// PR (P to Q), QRS (Q to S), QT (Q to T), ST (S to T), in ms.
    pub intervals_ms: [f64; 4],
    /// `amplitudes[i] - amplitudes[j]` for all `i < j`.
    pub amplitude_deltas: [f64; 10],
    pub degenerate: bool,
}

impl Fiducials {
    fn zeroed() -> Self {
        Self {
            positions: [0; 5],
            amplitudes: [0.0; 5],
            intervals_ms: [0.0; 4],
            amplitude_deltas: [0.0; 10],
            degenerate: true,
        }
    }

    /// Amplitudes, intervals, then deltas: 19 values.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FIDUCIAL_LEN);
        v.extend_from_slice(&self.amplitudes);
        v.extend_from_slice(&self.intervals_ms);
        v.extend_from_slice(&self.amplitude_deltas);
        v
    }
}

fn arg_extreme(x: &[f64], lo: isize, hi: isize, max: bool) -> Option<usize> {
    // Open interval (lo, hi), clipped to the window.
    let a = (lo + 1).max(0) as usize;
    let b = hi.min(x.len() as isize);
    if b <= a as isize {
        return None;
    }
    let range = a..b as usize;
    if max {
        range.max_by(|&i, &j| x[i].total_cmp(&x[j]).then(j.cmp(&i)))
    } else {
        range.min_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)))
    }
}

/// Locates Q, S as minima within 60 ms either side of R, P as the maximum
/// 80-250 ms before R and T as the maximum 80-400 ms after it. `rate_hz` is
/// the window's effective sample rate.
pub fn fiducial_features(window: &[f64], center_position: f64, rate_hz: f64) -> Fiducials {
    let n = window.len();
    let flat = window.iter().all(|&v| v == window[0]);
    if n == 0 || flat || !(rate_hz > 0.0) || !(0.0..=(n - 1) as f64).contains(&center_position) {
        return Fiducials::zeroed();
    }
    let ms = |v: f64| (v * rate_hz / 1000.0).round() as isize;
    let r = center_position.round() as isize;
    let (q, p, t, s) = (
        arg_extreme(window, r - ms(60.0), r, false),
        arg_extreme(window, r - ms(250.0), r - ms(80.0), true),
        arg_extreme(window, r + ms(80.0), r + ms(400.0), true),
        arg_extreme(window, r, r + ms(60.0), false),
    );
    let (Some(p), Some(q), Some(s), Some(t)) = (p, q, s, t) else {
        return Fiducials::zeroed();
    };
    let positions = [p, q, r as usize, s, t];
    let amplitudes = positions.map(|i| window[i]);
    let to_ms = |a: usize, b: usize| (b as f64 - a as f64) * 1000.0 / rate_hz;
    let mut amplitude_deltas = [0.0; 10];
    let mut k = 0;
    for i in 0..5 {
        for j in i + 1..5 {
            amplitude_deltas[k] = amplitudes[i] - amplitudes[j];
            k += 1;
        }
    }
    Fiducials {
        positions,
        amplitudes,
        intervals_ms: [to_ms(p, q), to_ms(q, s), to_ms(q, t), to_ms(s, t)],
        amplitude_deltas,
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatFeatures {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    /// Excess kurtosis.
    pub kurtosis: f64,
    pub skewness: f64,
    /// Shannon entropy (nats) of a 50-bin histogram over `[min, max]`.
    pub entropy: f64,
    pub mean_crossings: usize,
    pub degenerate: bool,
}

impl StatFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.min,
            self.max,
            self.mean,
            self.std,
            self.kurtosis,
            self.skewness,
            self.entropy,
            self.mean_crossings as f64,
        ]
    }
}

pub fn stat_features(window: &[f64]) -> StatFeatures {
    let n = window.len();
    if n == 0 {
        return StatFeatures {
            min: 0.0,
            max: 0.0,
            mean: 0.0,
            std: 0.0,
            kurtosis: 0.0,
            skewness: 0.0,
            entropy: 0.0,
            mean_crossings: 0,
            degenerate: true,
        };
    }
    let nf = n as f64;
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = window.iter().sum::<f64>() / nf;
    let (m2, m3, m4) = window.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &v| {
        let d = v - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let std = m2.sqrt();
    let degenerate = max <= min || m2 <= 0.0;
    let (kurtosis, skewness, entropy) = if degenerate {
        (0.0, 0.0, 0.0)
    } else {
        let mut hist = [0usize; HISTOGRAM_BINS];
        let width = (max - min) / HISTOGRAM_BINS as f64;
        for &v in window {
            let b = (((v - min) / width) as usize).min(HISTOGRAM_BINS - 1);
            hist[b] += 1;
        }
        let entropy = -hist
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                p * p.ln()
            })
            .sum::<f64>();
        (m4 / (m2 * m2) - 3.0, m3 / m2.powf(1.5), entropy)
    };
    let mean_crossings = window
        .windows(2)
        .filter(|w| (w[0] >= mean) != (w[1] >= mean))
        .count();
    StatFeatures {
        min,
        max,
        mean,
        std,
        kurtosis,
        skewness,
        entropy,
        mean_crossings: if degenerate { 0 } else { mean_crossings },
        degenerate,
    }
}

/// Mean and leading principal axes of a set of windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal, sorted by decreasing variance, each with its
    /// largest-magnitude entry positive.
    pub axes: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.dim() {
            return Err(Error::invalid(format!(
                "PCA expects {} samples, got {}",
                self.dim(),
                window.len()
            )));
        }
        Ok(self
            .axes
            .iter()
            .map(|axis| {
                axis.iter()
                    .zip(window.iter().zip(&self.mean))
                    .map(|(a, (x, m))| a * (x - m))
                    .sum()
            })
            .collect())
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| {
                if self.total_variance > 0.0 {
                    v / self.total_variance
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Fits `components` principal axes from the eigendecomposition of the
/// sample covariance. Needs more windows than components.
pub fn pca_fit<S: AsRef<[f64]>>(windows: &[S], components: usize) -> Result<PcaModel> {
    if windows.len() <= components {
        return Err(Error::invalid(format!(
            "PCA with {components} components needs at least {} windows, got {}",
            components + 1,
            windows.len()
        )));
    }
    let dim = windows[0].as_ref().len();
    if dim < components || windows.iter().any(|w| w.as_ref().len() != dim) {
        return Err(Error::invalid(
            "PCA windows must share a length >= components",
        ));
    }
    let n = windows.len();
    let mut mean = vec![0.0; dim];
    for w in windows {
        for (m, v) in mean.iter_mut().zip(w.as_ref()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| windows[i].as_ref()[j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut axes = Vec::with_capacity(components);
    let mut explained_variance = Vec::with_capacity(components);
    for &k in order.iter().take(components) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = axis
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if axis[lead] < 0.0 {
            for v in &mut axis {
                *v = -*v;
            }
        }
        axes.push(axis);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel {
        mean,
        axes,
        explained_variance,
        total_variance,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub version: u32,
    pub blocks: Vec<FeatureBlock>,
}

impl FeatureLayout {
    pub fn new(blocks: &[(&str, usize)]) -> Self {
        let mut offset = 0;
        let blocks = blocks
            .iter()
            .map(|&(name, len)| {
                let b = FeatureBlock {
                    name: name.to_string(),
                    offset,
                    len,
                };
                offset += len;
                b
            })
            .collect();
        Self {
            version: FEATURE_LAYOUT_VERSION,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.offset + b.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Column names, `<block>_<index>`.
    pub fn columns(&self) -> Vec<String> {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.len).map(move |i| format!("{}_{i}", b.name)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub fiducial_degenerate: bool,
    pub stat_degenerate: bool,
}

/// Reusable extractor: caches the FFT plan and holds a fitted PCA model.
pub struct FeatureBank {
    fft: Arc<dyn Fft<f64>>,
    pca: PcaModel,
    layout: FeatureLayout,
}

impl FeatureBank {
    pub fn new(pca: PcaModel) -> Result<Self> {
        let dim = pca.dim();
        if dim < 2 * DFT_BINS {
            return Err(Error::invalid(format!(
                "window length {dim} is below {}",
                2 * DFT_BINS
            )));
        }
        let layout = FeatureLayout::new(&[
            ("dft", DFT_BINS),
            ("fiducial", FIDUCIAL_LEN),
            ("stat", STAT_LEN),
            ("pca", pca.axes.len()),
        ]);
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(dim),
            pca,
            layout,
        })
    }

    /// Fits the PCA on `training` windows and builds the bank.
    pub fn fit(training: &[&BeatWindow]) -> Result<Self> {
        let samples: Vec<&[f64]> = training.iter().map(|w| w.samples.as_slice()).collect();
        Self::new(pca_fit(&samples, PCA_COMPONENTS)?)
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn extract(&self, window: &BeatWindow) -> Result<FeatureVector> {
        let x = &window.samples;
        if x.len() != self.pca.dim() {
            return Err(Error::invalid(format!(
                "feature bank expects {} samples, got {}",
                self.pca.dim(),
                x.len()
            )));
        }
        let mut values = Vec::with_capacity(self.layout.len());
        let mut dft = magnitudes_with(&*self.fft, x);
        dft.truncate(DFT_BINS);
        values.extend(dft);
        let fid = fiducial_features(x, window.center_position, window.effective_rate_hz());
        values.extend(fid.to_vec());
        let stats = stat_features(x);
        values.extend(stats.to_vec());
        values.extend(self.pca.project(x)?);
        for v in &mut values {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        Ok(FeatureVector {
            values,
            fiducial_degenerate: fid.degenerate,
            stat_degenerate: stats.degenerate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub patient_id: String,
    pub label: AnnotationCode,
    pub values: Vec<f64>,
}

const FEATURE_MAGIC: &[u8; 4] = b"ECGF";

/// CSV with a `# layout ...` comment line, then `patient_id,label,<columns>`.
pub fn write_feature_csv<W: Write>(
    mut out: W,
    layout: &FeatureLayout,
    rows: &[FeatureRow],
) -> Result<()> {
    let blocks: Vec<String> = layout
        .blocks
        .iter()
        .map(|b| format!("{}@{}+{}", b.name, b.offset, b.len))
        .collect();
    writeln!(out, "# layout v{} {}", layout.version, blocks.join(" "))?;
    writeln!(out, "patient_id,label,{}", layout.columns().join(","))?;
    for r in rows {
        write!(out, "{},{}", r.patient_id, r.label)?;
        for v in &r.values {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Binary feature table: `ECGF`, the layout as length-prefixed JSON, the
/// row count, then per row the label byte, patient id and values.
pub fn write_feature_table<W: Write>(
    mut out: W,
    layout: &FeatureLayout,
    rows: &[FeatureRow],
) -> Result<()> {
    if rows.iter().any(|r| r.values.len() != layout.len()) {
        return Err(Error::invalid("feature rows do not match the layout"));
    }
    let json = serde_json::to_vec(layout)?;
    out.write_all(FEATURE_MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    out.write_all(&(rows.len() as u64).to_le_bytes())?;
    for r in rows {
        let id = r.patient_id.as_bytes();
        let id_len = u16::try_from(id.len()).map_err(|_| Error::invalid("patient id too long"))?;
        out.write_all(&[r.label.value()])?;
        out.write_all(&id_len.to_le_bytes())?;
        out.write_all(id)?;
        for v in &r.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_vec(input: &mut impl Read, n: usize) -> Result<Vec<u8>> {
    let mut b = vec![0u8; n];
    input.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::invalid("feature table is truncated"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_feature_table<R: Read>(mut input: R) -> Result<(FeatureLayout, Vec<FeatureRow>)> {
    if read_exact_vec(&mut input, 4)? != FEATURE_MAGIC {
        return Err(Error::invalid("not a feature table (bad magic)"));
    }
    let word = |b: Vec<u8>| -> [u8; 8] {
        let mut w = [0u8; 8];
        w[..b.len()].copy_from_slice(&b);
        w
    };
    let json_len = u64::from_le_bytes(word(read_exact_vec(&mut input, 4)?)) as usize;
    let layout: FeatureLayout = serde_json::from_slice(&read_exact_vec(&mut input, json_len)?)?;
    let count = u64::from_le_bytes(word(read_exact_vec(&mut input, 8)?)) as usize;
    let mut rows = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let label = AnnotationCode::new(read_exact_vec(&mut input, 1)?[0])?;
        let id_len = u64::from_le_bytes(word(read_exact_vec(&mut input, 2)?)) as usize;
        let patient_id = String::from_utf8(read_exact_vec(&mut input, id_len)?)
            .map_err(|_| Error::invalid("patient id is not UTF-8"))?;
        let values = read_exact_vec(&mut input, 8 * layout.len())?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        rows.push(FeatureRow {
            patient_id,
            label,
            values,
        });
    }
    Ok((layout, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{beat_value, Wave};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    const W: usize = 400;

    #[test]
    fn dft_of_constant() {
        let m = dft_features(&[0.75; W]).unwrap();
        assert!((m[0] - W as f64 * 0.75).abs() < 1e-9);
        assert!(m[1..].iter().all(|v| v.abs() < 1e-9));
        assert!(dft_features(&[1.0; 99]).is_err());
    }

    #[test]
    fn dft_of_cosine() {
        let x: Vec<f64> = (0..W)
            .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / W as f64).cos())
            .collect();
        let m = dft_features(&x).unwrap();
        for (k, v) in m.iter().enumerate() {
            let expect = if k == 5 { W as f64 / 2.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9, "bin {k}: {v}");
        }
    }

    fn template(p: f64, t: f64, rate: f64) -> (Vec<f64>, usize) {
        // R at sample 150, P/T amplitudes given.
        let r = 150usize;
        let waves = [
            Wave {
                amplitude: p,
                offset_s: -0.16,
                width_s: 0.02,
            },
            Wave {
                amplitude: -0.2,
                offset_s: -0.03,
                width_s: 0.006,
            },
            Wave {
                amplitude: 1.0,
                offset_s: 0.0,
                width_s: 0.008,
            },
            Wave {
                amplitude: -0.3,
                offset_s: 0.03,
                width_s: 0.006,
            },
            Wave {
                amplitude: t,
                offset_s: 0.16,
                width_s: 0.02,
            },
        ];
        let x = (0..W)
            .map(|i| beat_value(&waves, (i as f64 - r as f64) / rate, 1.0, 1.0))
            .collect();
        (x, r)
    }

    #[test]
    fn fiducials_of_template() {
        let rate = 500.0;
        let (x, r) = template(0.2, 0.35, rate);
        let f = fiducial_features(&x, r as f64, rate);
        assert!(!f.degenerate);
        let expect = [r - 80, r - 15, r, r + 15, r + 80];
        for (got, want) in f.positions.iter().zip(expect) {
            assert!(got.abs_diff(want) <= 1, "{:?} vs {:?}", f.positions, expect);
        }
        let sample_ms = 1000.0 / rate;
        let want_ms = [
            65.0 * sample_ms,
            30.0 * sample_ms,
            95.0 * sample_ms,
            65.0 * sample_ms,
        ];
        for (got, want) in f.intervals_ms.iter().zip(want_ms) {
            assert!((got - want).abs() <= 2.0 * sample_ms + 1e-9);
        }
        assert_eq!(f.to_vec().len(), FIDUCIAL_LEN);
    }

    #[test]
    fn symmetric_template_has_equal_p_and_t() {
        let (x, r) = template(0.3, 0.3, 500.0);
        let f = fiducial_features(&x, r as f64, 500.0);
        // P - T is the fourth delta (i = 0, j = 4).
        assert!(f.amplitude_deltas[3].abs() < 1e-12);
    }

    #[test]
    fn flat_window_is_degenerate() {
        let f = fiducial_features(&[0.1; W], 200.0, 500.0);
        assert!(f.degenerate);
        assert!(f.to_vec().iter().all(|&v| v == 0.0));
        // R at the window edge leaves no room for P.
        let (x, _) = template(0.2, 0.3, 500.0);
        assert!(fiducial_features(&x, 0.0, 500.0).degenerate);
    }

    #[test]
    fn normal_sample_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(400);
        let x: Vec<f64> = (0..400).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = stat_features(&x);
        assert!(s.skewness.abs() < 0.3, "{}", s.skewness);
        assert!(s.kurtosis.abs() < 0.6, "{}", s.kurtosis);
        assert!(!s.degenerate);
    }

    #[test]
    fn constant_stats() {
        let s = stat_features(&[2.0; 50]);
        assert_eq!((s.std, s.entropy, s.mean_crossings), (0.0, 0.0, 0));
        assert!(s.degenerate);
        assert_eq!(s.to_vec().len(), STAT_LEN);
    }

    #[test]
    fn cosine_crosses_mean_twice_per_period() {
        let n = 360;
        let one: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        assert_eq!(stat_features(&one).mean_crossings, 2);
        let four: Vec<f64> = (0..4 * n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        assert_eq!(stat_features(&four).mean_crossings, 8);
    }

    #[test]
    fn uniform_histogram_entropy() {
        let x: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        let s = stat_features(&x);
        assert!((s.entropy - (HISTOGRAM_BINS as f64).ln()).abs() < 1e-3);
    }

    fn plane_data(n: usize, dim: usize) -> Vec<Vec<f64>> {
        let u: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.1).sin()).collect();
        let v: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.07).cos()).collect();
        (0..n)
            .map(|k| {
                let a = (k as f64 * 1.3).sin() * 3.0;
                let b = (k as f64 * 0.7).cos();
                (0..dim).map(|i| 0.5 + a * u[i] + b * v[i]).collect()
            })
            .collect()
    }

    #[test]
    fn pca_recovers_plane() {
        let data = plane_data(60, 120);
        let model = pca_fit(&data, PCA_COMPONENTS).unwrap();
        let ratio = model.explained_ratio();
        assert!(ratio[0] + ratio[1] > 0.999);
        for i in 0..PCA_COMPONENTS {
            for j in 0..PCA_COMPONENTS {
                let dot: f64 = model.axes[i]
                    .iter()
                    .zip(&model.axes[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8);
            }
        }
        let proj = model.project(&model.mean).unwrap();
        assert!(proj.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(pca_fit(&data, PCA_COMPONENTS).unwrap(), model);
    }

    #[test]
    fn pca_needs_enough_windows() {
        let data = plane_data(10, 120);
        assert!(pca_fit(&data, PCA_COMPONENTS).is_err());
    }

    #[test]
    fn feature_table_round_trip() {
        let layout = FeatureLayout::new(&[("a", 2), ("b", 1)]);
        let rows = vec![
            FeatureRow {
                patient_id: "100".into(),
                label: AnnotationCode::NORMAL,
                values: vec![1.0, -2.5, 3.0],
            },
            FeatureRow {
                patient_id: "x".into(),
                label: AnnotationCode::PVC,
                values: vec![0.0, 1e-9, f64::MAX],
            },
        ];
        let mut buf = Vec::new();
        write_feature_table(&mut buf, &layout, &rows).unwrap();
        assert_eq!(
            read_feature_table(&buf[..]).unwrap(),
            (layout.clone(), rows.clone())
        );
        assert!(read_feature_table(&buf[..buf.len() - 1]).is_err());
        let mut csv = Vec::new();
        write_feature_csv(&mut csv, &layout, &rows).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(
            "# layout v1 a@0+2 b@2+1\npatient_id,label,a_0,a_1,b_0\n100,N,1,-2.5,3\n"
        ));
    }

    #[test]
    fn layout_is_stable() {
        let data = plane_data(30, W);
        let bank = FeatureBank::new(pca_fit(&data, PCA_COMPONENTS).unwrap()).unwrap();
        let layout = bank.layout();
        assert_eq!(
            layout.len(),
            DFT_BINS + FIDUCIAL_LEN + STAT_LEN + PCA_COMPONENTS
        );
        assert_eq!(
            layout.block("stat").unwrap().offset,
            DFT_BINS + FIDUCIAL_LEN
        );
        assert_eq!(layout.columns().len(), layout.len());
        assert_eq!(layout.columns()[0], "dft_0");
    }
}
