//! Reference implementations shared by the integration tests. Nothing here
//! calls into the code paths it is used to check.

#![allow(dead_code)]

/// Brute-force persistence: sweep every distinct sample value, recompute the
/// runs `{i : s[i] <= alpha}` from scratch, and match each run against the
/// runs of the previous level.
pub fn oracle_sublevel(s: &[f64]) -> Vec<(f64, f64, bool)> {
    #[derive(Clone, Copy)]
    struct Comp {
        lo: usize,
        hi: usize,
        birth: f64,
        birth_idx: usize,
    }

    let mut levels = s.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut out = Vec::new();
    let mut prev: Vec<Comp> = Vec::new();
    for &alpha in &levels {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < s.len() {
            if s[i] <= alpha {
                let lo = i;
                while i < s.len() && s[i] <= alpha {
                    i += 1;
                }
                runs.push((lo, i - 1));
            } else {
                i += 1;
            }
        }
        let mut next = Vec::new();
        for (lo, hi) in runs {
            let mut inside: Vec<Comp> = prev
                .iter()
                .copied()
                .filter(|c| c.lo >= lo && c.hi <= hi)
                .collect();
            if inside.is_empty() {
                let birth_idx = (lo..=hi).find(|&k| s[k] == alpha).unwrap();
                next.push(Comp {
                    lo,
                    hi,
                    birth: alpha,
                    birth_idx,
                });
                continue;
            }
            inside.sort_by(|a, b| {
                a.birth
                    .total_cmp(&b.birth)
                    .then(a.birth_idx.cmp(&b.birth_idx))
            });
            for dead in &inside[1..] {
                out.push((dead.birth, alpha, false));
            }
            next.push(Comp {
                lo,
                hi,
                ..inside[0]
            });
        }
        prev = next;
    }
    assert_eq!(prev.len(), 1);
    let max = *levels.last().unwrap();
    out.push((prev[0].birth, max, true));
    out.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    out
}

/// Connected components of `{t : f(t) <= alpha}` for the piecewise-linear
/// interpolant, counted as runs of samples at or below `alpha`.
pub fn components_below(s: &[f64], alpha: f64) -> usize {
    let mut count = 0;
    let mut inside = false;
    for &v in s {
        let now = v <= alpha;
        if now && !inside {
            count += 1;
        }
        inside = now;
    }
    count
}

/// Local minima with plateaus counted once; the ends count when they sit
/// below their single neighbour run.
pub fn local_minima(s: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::new();
    for &v in s {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    if runs.len() == 1 {
        return 1;
    }
    (0..runs.len())
        .filter(|&i| {
            let left_ok = i == 0 || runs[i - 1] > runs[i];
            let right_ok = i + 1 == runs.len() || runs[i + 1] > runs[i];
            left_ok && right_ok
        })
        .count()
}

/// Inserts `factor - 1` linearly interpolated points between neighbours.
pub fn upsample(s: &[f64], factor: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((s.len() - 1) * factor + 1);
    for w in s.windows(2) {
        for k in 0..factor {
            let t = k as f64 / factor as f64;
            out.push(w[0] + (w[1] - w[0]) * t);
        }
    }
    out.push(*s.last().unwrap());
    out
}

/// Confusion matrix by direct double loop over classes and samples.
pub fn naive_confusion(pred: &[usize], truth: &[usize], classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; classes]; classes];
    for t in 0..classes {
        for p in 0..classes {
            m[t][p] = pred
                .iter()
                .zip(truth)
                .filter(|(&pp, &tt)| pp == p && tt == t)
                .count();
        }
    }
    m
}

/// Power of `x` in the band `[f_lo, f_hi]` Hz by direct DFT summation.
pub fn band_power(x: &[f64], rate_hz: f64, f_lo: f64, f_hi: f64) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let k_lo = (f_lo * n as f64 / rate_hz).ceil() as usize;
    let k_hi = (f_hi * n as f64 / rate_hz).floor() as usize;
    for k in k_lo..=k_hi.min(n / 2) {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let ph = -2.0 * std::f64::consts::PI * (k * i % n) as f64 / n as f64;
            re += v * ph.cos();
            im += v * ph.sin();
        }
        let w = if k == 0 { 1.0 } else { 2.0 };
        total += w * (re * re + im * im);
    }
    total / (n as f64 * n as f64)
}

/// Amplitude of a sinusoid at `freq_hz` fitted by least squares over `x`.
pub fn sinusoid_amplitude(x: &[f64], rate_hz: f64, freq_hz: f64) -> f64 {
    let (mut c, mut s) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let ph = 2.0 * std::f64::consts::PI * freq_hz * i as f64 / rate_hz;
        c += v * ph.cos();
        s += v * ph.sin();
    }
    let n = x.len() as f64;
    2.0 * (c * c + s * s).sqrt() / n
}

/// Rank-sum AUC by direct pair counting: the chance that a positive scores
/// above a negative, ties counting half.
pub fn auc(negatives: &[f64], positives: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in positives {
        for &n in negatives {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (positives.len() * negatives.len()) as f64
}

/// Central difference of the mean squared reconstruction error in parameter
/// `i`. The loss difference is summed as `(r+ - r-)(r+ + r-)` per sample so
/// the cancellation happens at residual scale rather than loss scale.
pub fn ae_central_difference(
    model: &mut ecgtda::autoencoder::AEModel,
    x: &[Vec<f64>],
    i: usize,
    h: f64,
) -> f64 {
    let keep = model.params()[i];
    model.params_mut()[i] = keep + h;
    let up = model.encode_batch(x).unwrap();
    model.params_mut()[i] = keep - h;
    let down = model.encode_batch(x).unwrap();
    model.params_mut()[i] = keep;
    let mut sum = 0.0;
    let mut count = 0;
    for (a, b) in up.iter().zip(&down) {
        for (p, q) in a.residual.iter().zip(&b.residual) {
            sum += (p - q) * (p + q);
            count += 1;
        }
    }
    sum / count as f64 / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// One beat centred in a 400-sample, 1.2 s window, min-max normalized and
/// mean-centred like the preprocessing output.
pub fn beat_template(
    waves: &[ecgtda::synth::Wave],
    amplitude: f64,
    width: f64,
    noise: f64,
    rng: &mut impl rand::Rng,
) -> Vec<f64> {
    let x: Vec<f64> = (0..400)
        .map(|i| {
            let t = -0.6 + 1.2 * i as f64 / 399.0;
            ecgtda::synth::beat_value(waves, t, amplitude, width) + noise * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y: Vec<f64> = x.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.into_iter().map(|v| v - mean).collect()
}

/// Normal beats with patient-like jitter, and distorted beats: ventricular
/// morphology, or a normal beat with a widened QRS and inverted T.
pub fn anomaly_fixture(
    normals: usize,
    distorted: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    use ecgtda::synth::beat_shape;
    use ecgtda::wfdb::AnnotationCode;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = beat_shape(AnnotationCode::NORMAL).waves;
    let pvc = beat_shape(AnnotationCode::PVC).waves;
    let mut warped = normal.clone();
    for w in &mut warped[1..4] {
        w.width_s *= 2.5;
    }
    warped[4].amplitude = -warped[4].amplitude;
    let draw = |waves: &[ecgtda::synth::Wave], rng: &mut rand_chacha::ChaCha8Rng| {
        let a = rng.gen_range(0.8..1.2);
        let w = rng.gen_range(0.9..1.1);
        beat_template(waves, a, w, 0.02, rng)
    };
    let n = (0..normals).map(|_| draw(&normal, &mut rng)).collect();
    let d = (0..distorted)
        .map(|k| draw(if k % 2 == 0 { &pvc } else { &warped }, &mut rng))
        .collect();
    (n, d)
}

/// Labelled synthetic cohort used by the end-to-end checks: 24 patients,
/// one minute each at 360 Hz, five beat classes.
pub fn e2e_windows() -> (Vec<ecgtda::segment::BeatWindow>, Vec<String>) {
    use ecgtda::pipeline::{cohort_windows, PipelineConfig};
    use ecgtda::synth::{mix, synth_cohort};
    let m = mix(&[("N", 0.6), ("V", 0.15), ("A", 0.1), ("L", 0.1), ("F", 0.05)]).unwrap();
    let recs = synth_cohort(24, 60.0, 360.0, &m, 7).unwrap();
    let ids = recs.iter().map(|r| r.patient_id.clone()).collect();
    (
        cohort_windows(&recs, &PipelineConfig::default(), 1)
            .unwrap()
            .0,
        ids,
    )
}

pub fn e2e_config(task: ecgtda::eval::Task) -> ecgtda::eval::ExperimentConfig {
    ecgtda::eval::ExperimentConfig {
        task,
        max_folds: Some(2),
        autoencoder: ecgtda::autoencoder::TrainConfig {
            epochs: 15,
            batch_size: 32,
            ..Default::default()
        },
        ..Default::default()
    }
}

pub fn patient_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("P{i:03}")).collect()
}
