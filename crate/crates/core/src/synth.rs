//! Synthetic annotated ECG records.
//!
//! Each beat is a sum of Gaussian bumps (P, Q, R, S, T) placed relative to
//! its R peak. Beat classes differ in morphology and timing; patients differ
//! in heart rate, amplitude, wave widths, noise and baseline drift. The
//! generator is fully determined by its seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::wfdb::{AnnotatedRecord, AnnotationCode, BeatAnnotation, BeatCodes};

/// One Gaussian component: amplitude (mV), centre relative to the R peak (s)
/// and width (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub offset_s: f64,
    pub width_s: f64,
}

const fn wave(amplitude: f64, offset_s: f64, width_s: f64) -> Wave {
    Wave {
        amplitude,
        offset_s,
        width_s,
    }
}

/// Waves of one beat and the RR scaling applied before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatShape {
    pub waves: Vec<Wave>,
    /// Multiplier on the preceding RR interval (premature beats < 1).
    pub prematurity: f64,
    /// Multiplier on the following RR interval (compensatory pause > 1).
    pub pause: f64,
}

/// Morphology for a beat symbol. Unknown symbols fall back to normal.
pub fn beat_shape(code: AnnotationCode) -> BeatShape {
    let normal = vec![
        wave(0.15, -0.20, 0.025),
        wave(-0.10, -0.035, 0.010),
        wave(1.00, 0.0, 0.012),
        wave(-0.25, 0.035, 0.012),
        wave(0.30, 0.26, 0.045),
    ];
    let shape = |waves: Vec<Wave>, prematurity: f64, pause: f64| BeatShape {
        waves,
        prematurity,
        pause,
    };
    match code.symbol() {
        // Ventricular: no P, wide tall QRS, deep S, inverted T.
        "V" => shape(
            vec![
                wave(1.20, 0.0, 0.035),
                wave(-0.60, 0.07, 0.030),
                wave(-0.45, 0.30, 0.070),
            ],
            0.70,
            1.30,
        ),
        // Atrial premature: early, inverted P, narrow QRS.
        "A" => shape(
            vec![
                wave(-0.12, -0.16, 0.020),
                wave(-0.10, -0.035, 0.010),
                wave(1.00, 0.0, 0.012),
                wave(-0.25, 0.035, 0.012),
                wave(0.30, 0.26, 0.045),
            ],
            0.72,
            1.0,
        ),
        // Left bundle branch block: broad notched R, discordant T.
        "L" => shape(
            vec![
                wave(0.12, -0.20, 0.025),
                wave(0.75, -0.015, 0.022),
                wave(0.70, 0.030, 0.022),
                wave(-0.35, 0.28, 0.060),
            ],
            1.0,
            1.0,
        ),
        // Right bundle branch block: rSR'.
        "R" => shape(
            vec![
                wave(0.15, -0.20, 0.025),
                wave(0.60, 0.0, 0.012),
                wave(-0.35, 0.030, 0.012),
                wave(0.55, 0.065, 0.018),
                wave(-0.15, 0.30, 0.050),
            ],
            1.0,
            1.0,
        ),
        // Fusion: halfway between normal and ventricular.
        "F" => shape(
            vec![
                wave(0.07, -0.20, 0.025),
                wave(1.10, 0.0, 0.022),
                wave(-0.45, 0.05, 0.020),
                wave(-0.08, 0.28, 0.060),
            ],
            0.85,
            1.1,
        ),
        // Paced: pacing spike then wide complex.
        "/" => shape(
            vec![
                wave(1.40, -0.045, 0.003),
                wave(0.90, 0.0, 0.030),
                wave(-0.50, 0.06, 0.030),
                wave(0.25, 0.30, 0.060),
            ],
            1.0,
            1.0,
        ),
        // Junctional / nodal: no P wave.
        "J" | "j" => shape(
            vec![
                wave(-0.10, -0.035, 0.010),
                wave(1.00, 0.0, 0.012),
                wave(-0.25, 0.035, 0.012),
                wave(0.30, 0.26, 0.045),
            ],
            if code.symbol() == "J" { 0.8 } else { 1.0 },
            1.0,
        ),
        // Ventricular escape: late, wide, no P.
        "E" => shape(
            vec![
                wave(0.9, 0.0, 0.040),
                wave(-0.4, 0.08, 0.035),
                wave(0.35, 0.32, 0.070),
            ],
            1.5,
            1.0,
        ),
        _ => shape(normal, 1.0, 1.0),
    }
}

/// Evaluates one beat's waves at time `t` seconds from its R peak.
pub fn beat_value(waves: &[Wave], t: f64, scale: f64, width_scale: f64) -> f64 {
    waves
        .iter()
        .map(|w| {
            let sd = w.width_s * width_scale;
            let z = (t - w.offset_s * width_scale) / sd;
            scale * w.amplitude * (-0.5 * z * z).exp()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub heart_rate_bpm: f64,
    pub amplitude: f64,
    pub width_scale: f64,
    /// Relative RR jitter.
    pub rr_jitter: f64,
    pub noise_mv: f64,
    pub wander_mv: f64,
    pub wander_hz: f64,
}

impl Default for PatientProfile {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 72.0,
            amplitude: 1.0,
            width_scale: 1.0,
            rr_jitter: 0.03,
            noise_mv: 0.01,
            wander_mv: 0.0,
            wander_hz: 0.3,
        }
    }
}

impl PatientProfile {
    /// A random but plausible patient: 50-110 bpm, +-25% amplitude,
    /// +-12% wave widths, some drift.
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            heart_rate_bpm: rng.gen_range(50.0..110.0),
            amplitude: rng.gen_range(0.75..1.25),
            width_scale: rng.gen_range(0.88..1.12),
            rr_jitter: rng.gen_range(0.01..0.05),
            noise_mv: rng.gen_range(0.005..0.03),
            wander_mv: rng.gen_range(0.0..0.2),
            wander_hz: rng.gen_range(0.15..0.4),
        }
    }
}

/// Record generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSpec {
    pub patient_id: String,
    pub profile: PatientProfile,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Relative frequency of each beat symbol.
    pub class_mix: Vec<(AnnotationCode, f64)>,
    pub seed: u64,
}

/// Renders a record; the returned annotations mark every R peak.
pub fn synth_record(spec: &RecordSpec) -> Result<AnnotatedRecord> {
    if spec.class_mix.is_empty() || spec.class_mix.iter().any(|(_, w)| *w < 0.0) {
        return Err(Error::invalid(
            "class mix must be non-empty with non-negative weights",
        ));
    }
    let total_w: f64 = spec.class_mix.iter().map(|(_, w)| w).sum();
    if total_w <= 0.0 {
        return Err(Error::invalid("class mix weights sum to zero"));
    }
    let p = &spec.profile;
    let fs = spec.sample_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    if n < 2 {
        return Err(Error::invalid("record is too short"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rr = 60.0 / p.heart_rate_bpm;

    let mut beats: Vec<(f64, AnnotationCode)> = Vec::new();
    let mut t = 0.5 * rr;
    let mut pause = 1.0;
    let end = spec.duration_s - 0.4;
    while t < end {
        let mut pick = rng.gen::<f64>() * total_w;
        let mut code = spec.class_mix[0].0;
        for (c, w) in &spec.class_mix {
            if pick < *w {
                code = *c;
                break;
            }
            pick -= w;
        }
        let shape = beat_shape(code);
        let jitter = 1.0 + p.rr_jitter * (rng.gen::<f64>() * 2.0 - 1.0);
        let step = rr * jitter * shape.prematurity * pause;
        if !beats.is_empty() {
            t += step;
        }
        if t >= end {
            break;
        }
        beats.push((t, code));
        pause = shape.pause;
    }

    let mut x = vec![0.0; n];
    let reach = 0.6 * p.width_scale;
    for &(tb, code) in &beats {
        let shape = beat_shape(code);
        let lo = (((tb - reach) * fs).floor().max(0.0)) as usize;
        let hi = (((tb + reach) * fs).ceil() as usize).min(n - 1);
        for (i, v) in x.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *v += beat_value(&shape.waves, i as f64 / fs - tb, p.amplitude, p.width_scale);
        }
    }
    let noise = Normal::new(0.0, p.noise_mv.max(0.0)).map_err(|e| Error::invalid(e.to_string()))?;
    let phase = rng.gen::<f64>() * 2.0 * PI;
    for (i, v) in x.iter_mut().enumerate() {
        let ti = i as f64 / fs;
        *v += p.wander_mv * (2.0 * PI * p.wander_hz * ti + phase).sin() + noise.sample(&mut rng);
    }

    let signal = Signal::new(x, fs)?;
    let annotations = beats.iter().map(|&(tb, code)| BeatAnnotation {
        sample: (tb * fs).round() as usize,
        code,
    });
    Ok(AnnotatedRecord::new(
        spec.patient_id.clone(),
        signal,
        annotations,
        &BeatCodes::default(),
    ))
}

/// A cohort of `patients` random patients sharing one class mix; patient
/// `i` is named `P{i:03}` and seeded from `seed + i`.
pub fn synth_cohort(
    patients: usize,
    duration_s: f64,
    sample_rate_hz: f64,
    class_mix: &[(AnnotationCode, f64)],
    seed: u64,
) -> Result<Vec<AnnotatedRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..patients)
        .map(|i| {
            let profile = PatientProfile::random(&mut rng);
            synth_record(&RecordSpec {
                patient_id: format!("P{i:03}"),
                profile,
                duration_s,
                sample_rate_hz,
                class_mix: class_mix.to_vec(),
                seed: seed.wrapping_add(i as u64 + 1),
            })
        })
        .collect()
}

/// Symbol list to class mix, e.g. `[("N", 0.7), ("V", 0.3)]`.
pub fn mix(entries: &[(&str, f64)]) -> Result<Vec<(AnnotationCode, f64)>> {
    entries
        .iter()
        .map(|(s, w)| {
            AnnotationCode::from_symbol(s)
                .map(|c| (c, *w))
                .ok_or_else(|| Error::invalid(format!("unknown beat symbol {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> RecordSpec {
        RecordSpec {
            patient_id: "S1".into(),
            profile: PatientProfile::default(),
            duration_s: 20.0,
            sample_rate_hz: 360.0,
            class_mix: mix(&[("N", 0.8), ("V", 0.2)]).unwrap(),
            seed,
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            synth_record(&spec(3)).unwrap(),
            synth_record(&spec(3)).unwrap()
        );
        assert_ne!(
            synth_record(&spec(3)).unwrap(),
            synth_record(&spec(4)).unwrap()
        );
    }

    #[test]
    fn beats_sit_on_r_peaks() {
        let rec = synth_record(&spec(1)).unwrap();
        assert!(rec.beat_count() >= 20);
        let x = rec.signal.samples();
        for b in &rec.beat_annotations {
            let lo = b.sample.saturating_sub(10);
            let hi = (b.sample + 10).min(x.len() - 1);
            let argmax = (lo..=hi).max_by(|&i, &j| x[i].total_cmp(&x[j])).unwrap();
            assert!(argmax.abs_diff(b.sample) <= 2, "{} vs {}", argmax, b.sample);
        }
    }

    #[test]
    fn class_mix_is_respected() {
        let rec = synth_record(&RecordSpec {
            duration_s: 300.0,
            ..spec(9)
        })
        .unwrap();
        let h = rec.label_histogram();
        let frac = h["V"] as f64 / rec.beat_count() as f64;
        assert!((0.1..0.3).contains(&frac), "{frac}");
    }

    #[test]
    fn rejects_bad_mix() {
        let mut s = spec(1);
        s.class_mix.clear();
        assert!(synth_record(&s).is_err());
        assert!(mix(&[("??", 1.0)]).is_err());
    }
}
