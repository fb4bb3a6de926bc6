mod common;

use common::{band_power, sinusoid_amplitude};
use ecgtda::dsp::*;
use ecgtda::synth::{mix, synth_record, PatientProfile, RecordSpec};
use ecgtda::Signal;
use proptest::prelude::*;
use std::f64::consts::PI;

const FS: f64 = 200.0;

fn tone(freq: f64, secs: f64) -> Vec<f64> {
    (0..(secs * FS) as usize)
        .map(|i| (2.0 * PI * freq * i as f64 / FS).sin())
        .collect()
}

/// Measured gain of the filter on a pure tone, away from the edges.
fn measured_gain(fir: &FirFilter, freq: f64) -> f64 {
    let x = tone(freq, 40.0);
    let y = fir.apply(&x);
    let mid = &y[2000..6000];
    sinusoid_amplitude(mid, FS, freq)
}

fn clean_ecg(secs: f64) -> Signal {
    let rec = synth_record(&RecordSpec {
        patient_id: "clean".into(),
        profile: PatientProfile {
            noise_mv: 0.0,
            ..Default::default()
        },
        duration_s: secs,
        sample_rate_hz: FS,
        class_mix: mix(&[("N", 1.0)]).unwrap(),
        seed: 3,
    })
    .unwrap();
    rec.signal
}

#[test]
fn fir_band_edges() {
    let fir = FirFilter::from_config(&PreprocessConfig::default()).unwrap();
    assert_eq!(fir.taps().len(), 1001);
    let g1 = measured_gain(&fir, 1.0);
    let g90 = measured_gain(&fir, 90.0);
    assert!(g1 >= 0.9, "1 Hz gain {g1}");
    assert!(g90 <= 0.1, "90 Hz gain {g90}");
    assert!((g1 - fir.gain_at(1.0)).abs() < 1e-3);
    assert!(fir.gain_at(0.0).abs() <= 0.1);
    // A constant input comes out as zero.
    let y = fir.apply(&vec![1.0; 4000]);
    assert!(y[1000..3000].iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn fir_is_zero_phase() {
    let fir = FirFilter::from_config(&PreprocessConfig::default()).unwrap();
    let x = tone(5.0, 40.0);
    let y = fir.apply(&x);
    // In-phase: the output correlates with the input, not with its quadrature.
    let quad = tone(5.0, 40.0)
        .iter()
        .enumerate()
        .map(|(i, _)| (2.0 * PI * 5.0 * i as f64 / FS).cos())
        .collect::<Vec<_>>();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let r = 2000..6000;
    assert!(dot(&y[r.clone()], &quad[r.clone()]).abs() < 1e-3 * dot(&y[r.clone()], &x[r]));
}

#[test]
fn baseline_drift_is_removed() {
    let clean = clean_ecg(60.0);
    let drift = tone(0.3, 60.0).iter().map(|v| 0.5 * v).collect::<Vec<_>>();
    let dirty: Vec<f64> = clean
        .samples()
        .iter()
        .zip(&drift)
        .map(|(a, b)| a + b)
        .collect();
    let cfg = PreprocessConfig::default();

    let out = remove_baseline(&Signal::new(drift.clone(), FS).unwrap(), &cfg).unwrap();
    let before = band_power(&drift, FS, 0.0, 0.5);
    let after = band_power(out.signal.samples(), FS, 0.0, 0.5);
    assert!(after <= 0.1 * before, "pure drift: {after} of {before}");

    let out = remove_baseline(&Signal::new(dirty.clone(), FS).unwrap(), &cfg).unwrap();
    let before = band_power(&dirty, FS, 0.0, 0.5);
    let after = band_power(out.signal.samples(), FS, 0.0, 0.5);
    assert!(after <= 0.1 * before, "ecg + drift: {after} of {before}");

    // The QRS band survives.
    let kept = band_power(out.signal.samples(), FS, 5.0, 30.0)
        / band_power(clean.samples(), FS, 5.0, 30.0);
    assert!((kept - 1.0).abs() < 0.02, "{kept}");
}

#[test]
fn full_pipeline_keeps_beats_aligned() {
    let rec = synth_record(&RecordSpec {
        patient_id: "p".into(),
        profile: PatientProfile {
            wander_mv: 0.3,
            ..Default::default()
        },
        duration_s: 30.0,
        sample_rate_hz: 360.0,
        class_mix: mix(&[("N", 0.8), ("V", 0.2)]).unwrap(),
        seed: 11,
    })
    .unwrap();
    let (out, report) = preprocess_record(&rec, &PreprocessConfig::default()).unwrap();
    assert_eq!(out.signal.len(), 6000);
    assert_eq!(out.beat_annotations.len(), rec.beat_annotations.len());
    let names: Vec<&str> = report.stages.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(names, ["input", "resample", "baseline", "fir", "normalize"]);
    let x = out.signal.samples();
    for b in &out.beat_annotations {
        if b.code.symbol() != "N" || b.sample < 10 || b.sample + 10 >= x.len() {
            continue;
        }
        let (lo, hi) = (b.sample - 10, b.sample + 10);
        let peak = (lo..=hi).max_by(|&i, &j| x[i].total_cmp(&x[j])).unwrap();
        assert!(
            peak.abs_diff(b.sample) <= 3,
            "beat at {} peaks at {peak}",
            b.sample
        );
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    assert!(mean.abs() < 1e-12);
}

#[test]
fn kalman_stage_is_optional() {
    let s = clean_ecg(10.0);
    let cfg = PreprocessConfig {
        kalman_enabled: true,
        ..Default::default()
    };
    let (_, report) = preprocess_signal(&s, &cfg).unwrap();
    assert!(report.stages.iter().any(|st| st.stage == "kalman"));
}

proptest! {
    #[test]
    fn fir_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 64..300),
        k in -3.0f64..3.0,
    ) {
        let fir = FirFilter::bandpass(0.5, 40.0, 101, FS).unwrap();
        let b: Vec<f64> = a.iter().rev().copied().collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| k * u + v).collect();
        let (ya, yb, ys) = (fir.apply(&a), fir.apply(&b), fir.apply(&sum));
        for i in 0..a.len() {
            prop_assert!((ys[i] - (k * ya[i] + yb[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_is_idempotent(x in prop::collection::vec(-100.0f64..100.0, 2..200)) {
        let s = Signal::new(x, FS).unwrap();
        let once = normalize(&s).unwrap();
        let twice = normalize(&once.signal).unwrap();
        let y = once.signal.samples();
        if !once.degenerate {
            let span = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - y.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((span - 1.0).abs() < 1e-9);
        }
        prop_assert!((y.iter().sum::<f64>() / y.len() as f64).abs() < 1e-9);
        for (u, v) in y.iter().zip(twice.signal.samples()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn resampling_preserves_duration(n in 10usize..2000, rate in prop::sample::select(vec![128.0, 250.0, 360.0, 500.0])) {
        let s = Signal::new((0..n).map(|i| i as f64).collect(), rate).unwrap();
        let r = resample_linear(&s, FS).unwrap();
        let expect = (n as f64 * FS / rate).round() as usize;
        prop_assert!(r.len().abs_diff(expect) <= 1);
        // A ramp stays a ramp.
        for (j, v) in r.samples().iter().enumerate() {
            let t = (j as f64 * rate / FS).min((n - 1) as f64);
            prop_assert!((v - t).abs() < 1e-9);
        }
    }
}
