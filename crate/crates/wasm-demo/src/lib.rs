//! Browser bindings for the persistence explorer, the time-stretch check
//! and the band-pass filter response. Every entry point takes and returns
//! JSON text; the `*_json` functions hold the logic and run natively too.

use ecgtda::dsp::{resample_linear, FirFilter};
use ecgtda::synth::{mix, synth_record, PatientProfile, RecordSpec};
use ecgtda::tda::{
    betti_curve, sublevel_barcode_of, superlevel_barcode_of, BettiCurve, PersistenceBarcode,
    PersistenceInterval,
};
use ecgtda::Signal;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_samples(samples: &str) -> Res<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(samples).map_err(err)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err("samples must be finite".into());
    }
    Ok(v)
}

#[derive(Serialize)]
struct Curve {
    grid: Vec<f64>,
    counts: Vec<u32>,
}

impl From<BettiCurve> for Curve {
    fn from(c: BettiCurve) -> Self {
        Self {
            grid: c.grid().to_vec(),
            counts: c.counts().to_vec(),
        }
    }
}

#[derive(Serialize)]
struct Side {
    /// In signal units; superlevel intervals run from birth down to death.
    intervals: Vec<PersistenceInterval>,
    betti: Curve,
}

#[derive(Serialize)]
struct Exploration {
    samples: usize,
    sublevel: Side,
    superlevel: Side,
}

fn side(barcode: &PersistenceBarcode, bins: usize, flip: bool) -> Res<Side> {
    let mut betti: Curve = betti_curve(barcode, bins).map_err(err)?.into();
    let mut intervals = barcode.intervals().to_vec();
    if flip {
        for iv in &mut intervals {
            (iv.birth, iv.death) = (-iv.birth, -iv.death);
        }
        for a in &mut betti.grid {
            *a = -*a;
        }
    }
    Ok(Side { intervals, betti })
}

/// Barcodes and Betti curves of both filtrations.
pub fn explore_json(samples: &str, bins: usize) -> Res<String> {
    let x = parse_samples(samples)?;
    let sub = sublevel_barcode_of(&x).map_err(err)?;
    let sup = superlevel_barcode_of(&x).map_err(err)?;
    serde_json::to_string(&Exploration {
        samples: x.len(),
        sublevel: side(&sub, bins, false)?,
        superlevel: side(&sup, bins, true)?,
    })
    .map_err(err)
}

#[derive(Serialize)]
struct Stretch {
    stretched: Vec<f64>,
    original_intervals: usize,
    stretched_intervals: usize,
    /// Largest endpoint gap between the sorted barcodes, or null when the
    /// interval counts differ.
    max_endpoint_gap: Option<f64>,
    original_betti: Curve,
    stretched_betti: Curve,
}

fn endpoint_gap(a: &PersistenceBarcode, b: &PersistenceBarcode) -> Option<f64> {
    let (a, b) = (a.sorted_intervals(), b.sorted_intervals());
    (a.len() == b.len()).then(|| {
        a.iter()
            .zip(&b)
            .map(|(p, q)| (p.birth - q.birth).abs().max((p.death - q.death).abs()))
            .fold(0.0, f64::max)
    })
}

/// Resamples by `factor` and compares sublevel barcodes. Integer factors
/// keep every original vertex, so the barcode is unchanged.
pub fn stretch_json(samples: &str, factor: f64, bins: usize) -> Res<String> {
    let x = parse_samples(samples)?;
    if !(factor.is_finite() && factor > 0.0) {
        return Err(format!("invalid stretch factor {factor}"));
    }
    let s = Signal::new(x, 1.0).map_err(err)?;
    let y = resample_linear(&s, factor).map_err(err)?;
    let a = sublevel_barcode_of(s.samples()).map_err(err)?;
    let b = sublevel_barcode_of(y.samples()).map_err(err)?;
    serde_json::to_string(&Stretch {
        original_intervals: a.len(),
        stretched_intervals: b.len(),
        max_endpoint_gap: endpoint_gap(&a, &b),
        original_betti: betti_curve(&a, bins).map_err(err)?.into(),
        stretched_betti: betti_curve(&b, bins).map_err(err)?.into(),
        stretched: y.into_samples(),
    })
    .map_err(err)
}

#[derive(Serialize)]
struct Response {
    taps: usize,
    freq_hz: Vec<f64>,
    gain_db: Vec<f64>,
}

/// Band-pass magnitude response in dB on `points` frequencies up to Nyquist.
pub fn fir_response_json(
    low_hz: f64,
    high_hz: f64,
    taps: usize,
    rate_hz: f64,
    points: usize,
) -> Res<String> {
    let fir = FirFilter::bandpass(low_hz, high_hz, taps, rate_hz).map_err(err)?;
    let points = points.max(2);
    let nyquist = rate_hz / 2.0;
    let freq_hz: Vec<f64> = (0..points)
        .map(|i| nyquist * i as f64 / (points - 1) as f64)
        .collect();
    let gain_db = freq_hz
        .iter()
        .map(|&f| 20.0 * fir.gain_at(f).max(1e-12).log10())
        .collect();
    serde_json::to_string(&Response {
        taps,
        freq_hz,
        gain_db,
    })
    .map_err(err)
}

/// A few seconds of synthetic ECG made of one beat type.
pub fn synth_strip_json(
    symbol: &str,
    seconds: f64,
    rate_hz: f64,
    noise_mv: f64,
    seed: u64,
) -> Res<String> {
    let rec = synth_record(&RecordSpec {
        patient_id: "demo".into(),
        profile: PatientProfile {
            noise_mv,
            ..PatientProfile::default()
        },
        duration_s: seconds,
        sample_rate_hz: rate_hz,
        class_mix: mix(&[(symbol, 1.0)]).map_err(err)?,
        seed,
    })
    .map_err(err)?;
    serde_json::to_string(rec.signal.samples()).map_err(err)
}

#[wasm_bindgen]
pub fn explore(samples: &str, bins: usize) -> Result<String, JsError> {
    explore_json(samples, bins).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn stretch(samples: &str, factor: f64, bins: usize) -> Result<String, JsError> {
    stretch_json(samples, factor, bins).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fir_response(
    low_hz: f64,
    high_hz: f64,
    taps: usize,
    rate_hz: f64,
    points: usize,
) -> Result<String, JsError> {
    fir_response_json(low_hz, high_hz, taps, rate_hz, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn synth_strip(
    symbol: &str,
    seconds: f64,
    rate_hz: f64,
    noise_mv: f64,
    seed: u64,
) -> Result<String, JsError> {
    synth_strip_json(symbol, seconds, rate_hz, noise_mv, seed).map_err(|e| JsError::new(&e))
}
