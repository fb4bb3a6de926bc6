use ecgtda_wasm::{explore_json, fir_response_json, stretch_json, synth_strip_json};
use proptest::prelude::*;
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn triples(side: &Value) -> Vec<(f64, f64, bool)> {
    side["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| {
            (
                i["birth"].as_f64().unwrap(),
                i["death"].as_f64().unwrap(),
                i["essential"].as_bool().unwrap(),
            )
        })
        .collect()
}

#[test]
fn explorer_on_the_small_fixture() {
    let v = parse(&explore_json("[0, 2, 1, 3]", 5).unwrap());
    assert_eq!(v["samples"], 4);
    let mut sub = triples(&v["sublevel"]);
    sub.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(sub, [(0.0, 3.0, true), (1.0, 2.0, false)]);
    // Peaks at 2 and 3; the lower one merges into the higher at level 1.
    let mut sup = triples(&v["superlevel"]);
    sup.sort_by(|a, b| b.0.total_cmp(&a.0));
    assert_eq!(sup, [(3.0, 0.0, true), (2.0, 1.0, false)]);
    let counts = v["sublevel"]["betti"]["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 5);
    // Grid 0, .75, 1.5, 2.25, 3: the second component lives on [1, 2).
    let counts: Vec<u64> = counts.iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 1, 2, 1, 1]);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(explore_json("[1, 2", 10).is_err());
    assert!(explore_json("[]", 10).is_err());
    assert!(explore_json("[1, 2]", 1).is_err());
    assert!(stretch_json("[1, 2, 3]", 0.0, 10).is_err());
    assert!(fir_response_json(0.5, 40.0, 100, 200.0, 64).is_err());
    assert!(fir_response_json(0.5, 120.0, 101, 200.0, 64).is_err());
    assert!(synth_strip_json("?!", 2.0, 200.0, 0.0, 1).is_err());
}

#[test]
fn fir_response_shape() {
    let v = parse(&fir_response_json(0.5, 40.0, 401, 200.0, 401).unwrap());
    let f: Vec<f64> = v["freq_hz"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let g: Vec<f64> = v["gain_db"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(f.len(), 401);
    assert_eq!((f[0], f[400]), (0.0, 100.0));
    let at = |hz: f64| g[f.iter().position(|&x| (x - hz).abs() < 1e-9).unwrap()];
    assert!(at(10.0).abs() < 0.1, "passband {}", at(10.0));
    assert!(at(0.0) < -40.0, "dc {}", at(0.0));
    assert!(at(60.0) < -40.0, "stopband {}", at(60.0));
}

#[test]
fn synthetic_strip() {
    let text = synth_strip_json("V", 3.0, 200.0, 0.0, 4).unwrap();
    let x: Vec<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(x.len(), 600);
    assert!(x.iter().any(|v| v.abs() > 0.5));
    assert_eq!(synth_strip_json("V", 3.0, 200.0, 0.0, 4).unwrap(), text);
    assert_ne!(synth_strip_json("V", 3.0, 200.0, 0.05, 5).unwrap(), text);
}

proptest! {
    #[test]
    fn integer_stretch_keeps_the_barcode(
        x in prop::collection::vec(-5.0f64..5.0, 2..60),
        factor in 1u32..6,
    ) {
        let json = serde_json::to_string(&x).unwrap();
        let v = parse(&stretch_json(&json, factor as f64, 16).unwrap());
        prop_assert_eq!(v["stretched"].as_array().unwrap().len(), x.len() * factor as usize);
        prop_assert_eq!(&v["original_intervals"], &v["stretched_intervals"]);
        let gap = v["max_endpoint_gap"].as_f64().unwrap();
        prop_assert!(gap <= 1e-12, "gap {}", gap);
    }
}
