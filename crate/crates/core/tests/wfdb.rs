use ecgtda::wfdb::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn known_212_triple() {
    assert_eq!(decode_212(&[0x34, 0x12, 0x56], 2).unwrap(), vec![564, 342]);
    assert_eq!(encode_212(&[564, 342]).unwrap(), vec![0x34, 0x12, 0x56]);
    // Sign extension of the 12-bit values.
    assert_eq!(decode_212(&[0xff, 0xff, 0xff], 2).unwrap(), vec![-1, -1]);
    assert_eq!(
        decode_212(&[0x00, 0x88, 0x00], 2).unwrap(),
        vec![-2048, -2048]
    );
}

#[test]
fn random_212_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(212);
    let v: Vec<i32> = (0..200_000).map(|_| rng.gen_range(-2048..=2047)).collect();
    let bytes = encode_212(&v).unwrap();
    assert_eq!(bytes.len(), 300_000);
    assert_eq!(decode_212(&bytes, v.len()).unwrap(), v);
}

proptest! {
    #[test]
    fn format_212_round_trip(v in prop::collection::vec(-2048i32..=2047, 0..200)) {
        let bytes = encode_212(&v).unwrap();
        prop_assert_eq!(bytes.len(), (v.len() * 3).div_ceil(2));
        prop_assert_eq!(decode_212(&bytes, v.len()).unwrap(), v);
    }

    #[test]
    fn format_16_round_trip(v in prop::collection::vec(-32768i32..=32767, 0..200)) {
        prop_assert_eq!(decode_16(&encode_16(&v).unwrap(), v.len()).unwrap(), v);
    }

    #[test]
    fn deinterleave_picks_channel(frames in prop::collection::vec(-100i32..100, 0..60), cc in 1usize..4) {
        let usable = frames.len() / cc * cc;
        for ch in 0..cc {
            let got = deinterleave(&frames[..usable], cc, ch);
            let want: Vec<i32> = frames[..usable].iter().skip(ch).step_by(cc).copied().collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn annotation_round_trip(
        gaps in prop::collection::vec(0u64..3000, 1..80),
        codes in prop::collection::vec(prop::sample::select(vec!["N", "V", "A", "L", "R", "F", "/", "+", "~", "|"]), 80),
        extras in prop::collection::vec((0i16..4, 0u16..3, 0i16..3, prop::option::of("[a-z(]{1,6}")), 80),
    ) {
        let mut t = 0;
        let anns: Vec<Annotation> = gaps
            .iter()
            .enumerate()
            .map(|(i, g)| {
                t += g;
                let (subtype, chan, num, aux) = extras[i].clone();
                Annotation {
                    sample: t,
                    code: AnnotationCode::from_symbol(codes[i]).unwrap(),
                    subtype,
                    chan,
                    num,
                    aux: aux.map(String::into_bytes),
                }
            })
            .collect();
        let bytes = encode_annotations(&anns).unwrap();
        prop_assert_eq!(decode_annotations(&bytes).unwrap(), anns);
    }
}

#[test]
fn decode_rejects_truncated_signal() {
    assert!(matches!(
        decode_212(&[1, 2], 2),
        Err(ecgtda::Error::Truncated { .. })
    ));
}

#[test]
fn sixteen_bit_record_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ch: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.03).sin() * 2.0).collect();
    let w = RecordWriter {
        name: "r16".into(),
        sample_rate_hz: 250.0,
        format: SignalFormat::Format16,
        adc_gain: 1000.0,
        adc_zero: 0,
        channels: vec![ch.clone()],
        annotations: (1..4)
            .map(|k| Annotation::new(k * 250, AnnotationCode::NORMAL))
            .collect(),
    };
    let base = w.write(dir.path()).unwrap();
    let rec = load_record(&base, &LoadOptions::default()).unwrap();
    assert_eq!(rec.signal.sample_rate_hz(), 250.0);
    for (a, b) in rec.signal.samples().iter().zip(&ch) {
        assert!((a - b).abs() <= 0.5 / 1000.0 + 1e-12);
    }
    assert_eq!(rec.beat_count(), 3);
}

#[test]
fn manifest_skips_corrupt_record() {
    let root = tempfile::tempdir().unwrap();
    let db = root.path().join("mitdb");
    let mut paths = Vec::new();
    for name in ["100", "101"] {
        let w = RecordWriter {
            name: name.into(),
            sample_rate_hz: 360.0,
            format: SignalFormat::Format212,
            adc_gain: 200.0,
            adc_zero: 1024,
            channels: vec![vec![0.1; 3600], vec![0.0; 3600]],
            annotations: vec![
                Annotation::new(100, AnnotationCode::NORMAL),
                Annotation::new(400, AnnotationCode::PVC),
                Annotation::new(500, AnnotationCode::from_symbol("+").unwrap()),
            ],
        };
        paths.push(w.write(&db).unwrap());
    }
    std::fs::write(db.join("101.dat"), [0u8; 10]).unwrap();
    let m = build_manifest(&paths, &LoadOptions::default()).unwrap();
    assert_eq!(m.total_patients(), 1);
    assert_eq!(m.total_labels(), 2);
    assert_eq!(m.failures.len(), 1);
    assert_eq!(m.databases["mitdb"].label_histogram["V"], 1);
    assert!(build_manifest(&[], &LoadOptions::default())
        .unwrap()
        .entries
        .is_empty());
}
