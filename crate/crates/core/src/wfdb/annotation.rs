//! MIT annotation files (`.atr`).
//!
//! The file is a stream of little-endian 16-bit words. The top six bits are
//! the annotation type and the low ten bits a time increment (or a payload
//! for the pseudo-types). Pseudo-types modify the neighbouring annotation:
//!
//! | type | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 59   | SKIP: the next two words hold a 32-bit increment, high word first |
//! | 60   | NUM: payload is the new `num` field                        |
//! | 61   | SUB: payload is the `subtype` of the previous annotation   |
//! | 62   | CHN: payload is the new `chan` field                       |
//! | 63   | AUX: payload is a byte count; the bytes follow, padded to even |
//!
//! A zero word ends the file.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SKIP: u16 = 59;
const NUM: u16 = 60;
const SUB: u16 = 61;
const CHN: u16 = 62;
const AUX: u16 = 63;
const MAX_CODE: u8 = 49;

/// Symbols indexed by annotation type code (WFDB `ecgcodes.h`).
const SYMBOLS: [&str; 50] = [
    " ", "N", "L", "R", "a", "V", "F", "J", "A", "S", "E", "j", "/", "Q", "~", "[15]", "|", "[17]",
    "s", "T", "*", "D", "\"", "=", "p", "B", "^", "t", "+", "u", "?", "!", "[", "]", "e", "n", "@",
    "x", "f", "(", ")", "r", "[42]", "[43]", "[44]", "[45]", "[46]", "[47]", "[48]", "[49]",
];

/// An annotation type code, `0..=49`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnnotationCode(u8);

impl AnnotationCode {
    pub const NORMAL: Self = Self(1);
    pub const PVC: Self = Self(5);

    pub fn new(code: u8) -> Result<Self> {
        if code > MAX_CODE {
            return Err(Error::invalid(format!(
                "annotation code {code} out of range"
            )));
        }
        Ok(Self(code))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[usize::from(self.0)]
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        SYMBOLS
            .iter()
            .position(|s| *s == symbol)
            .map(|i| Self(i as u8))
    }
}

impl std::fmt::Display for AnnotationCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub sample: u64,
    pub code: AnnotationCode,
    pub subtype: i16,
    pub chan: u16,
    pub num: i16,
    pub aux: Option<Vec<u8>>,
}

impl Annotation {
    pub fn new(sample: u64, code: AnnotationCode) -> Self {
        Self {
            sample,
            code,
            subtype: 0,
            chan: 0,
            num: 0,
            aux: None,
        }
    }
}

/// The set of annotation codes that denote heartbeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatCodes(HashSet<AnnotationCode>);

impl BeatCodes {
    /// One symbol per line; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut set = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let sym = line.trim();
            if sym.is_empty() || sym.starts_with('#') {
                continue;
            }
            let code = AnnotationCode::from_symbol(sym).ok_or_else(|| {
                Error::parse(
                    "beat_codes",
                    i + 1,
                    format!("unknown annotation symbol {sym:?}"),
                )
            })?;
            set.insert(code);
        }
        Ok(Self(set))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn is_beat(&self, code: AnnotationCode) -> bool {
        self.0.contains(&code)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for BeatCodes {
    fn default() -> Self {
        Self::from_text(include_str!("../../assets/beat_codes.txt"))
            .expect("bundled beat code table is valid")
    }
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    decode_annotations(&bytes).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::parse(path, line, message),
        other => other,
    })
}

/// Decodes an annotation byte stream. Parse errors report the byte offset
/// in place of a line number.
pub fn decode_annotations(bytes: &[u8]) -> Result<Vec<Annotation>> {
    let word_at = |pos: usize| -> Option<u16> {
        bytes
            .get(pos..pos + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
    };
    let err = |pos: usize, msg: &str| Error::parse("annotations", pos, msg.to_string());

    let mut out: Vec<Annotation> = Vec::new();
    let mut time: i64 = 0;
    let mut num: i16 = 0;
    let mut chan: u16 = 0;
    let mut pos = 0;

    while let Some(word) = word_at(pos) {
        let kind = word >> 10;
        let payload = word & 0x3FF;
        pos += 2;
        match kind {
            0 if payload == 0 => return Ok(out),
            SKIP => {
                let hi = word_at(pos).ok_or_else(|| err(pos, "truncated SKIP interval"))?;
                let lo = word_at(pos + 2).ok_or_else(|| err(pos, "truncated SKIP interval"))?;
                pos += 4;
                let jump = ((u32::from(hi) << 16) | u32::from(lo)) as i32;
                time += i64::from(jump);
                if time < 0 {
                    return Err(err(pos, "SKIP moves annotation time below zero"));
                }
            }
            NUM => {
                num = sign_extend_10(payload);
                if let Some(last) = out.last_mut() {
                    last.num = num;
                }
            }
            SUB => {
                let last = out
                    .last_mut()
                    .ok_or_else(|| err(pos, "SUB before any annotation"))?;
                last.subtype = sign_extend_10(payload);
            }
            CHN => {
                chan = payload;
                if let Some(last) = out.last_mut() {
                    last.chan = chan;
                }
            }
            AUX => {
                let len = usize::from(payload);
                let data = bytes
                    .get(pos..pos + len)
                    .ok_or_else(|| err(pos, "AUX length runs past end of file"))?;
                let last = out
                    .last_mut()
                    .ok_or_else(|| err(pos, "AUX before any annotation"))?;
                last.aux = Some(data.to_vec());
                pos += len + (len & 1);
            }
            code if code <= u16::from(MAX_CODE) => {
                time += i64::from(payload);
                out.push(Annotation {
                    sample: time as u64,
                    code: AnnotationCode(code as u8),
                    subtype: 0,
                    chan,
                    num,
                    aux: None,
                });
            }
            _ => return Err(err(pos - 2, "unknown annotation type")),
        }
    }
    if pos != bytes.len() {
        return Err(err(pos, "dangling byte after last annotation word"));
    }
    Ok(out)
}

fn sign_extend_10(v: u16) -> i16 {
    let v = (v & 0x3FF) as i16;
    if v & 0x200 != 0 {
        v - 0x400
    } else {
        v
    }
}

fn push_word(out: &mut Vec<u8>, kind: u16, payload: u16) {
    out.extend_from_slice(&((kind << 10) | (payload & 0x3FF)).to_le_bytes());
}

/// Encodes annotations (sorted by sample) in the MIT format, terminated by
/// the end marker.
pub fn encode_annotations(anns: &[Annotation]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(anns.len() * 2 + 2);
    let mut time = 0u64;
    let (mut num, mut chan) = (0i16, 0u16);
    for a in anns {
        if a.sample < time {
            return Err(Error::invalid("annotations must be sorted by sample"));
        }
        if a.code.0 == 0 {
            return Err(Error::invalid("code 0 cannot be encoded as an annotation"));
        }
        let delta = a.sample - time;
        if delta > 0x3FF {
            let jump = i32::try_from(delta)
                .map_err(|_| Error::invalid("annotation gap exceeds 32 bits"))?;
            push_word(&mut out, SKIP, 0);
            out.extend_from_slice(&(((jump as u32) >> 16) as u16).to_le_bytes());
            out.extend_from_slice(&((jump as u32 & 0xFFFF) as u16).to_le_bytes());
            push_word(&mut out, u16::from(a.code.0), 0);
        } else {
            push_word(&mut out, u16::from(a.code.0), delta as u16);
        }
        time = a.sample;
        if a.subtype != 0 {
            push_word(&mut out, SUB, a.subtype as u16);
        }
        if a.chan != chan {
            chan = a.chan;
            push_word(&mut out, CHN, chan);
        }
        if a.num != num {
            num = a.num;
            push_word(&mut out, NUM, num as u16);
        }
        if let Some(aux) = &a.aux {
            if aux.len() > 0x3FF {
                return Err(Error::invalid("AUX payload longer than 1023 bytes"));
            }
            push_word(&mut out, AUX, aux.len() as u16);
            out.extend_from_slice(aux);
            if aux.len() % 2 == 1 {
                out.push(0);
            }
        }
    }
    out.extend_from_slice(&[0, 0]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(kind: u16, payload: u16) -> [u8; 2] {
        ((kind << 10) | payload).to_le_bytes()
    }

    #[test]
    fn cumulative_times() {
        let mut b = Vec::new();
        b.extend(word(1, 77));
        b.extend(word(5, 200));
        b.extend([0, 0]);
        let anns = decode_annotations(&b).unwrap();
        let got: Vec<_> = anns.iter().map(|a| (a.sample, a.code.symbol())).collect();
        assert_eq!(got, vec![(77, "N"), (277, "V")]);
    }

    #[test]
    fn end_marker_only() {
        assert!(decode_annotations(&[0, 0]).unwrap().is_empty());
        assert!(decode_annotations(&[]).unwrap().is_empty());
    }

    #[test]
    fn skip_advances_time() {
        let mut b = Vec::new();
        b.extend(word(SKIP, 0));
        // 100000 = 0x0001_86A0, high word first.
        b.extend(1u16.to_le_bytes());
        b.extend(0x86A0u16.to_le_bytes());
        b.extend(word(1, 0));
        b.extend(word(1, 10));
        b.extend([0, 0]);
        let anns = decode_annotations(&b).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0].sample, 100_000);
        assert_eq!(anns[1].sample, 100_010);
    }

    #[test]
    fn modifiers_attach_to_previous() {
        let mut b = Vec::new();
        b.extend(word(1, 5));
        b.extend(word(SUB, 3));
        b.extend(word(CHN, 1));
        b.extend(word(AUX, 3));
        b.extend(b"(N\0\0");
        b.extend(word(28, 1));
        b.extend([0, 0]);
        let anns = decode_annotations(&b).unwrap();
        assert_eq!(anns[0].subtype, 3);
        assert_eq!(anns[0].chan, 1);
        assert_eq!(anns[0].aux.as_deref(), Some(&b"(N\0"[..]));
        assert_eq!(anns[1].code.symbol(), "+");
        assert_eq!(anns[1].chan, 1);
        assert_eq!(anns[1].sample, 6);
        assert_eq!(encode_annotations(&anns).unwrap().len() % 2, 0);
        assert_eq!(
            decode_annotations(&encode_annotations(&anns).unwrap()).unwrap(),
            anns
        );
    }

    #[test]
    fn dangling_aux_and_underflow() {
        let mut b = Vec::new();
        b.extend(word(1, 5));
        b.extend(word(AUX, 40));
        b.extend(b"short");
        assert!(matches!(decode_annotations(&b), Err(Error::Parse { .. })));

        let mut b = Vec::new();
        b.extend(word(SKIP, 0));
        b.extend(0xFFFFu16.to_le_bytes());
        b.extend(0xFFF0u16.to_le_bytes());
        b.extend(word(1, 0));
        assert!(matches!(decode_annotations(&b), Err(Error::Parse { .. })));
    }

    #[test]
    fn symbols_round_trip() {
        for code in 1..=41u8 {
            let c = AnnotationCode::new(code).unwrap();
            assert_eq!(AnnotationCode::from_symbol(c.symbol()), Some(c));
        }
        assert!(AnnotationCode::new(50).is_err());
    }

    #[test]
    fn default_beat_partition() {
        let beats = BeatCodes::default();
        for s in ["N", "V", "A", "L", "R", "/", "f", "Q"] {
            assert!(
                beats.is_beat(AnnotationCode::from_symbol(s).unwrap()),
                "{s}"
            );
        }
        for s in ["+", "~", "|", "\"", "x"] {
            assert!(
                !beats.is_beat(AnnotationCode::from_symbol(s).unwrap()),
                "{s}"
            );
        }
        assert!(BeatCodes::from_text("N\nnotasymbol\n").is_err());
    }
}
