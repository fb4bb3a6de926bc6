//! Physionet WFDB records: `.hea` headers, format 212/16 signal files and
//! MIT annotation files.

pub mod annotation;
pub mod header;
pub mod record;
pub mod signal;

pub use annotation::{
    decode_annotations, encode_annotations, read_annotations, Annotation, AnnotationCode, BeatCodes,
};
pub use header::{parse_header, read_header, RecordHeader, SignalFormat, SignalSpec};
pub use record::{
    build_manifest, load_record, AnnotatedRecord, BeatAnnotation, DatabaseSummary, DatasetManifest,
    LoadOptions, ManifestEntry, RecordWriter,
};
pub use signal::{
    decode_16, decode_212, decode_channel, deinterleave, encode_16, encode_212, read_signal_212,
    to_adc, to_physical,
};
