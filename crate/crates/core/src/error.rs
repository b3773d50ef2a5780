use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad pcap magic number {magic:#010x}")]
    BadMagic { magic: u32 },
    #[error("truncated pcap record at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("timestamps decrease at datagram {index}")]
    DecreasingTimestamps { index: usize },

    #[error("sip message has no start line")]
    NoStartLine,
    #[error("sip start line is not text")]
    NonTextStartLine,
    #[error("bad sip start line: {line:?}")]
    BadStartLine { line: String },
    #[error("malformed sip header at line {line}: {text:?}")]
    MalformedHeader { line: usize, text: String },
    #[error("sip uri {uri:?} has no scheme")]
    UriMissingScheme { uri: String },
    #[error("sip uri {uri:?} has an empty host")]
    UriEmptyHost { uri: String },
    #[error("expected an INVITE request, got {got}")]
    NotInvite { got: String },
    #[error("INVITE is missing required header {header}")]
    MissingHeader { header: &'static str },

    #[error("rtp packet shorter than 12 bytes (got {len})")]
    RtpTooShort { len: usize },
    #[error("rtp version {version} is not 2")]
    RtpBadVersion { version: u8 },
    #[error("rtp header fields exceed packet length")]
    RtpHeaderOverrun,
    #[error("unsupported rtp payload type {pt}")]
    UnsupportedPayloadType { pt: u8 },

    #[error("{path}:{line}: {reason}")]
    PatternFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("duplicate pattern {pattern:?} for field {field}")]
    DuplicatePattern { field: String, pattern: String },
    #[error("pattern {pattern:?} for field {field} is not in the store")]
    PatternAbsent { field: String, pattern: String },

    #[error("prototype table {path}: {reason}")]
    PrototypeFile { path: PathBuf, reason: String },
    #[error("prototype table needs at least one entry per class")]
    BadPrototypeTable,

    #[error("empty input: {what}")]
    EmptyInput { what: &'static str },
    #[error("frame shorter than 2 samples")]
    FrameTooShort,

    #[error("call {call_id} has no INVITE")]
    NoInvite { call_id: String },
    #[error("benchmark needs at least 3 repetitions (got {got})")]
    TooFewRepetitions { got: u32 },
    #[error("benchmark corpus is empty")]
    EmptyCorpus,
    #[error("profile spec line {line}: {reason}")]
    ProfileLine { line: usize, reason: String },
    #[error("manifest line {line}: {reason}")]
    ManifestLine { line: usize, reason: String },
    #[error("calibration needs at least one labeled genuine call")]
    NoCalibrationInput,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
