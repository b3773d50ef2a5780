//! Offline VoIP spam-call (SPIT) detection.
//!
//! The crate analyzes classic pcap captures of SIP/RTP telephony traffic and
//! classifies each call in two layers: a signaling layer that matches INVITE
//! identity fields against a pattern database, and a media layer that decodes
//! the G.711 audio and inspects its statistics (absolute mean against a
//! prototype table, plus silence-run rules). Calls rejected by the signaling
//! layer never have their media decoded.
//!
//! A deterministic traffic synthesizer produces labeled fixture captures for
//! testing and benchmarking.

pub mod capture;
pub mod error;
pub mod features;
pub mod g711;
pub mod media;
pub mod pipeline;
pub mod rtp;
pub mod signaling;
pub mod sip;
pub mod spam_db;
pub mod synth;

pub use capture::{CallCapture, Datagram, Endpoint, Timestamp};
pub use error::{Error, Result};
pub use features::{FeatureVector, FrameSpec, SilenceStats};
pub use media::{FailMode, MediaRuleParams, NnResult, PrototypeTable, SpamClass};
pub use pipeline::{AnalyzeOptions, BenchReport, RunReport, Verdict};
pub use rtp::{MediaStream, RtpPacket};
pub use signaling::{Combination, Decision, LayerVerdict};
pub use sip::{SignalingRecord, SipMessage, SipUri};
pub use spam_db::{MatchKind, PatternStore, SpamPattern, TargetField};
pub use synth::{CallProfile, ProfileKind};
