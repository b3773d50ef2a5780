//! Deterministic synthesis of SIP+RTP call captures with genuine and spam
//! profiles.
//!
//! Audio is a sum of two fixed tones with seed-driven phase plus a little
//! noise, gated by the profile's talk/silence pattern, companded to G.711
//! µ-law and packetized at 20 ms. The generator is a fixed 64-bit LCG so a
//! given (profile, seed) always produces a byte-identical capture.

use std::fmt;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::capture::{self, CallCapture, Datagram, Endpoint, Timestamp};
use crate::error::{Error, Result};
use crate::g711;
use crate::media::SpamClass;
use crate::rtp::{render_rtp, RtpPacket, PAYLOAD_TYPE_ULAW};

pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
pub const LCG_INCREMENT: u64 = 1442695040888963407;

/// The documented linear congruential generator behind all synthesis.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg {
            state: seed.wrapping_mul(LCG_MULTIPLIER).wrapping_add(LCG_INCREMENT),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Genuine,
    SpamSignaling,
    SpamContinuous,
    SpamSilent,
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Genuine => "genuine",
            ProfileKind::SpamSignaling => "spam_signaling",
            ProfileKind::SpamContinuous => "spam_continuous",
            ProfileKind::SpamSilent => "spam_silent",
        }
    }

    pub fn expected_class(&self) -> SpamClass {
        match self {
            ProfileKind::Genuine => SpamClass::Genuine,
            _ => SpamClass::Spam,
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "genuine" => Ok(ProfileKind::Genuine),
            "spam_signaling" => Ok(ProfileKind::SpamSignaling),
            "spam_continuous" => Ok(ProfileKind::SpamContinuous),
            "spam_silent" => Ok(ProfileKind::SpamSilent),
            _ => Err(()),
        }
    }
}

/// INVITE identity stamped into the synthesized call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub from_user: String,
    pub from_host: String,
    pub from_display: String,
    pub subject: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallProfile {
    pub kind: ProfileKind,
    pub seed: u64,
    /// Seconds of media.
    pub duration: f64,
    /// Talk span length for alternating profiles, seconds.
    pub talk_period: f64,
    /// Silence span length for alternating profiles, seconds.
    pub silence_period: f64,
    pub identity: Identity,
}

impl CallProfile {
    pub fn new(kind: ProfileKind, seed: u64) -> Self {
        let identity = match kind {
            ProfileKind::Genuine => Identity {
                from_user: "alice".into(),
                from_host: "example.org".into(),
                from_display: "Alice".into(),
                subject: None,
            },
            ProfileKind::SpamSignaling => Identity {
                from_user: "anonymous".into(),
                from_host: "anonymous.net".into(),
                from_display: "Summer Offer".into(),
                subject: Some("Summer Offer".into()),
            },
            ProfileKind::SpamContinuous => Identity {
                from_user: "bob".into(),
                from_host: "example.org".into(),
                from_display: "Bob".into(),
                subject: None,
            },
            ProfileKind::SpamSilent => Identity {
                from_user: "carol".into(),
                from_host: "example.org".into(),
                from_display: "Carol".into(),
                subject: None,
            },
        };
        CallProfile {
            kind,
            seed,
            duration: 10.0,
            talk_period: 2.0,
            silence_period: 1.0,
            identity,
        }
    }

    pub fn call_id(&self) -> String {
        format!("{}-{}@example.org", self.kind, self.seed)
    }

    fn media_port(&self) -> u16 {
        40000 + ((self.seed % 4000) as u16) * 4
    }
}

const SAMPLE_RATE: f64 = 8000.0;
const SAMPLES_PER_PACKET: usize = 160; // 20 ms
const CALLER_IP: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 10);
const CALLEE_IP: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 20);
const SIP_PORT: u16 = 5060;
const TONE_A_HZ: f64 = 350.0;
const TONE_B_HZ: f64 = 440.0;
const TONE_AMPLITUDE: f64 = 0.3;
const NOISE_AMPLITUDE: f64 = 0.01;

fn voiced_at(profile: &CallProfile, t: f64) -> bool {
    match profile.kind {
        ProfileKind::SpamContinuous => true,
        ProfileKind::SpamSilent => t < profile.talk_period,
        ProfileKind::Genuine | ProfileKind::SpamSignaling => {
            let cycle = profile.talk_period + profile.silence_period;
            t % cycle < profile.talk_period
        }
    }
}

/// The profile's audio as normalized linear samples (pre-companding).
pub fn synth_audio(profile: &CallProfile, rng: &mut Lcg) -> Vec<f64> {
    let n = (profile.duration * SAMPLE_RATE).round() as usize;
    let phase_a = 2.0 * std::f64::consts::PI * rng.next_f64();
    let phase_b = 2.0 * std::f64::consts::PI * rng.next_f64();
    (0..n)
        .map(|i| {
            let t = i as f64 / SAMPLE_RATE;
            if voiced_at(profile, t) {
                let tone = TONE_AMPLITUDE * (2.0 * std::f64::consts::PI * TONE_A_HZ * t + phase_a).sin()
                    + TONE_AMPLITUDE * (2.0 * std::f64::consts::PI * TONE_B_HZ * t + phase_b).sin();
                tone + NOISE_AMPLITUDE * (2.0 * rng.next_f64() - 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn ts_offset(base: Timestamp, seconds: f64) -> Timestamp {
    let total = f64::from(base.sec) + f64::from(base.usec) * 1e-6 + seconds;
    Timestamp {
        sec: total.floor() as u32,
        usec: ((total - total.floor()) * 1e6).round() as u32 % 1_000_000,
    }
}

struct MessageBuilder<'a> {
    profile: &'a CallProfile,
    callee: Endpoint,
}

impl MessageBuilder<'_> {
    fn sdp(&self, ip: Ipv4Addr, port: u16) -> String {
        format!(
            "v=0\r\no=- {} 0 IN IP4 {ip}\r\ns=call\r\nc=IN IP4 {ip}\r\nt=0 0\r\nm=audio {port} RTP/AVP 0\r\n",
            self.profile.seed
        )
    }

    fn common_headers(&self, to_tag: bool) -> String {
        let p = self.profile;
        let tag_suffix = if to_tag {
            format!(";tag=to{}", p.seed)
        } else {
            String::new()
        };
        let mut h = format!(
            "Via: SIP/2.0/UDP {}:{};branch=z9hG4bK-{}\r\n",
            CALLER_IP, SIP_PORT, p.seed
        );
        h.push_str(&format!(
            "From: \"{}\" <sip:{}@{}>;tag=fr{}\r\n",
            p.identity.from_display, p.identity.from_user, p.identity.from_host, p.seed
        ));
        h.push_str(&format!("To: <sip:callee@example.org>{tag_suffix}\r\n"));
        h.push_str(&format!("Call-ID: {}\r\n", p.call_id()));
        h
    }

    fn invite(&self) -> Vec<u8> {
        let p = self.profile;
        let body = self.sdp(CALLER_IP, p.media_port());
        let mut m = String::from("INVITE sip:callee@example.org SIP/2.0\r\n");
        m.push_str(&self.common_headers(false));
        m.push_str("CSeq: 1 INVITE\r\nMax-Forwards: 70\r\n");
        m.push_str(&format!(
            "Contact: <sip:{}@{}>\r\n",
            p.identity.from_user, CALLER_IP
        ));
        if let Some(subject) = &p.identity.subject {
            m.push_str(&format!("Subject: {subject}\r\n"));
        }
        m.push_str("Content-Type: application/sdp\r\n");
        m.push_str(&format!("Content-Length: {}\r\n\r\n{}", body.len(), body));
        m.into_bytes()
    }

    fn response(&self, status: u16, reason: &str, cseq: &str, with_sdp: bool) -> Vec<u8> {
        let mut m = format!("SIP/2.0 {status} {reason}\r\n");
        m.push_str(&self.common_headers(true));
        m.push_str(&format!("CSeq: {cseq}\r\n"));
        if with_sdp {
            let body = self.sdp(CALLEE_IP, self.callee.port);
            m.push_str("Content-Type: application/sdp\r\n");
            m.push_str(&format!("Content-Length: {}\r\n\r\n{}", body.len(), body));
        } else {
            m.push_str("Content-Length: 0\r\n\r\n");
        }
        m.into_bytes()
    }

    fn request(&self, method: &str, cseq: &str) -> Vec<u8> {
        let mut m = format!("{method} sip:callee@example.org SIP/2.0\r\n");
        m.push_str(&self.common_headers(true));
        m.push_str(&format!("CSeq: {cseq}\r\nContent-Length: 0\r\n\r\n"));
        m.into_bytes()
    }
}

/// All datagrams of one synthesized call, timestamp-ordered.
pub fn synth_datagrams(profile: &CallProfile) -> Vec<Datagram> {
    let mut rng = Lcg::new(profile.seed);
    let ssrc = rng.next_u64() as u32;
    let start_seq = 1000u16.wrapping_add((profile.seed % 1000) as u16);
    let audio = synth_audio(profile, &mut rng);

    let caller_media = Endpoint::new(CALLER_IP, profile.media_port());
    let callee_media = Endpoint::new(CALLEE_IP, profile.media_port() + 2);
    let caller_sip = Endpoint::new(CALLER_IP, SIP_PORT);
    let callee_sip = Endpoint::new(CALLEE_IP, SIP_PORT);
    let base = Timestamp::new(1_700_000_000, ((profile.seed % 997) as u32) * 1000);

    let builder = MessageBuilder {
        profile,
        callee: callee_media,
    };

    let mut out = Vec::new();
    let mut push = |t: f64, src: Endpoint, dst: Endpoint, payload: Vec<u8>| {
        out.push(Datagram {
            timestamp: ts_offset(base, t),
            src,
            dst,
            payload,
        });
    };

    push(0.0, caller_sip, callee_sip, builder.invite());
    push(
        0.05,
        callee_sip,
        caller_sip,
        builder.response(180, "Ringing", "1 INVITE", false),
    );
    push(
        0.45,
        callee_sip,
        caller_sip,
        builder.response(200, "OK", "1 INVITE", true),
    );
    push(0.5, caller_sip, callee_sip, builder.request("ACK", "1 ACK"));

    let media_start = 0.6;
    let packet_count = audio.len() / SAMPLES_PER_PACKET;
    for i in 0..packet_count {
        let chunk = &audio[i * SAMPLES_PER_PACKET..(i + 1) * SAMPLES_PER_PACKET];
        let payload: Vec<u8> = chunk.iter().map(|&x| g711::encode_ulaw(x)).collect();
        let packet = RtpPacket {
            version: 2,
            marker: i == 0,
            payload_type: PAYLOAD_TYPE_ULAW,
            sequence: start_seq.wrapping_add(i as u16),
            timestamp: (i * SAMPLES_PER_PACKET) as u32,
            ssrc,
            payload,
        };
        push(
            media_start + 0.02 * i as f64,
            caller_media,
            callee_media,
            render_rtp(&packet),
        );
    }

    let end = media_start + 0.02 * packet_count as f64;
    push(end + 0.05, caller_sip, callee_sip, builder.request("BYE", "2 BYE"));
    push(
        end + 0.08,
        callee_sip,
        caller_sip,
        builder.response(200, "OK", "2 BYE", false),
    );
    out
}

/// Synthesize and group into the one call capture the datagrams describe.
pub fn synth_call(profile: &CallProfile) -> CallCapture {
    let datagrams = synth_datagrams(profile);
    let grouped = capture::group_calls(&datagrams, SIP_PORT);
    debug_assert_eq!(grouped.calls.len(), 1);
    grouped.calls.into_iter().next().expect("one call")
}

/// One row of a corpus manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub kind: ProfileKind,
    pub seed: u64,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Write one pcap per profile plus a labeled manifest; returns the pcap paths.
pub fn synth_corpus(profiles: &[CallProfile], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(profiles.len());
    let mut manifest = format!(
        "# spitgate synth corpus manifest\n# lcg: multiplier={LCG_MULTIPLIER} increment={LCG_INCREMENT}\n# path|kind|seed\n"
    );
    for (i, profile) in profiles.iter().enumerate() {
        let name = format!("call_{i:03}_{}_{}.pcap", profile.kind, profile.seed);
        let path = out_dir.join(&name);
        capture::write_capture(&synth_datagrams(profile), &path)?;
        manifest.push_str(&format!("{name}|{}|{}\n", profile.kind, profile.seed));
        paths.push(path);
    }
    std::fs::write(out_dir.join(MANIFEST_FILE), manifest)
        .map_err(|e| Error::io(out_dir.join(MANIFEST_FILE), e))?;
    Ok(paths)
}

/// Read a corpus manifest back; paths are resolved against its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('|').collect();
        let bad = |reason: String| Error::ManifestLine {
            line: i + 1,
            reason,
        };
        if parts.len() != 3 {
            return Err(bad(format!("expected path|kind|seed, got {line:?}")));
        }
        let kind: ProfileKind = parts[1]
            .parse()
            .map_err(|()| bad(format!("unknown kind {:?}", parts[1])))?;
        let seed: u64 = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad seed {:?}", parts[2])))?;
        rows.push(ManifestEntry {
            path: dir.join(parts[0]),
            kind,
            seed,
        });
    }
    Ok(rows)
}

/// Parse one profile spec line: `kind|seed[|duration[|key=value...]]`.
/// Keys: talk, silence, from_user, from_host, display, subject.
pub fn parse_profile_line(line: &str, line_no: usize) -> Result<CallProfile> {
    let bad = |reason: String| Error::ProfileLine {
        line: line_no,
        reason,
    };
    let parts: Vec<&str> = line.split('|').collect();
    if parts.len() < 2 {
        return Err(bad(format!("expected kind|seed..., got {line:?}")));
    }
    let kind: ProfileKind = parts[0]
        .parse()
        .map_err(|()| bad(format!("unknown kind {:?}", parts[0])))?;
    let seed: u64 = parts[1]
        .parse()
        .map_err(|_| bad(format!("bad seed {:?}", parts[1])))?;
    let mut profile = CallProfile::new(kind, seed);
    if let Some(duration) = parts.get(2) {
        profile.duration = duration
            .parse()
            .map_err(|_| bad(format!("bad duration {duration:?}")))?;
        if profile.duration <= 0.0 {
            return Err(bad("duration must be > 0".into()));
        }
    }
    for param in parts.iter().skip(3) {
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {param:?}")))?;
        match key {
            "talk" => profile.talk_period = value.parse().map_err(|_| bad(format!("bad talk {value:?}")))?,
            "silence" => {
                profile.silence_period =
                    value.parse().map_err(|_| bad(format!("bad silence {value:?}")))?
            }
            "from_user" => profile.identity.from_user = value.into(),
            "from_host" => profile.identity.from_host = value.into(),
            "display" => profile.identity.from_display = value.into(),
            "subject" => profile.identity.subject = Some(value.into()),
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    if profile.talk_period <= 0.0 || profile.silence_period <= 0.0 {
        return Err(bad("periods must be > 0".into()));
    }
    Ok(profile)
}

/// Load a whole profile spec file (one profile per line, `#` comments).
pub fn load_profile_spec(path: &Path) -> Result<Vec<CallProfile>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut profiles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        profiles.push(parse_profile_line(line, i + 1)?);
    }
    Ok(profiles)
}
