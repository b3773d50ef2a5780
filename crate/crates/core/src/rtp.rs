//! RTP packet parsing, per-SSRC reassembly, and decoding into media streams.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::g711;

pub const PAYLOAD_TYPE_ULAW: u8 = 0;
pub const PAYLOAD_TYPE_ALAW: u8 = 8;
pub const SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtpPacket {
    pub version: u8,
    pub marker: bool,
    pub payload_type: u8,
    pub sequence: u16,
    pub timestamp: u32,
    pub ssrc: u32,
    pub payload: Vec<u8>,
}

/// Decode the fixed 12-byte header, honoring CSRC count, padding, and the
/// extension flag.
pub fn parse_rtp(bytes: &[u8]) -> Result<RtpPacket> {
    if bytes.len() < 12 {
        return Err(Error::RtpTooShort { len: bytes.len() });
    }
    let version = bytes[0] >> 6;
    if version != 2 {
        return Err(Error::RtpBadVersion { version });
    }
    let padding = bytes[0] & 0x20 != 0;
    let extension = bytes[0] & 0x10 != 0;
    let csrc_count = usize::from(bytes[0] & 0x0F);
    let marker = bytes[1] & 0x80 != 0;
    let payload_type = bytes[1] & 0x7F;
    let sequence = u16::from_be_bytes([bytes[2], bytes[3]]);
    let timestamp = u32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]);
    let ssrc = u32::from_be_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]);

    let mut offset = 12 + 4 * csrc_count;
    if offset > bytes.len() {
        return Err(Error::RtpHeaderOverrun);
    }
    if extension {
        if offset + 4 > bytes.len() {
            return Err(Error::RtpHeaderOverrun);
        }
        let words = usize::from(u16::from_be_bytes([bytes[offset + 2], bytes[offset + 3]]));
        offset += 4 + 4 * words;
        if offset > bytes.len() {
            return Err(Error::RtpHeaderOverrun);
        }
    }
    let mut end = bytes.len();
    if padding {
        let pad = usize::from(*bytes.last().unwrap());
        if pad == 0 || offset + pad > end {
            return Err(Error::RtpHeaderOverrun);
        }
        end -= pad;
    }
    Ok(RtpPacket {
        version,
        marker,
        payload_type,
        sequence,
        timestamp,
        ssrc,
        payload: bytes[offset..end].to_vec(),
    })
}

/// Serialize a packet with the fixed header only (no CSRC, no extension).
pub fn render_rtp(packet: &RtpPacket) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + packet.payload.len());
    out.push(0x80);
    out.push(u8::from(packet.marker) << 7 | packet.payload_type);
    out.extend_from_slice(&packet.sequence.to_be_bytes());
    out.extend_from_slice(&packet.timestamp.to_be_bytes());
    out.extend_from_slice(&packet.ssrc.to_be_bytes());
    out.extend_from_slice(&packet.payload);
    out
}

/// One SSRC's packets in sequence order.
#[derive(Debug, Clone)]
pub struct SsrcStream {
    pub ssrc: u32,
    pub packets: Vec<RtpPacket>,
    pub duplicates: usize,
    /// Sequence numbers missing between the lowest and highest seen.
    pub gaps: Vec<u16>,
}

// A jump from the top of the sequence space down to the bottom is a wrap.
const WRAP_HIGH: u16 = 65400;
const WRAP_LOW: u16 = 135;

/// Group packets by SSRC and order each group by sequence number, handling
/// one 16-bit wraparound. Duplicates keep the first occurrence.
pub fn reassemble(packets: Vec<RtpPacket>) -> Vec<SsrcStream> {
    let mut groups: BTreeMap<u32, Vec<RtpPacket>> = BTreeMap::new();
    for p in packets {
        groups.entry(p.ssrc).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|(ssrc, group)| {
            let wrap = group.iter().any(|p| p.sequence >= WRAP_HIGH)
                && group.iter().any(|p| p.sequence <= WRAP_LOW);
            let extend = |seq: u16| -> u32 {
                if wrap && seq <= WRAP_LOW {
                    u32::from(seq) + 65536
                } else {
                    u32::from(seq)
                }
            };
            let mut ordered: BTreeMap<u32, RtpPacket> = BTreeMap::new();
            let mut duplicates = 0;
            for p in group {
                let key = extend(p.sequence);
                if ordered.contains_key(&key) {
                    duplicates += 1;
                } else {
                    ordered.insert(key, p);
                }
            }
            let mut gaps = Vec::new();
            if let (Some(&lo), Some(&hi)) = (
                ordered.keys().next(),
                ordered.keys().next_back(),
            ) {
                for seq in lo..=hi {
                    if !ordered.contains_key(&seq) {
                        gaps.push((seq % 65536) as u16);
                    }
                }
            }
            SsrcStream {
                ssrc,
                packets: ordered.into_values().collect(),
                duplicates,
                gaps,
            }
        })
        .collect()
}

/// Sequence-ordered decoded audio for one source.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaStream {
    pub ssrc: u32,
    pub sample_rate: u32,
    pub samples: Vec<f64>,
    /// Sample index at which each packet's payload begins.
    pub boundaries: Vec<usize>,
}

impl MediaStream {
    pub fn empty() -> Self {
        MediaStream {
            ssrc: 0,
            sample_rate: SAMPLE_RATE,
            samples: Vec::new(),
            boundaries: Vec::new(),
        }
    }

    pub fn packet_count(&self) -> usize {
        self.boundaries.len()
    }
}

/// Concatenate decoded payloads of sequence-ordered packets sharing one SSRC.
/// Payload type 0 decodes as µ-law, 8 as A-law.
pub fn stream_from(packets: &[RtpPacket]) -> Result<MediaStream> {
    let Some(first) = packets.first() else {
        return Ok(MediaStream::empty());
    };
    let decode: fn(&[u8]) -> Vec<f64> = match first.payload_type {
        PAYLOAD_TYPE_ULAW => g711::decode_ulaw_payload,
        PAYLOAD_TYPE_ALAW => g711::decode_alaw_payload,
        pt => return Err(Error::UnsupportedPayloadType { pt }),
    };
    let mut samples = Vec::new();
    let mut boundaries = Vec::with_capacity(packets.len());
    for p in packets {
        if p.payload_type != first.payload_type {
            return Err(Error::UnsupportedPayloadType {
                pt: p.payload_type,
            });
        }
        boundaries.push(samples.len());
        samples.extend(decode(&p.payload));
    }
    Ok(MediaStream {
        ssrc: first.ssrc,
        sample_rate: SAMPLE_RATE,
        samples,
        boundaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(seq: u16, ssrc: u32, payload: &[u8]) -> RtpPacket {
        RtpPacket {
            version: 2,
            marker: false,
            payload_type: PAYLOAD_TYPE_ULAW,
            sequence: seq,
            timestamp: u32::from(seq) * 160,
            ssrc,
            payload: payload.to_vec(),
        }
    }

    #[test]
    fn parses_minimal_header() {
        let bytes = [0x80, 0x00, 0x00, 0x07, 0, 0, 0, 0, 0, 0, 0, 1];
        let p = parse_rtp(&bytes).unwrap();
        assert_eq!(p.sequence, 7);
        assert_eq!(p.payload_type, 0);
        assert!(p.payload.is_empty());
    }

    #[test]
    fn rejects_wrong_version() {
        let mut bytes = [0u8; 12];
        bytes[0] = 0x00;
        assert!(matches!(
            parse_rtp(&bytes),
            Err(Error::RtpBadVersion { version: 0 })
        ));
    }

    #[test]
    fn rejects_short_packet() {
        assert!(matches!(
            parse_rtp(&[0x80; 5]),
            Err(Error::RtpTooShort { len: 5 })
        ));
    }

    #[test]
    fn csrc_shrinks_payload() {
        let mut bytes = vec![0u8; 20];
        bytes[0] = 0x81; // version 2, one CSRC
        let p = parse_rtp(&bytes).unwrap();
        assert_eq!(p.payload.len(), 4);
    }

    #[test]
    fn padding_and_overrun() {
        let mut bytes = vec![0u8; 16];
        bytes[0] = 0xA0; // padding set
        bytes[15] = 2;
        let p = parse_rtp(&bytes).unwrap();
        assert_eq!(p.payload.len(), 2);

        bytes[15] = 200; // pad count past the header
        assert!(matches!(parse_rtp(&bytes), Err(Error::RtpHeaderOverrun)));
    }

    #[test]
    fn render_parse_round_trip() {
        let p = packet(42, 7, &[0xFF, 0x7F, 0x00]);
        assert_eq!(parse_rtp(&render_rtp(&p)).unwrap(), p);
    }

    #[test]
    fn reassemble_sorts() {
        let out = reassemble(vec![packet(3, 1, b"c"), packet(1, 1, b"a"), packet(2, 1, b"b")]);
        assert_eq!(out.len(), 1);
        let seqs: Vec<u16> = out[0].packets.iter().map(|p| p.sequence).collect();
        assert_eq!(seqs, [1, 2, 3]);
        assert!(out[0].gaps.is_empty());
    }

    #[test]
    fn reassemble_handles_wraparound() {
        let out = reassemble(vec![
            packet(0, 1, b""),
            packet(65534, 1, b""),
            packet(1, 1, b""),
            packet(65535, 1, b""),
        ]);
        let seqs: Vec<u16> = out[0].packets.iter().map(|p| p.sequence).collect();
        assert_eq!(seqs, [65534, 65535, 0, 1]);
    }

    #[test]
    fn reassemble_keeps_first_duplicate() {
        let out = reassemble(vec![packet(5, 1, b"first"), packet(5, 1, b"second")]);
        assert_eq!(out[0].packets.len(), 1);
        assert_eq!(out[0].packets[0].payload, b"first");
        assert_eq!(out[0].duplicates, 1);
    }

    #[test]
    fn reassemble_records_gaps() {
        let out = reassemble(vec![packet(10, 1, b""), packet(13, 1, b"")]);
        assert_eq!(out[0].gaps, [11, 12]);
    }

    #[test]
    fn stream_concatenates_payloads() {
        let a = packet(1, 9, &[0xFF; 160]);
        let b = packet(2, 9, &[0xFF; 160]);
        let s = stream_from(&[a, b]).unwrap();
        assert_eq!(s.samples.len(), 320);
        assert_eq!(s.boundaries, [0, 160]);
        assert!(s.samples.iter().all(|&x| x == 0.0));
        assert_eq!(s.ssrc, 9);
    }

    #[test]
    fn stream_rejects_unknown_payload_type() {
        let mut p = packet(1, 9, &[0u8; 4]);
        p.payload_type = 99;
        assert!(matches!(
            stream_from(&[p]),
            Err(Error::UnsupportedPayloadType { pt: 99 })
        ));
    }
}
