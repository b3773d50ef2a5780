//! Classic pcap reading/writing and grouping of UDP datagrams into calls.
//!
//! Exactly one capture flavor is supported: classic pcap (microsecond
//! timestamps, either endianness), Ethernet link type, IPv4, UDP. Anything
//! else in a file is skipped and counted, never fatal.

use std::collections::HashMap;
use std::net::Ipv4Addr;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sip;

pub const PCAP_MAGIC: u32 = 0xA1B2_C3D4;
pub const DEFAULT_SIP_PORT: u16 = 5060;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp {
    pub sec: u32,
    pub usec: u32,
}

impl Timestamp {
    pub fn new(sec: u32, usec: u32) -> Self {
        Timestamp { sec, usec }
    }

    pub fn as_secs_f64(&self) -> f64 {
        f64::from(self.sec) + f64::from(self.usec) * 1e-6
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub ip: Ipv4Addr,
    pub port: u16,
}

impl Endpoint {
    pub fn new(ip: Ipv4Addr, port: u16) -> Self {
        Endpoint { ip, port }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.ip, self.port)
    }
}

/// One captured UDP datagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub timestamp: Timestamp,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub payload: Vec<u8>,
}

/// All UDP datagrams of a file plus the count of frames that were not
/// UDP-over-IPv4-over-Ethernet.
#[derive(Debug, Clone)]
pub struct ReadResult {
    pub datagrams: Vec<Datagram>,
    pub skipped: u64,
}

const ETH_LEN: usize = 14;
const IP_LEN: usize = 20;
const UDP_LEN: usize = 8;

/// Fixed per-datagram overhead in a written file: record header + frame headers.
pub const RECORD_OVERHEAD: usize = 16 + ETH_LEN + IP_LEN + UDP_LEN;

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

fn rd_u32(buf: &[u8], e: Endian) -> u32 {
    let b: [u8; 4] = buf[..4].try_into().unwrap();
    match e {
        Endian::Little => u32::from_le_bytes(b),
        Endian::Big => u32::from_be_bytes(b),
    }
}

pub fn read_capture(path: &Path) -> Result<ReadResult> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_capture_bytes(&bytes)
}

pub fn read_capture_bytes(bytes: &[u8]) -> Result<ReadResult> {
    if bytes.len() < 4 {
        return Err(Error::BadMagic {
            magic: bytes
                .iter()
                .enumerate()
                .fold(0u32, |m, (i, &b)| m | u32::from(b) << (8 * i)),
        });
    }
    let raw = u32::from_le_bytes(bytes[..4].try_into().unwrap());
    let endian = if raw == PCAP_MAGIC {
        Endian::Little
    } else if raw.swap_bytes() == PCAP_MAGIC {
        Endian::Big
    } else {
        return Err(Error::BadMagic { magic: raw });
    };
    if bytes.len() < 24 {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
        });
    }

    let mut datagrams = Vec::new();
    let mut skipped = 0u64;
    let mut offset = 24usize;
    while offset < bytes.len() {
        if bytes.len() - offset < 16 {
            return Err(Error::Truncated {
                offset: offset as u64,
            });
        }
        let ts_sec = rd_u32(&bytes[offset..], endian);
        let ts_usec = rd_u32(&bytes[offset + 4..], endian);
        let incl_len = rd_u32(&bytes[offset + 8..], endian) as usize;
        offset += 16;
        if bytes.len() - offset < incl_len {
            return Err(Error::Truncated {
                offset: offset as u64,
            });
        }
        let frame = &bytes[offset..offset + incl_len];
        offset += incl_len;
        match decode_frame(frame) {
            Some((src, dst, payload)) => datagrams.push(Datagram {
                timestamp: Timestamp::new(ts_sec, ts_usec),
                src,
                dst,
                payload,
            }),
            None => skipped += 1,
        }
    }
    Ok(ReadResult { datagrams, skipped })
}

/// Ethernet + IPv4 + UDP; anything else yields None.
fn decode_frame(frame: &[u8]) -> Option<(Endpoint, Endpoint, Vec<u8>)> {
    if frame.len() < ETH_LEN + IP_LEN {
        return None;
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != 0x0800 {
        return None;
    }
    let ip = &frame[ETH_LEN..];
    if ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(ip[0] & 0x0F) * 4;
    if ihl < IP_LEN || ip.len() < ihl + UDP_LEN {
        return None;
    }
    let flags_frag = u16::from_be_bytes([ip[6], ip[7]]);
    if flags_frag & 0x3FFF != 0 {
        // fragmented (more-fragments bit or nonzero offset)
        return None;
    }
    if ip[9] != 17 {
        return None;
    }
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let udp = &ip[ihl..];
    let src_port = u16::from_be_bytes([udp[0], udp[1]]);
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    let udp_len = usize::from(u16::from_be_bytes([udp[4], udp[5]]));
    if udp_len < UDP_LEN {
        return None;
    }
    let payload_len = (udp_len - UDP_LEN).min(udp.len().saturating_sub(UDP_LEN));
    let payload = udp[UDP_LEN..UDP_LEN + payload_len].to_vec();
    Some((
        Endpoint::new(src_ip, src_port),
        Endpoint::new(dst_ip, dst_port),
        payload,
    ))
}

fn ip_checksum(header: &[u8]) -> u16 {
    let mut sum = 0u32;
    for chunk in header.chunks(2) {
        let word = u32::from(chunk[0]) << 8 | u32::from(*chunk.get(1).unwrap_or(&0));
        sum += word;
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

fn mac_for(ip: Ipv4Addr) -> [u8; 6] {
    let o = ip.octets();
    [0x02, 0x00, o[0], o[1], o[2], o[3]]
}

pub fn encode_capture(datagrams: &[Datagram]) -> Result<Vec<u8>> {
    for (i, pair) in datagrams.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(Error::DecreasingTimestamps { index: i + 1 });
        }
    }
    let mut out = Vec::with_capacity(24 + datagrams.iter().map(|d| RECORD_OVERHEAD + d.payload.len()).sum::<usize>());
    out.extend_from_slice(&PCAP_MAGIC.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // version major
    out.extend_from_slice(&4u16.to_le_bytes()); // version minor
    out.extend_from_slice(&0u32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&65535u32.to_le_bytes()); // snaplen
    out.extend_from_slice(&1u32.to_le_bytes()); // linktype: Ethernet

    for d in datagrams {
        let frame_len = ETH_LEN + IP_LEN + UDP_LEN + d.payload.len();
        out.extend_from_slice(&d.timestamp.sec.to_le_bytes());
        out.extend_from_slice(&d.timestamp.usec.to_le_bytes());
        out.extend_from_slice(&(frame_len as u32).to_le_bytes());
        out.extend_from_slice(&(frame_len as u32).to_le_bytes());

        out.extend_from_slice(&mac_for(d.dst.ip));
        out.extend_from_slice(&mac_for(d.src.ip));
        out.extend_from_slice(&0x0800u16.to_be_bytes());

        let total = (IP_LEN + UDP_LEN + d.payload.len()) as u16;
        let mut ip = [0u8; IP_LEN];
        ip[0] = 0x45;
        ip[2..4].copy_from_slice(&total.to_be_bytes());
        ip[8] = 64; // ttl
        ip[9] = 17; // udp
        ip[12..16].copy_from_slice(&d.src.ip.octets());
        ip[16..20].copy_from_slice(&d.dst.ip.octets());
        let csum = ip_checksum(&ip);
        ip[10..12].copy_from_slice(&csum.to_be_bytes());
        out.extend_from_slice(&ip);

        out.extend_from_slice(&d.src.port.to_be_bytes());
        out.extend_from_slice(&d.dst.port.to_be_bytes());
        out.extend_from_slice(&((UDP_LEN + d.payload.len()) as u16).to_be_bytes());
        out.extend_from_slice(&0u16.to_be_bytes()); // udp checksum optional over ipv4
        out.extend_from_slice(&d.payload);
    }
    Ok(out)
}

pub fn write_capture(datagrams: &[Datagram], path: &Path) -> Result<()> {
    let bytes = encode_capture(datagrams)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// One call's captured signaling and media.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallCapture {
    pub call_id: String,
    pub sip: Vec<Datagram>,
    pub rtp: Vec<Datagram>,
}

#[derive(Debug, Clone)]
pub struct GroupResult {
    pub calls: Vec<CallCapture>,
    pub orphans: u64,
}

type HostPair = (Ipv4Addr, Ipv4Addr);

fn host_pair(a: Ipv4Addr, b: Ipv4Addr) -> HostPair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Group a datagram stream into per-call captures.
///
/// SIP-port datagrams are parsed for their Call-ID; INVITE bodies provide
/// the advertised media ports. RTP datagrams match a call by advertised
/// port, or fall back to the call (if unambiguous) between the same two
/// hosts when both ports are even.
pub fn group_calls(datagrams: &[Datagram], sip_port: u16) -> GroupResult {
    let mut calls: Vec<CallCapture> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut by_media_port: HashMap<u16, usize> = HashMap::new();
    // None marks a host pair shared by more than one call
    let mut by_hosts: HashMap<HostPair, Option<usize>> = HashMap::new();
    let mut orphans = 0u64;

    let is_sip = |d: &Datagram| d.src.port == sip_port || d.dst.port == sip_port;

    for d in datagrams.iter().filter(|d| is_sip(d)) {
        let Ok(msg) = sip::parse_message(&d.payload) else {
            orphans += 1;
            continue;
        };
        let Some(call_id) = msg.header("Call-ID").filter(|v| !v.is_empty()) else {
            orphans += 1;
            continue;
        };
        let idx = *by_id.entry(call_id.to_string()).or_insert_with(|| {
            calls.push(CallCapture {
                call_id: call_id.to_string(),
                sip: Vec::new(),
                rtp: Vec::new(),
            });
            calls.len() - 1
        });
        calls[idx].sip.push(d.clone());
        if msg.is_request("INVITE") {
            if let Some(port) = sip::media_port_from_body(&msg.body) {
                by_media_port.insert(port, idx);
            }
            by_hosts
                .entry(host_pair(d.src.ip, d.dst.ip))
                .and_modify(|slot| {
                    if *slot != Some(idx) {
                        *slot = None;
                    }
                })
                .or_insert(Some(idx));
        }
    }

    for d in datagrams.iter().filter(|d| !is_sip(d)) {
        let direct = by_media_port
            .get(&d.src.port)
            .or_else(|| by_media_port.get(&d.dst.port))
            .copied();
        let idx = direct.or_else(|| {
            if d.src.port % 2 == 0 && d.dst.port % 2 == 0 {
                by_hosts.get(&host_pair(d.src.ip, d.dst.ip)).copied().flatten()
            } else {
                None
            }
        });
        match idx {
            Some(i) => calls[i].rtp.push(d.clone()),
            None => orphans += 1,
        }
    }

    GroupResult { calls, orphans }
}
