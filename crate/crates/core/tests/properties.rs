//! Randomized invariant checks.

use std::net::Ipv4Addr;

use proptest::prelude::*;

use spitgate_core::capture::{self, Datagram, Endpoint, Timestamp};
use spitgate_core::rtp::{reassemble, RtpPacket};
use spitgate_core::sip::parse_uri;
use spitgate_core::spam_db::normalize;

proptest! {
    #[test]
    fn normalize_is_idempotent(text in ".{0,80}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn spaced_word_folds_to_word(word in "[a-z]{3,12}") {
        // "dot" inside a word would legitimately fold to "."
        prop_assume!(!word.contains("dot"));
        let spaced: Vec<String> = word.chars().map(String::from).collect();
        prop_assert_eq!(normalize(&spaced.join(" ")), normalize(&word));
    }

    #[test]
    fn uri_render_parse_round_trip(
        user in "[a-z0-9]{0,10}",
        host in "[a-z0-9]{1,10}(\\.[a-z]{2,4}){0,2}",
    ) {
        let rendered = if user.is_empty() {
            format!("sip:{host}")
        } else {
            format!("sip:{user}@{host}")
        };
        let uri = parse_uri(&rendered).unwrap();
        prop_assert_eq!(&uri.user, &user);
        prop_assert_eq!(&uri.host, &host);
        prop_assert_eq!(uri.render(), rendered);
    }

    #[test]
    fn capture_round_trip(
        payloads in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..64), 0..12),
        base_sec in 1_000_000u32..2_000_000_000,
    ) {
        let datagrams: Vec<Datagram> = payloads
            .into_iter()
            .enumerate()
            .map(|(i, payload)| Datagram {
                timestamp: Timestamp::new(base_sec + i as u32, (i as u32 * 137) % 1_000_000),
                src: Endpoint::new(Ipv4Addr::new(10, 0, 0, 1), 5060),
                dst: Endpoint::new(Ipv4Addr::new(10, 0, 0, 2), 5060),
                payload,
            })
            .collect();
        let bytes = capture::encode_capture(&datagrams).unwrap();
        let read = capture::read_capture_bytes(&bytes).unwrap();
        prop_assert_eq!(read.skipped, 0);
        prop_assert_eq!(read.datagrams, datagrams);
    }

    #[test]
    fn reassemble_is_permutation_invariant(
        seqs in prop::collection::vec(any::<u16>(), 1..40),
        rotation in 0usize..40,
    ) {
        let mk = |seq: u16| RtpPacket {
            version: 2,
            marker: false,
            payload_type: 0,
            sequence: seq,
            timestamp: u32::from(seq) * 160,
            ssrc: 7,
            payload: vec![seq as u8; 4],
        };
        let mut dedup = seqs.clone();
        dedup.sort_unstable();
        dedup.dedup();
        let packets: Vec<RtpPacket> = dedup.iter().copied().map(mk).collect();
        let mut rotated = packets.clone();
        rotated.rotate_left(rotation % packets.len().max(1));

        let a = reassemble(packets);
        let b = reassemble(rotated);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.ssrc, y.ssrc);
            let xs: Vec<u16> = x.packets.iter().map(|p| p.sequence).collect();
            let ys: Vec<u16> = y.packets.iter().map(|p| p.sequence).collect();
            prop_assert_eq!(xs, ys);
            prop_assert_eq!(&x.gaps, &y.gaps);
        }
    }

    #[test]
    fn grouping_partitions_datagrams(n_calls in 1usize..5, per_call in 1usize..6) {
        // synthetic SIP INVITEs plus matching RTP on the advertised ports
        let mut datagrams = Vec::new();
        for c in 0..n_calls {
            let media_port = 40000 + (c as u16) * 4;
            let body = format!("v=0\r\nm=audio {media_port} RTP/AVP 0\r\n");
            let invite = format!(
                "INVITE sip:bob@example.org SIP/2.0\r\nFrom: <sip:caller{c}@example.org>\r\nCall-ID: call-{c}@example.org\r\nContent-Length: {}\r\n\r\n{body}",
                body.len()
            );
            datagrams.push(Datagram {
                timestamp: Timestamp::new(100 + c as u32, 0),
                src: Endpoint::new(Ipv4Addr::new(10, 0, c as u8, 1), 5060),
                dst: Endpoint::new(Ipv4Addr::new(10, 0, 99, 1), 5060),
                payload: invite.into_bytes(),
            });
            for p in 0..per_call {
                let pkt = RtpPacket {
                    version: 2,
                    marker: p == 0,
                    payload_type: 0,
                    sequence: p as u16,
                    timestamp: p as u32 * 160,
                    ssrc: c as u32 + 1,
                    payload: vec![0xFF; 160],
                };
                datagrams.push(Datagram {
                    timestamp: Timestamp::new(200 + c as u32, p as u32),
                    src: Endpoint::new(Ipv4Addr::new(10, 0, c as u8, 1), media_port),
                    dst: Endpoint::new(Ipv4Addr::new(10, 0, 99, 1), media_port),
                    payload: spitgate_core::rtp::render_rtp(&pkt),
                });
            }
        }
        let grouped = capture::group_calls(&datagrams, 5060);
        prop_assert_eq!(grouped.calls.len(), n_calls);
        let assigned: usize = grouped
            .calls
            .iter()
            .map(|call| call.sip.len() + call.rtp.len())
            .sum();
        prop_assert_eq!(assigned + grouped.orphans as usize, datagrams.len());
        for call in &grouped.calls {
            prop_assert_eq!(call.sip.len(), 1);
            prop_assert_eq!(call.rtp.len(), per_call);
        }
    }
}
