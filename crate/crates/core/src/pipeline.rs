//! The two-layer firewall: signaling first, media only for calls that pass.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::capture::{self, CallCapture, DEFAULT_SIP_PORT};
use crate::error::{Error, Result};
use crate::features::FrameSpec;
use crate::media::{self, FailMode, MediaRuleParams, PrototypeTable, SpamClass};
use crate::rtp;
use crate::signaling::{classify_signaling, Combination, Decision, LayerVerdict};
use crate::sip;

/// Per-call decision record.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub call_id: String,
    pub layer1: LayerVerdict,
    /// Absent when layer 1 already rejected the call.
    pub layer2: Option<LayerVerdict>,
    pub final_decision: SpamClass,
    /// How many RTP packets were decoded for this call; provably 0 for
    /// layer-1 rejects.
    pub decoded_rtp_packets: usize,
}

impl Verdict {
    pub fn reasons(&self) -> Vec<&str> {
        self.layer1
            .reasons
            .iter()
            .chain(self.layer2.iter().flat_map(|l| l.reasons.iter()))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub combination: Combination,
    pub fail_mode: FailMode,
    pub sip_port: u16,
    pub jobs: usize,
    pub frame_spec: FrameSpec,
    pub rule_params: MediaRuleParams,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            combination: Combination::Any,
            fail_mode: FailMode::Open,
            sip_port: DEFAULT_SIP_PORT,
            jobs: 1,
            frame_spec: FrameSpec::default(),
            rule_params: MediaRuleParams::default(),
        }
    }
}

fn first_invite(call: &CallCapture) -> Result<sip::SignalingRecord> {
    for d in &call.sip {
        let Ok(msg) = sip::parse_message(&d.payload) else {
            continue;
        };
        if msg.is_request("INVITE") {
            return sip::extract_invite(&msg, d.src.ip);
        }
    }
    Err(Error::NoInvite {
        call_id: call.call_id.clone(),
    })
}

/// Decode the call's media into the dominant source's stream.
/// Returns the stream and how many packets were decoded.
pub fn decode_media(call: &CallCapture) -> (rtp::MediaStream, usize) {
    let packets: Vec<rtp::RtpPacket> = call
        .rtp
        .iter()
        .filter_map(|d| rtp::parse_rtp(&d.payload).ok())
        .collect();
    let streams = rtp::reassemble(packets);
    let Some(best) = streams.iter().max_by_key(|s| s.packets.len()) else {
        return (rtp::MediaStream::empty(), 0);
    };
    let decoded = best.packets.len();
    match rtp::stream_from(&best.packets) {
        Ok(stream) => (stream, decoded),
        Err(_) => (rtp::MediaStream::empty(), 0),
    }
}

/// Run layer 1 on the call's first INVITE; on spam, reject with no media
/// decoding. Otherwise run layer 2 on the reassembled, decoded stream.
pub fn analyze_call(
    call: &CallCapture,
    store: &crate::spam_db::PatternStore,
    table: &PrototypeTable,
    opts: &AnalyzeOptions,
) -> Result<Verdict> {
    let record = first_invite(call)?;
    let layer1 = classify_signaling(&record, store, opts.combination);
    if layer1.decision == Decision::Spam {
        return Ok(Verdict {
            call_id: call.call_id.clone(),
            layer1,
            layer2: None,
            final_decision: SpamClass::Spam,
            decoded_rtp_packets: 0,
        });
    }

    let start = Instant::now();
    let (stream, decoded) = decode_media(call);
    let mut layer2 = media::classify_media(
        &stream,
        table,
        &opts.rule_params,
        &opts.frame_spec,
        opts.fail_mode,
    )?;
    // the layer-2 cost includes decoding, not just classification
    layer2.elapsed = start.elapsed();

    let final_decision = match layer2.decision {
        Decision::Spam => SpamClass::Spam,
        Decision::Pass => SpamClass::Genuine,
    };
    Ok(Verdict {
        call_id: call.call_id.clone(),
        layer1,
        layer2: Some(layer2),
        final_decision,
        decoded_rtp_packets: decoded,
    })
}

/// Aggregated outcome of one capture run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub verdicts: Vec<Verdict>,
    /// Calls without an INVITE.
    pub skipped: u64,
    /// UDP datagrams assignable to no call.
    pub orphans: u64,
    pub spam_count: usize,
    pub genuine_count: usize,
    pub mean_layer1: Duration,
    /// Over calls that reached layer 2 only.
    pub mean_layer2: Option<Duration>,
}

fn mean_duration(durations: &[Duration]) -> Option<Duration> {
    if durations.is_empty() {
        None
    } else {
        Some(durations.iter().sum::<Duration>() / durations.len() as u32)
    }
}

/// Analyze already-grouped calls; calls lacking an INVITE are skipped.
pub fn analyze_grouped(
    calls: &[CallCapture],
    store: &crate::spam_db::PatternStore,
    table: &PrototypeTable,
    opts: &AnalyzeOptions,
    orphans: u64,
) -> RunReport {
    let results: Vec<Result<Verdict>> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            calls
                .par_iter()
                .map(|c| analyze_call(c, store, table, opts))
                .collect()
        })
    } else {
        calls
            .iter()
            .map(|c| analyze_call(c, store, table, opts))
            .collect()
    };

    let mut verdicts = Vec::new();
    let mut skipped = 0u64;
    for r in results {
        match r {
            Ok(v) => verdicts.push(v),
            Err(_) => skipped += 1,
        }
    }
    verdicts.sort_by(|a, b| a.call_id.cmp(&b.call_id));

    let spam_count = verdicts
        .iter()
        .filter(|v| v.final_decision == SpamClass::Spam)
        .count();
    let layer1: Vec<Duration> = verdicts.iter().map(|v| v.layer1.elapsed).collect();
    let layer2: Vec<Duration> = verdicts
        .iter()
        .filter_map(|v| v.layer2.as_ref().map(|l| l.elapsed))
        .collect();
    RunReport {
        genuine_count: verdicts.len() - spam_count,
        spam_count,
        mean_layer1: mean_duration(&layer1).unwrap_or_default(),
        mean_layer2: mean_duration(&layer2),
        verdicts,
        skipped,
        orphans,
    }
}

/// Read a capture file, group its calls, and analyze each one.
pub fn analyze_capture(
    path: &Path,
    store: &crate::spam_db::PatternStore,
    table: &PrototypeTable,
    opts: &AnalyzeOptions,
) -> Result<RunReport> {
    let read = capture::read_capture(path)?;
    let grouped = capture::group_calls(&read.datagrams, opts.sip_port);
    Ok(analyze_grouped(&grouped.calls, store, table, opts, grouped.orphans))
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Tab-separated report: header, one line per call, aggregate block.
pub fn render_report(report: &RunReport) -> String {
    let mut out = String::from(
        "call_id\tfinal\tlayer1_decision\tlayer1_ms\tlayer2_decision\tlayer2_ms\treasons\n",
    );
    for v in &report.verdicts {
        let l1 = match v.layer1.decision {
            Decision::Spam => "spam",
            Decision::Pass => "pass",
        };
        let (l2, l2_ms) = match &v.layer2 {
            Some(l) => (
                match l.decision {
                    Decision::Spam => "spam".to_string(),
                    Decision::Pass => "pass".to_string(),
                },
                format!("{:.3}", ms(l.elapsed)),
            ),
            None => ("-".to_string(), "-".to_string()),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.3}\t{}\t{}\t{}\n",
            v.call_id,
            v.final_decision,
            l1,
            ms(v.layer1.elapsed),
            l2,
            l2_ms,
            v.reasons().join("; "),
        ));
    }
    out.push_str(&format!(
        "# calls {}\tspam {}\tgenuine {}\tskipped {}\torphans {}\n",
        report.verdicts.len(),
        report.spam_count,
        report.genuine_count,
        report.skipped,
        report.orphans,
    ));
    out.push_str(&format!(
        "# mean_layer1_ms {:.3}\tmean_layer2_ms {}\n",
        ms(report.mean_layer1),
        report
            .mean_layer2
            .map(|d| format!("{:.3}", ms(d)))
            .unwrap_or_else(|| "-".into()),
    ));
    out
}

/// Mean and standard deviation of per-layer elapsed times over a corpus.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub repetitions: u32,
    pub calls_per_rep: usize,
    pub layer1_mean: Duration,
    pub layer1_std: Duration,
    pub mean_layer2: Option<Duration>,
    pub layer2_std: Option<Duration>,
}

fn stats(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Time layer 1 and layer 2 across a corpus, `repetitions` times. Asserts
/// nothing itself; the caller interprets the numbers.
pub fn benchmark(
    corpus: &[std::path::PathBuf],
    store: &crate::spam_db::PatternStore,
    table: &PrototypeTable,
    opts: &AnalyzeOptions,
    repetitions: u32,
) -> Result<BenchReport> {
    if repetitions < 3 {
        return Err(Error::TooFewRepetitions { got: repetitions });
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // group once so the measurement excludes file I/O
    let mut calls = Vec::new();
    for path in corpus {
        let read = capture::read_capture(path)?;
        calls.extend(capture::group_calls(&read.datagrams, opts.sip_port).calls);
    }

    let mut layer1 = Vec::new();
    let mut layer2 = Vec::new();
    let mut calls_per_rep = 0;
    for _ in 0..repetitions {
        let report = analyze_grouped(&calls, store, table, opts, 0);
        calls_per_rep = report.verdicts.len();
        layer1.extend(report.verdicts.iter().map(|v| v.layer1.elapsed.as_secs_f64()));
        layer2.extend(
            report
                .verdicts
                .iter()
                .filter_map(|v| v.layer2.as_ref().map(|l| l.elapsed.as_secs_f64())),
        );
    }
    let (l1_mean, l1_std) = stats(&layer1);
    let l2 = if layer2.is_empty() {
        None
    } else {
        Some(stats(&layer2))
    };
    Ok(BenchReport {
        repetitions,
        calls_per_rep,
        layer1_mean: Duration::from_secs_f64(l1_mean),
        layer1_std: Duration::from_secs_f64(l1_std),
        mean_layer2: l2.map(|(m, _)| Duration::from_secs_f64(m)),
        layer2_std: l2.map(|(_, s)| Duration::from_secs_f64(s)),
    })
}
