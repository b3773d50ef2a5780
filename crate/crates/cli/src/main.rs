//! `spitgate` — offline SIP/RTP spam-call screening.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use spitgate_core::capture::{self, DEFAULT_SIP_PORT};
use spitgate_core::media::{calibration_scale, FailMode, PrototypeTable};
use spitgate_core::pipeline::{self, AnalyzeOptions};
use spitgate_core::signaling::Combination;
use spitgate_core::spam_db::{MatchKind, PatternStore, SpamPattern, TargetField};
use spitgate_core::synth::{self, ProfileKind};
use spitgate_core::{features, FrameSpec};

#[derive(Parser)]
#[command(name = "spitgate", version, about = "Two-layer SIP/RTP spam-call detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DbArg {
    /// Pattern database file.
    #[arg(long, env = "SPITGATE_DB")]
    db: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Capture file to analyze.
    #[arg(long)]
    capture: PathBuf,
    #[command(flatten)]
    db: DbArg,
    /// Prototype table file.
    #[arg(long)]
    prototypes: PathBuf,
    /// How signaling field matches combine into a decision.
    #[arg(long, default_value = "any", value_parser = parse_combination)]
    combination: Combination,
    /// Reject calls that carry too little media to judge.
    #[arg(long)]
    fail_closed: bool,
    /// Analyze calls in parallel with this many workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// UDP port carrying SIP signaling.
    #[arg(long, default_value_t = DEFAULT_SIP_PORT)]
    sip_port: u16,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every call in a capture file.
    Analyze(AnalyzeArgs),
    /// Generate a labeled corpus of synthetic calls.
    Synth {
        /// Output directory for the pcaps and manifest.
        #[arg(long)]
        out: PathBuf,
        /// Profile spec file, one `kind|seed|duration|params...` per line.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Manage the spam pattern database.
    Db {
        #[command(subcommand)]
        action: DbAction,
    },
    /// Time the two layers over a corpus directory.
    Bench {
        /// Directory of capture files.
        #[arg(long)]
        corpus: PathBuf,
        /// Repetitions (at least 3).
        #[arg(long)]
        reps: u32,
        #[command(flatten)]
        db: DbArg,
        #[arg(long)]
        prototypes: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIP_PORT)]
        sip_port: u16,
    },
    /// Dump per-call feature vectors from a capture.
    Features {
        #[arg(long)]
        capture: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIP_PORT)]
        sip_port: u16,
    },
    /// Compute (and optionally store) the calibration scale from a labeled
    /// synth corpus.
    Calibrate {
        /// Corpus directory containing a manifest.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        prototypes: PathBuf,
        /// Write the scale back into the prototype file.
        #[arg(long)]
        write: bool,
        #[arg(long, default_value_t = DEFAULT_SIP_PORT)]
        sip_port: u16,
    },
}

#[derive(Subcommand)]
enum DbAction {
    /// Add a pattern: field kind pattern.
    Add {
        #[command(flatten)]
        db: DbArg,
        field: String,
        kind: String,
        pattern: String,
    },
    /// Remove a pattern: field kind pattern.
    Remove {
        #[command(flatten)]
        db: DbArg,
        field: String,
        kind: String,
        pattern: String,
    },
    /// List the stored patterns.
    List {
        #[command(flatten)]
        db: DbArg,
    },
}

fn parse_combination(s: &str) -> Result<Combination, String> {
    s.parse().map_err(|()| format!("expected any|all, got {s:?}"))
}

fn parse_field(s: &str) -> anyhow::Result<TargetField> {
    s.parse()
        .map_err(|()| anyhow::anyhow!("unknown field {s:?}"))
}

fn parse_kind(s: &str) -> anyhow::Result<MatchKind> {
    s.parse()
        .map_err(|()| anyhow::anyhow!("unknown match kind {s:?}"))
}

fn corpus_paths(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pcap"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn run_analyze(args: AnalyzeArgs) -> anyhow::Result<u8> {
    let store = PatternStore::load(&args.db.db)?;
    let table = PrototypeTable::load(&args.prototypes)?;
    let opts = AnalyzeOptions {
        combination: args.combination,
        fail_mode: if args.fail_closed {
            FailMode::Closed
        } else {
            FailMode::Open
        },
        sip_port: args.sip_port,
        jobs: args.jobs.max(1),
        ..AnalyzeOptions::default()
    };
    let report = pipeline::analyze_capture(&args.capture, &store, &table, &opts)?;
    print!("{}", pipeline::render_report(&report));
    Ok(if report.spam_count > 0 { 3 } else { 0 })
}

fn run_db(action: DbAction) -> anyhow::Result<u8> {
    match action {
        DbAction::Add {
            db,
            field,
            kind,
            pattern,
        } => {
            let mut store = PatternStore::load(&db.db)?;
            store.add(SpamPattern::new(
                parse_field(&field)?,
                parse_kind(&kind)?,
                &pattern,
            ))?;
            eprintln!("added; store now holds {} patterns", store.len());
        }
        DbAction::Remove {
            db,
            field,
            kind,
            pattern,
        } => {
            let mut store = PatternStore::load(&db.db)?;
            store.remove(&SpamPattern::new(
                parse_field(&field)?,
                parse_kind(&kind)?,
                &pattern,
            ))?;
            eprintln!("removed; store now holds {} patterns", store.len());
        }
        DbAction::List { db } => {
            let store = PatternStore::load(&db.db)?;
            for p in store.patterns() {
                println!("{}|{}|{}", p.field, p.kind, p.pattern);
            }
        }
    }
    Ok(0)
}

fn run_features(capture_path: &Path, sip_port: u16) -> anyhow::Result<u8> {
    let read = capture::read_capture(capture_path)?;
    let grouped = capture::group_calls(&read.datagrams, sip_port);
    let spec = FrameSpec::default();
    for call in &grouped.calls {
        let (stream, _) = pipeline::decode_media(call);
        if stream.samples.len() < spec.frame_len {
            eprintln!("{}: insufficient media", call.call_id);
            continue;
        }
        let fv = features::feature_vector(&stream.samples, &spec, 1.0)?;
        let stats = features::silence_stats(&stream.samples, &spec)?;
        println!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            call.call_id,
            fv.zcr,
            fv.abs_mean,
            fv.energy,
            fv.entropy,
            stats.silence_fraction,
            stats.longest_silent_run,
            stats.longest_voiced_run,
        );
    }
    Ok(0)
}

fn run_calibrate(corpus: &Path, prototypes: &Path, write: bool, sip_port: u16) -> anyhow::Result<u8> {
    let mut table = PrototypeTable::load(prototypes)?;
    let manifest = synth::read_manifest(&corpus.join(synth::MANIFEST_FILE))?;
    let mut measured = Vec::new();
    for entry in manifest.iter().filter(|e| e.kind == ProfileKind::Genuine) {
        let read = capture::read_capture(&entry.path)?;
        let grouped = capture::group_calls(&read.datagrams, sip_port);
        for call in &grouped.calls {
            let (stream, _) = pipeline::decode_media(call);
            if !stream.samples.is_empty() {
                measured.push(features::absolute_mean(&stream.samples, 1.0)?);
            }
        }
    }
    let scale = calibration_scale(&table, &measured)?;
    println!("scale|{scale}");
    if write {
        table.scale = scale;
        table.save(prototypes)?;
        eprintln!("wrote scale into {}", prototypes.display());
    }
    Ok(0)
}

fn run_bench(
    corpus: &Path,
    reps: u32,
    db: &Path,
    prototypes: &Path,
    sip_port: u16,
) -> anyhow::Result<u8> {
    let store = PatternStore::load(db)?;
    let table = PrototypeTable::load(prototypes)?;
    let opts = AnalyzeOptions {
        sip_port,
        ..AnalyzeOptions::default()
    };
    let paths = corpus_paths(corpus)?;
    let report = pipeline::benchmark(&paths, &store, &table, &opts, reps)?;
    println!(
        "calls {}\treps {}",
        report.calls_per_rep, report.repetitions
    );
    println!(
        "layer1_ms mean {:.4}\tstd {:.4}",
        report.layer1_mean.as_secs_f64() * 1e3,
        report.layer1_std.as_secs_f64() * 1e3
    );
    match (report.mean_layer2, report.layer2_std) {
        (Some(mean), Some(std)) => println!(
            "layer2_ms mean {:.4}\tstd {:.4}",
            mean.as_secs_f64() * 1e3,
            std.as_secs_f64() * 1e3
        ),
        _ => println!("layer2_ms mean -\tstd -"),
    }
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Synth { out, spec } => {
            let profiles = synth::load_profile_spec(&spec)?;
            let paths = synth::synth_corpus(&profiles, &out)?;
            eprintln!("wrote {} captures to {}", paths.len(), out.display());
            Ok(0)
        }
        Command::Db { action } => run_db(action),
        Command::Bench {
            corpus,
            reps,
            db,
            prototypes,
            sip_port,
        } => run_bench(&corpus, reps, &db.db, &prototypes, sip_port),
        Command::Features { capture, sip_port } => run_features(&capture, sip_port),
        Command::Calibrate {
            corpus,
            prototypes,
            write,
            sip_port,
        } => run_calibrate(&corpus, &prototypes, write, sip_port),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
