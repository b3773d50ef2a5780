//! Shared fixtures for the criterion benchmarks.

use spitgate_core::media::{calibration_scale, PrototypeTable};
use spitgate_core::pipeline::decode_media;
use spitgate_core::synth::{synth_call, CallProfile, ProfileKind};
use spitgate_core::CallCapture;

/// One synthesized call per profile kind, seeds fixed.
pub fn sample_calls() -> Vec<CallCapture> {
    [
        ProfileKind::Genuine,
        ProfileKind::SpamSignaling,
        ProfileKind::SpamContinuous,
        ProfileKind::SpamSilent,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, kind)| synth_call(&CallProfile::new(kind, i as u64 + 1)))
    .collect()
}

/// Default table with the scale calibrated against a few genuine calls.
pub fn calibrated_table() -> PrototypeTable {
    let mut table = PrototypeTable::default_table();
    let measured: Vec<f64> = (1..=4)
        .map(|seed| {
            let call = synth_call(&CallProfile::new(ProfileKind::Genuine, seed));
            let (stream, _) = decode_media(&call);
            spitgate_core::features::absolute_mean(&stream.samples, 1.0).unwrap()
        })
        .collect();
    table.scale = calibration_scale(&table, &measured).unwrap();
    table
}
