//! Layer 2: nearest-prototype classification on the stream's absolute mean,
//! plus silence-run rules.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::features::{self, FrameSpec};
use crate::rtp::MediaStream;
use crate::signaling::{Decision, LayerVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpamClass {
    Genuine,
    Spam,
}

impl SpamClass {
    pub fn name(&self) -> &'static str {
        match self {
            SpamClass::Genuine => "genuine",
            SpamClass::Spam => "spam",
        }
    }
}

impl std::fmt::Display for SpamClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SpamClass {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "genuine" => Ok(SpamClass::Genuine),
            "spam" => Ok(SpamClass::Spam),
            _ => Err(()),
        }
    }
}

/// Labeled reference absolute means, with the scale mapping measured means
/// into prototype space.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeTable {
    pub entries: Vec<(SpamClass, f64)>,
    pub scale: f64,
}

/// The default reference values: four genuine and four spam sample means.
pub const DEFAULT_GENUINE_PROTOTYPES: [f64; 4] = [4.078, 5.613, 6.446, 2.599];
pub const DEFAULT_SPAM_PROTOTYPES: [f64; 4] = [0.195, 0.112, 0.181, 18.174];

impl PrototypeTable {
    pub fn default_table() -> Self {
        let mut entries = Vec::with_capacity(8);
        entries.extend(DEFAULT_GENUINE_PROTOTYPES.iter().map(|&m| (SpamClass::Genuine, m)));
        entries.extend(DEFAULT_SPAM_PROTOTYPES.iter().map(|&m| (SpamClass::Spam, m)));
        PrototypeTable {
            entries,
            scale: 1.0,
        }
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let has = |class| self.entries.iter().any(|&(c, _)| c == class);
        if !has(SpamClass::Genuine) || !has(SpamClass::Spam) {
            return Err(Error::PrototypeFile {
                path: path.to_path_buf(),
                reason: "need at least one entry per class".into(),
            });
        }
        if self.entries.iter().any(|&(_, m)| m < 0.0) || self.scale <= 0.0 {
            return Err(Error::PrototypeFile {
                path: path.to_path_buf(),
                reason: "means must be >= 0 and scale > 0".into(),
            });
        }
        Ok(())
    }

    /// Lines "class|absolute_mean"; an optional "scale|<real>" line sets the
    /// calibration scale.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = PrototypeTable {
            entries: Vec::new(),
            scale: 1.0,
        };
        let bad = |line: usize, reason: String| Error::PrototypeFile {
            path: path.to_path_buf(),
            reason: format!("line {line}: {reason}"),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '|');
            let (Some(key), Some(value)) = (parts.next(), parts.next()) else {
                return Err(bad(i + 1, format!("expected class|mean, got {line:?}")));
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(i + 1, format!("bad number {value:?}")))?;
            if key == "scale" {
                table.scale = value;
            } else {
                let class: SpamClass = key
                    .parse()
                    .map_err(|()| bad(i + 1, format!("unknown class {key:?}")))?;
                table.entries.push((class, value));
            }
        }
        table.validate(path)?;
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::from("# spitgate prototype table: class|absolute_mean\n");
        text.push_str(&format!("scale|{}\n", self.scale));
        for (class, mean) in &self.entries {
            text.push_str(&format!("{class}|{mean}\n"));
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    fn mean_of(&self, class: SpamClass) -> Option<f64> {
        let values: Vec<f64> = self
            .entries
            .iter()
            .filter(|&&(c, _)| c == class)
            .map(|&(_, m)| m)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnResult {
    pub class: SpamClass,
    pub prototype: f64,
    pub distance: f64,
}

/// 1-nearest-neighbor under absolute difference. An exact tie across classes
/// resolves to genuine.
pub fn nn_classify(abs_mean: f64, table: &PrototypeTable) -> Result<NnResult> {
    let mut best: Option<NnResult> = None;
    for &(class, prototype) in &table.entries {
        let distance = (abs_mean - prototype).abs();
        let better = match &best {
            None => true,
            Some(b) => {
                distance < b.distance
                    || (distance == b.distance
                        && class == SpamClass::Genuine
                        && b.class == SpamClass::Spam)
            }
        };
        if better {
            best = Some(NnResult {
                class,
                prototype,
                distance,
            });
        }
    }
    best.ok_or(Error::BadPrototypeTable)
}

/// Silence-rule thresholds, in frames of the active `FrameSpec`.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaRuleParams {
    /// Below this many packets the silence rules stay out of the decision.
    pub min_packets: usize,
    /// Spam when the longest voiced run reaches this and no frame is silent.
    pub no_silence_min_voiced: usize,
    /// Spam when the longest silent run reaches this.
    pub long_silence_min: usize,
}

impl Default for MediaRuleParams {
    fn default() -> Self {
        MediaRuleParams {
            min_packets: 50,
            no_silence_min_voiced: 100, // 3 s of 30 ms frames
            long_silence_min: 200,      // 6 s
        }
    }
}

/// What to do when there is not enough media to judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailMode {
    /// Pass the call (default): lack of evidence is not spam.
    #[default]
    Open,
    Closed,
}

/// Classify a decoded stream. Spam iff a silence rule fires or the nearest
/// prototype is a spam one; reasons list everything that fired.
pub fn classify_media(
    stream: &MediaStream,
    table: &PrototypeTable,
    params: &MediaRuleParams,
    spec: &FrameSpec,
    fail_mode: FailMode,
) -> Result<LayerVerdict> {
    let start = Instant::now();
    if stream.samples.len() < spec.frame_len {
        let decision = match fail_mode {
            FailMode::Open => Decision::Pass,
            FailMode::Closed => Decision::Spam,
        };
        return Ok(LayerVerdict {
            decision,
            reasons: vec!["insufficient media".to_string()],
            elapsed: start.elapsed(),
        });
    }

    let abs_mean = features::absolute_mean(&stream.samples, table.scale)?;
    let nn = nn_classify(abs_mean, table)?;
    let stats = features::silence_stats(&stream.samples, spec)?;

    let mut reasons = Vec::new();
    let mut rule_spam = false;
    if stream.packet_count() >= params.min_packets {
        if stats.longest_silent_run == 0
            && stats.longest_voiced_run >= params.no_silence_min_voiced
        {
            rule_spam = true;
            reasons.push(format!(
                "no-silence rule: {} voiced frames, none silent",
                stats.longest_voiced_run
            ));
        }
        if stats.longest_silent_run >= params.long_silence_min {
            rule_spam = true;
            reasons.push(format!(
                "long-silence rule: {} consecutive silent frames",
                stats.longest_silent_run
            ));
        }
    }
    reasons.push(format!(
        "nearest prototype {:.3} ({}) at distance {:.3} from scaled mean {:.3}",
        nn.prototype, nn.class, nn.distance, abs_mean
    ));

    let spam = rule_spam || nn.class == SpamClass::Spam;
    Ok(LayerVerdict {
        decision: if spam { Decision::Spam } else { Decision::Pass },
        reasons,
        elapsed: start.elapsed(),
    })
}

/// Scale that maps measured genuine means onto the prototype genuine band:
/// mean(genuine prototypes) / mean(measured genuine means).
pub fn calibration_scale(table: &PrototypeTable, measured_genuine: &[f64]) -> Result<f64> {
    if measured_genuine.is_empty() {
        return Err(Error::NoCalibrationInput);
    }
    let measured = measured_genuine.iter().sum::<f64>() / measured_genuine.len() as f64;
    if measured <= 0.0 {
        return Err(Error::NoCalibrationInput);
    }
    let target = table
        .mean_of(SpamClass::Genuine)
        .ok_or(Error::BadPrototypeTable)?;
    Ok(target / measured)
}

/// Default prototype file location relative to the repository root.
pub fn default_table_path() -> PathBuf {
    PathBuf::from("data/prototypes.txt")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototypes_classify_themselves() {
        let table = PrototypeTable::default_table();
        for &(class, mean) in &table.entries {
            let nn = nn_classify(mean, &table).unwrap();
            assert_eq!(nn.class, class);
            assert_eq!(nn.distance, 0.0);
        }
    }

    #[test]
    fn boundary_values() {
        let table = PrototypeTable::default_table();
        assert_eq!(nn_classify(11.0, &table).unwrap().class, SpamClass::Genuine);
        assert_eq!(nn_classify(0.5, &table).unwrap().class, SpamClass::Spam);
        assert_eq!(nn_classify(17.0, &table).unwrap().class, SpamClass::Spam);
    }

    #[test]
    fn tie_resolves_to_genuine() {
        let table = PrototypeTable {
            entries: vec![(SpamClass::Spam, 1.0), (SpamClass::Genuine, 3.0)],
            scale: 1.0,
        };
        assert_eq!(nn_classify(2.0, &table).unwrap().class, SpamClass::Genuine);
        let flipped = PrototypeTable {
            entries: vec![(SpamClass::Genuine, 3.0), (SpamClass::Spam, 1.0)],
            scale: 1.0,
        };
        assert_eq!(nn_classify(2.0, &flipped).unwrap().class, SpamClass::Genuine);
    }

    #[test]
    fn permutation_invariance() {
        let table = PrototypeTable::default_table();
        let mut reversed = table.clone();
        reversed.entries.reverse();
        for i in 0..200 {
            let v = i as f64 * 0.1;
            assert_eq!(
                nn_classify(v, &table).unwrap().class,
                nn_classify(v, &reversed).unwrap().class
            );
        }
    }

    #[test]
    fn table_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prototypes.txt");
        let mut table = PrototypeTable::default_table();
        table.scale = 21.5;
        table.save(&path).unwrap();
        assert_eq!(PrototypeTable::load(&path).unwrap(), table);
    }

    #[test]
    fn table_file_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "genuine|4.0\n").unwrap();
        assert!(PrototypeTable::load(&path).is_err());
        std::fs::write(&path, "gen|4.0\nspam|1.0\n").unwrap();
        assert!(PrototypeTable::load(&path).is_err());
    }

    fn stream_of(samples: Vec<f64>, packets: usize) -> MediaStream {
        let boundaries = (0..packets).map(|i| i * 160).collect();
        MediaStream {
            ssrc: 1,
            sample_rate: 8000,
            samples,
            boundaries,
        }
    }

    #[test]
    fn all_zero_audio_fires_long_silence() {
        let table = PrototypeTable::default_table();
        let stream = stream_of(vec![0.0; 80000], 500); // 10 s
        let v = classify_media(
            &stream,
            &table,
            &MediaRuleParams::default(),
            &FrameSpec::default(),
            FailMode::Open,
        )
        .unwrap();
        assert_eq!(v.decision, Decision::Spam);
        assert!(v.reasons.iter().any(|r| r.contains("long-silence")));
    }

    #[test]
    fn short_stream_fails_open() {
        let table = PrototypeTable::default_table();
        let stream = stream_of(vec![0.1; 100], 1);
        let v = classify_media(
            &stream,
            &table,
            &MediaRuleParams::default(),
            &FrameSpec::default(),
            FailMode::Open,
        )
        .unwrap();
        assert_eq!(v.decision, Decision::Pass);
        assert_eq!(v.reasons, ["insufficient media"]);

        let v = classify_media(
            &stream,
            &table,
            &MediaRuleParams::default(),
            &FrameSpec::default(),
            FailMode::Closed,
        )
        .unwrap();
        assert_eq!(v.decision, Decision::Spam);
    }

    #[test]
    fn reasons_are_complete() {
        // silent audio both fires the long-silence rule and lands near a
        // small spam prototype; both must be reported
        let table = PrototypeTable::default_table();
        let stream = stream_of(vec![0.0; 80000], 500);
        let v = classify_media(
            &stream,
            &table,
            &MediaRuleParams::default(),
            &FrameSpec::default(),
            FailMode::Open,
        )
        .unwrap();
        assert!(v.reasons.iter().any(|r| r.contains("long-silence")));
        assert!(v.reasons.iter().any(|r| r.contains("nearest prototype")));
    }

    #[test]
    fn calibration_scale_maps_genuine_band() {
        let table = PrototypeTable::default_table();
        let scale = calibration_scale(&table, &[0.2, 0.25, 0.22]).unwrap();
        let target = (4.078 + 5.613 + 6.446 + 2.599) / 4.0;
        let measured = (0.2 + 0.25 + 0.22) / 3.0;
        assert!((scale - target / measured).abs() < 1e-12);
        assert!(calibration_scale(&table, &[]).is_err());
    }
}
