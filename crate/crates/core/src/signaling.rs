//! Layer 1: match INVITE identity fields against the pattern store.

use std::time::{Duration, Instant};

use crate::sip::SignalingRecord;
use crate::spam_db::{PatternStore, TargetField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Spam,
    Pass,
}

/// How field matches combine into a decision.
///
/// `Any` classifies spam on any single database hit. `All` requires every
/// populated field to hit, which mirrors the conjunctive reading of the
/// matching rule; `Any` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combination {
    #[default]
    Any,
    All,
}

impl std::str::FromStr for Combination {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "any" => Ok(Combination::Any),
            "all" => Ok(Combination::All),
            _ => Err(()),
        }
    }
}

/// One layer's outcome: decision, the evidence behind it, and how long the
/// layer took.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerVerdict {
    pub decision: Decision,
    pub reasons: Vec<String>,
    pub elapsed: Duration,
}

fn populated_fields(record: &SignalingRecord) -> Vec<(TargetField, String)> {
    let mut fields = Vec::new();
    if !record.from_uri.user.is_empty() {
        fields.push((TargetField::FromUser, record.from_uri.user.clone()));
    }
    fields.push((TargetField::FromHost, record.from_uri.host.clone()));
    if !record.from_display.is_empty() {
        fields.push((TargetField::FromDisplay, record.from_display.clone()));
    }
    if let Some(contact) = &record.contact {
        fields.push((TargetField::Contact, contact.address()));
    }
    fields.push((TargetField::CallId, record.call_id.clone()));
    if let Some(subject) = &record.subject {
        fields.push((TargetField::Subject, subject.clone()));
    }
    if let Some(ct) = &record.content_type {
        fields.push((TargetField::ContentType, ct.clone()));
    }
    fields.push((TargetField::SourceIp, record.source_ip.clone()));
    fields
}

/// Classify one INVITE's identity fields. Unpopulated optional fields are
/// skipped, never treated as matches.
pub fn classify_signaling(
    record: &SignalingRecord,
    store: &PatternStore,
    combination: Combination,
) -> LayerVerdict {
    let start = Instant::now();
    let fields = populated_fields(record);
    let mut reasons = Vec::new();
    let mut matched = 0usize;
    for (field, value) in &fields {
        if let Some(pattern) = store.lookup(*field, value) {
            matched += 1;
            reasons.push(format!("{}: {}", field, pattern.pattern));
        }
    }
    let spam = match combination {
        Combination::Any => matched > 0,
        Combination::All => matched > 0 && matched == fields.len(),
    };
    LayerVerdict {
        decision: if spam { Decision::Spam } else { Decision::Pass },
        reasons: if spam { reasons } else { Vec::new() },
        elapsed: start.elapsed(),
    }
}
