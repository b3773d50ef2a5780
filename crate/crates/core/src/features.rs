//! Speech features over decoded audio: zero crossing rate, absolute mean,
//! energy, amplitude entropy, and silence-run statistics.

use crate::error::{Error, Result};

/// Framing and silence parameters. Defaults: 30 ms non-overlapping frames
/// at 8 kHz, energy silence threshold 1e-4, 16 histogram bins.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub hop: usize,
    pub silence_threshold: f64,
    pub bins: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            frame_len: 240,
            hop: 240,
            silence_threshold: 1e-4,
            bins: 16,
        }
    }
}

/// Hopped windows; a trailing partial window is dropped.
pub fn frames<'a>(samples: &'a [f64], spec: &FrameSpec) -> Vec<&'a [f64]> {
    let mut out = Vec::new();
    let mut start = 0;
    while start + spec.frame_len <= samples.len() {
        out.push(&samples[start..start + spec.frame_len]);
        start += spec.hop;
    }
    out
}

/// Strict sign changes between consecutive samples divided by (length - 1).
/// Zeros inherit the previous sign; a leading zero run takes the sign of the
/// first nonzero sample; an all-zero frame has rate 0.
pub fn zero_crossing_rate(frame: &[f64]) -> Result<f64> {
    if frame.len() < 2 {
        return Err(Error::FrameTooShort);
    }
    let Some(first_sign) = frame.iter().find(|&&x| x != 0.0).map(|&x| x > 0.0) else {
        return Ok(0.0);
    };
    let mut prev = if frame[0] != 0.0 {
        frame[0] > 0.0
    } else {
        first_sign
    };
    let mut crossings = 0usize;
    for &x in &frame[1..] {
        let sign = if x != 0.0 { x > 0.0 } else { prev };
        if sign != prev {
            crossings += 1;
        }
        prev = sign;
    }
    Ok(crossings as f64 / (frame.len() - 1) as f64)
}

/// Mean absolute value times the calibration scale.
pub fn absolute_mean(samples: &[f64], scale: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput { what: "samples" });
    }
    Ok(scale * samples.iter().map(|x| x.abs()).sum::<f64>() / samples.len() as f64)
}

/// Mean squared value.
pub fn energy(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput { what: "samples" });
    }
    Ok(samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64)
}

/// Shannon entropy in bits of the amplitude histogram over equal-width bins
/// spanning [-1, 1].
pub fn entropy(samples: &[f64], bins: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput { what: "samples" });
    }
    debug_assert!(bins >= 2);
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let idx = (((x + 1.0) / 2.0) * bins as f64).floor() as isize;
        let idx = idx.clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
    }
    let total = samples.len() as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    Ok(h)
}

/// Per-frame silence mask and run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SilenceStats {
    pub mask: Vec<bool>,
    pub silence_fraction: f64,
    pub longest_silent_run: usize,
    pub longest_voiced_run: usize,
}

/// A frame is silent iff its energy is below the threshold.
pub fn silence_stats(samples: &[f64], spec: &FrameSpec) -> Result<SilenceStats> {
    let windows = frames(samples, spec);
    if windows.is_empty() {
        return Err(Error::EmptyInput {
            what: "stream shorter than one frame",
        });
    }
    let mask: Vec<bool> = windows
        .iter()
        .map(|w| energy(w).unwrap() < spec.silence_threshold)
        .collect();
    let silent = mask.iter().filter(|&&s| s).count();
    let longest = |value: bool| {
        let mut best = 0;
        let mut run = 0;
        for &s in &mask {
            if s == value {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best
    };
    Ok(SilenceStats {
        silence_fraction: silent as f64 / mask.len() as f64,
        longest_silent_run: longest(true),
        longest_voiced_run: longest(false),
        mask,
    })
}

/// The four per-stream features at a given calibration scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub zcr: f64,
    pub abs_mean: f64,
    pub energy: f64,
    pub entropy: f64,
}

pub fn feature_vector(samples: &[f64], spec: &FrameSpec, scale: f64) -> Result<FeatureVector> {
    Ok(FeatureVector {
        zcr: zero_crossing_rate(samples)?,
        abs_mean: absolute_mean(samples, scale)?,
        energy: energy(samples)?,
        entropy: entropy(samples, spec.bins)?,
    })
}
