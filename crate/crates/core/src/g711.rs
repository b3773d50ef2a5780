//! G.711 companding between 8-bit codewords and normalized linear samples.
//!
//! The µ-law path expands each codeword with the continuous µ-255 inverse
//! characteristic over the 14-bit range ±8159 and normalizes by that full
//! scale, so byte 0x00 decodes to exactly -1.0 and 0xFF/0x7F to ±0. The
//! A-law path uses the segment decoder over the 13-bit range ±4032.

const MU: f64 = 255.0;

/// µ-law full-scale magnitude before normalization.
pub const ULAW_FULL_SCALE: f64 = 8159.0;
/// A-law full-scale magnitude before normalization.
pub const ALAW_FULL_SCALE: f64 = 4032.0;

/// Expand one µ-law codeword to a linear sample in [-1, 1].
pub fn decode_ulaw(byte: u8) -> f64 {
    let positive = byte & 0x80 != 0;
    let code = (!byte) & 0x7F;
    let magnitude = ((1.0 + MU).powf(f64::from(code) / 127.0) - 1.0) / MU;
    if positive {
        magnitude
    } else {
        -magnitude
    }
}

/// Compress a linear sample in [-1, 1] to a µ-law codeword.
///
/// -0.0 is treated as +0.0, so 0x7F never comes back out (±0 fold).
pub fn encode_ulaw(sample: f64) -> u8 {
    let clamped = sample.clamp(-1.0, 1.0);
    let magnitude = clamped.abs();
    let code = (127.0 * (1.0 + MU * magnitude).ln() / (1.0 + MU).ln()).round() as u8;
    if clamped >= 0.0 {
        0x80 | (!code & 0x7F)
    } else {
        !code & 0x7F
    }
}

/// Decode a whole µ-law payload.
pub fn decode_ulaw_payload(payload: &[u8]) -> Vec<f64> {
    payload.iter().map(|&b| decode_ulaw(b)).collect()
}

/// Expand one A-law codeword to a linear sample in [-1, 1].
pub fn decode_alaw(byte: u8) -> f64 {
    let toggled = byte ^ 0x55;
    let bits = toggled & 0x7F;
    let exponent = bits >> 4;
    let mut mantissa = i32::from(bits & 0x0F);
    if exponent > 0 {
        mantissa += 16;
    }
    let mut value = (mantissa << 4) + 8;
    if exponent > 1 {
        value <<= exponent - 1;
    }
    // value is in the 16-bit domain, a multiple of 8 of the 13-bit value
    let magnitude = f64::from(value / 8) / ALAW_FULL_SCALE;
    if byte & 0x80 != 0 {
        magnitude
    } else {
        -magnitude
    }
}

/// Compress a linear sample in [-1, 1] to an A-law codeword.
pub fn encode_alaw(sample: f64) -> u8 {
    let clamped = sample.clamp(-1.0, 1.0);
    let m = (clamped.abs() * ALAW_FULL_SCALE).round() as i32;
    let m = m.min(4095);
    let (exponent, mantissa) = if m < 32 {
        (0u8, (m >> 1) as u8)
    } else {
        let msb = 31 - m.leading_zeros() as u8;
        let e = msb - 4;
        (e, ((m >> e) - 16) as u8)
    };
    let bits = (exponent << 4) | mantissa;
    let signed = if clamped >= 0.0 { bits | 0x80 } else { bits };
    signed ^ 0x55
}

/// Decode a whole A-law payload.
pub fn decode_alaw_payload(payload: &[u8]) -> Vec<f64> {
    payload.iter().map(|&b| decode_alaw(b)).collect()
}
