//! Run-length compression of channel-state sequences (the phase-one uplink
//! payload) and Monte-Carlo measurement of its expected rate.
//!
//! Wire format, normative for cross-implementation tests: one initial-state
//! bit, then one fixed-width field of ceil(log2(M)) bits per run holding
//! (run length - 1), fields written most significant bit first. A run of
//! exactly M is representable because fields store run - 1. When serialized
//! to bytes the stream is packed LSB-first per byte and zero-padded.

use rayon::prelude::*;

use crate::bits::{BitReader, BitVec, BitWriter};
use crate::error::{Error, Result};
use crate::gechannel::{generate_csi, ChannelParams};

/// Field width for sequences of length `m`: ceil(log2(m)); 0 when m == 1.
pub fn field_width(m: usize) -> usize {
    assert!(m >= 1);
    (usize::BITS - (m - 1).leading_zeros()) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLengthCode {
    pub initial_state: bool,
    pub run_lengths: Vec<usize>,
    pub encoded_bits: BitVec,
    /// Encoded length divided by the source length M.
    pub rate: f64,
}

impl RunLengthCode {
    pub fn encoded_len(&self) -> usize {
        self.encoded_bits.len()
    }

    /// Byte-aligned payload (zero-padded).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.encoded_bits.to_packed_bytes()
    }
}

pub fn encode(states: &BitVec) -> Result<RunLengthCode> {
    let m = states.len();
    if m == 0 {
        return Err(Error::Argument("cannot encode an empty sequence".into()));
    }
    let width = field_width(m);
    let initial_state = states.get(0);

    let mut run_lengths = Vec::new();
    let mut current = initial_state;
    let mut run = 1usize;
    for i in 1..m {
        let b = states.get(i);
        if b == current {
            run += 1;
        } else {
            run_lengths.push(run);
            current = b;
            run = 1;
        }
    }
    run_lengths.push(run);

    let mut w = BitWriter::new();
    w.push_bit(initial_state);
    for &r in &run_lengths {
        w.push_field((r - 1) as u64, width);
    }
    let encoded_bits = w.finish();
    let rate = encoded_bits.len() as f64 / m as f64;
    Ok(RunLengthCode {
        initial_state,
        run_lengths,
        encoded_bits,
        rate,
    })
}

/// Reconstruct the original sequence from a structured code.
pub fn decode(code: &RunLengthCode, m: usize) -> Result<BitVec> {
    if code.run_lengths.is_empty() || code.run_lengths.iter().any(|&r| r == 0) {
        return Err(Error::MalformedCode("runs must be non-empty and positive".into()));
    }
    let total: usize = code.run_lengths.iter().sum();
    if total != m {
        return Err(Error::MalformedCode(format!(
            "run lengths sum to {total}, expected {m}"
        )));
    }
    let mut out = BitVec::zeros(m);
    let mut state = code.initial_state;
    let mut pos = 0;
    for &r in &code.run_lengths {
        if state {
            for i in pos..pos + r {
                out.set(i, true);
            }
        }
        pos += r;
        state = !state;
    }
    Ok(out)
}

/// Parse an encoded bit stream back into the state sequence.
///
/// Trailing padding bits after the final run field are ignored, so this
/// accepts byte-aligned payloads.
pub fn decode_bits(bits: &BitVec, m: usize) -> Result<BitVec> {
    if m == 0 {
        return Err(Error::Argument("target length must be >= 1".into()));
    }
    let width = field_width(m);
    let mut r = BitReader::new(bits);
    let initial = r
        .read_bit()
        .ok_or_else(|| Error::MalformedCode("truncated stream: missing initial-state bit".into()))?;

    let mut out = BitVec::zeros(m);
    let mut state = initial;
    let mut pos = 0usize;
    while pos < m {
        let field = r.read_field(width).ok_or_else(|| {
            Error::MalformedCode(format!(
                "truncated stream: {} of {} bits reconstructed",
                pos, m
            ))
        })?;
        let run = field as usize + 1;
        if pos + run > m {
            return Err(Error::MalformedCode(format!(
                "run of {run} overflows sequence length {m} at position {pos}"
            )));
        }
        if state {
            for i in pos..pos + run {
                out.set(i, true);
            }
        }
        pos += run;
        state = !state;
    }
    Ok(out)
}

/// Decode a byte-aligned payload produced by [`RunLengthCode::to_bytes`].
pub fn decode_bytes(payload: &[u8], m: usize) -> Result<BitVec> {
    let bits = BitVec::from_packed_bytes(payload, payload.len() * 8)?;
    decode_bits(&bits, m)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct MeanRate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Sample mean compression rate over independent channel realizations.
pub fn mean_rate(params: &ChannelParams, m: usize, trials: usize, seed: u64) -> Result<MeanRate> {
    if trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    params.validate()?;
    let rates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let csi = generate_csi(
                std::slice::from_ref(params),
                m,
                crate::rng::derive_seed(seed, &[crate::rng::TAG_RATE_TRIAL, t as u64]),
            )
            .expect("params validated above");
            encode(csi.row(0)).expect("non-empty row").rate
        })
        .collect();
    let mean = rates.iter().sum::<f64>() / trials as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / trials as f64;
    let std_error = (var / trials as f64).sqrt();
    Ok(MeanRate {
        mean,
        std_error,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_table() {
        assert_eq!(field_width(1), 0);
        assert_eq!(field_width(2), 1);
        assert_eq!(field_width(10), 4);
        assert_eq!(field_width(128), 7);
        assert_eq!(field_width(256), 8);
        assert_eq!(field_width(300), 9);
    }

    #[test]
    fn all_ones_128() {
        let mut s = BitVec::zeros(128);
        for i in 0..128 {
            s.set(i, true);
        }
        let code = encode(&s).unwrap();
        assert_eq!(code.encoded_len(), 8);
        assert_eq!(code.rate, 0.0625);
        assert_eq!(code.run_lengths, vec![128]);
        // 1 initial bit + 7 bits of (128 - 1): a single 0xFF byte.
        assert_eq!(code.to_bytes(), vec![0xFF]);
        assert_eq!(decode(&code, 128).unwrap(), s);
    }

    #[test]
    fn hand_encoded_example_m10() {
        let s = BitVec::from_str01("1111000011").unwrap();
        let code = encode(&s).unwrap();
        assert!(code.initial_state);
        assert_eq!(code.run_lengths, vec![4, 4, 2]);
        assert_eq!(code.encoded_len(), 13);
        assert!((code.rate - 1.3).abs() < 1e-15);
        assert_eq!(code.to_bytes(), vec![0x99, 0x11]);
        assert_eq!(decode_bytes(&code.to_bytes(), 10).unwrap(), s);
    }

    #[test]
    fn single_run_of_zeros() {
        let s = BitVec::zeros(256);
        let code = encode(&s).unwrap();
        assert_eq!(code.run_lengths, vec![256]);
        assert_eq!(code.encoded_len(), 9);
        assert_eq!(decode(&code, 256).unwrap(), s);
        assert_eq!(decode_bits(&code.encoded_bits, 256).unwrap(), s);
    }

    #[test]
    fn alternating_roundtrip() {
        let s: String = std::iter::repeat("01").take(32).collect();
        let s = BitVec::from_str01(&s).unwrap();
        let code = encode(&s).unwrap();
        assert_eq!(decode(&code, 64).unwrap(), s);
    }

    #[test]
    fn malformed_codes_rejected() {
        let s = BitVec::from_str01("1100").unwrap();
        let mut code = encode(&s).unwrap();
        assert!(decode(&code, 5).is_err());
        code.run_lengths = vec![];
        assert!(decode(&code, 4).is_err());

        // Truncated stream.
        let good = encode(&BitVec::from_str01("1100").unwrap()).unwrap();
        let mut cut = BitVec::new();
        for i in 0..good.encoded_bits.len() - 1 {
            cut.push(good.encoded_bits.get(i));
        }
        assert!(decode_bits(&cut, 4).is_err());
        assert!(decode_bits(&BitVec::new(), 4).is_err());
    }

    #[test]
    fn encoded_length_formula_holds() {
        let mut rng = crate::rng::rng_from(5, &[]);
        for _ in 0..200 {
            let m = 1 + (rand::Rng::random::<u64>(&mut rng) % 300) as usize;
            let bits = crate::bits::random_bits(m, &mut rng);
            let code = encode(&bits).unwrap();
            assert_eq!(
                code.encoded_len(),
                1 + code.run_lengths.len() * field_width(m)
            );
            assert_eq!(decode(&code, m).unwrap(), bits);
        }
    }

    #[test]
    fn mean_rate_matches_expected_table_values() {
        // Soft targets for the three slow-fading parameter pairs.
        let cases = [
            (0.0041, 0.0075, 128, 0.1071),
            (0.0112, 0.0165, 128, 0.1630),
            (0.0191, 0.0256, 128, 0.2223),
            (0.0041, 0.0075, 256, 0.0813),
            (0.0112, 0.0165, 256, 0.1454),
            (0.0191, 0.0256, 256, 0.2134),
        ];
        for (mu, eps, m, expected) in cases {
            let r = mean_rate(&ChannelParams::new(mu, eps), m, 20_000, 42).unwrap();
            assert!(
                (r.mean - expected).abs() < 0.02,
                "rho_bar({mu},{eps},M={m}) = {} vs {expected}",
                r.mean
            );
        }
    }

    #[test]
    fn mean_rate_decreases_with_block_length() {
        for (mu, eps) in [(0.0041, 0.0075), (0.0112, 0.0165), (0.0191, 0.0256)] {
            let p = ChannelParams::new(mu, eps);
            let r128 = mean_rate(&p, 128, 10_000, 7).unwrap().mean;
            let r256 = mean_rate(&p, 256, 10_000, 7).unwrap().mean;
            assert!(r256 <= r128, "rho(256)={r256} > rho(128)={r128}");
        }
    }

    #[test]
    fn mean_rate_degenerate_static_channel() {
        let p = ChannelParams::with_crossover(1e-12, 1e-12, 0.0, 0.2);
        let r = mean_rate(&p, 128, 500, 3).unwrap();
        let expected = (1.0 + 7.0) / 128.0;
        assert!((r.mean - expected).abs() < 1e-12, "rate {}", r.mean);
    }
}
