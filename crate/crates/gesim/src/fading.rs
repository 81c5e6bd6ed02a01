//! Correlated Rayleigh fading traces, binary quantization, and estimation of
//! the induced two-state Markov (Good/Bad) transition probabilities.
//!
//! The generator is a sum-of-sinusoids model: `oscillator_count` unit phasors
//! with arrival angles equally spaced over the half circle `[0, pi)` (so all
//! per-symbol Doppler frequencies `2*pi*fdTs*cos(angle)` are distinct) and
//! i.i.d. uniform phases drawn from the seed. The envelope is normalized so
//! that E[alpha^2] = 1; with distinct oscillator frequencies the per-trace
//! time average of alpha^2 converges to 1 as well.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::rng;

/// Above this normalized fading rate the run-length compression premise
/// (few long runs per block) degrades; accepted with a warning.
pub const SLOW_FADING_LIMIT: f64 = 0.01;
pub const DEFAULT_AMPLITUDE_THRESHOLD: f64 = 1.0;
pub const DEFAULT_OSCILLATOR_COUNT: usize = 64;
pub const MIN_OSCILLATOR_COUNT: usize = 8;

/// Interval between renormalizations of the oscillator phasors; bounds the
/// multiplicative drift of the rotation recurrence.
const RENORM_PERIOD: usize = 8192;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FadingConfig {
    /// Normalized fading rate `f_d * T_s` (Doppler times symbol period).
    pub normalized_fading_rate: f64,
    /// Amplitude threshold for Good/Bad quantization.
    pub amplitude_threshold: f64,
    /// Number of sum-of-sinusoids oscillators.
    pub oscillator_count: usize,
    /// Number of symbols to generate.
    pub trace_length: usize,
    pub seed: u64,
}

impl FadingConfig {
    pub fn new(normalized_fading_rate: f64, trace_length: usize, seed: u64) -> Self {
        Self {
            normalized_fading_rate,
            amplitude_threshold: DEFAULT_AMPLITUDE_THRESHOLD,
            oscillator_count: DEFAULT_OSCILLATOR_COUNT,
            trace_length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.normalized_fading_rate > 0.0) {
            return Err(Error::Config(format!(
                "normalized_fading_rate must be > 0, got {}",
                self.normalized_fading_rate
            )));
        }
        if self.normalized_fading_rate > SLOW_FADING_LIMIT {
            // Outside the slow-fading regime: warn, do not reject.
            log::warn!(
                "normalized_fading_rate {} exceeds the slow-fading limit {}; \
                 run-length compression of the resulting state sequences will be poor",
                self.normalized_fading_rate,
                SLOW_FADING_LIMIT
            );
        }
        if !(self.amplitude_threshold > 0.0) {
            return Err(Error::Config(format!(
                "amplitude_threshold must be > 0, got {}",
                self.amplitude_threshold
            )));
        }
        if self.oscillator_count < MIN_OSCILLATOR_COUNT {
            return Err(Error::Config(format!(
                "oscillator_count must be >= {MIN_OSCILLATOR_COUNT}, got {}",
                self.oscillator_count
            )));
        }
        if self.trace_length < 2 {
            return Err(Error::Config(format!(
                "trace_length must be >= 2, got {}",
                self.trace_length
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FadingTrace {
    pub amplitudes: Vec<f64>,
    pub config: FadingConfig,
}

impl FadingTrace {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>() / self.amplitudes.len() as f64
    }

    /// One amplitude per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for a in &self.amplitudes {
            writeln!(w, "{a}")?;
        }
        Ok(())
    }

    /// Raw little-endian f64 amplitudes.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for a in &self.amplitudes {
            w.write_all(&a.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn quantize(&self, threshold: f64) -> Result<BitVec> {
        quantize(&self.amplitudes, threshold)
    }
}

/// Generate a correlated Rayleigh fading amplitude trace.
///
/// Deterministic for a fixed config (including seed).
pub fn generate_trace(config: &FadingConfig) -> Result<FadingTrace> {
    config.validate()?;
    let k = config.oscillator_count;
    let mut rng = rng::rng_from(config.seed, &[]);

    // Distinct per-symbol angular increments: cos is injective on [0, pi).
    let mut rot_re = Vec::with_capacity(k);
    let mut rot_im = Vec::with_capacity(k);
    let mut re = Vec::with_capacity(k);
    let mut im = Vec::with_capacity(k);
    for i in 0..k {
        let angle = PI * (i as f64 + 0.5) / k as f64;
        let omega = 2.0 * PI * config.normalized_fading_rate * angle.cos();
        rot_re.push(omega.cos());
        rot_im.push(omega.sin());
        let phase: f64 = rng.random::<f64>() * 2.0 * PI;
        re.push(phase.cos());
        im.push(phase.sin());
    }

    let norm = 1.0 / (k as f64).sqrt();
    let mut amplitudes = Vec::with_capacity(config.trace_length);
    for step in 0..config.trace_length {
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..k {
            sx += re[i];
            sy += im[i];
            let (r, j) = (re[i], im[i]);
            re[i] = r * rot_re[i] - j * rot_im[i];
            im[i] = r * rot_im[i] + j * rot_re[i];
        }
        amplitudes.push((sx * sx + sy * sy).sqrt() * norm);
        if (step + 1) % RENORM_PERIOD == 0 {
            for i in 0..k {
                let mag = (re[i] * re[i] + im[i] * im[i]).sqrt();
                re[i] /= mag;
                im[i] /= mag;
            }
        }
    }

    Ok(FadingTrace {
        amplitudes,
        config: config.clone(),
    })
}

/// Quantize amplitudes to Good (1) / Bad (0) states.
///
/// The comparison is strict: samples exactly at the threshold go to Bad.
pub fn quantize(amplitudes: &[f64], threshold: f64) -> Result<BitVec> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!(
            "quantization threshold must be > 0, got {threshold}"
        )));
    }
    let mut out = BitVec::zeros(amplitudes.len());
    for (i, &a) in amplitudes.iter().enumerate() {
        if a > threshold {
            out.set(i, true);
        }
    }
    Ok(out)
}

/// Raw transition and occupancy counts of a binary state sequence.
///
/// Occupancies exclude the final symbol, which has no outgoing transition,
/// so each estimate is (#transitions out of s) / (#chances to leave s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransitionCounts {
    pub good_occupancy: u64,
    pub bad_occupancy: u64,
    pub good_to_bad: u64,
    pub bad_to_good: u64,
}

impl TransitionCounts {
    pub fn epsilon(&self) -> Option<f64> {
        (self.good_occupancy > 0).then(|| self.good_to_bad as f64 / self.good_occupancy as f64)
    }

    pub fn mu(&self) -> Option<f64> {
        (self.bad_occupancy > 0).then(|| self.bad_to_good as f64 / self.bad_occupancy as f64)
    }
}

pub fn transition_counts(states: &BitVec) -> Result<TransitionCounts> {
    if states.len() < 2 {
        return Err(Error::Estimation(format!(
            "need at least 2 symbols to count transitions, got {}",
            states.len()
        )));
    }
    let mut c = TransitionCounts::default();
    let mut prev = states.get(0);
    for i in 1..states.len() {
        let cur = states.get(i);
        match (prev, cur) {
            (true, true) => c.good_occupancy += 1,
            (true, false) => {
                c.good_occupancy += 1;
                c.good_to_bad += 1;
            }
            (false, false) => c.bad_occupancy += 1,
            (false, true) => {
                c.bad_occupancy += 1;
                c.bad_to_good += 1;
            }
        }
        prev = cur;
    }
    Ok(c)
}

/// Maximum-likelihood (mu, epsilon) estimate for a two-state Markov chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeEstimate {
    /// Bad -> Good transition probability.
    pub mu: f64,
    /// Good -> Bad transition probability.
    pub epsilon: f64,
}

pub fn estimate_ge_params(states: &BitVec) -> Result<GeEstimate> {
    let counts = transition_counts(states)?;
    let epsilon = counts.epsilon().ok_or_else(|| {
        Error::Estimation("Good state never observed; epsilon is undefined".into())
    })?;
    let mu = counts
        .mu()
        .ok_or_else(|| Error::Estimation("Bad state never observed; mu is undefined".into()))?;
    Ok(GeEstimate { mu, epsilon })
}
