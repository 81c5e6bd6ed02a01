//! The Gilbert-Elliott channel: a two-state (Good/Bad) Markov chain where
//! each state acts as a binary symmetric channel with its own crossover
//! probability, `p_good < p_bad < 0.5`.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::bounds;
use crate::error::{Error, Result};
use crate::rng;

/// Default Eb/N0 (dB) behind the default Good-state crossover probability.
pub const DEFAULT_EB_N0_DB: f64 = 7.0;
pub const DEFAULT_P_BAD: f64 = 0.2;

/// Good-state BSC crossover for BPSK at [`DEFAULT_EB_N0_DB`]: Q(sqrt(2 Eb/N0)).
pub fn default_p_good() -> f64 {
    let snr = 10f64.powf(DEFAULT_EB_N0_DB / 10.0);
    bounds::q_function((2.0 * snr).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Bad -> Good transition probability.
    pub mu: f64,
    /// Good -> Bad transition probability.
    pub epsilon: f64,
    /// BSC crossover probability in the Good state.
    pub p_good: f64,
    /// BSC crossover probability in the Bad state.
    pub p_bad: f64,
}

impl ChannelParams {
    /// Channel with the given transition probabilities and default crossovers.
    pub fn new(mu: f64, epsilon: f64) -> Self {
        Self {
            mu,
            epsilon,
            p_good: default_p_good(),
            p_bad: DEFAULT_P_BAD,
        }
    }

    pub fn with_crossover(mu: f64, epsilon: f64, p_good: f64, p_bad: f64) -> Self {
        Self {
            mu,
            epsilon,
            p_good,
            p_bad,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::Config(format!("mu must be in (0, 1), got {}", self.mu)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(0.0 <= self.p_good && self.p_good < self.p_bad && self.p_bad < 0.5) {
            return Err(Error::Config(format!(
                "crossover probabilities must satisfy 0 <= p_good < p_bad < 0.5, got ({}, {})",
                self.p_good, self.p_bad
            )));
        }
        Ok(())
    }

    /// Steady-state probability of the Good state, mu / (epsilon + mu).
    pub fn steady_state(&self) -> f64 {
        self.mu / (self.epsilon + self.mu)
    }
}

/// N binary channel-state realizations of length M; one row per sensor,
/// bit = 1 for Good.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsiMatrix {
    n_bits: usize,
    rows: Vec<BitVec>,
}

impl CsiMatrix {
    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Argument("CSI matrix needs at least one row".into()));
        }
        let n_bits = rows[0].len();
        if n_bits == 0 {
            return Err(Error::Argument("CSI rows must be non-empty".into()));
        }
        if rows.iter().any(|r| r.len() != n_bits) {
            return Err(Error::Argument("CSI rows must all have the same length".into()));
        }
        Ok(Self { n_bits, rows })
    }

    pub fn n_sensors(&self) -> usize {
        self.rows.len()
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn row(&self, n: usize) -> &BitVec {
        &self.rows[n]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Compact binary form: u32-le N, u32-le M, then per row ceil(M/8) bytes
    /// packed LSB-first (byte k bit j holds column 8k + j).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_sensors() as u32).to_le_bytes())?;
        w.write_all(&(self.n_bits as u32).to_le_bytes())?;
        for row in &self.rows {
            w.write_all(&row.to_packed_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut hdr = [0u8; 8];
        r.read_exact(&mut hdr)?;
        let n = u32::from_le_bytes(hdr[0..4].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(hdr[4..8].try_into().unwrap()) as usize;
        if n == 0 || m == 0 {
            return Err(Error::MalformedCode("CSI header with zero dimension".into()));
        }
        let row_bytes = m.div_ceil(8);
        let mut rows = Vec::with_capacity(n);
        let mut buf = vec![0u8; row_bytes];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            rows.push(BitVec::from_packed_bytes(&buf, m)?);
        }
        Self::from_rows(rows)
    }

    /// One line per sensor, '#' for Good and '.' for Bad.
    pub fn to_ascii_art(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * (self.n_bits + 1));
        for row in &self.rows {
            for b in row.iter() {
                s.push(if b { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

/// Generate independent per-sensor state sequences.
///
/// Row n starts from the steady-state distribution of channel n and then
/// follows the chain `P(Good | Good) = 1 - epsilon_n`, `P(Good | Bad) = mu_n`.
/// Each sensor draws from its own stream of the seed, so adding sensors does
/// not perturb existing rows.
pub fn generate_csi(params: &[ChannelParams], n_bits: usize, seed: u64) -> Result<CsiMatrix> {
    if params.is_empty() {
        return Err(Error::Config("need at least one sensor channel".into()));
    }
    if n_bits == 0 {
        return Err(Error::Config("n_bits must be >= 1".into()));
    }
    for p in params {
        p.validate()?;
    }
    let rows = params
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let mut rng = rng::rng_from(seed, &[rng::TAG_CSI, n as u64]);
            let mut row = BitVec::zeros(n_bits);
            let mut good = rng.random::<f64>() < p.steady_state();
            row.set(0, good);
            for m in 1..n_bits {
                let p_stay_or_enter = if good { 1.0 - p.epsilon } else { p.mu };
                good = rng.random::<f64>() < p_stay_or_enter;
                row.set(m, good);
            }
            row
        })
        .collect();
    CsiMatrix::from_rows(rows)
}

/// Pass source bits through the state-dependent BSC.
///
/// Output bit m = source bit m XOR Bernoulli(p_good if Good else p_bad).
pub fn transmit(
    source: &BitVec,
    states: &BitVec,
    params: &ChannelParams,
    seed: u64,
) -> Result<BitVec> {
    if source.len() != states.len() {
        return Err(Error::Argument(format!(
            "source ({}) and state ({}) vectors must have equal length",
            source.len(),
            states.len()
        )));
    }
    params.validate()?;
    let mut rng = rng::rng_from(seed, &[rng::TAG_NOISE]);
    let mut out = BitVec::zeros(source.len());
    for m in 0..source.len() {
        let p_flip = if states.get(m) { params.p_good } else { params.p_bad };
        let flip = rng.random::<f64>() < p_flip;
        out.set(m, source.get(m) ^ flip);
    }
    Ok(out)
}
