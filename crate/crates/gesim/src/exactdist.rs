//! Exact distribution of the selected subset size K.
//!
//! F_K(k) is the probability that some k-subset of sensors covers all M
//! bits. It is expanded by inclusion-exclusion over the 2^(C(N,k)) - 1
//! non-empty collections of k-subsets; the probability that every subset in
//! a collection covers all M bits is computed by a recursion over the joint
//! state chain of all N sensors:
//!
//!   X_1(i)  = d(i) * prod_n P(C_1(n) = u_i(n))        (steady-state start)
//!   X_m     = A X_(m-1),   A = row-masked Q,  a(i,l) = d(i) q(i,l)
//!   P       = sum_i X_M(i)
//!
//! where q(i,l) is the joint one-step transition probability between the
//! 2^N state tuples and d(i) = 1 iff every subset in the collection has a
//! Good sensor under tuple u_i. A^(M-1) is never materialized; the recursion
//! runs as M-1 matrix-vector products with the mask applied on the fly, and
//! collection probabilities are cached by their d-indicator bitmap (the only
//! thing the probability depends on).

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gechannel::ChannelParams;

/// Capacity caps; configuration, not constants.
#[derive(Clone, Copy, Debug)]
pub struct ExactCaps {
    /// Largest N for full inclusion-exclusion evaluation.
    pub max_exact_sensors: usize,
    /// Largest N for which the 2^N x 2^N joint matrix may be built.
    pub max_q_sensors: usize,
}

impl Default for ExactCaps {
    fn default() -> Self {
        Self {
            max_exact_sensors: 5,
            max_q_sensors: 14,
        }
    }
}

/// Collections with more subset-combinations than this are refused even
/// under a raised sensor cap; the term count is 2^C(N,k).
const MAX_COLLECTION_EXPONENT: usize = 25;

/// An ordered collection of k-subsets, each a sensor bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetCollection {
    pub members: Vec<u64>,
}

/// d(i) for one state tuple: every subset in the collection must contain at
/// least one Good sensor under `state_mask`.
pub fn indicator(members: &[u64], state_mask: u64) -> bool {
    members.iter().all(|&s| s & state_mask != 0)
}

/// All k-element index combinations of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    assert!(k >= 1 && k <= n);
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The C(n,k) sensor masks of all k-subsets, in lexicographic tuple order.
pub fn k_subsets(n: usize, k: usize) -> Vec<u64> {
    combinations(n, k)
        .into_iter()
        .map(|c| c.into_iter().fold(0u64, |m, i| m | (1 << i)))
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Joint 2^N-state chain of N independent two-state channels.
#[derive(Clone, Debug)]
pub struct JointChain {
    n_sensors: usize,
    dim: usize,
    /// Row-major: q[i * dim + l] = P(C_m = u_i | C_(m-1) = u_l).
    q: Vec<f64>,
    /// Joint steady-state distribution over the 2^N tuples.
    initial: Vec<f64>,
}

/// Build the joint transition matrix from per-sensor parameters.
pub fn build_q(params: &[ChannelParams], caps: &ExactCaps) -> Result<JointChain> {
    let n = params.len();
    if n == 0 {
        return Err(Error::Config("need at least one sensor channel".into()));
    }
    if n > caps.max_q_sensors {
        return Err(Error::Capacity(format!(
            "joint chain over {n} sensors needs 4^{n} matrix entries, above the cap of \
             {} sensors; use the closed-form bounds for larger networks",
            caps.max_q_sensors
        )));
    }
    for p in params {
        p.validate()?;
    }
    let dim = 1usize << n;
    let mut q = vec![0.0; dim * dim];
    for i in 0..dim {
        for l in 0..dim {
            let mut prob = 1.0;
            for (s, p) in params.iter().enumerate() {
                let now_good = (i >> s) & 1 == 1;
                let was_good = (l >> s) & 1 == 1;
                prob *= match (was_good, now_good) {
                    (true, true) => 1.0 - p.epsilon,
                    (true, false) => p.epsilon,
                    (false, true) => p.mu,
                    (false, false) => 1.0 - p.mu,
                };
            }
            q[i * dim + l] = prob;
        }
    }
    let mut initial = vec![0.0; dim];
    for (i, slot) in initial.iter_mut().enumerate() {
        let mut prob = 1.0;
        for (s, p) in params.iter().enumerate() {
            let pi_g = p.steady_state();
            prob *= if (i >> s) & 1 == 1 { pi_g } else { 1.0 - pi_g };
        }
        *slot = prob;
    }
    Ok(JointChain {
        n_sensors: n,
        dim,
        q,
        initial,
    })
}

impl JointChain {
    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// q(i, l) = P(C_m = u_i | C_(m-1) = u_l).
    pub fn q(&self, i: usize, l: usize) -> f64 {
        self.q[i * self.dim + l]
    }

    fn d_bitmap(&self, members: &[u64]) -> Vec<u64> {
        let mut words = vec![0u64; self.dim.div_ceil(64)];
        for i in 0..self.dim {
            if indicator(members, i as u64) {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }

    fn eval_masked(&self, d: &[u64], m: usize) -> f64 {
        let dim = self.dim;
        let masked = |i: usize| (d[i / 64] >> (i % 64)) & 1 == 1;
        let mut x: Vec<f64> = (0..dim)
            .map(|i| if masked(i) { self.initial[i] } else { 0.0 })
            .collect();
        let mut y = vec![0.0; dim];
        for _ in 1..m {
            for i in 0..dim {
                y[i] = if masked(i) {
                    let row = &self.q[i * dim..(i + 1) * dim];
                    row.iter().zip(&x).map(|(a, b)| a * b).sum()
                } else {
                    0.0
                };
            }
            std::mem::swap(&mut x, &mut y);
        }
        x.iter().sum()
    }

    /// P(Gamma_M(w) = 1): every subset in the collection covers all `m` bits.
    pub fn collection_probability(&self, members: &[u64], m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Argument("m must be >= 1".into()));
        }
        if members.is_empty() {
            return Err(Error::Argument("collection must be non-empty".into()));
        }
        let max_mask = if self.n_sensors == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_sensors) - 1
        };
        if members.iter().any(|&s| s == 0 || s & !max_mask != 0) {
            return Err(Error::Argument(
                "subset masks must be non-empty and within the sensor range".into(),
            ));
        }
        Ok(self.eval_masked(&self.d_bitmap(members), m))
    }
}

/// Bonferroni truncation of the inclusion-exclusion sum: a lower bound on
/// F_K(k) that, for affordable depths, is often slack enough to go negative;
/// negative values are clamped and flagged.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BonferroniBound {
    /// Truncation depth L: collections up to cardinality 2L are summed.
    pub depth: usize,
    /// The raw truncated sum (may be negative).
    pub raw: f64,
    /// Raw value clamped to [0, 1].
    pub value: f64,
    pub clamped_negative: bool,
}

/// Evaluator for one (channel set, M) pair; caches collection probabilities
/// across cmf queries, keyed by the d-indicator bitmap.
pub struct ExactDist {
    chain: JointChain,
    m: usize,
    caps: ExactCaps,
    cache: HashMap<Vec<u64>, f64>,
}

impl ExactDist {
    pub fn new(params: &[ChannelParams], m: usize, caps: ExactCaps) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("m must be >= 1".into()));
        }
        let chain = build_q(params, &caps)?;
        Ok(Self {
            chain,
            m,
            caps,
            cache: HashMap::new(),
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.chain.n_sensors()
    }

    pub fn chain(&self) -> &JointChain {
        &self.chain
    }

    pub fn collection_probability(&mut self, members: &[u64]) -> Result<f64> {
        let d = self.chain.d_bitmap(members);
        if let Some(&p) = self.cache.get(&d) {
            return Ok(p);
        }
        let p = self.chain.collection_probability(members, self.m)?;
        self.cache.insert(d, p);
        Ok(p)
    }

    fn check_exact_cap(&self, k: usize) -> Result<usize> {
        let n = self.chain.n_sensors();
        if k == 0 || k > n {
            return Err(Error::Argument(format!("k must be in 1..={n}, got {k}")));
        }
        if n > self.caps.max_exact_sensors {
            return Err(Error::Capacity(format!(
                "exact evaluation over {n} sensors would sum up to 2^C({n},k) collection terms, \
                 above the cap of {} sensors; use the closed-form bounds (ek_upper_bound / \
                 --bound) for larger networks",
                self.caps.max_exact_sensors
            )));
        }
        let n_k = binomial(n, k);
        if n_k > MAX_COLLECTION_EXPONENT as u128 {
            return Err(Error::Capacity(format!(
                "C({n},{k}) = {n_k} subsets means 2^{n_k} collections; refusing above 2^{}",
                MAX_COLLECTION_EXPONENT
            )));
        }
        Ok(n_k as usize)
    }

    /// Signed sum over all collections of cardinality in [1, max_card],
    /// accumulated in descending cardinality with compensated summation.
    fn signed_collection_sum(&mut self, k: usize, max_card: usize) -> Result<f64> {
        let n = self.chain.n_sensors();
        let subsets = k_subsets(n, k);
        let n_k = subsets.len();

        // Enumerate terms, deduplicating by d-bitmap.
        let mut unique: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut unique_list: Vec<Vec<u64>> = Vec::new();
        let mut terms: Vec<(usize, usize)> = Vec::new(); // (cardinality, unique index)
        for card in (1..=max_card).rev() {
            for combo in combinations(n_k, card) {
                let members: Vec<u64> = combo.iter().map(|&j| subsets[j]).collect();
                let d = self.chain.d_bitmap(&members);
                let idx = match unique.get(&d) {
                    Some(&i) => i,
                    None => {
                        let i = unique_list.len();
                        unique.insert(d.clone(), i);
                        unique_list.push(d);
                        i
                    }
                };
                terms.push((card, idx));
            }
        }

        // Evaluate unique bitmaps (in parallel); the reduction below stays
        // sequential and order-deterministic regardless of worker count.
        let missing: Vec<(usize, &Vec<u64>)> = unique_list
            .iter()
            .enumerate()
            .filter(|(_, d)| !self.cache.contains_key(*d))
            .collect();
        let computed: Vec<(usize, f64)> = missing
            .par_iter()
            .map(|(i, d)| (*i, self.chain.eval_masked(d, self.m)))
            .collect();
        let mut probs: Vec<f64> = vec![f64::NAN; unique_list.len()];
        for (d, &i) in unique.iter() {
            if let Some(&p) = self.cache.get(d) {
                probs[i] = p;
            }
        }
        for (i, p) in computed {
            probs[i] = p;
            self.cache.insert(unique_list[i].clone(), p);
        }

        // Kahan-compensated alternating sum, largest cardinalities first.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for (card, idx) in terms {
            let sign = if card % 2 == 1 { 1.0 } else { -1.0 };
            let y = sign * probs[idx] - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Ok(sum)
    }

    /// Exact F_K(k): probability that some k-subset covers all M bits.
    pub fn cmf(&mut self, k: usize) -> Result<f64> {
        let n_k = self.check_exact_cap(k)?;
        let raw = self.signed_collection_sum(k, n_k)?;
        if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
            log::warn!("inclusion-exclusion sum for k={k} excursion beyond [0,1]: {raw}");
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Bonferroni lower bound: truncate the expansion at cardinality 2L.
    pub fn bonferroni(&mut self, k: usize, depth: usize) -> Result<BonferroniBound> {
        let n_k = self.check_exact_cap(k)?;
        if depth == 0 || 2 * depth > n_k {
            return Err(Error::Argument(format!(
                "Bonferroni depth must satisfy 1 <= L <= C(N,k)/2 = {}, got {depth}",
                n_k / 2
            )));
        }
        let raw = self.signed_collection_sum(k, 2 * depth)?;
        Ok(BonferroniBound {
            depth,
            raw,
            value: raw.clamp(0.0, 1.0),
            clamped_negative: raw < 0.0,
        })
    }

    /// The full K distribution under the forced-fallback convention
    /// F_K(N) = 1 (all N sensors transmit when nothing covers).
    pub fn k_distribution(&mut self) -> Result<KDistribution> {
        let n = self.chain.n_sensors();
        if n > self.caps.max_exact_sensors {
            // trigger the capacity error message
            self.check_exact_cap(1)?;
        }
        let mut cmf = Vec::with_capacity(n);
        for k in 1..n {
            cmf.push(self.cmf(k)?);
        }
        // Raw probability that even the full set covers: the one-collection
        // inclusion-exclusion term for k = N.
        let full_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let raw_full = self.collection_probability(&[full_mask])?;
        cmf.push(1.0);

        let mut pmf = Vec::with_capacity(n);
        for k in 0..n {
            let lo = if k == 0 { 0.0 } else { cmf[k - 1] };
            let mut p = cmf[k] - lo;
            if p < 0.0 {
                if p < -1e-9 {
                    log::warn!("pmf({}) negative beyond tolerance: {p}", k + 1);
                }
                p = 0.0;
            }
            pmf.push(p);
        }
        let expected = n as f64 - cmf[..n - 1].iter().sum::<f64>();
        Ok(KDistribution {
            n_sensors: n,
            n_bits: self.m,
            cmf,
            pmf,
            expected,
            raw_full_coverage: raw_full,
            forced: true,
        })
    }
}

/// One-shot convenience wrappers.
pub fn cmf_exact(params: &[ChannelParams], k: usize, m: usize, caps: ExactCaps) -> Result<f64> {
    ExactDist::new(params, m, caps)?.cmf(k)
}

pub fn k_distribution(params: &[ChannelParams], m: usize, caps: ExactCaps) -> Result<KDistribution> {
    ExactDist::new(params, m, caps)?.k_distribution()
}

/// Distribution of the selected subset size K over k = 1..N.
#[derive(Clone, Debug, Serialize)]
pub struct KDistribution {
    pub n_sensors: usize,
    pub n_bits: usize,
    /// F_K(k) for k = 1..N; with `forced`, the last entry is 1.
    pub cmf: Vec<f64>,
    /// f_K(k); with `forced`, f_K(N) absorbs all residual mass.
    pub pmf: Vec<f64>,
    /// E[K] = N - sum_(k<N) F_K(k) under the forced convention.
    pub expected: f64,
    /// Unforced probability that the full sensor set covers all bits.
    pub raw_full_coverage: f64,
    pub forced: bool,
}

impl KDistribution {
    /// F_K(k), 1-based k.
    pub fn cmf_at(&self, k: usize) -> f64 {
        self.cmf[k - 1]
    }

    pub fn pmf_at(&self, k: usize) -> f64 {
        self.pmf[k - 1]
    }

    /// CSV rows `k,F_K,f_K`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,F_K,f_K")?;
        for k in 1..=self.n_sensors {
            writeln!(w, "{},{},{}", k, self.cmf_at(k), self.pmf_at(k))?;
        }
        Ok(())
    }
}
