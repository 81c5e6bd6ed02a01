//! End-to-end Monte-Carlo simulation of the two-phase protocol: sensors
//! compress and send their CSI, the fusion centre selects the minimum
//! covering subset, the selected sensors transmit through their
//! state-dependent BSCs, and the fusion centre reconstructs the source.
//!
//! Trials are independent with per-trial derived seeds; aggregation is a
//! sequential pass over the trial-ordered outcomes, so reports are
//! bit-identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{random_bits, BitVec};
use crate::bounds;
use crate::csicodec;
use crate::error::{Error, Result};
use crate::gechannel::{generate_csi, transmit, ChannelParams, CsiMatrix};
use crate::rng;
use crate::selection::{select_min_subset, SelectionResult};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_sensors: usize,
    pub n_bits: usize,
    /// Either one shared parameter set or one per sensor.
    pub channels: Vec<ChannelParams>,
    pub trials: usize,
    pub master_seed: u64,
    /// Tolerable end-to-end distortion, reported against the measured mean.
    pub distortion_threshold: f64,
}

impl ExperimentConfig {
    pub fn homogeneous(
        n_sensors: usize,
        n_bits: usize,
        channel: ChannelParams,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            n_sensors,
            n_bits,
            channels: vec![channel],
            trials,
            master_seed,
            distortion_threshold: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 || self.n_bits == 0 {
            return Err(Error::Config("need n_sensors >= 1 and n_bits >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.channels.len() != 1 && self.channels.len() != self.n_sensors {
            return Err(Error::Config(format!(
                "need 1 shared channel or {} per-sensor channels, got {}",
                self.n_sensors,
                self.channels.len()
            )));
        }
        for c in &self.channels {
            c.validate()?;
        }
        if !(0.0..=0.5).contains(&self.distortion_threshold) {
            return Err(Error::Config(format!(
                "distortion_threshold must be in [0, 0.5], got {}",
                self.distortion_threshold
            )));
        }
        Ok(())
    }

    /// Per-sensor channel list with the shared case expanded.
    pub fn per_sensor_channels(&self) -> Vec<ChannelParams> {
        if self.channels.len() == 1 {
            vec![self.channels[0]; self.n_sensors]
        } else {
            self.channels.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialOutcome {
    pub selected_k: usize,
    pub forced: bool,
    /// Sum of all N sensors' encoded CSI lengths (every sensor uplinks CSI).
    pub bits_sent_phase1: u64,
    /// selected_k * M.
    pub bits_sent_phase2: u64,
    /// Post-reconstruction bit error rate against the source block.
    pub hamming_distortion: f64,
}

/// Majority vote with ties resolved to 0.
fn majority(ones: usize, total: usize) -> bool {
    2 * ones > total
}

fn reconstruct(
    source_len: usize,
    observations: &[(usize, BitVec)], // (sensor index, received bits)
    csi: &CsiMatrix,
    forced: bool,
) -> BitVec {
    let mut estimate = BitVec::zeros(source_len);
    for m in 0..source_len {
        let bit = if forced {
            // No covering subset exists: plain majority over all copies.
            let ones = observations.iter().filter(|(_, o)| o.get(m)).count();
            majority(ones, observations.len())
        } else {
            // Majority over Good-state copies when at least one exists
            // (guaranteed for covered trials), otherwise over all copies.
            let mut good_ones = 0usize;
            let mut good_total = 0usize;
            for (sensor, obs) in observations {
                if csi.row(*sensor).get(m) {
                    good_total += 1;
                    good_ones += obs.get(m) as usize;
                }
            }
            if good_total > 0 {
                majority(good_ones, good_total)
            } else {
                let ones = observations.iter().filter(|(_, o)| o.get(m)).count();
                majority(ones, observations.len())
            }
        };
        estimate.set(m, bit);
    }
    estimate
}

fn hamming_fraction(a: &BitVec, b: &BitVec) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut errors = 0usize;
    for (wa, wb) in a.words().iter().zip(b.words()) {
        errors += (wa ^ wb).count_ones() as usize;
    }
    errors as f64 / a.len() as f64
}

/// Run one two-phase trial.
pub fn run_trial(config: &ExperimentConfig, trial_index: usize) -> Result<TrialOutcome> {
    let channels = config.per_sensor_channels();
    let m = config.n_bits;
    let t = trial_index as u64;

    let mut src_rng = rng::rng_from(config.master_seed, &[rng::TAG_SOURCE, t]);
    let source = random_bits(m, &mut src_rng);
    let csi = generate_csi(
        &channels,
        m,
        rng::derive_seed(config.master_seed, &[rng::TAG_CSI, t]),
    )?;

    // Phase 1: every sensor uplinks its run-length-coded CSI; the fusion
    // centre decodes and selects from the decoded matrix.
    let mut bits_sent_phase1 = 0u64;
    let mut decoded_rows = Vec::with_capacity(config.n_sensors);
    for n in 0..config.n_sensors {
        let code = csicodec::encode(csi.row(n))?;
        bits_sent_phase1 += code.encoded_len() as u64;
        decoded_rows.push(csicodec::decode(&code, m)?);
    }
    let decoded_csi = CsiMatrix::from_rows(decoded_rows)?;
    let selection: SelectionResult = select_min_subset(&decoded_csi)?;

    // Phase 2: only the selected sensors transmit their observations.
    let mut observations = Vec::with_capacity(selection.selected_k());
    for n in selection.subset.indices() {
        let received = transmit(
            &source,
            csi.row(n),
            &channels[n],
            rng::derive_seed(config.master_seed, &[rng::TAG_NOISE, t, n as u64]),
        )?;
        observations.push((n, received));
    }
    let estimate = reconstruct(m, &observations, &csi, selection.forced_all);

    Ok(TrialOutcome {
        selected_k: selection.selected_k(),
        forced: selection.forced_all,
        bits_sent_phase1,
        bits_sent_phase2: (selection.selected_k() * m) as u64,
        hamming_distortion: hamming_fraction(&source, &estimate),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub n_sensors: usize,
    pub n_bits: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Empirical F_K(k) for k = 1..N (forced convention: F(N) = 1).
    pub empirical_cmf: Vec<f64>,
    pub empirical_pmf: Vec<f64>,
    /// Binomial standard errors of the cmf entries.
    pub cmf_std_error: Vec<f64>,
    pub mean_k: f64,
    pub mean_k_std_error: f64,
    /// Mean per-sensor CSI compression rate.
    pub rho_bar: f64,
    pub rho_bar_std_error: f64,
    /// Fraction of trials where even the full set failed to cover.
    pub forced_rate: f64,
    /// 1 - forced_rate: empirical coverage probability (unforced F_K(N)).
    pub coverage_rate: f64,
    pub mean_distortion: f64,
    /// Mean distortion restricted to covered trials.
    pub mean_distortion_covered: Option<f64>,
    pub meets_distortion_threshold: bool,
    /// Efficiency factor N / (rho_bar + mean_k): phase-1 cost enters once as
    /// the per-sensor compression rate, matching the E[B2] accounting
    /// B1 = M*N, E[B2] = M*(rho_bar + E[K]).
    pub eta: f64,
    /// Efficiency with phase-1 cost counted for all N sensors:
    /// M*N / mean(total bits actually sent).
    pub eta_all_csi: f64,
    pub b1: u64,
    pub e_b2: f64,
    pub mean_total_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_dump: Option<Vec<TrialOutcome>>,
}

/// Run `trials` independent trials and aggregate.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_inner(config, false)
}

/// As [`run_experiment`], keeping every per-trial outcome in the report.
pub fn run_experiment_with_trials(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_inner(config, true)
}

fn run_experiment_inner(config: &ExperimentConfig, keep_trials: bool) -> Result<ExperimentReport> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t).expect("config validated"))
        .collect();

    let n = config.n_sensors;
    let m = config.n_bits;
    let t = config.trials as f64;

    let mut k_hist = vec![0u64; n + 1];
    let mut forced_count = 0u64;
    let mut sum_k = 0.0;
    let mut sum_k2 = 0.0;
    let mut sum_rho = 0.0;
    let mut sum_rho2 = 0.0;
    let mut sum_dist = 0.0;
    let mut sum_dist_covered = 0.0;
    let mut covered_count = 0u64;
    let mut sum_total_bits = 0.0;
    for o in &outcomes {
        debug_assert_eq!(o.bits_sent_phase2 as usize, o.selected_k * m);
        k_hist[o.selected_k] += 1;
        forced_count += o.forced as u64;
        sum_k += o.selected_k as f64;
        sum_k2 += (o.selected_k * o.selected_k) as f64;
        let rho = o.bits_sent_phase1 as f64 / (n * m) as f64;
        sum_rho += rho;
        sum_rho2 += rho * rho;
        sum_dist += o.hamming_distortion;
        if !o.forced {
            covered_count += 1;
            sum_dist_covered += o.hamming_distortion;
        }
        sum_total_bits += (o.bits_sent_phase1 + o.bits_sent_phase2) as f64;
    }

    let mean_k = sum_k / t;
    let var_k = (sum_k2 / t - mean_k * mean_k).max(0.0);
    let rho_bar = sum_rho / t;
    let var_rho = (sum_rho2 / t - rho_bar * rho_bar).max(0.0);

    let mut empirical_cmf = Vec::with_capacity(n);
    let mut cmf_std_error = Vec::with_capacity(n);
    let mut acc = 0u64;
    for k in 1..=n {
        acc += k_hist[k];
        let f = acc as f64 / t;
        empirical_cmf.push(f);
        cmf_std_error.push((f * (1.0 - f) / t).sqrt());
    }
    let empirical_pmf: Vec<f64> = (1..=n).map(|k| k_hist[k] as f64 / t).collect();

    let mean_distortion = sum_dist / t;
    let mean_total_bits = sum_total_bits / t;
    let b1 = (n * m) as u64;

    Ok(ExperimentReport {
        n_sensors: n,
        n_bits: m,
        trials: config.trials,
        master_seed: config.master_seed,
        empirical_cmf,
        empirical_pmf,
        cmf_std_error,
        mean_k,
        mean_k_std_error: (var_k / t).sqrt(),
        rho_bar,
        rho_bar_std_error: (var_rho / t).sqrt(),
        forced_rate: forced_count as f64 / t,
        coverage_rate: 1.0 - forced_count as f64 / t,
        mean_distortion,
        mean_distortion_covered: (covered_count > 0)
            .then(|| sum_dist_covered / covered_count as f64),
        meets_distortion_threshold: mean_distortion <= config.distortion_threshold,
        eta: bounds::eta(n, rho_bar, mean_k),
        eta_all_csi: b1 as f64 / mean_total_bits,
        b1,
        e_b2: m as f64 * (rho_bar + mean_k),
        mean_total_bits,
        trial_dump: keep_trials.then_some(outcomes),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineReport {
    pub n_sensors: usize,
    pub n_bits: usize,
    pub trials: usize,
    /// Every sensor sends every bit: exactly M * N per trial.
    pub b1: u64,
    pub mean_distortion: f64,
}

/// Conventional one-phase scheme: all N sensors transmit all M observations,
/// no CSI is sent, and the fusion centre takes a plain majority vote.
///
/// Uses the same per-trial source/CSI/noise streams as [`run_experiment`],
/// so the two reports are directly comparable.
pub fn conventional_baseline(config: &ExperimentConfig) -> Result<BaselineReport> {
    config.validate()?;
    let channels = config.per_sensor_channels();
    let m = config.n_bits;
    let distortions: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let t = trial as u64;
            let mut src_rng = rng::rng_from(config.master_seed, &[rng::TAG_SOURCE, t]);
            let source = random_bits(m, &mut src_rng);
            let csi = generate_csi(
                &channels,
                m,
                rng::derive_seed(config.master_seed, &[rng::TAG_CSI, t]),
            )
            .expect("config validated");
            let observations: Vec<(usize, BitVec)> = (0..config.n_sensors)
                .map(|sensor| {
                    let received = transmit(
                        &source,
                        csi.row(sensor),
                        &channels[sensor],
                        rng::derive_seed(
                            config.master_seed,
                            &[rng::TAG_NOISE, t, sensor as u64],
                        ),
                    )
                    .expect("config validated");
                    (sensor, received)
                })
                .collect();
            // No CSI at the fusion centre: forced-style plain majority.
            let estimate = reconstruct(m, &observations, &csi, true);
            hamming_fraction(&source, &estimate)
        })
        .collect();

    Ok(BaselineReport {
        n_sensors: config.n_sensors,
        n_bits: m,
        trials: config.trials,
        b1: (config.n_sensors * m) as u64,
        mean_distortion: distortions.iter().sum::<f64>() / config.trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, m: usize, mu: f64, eps: f64, trials: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig::homogeneous(n, m, ChannelParams::new(mu, eps), trials, seed)
    }

    #[test]
    fn noiseless_covered_trials_have_zero_distortion() {
        let mut cfg = config(4, 32, 0.3, 0.2, 200, 5);
        cfg.channels[0].p_good = 0.0;
        let report = run_experiment_with_trials(&cfg).unwrap();
        for o in report.trial_dump.as_ref().unwrap() {
            if !o.forced {
                assert_eq!(o.hamming_distortion, 0.0);
            }
            assert_eq!(o.bits_sent_phase2 as usize, o.selected_k * 32);
        }
    }

    #[test]
    fn covered_distortion_bounded_by_p_good() {
        let mut cfg = config(4, 64, 0.3, 0.2, 2_000, 11);
        cfg.channels[0].p_good = 0.01;
        let report = run_experiment(&cfg).unwrap();
        let covered = report.mean_distortion_covered.unwrap();
        // Covered reconstruction uses at least one Good copy per bit; its
        // error rate cannot exceed p_good beyond binomial noise.
        let n_bits = (report.coverage_rate * 2_000.0 * 64.0).max(1.0);
        let sigma = (0.01f64 * 0.99 / n_bits).sqrt();
        assert!(
            covered <= 0.01 + 3.0 * sigma,
            "covered distortion {covered}"
        );
    }

    #[test]
    fn single_trial_report_is_that_trial() {
        let cfg = config(3, 16, 0.2, 0.3, 1, 42);
        let outcome = run_trial(&cfg, 0).unwrap();
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.mean_k, outcome.selected_k as f64);
        assert_eq!(report.mean_distortion, outcome.hamming_distortion);
        assert_eq!(
            report.mean_total_bits,
            (outcome.bits_sent_phase1 + outcome.bits_sent_phase2) as f64
        );
        assert_eq!(report.forced_rate, outcome.forced as u64 as f64);
    }

    #[test]
    fn reports_identical_across_thread_counts() {
        let cfg = config(4, 48, 0.15, 0.25, 400, 9);
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_experiment(&cfg).unwrap())
        };
        let a = serde_json::to_string(&run_with(1)).unwrap();
        let b = serde_json::to_string(&run_with(4)).unwrap();
        let c = serde_json::to_string(&run_with(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn empirical_matches_exact_small_config() {
        let cfg = config(3, 8, 0.3, 0.25, 20_000, 31);
        let report = run_experiment(&cfg).unwrap();
        let mut ed = crate::exactdist::ExactDist::new(
            &cfg.per_sensor_channels(),
            8,
            crate::exactdist::ExactCaps::default(),
        )
        .unwrap();
        let kd = ed.k_distribution().unwrap();
        for k in 1..=3 {
            let exact = kd.cmf_at(k);
            let emp = report.empirical_cmf[k - 1];
            let se = (exact * (1.0 - exact) / 20_000.0).sqrt();
            assert!(
                (emp - exact).abs() <= 3.0 * se + 1e-12,
                "k = {k}: empirical {emp} vs exact {exact} (se {se})"
            );
        }
        // Empirical E[K] below the closed-form bound.
        let bound = crate::bounds::ek_upper_bound(&cfg.per_sensor_channels(), 8);
        assert!(report.mean_k <= bound + 3.0 * report.mean_k_std_error);
        // Coverage rate estimates the unforced F_K(N).
        let raw = kd.raw_full_coverage;
        let se = (raw * (1.0 - raw) / 20_000.0).sqrt();
        assert!((report.coverage_rate - raw).abs() <= 3.0 * se);
    }

    #[test]
    fn baseline_costs_and_eta_consistency() {
        let cfg = config(5, 32, 0.3, 0.2, 500, 77);
        let baseline = conventional_baseline(&cfg).unwrap();
        assert_eq!(baseline.b1, 160);
        let report = run_experiment(&cfg).unwrap();
        // eta from Eq-style component means equals B1 / E[B2].
        let via_b2 = baseline.b1 as f64 / report.e_b2;
        assert!((via_b2 - report.eta).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(3, 16, 0.2, 0.3, 10, 0);
        cfg.channels = vec![ChannelParams::new(0.2, 0.3); 2];
        assert!(cfg.validate().is_err());
        let mut cfg = config(3, 16, 0.2, 0.3, 0, 0);
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        assert!(cfg.validate().is_ok());
    }
}
