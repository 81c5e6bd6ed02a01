//! Closed-form quantities and bounds: the single-sensor coverage probability
//! F_K(1), the simple upper bound on E[K] derived from it, the network size
//! N0 past which that bound decreases monotonically, the power-efficiency
//! factor eta, and the coverage-based distortion bound.

use serde::Serialize;

use crate::gechannel::ChannelParams;
use crate::{Error, Result};

/// Gaussian tail probability Q(x) = P(Z > x), via the complementary error
/// function; accurate to well below 1e-12 over the range used here.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Upper bound on the Good-state crossover probability for BPSK when the
/// quantizer admits only instantaneous SNRs above `lambda_t`: Q(sqrt(2 lambda_t)).
///
/// The exact value would be the average of Q(sqrt(2 lambda)) under the
/// conditional SNR density given lambda > lambda_t; since that integrand is
/// decreasing in lambda, evaluating it at the threshold bounds it from above.
/// Only the bound is computed here; the conditional density itself has no
/// runtime representation.
pub fn p_g_bound(lambda_t: f64) -> Result<f64> {
    if !(lambda_t >= 0.0) {
        return Err(Error::Domain(format!(
            "SNR threshold must be >= 0, got {lambda_t}"
        )));
    }
    Ok(q_function((2.0 * lambda_t).sqrt()))
}

/// Distortion upper bound when a covering subset exists with probability
/// `nu`: nu * p_g + (1 - nu) / 2 (worst case 1/2 when uncovered).
pub fn distortion_bound(nu: f64, p_g: f64) -> Result<f64> {
    for (name, v) in [("nu", nu), ("p_g", p_g)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} must be in [0, 1], got {v}")));
        }
    }
    Ok(nu * p_g + (1.0 - nu) * 0.5)
}

/// Distortion model for one operating point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DistortionModel {
    /// Tolerable end-to-end distortion.
    pub d_hat: f64,
    /// SNR quantization threshold.
    pub snr_threshold: f64,
    /// Q(sqrt(2 lambda_t)), the worst-case Good-state crossover.
    pub p_g_bound: f64,
    /// Probability that a covering subset exists.
    pub nu: f64,
    /// Distortion upper bound using the worst-case crossover.
    pub d_u: f64,
}

impl DistortionModel {
    pub fn new(d_hat: f64, snr_threshold: f64, nu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&d_hat) {
            return Err(Error::Domain(format!("d_hat must be in [0, 1], got {d_hat}")));
        }
        let p_g = p_g_bound(snr_threshold)?;
        let d_u = distortion_bound(nu, p_g)?;
        Ok(Self {
            d_hat,
            snr_threshold,
            p_g_bound: p_g,
            nu,
            d_u,
        })
    }

    /// Whether the scheme can meet `d_hat` at all: p_G <= d_hat.
    pub fn meets_threshold(&self) -> bool {
        self.p_g_bound <= self.d_hat
    }
}

/// Probability that at least one single sensor covers all M bits:
/// 1 - prod_n (1 - pi_G(n) * (1 - epsilon_n)^(M-1)).
pub fn fk1_closed_form(params: &[ChannelParams], m: usize) -> f64 {
    assert!(m >= 1 && !params.is_empty());
    let mut none_covers = 1.0;
    for p in params {
        none_covers *= 1.0 - p.steady_state() * (1.0 - p.epsilon).powi(m as i32 - 1);
    }
    1.0 - none_covers
}

/// E[K] <= N - (N-1) * fk1; equality only in degenerate cases.
pub fn ek_upper_from_fk1(n_sensors: usize, fk1: f64) -> f64 {
    n_sensors as f64 - (n_sensors as f64 - 1.0) * fk1
}

pub fn ek_upper_bound(params: &[ChannelParams], m: usize) -> f64 {
    ek_upper_from_fk1(params.len(), fk1_closed_form(params, m))
}

/// Smallest N0 such that the E[K] upper bound is non-increasing for N >= N0
/// (identical channels): ceil(1 + 1 / ln(1/(1-x))), x = pi_G (1-eps)^(M-1).
pub fn n_zero(mu: f64, epsilon: f64, m: usize) -> Result<usize> {
    let p = ChannelParams::new(mu, epsilon);
    p.validate()?;
    if m < 1 {
        return Err(Error::Domain("m must be >= 1".into()));
    }
    let x = p.steady_state() * (1.0 - epsilon).powi(m as i32 - 1);
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!(
            "x = pi_G (1-epsilon)^(M-1) = {x} is outside (0, 1); N0 is undefined"
        )));
    }
    Ok((1.0 + 1.0 / (1.0 / (1.0 - x)).ln()).ceil() as usize)
}

/// Efficiency factor eta = N / (rho_bar + E[K]): the ratio of the bits sent
/// by the conventional everyone-transmits scheme to the expected bits of the
/// two-phase scheme.
pub fn eta(n_sensors: usize, rho_bar: f64, expected_k: f64) -> f64 {
    n_sensors as f64 / (rho_bar + expected_k)
}

/// Bit budget comparison for one network configuration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EfficiencyReport {
    pub n_sensors: usize,
    pub n_bits: usize,
    pub rho_bar: f64,
    pub expected_k: f64,
    /// Conventional-scheme bits: M * N.
    pub b1: u64,
    /// Expected two-phase bits: M * (rho_bar + E[K]).
    pub e_b2: f64,
    pub eta: f64,
}

impl EfficiencyReport {
    pub fn new(n_sensors: usize, n_bits: usize, rho_bar: f64, expected_k: f64) -> Self {
        Self {
            n_sensors,
            n_bits,
            rho_bar,
            expected_k,
            b1: (n_sensors * n_bits) as u64,
            e_b2: n_bits as f64 * (rho_bar + expected_k),
            eta: eta(n_sensors, rho_bar, expected_k),
        }
    }
}

/// Closed-form bound bundle for one configuration.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundsResult {
    pub fk1: f64,
    pub ek_upper: f64,
    /// Monotonicity threshold of the bound; identical channels only.
    pub n0: Option<usize>,
    /// x = pi_G (1-eps)^(M-1); identical channels only.
    pub x: Option<f64>,
    /// eta evaluated with E[K] replaced by its upper bound; a valid lower
    /// bound on the true efficiency factor.
    pub eta_lower: f64,
}

pub fn bounds_report(params: &[ChannelParams], m: usize, rho_bar: f64) -> BoundsResult {
    let fk1 = fk1_closed_form(params, m);
    let ek_upper = ek_upper_from_fk1(params.len(), fk1);
    let identical = params
        .iter()
        .all(|p| p.mu == params[0].mu && p.epsilon == params[0].epsilon);
    let (n0, x) = if identical {
        let p = &params[0];
        let x = p.steady_state() * (1.0 - p.epsilon).powi(m as i32 - 1);
        (n_zero(p.mu, p.epsilon, m).ok(), Some(x))
    } else {
        (None, None)
    };
    BoundsResult {
        fk1,
        ek_upper,
        n0,
        x,
        eta_lower: eta(params.len(), rho_bar, ek_upper),
    }
}
