//! PSK probing with PSK nonlinear encryption over single-antenna users.
//!
//! Alice sends `e^{j theta}`, Bob echoes `e^{j phi} r_B` where `r_B` is his
//! soft probe statistic and `phi` carries the secret. Error rates use the
//! nearest-neighbour Q-function form; for `M >= 4` both the error rates and
//! the capacities are high-SNR approximations.

use serde::Serialize;
use libm::erfc;

use crate::error::{invalid, Result, SteepError};
use crate::gsteep::SisoSnr;

/// Error probability above which the `M >= 4` capacity form is flagged.
pub const APPROXIMATION_WARNING_PE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PskConfig {
    bits: u32,
}

impl PskConfig {
    /// `order` must be a power of two, at least 2.
    pub fn new(order: u32) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(invalid(format!("PSK order must be a power of two >= 2, got {order}")));
        }
        Ok(Self { bits: order.trailing_zeros() })
    }

    pub fn order(&self) -> u32 {
        1 << self.bits
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of nearest neighbours: 1 for BPSK, 2 otherwise.
    pub fn n0(&self) -> f64 {
        if self.bits == 1 { 1.0 } else { 2.0 }
    }

    /// Half the minimum distance between unit-circle constellation points.
    pub fn half_distance(&self) -> f64 {
        (std::f64::consts::PI / self.order() as f64).sin()
    }
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Binary entropy in bits with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    // ln_1p keeps the (1 - p) term accurate when p is tiny.
    (-p * p.ln() - (1.0 - p) * (-p).ln_1p()) / std::f64::consts::LN_2
}

fn raw_capacity(cfg: &PskConfig, p_e: f64) -> f64 {
    let m = cfg.bits() as f64;
    if cfg.bits() == 1 {
        1.0 - binary_entropy(p_e)
    } else {
        m - p_e - binary_entropy(p_e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PskErrorParams {
    /// Per-dimension noise standard deviation on Alice's statistic.
    pub eps_a: f64,
    /// Same for Eve's (linearised) statistic; infinite if Eve is deaf.
    pub eps_e: f64,
    pub p_e_a: f64,
    pub p_e_e: f64,
}

fn symbol_error(cfg: &PskConfig, eps: f64) -> f64 {
    let x = if eps.is_infinite() { 0.0 } else { cfg.half_distance() / eps };
    (cfg.n0() * q_function(x)).min(1.0)
}

pub fn psk_error_params(cfg: &PskConfig, snr: &SisoSnr) -> Result<PskErrorParams> {
    snr.validate()?;
    if snr.a == 0.0 || snr.b == 0.0 {
        return Err(SteepError::DegenerateLink(format!("need a, b > 0, got a = {}, b = {}", snr.a, snr.b)));
    }
    let s_ea = snr.alpha * snr.a;
    let s_eb = snr.beta * snr.b;
    let eps_a = (0.5 / snr.a + 0.5 / snr.b).sqrt();
    // A deaf Eve in either phase learns nothing about phi.
    let eps_e = if s_ea == 0.0 || s_eb == 0.0 {
        f64::INFINITY
    } else {
        (0.5 / snr.a + 0.5 / s_ea + 0.5 / s_eb).sqrt()
    };
    Ok(PskErrorParams { eps_a, eps_e, p_e_a: symbol_error(cfg, eps_a), p_e_e: symbol_error(cfg, eps_e) })
}

/// Capacity in bits per round-trip symbol of a PSK link with symbol error
/// rate `p_e`; `M >= 4` uses the nearest-neighbour approximation.
pub fn psk_capacity(cfg: &PskConfig, p_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(invalid(format!("error probability must lie in [0, 1], got {p_e}")));
    }
    Ok(raw_capacity(cfg, p_e).clamp(0.0, cfg.bits() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsteepRate {
    pub r_s: f64,
    pub c_user: f64,
    pub c_eve: f64,
    /// `h2(p_eE) - h2(p_eA)`, which drops the `p_eE - p_eA` term of the
    /// `M >= 4` capacities; equal to `r_s` for BPSK when positive.
    pub entropy_difference: f64,
    pub params: PskErrorParams,
    pub warning: Option<String>,
}

pub fn psteep_secrecy_rate(cfg: &PskConfig, snr: &SisoSnr) -> Result<PsteepRate> {
    let params = psk_error_params(cfg, snr)?;
    let c_user = psk_capacity(cfg, params.p_e_a)?;
    let c_eve = psk_capacity(cfg, params.p_e_e)?;
    let warning = if cfg.bits() >= 2 && params.p_e_a.max(params.p_e_e) > APPROXIMATION_WARNING_PE {
        Some(format!(
            "error rate above {APPROXIMATION_WARNING_PE}: nearest-neighbour capacity is unreliable"
        ))
    } else {
        None
    };
    let entropy_difference = binary_entropy(params.p_e_e) - binary_entropy(params.p_e_a);
    // At high SNR both capacities round to m; take the difference term by
    // term unless clamping is active.
    let m = cfg.bits() as f64;
    let unclamped = |p: f64| (0.0..=m).contains(&raw_capacity(cfg, p));
    let gap = if unclamped(params.p_e_a) && unclamped(params.p_e_e) {
        let linear = if cfg.bits() == 1 { 0.0 } else { params.p_e_e - params.p_e_a };
        linear + entropy_difference
    } else {
        c_user - c_eve
    };
    Ok(PsteepRate {
        r_s: gap.max(0.0),
        c_user,
        c_eve,
        entropy_difference,
        params,
        warning,
    })
}

/// Whether `b / a > alpha (1 - 1 / beta)`, i.e. Alice's statistic is less
/// noisy than Eve's.
pub fn psteep_power_condition(snr: &SisoSnr) -> Result<bool> {
    snr.validate()?;
    if snr.a == 0.0 || snr.b == 0.0 {
        return Err(SteepError::DegenerateLink(format!("need a, b > 0, got a = {}, b = {}", snr.a, snr.b)));
    }
    if snr.beta <= 1.0 {
        return Ok(true);
    }
    Ok(snr.b / snr.a > snr.alpha * (1.0 - 1.0 / snr.beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRatioBound {
    /// Upper bound `(1 + delta_p) e^{-P}` on `p_eA / p_eE`.
    pub bound: f64,
    pub delta_p: f64,
    pub p: f64,
    /// `P` as `b -> infinity`.
    pub p_limit: f64,
}

pub fn error_ratio_bound(cfg: &PskConfig, snr: &SisoSnr) -> Result<ErrorRatioBound> {
    if !psteep_power_condition(snr)? {
        return Err(SteepError::BoundNotApplicable(format!(
            "power condition b/a > alpha (1 - 1/beta) fails for {snr:?}"
        )));
    }
    let params = psk_error_params(cfg, snr)?;
    let sin2 = cfg.half_distance().powi(2);
    let SisoSnr { a, b, alpha, beta } = *snr;
    let delta_p = params.eps_a * params.eps_e / sin2;
    let p = sin2 * a * a * b * (beta * b + alpha * a - alpha * beta * a)
        / ((a + b) * (alpha * beta * a * b + beta * a * b + alpha * a * a));
    let p_limit = sin2 * a / (alpha + 1.0);
    Ok(ErrorRatioBound { bound: (1.0 + delta_p) * (-p).exp(), delta_p, p, p_limit })
}
