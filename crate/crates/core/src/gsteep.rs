//! Gaussian probing with Gaussian linear encryption over MIMO links.
//!
//! Alice probes with `x_A ~ CN(0, I)`, Bob forms the MMSE estimate `p_hat`
//! of the effective probe `p = V_BA^H x_A` and echoes `p_hat + s`. The
//! capacities below are the mutual informations between `s` and each
//! party's observations; every determinant is evaluated in the
//! `n_B`-dimensional domain.

use nalgebra::DVector;
use serde::Serialize;

use crate::channel_model::{scale_channels, ChannelSet, PowerConfig};
use crate::error::{invalid, Result, SteepError};
use crate::linalg::{self, CMatrix};

/// Bob's view of the probing phase: SVD of `H_BA'` and the per-mode MMSE
/// variances of his probe estimate.
#[derive(Debug, Clone)]
pub struct ProbeStats {
    /// Right singular vectors of `H_BA`, `n_A x n_B`, orthonormal columns.
    pub v_ba: CMatrix,
    /// Scaled singular values `sqrt(p_A / n_A) * pi_i`.
    pub pi_prime: DVector<f64>,
    /// Diagonal of `E{p_hat p_hat^H}`.
    pub r_phat: DVector<f64>,
    /// Diagonal MSE of `p_hat`.
    pub r_dp: DVector<f64>,
    /// Diagonal of `R_phat * R_dp`, the covariance of `p_hat - R_phat p`.
    pub r_dp_prime: DVector<f64>,
}

impl ProbeStats {
    pub fn n_b(&self) -> usize {
        self.pi_prime.len()
    }
}

/// Probe statistics for a scaled Alice-to-Bob channel `H_BA'` (`n_B x n_A`).
pub fn effective_probe_stats(h_ba_prime: &CMatrix) -> Result<ProbeStats> {
    let stats = probe_stats_unchecked(h_ba_prime)?;
    let top = stats.pi_prime.max();
    let bottom = stats.pi_prime.min();
    let n = h_ba_prime.nrows().max(h_ba_prime.ncols()) as f64;
    if !(top > 0.0) || bottom <= n * f64::EPSILON * top {
        return Err(SteepError::SingularChannel(format!(
            "H_BA' is rank deficient (singular values {:.3e}..{:.3e})",
            bottom, top
        )));
    }
    Ok(stats)
}

/// Like [`effective_probe_stats`] but accepts rank-deficient channels; a
/// zero singular value simply yields a mode Bob learns nothing about.
pub(crate) fn probe_stats_unchecked(h_ba_prime: &CMatrix) -> Result<ProbeStats> {
    let (n_b, n_a) = h_ba_prime.shape();
    if n_a < n_b {
        return Err(SteepError::UnsupportedConfiguration { n_a, n_b });
    }
    if !linalg::all_finite(h_ba_prime) {
        return Err(invalid("H_BA' has non-finite entries"));
    }
    let svd = h_ba_prime.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let pi_prime = svd.singular_values;
    let r_phat = pi_prime.map(|p| p * p / (p * p + 1.0));
    let r_dp = pi_prime.map(|p| 1.0 / (p * p + 1.0));
    let r_dp_prime = r_phat.component_mul(&r_dp);
    Ok(ProbeStats { v_ba: v_t.adjoint(), pi_prime, r_phat, r_dp, r_dp_prime })
}

/// A capacity `log2(N / D)` together with `log2 N` and `log2 D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityTerms {
    pub capacity: f64,
    pub log2_numerator: f64,
    pub log2_denominator: f64,
}

impl CapacityTerms {
    fn from_logs(log2_numerator: f64, log2_denominator: f64, context: &'static str) -> Result<Self> {
        let capacity = linalg::clamp_capacity(log2_numerator - log2_denominator, context)?;
        Ok(Self { capacity, log2_numerator, log2_denominator })
    }
}

/// Log2 of the four determinants behind a secrecy rate; each determinant
/// is at least one so each entry is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogTerms {
    pub n_user: f64,
    pub d_user: f64,
    pub n_eve: f64,
    pub d_eve: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyBreakdown {
    pub c_user: f64,
    pub c_eve: f64,
    pub r_s: f64,
    pub log_terms: LogTerms,
}

impl SecrecyBreakdown {
    pub fn from_terms(user: CapacityTerms, eve: CapacityTerms) -> Self {
        Self {
            c_user: user.capacity,
            c_eve: eve.capacity,
            r_s: linalg::positive_part(user.capacity - eve.capacity),
            log_terms: LogTerms {
                n_user: user.log2_numerator,
                d_user: user.log2_denominator,
                n_eve: eve.log2_numerator,
                d_eve: eve.log2_denominator,
            },
        }
    }

    /// `C_user - C_eve` before clamping at zero.
    pub fn signed_gap(&self) -> f64 {
        self.c_user - self.c_eve
    }
}

/// `log2|G (X + I) + I| - log2|G X + I|` for Hermitian PSD `G`, `X`.
fn echo_capacity(g: &CMatrix, x: &CMatrix, context: &'static str) -> Result<CapacityTerms> {
    let n = linalg::log2det_i_plus_gx(g, &(x + linalg::identity(x.nrows())))?;
    let d = linalg::log2det_i_plus_gx(g, x)?;
    CapacityTerms::from_logs(n, d, context)
}

fn check_cols(context: &'static str, m: &CMatrix, expected: usize) -> Result<()> {
    if m.ncols() != expected {
        return Err(SteepError::DimensionMismatch {
            context,
            expected: format!("{expected} columns"),
            actual: format!("{} columns", m.ncols()),
        });
    }
    Ok(())
}

/// MSE matrix of the MMSE estimate of `s` from `H (s + d) + w`, where the
/// residual `d` has covariance `x`:
/// `(I + H^H (I + H X H^H)^{-1} H)^{-1}`. Its log-determinant is minus the
/// echo capacity.
pub fn echo_mse(h: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    check_cols("echo channel", h, x.nrows())?;
    let k = linalg::identity(h.nrows()) + h * x * h.adjoint();
    let info = linalg::identity(x.nrows()) + h.adjoint() * linalg::solve_hpd(&k, h)?;
    Ok(linalg::hermitian_part(&linalg::inverse_hpd(&info)?))
}

/// Capacity of the effective channel from `s` to Alice, given `H_AB''`.
pub fn alice_capacity(h_ab_dprime: &CMatrix, stats: &ProbeStats) -> Result<CapacityTerms> {
    alice_capacity_with(h_ab_dprime, &stats.r_dp_prime)
}

/// [`alice_capacity`] with an explicit diagonal for `R_dp'`, e.g. zero for
/// the `p_A -> 0` or `p_A -> infinity` limits.
pub fn alice_capacity_with(h_ab_dprime: &CMatrix, r_dp_prime: &DVector<f64>) -> Result<CapacityTerms> {
    check_cols("H_AB''", h_ab_dprime, r_dp_prime.len())?;
    if r_dp_prime.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("R_dp' diagonal must be finite and nonnegative"));
    }
    let g = linalg::gram(h_ab_dprime);
    echo_capacity(&g, &linalg::real_diag(r_dp_prime), "C_A|B")
}

#[derive(Debug, Clone)]
pub struct EveCapacity {
    pub terms: CapacityTerms,
    /// MSE matrix of Eve's phase-1 estimate of `p_hat`.
    pub r_dphat_e: CMatrix,
    /// Covariance of that estimate; `R_phat - T` equals `r_dphat_e`.
    pub t: CMatrix,
}

/// Capacity of the effective channel from `s` to Eve, who observes both
/// the probe (through `H_EA'`) and the echo (through `H_EB''`).
pub fn eve_capacity(h_eb_dprime: &CMatrix, h_ea_prime: &CMatrix, stats: &ProbeStats) -> Result<EveCapacity> {
    let n_b = stats.n_b();
    let n_a = stats.v_ba.nrows();
    check_cols("H_EB''", h_eb_dprime, n_b)?;
    check_cols("H_EA'", h_ea_prime, n_a)?;
    if h_eb_dprime.nrows() != h_ea_prime.nrows() {
        return Err(SteepError::DimensionMismatch {
            context: "Eve antenna count",
            expected: h_ea_prime.nrows().to_string(),
            actual: h_eb_dprime.nrows().to_string(),
        });
    }
    let r_phat = linalg::real_diag(&stats.r_phat);
    let w_plus_i = linalg::gram(h_ea_prime) + linalg::identity(n_a);
    let vr = &stats.v_ba * &r_phat;
    // Q = R_phat V^H (W + I)^{-1} V R_phat
    let q = linalg::hermitian_part(&(vr.adjoint() * linalg::solve_hpd(&w_plus_i, &vr)?));
    let t = linalg::hermitian_part(&(&r_phat * &r_phat - &q));
    // R_phat - T written without the cancellation R_phat - R_phat^2.
    let r_dphat_e = linalg::real_diag(&stats.r_dp_prime) + &q;
    let g = linalg::gram(h_eb_dprime);
    let terms = echo_capacity(&g, &r_dphat_e, "C_E|B")?;
    Ok(EveCapacity { terms, r_dphat_e, t })
}

/// Secrecy rate of G-STEEP for the given physical channels and powers.
pub fn gsteep_secrecy_rate(channels: &ChannelSet, powers: &PowerConfig) -> Result<SecrecyBreakdown> {
    let scaled = scale_channels(channels, powers)?;
    let stats = effective_probe_stats(&scaled.h_ba_prime)?;
    let user = alice_capacity(&scaled.h_ab_dprime, &stats)?;
    let eve = eve_capacity(&scaled.h_eb_dprime, &scaled.h_ea_prime, &stats)?;
    Ok(SecrecyBreakdown::from_terms(user, eve.terms))
}

fn gsteep_unchecked(channels: &ChannelSet, powers: &PowerConfig) -> Result<SecrecyBreakdown> {
    let scaled = scale_channels(channels, powers)?;
    let stats = probe_stats_unchecked(&scaled.h_ba_prime)?;
    let user = alice_capacity(&scaled.h_ab_dprime, &stats)?;
    let eve = eve_capacity(&scaled.h_eb_dprime, &scaled.h_ea_prime, &stats)?;
    Ok(SecrecyBreakdown::from_terms(user, eve.terms))
}

/// Scalar-`t` evaluation for a single-antenna Bob, kept separate from the
/// matrix path so the two can be compared.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Corollary1 {
    pub breakdown: SecrecyBreakdown,
    pub t: f64,
    pub s_ba: f64,
    pub s_ab: f64,
    pub s_eb: f64,
}

pub fn corollary1_breakdown(channels: &ChannelSet, powers: &PowerConfig) -> Result<Corollary1> {
    if channels.n_b() != 1 {
        return Err(invalid(format!("single-antenna Bob required, got n_B = {}", channels.n_b())));
    }
    let scaled = scale_channels(channels, powers)?;
    let h_ba = channels.h_ba().row(0).transpose();
    let norm = h_ba.norm();
    if norm == 0.0 {
        return Err(SteepError::SingularChannel("h_BA is zero".into()));
    }
    let s_ba = scaled.h_ba_prime.norm_squared();
    let s_ab = scaled.h_ab_prime.norm_squared();
    let s_eb = scaled.h_eb_prime.norm_squared();
    let var_phat = s_ba / (s_ba + 1.0);
    let r = h_ba.conjugate().unscale(norm).scale(var_phat);
    let hr = &scaled.h_ea_prime * r;
    let a = &scaled.h_ea_prime * scaled.h_ea_prime.adjoint() + linalg::identity(channels.n_e());
    let t = linalg::inverse_quadratic_form(&a, &hr)?;

    let user_x = s_ba / ((s_ba + 1.0) * (s_ba + 1.0));
    let user = CapacityTerms::from_logs(
        (1.0 + s_ab / 2.0 * (user_x + 1.0)).log2(),
        (1.0 + s_ab / 2.0 * user_x).log2(),
        "C_A|B",
    )?;
    let eve_x = var_phat - t;
    let eve = CapacityTerms::from_logs(
        (1.0 + s_eb / 2.0 * (eve_x + 1.0)).log2(),
        (1.0 + s_eb / 2.0 * eve_x).log2(),
        "C_E|B",
    )?;
    Ok(Corollary1 { breakdown: SecrecyBreakdown::from_terms(user, eve), t, s_ba, s_ab, s_eb })
}

/// Secret-key capacity of the probing phase in bits per probing interval.
pub fn secret_key_capacity(h_ba_prime: &CMatrix, h_ea_prime: &CMatrix) -> Result<f64> {
    let n_a = h_ba_prime.ncols();
    check_cols("H_EA'", h_ea_prime, n_a)?;
    let w_plus_i = linalg::gram(h_ea_prime) + linalg::identity(n_a);
    let joint = &w_plus_i + linalg::gram(h_ba_prime);
    let value = linalg::log2det_hpd(&joint)? - linalg::log2det_hpd(&w_plus_i)?;
    linalg::clamp_capacity(value, "C_key")
}

/// The lumped single-antenna parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SisoSnr {
    /// Probe SNR at Bob.
    pub a: f64,
    /// Echo SNR at Alice.
    pub b: f64,
    /// Eve-to-Bob SNR ratio in the probing phase.
    pub alpha: f64,
    /// Eve-to-Alice SNR ratio in the echo phase.
    pub beta: f64,
}

impl SisoSnr {
    pub fn new(a: f64, b: f64, alpha: f64, beta: f64) -> Result<Self> {
        let s = Self { a, b, alpha, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Lumps a single-antenna Alice/Bob channel set; Eve may have any
    /// number of antennas.
    pub fn from_channels(channels: &ChannelSet, powers: &PowerConfig) -> Result<Self> {
        if channels.n_a() != 1 || channels.n_b() != 1 {
            return Err(invalid("lumped parameters need n_A = n_B = 1"));
        }
        powers.validate()?;
        let a = powers.p_a * channels.h_ba()[(0, 0)].norm_sqr();
        let b = powers.p_b * channels.h_ab()[(0, 0)].norm_sqr();
        if a == 0.0 || b == 0.0 {
            return Err(SteepError::DegenerateLink("zero user channel".into()));
        }
        let alpha = powers.p_a * channels.h_ea().norm_squared() / a;
        let beta = powers.p_b * channels.h_eb().norm_squared() / b;
        Self::new(a, b, alpha, beta)
    }

    pub fn a1(&self) -> f64 {
        self.a / ((self.a + 1.0) * (self.a + 1.0))
    }

    pub fn a2(&self) -> f64 {
        let aa = self.alpha * self.a;
        self.a1() * (self.a + aa + 1.0) / (aa + 1.0)
    }
}

pub fn siso_secrecy_rate(snr: &SisoSnr) -> Result<SecrecyBreakdown> {
    snr.validate()?;
    let (a1, a2) = (snr.a1(), snr.a2());
    let half_b = snr.b / 2.0;
    let half_eb = snr.beta * snr.b / 2.0;
    let user = CapacityTerms::from_logs((1.0 + half_b * (a1 + 1.0)).log2(), (1.0 + half_b * a1).log2(), "C_A|B")?;
    let eve = CapacityTerms::from_logs((1.0 + half_eb * (a2 + 1.0)).log2(), (1.0 + half_eb * a2).log2(), "C_E|B")?;
    Ok(SecrecyBreakdown::from_terms(user, eve))
}

/// Echo SNR `b` above which the single-antenna secrecy rate is positive.
/// Zero when `beta <= 1`, infinite when `a = 0` and `beta > 1`.
pub fn siso_threshold_b(a: f64, alpha: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    if beta <= 1.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * (beta - 1.0) * (a + 1.0).powi(2) * (alpha * a + 1.0) / (beta * a * a))
}

pub fn siso_key_capacity(a: f64, alpha: f64) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0 && alpha.is_finite() && alpha >= 0.0) {
        return Err(invalid(format!("a and alpha must be finite and nonnegative, got ({a}, {alpha})")));
    }
    Ok((1.0 + a / (alpha * a + 1.0)).log2())
}

/// Least-squares high-power slopes of `R_s` and `C_key` against `log2 p_A`.
#[derive(Debug, Clone, Serialize)]
pub struct DofEstimate {
    pub rate_slope: f64,
    pub key_slope: f64,
    /// `min(n_B, (n_A - n_E)^+)`.
    pub reference: usize,
}

/// Number of singular values above `rel_tol * scale`; `scale` defaults to
/// the largest singular value.
fn numerical_rank(m: &CMatrix, rel_tol: f64, scale: Option<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let top = scale.unwrap_or_else(|| s.max());
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

const RANK_TOL: f64 = 1e-9;

/// Rank conditions under which the high-power slope equals the reference.
fn check_typical(channels: &ChannelSet) -> Result<()> {
    let (n_a, n_b, n_e) = (channels.n_a(), channels.n_b(), channels.n_e());
    for (name, m) in [("H_BA", channels.h_ba()), ("H_AB", channels.h_ab()), ("H_EA", channels.h_ea()), ("H_EB", channels.h_eb())] {
        let full = m.nrows().min(m.ncols());
        let r = numerical_rank(m, RANK_TOL, None);
        if r != full {
            return Err(SteepError::SingularChannel(format!("{name} has rank {r}, expected {full}")));
        }
    }
    let stacked = {
        let mut s = CMatrix::zeros(n_e + n_b, n_a);
        s.rows_mut(0, n_e).copy_from(channels.h_ea());
        s.rows_mut(n_e, n_b).copy_from(channels.h_ba());
        s
    };
    let r = numerical_rank(&stacked, RANK_TOL, None);
    if r != n_a.min(n_e + n_b) {
        return Err(SteepError::SingularChannel(format!("[H_EA; H_BA] has rank {r}")));
    }
    // Projection onto the complement of Eve's view of Alice's signal space.
    let (_, u) = linalg::hermitian_eigen(&linalg::gram(channels.h_ea()));
    let r_a = n_a.min(n_e);
    let u_a = u.columns(n_a - r_a, r_a).into_owned();
    let proj = linalg::identity(n_a) - &u_a * u_a.adjoint();
    let v_ba = probe_stats_unchecked(channels.h_ba())?.v_ba;
    let x = v_ba.adjoint() * proj * &v_ba;
    let g = linalg::gram(channels.h_eb());
    let g_norm = g.norm();
    let gx = g * x;
    let expected = n_b.min(n_a.saturating_sub(n_e)).min(n_e.min(n_b));
    // x has eigenvalues in [0, 1], so ||G|| bounds the product's scale.
    let r = numerical_rank(&gx, 1e-7, Some(g_norm));
    if r != expected {
        return Err(SteepError::SingularChannel(format!(
            "H_EB^H H_EB V^H P V has rank {r}, expected {expected}"
        )));
    }
    Ok(())
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slopes of the secrecy rate and key capacity in `log2 p_A` with
/// `p_B = eta_p * p_A`, fitted over the upper half of `pa_grid`.
pub fn dof_slope(channels: &ChannelSet, eta_p: f64, pa_grid: &[f64]) -> Result<DofEstimate> {
    if !(eta_p.is_finite() && eta_p > 0.0) {
        return Err(invalid(format!("eta_p must be positive, got {eta_p}")));
    }
    if pa_grid.len() < 4 {
        return Err(invalid(format!("power grid needs at least 4 points, got {}", pa_grid.len())));
    }
    if pa_grid.iter().any(|p| !(p.is_finite() && *p > 0.0)) || pa_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("power grid must be positive and strictly increasing"));
    }
    let step = (pa_grid[1] / pa_grid[0]).ln();
    if pa_grid.windows(2).any(|w| ((w[1] / w[0]).ln() - step).abs() > 1e-6 * step) {
        return Err(invalid("power grid must be log-spaced"));
    }
    if *pa_grid.last().unwrap() < 1e6 {
        return Err(invalid("largest grid power must be at least 1e6"));
    }
    if channels.n_a() < channels.n_b() {
        return Err(SteepError::UnsupportedConfiguration { n_a: channels.n_a(), n_b: channels.n_b() });
    }
    check_typical(channels)?;
    let top = &pa_grid[pa_grid.len() / 2..];
    let mut xs = Vec::with_capacity(top.len());
    let mut rates = Vec::with_capacity(top.len());
    let mut keys = Vec::with_capacity(top.len());
    for &p_a in top {
        let powers = PowerConfig::new(p_a, eta_p * p_a)?;
        let scaled = scale_channels(channels, &powers)?;
        xs.push(p_a.log2());
        rates.push(gsteep_secrecy_rate(channels, &powers)?.r_s);
        keys.push(secret_key_capacity(&scaled.h_ba_prime, &scaled.h_ea_prime)?);
    }
    Ok(DofEstimate {
        rate_slope: ls_slope(&xs, &rates),
        key_slope: ls_slope(&xs, &keys),
        reference: channels.n_b().min(channels.n_a().saturating_sub(channels.n_e())),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HighPowerGap {
    pub r_s: f64,
    pub c_key: f64,
    /// Common limit of `R_s` and `C_key` as `p_A` and `p_B / p_A` grow.
    pub limit: f64,
    pub rate_gap: f64,
    pub key_gap: f64,
}

/// Distance of `R_s` and `C_key` from their joint high-power limit, for a
/// strong Eve (`n_E >= n_A >= n_B`).
pub fn highpower_gap(channels: &ChannelSet, p_a: f64, pb_over_pa: f64) -> Result<HighPowerGap> {
    let (n_a, n_b, n_e) = (channels.n_a(), channels.n_b(), channels.n_e());
    if !(n_e >= n_a && n_a >= n_b) {
        return Err(invalid(format!("need n_E >= n_A >= n_B, got ({n_a}, {n_b}, {n_e})")));
    }
    let w = linalg::gram(channels.h_ea());
    let (eigs, _) = linalg::hermitian_eigen(&w);
    if !(eigs.max() > 0.0) || eigs.min() <= eigs.max() * 1e-13 * n_a as f64 {
        return Err(SteepError::SingularChannel("H_EA^H H_EA is singular".into()));
    }
    let powers = PowerConfig::new(p_a, pb_over_pa * p_a)?;
    let unit = probe_stats_unchecked(channels.h_ba())?;
    let vp = &unit.v_ba * linalg::real_diag(&unit.pi_prime);
    let inner = vp.adjoint() * linalg::solve_hpd(&w, &vp)?;
    let limit = linalg::log2det_hpd(&(linalg::identity(n_b) + linalg::hermitian_part(&inner)))?;

    let r_s = gsteep_unchecked(channels, &powers)?.r_s;
    let scaled = scale_channels(channels, &powers)?;
    let c_key = secret_key_capacity(&scaled.h_ba_prime, &scaled.h_ea_prime)?;
    Ok(HighPowerGap { r_s, c_key, limit, rate_gap: (r_s - limit).abs(), key_gap: (c_key - limit).abs() })
}
