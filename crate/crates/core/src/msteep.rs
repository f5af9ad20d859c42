//! Multiple access: an `n_A`-antenna access point probes `M` single-antenna
//! user equipments (UEs) at once, and each UE echoes its own probe estimate
//! plus a secret symbol over an orthogonal uplink.
//!
//! Eve's view is the stacked `y_E = [y_E1; ..; y_EM; y_EA]`. Its covariance
//! is assembled block by block and every MMSE variance is a Hermitian solve
//! against it. The scalar closed forms for `n_A = 1` and for the symmetric
//! network are evaluated alongside and checked against the matrix path.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result, SteepError};
use crate::linalg::{self, CMatrix, CVector};
use crate::rng;

const CLOSED_FORM_TOL: f64 = 1e-9;
const MSE_SLACK: f64 = 1e-10;
/// Largest `M` for which [`symmetric_analysis`] also solves the full
/// `M x M` system.
pub const SYMMETRIC_MATRIX_MAX_M: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiAccessNetwork {
    n_a: usize,
    n_e: usize,
    h: Vec<CVector>,
    h_a: Vec<CVector>,
    h_e: Vec<CVector>,
    h_ea: CMatrix,
    p_a: f64,
    p_u: Vec<f64>,
}

fn check_len(context: &'static str, v: &CVector, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(SteepError::DimensionMismatch { context, expected: n.to_string(), actual: v.len().to_string() });
    }
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(invalid(format!("{context} has non-finite entries")));
    }
    Ok(())
}

fn check_power(name: &str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and positive, got {p}")))
    }
}

impl MultiAccessNetwork {
    /// `h[i]` is AP to UE_i (length `n_A`), `h_a[i]` UE_i to AP (length
    /// `n_A`), `h_e[i]` UE_i to Eve (length `n_E`) and `h_ea` AP to Eve
    /// (`n_E x n_A`).
    pub fn new(
        h: Vec<CVector>,
        h_a: Vec<CVector>,
        h_e: Vec<CVector>,
        h_ea: CMatrix,
        p_a: f64,
        p_u: Vec<f64>,
    ) -> Result<Self> {
        let m = h.len();
        if m == 0 {
            return Err(invalid("at least one UE is required"));
        }
        if h_a.len() != m || h_e.len() != m || p_u.len() != m {
            return Err(SteepError::DimensionMismatch {
                context: "UE count",
                expected: m.to_string(),
                actual: format!("h_a {}, h_e {}, p_u {}", h_a.len(), h_e.len(), p_u.len()),
            });
        }
        let (n_e, n_a) = h_ea.shape();
        if n_a == 0 || n_e == 0 {
            return Err(invalid("antenna counts must be at least 1"));
        }
        if !linalg::all_finite(&h_ea) {
            return Err(invalid("H_EA has non-finite entries"));
        }
        for i in 0..m {
            check_len("h_i", &h[i], n_a)?;
            check_len("h_Ai", &h_a[i], n_a)?;
            check_len("h_Ei", &h_e[i], n_e)?;
            check_power("p_ui", p_u[i])?;
        }
        check_power("p_A", p_a)?;
        Ok(Self { n_a, n_e, h, h_a, h_e, h_ea, p_a, p_u })
    }

    /// Symmetric single-antenna network with every gain folded into the
    /// noise variances: probe noise `sigma2` at each UE, uplink noise
    /// `sigma2_a`, Eve's uplink noise `sigma2_e` and Eve's probe noise
    /// `sigma2_ea`.
    pub fn symmetric(sigma2: f64, sigma2_a: f64, sigma2_e: f64, sigma2_ea: f64, m: usize) -> Result<Self> {
        for (name, v) in [("sigma2", sigma2), ("sigma2_A", sigma2_a), ("sigma2_E", sigma2_e), ("sigma2_EA", sigma2_ea)] {
            check_power(name, v)?;
        }
        let one = |x: f64| CVector::from_element(1, Complex64::new(x, 0.0));
        Self::new(
            vec![one(1.0); m],
            vec![one((2.0 / sigma2_a).sqrt()); m],
            vec![one((2.0 / sigma2_e).sqrt()); m],
            CMatrix::from_element(1, 1, Complex64::new((sigma2 / sigma2_ea).sqrt(), 0.0)),
            1.0 / sigma2,
            vec![1.0; m],
        )
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }
    pub fn n_a(&self) -> usize {
        self.n_a
    }
    pub fn n_e(&self) -> usize {
        self.n_e
    }
    pub fn h(&self, i: usize) -> &CVector {
        &self.h[i]
    }
    pub fn h_a(&self, i: usize) -> &CVector {
        &self.h_a[i]
    }
    pub fn h_e(&self, i: usize) -> &CVector {
        &self.h_e[i]
    }
    pub fn h_ea(&self) -> &CMatrix {
        &self.h_ea
    }
    pub fn p_a(&self) -> f64 {
        self.p_a
    }
    pub fn p_u(&self) -> &[f64] {
        &self.p_u
    }

    pub fn with_p_u(mut self, i: usize, p: f64) -> Result<Self> {
        if i >= self.m() {
            return Err(invalid(format!("UE index {i} out of range for M = {}", self.m())));
        }
        check_power("p_ui", p)?;
        self.p_u[i] = p;
        Ok(self)
    }

    pub fn with_p_a(mut self, p: f64) -> Result<Self> {
        check_power("p_A", p)?;
        self.p_a = p;
        Ok(self)
    }

    pub fn with_h_e(mut self, i: usize, h: CVector) -> Result<Self> {
        if i >= self.m() {
            return Err(invalid(format!("UE index {i} out of range for M = {}", self.m())));
        }
        check_len("h_Ei", &h, self.n_e)?;
        self.h_e[i] = h;
        Ok(self)
    }

    pub fn with_h_ea(mut self, h: CMatrix) -> Result<Self> {
        if h.shape() != self.h_ea.shape() || !linalg::all_finite(&h) {
            return Err(invalid("H_EA must keep its shape and be finite"));
        }
        self.h_ea = h;
        Ok(self)
    }

    /// Zeroes every channel into Eve.
    pub fn without_eve(mut self) -> Self {
        for v in &mut self.h_e {
            v.fill(Complex64::new(0.0, 0.0));
        }
        self.h_ea.fill(Complex64::new(0.0, 0.0));
        self
    }

    /// Relabels the UEs so that new UE `k` is old UE `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let m = self.m();
        let mut seen = vec![false; m];
        if order.len() != m || !order.iter().all(|&i| i < m && !std::mem::replace(&mut seen[i], true)) {
            return Err(invalid(format!("{order:?} is not a permutation of 0..{m}")));
        }
        let pick = |v: &[CVector]| order.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Ok(Self {
            h: pick(&self.h),
            h_a: pick(&self.h_a),
            h_e: pick(&self.h_e),
            p_u: order.iter().map(|&i| self.p_u[i]).collect(),
            ..self.clone()
        })
    }

    pub fn h_prime(&self, i: usize) -> CVector {
        self.h[i].scale((self.p_a / self.n_a as f64).sqrt())
    }
    pub fn h_a_prime(&self, i: usize) -> CVector {
        self.h_a[i].scale(self.p_u[i].sqrt())
    }
    pub fn h_e_prime(&self, i: usize) -> CVector {
        self.h_e[i].scale(self.p_u[i].sqrt())
    }
    pub fn h_ea_prime(&self) -> CMatrix {
        self.h_ea.scale((self.p_a / self.n_a as f64).sqrt())
    }
}

/// Draws every channel entry i.i.d. `CN(0, 1)`, UE by UE (`h_i`, `h_Ai`,
/// `h_Ei`), then `H_EA`.
pub fn sample_network(m: usize, n_a: usize, n_e: usize, p_a: f64, p_u: f64, seed: u64) -> Result<MultiAccessNetwork> {
    if m == 0 || n_a == 0 || n_e == 0 {
        return Err(invalid(format!("M, n_A and n_E must be at least 1, got ({m}, {n_a}, {n_e})")));
    }
    let mut rng = rng::seeded(seed);
    let mut draw = |n: usize| CVector::from_fn(n, |_, _| rng::complex_normal(&mut rng, 1.0));
    let (mut h, mut h_a, mut h_e) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..m {
        h.push(draw(n_a));
        h_a.push(draw(n_a));
        h_e.push(draw(n_e));
    }
    let h_ea = CMatrix::from_fn(n_e, n_a, |_, _| rng::complex_normal(&mut rng, 1.0));
    MultiAccessNetwork::new(h, h_a, h_e, h_ea, p_a, vec![p_u; m])
}

/// Per-UE SNRs and probe-estimate statistics.
#[derive(Debug, Clone)]
pub struct UeStats {
    /// `S_i = (p_A / n_A) |h_i|^2`.
    pub s: Vec<f64>,
    /// `S_Ai = p_ui |h_Ai|^2`.
    pub s_a: Vec<f64>,
    /// `S_Ei = p_ui |h_Ei|^2`.
    pub s_e: Vec<f64>,
    /// `|H_EA'|_F^2`; for `n_A = 1` this is `S_EA`.
    pub s_ea: f64,
    /// Variance of `p_hat_i`.
    pub c: Vec<f64>,
    /// MSE of `p_hat_i`.
    pub d: Vec<f64>,
    /// `phi[(i, j)] = h_bar_i^T conj(h_bar_j)`.
    pub phi: CMatrix,
    /// Unit-norm `h_i`; zero when `h_i = 0`.
    pub h_bar: Vec<CVector>,
}

impl UeStats {
    /// `E{p_hat_i conj(p_hat_j)}` for `i != j`. On the diagonal the variance
    /// is `c_i`, not `c_i^2`.
    pub fn epsilon(&self, i: usize, j: usize) -> Complex64 {
        self.phi[(i, j)].scale(self.c[i] * self.c[j])
    }

    /// `E{x conj(p_hat_i)} = c_i conj(h_bar_i)`.
    pub fn r_x(&self, i: usize) -> CVector {
        self.h_bar[i].conjugate().scale(self.c[i])
    }
}

pub fn ue_stats(net: &MultiAccessNetwork) -> UeStats {
    let m = net.m();
    let s: Vec<f64> = (0..m).map(|i| net.h_prime(i).norm_squared()).collect();
    let s_a = (0..m).map(|i| net.h_a_prime(i).norm_squared()).collect();
    let s_e = (0..m).map(|i| net.h_e_prime(i).norm_squared()).collect();
    let h_bar: Vec<CVector> = net
        .h
        .iter()
        .map(|h| {
            let n = h.norm();
            if n > 0.0 {
                h.unscale(n)
            } else {
                h.clone()
            }
        })
        .collect();
    let phi = CMatrix::from_fn(m, m, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            h_bar[i].iter().zip(h_bar[j].iter()).map(|(a, b)| a * b.conj()).sum()
        }
    });
    UeStats {
        c: s.iter().map(|&x| x / (x + 1.0)).collect(),
        d: s.iter().map(|&x| 1.0 / (x + 1.0)).collect(),
        s,
        s_a,
        s_e,
        s_ea: net.h_ea_prime().norm_squared(),
        phi,
        h_bar,
    }
}

/// Rate from UE_i to the AP using only that UE's uplink and the probes.
/// `s_i = f64::INFINITY` is accepted and gives `log2(1 + S_Ai / 2)`.
pub fn ue_uplink_rate(s_i: f64, s_ai: f64) -> Result<f64> {
    if s_i.is_nan() || s_ai.is_nan() || s_i < 0.0 || s_ai < 0.0 {
        return Err(invalid(format!("SNRs must be nonnegative, got ({s_i}, {s_ai})")));
    }
    let dc = if s_i.is_infinite() { 0.0 } else { s_i / ((s_i + 1.0) * (s_i + 1.0)) };
    if s_ai.is_infinite() {
        return Ok(if dc > 0.0 { (1.0 + 1.0 / dc).log2() } else { f64::INFINITY });
    }
    let half = s_ai / 2.0;
    Ok((half / (dc * half + 1.0)).ln_1p() / std::f64::consts::LN_2)
}

/// Covariance of Eve's stacked observation. The first `conditioned` UE
/// blocks have their secret symbol removed (diagonal block
/// `c_l h'_El h'_El^H / 2 + I`).
pub fn eve_covariance(net: &MultiAccessNetwork, stats: &UeStats, conditioned: usize) -> CMatrix {
    let (m, n_e) = (net.m(), net.n_e());
    let he: Vec<CVector> = (0..m).map(|i| net.h_e_prime(i)).collect();
    let hea = net.h_ea_prime();
    let mut r = CMatrix::zeros((m + 1) * n_e, (m + 1) * n_e);
    for i in 0..m {
        for j in 0..m {
            let coef = if i == j {
                let own = if i < conditioned { stats.c[i] } else { 1.0 + stats.c[i] };
                Complex64::new(0.5 * own, 0.0)
            } else {
                stats.epsilon(i, j).scale(0.5)
            };
            r.view_mut((i * n_e, j * n_e), (n_e, n_e)).copy_from(&(&he[i] * he[j].adjoint() * coef));
        }
        let mut own = r.view_mut((i * n_e, i * n_e), (n_e, n_e));
        own += linalg::identity(n_e);
        let cross = (&he[i] * (&hea * stats.r_x(i)).adjoint()).scale(0.5f64.sqrt());
        r.view_mut((i * n_e, m * n_e), (n_e, n_e)).copy_from(&cross);
        r.view_mut((m * n_e, i * n_e), (n_e, n_e)).copy_from(&cross.adjoint());
    }
    let tail = &hea * hea.adjoint() + linalg::identity(n_e);
    r.view_mut((m * n_e, m * n_e), (n_e, n_e)).copy_from(&tail);
    r
}

/// `E{y_E conj(s_i)}`: `h'_Ei / sqrt 2` in block `i`, zero elsewhere.
pub fn eve_cross(net: &MultiAccessNetwork, i: usize) -> CVector {
    let n_e = net.n_e();
    let mut r = CVector::zeros((net.m() + 1) * n_e);
    r.rows_mut(i * n_e, n_e).copy_from(&net.h_e_prime(i).scale(0.5f64.sqrt()));
    r
}

fn unit_mse(value: f64, context: &'static str) -> Result<f64> {
    if value > -MSE_SLACK && value <= 1.0 + MSE_SLACK {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(SteepError::InternalConsistency { context, detail: format!("MSE {value} outside [0, 1]") })
    }
}

/// MSE of Eve's MMSE estimate of `s_i` from `y_E`, with the symbols of
/// the first `conditioned` UEs known to her.
pub fn eve_mse(net: &MultiAccessNetwork, stats: &UeStats, i: usize, conditioned: usize) -> Result<f64> {
    if i >= net.m() {
        return Err(invalid(format!("UE index {i} out of range for M = {}", net.m())));
    }
    let r = eve_covariance(net, stats, conditioned);
    let q = linalg::inverse_quadratic_form(&r, &eve_cross(net, i))?;
    unit_mse(1.0 - q, "Eve MSE")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveJointMse {
    /// From the full block covariance.
    pub sigma2: f64,
    /// From `gamma_1` and `S_E1`.
    pub sigma2_closed_form: f64,
    pub gamma1: f64,
    /// `log2(1 / sigma2)`.
    pub c_e1: f64,
}

/// Eve's joint estimate of UE_1's symbol (index 0).
pub fn eve_joint_mse_ue1(net: &MultiAccessNetwork, stats: &UeStats) -> Result<EveJointMse> {
    let (m, n_e) = (net.m(), net.n_e());
    let r = eve_covariance(net, stats, 0);
    let sigma2 = unit_mse(1.0 - linalg::inverse_quadratic_form(&r, &eve_cross(net, 0))?, "Eve MSE of s_1")?;

    let rest = r.view((n_e, n_e), (m * n_e, m * n_e)).into_owned();
    let hea = net.h_ea_prime();
    let mut c1 = CVector::zeros(m * n_e);
    for j in 1..m {
        let block = net.h_e_prime(j).scale(0.5f64.sqrt()) * stats.epsilon(0, j).conj();
        c1.rows_mut((j - 1) * n_e, n_e).copy_from(&block);
    }
    c1.rows_mut((m - 1) * n_e, n_e).copy_from(&(&hea * stats.r_x(0)));
    let excess = stats.c[0] - linalg::inverse_quadratic_form(&rest, &c1)?;
    if excess < -CLOSED_FORM_TOL {
        return Err(SteepError::InternalConsistency {
            context: "gamma_1",
            detail: format!("gamma_1 - 1 = {excess} is negative"),
        });
    }
    let gamma1 = 1.0 + excess.max(0.0);
    let half = stats.s_e[0] / 2.0;
    let sigma2_closed_form = ((gamma1 - 1.0) * half + 1.0) / (gamma1 * half + 1.0);
    if (sigma2 - sigma2_closed_form).abs() > CLOSED_FORM_TOL {
        return Err(SteepError::InternalConsistency {
            context: "Eve MSE of s_1",
            detail: format!("block solve {sigma2} vs gamma_1 form {sigma2_closed_form}"),
        });
    }
    let c_e1 = if sigma2 > 0.0 { -sigma2.log2() } else { f64::INFINITY };
    Ok(EveJointMse { sigma2, sigma2_closed_form, gamma1, c_e1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeSecrecy {
    pub r_a: f64,
    pub c_e: f64,
    /// `r_a - c_e` before clamping.
    pub signed: f64,
    pub r_s: f64,
}

/// Secrecy rate of UE_1 (index 0) against Eve's joint observation.
pub fn msteep_secrecy_rate_ue1(net: &MultiAccessNetwork) -> Result<UeSecrecy> {
    let stats = ue_stats(net);
    let r_a = ue_uplink_rate(stats.s[0], stats.s_a[0])?;
    let c_e = eve_joint_mse_ue1(net, &stats)?.c_e1;
    let signed = r_a - c_e;
    Ok(UeSecrecy { r_a, c_e, signed, r_s: linalg::positive_part(signed) })
}

/// How much the other UEs' echoes help Eve estimate `p_hat_1`, for a
/// single-antenna AP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T1M {
    /// Scalar recursion over UEs `2..M`.
    pub recursion: f64,
    /// `v_M^H B_M^{-1} v_M` by a direct solve.
    pub direct: f64,
    /// The recursion with the diagonal weight `1 + c_i^2` in the
    /// unconditioned blocks and a negative `t^2` term. Kept for comparison;
    /// it does not equal the quadratic form.
    pub printed_recursion: f64,
    pub s_ea: f64,
}

fn require_single_antenna_ap(net: &MultiAccessNetwork) -> Result<()> {
    if net.n_a() != 1 {
        return Err(invalid(format!("a single-antenna AP is required, got n_A = {}", net.n_a())));
    }
    Ok(())
}

/// Recursion for `t_{1,M}`. `diag[i]` is the weight of `g_i g_i^H` in the
/// unconditioned block before the `1 / (S_EA + 1)` part; `sign` is the sign
/// of the `t^2` term.
fn t1m_recursion(stats: &UeStats, g_norm2: &[f64], diag: impl Fn(usize) -> f64, sign: f64) -> f64 {
    let k = stats.s_ea + 1.0;
    let mut t = 0.0;
    for i in 1..stats.c.len() {
        let c2 = stats.c[i] * stats.c[i];
        let w = diag(i) + c2 / k - t * c2 / (k * k);
        let eta = c2 * g_norm2[i] / (w * g_norm2[i] + 1.0);
        t = t + sign * t * t * eta / (k * k) - 2.0 * t * eta / k + eta;
    }
    t
}

pub fn t1m_appendix_c(net: &MultiAccessNetwork, stats: &UeStats) -> Result<T1M> {
    require_single_antenna_ap(net)?;
    let (m, n_e) = (net.m(), net.n_e());
    let k = stats.s_ea + 1.0;
    // g_i carries the phase of h_bar_i so that every cross term is real-weighted.
    let g: Vec<CVector> = (0..m).map(|i| net.h_e_prime(i).scale(0.5f64.sqrt()) * stats.h_bar[i][0]).collect();
    let g_norm2: Vec<f64> = g.iter().map(|v| v.norm_squared()).collect();

    let recursion = t1m_recursion(stats, &g_norm2, |i| 1.0 + stats.c[i] * stats.d[i], 1.0);
    let printed_recursion = t1m_recursion(stats, &g_norm2, |_| 1.0, -1.0);

    let direct = if m == 1 {
        0.0
    } else {
        let n = (m - 1) * n_e;
        let mut v = CVector::zeros(n);
        for i in 1..m {
            v.rows_mut((i - 1) * n_e, n_e).copy_from(&g[i].scale(stats.c[i]));
        }
        let mut b = linalg::identity(n) + (&v * v.adjoint()).unscale(k);
        for i in 1..m {
            let w = 1.0 + stats.c[i] * stats.d[i];
            let mut blk = b.view_mut(((i - 1) * n_e, (i - 1) * n_e), (n_e, n_e));
            blk += (&g[i] * g[i].adjoint()).scale(w);
        }
        linalg::inverse_quadratic_form(&b, &v)?
    };

    if (recursion - direct).abs() > CLOSED_FORM_TOL * direct.max(1.0) {
        return Err(SteepError::InternalConsistency {
            context: "t_1M",
            detail: format!("recursion {recursion} vs direct {direct}"),
        });
    }
    let bound = ((m as f64) - 1.0).min(k);
    if direct < -CLOSED_FORM_TOL || (m > 1 && direct >= bound) {
        return Err(SteepError::InternalConsistency {
            context: "t_1M",
            detail: format!("t = {direct} outside [0, min(M - 1, S_EA + 1)) = [0, {bound})"),
        });
    }
    Ok(T1M { recursion, direct: direct.max(0.0), printed_recursion, s_ea: stats.s_ea })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ue1Threshold {
    /// `R_s,1 > 0` iff `S_A1` exceeds this.
    pub s_a1: f64,
    /// The same threshold expressed as UE_1's echo power.
    pub p_u1: f64,
    pub beta1: f64,
    pub t: f64,
    pub gamma1_closed_form: f64,
    pub gamma1_matrix: f64,
}

/// Threshold on UE_1's uplink SNR above which its secrecy rate is positive.
pub fn positivity_threshold_ue1(net: &MultiAccessNetwork) -> Result<Ue1Threshold> {
    require_single_antenna_ap(net)?;
    let stats = ue_stats(net);
    let ha2 = net.h_a(0).norm_squared();
    if ha2 == 0.0 {
        return Err(SteepError::DegenerateLink("h_A1 is zero, beta_1 is undefined".into()));
    }
    let beta1 = net.h_e(0).norm_squared() / ha2;
    let t = t1m_appendix_c(net, &stats)?.direct;
    let gamma1_matrix = eve_joint_mse_ue1(net, &stats)?.gamma1;

    let (s, k) = (stats.s[0], stats.s_ea + 1.0);
    let slack = 1.0 - t / k;
    let gamma1_closed_form = 1.0 + stats.c[0] * stats.d[0] * (1.0 + s / k * slack);
    if (gamma1_closed_form - gamma1_matrix).abs() > CLOSED_FORM_TOL * gamma1_matrix {
        return Err(SteepError::InternalConsistency {
            context: "gamma_1",
            detail: format!("closed form {gamma1_closed_form} vs matrix {gamma1_matrix}"),
        });
    }
    let s_a1 = if beta1 <= 1.0 {
        0.0
    } else if s == 0.0 {
        f64::INFINITY
    } else {
        2.0 * (1.0 - 1.0 / beta1) * (s + 1.0).powi(2) * k / (s * s * slack)
    };
    Ok(Ue1Threshold { s_a1, p_u1: s_a1 / ha2, beta1, t, gamma1_closed_form, gamma1_matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyTerm {
    /// `R_A|i`, a lower bound on what the AP learns about `s_i` given the
    /// earlier symbols.
    pub user_lower: f64,
    /// `I(s_i; y_E | s_1..s_{i-1})`.
    pub eve: f64,
    pub r_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalSecrecy {
    pub terms: Vec<SecrecyTerm>,
    pub total: f64,
    /// Sum of the Eve terms, `I(s; y_E)` by the chain rule.
    pub eve_total: f64,
    /// `I(s; y_E)` from two log-determinants.
    pub eve_total_direct: f64,
}

/// Chain-rule decomposition of the sum secrecy rate in the current UE order.
pub fn total_secrecy_terms(net: &MultiAccessNetwork) -> Result<TotalSecrecy> {
    let stats = ue_stats(net);
    let m = net.m();
    let mut terms = Vec::with_capacity(m);
    for i in 0..m {
        let user_lower = ue_uplink_rate(stats.s[i], stats.s_a[i])?;
        let mse = eve_mse(net, &stats, i, i)?;
        let eve = if mse > 0.0 { -mse.log2() } else { f64::INFINITY };
        terms.push(SecrecyTerm { user_lower, eve, r_s: user_lower - eve });
    }
    let eve_total: f64 = terms.iter().map(|t| t.eve).sum();
    let eve_total_direct = linalg::log2det_hpd(&eve_covariance(net, &stats, 0))?
        - linalg::log2det_hpd(&eve_covariance(net, &stats, m))?;
    if (eve_total - eve_total_direct).abs() > CLOSED_FORM_TOL * eve_total_direct.abs().max(1.0) {
        return Err(SteepError::InternalConsistency {
            context: "I(s; y_E)",
            detail: format!("chain sum {eve_total} vs log-det {eve_total_direct}"),
        });
    }
    Ok(TotalSecrecy { total: terms.iter().map(|t| t.r_s).sum(), terms, eve_total, eve_total_direct })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricParams {
    pub mu: f64,
    pub mu_p: f64,
    pub mu_ea: f64,
    pub mu_ea_p: f64,
}

impl SymmetricParams {
    fn new(sigma2: f64, sigma2_ea: f64) -> Self {
        Self {
            mu: sigma2 / (1.0 + sigma2),
            mu_p: 1.0 / (1.0 + sigma2),
            mu_ea: sigma2_ea / (1.0 + sigma2_ea),
            mu_ea_p: 1.0 / (1.0 + sigma2_ea),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricAnalysis {
    pub params: SymmetricParams,
    pub g_a: f64,
    /// Exact `g_E` from the last conditional Eve MSE.
    pub g_e: f64,
    pub g_e_closed_form: f64,
    /// `g_E` with `a_E^2 / mu'` in the denominator and `mu'_EA^2` in `a_E`.
    pub g_e_printed: f64,
    /// `g_E` from a dense `M x M` solve; `None` above
    /// [`SYMMETRIC_MATRIX_MAX_M`].
    pub g_e_matrix: Option<f64>,
    /// `g_E - g_A` in closed form.
    pub gap: f64,
    /// AP-side MSE, the same for every UE.
    pub sigma2_user: f64,
    /// Eve's MSE of `s_i` given `s_1..s_{i-1}`.
    pub sigma2_eve: Vec<f64>,
    /// `log2(sigma2_eve[i] / sigma2_user)`.
    pub terms: Vec<f64>,
    pub total: f64,
    pub descending: bool,
    pub last_positive: bool,
}

fn check_symmetric(values: &[(&str, f64)], m: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("M must be at least 1"));
    }
    values.iter().try_for_each(|&(n, v)| check_power(n, v))
}

/// Symmetric single-antenna network in closed form.
pub fn symmetric_analysis(sigma2: f64, sigma2_a: f64, sigma2_e: f64, sigma2_ea: f64, m: usize) -> Result<SymmetricAnalysis> {
    check_symmetric(&[("sigma2", sigma2), ("sigma2_A", sigma2_a), ("sigma2_E", sigma2_e), ("sigma2_EA", sigma2_ea)], m)?;
    let p = SymmetricParams::new(sigma2, sigma2_ea);
    let (mu, mu_p, mu_ea, mu_ea_p) = (p.mu, p.mu_p, p.mu_ea, p.mu_ea_p);
    let mf = m as f64;

    let g_a = mu * mu_p + sigma2_a;
    let sigma2_user = g_a / (1.0 + g_a);

    // A - c c^T / b = diag(d_l) + kappa 1 1^T; d_l drops by one once s_l is known.
    let kappa = mu_ea * mu_p * mu_p;
    let d_open = 1.0 + mu * mu_p + sigma2_e;
    let d_known = mu * mu_p + sigma2_e;
    let sigma2_eve: Vec<f64> = (0..m)
        .map(|i| {
            let sum = i as f64 / d_known + (mf - i as f64) / d_open;
            let diag_inv = (1.0 - kappa / (d_open * (1.0 + kappa * sum))) / d_open;
            1.0 - diag_inv
        })
        .collect();
    let last = sigma2_eve[m - 1];
    let g_e = last / (1.0 - last);

    let denom = sigma2_e / mu_p + mu + (mf - 1.0) * mu_ea * mu_p;
    let g_e_closed_form =
        sigma2_e + mu_p - mu_ea_p * mu_p * mu_p - (mf - 1.0) * mu_ea * mu_ea * mu_p.powi(3) / denom;
    let a_e_printed = 1.0 + mu_p + sigma2_e - mu_ea_p * mu_ea_p * mu_p * mu_p;
    let g_e_printed = sigma2_e + mu_p - mu_ea_p * mu_p * mu_p
        - (mf - 1.0) * mu_ea * mu_ea * mu_p.powi(3) / (a_e_printed * a_e_printed / mu_p + mu + (mf - 1.0) * mu_ea * mu_p);
    let gap = sigma2_e - sigma2_a + mu_p * (mu_ea * sigma2_e + mu_ea * mu_p * mu) / denom;

    let g_e_matrix = if m <= SYMMETRIC_MATRIX_MAX_M {
        let b = 1.0 + sigma2_ea;
        let a = CMatrix::from_fn(m, m, |i, j| {
            let v = if i != j {
                mu_p * mu_p
            } else if i + 1 < m {
                mu_p + sigma2_e
            } else {
                1.0 + mu_p + sigma2_e
            };
            Complex64::new(v - mu_p * mu_p / b, 0.0)
        });
        let mut e = CVector::zeros(m);
        e[m - 1] = Complex64::new(1.0, 0.0);
        let mse = 1.0 - linalg::inverse_quadratic_form(&a, &e)?;
        Some(mse / (1.0 - mse))
    } else {
        None
    };

    let terms: Vec<f64> = sigma2_eve.iter().map(|s| (s / sigma2_user).log2()).collect();
    Ok(SymmetricAnalysis {
        params: p,
        g_a,
        g_e,
        g_e_closed_form,
        g_e_printed,
        g_e_matrix,
        gap,
        sigma2_user,
        total: terms.iter().sum(),
        descending: terms.windows(2).all(|w| w[0] > w[1]),
        last_positive: terms[m - 1] > 0.0,
        sigma2_eve,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricThreshold {
    /// Largest uplink noise variance `sigma_A^2` with a positive last term.
    pub sigma2_a_bar: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `c0 / c1`, the large-`M` approximation; `None` when `c1 <= 0`.
    pub approx: Option<f64>,
}

/// Root of `c2 x^2 + c1 x - c0` for `beta0 = sigma_A^2 / sigma_E^2 > 1`.
pub fn symmetric_threshold(beta0: f64, sigma2: f64, sigma2_ea: f64, m: usize) -> Result<SymmetricThreshold> {
    check_symmetric(&[("beta0", beta0), ("sigma2", sigma2), ("sigma2_EA", sigma2_ea)], m)?;
    if beta0 <= 1.0 {
        return Err(SteepError::ThresholdNotApplicable(format!(
            "beta0 = {beta0} <= 1: the last secrecy term is positive at every power"
        )));
    }
    let SymmetricParams { mu, mu_p, mu_ea, .. } = SymmetricParams::new(sigma2, sigma2_ea);
    let mf = m as f64;
    let c2 = (beta0 - 1.0) / (beta0 * beta0 * mu_p * mu_p);
    let c1 = (beta0 - 1.0) * (mu + (mf - 1.0) * mu_ea * mu_p) / (beta0 * mu_p) - mu_ea / beta0;
    let c0 = mu_ea * mu * mu_p;
    let root = (c1 * c1 + 4.0 * c0 * c2).sqrt();
    let sigma2_a_bar = if c1 >= 0.0 { 2.0 * c0 / (c1 + root) } else { (root - c1) / (2.0 * c2) };
    if !(sigma2_a_bar.is_finite() && sigma2_a_bar > 0.0) {
        return Err(SteepError::InternalConsistency {
            context: "symmetric threshold",
            detail: format!("root {sigma2_a_bar} from c = ({c0}, {c1}, {c2})"),
        });
    }
    Ok(SymmetricThreshold { sigma2_a_bar, c0, c1, c2, approx: (c1 > 0.0).then(|| c0 / c1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsteep::{corollary1_breakdown, siso_threshold_b};
    use crate::channel_model::{ChannelSet, PowerConfig};
    use proptest::prelude::*;

    fn net(seed: u64, m: usize, n_a: usize, n_e: usize) -> MultiAccessNetwork {
        sample_network(m, n_a, n_e, 20.0, 8.0, seed).unwrap()
    }

    #[test]
    fn stats_trivial_values() {
        let n = MultiAccessNetwork::symmetric(1.0, 1.0, 1.0, 1.0, 2).unwrap();
        let s = ue_stats(&n);
        assert!((s.c[0] - 0.5).abs() < 1e-15 && (s.d[0] - 0.5).abs() < 1e-15);
        let zero = n.clone().permuted(&[1, 0]).unwrap();
        let mut h = zero.h.clone();
        h[0] = CVector::zeros(1);
        let z = MultiAccessNetwork { h, ..zero };
        let s = ue_stats(&z);
        assert_eq!((s.c[0], s.d[0]), (0.0, 1.0));
        assert_eq!(s.phi[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(s.phi[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn phi_is_hermitian_and_bounded() {
        let s = ue_stats(&net(3, 5, 3, 2));
        assert!(linalg::is_hermitian(&s.phi, 1e-14));
        assert!(s.phi.iter().all(|z| z.norm() <= 1.0 + 1e-14));
        for i in 0..5 {
            assert!((s.c[i] + s.d[i] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uplink_rate_limits() {
        assert_eq!(ue_uplink_rate(3.0, 0.0).unwrap(), 0.0);
        assert!((ue_uplink_rate(f64::INFINITY, 6.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(ue_uplink_rate(-1.0, 1.0).is_err());
    }

    #[test]
    fn uplink_rate_matches_corollary1() {
        for seed in 0..10 {
            let n = net(seed, 1, 3, 2);
            let s = ue_stats(&n);
            let ch = single_ue_channels(&n);
            let c = corollary1_breakdown(&ch, &PowerConfig::new(n.p_a(), n.p_u()[0]).unwrap()).unwrap();
            let r = ue_uplink_rate(s.s[0], s.s_a[0]).unwrap();
            assert!((r - c.breakdown.c_user).abs() < 1e-12, "{r} vs {}", c.breakdown.c_user);
        }
    }

    fn single_ue_channels(n: &MultiAccessNetwork) -> ChannelSet {
        let to_col = |v: &CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
        ChannelSet::new(to_col(n.h(0)).transpose(), to_col(n.h_a(0)), n.h_ea().clone(), to_col(n.h_e(0))).unwrap()
    }

    #[test]
    fn single_ue_matches_corollary1_eve() {
        for seed in 0..10 {
            let n = net(100 + seed, 1, 1, 2);
            let ch = single_ue_channels(&n);
            let c = corollary1_breakdown(&ch, &PowerConfig::new(n.p_a(), n.p_u()[0]).unwrap()).unwrap();
            let e = eve_joint_mse_ue1(&n, &ue_stats(&n)).unwrap();
            assert!((e.c_e1 - c.breakdown.c_eve).abs() < 1e-9, "{} vs {}", e.c_e1, c.breakdown.c_eve);
        }
    }

    #[test]
    fn deaf_eve() {
        let n = net(5, 3, 2, 2);
        let z = n.clone().with_h_e(0, CVector::zeros(2)).unwrap();
        assert_eq!(eve_joint_mse_ue1(&z, &ue_stats(&z)).unwrap().c_e1, 0.0);
        let r = msteep_secrecy_rate_ue1(&n.clone().without_eve()).unwrap();
        assert_eq!(r.r_s, r.r_a);
    }

    #[test]
    fn t1m_small_cases() {
        let n = sample_network(1, 1, 2, 5.0, 3.0, 9).unwrap();
        let t = t1m_appendix_c(&n, &ue_stats(&n)).unwrap();
        assert_eq!((t.recursion, t.direct), (0.0, 0.0));

        let n = sample_network(2, 1, 2, 5.0, 3.0, 9).unwrap();
        let s = ue_stats(&n);
        let t = t1m_appendix_c(&n, &s).unwrap();
        let g2 = s.s_e[1] / 2.0;
        let c2 = s.c[1] * s.c[1];
        let two_ue = c2 * g2 / ((1.0 + s.c[1] * s.d[1] + c2 / (s.s_ea + 1.0)) * g2 + 1.0);
        assert!((t.direct - two_ue).abs() < 1e-12);
    }

    #[test]
    fn t1m_rejects_multi_antenna_ap() {
        let n = net(1, 3, 2, 2);
        assert!(t1m_appendix_c(&n, &ue_stats(&n)).is_err());
    }

    #[test]
    fn printed_recursion_differs_from_quadratic_form() {
        let n = sample_network(5, 1, 2, 30.0, 10.0, 4).unwrap();
        let t = t1m_appendix_c(&n, &ue_stats(&n)).unwrap();
        assert!((t.printed_recursion - t.direct).abs() > 1e-6);
    }

    #[test]
    fn single_ue_threshold_matches_siso() {
        let n = sample_network(1, 1, 1, 40.0, 5.0, 17).unwrap();
        let n = n.clone().with_h_e(0, n.h_a(0).scale(1.7)).unwrap();
        let s = ue_stats(&n);
        let th = positivity_threshold_ue1(&n).unwrap();
        let a = s.s[0];
        let b = siso_threshold_b(a, s.s_ea / a, th.beta1).unwrap();
        assert!((th.s_a1 - b).abs() < 1e-9 * b);
    }

    #[test]
    fn threshold_zero_when_eve_uplink_weaker() {
        let n = sample_network(3, 1, 1, 40.0, 5.0, 2).unwrap();
        let n = n.clone().with_h_e(0, n.h_a(0).scale(0.5)).unwrap();
        assert_eq!(positivity_threshold_ue1(&n).unwrap().s_a1, 0.0);
    }

    #[test]
    fn single_ue_total_is_ue1_rate() {
        let n = net(8, 1, 2, 3);
        let tot = total_secrecy_terms(&n).unwrap();
        let r = msteep_secrecy_rate_ue1(&n).unwrap();
        assert_eq!(tot.terms.len(), 1);
        assert!((tot.total - r.signed).abs() < 1e-12);
    }

    #[test]
    fn symmetric_single_ue() {
        let a = symmetric_analysis(0.3, 0.2, 0.4, 0.1, 1).unwrap();
        assert_eq!(a.terms.len(), 1);
        assert!(a.descending);
        assert!((a.g_e - a.g_e_closed_form).abs() < 1e-12);
    }

    #[test]
    fn symmetric_threshold_rejects_weak_eve() {
        assert!(matches!(symmetric_threshold(1.0, 0.1, 0.1, 4), Err(SteepError::ThresholdNotApplicable(_))));
    }

    #[test]
    fn symmetric_threshold_blows_up_near_one() {
        let near = symmetric_threshold(1.0 + 1e-9, 0.1, 0.1, 4).unwrap();
        let far = symmetric_threshold(1.5, 0.1, 0.1, 4).unwrap();
        assert!(near.sigma2_a_bar > 1e6 * far.sigma2_a_bar);
        assert!(near.c1 < 0.0 && near.approx.is_none());
    }

    #[test]
    fn permutation_rejects_duplicates() {
        let n = net(1, 3, 1, 1);
        assert!(n.permuted(&[0, 0, 1]).is_err());
        assert!(n.permuted(&[2, 0, 1]).is_ok());
    }

    fn small_net() -> impl Strategy<Value = MultiAccessNetwork> {
        (1usize..5, 1usize..3, 1usize..3, -1.0f64..3.0, -1.0f64..3.0, any::<u64>()).prop_map(|(m, n_a, n_e, pa, pu, seed)| {
            sample_network(m, n_a, n_e, 10f64.powf(pa), 10f64.powf(pu), seed).unwrap()
        })
    }

    proptest! {
        #[test]
        fn eve_mses_are_unit_bounded_and_conditioning_helps(n in small_net()) {
            let s = ue_stats(&n);
            for i in 0..n.m() {
                let open = eve_mse(&n, &s, i, 0).unwrap();
                let known = eve_mse(&n, &s, i, i).unwrap();
                prop_assert!(open > 0.0 && open <= 1.0);
                prop_assert!(known > 0.0 && known <= open + 1e-10);
            }
        }

        #[test]
        fn gamma_excess_nonnegative(n in small_net()) {
            let e = eve_joint_mse_ue1(&n, &ue_stats(&n)).unwrap();
            prop_assert!(e.gamma1 >= 1.0);
        }

        #[test]
        fn t1m_within_bounds(m in 1usize..7, n_e in 1usize..3, pa in -1.0f64..4.0, pu in -1.0f64..4.0, seed in any::<u64>()) {
            let n = sample_network(m, 1, n_e, 10f64.powf(pa), 10f64.powf(pu), seed).unwrap();
            let t = t1m_appendix_c(&n, &ue_stats(&n)).unwrap();
            prop_assert!(t.direct >= 0.0);
            if m > 1 {
                prop_assert!(t.direct < ((m - 1) as f64).min(t.s_ea + 1.0));
            }
        }

        #[test]
        fn symmetric_chain_descends(s in -2.0f64..1.0, sa in -2.0f64..1.0, se in -2.0f64..1.0, sea in -2.0f64..1.0, m in 1usize..12) {
            let a = symmetric_analysis(10f64.powf(s), 10f64.powf(sa), 10f64.powf(se), 10f64.powf(sea), m).unwrap();
            prop_assert!(a.descending);
            prop_assert!((a.g_e - a.g_e_closed_form).abs() < 1e-9 * a.g_e.max(1.0));
            prop_assert!((a.g_e - a.g_e_matrix.unwrap()).abs() < 1e-9 * a.g_e.max(1.0));
            prop_assert!(((a.g_e - a.g_a) - a.gap).abs() < 1e-9 * a.g_e.max(1.0));
            prop_assert_eq!(a.last_positive, a.gap > 0.0);
        }
    }
}
