//! Physical channel containers, power scaling, random channel draws and the
//! classic wiretap-channel baselines.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result, SteepError};
use crate::linalg::{self, CMatrix, CVector};
use crate::rng;

/// The four complex channel matrices between Alice, Bob and Eve.
///
/// `h_ba` is Alice to Bob (`n_B x n_A`), `h_ab` Bob to Alice (`n_A x n_B`),
/// `h_ea` Alice to Eve (`n_E x n_A`) and `h_eb` Bob to Eve (`n_E x n_B`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    n_a: usize,
    n_b: usize,
    n_e: usize,
    h_ba: CMatrix,
    h_ab: CMatrix,
    h_ea: CMatrix,
    h_eb: CMatrix,
}

fn check_shape(context: &'static str, m: &CMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(SteepError::DimensionMismatch {
            context,
            expected: format!("{rows}x{cols}"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if !linalg::all_finite(m) {
        return Err(invalid(format!("{context} has non-finite entries")));
    }
    Ok(())
}

impl ChannelSet {
    /// Builds a channel set, inferring antenna counts from `h_ba` and `h_ea`.
    pub fn new(h_ba: CMatrix, h_ab: CMatrix, h_ea: CMatrix, h_eb: CMatrix) -> Result<Self> {
        let (n_b, n_a) = h_ba.shape();
        let n_e = h_ea.nrows();
        if n_a == 0 || n_b == 0 || n_e == 0 {
            return Err(invalid("antenna counts must be at least 1"));
        }
        check_shape("H_BA", &h_ba, n_b, n_a)?;
        check_shape("H_AB", &h_ab, n_a, n_b)?;
        check_shape("H_EA", &h_ea, n_e, n_a)?;
        check_shape("H_EB", &h_eb, n_e, n_b)?;
        Ok(Self { n_a, n_b, n_e, h_ba, h_ab, h_ea, h_eb })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }
    pub fn n_b(&self) -> usize {
        self.n_b
    }
    pub fn n_e(&self) -> usize {
        self.n_e
    }
    pub fn h_ba(&self) -> &CMatrix {
        &self.h_ba
    }
    pub fn h_ab(&self) -> &CMatrix {
        &self.h_ab
    }
    pub fn h_ea(&self) -> &CMatrix {
        &self.h_ea
    }
    pub fn h_eb(&self) -> &CMatrix {
        &self.h_eb
    }

    pub fn with_h_ba(self, h: CMatrix) -> Result<Self> {
        Self::new(h, self.h_ab, self.h_ea, self.h_eb)
    }
    pub fn with_h_ab(self, h: CMatrix) -> Result<Self> {
        Self::new(self.h_ba, h, self.h_ea, self.h_eb)
    }
    pub fn with_h_ea(self, h: CMatrix) -> Result<Self> {
        Self::new(self.h_ba, self.h_ab, h, self.h_eb)
    }
    pub fn with_h_eb(self, h: CMatrix) -> Result<Self> {
        Self::new(self.h_ba, self.h_ab, self.h_ea, h)
    }

    /// Same set with both of Eve's channels zeroed.
    pub fn without_eve(self) -> Self {
        let (n_e, n_a, n_b) = (self.n_e, self.n_a, self.n_b);
        Self { h_ea: CMatrix::zeros(n_e, n_a), h_eb: CMatrix::zeros(n_e, n_b), ..self }
    }
}

/// Probe power `p_a` (Alice) and echo power bound `p_b` (Bob).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerConfig {
    pub p_a: f64,
    pub p_b: f64,
}

impl PowerConfig {
    pub fn new(p_a: f64, p_b: f64) -> Result<Self> {
        let p = Self { p_a, p_b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_a.is_finite() && self.p_a > 0.0 && self.p_b.is_finite() && self.p_b > 0.0) {
            return Err(invalid(format!("powers must be finite and positive, got p_A={}, p_B={}", self.p_a, self.p_b)));
        }
        Ok(())
    }
}

/// Power-scaled channels. Single-primed matrices carry the full link power
/// per antenna, the double-primed echo matrices additionally split Bob's
/// power evenly between the probe estimate and the message.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledChannelSet {
    pub h_ba_prime: CMatrix,
    pub h_ea_prime: CMatrix,
    pub h_ab_prime: CMatrix,
    pub h_eb_prime: CMatrix,
    pub h_ab_dprime: CMatrix,
    pub h_eb_dprime: CMatrix,
}

impl ScaledChannelSet {
    /// Inverts [`scale_channels`].
    pub fn unscale(&self, powers: &PowerConfig) -> Result<ChannelSet> {
        let n_a = self.h_ba_prime.ncols() as f64;
        let n_b = self.h_ba_prime.nrows() as f64;
        let ka = (n_a / powers.p_a).sqrt();
        let kb = (n_b / powers.p_b).sqrt();
        ChannelSet::new(
            self.h_ba_prime.scale(ka),
            self.h_ab_prime.scale(kb),
            self.h_ea_prime.scale(ka),
            self.h_eb_prime.scale(kb),
        )
    }
}

/// Draws every channel entry i.i.d. from `CN(0, 1)`.
pub fn sample_channels(n_a: usize, n_b: usize, n_e: usize, seed: u64) -> Result<ChannelSet> {
    if n_a == 0 || n_b == 0 || n_e == 0 {
        return Err(invalid(format!("antenna counts must be at least 1, got ({n_a}, {n_b}, {n_e})")));
    }
    let mut rng = rng::seeded(seed);
    let mut draw = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng::complex_normal(&mut rng, 1.0));
    let h_ba = draw(n_b, n_a);
    let h_ab = draw(n_a, n_b);
    let h_ea = draw(n_e, n_a);
    let h_eb = draw(n_e, n_b);
    ChannelSet::new(h_ba, h_ab, h_ea, h_eb)
}

pub fn scale_channels(channels: &ChannelSet, powers: &PowerConfig) -> Result<ScaledChannelSet> {
    powers.validate()?;
    let ka = (powers.p_a / channels.n_a as f64).sqrt();
    let kb = (powers.p_b / channels.n_b as f64).sqrt();
    let half = 0.5f64.sqrt();
    let h_ab_prime = channels.h_ab.scale(kb);
    let h_eb_prime = channels.h_eb.scale(kb);
    Ok(ScaledChannelSet {
        h_ba_prime: channels.h_ba.scale(ka),
        h_ea_prime: channels.h_ea.scale(ka),
        h_ab_dprime: h_ab_prime.scale(half),
        h_eb_dprime: h_eb_prime.scale(half),
        h_ab_prime,
        h_eb_prime,
    })
}

const COVARIANCE_TOL: f64 = 1e-9;

/// Secrecy rate of the classic Alice-to-Bob wiretap code for a Gaussian
/// input with covariance `k_x` (not optimised over `k_x`), in bits per
/// channel use.
pub fn classic_wtc_rate(channels: &ChannelSet, powers: &PowerConfig, k_x: &CMatrix) -> Result<f64> {
    powers.validate()?;
    let n_a = channels.n_a;
    if k_x.shape() != (n_a, n_a) {
        return Err(SteepError::DimensionMismatch {
            context: "K_x",
            expected: format!("{n_a}x{n_a}"),
            actual: format!("{}x{}", k_x.nrows(), k_x.ncols()),
        });
    }
    if !linalg::all_finite(k_x) || !linalg::is_hermitian(k_x, COVARIANCE_TOL * k_x.norm().max(1.0)) {
        return Err(invalid("K_x must be finite and Hermitian"));
    }
    let min_eig = linalg::min_eigenvalue(k_x);
    if min_eig < -COVARIANCE_TOL {
        return Err(invalid(format!("K_x is not positive semidefinite (min eigenvalue {min_eig:e})")));
    }
    let trace = k_x.trace().re;
    if trace > n_a as f64 + COVARIANCE_TOL {
        return Err(invalid(format!("trace(K_x) = {trace} exceeds n_A = {n_a}")));
    }
    let snr = powers.p_a / n_a as f64;
    let bob = linalg::identity(channels.n_b) + (&channels.h_ba * k_x * channels.h_ba.adjoint()).scale(snr);
    let eve = linalg::identity(channels.n_e) + (&channels.h_ea * k_x * channels.h_ea.adjoint()).scale(snr);
    Ok(linalg::positive_part(linalg::log2det_hpd(&bob)? - linalg::log2det_hpd(&eve)?))
}

/// Minimum generalized eigenpair of `(H_EA^H H_EA, H_BA^H H_BA)`.
#[derive(Debug, Clone)]
pub struct StrengthRatio {
    pub alpha: f64,
    /// Unit-norm minimiser of `||H_EA v||^2 / ||H_BA v||^2`.
    pub direction: CVector,
}

/// Smallest ratio of Eve's to Bob's received energy over all transmit
/// directions of Alice. The classic scheme has positive secrecy capacity
/// iff this is below one.
pub fn channel_strength_ratio_alpha(h_ea: &CMatrix, h_ba: &CMatrix) -> Result<StrengthRatio> {
    let n_a = h_ba.ncols();
    if h_ea.ncols() != n_a {
        return Err(SteepError::DimensionMismatch {
            context: "H_EA columns",
            expected: n_a.to_string(),
            actual: h_ea.ncols().to_string(),
        });
    }
    if h_ba.nrows() < n_a {
        return Err(SteepError::RatioUndefined(format!(
            "H_BA^H H_BA is singular since n_B = {} < n_A = {n_a}",
            h_ba.nrows()
        )));
    }
    let denom = linalg::gram(h_ba);
    let (eigs, _) = linalg::hermitian_eigen(&denom);
    let top = eigs.max();
    if !(top > 0.0) || eigs.min() <= top * 1e-13 * n_a as f64 {
        return Err(SteepError::RatioUndefined("H_BA does not have full column rank".into()));
    }
    let chol = linalg::hpd_cholesky(&denom, "H_BA^H H_BA")
        .map_err(|_| SteepError::RatioUndefined("H_BA^H H_BA is not positive definite".into()))?;
    let l = chol.l();
    let numer = linalg::gram(h_ea);
    // whitened = L^{-1} W L^{-H}
    let y = l.solve_lower_triangular(&numer).expect("nonsingular Cholesky factor");
    let whitened = l.solve_lower_triangular(&y.adjoint()).expect("nonsingular Cholesky factor");
    let (values, vectors) = linalg::hermitian_eigen(&whitened);
    let u = vectors.column(0).into_owned();
    let v = l
        .adjoint()
        .solve_upper_triangular(&u)
        .expect("nonsingular Cholesky factor");
    let norm = v.norm();
    Ok(StrengthRatio { alpha: values[0].max(0.0), direction: v.unscale(norm) })
}

/// Convenience for building complex matrices from real/imag pairs in row-major order.
pub fn cmatrix(rows: usize, cols: usize, entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&(re, im)| Complex64::new(re, im)))
}
