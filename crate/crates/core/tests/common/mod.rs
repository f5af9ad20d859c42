#![allow(dead_code)]
//! Independent oracles: every signal is written as a linear map of one
//! white vector, so covariances are `G G^H` and MMSE quantities come from
//! plain Schur complements with LU determinants.

use nalgebra::DMatrix;
use steep_core::linalg::CMatrix;
use steep_core::{ChannelSet, Complex64, PowerConfig};

pub fn det_log2(m: &CMatrix) -> f64 {
    let d = m.clone().lu().determinant();
    assert!(d.im.abs() <= 1e-9 * d.re.abs().max(1e-300), "complex determinant {d}");
    d.re.log2()
}

pub fn inv(m: &CMatrix) -> CMatrix {
    m.clone().try_inverse().expect("invertible")
}

/// Error covariance of the MMSE estimate of `x` from `y`, given generator
/// rows for each (`x = Gx z`, `y = Gy z`, `z` white).
pub fn mmse_error(gx: &CMatrix, gy: &CMatrix) -> CMatrix {
    let rxx = gx * gx.adjoint();
    let rxy = gx * gy.adjoint();
    let ryy = gy * gy.adjoint();
    rxx - &rxy * inv(&ryy) * rxy.adjoint()
}

/// Stacks generator blocks vertically.
pub fn vstack(blocks: &[&CMatrix]) -> CMatrix {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Generator layout for the two-phase protocol. The white vector is
/// `[x_A, w_B, s, w_A, w_EA, w_EB]`.
pub struct Protocol {
    pub x_a: CMatrix,
    pub p_hat: CMatrix,
    pub s: CMatrix,
    pub y_b: CMatrix,
    pub y_a: CMatrix,
    pub y_ea: CMatrix,
    pub y_eb: CMatrix,
}

fn selector(n_total: usize, offset: usize, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n_total);
    for i in 0..n {
        m[(i, offset + i)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Effective-probe basis from the top eigenvectors of `H^H H` (not the SVD).
pub fn probe_basis(h_ba: &CMatrix) -> CMatrix {
    let n_b = h_ba.nrows();
    let n_a = h_ba.ncols();
    let eig = (h_ba.adjoint() * h_ba).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n_a).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = CMatrix::zeros(n_a, n_b);
    for (j, &i) in idx.iter().take(n_b).enumerate() {
        v.set_column(j, &eig.eigenvectors.column(i));
    }
    v
}

/// Protocol generators with Bob's effective-probe basis `v` (`n_A x n_B`).
/// Eve's rate depends on the column phases of `v` when `n_B >= 2`, so
/// cross-checks must use the same basis as the code under test.
pub fn protocol_with_basis(c: &ChannelSet, p: &PowerConfig, v: &CMatrix) -> Protocol {
    let (n_a, n_b, n_e) = (c.n_a(), c.n_b(), c.n_e());
    let total = n_a + n_b + n_b + n_a + n_e + n_e;
    let x_a = selector(total, 0, n_a);
    let w_b = selector(total, n_a, n_b);
    let s = selector(total, n_a + n_b, n_b);
    let w_a = selector(total, n_a + 2 * n_b, n_a);
    let w_ea = selector(total, 2 * n_a + 2 * n_b, n_e);
    let w_eb = selector(total, 2 * n_a + 2 * n_b + n_e, n_e);
    let ka = Complex64::new((p.p_a / n_a as f64).sqrt(), 0.0);
    let kb = Complex64::new((p.p_b / (2.0 * n_b as f64)).sqrt(), 0.0);
    let h_ba = c.h_ba() * ka;
    let h_ea = c.h_ea() * ka;
    let h_ab = c.h_ab() * kb;
    let h_eb = c.h_eb() * kb;
    let y_b = &h_ba * &x_a + &w_b;
    let p_gen = v.adjoint() * &x_a;
    // MMSE estimate of p from y_B.
    let ryy = &y_b * y_b.adjoint();
    let rpy = &p_gen * y_b.adjoint();
    let p_hat = rpy * inv(&ryy) * &y_b;
    let echo = &p_hat + &s;
    let y_a = &h_ab * &echo + w_a;
    let y_ea = &h_ea * &x_a + w_ea;
    let y_eb = &h_eb * &echo + w_eb;
    Protocol { x_a, p_hat, s, y_b, y_a, y_ea, y_eb }
}

/// `I(s; obs)` in bits via the MSE determinant.
pub fn mutual_info(s: &CMatrix, obs: &CMatrix) -> f64 {
    -det_log2(&mmse_error(s, obs))
}

pub fn real(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn protocol(c: &ChannelSet, p: &PowerConfig) -> Protocol {
    let scaled = steep_core::scale_channels(c, p).unwrap();
    let v = steep_core::gsteep::effective_probe_stats(&scaled.h_ba_prime).unwrap().v_ba;
    protocol_with_basis(c, p, &v)
}

/// Generators for the multiple-access protocol. The white vector is
/// `[x, w_1..w_M, s_1..s_M, w_A1..w_AM, w_E1..w_EM, w_EA]`.
pub struct MultiProtocol {
    pub x: CMatrix,
    pub p_hat: Vec<CMatrix>,
    pub s: Vec<CMatrix>,
    pub y_a: Vec<CMatrix>,
    pub y_e: Vec<CMatrix>,
    pub y_ea: CMatrix,
}

impl MultiProtocol {
    /// Eve's stacked observation, skipping the UEs in `skip`.
    pub fn y_e_stack(&self, skip: &[usize]) -> CMatrix {
        let mut blocks: Vec<&CMatrix> =
            (0..self.y_e.len()).filter(|i| !skip.contains(i)).map(|i| &self.y_e[i]).collect();
        blocks.push(&self.y_ea);
        vstack(&blocks)
    }
}

pub fn multi_protocol(net: &steep_core::msteep::MultiAccessNetwork) -> MultiProtocol {
    let (m, n_a, n_e) = (net.m(), net.n_a(), net.n_e());
    let total = n_a + 2 * m + m * n_a + m * n_e + n_e;
    let x = selector(total, 0, n_a);
    let ka = Complex64::new((net.p_a() / n_a as f64).sqrt(), 0.0);
    let half = Complex64::new(0.5f64.sqrt(), 0.0);
    let col = |v: &steep_core::linalg::CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let mut p_hat = Vec::new();
    let mut s = Vec::new();
    let mut y_a = Vec::new();
    let mut y_e = Vec::new();
    for i in 0..m {
        let h = col(net.h(i));
        let y_i = h.transpose() * ka * &x + selector(total, n_a + i, 1);
        let norm = h.norm();
        let p_i = if norm > 0.0 { h.transpose() * Complex64::new(1.0 / norm, 0.0) * &x } else { CMatrix::zeros(1, total) };
        let ryy = &y_i * y_i.adjoint();
        let rpy = &p_i * y_i.adjoint();
        let ph = rpy * inv(&ryy) * &y_i;
        let s_i = selector(total, n_a + m + i, 1);
        let echo = (&ph + &s_i) * half;
        let pu = Complex64::new(net.p_u()[i].sqrt(), 0.0);
        y_a.push(col(net.h_a(i)) * pu * &echo + selector(total, n_a + 2 * m + i * n_a, n_a));
        y_e.push(col(net.h_e(i)) * pu * &echo + selector(total, n_a + 2 * m + m * n_a + i * n_e, n_e));
        p_hat.push(ph);
        s.push(s_i);
    }
    let y_ea = net.h_ea() * ka * &x + selector(total, total - n_e, n_e);
    MultiProtocol { x, p_hat, s, y_a, y_e, y_ea }
}
