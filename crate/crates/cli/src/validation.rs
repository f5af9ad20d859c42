//! Validation suites: closed forms against the Monte Carlo oracle, identities
//! between computation paths, and the analytical propositions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use steep_core::gsteep::{
    corollary1_breakdown, dof_slope, gsteep_secrecy_rate, highpower_gap, siso_key_capacity, siso_secrecy_rate,
    siso_threshold_b,
};
use steep_core::linalg::{self, CVector};
use steep_core::mc_oracle::{mc_classic_rate, mc_gsteep, mc_msteep, mc_psteep, Z_LIMIT};
use steep_core::msteep::{
    msteep_secrecy_rate_ue1, positivity_threshold_ue1, sample_network, symmetric_analysis, symmetric_threshold,
    t1m_appendix_c, total_secrecy_terms, ue_stats,
};
use steep_core::psteep::{error_ratio_bound, psk_error_params, psteep_power_condition};
use steep_core::{
    rng, sample_channels, ChannelSet, Complex64, McReport, MultiAccessNetwork, PowerConfig, PskConfig, SisoSnr,
    SteepError, Verdict,
};

use crate::config::{Suite, ValidationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported, not gated.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Largest accepted `|value - reference|`.
    pub tolerance: f64,
    pub z: Option<f64>,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub info: usize,
}

/// How the gated oracle z-scores are distributed. With a calibrated oracle
/// about 0.27% exceed 3 and the chi-square is close to its degrees of
/// freedom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub gated: usize,
    pub beyond_limit: usize,
    pub z_limit: f64,
    pub chi_square: f64,
    pub dof: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub config: ValidationConfig,
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub oracle_calibration: Option<Calibration>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

struct Ctx {
    seed: u64,
    scale: f64,
}

impl Ctx {
    /// `|value - reference| <= tol * scale`.
    fn close(&self, suite: &'static str, name: impl Into<String>, value: f64, reference: f64, tol: f64, detail: String) -> Check {
        let tolerance = tol * self.scale;
        let ok = (value - reference).abs() <= tolerance;
        Check { suite, name: name.into(), value, reference, tolerance, z: None, status: status(ok), detail }
    }

    /// `value < bound * scale`.
    fn below(&self, suite: &'static str, name: impl Into<String>, value: f64, bound: f64, detail: String) -> Check {
        let tolerance = bound * self.scale;
        Check { suite, name: name.into(), value, reference: 0.0, tolerance, z: None, status: status(value < tolerance), detail }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        rng::seeded(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// A property that must hold on every instance: value is the number of
/// violations.
fn count_check(suite: &'static str, name: impl Into<String>, violations: usize, total: usize, first: Option<String>) -> Check {
    Check {
        suite,
        name: name.into(),
        value: violations as f64,
        reference: 0.0,
        tolerance: 0.0,
        z: None,
        status: status(violations == 0),
        detail: match first {
            Some(f) => format!("{violations} of {total} instances violate; first: {f}"),
            None => format!("{total} instances"),
        },
    }
}

fn error_check(suite: &'static str, name: impl Into<String>, e: &SteepError) -> Check {
    Check {
        suite,
        name: name.into(),
        value: f64::NAN,
        reference: f64::NAN,
        tolerance: 0.0,
        z: None,
        status: Status::Fail,
        detail: e.to_string(),
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest deviation over a set of instances and where it happened.
#[derive(Default)]
struct Worst {
    dev: f64,
    at: String,
    error: Option<String>,
}

impl Worst {
    fn add(&mut self, dev: f64, at: impl FnOnce() -> String) {
        if !(dev <= self.dev) {
            self.dev = dev;
            self.at = at();
        }
    }

    fn fail(&mut self, at: String, e: &SteepError) {
        if self.error.is_none() {
            self.error = Some(format!("{at}: {e}"));
        }
        self.dev = f64::NAN;
    }

    fn check(self, ctx: &Ctx, suite: &'static str, name: &str, tol: f64, n: usize) -> Check {
        let detail = match &self.error {
            Some(e) => e.clone(),
            None => format!("max relative deviation over {n} instances, at {}", self.at),
        };
        ctx.close(suite, name, self.dev, 0.0, tol, detail)
    }
}

// ---------------------------------------------------------------- oracle cases

const GSTEEP_DIMS: [(usize, usize, usize); 8] =
    [(1, 1, 1), (2, 1, 1), (2, 2, 2), (3, 2, 2), (2, 1, 3), (3, 3, 2), (4, 2, 3), (2, 2, 1)];

#[derive(Debug, Clone)]
pub struct GsteepCase {
    pub channels: ChannelSet,
    pub powers: PowerConfig,
}

#[derive(Debug, Clone)]
pub struct PsteepCase {
    pub cfg: PskConfig,
    pub snr: SisoSnr,
}

#[derive(Debug, Clone)]
pub struct OracleCases {
    pub gsteep: Vec<GsteepCase>,
    pub psteep: Vec<PsteepCase>,
    pub msteep: Vec<MultiAccessNetwork>,
    pub classic: Vec<GsteepCase>,
}

/// Largest Eve error rate admitted for `M >= 4`, where the nearest-neighbour
/// symbol-error formula is accurate to well within one standard error.
const PSK_MAX_PE_HIGHER_ORDER: f64 = 0.02;
const PSK_MAX_PE: f64 = 0.3;
const PSK_MIN_PE: f64 = 1e-3;
const CLASSIC_MIN_RATE: f64 = 0.2;

/// `a` such that Alice's symbol-error rate equals `target` with `b = ratio * a`.
fn solve_probe_snr(cfg: &PskConfig, target: f64, ratio: f64, alpha: f64, beta: f64) -> Result<f64, SteepError> {
    let pe = |a: f64| psk_error_params(cfg, &SisoSnr::new(a, ratio * a, alpha, beta)?).map(|p| p.p_e_a);
    let (mut lo, mut hi) = (1e-3f64.ln(), 1e8f64.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pe(mid.exp())? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Random oracle configurations; fixed by `seed` alone.
pub fn oracle_cases(seed: u64, count: usize) -> Result<OracleCases, SteepError> {
    let ctx = Ctx { seed, scale: 1.0 };
    let mut r = ctx.rng(1);
    let mut gsteep = Vec::with_capacity(count);
    for k in 0..count {
        let (n_a, n_b, n_e) = GSTEEP_DIMS[k % GSTEEP_DIMS.len()];
        let channels = sample_channels(n_a, n_b, n_e, r.random())?;
        let powers = PowerConfig::new(log_uniform(&mut r, 1.0, 100.0), log_uniform(&mut r, 1.0, 100.0))?;
        gsteep.push(GsteepCase { channels, powers });
    }

    let mut r = ctx.rng(2);
    let mut psteep = Vec::with_capacity(count);
    while psteep.len() < count {
        let cfg = PskConfig::new([2, 4, 8][psteep.len() % 3])?;
        let (lo, limit) = if cfg.order() == 2 { (0.5, PSK_MAX_PE) } else { (1.0, PSK_MAX_PE_HIGHER_ORDER) };
        let target = log_uniform(&mut r, 1e-3, 1e-2);
        let ratio = log_uniform(&mut r, 0.5, 4.0);
        let alpha = r.random_range(lo..3.0);
        let beta = r.random_range(lo..3.0);
        let a = solve_probe_snr(&cfg, target, ratio, alpha, beta)?;
        let snr = SisoSnr::new(a, ratio * a, alpha, beta)?;
        let p_e_e = psk_error_params(&cfg, &snr)?.p_e_e;
        if (PSK_MIN_PE..=limit).contains(&p_e_e) {
            psteep.push(PsteepCase { cfg, snr });
        }
    }

    let mut r = ctx.rng(3);
    let mut msteep = Vec::with_capacity(count);
    for _ in 0..count {
        let m = r.random_range(1..=4usize);
        let n_a = r.random_range(1..=2usize);
        let n_e = r.random_range(1..=2usize);
        let p_a = log_uniform(&mut r, 1.0, 30.0);
        let mut net = sample_network(m, n_a, n_e, p_a, log_uniform(&mut r, 1.0, 30.0), r.random())?;
        for i in 1..m {
            net = net.with_p_u(i, log_uniform(&mut r, 1.0, 30.0))?;
        }
        msteep.push(net);
    }

    let mut r = ctx.rng(4);
    let mut classic = Vec::with_capacity(count);
    while classic.len() < count {
        let (n_a, n_b, n_e) = GSTEEP_DIMS[classic.len() % GSTEEP_DIMS.len()];
        let channels = sample_channels(n_a, n_b, n_e, r.random())?;
        let powers = PowerConfig::new(log_uniform(&mut r, 1.0, 100.0), 1.0)?;
        if steep_core::classic_wtc_rate(&channels, &powers, &linalg::identity(n_a))? >= CLASSIC_MIN_RATE {
            classic.push(GsteepCase { channels, powers });
        }
    }
    Ok(OracleCases { gsteep, psteep, msteep, classic })
}

fn mc_seed(seed: u64, idx: usize) -> u64 {
    seed.wrapping_add(1000 + idx as u64)
}

fn report_checks(ctx: &Ctx, suite: &'static str, prefix: &str, result: Result<Vec<McReport>, SteepError>) -> Vec<Check> {
    let reports = match result {
        Ok(r) => r,
        Err(e) => return vec![error_check(suite, prefix, &e)],
    };
    let limit = Z_LIMIT * ctx.scale;
    reports
        .into_iter()
        .map(|r| {
            let status = match r.verdict {
                Verdict::Ungated => Status::Info,
                _ => status(r.z.abs() <= limit),
            };
            Check {
                suite,
                name: format!("{prefix}.{}", r.quantity),
                value: r.empirical,
                reference: r.analytic,
                tolerance: limit * r.std_error,
                z: Some(r.z),
                status,
                detail: format!("n = {}, se = {:e}", r.n_samples, r.std_error),
            }
        })
        .collect()
}

fn psteep_oracle(ctx: &Ctx, cases: &OracleCases, symbols: usize) -> Vec<Check> {
    cases
        .psteep
        .iter()
        .enumerate()
        .flat_map(|(k, c)| {
            let prefix = format!("psteep[{k}] M={} a={:.4} b={:.4} alpha={:.4} beta={:.4}", c.cfg.order(), c.snr.a, c.snr.b, c.snr.alpha, c.snr.beta);
            report_checks(ctx, "oracle", &prefix, mc_psteep(&c.cfg, &c.snr, symbols, mc_seed(ctx.seed, k)))
        })
        .collect()
}

fn oracle_suite(ctx: &Ctx, cases: &OracleCases, cfg: &ValidationConfig, psteep: &[Check]) -> Vec<Check> {
    let n = cfg.samples.mc_samples;
    let mut out = Vec::new();
    for (k, c) in cases.gsteep.iter().enumerate() {
        let prefix = format!("gsteep[{k}] {}x{}x{}", c.channels.n_a(), c.channels.n_b(), c.channels.n_e());
        out.extend(report_checks(ctx, "oracle", &prefix, mc_gsteep(&c.channels, &c.powers, n, mc_seed(ctx.seed, k))));
    }
    out.extend_from_slice(psteep);
    for (k, net) in cases.msteep.iter().enumerate() {
        let prefix = format!("msteep[{k}] M={} n_A={} n_E={}", net.m(), net.n_a(), net.n_e());
        out.extend(report_checks(ctx, "oracle", &prefix, mc_msteep(net, n, mc_seed(ctx.seed, k))));
    }
    for (k, c) in cases.classic.iter().enumerate() {
        let prefix = format!("classic[{k}] {}x{}x{}", c.channels.n_a(), c.channels.n_b(), c.channels.n_e());
        let k_x = linalg::identity(c.channels.n_a());
        out.extend(report_checks(ctx, "oracle", &prefix, mc_classic_rate(&c.channels, &c.powers, &k_x, n, mc_seed(ctx.seed, k))));
    }
    out
}

fn calibration(checks: &[Check]) -> Option<Calibration> {
    let z: Vec<f64> = checks
        .iter()
        .filter(|c| c.suite == "oracle" && c.status != Status::Info)
        .filter_map(|c| c.z)
        .collect();
    if z.is_empty() {
        return None;
    }
    Some(Calibration {
        gated: z.len(),
        beyond_limit: z.iter().filter(|z| !(z.abs() <= Z_LIMIT)).count(),
        z_limit: Z_LIMIT,
        chi_square: z.iter().map(|z| z * z).sum(),
        dof: z.len(),
    })
}

// -------------------------------------------------------------------- anchor

fn anchor_suite(ctx: &Ctx) -> Vec<Check> {
    let run = || error_ratio_bound(&PskConfig::new(2)?, &SisoSnr::new(100.0, 1000.0, 2.0, 2.0)?);
    match run() {
        Ok(b) => vec![ctx.close("anchor", "error_ratio_exponent", b.p, 26.4, 0.05, "M = 2, a = 100, b = 1000, alpha = beta = 2".into())],
        Err(e) => vec![error_check("anchor", "error_ratio_exponent", &e)],
    }
}

// ----------------------------------------------------------------- crosspath

const CROSS_TOL: f64 = 1e-9;
const CROSS_INSTANCES: usize = 50;

fn breakdown_dev(x: &steep_core::SecrecyBreakdown, y: &steep_core::SecrecyBreakdown) -> f64 {
    rel_dev(x.c_user, y.c_user).max(rel_dev(x.c_eve, y.c_eve)).max(rel_dev(x.r_s, y.r_s))
}

fn crosspath_suite(ctx: &Ctx) -> Vec<Check> {
    let mut r = ctx.rng(10);
    let mut corollary = Worst::default();
    let mut siso = Worst::default();
    for k in 0..CROSS_INSTANCES {
        let n_a = if k % 2 == 0 { 1 } else { r.random_range(2..=4) };
        let n_e = r.random_range(1..=3);
        let at = format!("instance {k} ({n_a}x1x{n_e})");
        let run = |r: &mut ChaCha8Rng| -> Result<(f64, Option<f64>), SteepError> {
            let channels = sample_channels(n_a, 1, n_e, r.random())?;
            let powers = PowerConfig::new(log_uniform(r, 0.1, 1e3), log_uniform(r, 0.1, 1e3))?;
            let g = gsteep_secrecy_rate(&channels, &powers)?;
            let c = corollary1_breakdown(&channels, &powers)?;
            let s = if n_a == 1 {
                Some(breakdown_dev(&g, &siso_secrecy_rate(&SisoSnr::from_channels(&channels, &powers)?)?))
            } else {
                None
            };
            Ok((breakdown_dev(&g, &c.breakdown), s))
        };
        match run(&mut r) {
            Ok((c, s)) => {
                corollary.add(c, || at.clone());
                if let Some(s) = s {
                    siso.add(s, || at.clone());
                }
            }
            Err(e) => corollary.fail(at, &e),
        }
    }
    vec![
        corollary.check(ctx, "crosspath", "gsteep_vs_corollary1", CROSS_TOL, CROSS_INSTANCES),
        siso.check(ctx, "crosspath", "gsteep_vs_siso", CROSS_TOL, CROSS_INSTANCES / 2),
    ]
}

// ----------------------------------------------------------------- appendix C

fn appendix_c_suite(ctx: &Ctx, draws: usize) -> Vec<Check> {
    let mut r = ctx.rng(20);
    let mut worst = Worst::default();
    for k in 0..CROSS_INSTANCES {
        let m = r.random_range(2..=8);
        let n_e = r.random_range(1..=3);
        let at = format!("instance {k} (M = {m}, n_E = {n_e})");
        let run = |r: &mut ChaCha8Rng| -> Result<f64, SteepError> {
            let net = sample_network(m, 1, n_e, log_uniform(r, 1.0, 100.0), log_uniform(r, 1.0, 100.0), r.random())?;
            let t = t1m_appendix_c(&net, &ue_stats(&net))?;
            Ok(rel_dev(t.recursion, t.direct))
        };
        match run(&mut r) {
            Ok(d) => worst.add(d, || at),
            Err(e) => worst.fail(at, &e),
        }
    }
    let mut out = vec![worst.check(ctx, "appendixC", "t1m_recursion_vs_direct", CROSS_TOL, CROSS_INSTANCES)];

    let mut violations = 0;
    let mut first = None;
    for k in 0..draws {
        let m = r.random_range(2..=8);
        let n_e = r.random_range(1..=2);
        let run = |r: &mut ChaCha8Rng| -> Result<Option<String>, SteepError> {
            let net = sample_network(m, 1, n_e, log_uniform(r, 0.1, 1e3), log_uniform(r, 0.1, 1e3), r.random())?;
            let t = t1m_appendix_c(&net, &ue_stats(&net))?;
            let bound = ((m - 1) as f64).min(t.s_ea + 1.0);
            Ok((!(t.direct >= 0.0 && t.direct < bound)).then(|| format!("draw {k}: t = {} vs bound {bound}", t.direct)))
        };
        let bad = match run(&mut r) {
            Ok(v) => v,
            Err(e) => Some(format!("draw {k}: {e}")),
        };
        if let Some(b) = bad {
            violations += 1;
            first.get_or_insert(b);
        }
    }
    out.push(count_check("appendixC", "t1m_bound", violations, draws, first));
    out
}

// ----------------------------------------------------------------- appendix D

fn appendix_d_suite(ctx: &Ctx) -> Vec<Check> {
    let mut r = ctx.rng(30);
    let mut closed = Worst::default();
    let mut general = Worst::default();
    let mut descending = 0;
    let mut first = None;
    const N: usize = 30;
    for k in 0..N {
        let m = r.random_range(1..=12);
        let p = [0; 4].map(|_| log_uniform(&mut r, 0.01, 2.0));
        let at = format!("instance {k} (M = {m}, sigma2 = {:.4}, sigma2_A = {:.4}, sigma2_E = {:.4}, sigma2_EA = {:.4})", p[0], p[1], p[2], p[3]);
        let run = || -> Result<(f64, f64, bool), SteepError> {
            let a = symmetric_analysis(p[0], p[1], p[2], p[3], m)?;
            let g_m = a.g_e_matrix.expect("small M has a matrix path");
            let tot = total_secrecy_terms(&MultiAccessNetwork::symmetric(p[0], p[1], p[2], p[3], m)?)?;
            let dev = tot.terms.iter().zip(&a.terms).map(|(t, s)| rel_dev(t.r_s, *s)).fold(rel_dev(tot.total, a.total), f64::max);
            Ok((rel_dev(a.g_e_closed_form, g_m).max(rel_dev(a.g_e, g_m)), dev, a.descending))
        };
        match run() {
            Ok((c, g, d)) => {
                closed.add(c, || at.clone());
                general.add(g, || at.clone());
                if !d {
                    descending += 1;
                    first.get_or_insert(at);
                }
            }
            Err(e) => closed.fail(at, &e),
        }
    }
    vec![
        closed.check(ctx, "appendixD", "g_e_closed_form_vs_matrix", CROSS_TOL, N),
        general.check(ctx, "appendixD", "symmetric_vs_general_path", CROSS_TOL, N),
        count_check("appendixD", "terms_descending", descending, N, first),
    ]
}

// --------------------------------------------------------------- propositions

const SIGN_STEP: f64 = 1e-3;

fn prop3(ctx: &Ctx) -> Check {
    let mut r = ctx.rng(40);
    let mut violations = 0;
    let mut first = None;
    const N: usize = 20;
    for k in 0..N {
        let (a, alpha, beta) = (log_uniform(&mut r, 0.1, 1e3), log_uniform(&mut r, 0.1, 10.0), 1.0 + log_uniform(&mut r, 1e-2, 10.0));
        let run = || -> Result<bool, SteepError> {
            let b_bar = siso_threshold_b(a, alpha, beta)?;
            let rate = |b: f64| siso_secrecy_rate(&SisoSnr::new(a, b, alpha, beta)?).map(|x| x.r_s);
            Ok(rate(b_bar * (1.0 - SIGN_STEP))? == 0.0 && rate(b_bar * (1.0 + SIGN_STEP))? > 0.0)
        };
        let ok = run().unwrap_or(false);
        if !ok {
            violations += 1;
            first.get_or_insert(format!("draw {k}: a = {a}, alpha = {alpha}, beta = {beta}"));
        }
    }
    count_check("propositions", "prop3_threshold_sign_change", violations, N, first)
}

const DOF_DIMS: [(usize, usize, usize); 4] = [(4, 2, 1), (2, 2, 2), (3, 1, 2), (3, 2, 3)];

fn prop1(ctx: &Ctx) -> Vec<Check> {
    let grid: Vec<f64> = (0..=8).map(|k| 10f64.powf(4.0 + 0.5 * k as f64)).collect();
    let mut r = ctx.rng(41);
    let mut out = Vec::new();
    for dims in DOF_DIMS {
        let name = format!("prop1_dof {}x{}x{}", dims.0, dims.1, dims.2);
        let run = |r: &mut ChaCha8Rng| dof_slope(&sample_channels(dims.0, dims.1, dims.2, r.random())?, 10.0, &grid);
        match run(&mut r) {
            Ok(d) => {
                let want = d.reference as f64;
                let tol = 0.05 * want.max(1.0);
                let detail = format!("p_A in [1e4, 1e8], p_B = 10 p_A, reference {}", d.reference);
                out.push(ctx.close("propositions", format!("{name}.rate_slope"), d.rate_slope, want, tol, detail.clone()));
                out.push(ctx.close("propositions", format!("{name}.key_slope"), d.key_slope, want, tol, detail));
            }
            Err(e) => out.push(error_check("propositions", name, &e)),
        }
    }
    out
}

const PROP2_DIMS: [(usize, usize, usize); 5] = [(1, 1, 1), (1, 1, 2), (2, 1, 2), (2, 2, 3), (3, 2, 3)];
/// Every channel eigenmode must carry at least this much gain for
/// `(p_A, p_B / p_A) = (1e4, 1e3)` to be high power on all of them.
const PROP2_MODE_FLOOR: f64 = 0.2;
const PROP2_SURVEY: usize = 200;
const PROP2_GAP: f64 = 0.05;

fn weakest_mode(c: &ChannelSet) -> f64 {
    [c.h_ba(), c.h_ab(), c.h_ea(), c.h_eb()]
        .into_iter()
        .map(|h| h.clone().singular_values().min().powi(2))
        .fold(f64::INFINITY, f64::min)
}

fn prop2(ctx: &Ctx) -> Vec<Check> {
    let mut r = ctx.rng(42);
    let mut out = Vec::new();
    for dims in PROP2_DIMS {
        let name = format!("prop2_convergence {}x{}x{}", dims.0, dims.1, dims.2);
        let run = |r: &mut ChaCha8Rng| -> Result<_, SteepError> {
            let c = loop {
                let c = sample_channels(dims.0, dims.1, dims.2, r.random())?;
                if weakest_mode(&c) >= PROP2_MODE_FLOOR {
                    break c;
                }
            };
            Ok((highpower_gap(&c, 1e4, 1e3)?, highpower_gap(&c, 1e2, 10.0)?))
        };
        match run(&mut r) {
            Ok((near, far)) => {
                let detail = format!("limit {}, gap {} at (1e2, 10)", near.limit, far.rate_gap);
                out.push(ctx.below("propositions", format!("{name}.gap"), near.rate_gap, PROP2_GAP, detail));
                out.push(Check {
                    suite: "propositions",
                    name: format!("{name}.shrinks"),
                    value: near.rate_gap,
                    reference: far.rate_gap,
                    tolerance: 0.0,
                    z: None,
                    status: status(near.rate_gap < far.rate_gap),
                    detail: "gap at (1e4, 1e3) below gap at (1e2, 10)".into(),
                });
            }
            Err(e) => out.push(error_check("propositions", name.clone(), &e)),
        }
        let survey = |r: &mut ChaCha8Rng| -> Result<usize, SteepError> {
            let mut met = 0;
            for _ in 0..PROP2_SURVEY {
                let c = sample_channels(dims.0, dims.1, dims.2, r.random())?;
                met += usize::from(highpower_gap(&c, 1e4, 1e3)?.rate_gap < PROP2_GAP);
            }
            Ok(met)
        };
        if let Ok(met) = survey(&mut r) {
            out.push(Check {
                suite: "propositions",
                name: format!("{name}.unconstrained_fraction"),
                value: met as f64 / PROP2_SURVEY as f64,
                reference: 1.0,
                tolerance: 0.0,
                z: None,
                status: Status::Info,
                detail: format!("share of {PROP2_SURVEY} unconditioned draws with gap < {PROP2_GAP} at (1e4, 1e3)"),
            });
        }
    }
    match siso_secrecy_rate(&SisoSnr { a: 1e4, b: 1e7, alpha: 1.0, beta: 1.0 }) {
        Ok(x) => out.push(ctx.close("propositions", "prop2_siso_anchor", x.r_s, 1.0, 0.02, "a = 1e4, b = 1e7, alpha = beta = 1".into())),
        Err(e) => out.push(error_check("propositions", "prop2_siso_anchor", &e)),
    }
    out
}

const PROP4_AXIS_A: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
const PROP4_AXIS_B: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
const PROP4_AXIS_ALPHA: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
const PROP4_BETAS: [f64; 3] = [1.0, 2.0, 10.0];
const PROP4_WEAK_BETAS: [f64; 6] = [0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-6];

fn prop4() -> Vec<Check> {
    let mut violations = 0;
    let mut first = None;
    let mut total = 0;
    for &a in &PROP4_AXIS_A {
        for &b in &PROP4_AXIS_B {
            for &alpha in &PROP4_AXIS_ALPHA {
                for &beta in &PROP4_BETAS {
                    total += 1;
                    let run = || -> Result<(f64, f64), SteepError> {
                        Ok((siso_key_capacity(a, alpha)?, siso_secrecy_rate(&SisoSnr::new(a, b, alpha, beta)?)?.r_s))
                    };
                    let ok = matches!(run(), Ok((key, rate)) if key > rate);
                    if !ok {
                        violations += 1;
                        first.get_or_insert(format!("a = {a}, b = {b}, alpha = {alpha}, beta = {beta}"));
                    }
                }
            }
        }
    }
    let mut out = vec![count_check("propositions", "prop4_key_exceeds_rate", violations, total, first)];

    let b_search: Vec<f64> = (0..=26).map(|k| 10f64.powf(-1.0 + 0.5 * k as f64)).collect();
    let mut missing = 0;
    let mut first = None;
    for &a in &PROP4_AXIS_A {
        for &alpha in &PROP4_AXIS_ALPHA {
            let key = siso_key_capacity(a, alpha).unwrap_or(f64::INFINITY);
            let found = PROP4_WEAK_BETAS.iter().any(|&beta| {
                b_search.iter().any(|&b| {
                    SisoSnr::new(a, b, alpha, beta).and_then(|s| siso_secrecy_rate(&s)).is_ok_and(|x| x.r_s > key)
                })
            });
            if !found {
                missing += 1;
                first.get_or_insert(format!("a = {a}, alpha = {alpha}"));
            }
        }
    }
    out.push(count_check("propositions", "prop4_weak_echo_eve_beats_key", missing, 25, first));
    out
}

/// Puts Eve's uplink to UE 1 on a stronger path than the AP's so the
/// threshold exists.
fn strong_eve_uplink(net: MultiAccessNetwork, factor: f64) -> Result<MultiAccessNetwork, SteepError> {
    let norm = net.h_a(0).norm();
    let he = CVector::from_fn(net.n_e(), |k, _| Complex64::new(if k == 0 { norm * factor } else { 0.0 }, 0.0));
    net.with_h_e(0, he)
}

fn prop6(ctx: &Ctx) -> Vec<Check> {
    let mut r = ctx.rng(43);
    let mut out = Vec::new();
    for m in [1usize, 2, 4, 8] {
        let name = format!("prop6_ue1_threshold M={m}");
        let run = |r: &mut ChaCha8Rng| -> Result<(bool, f64), SteepError> {
            let net = strong_eve_uplink(sample_network(m, 1, 2, 300.0, 50.0, r.random())?, 1.6)?;
            let th = positivity_threshold_ue1(&net)?;
            let signed = |p: f64| msteep_secrecy_rate_ue1(&net.clone().with_p_u(0, p)?).map(|s| s.signed);
            Ok((signed(th.p_u1 * (1.0 - SIGN_STEP))? < 0.0 && signed(th.p_u1 * (1.0 + SIGN_STEP))? > 0.0, th.p_u1))
        };
        match run(&mut r) {
            Ok((ok, p)) => out.push(Check {
                suite: "propositions",
                name,
                value: p,
                reference: p,
                tolerance: 0.0,
                z: None,
                status: status(ok),
                detail: "R_s,1 changes sign across p_u1 (1 -/+ 1e-3)".into(),
            }),
            Err(e) => out.push(error_check("propositions", name, &e)),
        }
    }
    out
}

fn prop7(ctx: &Ctx) -> Vec<Check> {
    let mut r = ctx.rng(44);
    let mut out = Vec::new();

    let mut violations = 0;
    let mut first = None;
    const N: usize = 20;
    for k in 0..N {
        let m = [1usize, 2, 4, 8, 64][k % 5];
        let (s, sa, sea) = (log_uniform(&mut r, 0.01, 1.0), log_uniform(&mut r, 0.01, 1.0), log_uniform(&mut r, 0.01, 1.0));
        let se = sa / r.random_range(0.1..=1.0);
        let ok = symmetric_analysis(s, sa, se, sea, m).is_ok_and(|a| a.last_positive);
        if !ok {
            violations += 1;
            first.get_or_insert(format!("M = {m}, sigma2 = {s}, sigma2_A = {sa}, sigma2_E = {se}, sigma2_EA = {sea}"));
        }
    }
    out.push(count_check("propositions", "prop7_equal_or_weaker_eve_stays_positive", violations, N, first));

    let (beta0, s, sea) = (2.0, 0.1, 0.05);
    for m in [1usize, 4, 10, 100] {
        let name = format!("prop7_threshold M={m}");
        let at = |sa: f64| symmetric_analysis(s, sa, sa / beta0, sea, m);
        let run = || -> Result<(bool, f64, f64), SteepError> {
            let bar = symmetric_threshold(beta0, s, sea, m)?.sigma2_a_bar;
            let sign = at(bar * (1.0 - SIGN_STEP))?.last_positive && !at(bar * (1.0 + SIGN_STEP))?.last_positive;
            let (mut lo, mut hi) = (bar * 0.5, bar * 2.0);
            while hi - lo > 1e-13 * hi {
                let mid = 0.5 * (lo + hi);
                if at(mid)?.last_positive {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((sign, bar, at(bar)?.gap))
        };
        match run() {
            Ok((sign, bar, residual)) => {
                out.push(Check {
                    suite: "propositions",
                    name: format!("{name}.sign_change"),
                    value: bar,
                    reference: bar,
                    tolerance: 0.0,
                    z: None,
                    status: status(sign),
                    detail: "last term changes sign across sigma2_A_bar (1 -/+ 1e-3), beta0 = 2".into(),
                });
                out.push(ctx.close("propositions", format!("{name}.residual"), residual, 0.0, 1e-8, "g_E - g_A at sigma2_A_bar".into()));
            }
            Err(e) => out.push(error_check("propositions", name, &e)),
        }
    }

    let scaling = || -> Result<f64, SteepError> {
        let a = symmetric_threshold(beta0, s, sea, 1000)?.sigma2_a_bar;
        let b = symmetric_threshold(beta0, s, sea, 2000)?.sigma2_a_bar;
        Ok((a * 1000.0) / (b * 2000.0))
    };
    match scaling() {
        Ok(ratio) => out.push(ctx.close("propositions", "prop7_threshold_scaling", ratio, 1.0, 0.1, "M sigma2_A_bar at M = 1000 over M = 2000".into())),
        Err(e) => out.push(error_check("propositions", "prop7_threshold_scaling", &e)),
    }
    out
}

fn propositions_suite(ctx: &Ctx) -> Vec<Check> {
    let mut out = Vec::new();
    out.extend(prop1(ctx));
    out.extend(prop2(ctx));
    out.push(prop3(ctx));
    out.extend(prop4());
    out.extend(prop6(ctx));
    out.extend(prop7(ctx));
    out
}

// -------------------------------------------------------------------- psteep

fn psteep_suite(ctx: &Ctx, draws: usize, oracle: &[Check]) -> Vec<Check> {
    let mut r = ctx.rng(50);
    let mut violations = 0;
    let mut first = None;
    for k in 0..draws {
        let order = [2u32, 4, 8][r.random_range(0..3usize)];
        let snr = SisoSnr {
            a: log_uniform(&mut r, 0.1, 100.0),
            b: log_uniform(&mut r, 0.1, 100.0),
            alpha: log_uniform(&mut r, 0.1, 10.0),
            beta: log_uniform(&mut r, 0.1, 10.0),
        };
        let run = || -> Result<bool, SteepError> {
            let cond = psteep_power_condition(&snr)?;
            let p = psk_error_params(&PskConfig::new(order)?, &snr)?;
            Ok(cond == (p.eps_a < p.eps_e) && cond == (p.p_e_a < p.p_e_e))
        };
        if !run().unwrap_or(false) {
            violations += 1;
            first.get_or_insert(format!("draw {k}: M = {order}, {snr:?}"));
        }
    }
    let mut out = vec![count_check("psteep", "power_condition_equivalences", violations, draws, first)];

    let gated: Vec<&Check> = oracle.iter().filter(|c| c.status != Status::Info).collect();
    let failed: Vec<&Check> = gated.iter().copied().filter(|c| c.status == Status::Fail).collect();
    out.push(Check {
        suite: "psteep",
        name: "symbol_error_rates_within_3se".into(),
        value: failed.len() as f64,
        reference: 0.0,
        tolerance: 0.0,
        z: None,
        status: status(failed.is_empty() && !gated.is_empty()),
        detail: match failed.first() {
            Some(c) => format!("{} of {} outside; first: {}", failed.len(), gated.len(), c.name),
            None => format!("{} oracle error rates", gated.len()),
        },
    });
    out
}

// --------------------------------------------------------------------- runner

/// Runs the selected suites in their canonical order. Check failures are
/// collected; nothing here is fatal.
pub fn run_validation(config: &ValidationConfig) -> ValidationReport {
    let ctx = Ctx { seed: config.seed, scale: config.tolerance_scale };
    let wants = |s: Suite| config.suites.contains(&s);
    let mut checks = Vec::new();

    let cases = if wants(Suite::Oracle) || wants(Suite::Psteep) {
        Some(oracle_cases(config.seed, config.samples.oracle_configs))
    } else {
        None
    };
    let psk = match &cases {
        Some(Ok(c)) => psteep_oracle(&ctx, c, config.samples.psk_symbols),
        Some(Err(e)) => vec![error_check("oracle", "oracle_cases", e)],
        None => Vec::new(),
    };

    for suite in Suite::ALL.into_iter().filter(|s| wants(*s)) {
        match suite {
            Suite::Anchor => checks.extend(anchor_suite(&ctx)),
            Suite::Oracle => match &cases {
                Some(Ok(c)) => checks.extend(oracle_suite(&ctx, c, config, &psk)),
                _ => checks.extend(psk.iter().cloned()),
            },
            Suite::CrossPath => checks.extend(crosspath_suite(&ctx)),
            Suite::Propositions => checks.extend(propositions_suite(&ctx)),
            Suite::AppendixC => checks.extend(appendix_c_suite(&ctx, config.samples.draws)),
            Suite::AppendixD => checks.extend(appendix_d_suite(&ctx)),
            Suite::Psteep => checks.extend(psteep_suite(&ctx, config.samples.draws, &psk)),
        }
    }

    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary { total: checks.len(), passed: count(Status::Pass), failed: count(Status::Fail), info: count(Status::Info) };
    ValidationReport {
        seed: config.seed,
        config: config.clone(),
        oracle_calibration: calibration(&checks),
        passed: summary.failed == 0,
        summary,
        checks,
    }
}
