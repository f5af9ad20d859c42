//! Parameter sweeps: one row per grid point, in grid order.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use steep_core::gsteep::{self, siso_key_capacity, siso_secrecy_rate, siso_threshold_b};
use steep_core::msteep::{positivity_threshold_ue1, sample_network, symmetric_analysis, symmetric_threshold, total_secrecy_terms};
use steep_core::channel_model::cmatrix;
use steep_core::mc_oracle::{mc_classic_rate, mc_gsteep, mc_msteep, mc_psteep, mc_symmetric};
use steep_core::psteep::psteep_secrecy_rate;
use steep_core::{
    classic_wtc_rate, linalg, sample_channels, scale_channels, ChannelSet, McReport, PowerConfig, PskConfig, SisoSnr,
    SteepError,
};

use crate::config::{Format, Scheme, SweepSpec, AXES, INTEGER_AXES};
use crate::CliError;

/// Which parameter set a sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    GsteepSiso,
    GsteepMimo,
    Psteep,
    MsteepSymmetric,
    MsteepRandom,
    Classic,
}

const MODES: [(Scheme, Mode, &[&str]); 6] = [
    (Scheme::Gsteep, Mode::GsteepSiso, &["a", "b", "alpha", "beta"]),
    (Scheme::Gsteep, Mode::GsteepMimo, &["n_a", "n_b", "n_e", "p_a", "p_b"]),
    (Scheme::Psteep, Mode::Psteep, &["a", "b", "alpha", "beta", "psk_order"]),
    (Scheme::Msteep, Mode::MsteepSymmetric, &["users", "sigma2", "sigma2_a", "sigma2_e", "sigma2_ea"]),
    (Scheme::Msteep, Mode::MsteepRandom, &["users", "n_a", "n_e", "p_a", "p_u"]),
    (Scheme::Classic, Mode::Classic, &["n_a", "n_b", "n_e", "p_a"]),
];

/// A validated sweep: mode and expanded axes.
#[derive(Debug, Clone)]
pub struct Plan {
    pub mode: Mode,
    pub axes: Vec<(&'static str, Vec<f64>)>,
    pub rows: usize,
}

pub fn plan(spec: &SweepSpec) -> Result<Plan, CliError> {
    let present = spec.grid.present();
    let candidates: Vec<_> = MODES.iter().filter(|(s, _, _)| *s == spec.scheme).collect();
    let mode = candidates
        .iter()
        .find(|(_, _, axes)| axes.len() == present.len() && axes.iter().all(|a| present.contains(a)))
        .map(|(_, m, _)| *m)
        .ok_or_else(|| {
            let options: Vec<String> = candidates.iter().map(|(_, _, a)| format!("{{{}}}", a.join(", "))).collect();
            CliError::Config(format!(
                "scheme {} needs exactly one of the parameter sets {}; got {{{}}}",
                spec.scheme.name(),
                options.join(" or "),
                present.join(", ")
            ))
        })?;
    let axes = spec.grid.expand()?;
    let mut rows: usize = 1;
    for (name, values) in &axes {
        rows = rows
            .checked_mul(values.len())
            .filter(|&r| r <= spec.max_rows)
            .ok_or_else(|| CliError::Config(format!("grid exceeds max_rows = {} (at axis {name})", spec.max_rows)))?;
    }
    Ok(Plan { mode, axes, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scheme: &'static str,
    /// Input parameters in [`AXES`] order; `None` when not part of the sweep.
    pub params: Vec<Option<f64>>,
    pub c_user: Option<f64>,
    pub c_eve: Option<f64>,
    pub r_s: Option<f64>,
    pub c_key: Option<f64>,
    pub threshold: Option<f64>,
    pub warning: Option<String>,
    pub error: Option<String>,
}

#[derive(Default)]
struct Outputs {
    c_user: Option<f64>,
    c_eve: Option<f64>,
    r_s: Option<f64>,
    c_key: Option<f64>,
    threshold: Option<f64>,
    warning: Option<String>,
}

struct Point<'a>(&'a [Option<f64>]);

impl Point<'_> {
    fn get(&self, name: &str) -> f64 {
        let i = AXES.iter().position(|a| *a == name).expect("known axis");
        self.0[i].expect("axis present by plan")
    }

    fn count(&self, name: &str) -> usize {
        self.get(name) as usize
    }
}

/// Thresholds that are simply not defined at a point are left empty.
fn optional(r: Result<f64, SteepError>) -> Result<Option<f64>, SteepError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(SteepError::ThresholdNotApplicable(_) | SteepError::BoundNotApplicable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn evaluate(mode: Mode, p: &Point, seed: u64) -> Result<Outputs, SteepError> {
    match mode {
        Mode::GsteepSiso => {
            let snr = SisoSnr::new(p.get("a"), p.get("b"), p.get("alpha"), p.get("beta"))?;
            let r = siso_secrecy_rate(&snr)?;
            Ok(Outputs {
                c_user: Some(r.c_user),
                c_eve: Some(r.c_eve),
                r_s: Some(r.r_s),
                c_key: Some(siso_key_capacity(snr.a, snr.alpha)?),
                threshold: Some(siso_threshold_b(snr.a, snr.alpha, snr.beta)?),
                warning: None,
            })
        }
        Mode::GsteepMimo => {
            let channels = sample_channels(p.count("n_a"), p.count("n_b"), p.count("n_e"), seed)?;
            let powers = PowerConfig::new(p.get("p_a"), p.get("p_b"))?;
            let r = gsteep::gsteep_secrecy_rate(&channels, &powers)?;
            let scaled = scale_channels(&channels, &powers)?;
            Ok(Outputs {
                c_user: Some(r.c_user),
                c_eve: Some(r.c_eve),
                r_s: Some(r.r_s),
                c_key: Some(gsteep::secret_key_capacity(&scaled.h_ba_prime, &scaled.h_ea_prime)?),
                ..Outputs::default()
            })
        }
        Mode::Psteep => {
            let order = p.get("psk_order");
            let cfg = PskConfig::new(if order <= u32::MAX as f64 { order as u32 } else { 0 })?;
            let snr = SisoSnr::new(p.get("a"), p.get("b"), p.get("alpha"), p.get("beta"))?;
            let r = psteep_secrecy_rate(&cfg, &snr)?;
            Ok(Outputs { c_user: Some(r.c_user), c_eve: Some(r.c_eve), r_s: Some(r.r_s), warning: r.warning, ..Outputs::default() })
        }
        Mode::MsteepSymmetric => {
            let (s, sa, se, sea, m) = (p.get("sigma2"), p.get("sigma2_a"), p.get("sigma2_e"), p.get("sigma2_ea"), p.count("users"));
            let a = symmetric_analysis(s, sa, se, sea, m)?;
            let c_user = -(m as f64) * a.sigma2_user.log2();
            let c_eve = a.sigma2_eve.iter().map(|v| -v.log2()).sum();
            let threshold = if se > 0.0 { optional(symmetric_threshold(sa / se, s, sea, m).map(|t| t.sigma2_a_bar))? } else { None };
            Ok(Outputs { c_user: Some(c_user), c_eve: Some(c_eve), r_s: Some(a.total), threshold, ..Outputs::default() })
        }
        Mode::MsteepRandom => {
            let net = sample_network(p.count("users"), p.count("n_a"), p.count("n_e"), p.get("p_a"), p.get("p_u"), seed)?;
            let t = total_secrecy_terms(&net)?;
            let threshold = if net.n_a() == 1 { Some(positivity_threshold_ue1(&net)?.p_u1) } else { None };
            Ok(Outputs {
                c_user: Some(t.terms.iter().map(|x| x.user_lower).sum()),
                c_eve: Some(t.eve_total),
                r_s: Some(t.total),
                threshold,
                ..Outputs::default()
            })
        }
        Mode::Classic => {
            let channels = sample_channels(p.count("n_a"), p.count("n_b"), p.count("n_e"), seed)?;
            let powers = PowerConfig::new(p.get("p_a"), 1.0)?;
            let k_x = linalg::identity(channels.n_a());
            let snr = powers.p_a / channels.n_a() as f64;
            let info = |h: &linalg::CMatrix| linalg::log2det_hpd(&(linalg::identity(h.nrows()) + (h * h.adjoint()).scale(snr)));
            Ok(Outputs {
                c_user: Some(info(channels.h_ba())?),
                c_eve: Some(info(channels.h_ea())?),
                r_s: Some(classic_wtc_rate(&channels, &powers, &k_x)?),
                ..Outputs::default()
            })
        }
    }
}

/// Parameter vectors for every grid point in lexicographic order.
fn points(plan: &Plan) -> Vec<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(plan.rows);
    let mut idx = vec![0usize; plan.axes.len()];
    for _ in 0..plan.rows {
        let mut params = vec![None; AXES.len()];
        for ((name, values), &i) in plan.axes.iter().zip(&idx) {
            let slot = AXES.iter().position(|a| a == name).expect("known axis");
            params[slot] = Some(values[i]);
        }
        out.push(params);
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < plan.axes[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Runs every grid point; failures are recorded in the row's `error`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<Row>, CliError> {
    let plan = plan(spec)?;
    let scheme = spec.scheme.name();
    Ok(points(&plan)
        .into_par_iter()
        .map(|params| {
            let (out, error) = match evaluate(plan.mode, &Point(&params), spec.seed) {
                Ok(o) => (o, None),
                Err(e) => (Outputs::default(), Some(e.to_string())),
            };
            Row {
                scheme,
                params,
                c_user: out.c_user,
                c_eve: out.c_eve,
                r_s: out.r_s,
                c_key: out.c_key,
                threshold: out.threshold,
                warning: out.warning,
                error,
            }
        })
        .collect())
}

/// Parameters of a one-point sweep, in [`AXES`] order.
pub fn single_point(spec: &SweepSpec) -> Result<(Mode, Vec<Option<f64>>), CliError> {
    let plan = plan(spec)?;
    if plan.rows != 1 {
        return Err(CliError::Config(format!("expected a single point, the grid has {} rows", plan.rows)));
    }
    Ok((plan.mode, points(&plan).remove(0)))
}

/// Monte Carlo oracle run at a single point. SISO G-STEEP points use unit
/// channels with the SNRs carried by the powers.
pub fn run_mc(spec: &SweepSpec, samples: usize) -> Result<Vec<McReport>, CliError> {
    let (mode, params) = single_point(spec)?;
    let p = Point(&params);
    let seed = spec.seed;
    let reports = match mode {
        Mode::GsteepSiso => {
            let unit = |g: f64| cmatrix(1, 1, &[(g.sqrt(), 0.0)]);
            let channels = ChannelSet::new(unit(1.0), unit(1.0), unit(p.get("alpha")), unit(p.get("beta")))?;
            mc_gsteep(&channels, &PowerConfig::new(p.get("a"), p.get("b"))?, samples, seed)?
        }
        Mode::GsteepMimo => {
            let channels = sample_channels(p.count("n_a"), p.count("n_b"), p.count("n_e"), seed)?;
            mc_gsteep(&channels, &PowerConfig::new(p.get("p_a"), p.get("p_b"))?, samples, seed)?
        }
        Mode::Psteep => {
            let cfg = PskConfig::new(p.get("psk_order") as u32)?;
            let snr = SisoSnr::new(p.get("a"), p.get("b"), p.get("alpha"), p.get("beta"))?;
            mc_psteep(&cfg, &snr, samples, seed)?
        }
        Mode::MsteepSymmetric => mc_symmetric(
            p.get("sigma2"),
            p.get("sigma2_a"),
            p.get("sigma2_e"),
            p.get("sigma2_ea"),
            p.count("users"),
            samples,
            seed,
        )?,
        Mode::MsteepRandom => {
            let net = sample_network(p.count("users"), p.count("n_a"), p.count("n_e"), p.get("p_a"), p.get("p_u"), seed)?;
            mc_msteep(&net, samples, seed)?
        }
        Mode::Classic => {
            let channels = sample_channels(p.count("n_a"), p.count("n_b"), p.count("n_e"), seed)?;
            let k_x = linalg::identity(channels.n_a());
            mc_classic_rate(&channels, &PowerConfig::new(p.get("p_a"), 1.0)?, &k_x, samples, seed)?
        }
    };
    Ok(reports)
}

pub const OUTPUT_COLUMNS: [&str; 6] = ["c_user", "c_eve", "r_s", "c_key", "threshold", "warning"];

/// Header of the CSV output.
pub fn header() -> Vec<&'static str> {
    let mut h = vec!["scheme"];
    h.extend(AXES);
    h.extend(OUTPUT_COLUMNS);
    h.push("error");
    h
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn csv_record(row: &Row) -> Vec<String> {
    let mut rec = vec![row.scheme.to_string()];
    for (name, v) in AXES.iter().zip(&row.params) {
        rec.push(match v {
            Some(x) if INTEGER_AXES.contains(name) => format!("{}", *x as u64),
            other => cell(*other),
        });
    }
    for v in [row.c_user, row.c_eve, row.r_s, row.c_key, row.threshold] {
        rec.push(cell(v));
    }
    rec.push(row.warning.clone().unwrap_or_default());
    rec.push(row.error.clone().unwrap_or_default());
    rec
}

#[derive(Serialize)]
struct JsonRow<'a> {
    scheme: &'a str,
    #[serde(flatten)]
    params: std::collections::BTreeMap<&'static str, f64>,
    c_user: Option<f64>,
    c_eve: Option<f64>,
    r_s: Option<f64>,
    c_key: Option<f64>,
    threshold: Option<f64>,
    warning: &'a Option<String>,
    error: &'a Option<String>,
}

/// Writes the table as CSV (RFC 4180 quoting) or JSON lines.
pub fn write_table<W: Write>(rows: &[Row], format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header()).map_err(CliError::from_csv)?;
            for row in rows {
                w.write_record(csv_record(row)).map_err(CliError::from_csv)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        Format::Json => {
            let mut out = out;
            for row in rows {
                let params = AXES.iter().zip(&row.params).filter_map(|(n, v)| v.map(|v| (*n, v))).collect();
                let json = JsonRow {
                    scheme: row.scheme,
                    params,
                    c_user: row.c_user,
                    c_eve: row.c_eve,
                    r_s: row.r_s,
                    c_key: row.c_key,
                    threshold: row.threshold,
                    warning: &row.warning,
                    error: &row.error,
                };
                let line = serde_json::to_string(&json).map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, Config, Grid};

    fn spec(text: &str) -> SweepSpec {
        match parse_config(text).unwrap() {
            Config::Sweep(s) => s,
            _ => panic!("not a sweep"),
        }
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let s = spec(r#"{"kind": "sweep", "scheme": "gsteep", "grid": {"a": [1, 2], "b": [10, 20, 30], "alpha": 1, "beta": 1}}"#);
        let rows = run_sweep(&s).unwrap();
        let ab: Vec<(f64, f64)> = rows.iter().map(|r| (r.params[0].unwrap(), r.params[1].unwrap())).collect();
        assert_eq!(ab, vec![(1.0, 10.0), (1.0, 20.0), (1.0, 30.0), (2.0, 10.0), (2.0, 20.0), (2.0, 30.0)]);
    }

    #[test]
    fn wrong_parameter_set_is_rejected() {
        let err = parse_config(r#"{"kind": "sweep", "scheme": "psteep", "grid": {"a": 1, "b": 1, "alpha": 1, "beta": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("psk_order"), "{err}");
    }

    #[test]
    fn row_cap() {
        let mut g = Grid::default();
        for a in ["a=1..1e3 +1", "b=1..1e3 +1", "alpha=1", "beta=1"] {
            g.set(a).unwrap();
        }
        let mut s = SweepSpec::single(Scheme::Gsteep, g, 0);
        assert!(plan(&s).is_ok());
        s.max_rows = 1000;
        assert!(plan(&s).is_err());
    }

    #[test]
    fn errors_stay_in_their_row() {
        let s = spec(r#"{"kind": "sweep", "scheme": "psteep", "grid": {"a": [0, 10], "b": 10, "alpha": 1, "beta": 1, "psk_order": 2}}"#);
        let rows = run_sweep(&s).unwrap();
        assert!(rows[0].error.is_some() && rows[0].r_s.is_none());
        assert!(rows[1].error.is_none() && rows[1].r_s.is_some());
    }

    #[test]
    fn csv_floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 123456.789] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
