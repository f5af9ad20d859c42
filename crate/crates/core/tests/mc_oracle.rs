use steep_core::channel_model::cmatrix;
use steep_core::mc_oracle::{
    mc_classic_rate, mc_gsteep, mc_gsteep_with, mc_msteep, mc_msteep_with, mc_psteep, mc_rotation_invariance,
    mc_symmetric, McOptions, McReport, Verdict,
};
use steep_core::msteep::{sample_network, MultiAccessNetwork};
use steep_core::{linalg, sample_channels, ChannelSet, Complex64, PowerConfig, PskConfig, SisoSnr, SteepError};

fn assert_all_pass(reports: &[McReport]) {
    for r in reports {
        assert!(!r.failed(), "{r:?}");
    }
    assert!(reports.iter().any(|r| r.verdict == Verdict::Pass));
}

fn find<'a>(reports: &'a [McReport], name: &str) -> &'a McReport {
    reports.iter().find(|r| r.quantity == name).unwrap_or_else(|| panic!("no report {name}"))
}

fn scalar_set(h: f64) -> ChannelSet {
    let one = cmatrix(1, 1, &[(h, 0.0)]);
    ChannelSet::new(one.clone(), one.clone(), one.clone(), one).unwrap()
}

#[test]
fn siso_unit_snr_all_within_three_sigma() {
    let reports = mc_gsteep(&scalar_set(1.0), &PowerConfig::new(1.0, 1.0).unwrap(), 1_000_000, 11).unwrap();
    assert_all_pass(&reports);
    assert_eq!(reports.iter().filter(|r| r.gated()).count(), 6);
}

#[test]
fn mimo_run_within_three_sigma() {
    let c = sample_channels(3, 2, 2, 5).unwrap();
    let reports = mc_gsteep(&c, &PowerConfig::new(10.0, 30.0).unwrap(), 1_000_000, 12).unwrap();
    assert_all_pass(&reports);
    let c_a = find(&reports, "c_user");
    let sc = find(&reports, "c_user.sample_covariance");
    assert!((sc.empirical - c_a.analytic).abs() < 5.0 * sc.std_error + 1e-3, "{sc:?}");
}

#[test]
fn same_seed_same_reports() {
    let c = sample_channels(2, 1, 2, 8).unwrap();
    let p = PowerConfig::new(5.0, 5.0).unwrap();
    assert_eq!(mc_gsteep(&c, &p, 20_000, 3).unwrap(), mc_gsteep(&c, &p, 20_000, 3).unwrap());
    assert_ne!(mc_gsteep(&c, &p, 20_000, 3).unwrap(), mc_gsteep(&c, &p, 20_000, 4).unwrap());
    let net = sample_network(3, 2, 2, 4.0, 2.0, 1).unwrap();
    assert_eq!(mc_msteep(&net, 20_000, 3).unwrap(), mc_msteep(&net, 20_000, 3).unwrap());
    let cfg = PskConfig::new(4).unwrap();
    let snr = SisoSnr::new(30.0, 30.0, 1.0, 1.0).unwrap();
    assert_eq!(mc_psteep(&cfg, &snr, 100_000, 3).unwrap(), mc_psteep(&cfg, &snr, 100_000, 3).unwrap());
}

#[test]
fn exact_probe_without_bob_noise() {
    let c = sample_channels(3, 2, 1, 21).unwrap();
    let mut opts = McOptions::new(20_000, 1);
    opts.probe_noise_scale = 0.0;
    let reports = mc_gsteep_with(&c, &PowerConfig::new(4.0, 4.0).unwrap(), &opts).unwrap();
    for k in 0..2 {
        let r = find(&reports, &format!("r_dp[{k}]"));
        assert!(r.empirical < 1e-20 && r.analytic < 1e-20, "{r:?}");
        assert_eq!(r.verdict, Verdict::Ungated);
    }
}

#[test]
fn standard_errors_shrink_with_samples() {
    let c = sample_channels(2, 2, 2, 30).unwrap();
    let p = PowerConfig::new(8.0, 8.0).unwrap();
    let mut ratios = Vec::new();
    for seed in 0..3 {
        let small = mc_gsteep(&c, &p, 200_000, 100 + seed).unwrap();
        let large = mc_gsteep(&c, &p, 400_000, 200 + seed).unwrap();
        for (s, l) in small.iter().zip(&large).filter(|(s, _)| s.gated()) {
            ratios.push(s.std_error / l.std_error);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean / 2f64.sqrt() - 1.0).abs() < 0.2, "mean SE ratio {mean}");
}

/// Paired comparison on one seed: scaling the MMSE weights by 1 +/- 1% or
/// rotating them by 1% never lowers the empirical MSE by more than noise.
#[test]
fn mmse_weights_are_locally_optimal() {
    let c = sample_channels(2, 2, 2, 44).unwrap();
    let p = PowerConfig::new(6.0, 12.0).unwrap();
    let base = mc_gsteep_with(&c, &p, &McOptions::new(200_000, 9)).unwrap();
    let net = sample_network(3, 2, 2, 6.0, 3.0, 44).unwrap();
    let base_m = mc_msteep_with(&net, &McOptions::new(200_000, 9)).unwrap();
    for k in [Complex64::new(1.01, 0.0), Complex64::new(0.99, 0.0), Complex64::new(1.0, 0.01), Complex64::new(1.0, -0.01)] {
        let mut opts = McOptions::new(200_000, 9);
        opts.weight_perturbation = k;
        let moved = mc_gsteep_with(&c, &p, &opts).unwrap();
        for name in ["r_ds_a[0]", "r_ds_a[1]", "r_ds_e[0]", "r_ds_e[1]"] {
            let (b, m) = (find(&base, name), find(&moved, name));
            assert!(m.empirical >= b.empirical - 3.0 * b.std_error, "{name}: {b:?} -> {m:?}");
        }
        let moved_m = mc_msteep_with(&net, &opts).unwrap();
        for (b, m) in base_m.iter().zip(&moved_m).filter(|(b, _)| b.quantity.contains("ap_mse") || b.quantity.contains("eve_mse")) {
            assert!(m.empirical >= b.empirical - 3.0 * b.std_error, "{b:?} -> {m:?}");
        }
    }
}

#[test]
fn psk_high_snr_has_almost_no_errors() {
    let snr = SisoSnr::new(1e4, 1e4, 1.0, 1.0).unwrap();
    let reports = mc_psteep(&PskConfig::new(2).unwrap(), &snr, 100_000, 5).unwrap();
    let r = find(&reports, "p_e_a");
    assert!(r.empirical * r.n_samples as f64 <= 10.0);
    assert_all_pass(&reports);
}

#[test]
fn psk_anchor_alice_error_rate() {
    let snr = SisoSnr::new(100.0, 1000.0, 2.0, 2.0).unwrap();
    let reports = mc_psteep(&PskConfig::new(2).unwrap(), &snr, 10_000_000, 6).unwrap();
    assert_all_pass(&reports);
}

#[test]
fn psk_error_rates_in_measurable_regime() {
    // BPSK is exact; QPSK and 8-PSK kept at low error rates where the
    // nearest-neighbour form is tight.
    let cases = [
        (2, SisoSnr::new(9.5, 9.5, 1.0, 1.0).unwrap()),
        (4, SisoSnr::new(21.6, 21.6, 1.0, 1.0).unwrap()),
        (8, SisoSnr::new(74.0, 74.0, 1.0, 1.0).unwrap()),
    ];
    for (k, (order, snr)) in cases.into_iter().enumerate() {
        let reports = mc_psteep(&PskConfig::new(order).unwrap(), &snr, 1_000_000, 70 + k as u64).unwrap();
        assert_all_pass(&reports);
        let e = find(&reports, "p_e_e.linearised");
        assert!(e.empirical > 1e-3, "{e:?}");
        assert!(find(&reports, "p_e_e.full").verdict == Verdict::Ungated);
    }
}

#[test]
fn second_order_terms_raise_eve_errors_at_low_snr() {
    let snr = SisoSnr::new(2.0, 2.0, 1.0, 1.0).unwrap();
    let reports = mc_psteep(&PskConfig::new(2).unwrap(), &snr, 1_000_000, 8).unwrap();
    let gap = find(&reports, "p_e_e.second_order_gap");
    assert!(gap.empirical > 5.0 * gap.std_error, "{gap:?}");
}

#[test]
fn rotated_circular_gaussian_matches_moments() {
    for (k, order) in [2, 4, 8].into_iter().enumerate() {
        let reports = mc_rotation_invariance(order, 1.7, 1_000_000, 90 + k as u64).unwrap();
        assert_eq!(reports.len(), 6);
        assert_all_pass(&reports);
    }
}

#[test]
fn random_three_ue_net_within_three_sigma() {
    let net = sample_network(3, 2, 2, 8.0, 4.0, 17).unwrap();
    let reports = mc_msteep(&net, 1_000_000, 13).unwrap();
    assert_all_pass(&reports);
    // Three pairs, real and imaginary parts.
    assert_eq!(reports.iter().filter(|r| r.quantity.starts_with("epsilon")).count(), 6);
    assert_eq!(reports.len(), 3 * 3 + 2 + 6);
}

#[test]
fn single_ue_matches_gsteep() {
    let c = sample_channels(2, 1, 2, 61).unwrap();
    let p = PowerConfig::new(7.0, 3.0).unwrap();
    let col = |m: &linalg::CMatrix| linalg::CVector::from_column_slice(m.as_slice());
    let net = MultiAccessNetwork::new(
        vec![col(&c.h_ba().transpose())],
        vec![col(c.h_ab())],
        vec![col(c.h_eb())],
        c.h_ea().clone(),
        p.p_a,
        vec![p.p_b],
    )
    .unwrap();
    let g = mc_gsteep(&c, &p, 1_000_000, 2).unwrap();
    let m = mc_msteep(&net, 1_000_000, 2).unwrap();
    assert_all_pass(&g);
    assert_all_pass(&m);
    for (a, b) in [("r_dp[0]", "ue1.probe_mse"), ("r_ds_a[0]", "ue1.ap_mse"), ("r_ds_e[0]", "ue1.eve_mse")] {
        let (a, b) = (find(&g, a), find(&m, b));
        assert!((a.analytic - b.analytic).abs() < 1e-12, "{a:?} vs {b:?}");
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.empirical - b.empirical).abs() < 4.0 * se, "{a:?} vs {b:?}");
    }
}

#[test]
fn symmetric_four_ue_inverse_mses() {
    let reports = mc_symmetric(0.5, 0.4, 0.8, 0.6, 4, 1_000_000, 23).unwrap();
    let mut checked: Vec<&McReport> = (1..=4).map(|i| find(&reports, &format!("ue{i}.ap_inverse_mse"))).collect();
    checked.push(find(&reports, "ue4.eve_inverse_mse_given_earlier"));
    for r in checked {
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
}

#[test]
fn classic_rate_within_two_percent() {
    let p = PowerConfig::new(10.0, 1.0).unwrap();
    let k_x = linalg::identity(2);
    // First instance with a clearly positive rate.
    let c = (0..)
        .map(|seed| sample_channels(2, 2, 2, seed).unwrap())
        .find(|c| steep_core::classic_wtc_rate(c, &p, &k_x).unwrap() > 0.5)
        .unwrap();
    let reports = mc_classic_rate(&c, &p, &k_x, 1_000_000, 4).unwrap();
    let r = find(&reports, "classic_rate");
    assert!(r.analytic > 0.1, "{r:?}");
    assert!((r.empirical - r.analytic).abs() <= 0.02 * r.analytic, "{r:?}");
    assert_all_pass(&reports);
}

#[test]
fn rejects_short_runs() {
    let c = sample_channels(1, 1, 1, 0).unwrap();
    let p = PowerConfig::new(1.0, 1.0).unwrap();
    assert!(matches!(mc_gsteep(&c, &p, 9_999, 0), Err(SteepError::InsufficientSamples { .. })));
    let snr = SisoSnr::new(1.0, 1.0, 1.0, 1.0).unwrap();
    assert!(matches!(mc_psteep(&PskConfig::new(2).unwrap(), &snr, 99_999, 0), Err(SteepError::InsufficientSamples { .. })));
    let net = sample_network(2, 1, 1, 1.0, 1.0, 0).unwrap();
    assert!(mc_msteep(&net, 100, 0).is_err());
}
