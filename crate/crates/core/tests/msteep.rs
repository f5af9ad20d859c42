mod common;

use common::{mmse_error, multi_protocol, mutual_info, vstack};
use steep_core::linalg::CVector;
use steep_core::msteep::*;
use steep_core::Complex64;

fn random_net(seed: u64, m: usize, n_a: usize, n_e: usize) -> MultiAccessNetwork {
    // Powers spread over a few decades so both weak and strong links appear.
    let pa = 10f64.powf(0.5 + (seed % 5) as f64 * 0.6);
    let pu = 10f64.powf(0.3 + (seed % 7) as f64 * 0.4);
    sample_network(m, n_a, n_e, pa, pu, 1000 + seed).unwrap()
}

fn scalar(m: &steep_core::linalg::CMatrix) -> f64 {
    m[(0, 0)].re
}

#[test]
fn eve_mse_matches_protocol_oracle() {
    for seed in 0..20 {
        let (m, n_a, n_e) = (1 + seed as usize % 4, 1 + seed as usize % 3, 1 + seed as usize % 2);
        let net = random_net(seed, m, n_a, n_e);
        let stats = ue_stats(&net);
        let proto = multi_protocol(&net);
        let y_e = proto.y_e_stack(&[]);
        for i in 0..m {
            let oracle = scalar(&mmse_error(&proto.s[i], &y_e));
            let lib = eve_mse(&net, &stats, i, 0).unwrap();
            assert!((oracle - lib).abs() < 1e-9, "seed {seed} ue {i}: {oracle} vs {lib}");

            let known: Vec<&_> = proto.s[..i].iter().collect();
            let mut obs = vec![&y_e];
            obs.extend(known);
            let cond = scalar(&mmse_error(&proto.s[i], &vstack(&obs)));
            let lib = eve_mse(&net, &stats, i, i).unwrap();
            assert!((cond - lib).abs() < 1e-9, "seed {seed} ue {i} conditioned: {cond} vs {lib}");
        }
    }
}

#[test]
fn probe_estimate_correlations_match_oracle() {
    let net = random_net(3, 4, 3, 2);
    let stats = ue_stats(&net);
    let proto = multi_protocol(&net);
    for i in 0..4 {
        for j in 0..4 {
            let oracle = (&proto.p_hat[i] * proto.p_hat[j].adjoint())[(0, 0)];
            let lib = if i == j { Complex64::new(stats.c[i], 0.0) } else { stats.epsilon(i, j) };
            assert!((oracle - lib).norm() < 1e-12, "({i}, {j})");
        }
        let rx = &proto.x * proto.p_hat[i].adjoint();
        let lib = stats.r_x(i);
        for k in 0..3 {
            assert!((rx[(k, 0)] - lib[k]).norm() < 1e-12, "r_x {i}: {} vs {}", rx[(k, 0)], lib[k]);
        }
    }
}

#[test]
fn gamma_excess_is_mse_of_probe_estimate() {
    for seed in 0..10 {
        let net = random_net(40 + seed, 3, 2, 2);
        let stats = ue_stats(&net);
        let proto = multi_protocol(&net);
        let oracle = scalar(&mmse_error(&proto.p_hat[0], &proto.y_e_stack(&[0])));
        let gamma = eve_joint_mse_ue1(&net, &stats).unwrap().gamma1;
        assert!((gamma - 1.0 - oracle).abs() < 1e-9, "{} vs {oracle}", gamma - 1.0);
    }
}

#[test]
fn uplink_rate_matches_per_ue_mutual_information() {
    for seed in 0..10 {
        let net = random_net(70 + seed, 3, 2, 1);
        let stats = ue_stats(&net);
        let proto = multi_protocol(&net);
        for i in 0..3 {
            let oracle = mutual_info(&proto.s[i], &vstack(&[&proto.y_a[i], &proto.x]));
            let lib = ue_uplink_rate(stats.s[i], stats.s_a[i]).unwrap();
            assert!((oracle - lib).abs() < 1e-9, "{oracle} vs {lib}");
        }
    }
}

#[test]
fn eve_chain_sum_is_joint_mutual_information() {
    for seed in 0..10 {
        let net = random_net(90 + seed, 4, 2, 2);
        let proto = multi_protocol(&net);
        let all_s = vstack(&proto.s.iter().collect::<Vec<_>>());
        let oracle = mutual_info(&all_s, &proto.y_e_stack(&[]));
        let tot = total_secrecy_terms(&net).unwrap();
        assert!((tot.eve_total - oracle).abs() < 1e-8, "{} vs {oracle}", tot.eve_total);
    }
}

#[test]
fn eve_chain_sum_is_order_invariant() {
    let net = random_net(5, 4, 2, 2);
    let base = total_secrecy_terms(&net).unwrap().eve_total;
    for order in [[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]] {
        let other = total_secrecy_terms(&net.permuted(&order).unwrap()).unwrap().eve_total;
        assert!((base - other).abs() < 1e-9, "{base} vs {other}");
    }
}

#[test]
fn first_chain_term_is_ue1_rate() {
    for seed in 0..5 {
        let net = random_net(200 + seed, 3, 2, 2);
        let tot = total_secrecy_terms(&net).unwrap();
        let ue1 = msteep_secrecy_rate_ue1(&net).unwrap();
        assert!((tot.terms[0].r_s - ue1.signed).abs() < 1e-12);
    }
}

/// `gamma_1 - 1` as the MSE of Eve's estimate of `p_hat_1` without UE_1's echo.
fn gamma_excess_oracle(net: &MultiAccessNetwork) -> f64 {
    let proto = multi_protocol(net);
    scalar(&mmse_error(&proto.p_hat[0], &proto.y_e_stack(&[0])))
}

#[test]
fn t1m_recursion_matches_quadratic_form_and_oracle() {
    for seed in 0..50u64 {
        let m = 2 + seed as usize % 7;
        let net = random_net(300 + seed, m, 1, 1 + seed as usize % 3);
        let stats = ue_stats(&net);
        let t = t1m_appendix_c(&net, &stats).unwrap();
        assert!((t.recursion - t.direct).abs() < 1e-9 * t.direct.max(1.0));
        let (c, k) = (stats.c[0], stats.s_ea + 1.0);
        let from_t = c - c * c * stats.s_ea / k - c * c * t.direct / (k * k);
        let oracle = gamma_excess_oracle(&net);
        assert!((from_t - oracle).abs() < 1e-10, "seed {seed}: {from_t} vs {oracle}");
    }
}

#[test]
fn t1m_bounds_on_many_draws() {
    for seed in 0..1000u64 {
        let m = 2 + seed as usize % 7;
        let net = random_net(5000 + seed, m, 1, 1 + seed as usize % 2);
        let t = t1m_appendix_c(&net, &ue_stats(&net)).unwrap();
        assert!(t.direct >= 0.0 && t.direct < ((m - 1) as f64).min(t.s_ea + 1.0), "seed {seed}");
    }
}

#[test]
fn t1m_monotone_in_eve_probe_strength() {
    let net = random_net(11, 5, 1, 2);
    let h = net.h_ea().clone();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..30 {
        let scale = 10f64.powf(-2.0 + k as f64 * 0.15);
        let n = net.clone().with_h_ea(h.scale(scale)).unwrap();
        let t = t1m_appendix_c(&n, &ue_stats(&n)).unwrap();
        let ratio = t.direct / (t.s_ea + 1.0);
        if let Some((pt, pr)) = prev {
            assert!(t.direct > pt, "t not increasing at step {k}");
            assert!(ratio < pr, "t / (S_EA + 1) not decreasing at step {k}");
        }
        prev = Some((t.direct, ratio));
    }
}

fn strong_eve_uplink(net: MultiAccessNetwork, factor: f64) -> MultiAccessNetwork {
    let h = net.h_a(0).clone();
    let n_e = net.n_e();
    let he = CVector::from_fn(n_e, |k, _| if k == 0 { Complex64::new(h.norm() * factor, 0.0) } else { Complex64::new(0.0, 0.0) });
    net.with_h_e(0, he).unwrap()
}

#[test]
fn ue1_threshold_is_a_sign_change() {
    for (k, m) in [1usize, 2, 4, 8].into_iter().enumerate() {
        let net = strong_eve_uplink(sample_network(m, 1, 2, 300.0, 50.0, 77 + k as u64).unwrap(), 1.6);
        let th = positivity_threshold_ue1(&net).unwrap();
        assert!(th.beta1 > 1.0);
        let signed = |p: f64| msteep_secrecy_rate_ue1(&net.clone().with_p_u(0, p).unwrap()).unwrap().signed;
        assert!(signed(th.p_u1 * (1.0 - 1e-3)) < 0.0, "M = {m}");
        assert!(signed(th.p_u1 * (1.0 + 1e-3)) > 0.0, "M = {m}");
        let (mut lo, mut hi) = (th.p_u1 * 0.5, th.p_u1 * 2.0);
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if signed(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((hi - th.p_u1).abs() < 1e-6 * th.p_u1, "M = {m}: root {hi} vs {}", th.p_u1);
    }
}

#[test]
fn symmetric_network_general_path_agrees() {
    for (k, m) in [1usize, 2, 3, 6, 10].into_iter().enumerate() {
        let (s, sa, se, sea) = (0.05 + 0.1 * k as f64, 0.3, 0.2 + 0.05 * k as f64, 0.1);
        let a = symmetric_analysis(s, sa, se, sea, m).unwrap();
        let net = MultiAccessNetwork::symmetric(s, sa, se, sea, m).unwrap();
        let tot = total_secrecy_terms(&net).unwrap();
        for i in 0..m {
            assert!((tot.terms[i].r_s - a.terms[i]).abs() < 1e-9, "M = {m}, term {i}");
        }
        assert!((tot.total - a.total).abs() < 1e-9);
    }
}

#[test]
fn symmetric_closed_form_matches_oracle() {
    let (s, sa, se, sea, m) = (0.2, 0.4, 0.3, 0.15, 5);
    let a = symmetric_analysis(s, sa, se, sea, m).unwrap();
    let proto = multi_protocol(&MultiAccessNetwork::symmetric(s, sa, se, sea, m).unwrap());
    let user = scalar(&mmse_error(&proto.s[0], &vstack(&[&proto.y_a[0], &proto.x])));
    assert!((1.0 / user - (1.0 + 1.0 / a.g_a)).abs() < 1e-9);
    let known: Vec<&_> = proto.s[..m - 1].iter().collect();
    let y_e = proto.y_e_stack(&[]);
    let mut obs = vec![&y_e];
    obs.extend(known);
    let last = scalar(&mmse_error(&proto.s[m - 1], &vstack(&obs)));
    assert!((1.0 / last - (1.0 + 1.0 / a.g_e_closed_form)).abs() < 1e-9);
}

#[test]
fn printed_symmetric_g_e_disagrees() {
    let a = symmetric_analysis(0.2, 0.4, 0.3, 0.15, 5).unwrap();
    assert!((a.g_e_printed - a.g_e).abs() > 1e-4);
}

#[test]
fn symmetric_equal_noise_keeps_last_term_positive() {
    for m in [1usize, 3, 10, 50] {
        let a = symmetric_analysis(0.1, 0.5, 0.5, 0.01, m).unwrap();
        assert!(a.last_positive && a.gap > 0.0, "M = {m}");
        assert!(a.descending);
    }
}

#[test]
fn symmetric_threshold_sign_change() {
    let (beta0, s, sea, m) = (2.0, 0.1, 0.05, 10);
    let th = symmetric_threshold(beta0, s, sea, m).unwrap();
    let at = |sa: f64| symmetric_analysis(s, sa, sa / beta0, sea, m).unwrap();
    assert!(at(th.sigma2_a_bar * (1.0 - 1e-3)).last_positive);
    assert!(!at(th.sigma2_a_bar * (1.0 + 1e-3)).last_positive);
    assert!(at(th.sigma2_a_bar).gap.abs() < 1e-8);
}

#[test]
fn symmetric_threshold_scales_inversely_with_m() {
    let a = symmetric_threshold(2.0, 0.1, 0.05, 1000).unwrap();
    let b = symmetric_threshold(2.0, 0.1, 0.05, 2000).unwrap();
    let ratio = (a.sigma2_a_bar * 1000.0) / (b.sigma2_a_bar * 2000.0);
    assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    let approx = a.approx.unwrap();
    assert!((approx / a.sigma2_a_bar - 1.0).abs() < 0.1);
}
