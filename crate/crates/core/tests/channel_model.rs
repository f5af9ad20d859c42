use steep_core::linalg::CVector;
use steep_core::rng;
use steep_core::{channel_strength_ratio_alpha, sample_channels};

#[test]
fn alpha_against_random_search() {
    let c = sample_channels(2, 3, 2, 77).unwrap();
    let r = channel_strength_ratio_alpha(c.h_ea(), c.h_ba()).unwrap();
    let mut g = rng::seeded(3);
    let mut best = f64::INFINITY;
    for _ in 0..100_000 {
        let v = CVector::from_fn(2, |_, _| rng::complex_normal(&mut g, 1.0));
        let ratio = (c.h_ea() * &v).norm_squared() / (c.h_ba() * &v).norm_squared();
        best = best.min(ratio);
    }
    assert!(best >= r.alpha * (1.0 - 1e-12));
    assert!((best - r.alpha) / r.alpha < 0.01, "search {best}, alpha {}", r.alpha);
}
