//! Fixed inputs shared by the benchmarks.

use steep_core::msteep::{sample_network, MultiAccessNetwork};
use steep_core::{sample_channels, ChannelSet, PowerConfig, PskConfig, SisoSnr};

pub fn mimo(n_a: usize, n_b: usize, n_e: usize) -> (ChannelSet, PowerConfig) {
    let channels = sample_channels(n_a, n_b, n_e, 42).expect("valid dimensions");
    (channels, PowerConfig::new(100.0, 1000.0).expect("positive powers"))
}

pub fn siso() -> SisoSnr {
    SisoSnr::new(100.0, 1000.0, 2.0, 2.0).expect("valid SNRs")
}

pub fn bpsk() -> PskConfig {
    PskConfig::new(2).expect("valid order")
}

/// Single-antenna AP, so every M-STEEP path applies.
pub fn network(m: usize) -> MultiAccessNetwork {
    sample_network(m, 1, 2, 20.0, 8.0, 7).expect("valid network")
}
