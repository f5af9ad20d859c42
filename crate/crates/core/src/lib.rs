//! Closed-form secrecy quantities for secret-message transmission by
//! echoing encrypted probes, in the Gaussian MIMO, PSK and multiple-access
//! settings, with a Monte Carlo protocol simulator that checks every
//! closed form against simulated transmissions.
//!
//! All rates are in bits (base-2 logarithms throughout).

pub mod channel_model;
pub mod error;
pub mod gsteep;
pub mod linalg;
pub mod mc_oracle;
pub mod msteep;
pub mod psteep;
pub mod rng;

pub use channel_model::{
    channel_strength_ratio_alpha, classic_wtc_rate, sample_channels, scale_channels, ChannelSet, PowerConfig,
    ScaledChannelSet, StrengthRatio,
};
pub use error::{Result, SteepError};
pub use gsteep::{ProbeStats, SecrecyBreakdown, SisoSnr};
pub use mc_oracle::{McOptions, McReport, Verdict};
pub use msteep::{MultiAccessNetwork, UeStats};
pub use psteep::{PskConfig, PskErrorParams};

pub use num_complex::Complex64;
