//! Shared fixtures for the kernel benchmarks.

use assort_core::market::{MarketConfig, MarketInstance};

/// A reproducible instance for benchmark inputs.
pub fn instance(n: u32, k: u32, phi: f64) -> MarketInstance {
    MarketInstance::generate(&MarketConfig {
        n,
        k,
        phi_m: phi,
        phi_w: phi,
        seed: 0xBE4C_4471,
    })
    .expect("benchmark configs are valid")
}
