//! Shared fixtures for the benchmarks.

use eqfield_core::dynamics::{state_at, EvolveOptions};
use eqfield_core::{ChargeConfig, SupportState};

/// A configuration with a two-cut stretch between its births and fusion.
pub fn two_cut_config() -> ChargeConfig {
    ChargeConfig::new(0.3, 0.3, 0.5).expect("valid charges")
}

/// A configuration outside the two-cut region.
pub fn one_cut_config() -> ChargeConfig {
    ChargeConfig::new(0.5, 2.7, 1.0).expect("valid charges")
}

/// Solved states used as seeds: `(config, one-cut state, two-cut state)`.
pub fn states() -> (ChargeConfig, SupportState, SupportState) {
    let opts = EvolveOptions::default();
    let two = two_cut_config();
    let one = one_cut_config();
    let s1 = state_at(&one, 0.5, &opts).expect("one-cut state");
    let s2 = state_at(&two, 0.5, &opts).expect("two-cut state");
    assert_eq!(s2.cut_count(), 2);
    (one, s1, s2)
}
