//! Shared input builders for the benchmark targets.

use ifofdm_core::channel::{sample_network, NetworkChannel, TapLengths};
use ifofdm_core::phy::{make_frame_config, FrameConfig, SubcarrierPolicy};

/// A symmetric network plus its frame layout, ready to drive a chain.
pub fn network_and_frame(
    users: usize,
    l_d: usize,
    l_i: usize,
    subblocks: usize,
    seed: u64,
) -> (NetworkChannel, FrameConfig) {
    let taps = TapLengths::symmetric(users, l_d, l_i).expect("valid taps");
    let channel = sample_network(&taps, 0.0, seed).expect("sample");
    let cfg = make_frame_config(&channel, subblocks, SubcarrierPolicy::FirstCarriers)
        .expect("frame config");
    (channel, cfg)
}
