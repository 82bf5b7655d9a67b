//! Hereditary subshifts over B-free sets: block statistics, ladder Markov
//! schedules, ergodic approximation of midpoints, and a periodic
//! counterexample where midpoints stay away from the ergodic measures.

pub mod bfree;
pub mod bitseq;
pub mod cli;
pub mod counterexample;
pub mod error;
pub mod language;
pub mod markov;
pub mod measures;
pub mod midpoint;

pub use bfree::BSet;
pub use bitseq::{BitWindow, Block, MAX_BLOCK_LEN};
pub use error::{Error, Result};
pub use markov::{build_doubled_chain, build_single_chain, MarkovChain, Schedule};
pub use measures::{BlockMeasure, BlockSet};
pub use midpoint::{approximate_midpoint, MidpointRequest, MidpointResult};

/// Independent child seed for stream `index` of `seed` (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
