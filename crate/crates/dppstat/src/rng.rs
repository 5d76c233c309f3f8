//! Reproducible random-number streams.
//!
//! Every replication gets its own ChaCha8 stream derived from `(master
//! seed, replication index)`; streams are independent of scheduling, so
//! parallel runs reproduce sequential ones bit-for-bit. Within a replication
//! the draw order is fixed: DPP Bernoulli selection (one uniform per
//! eigenfunction), projection-sampling proposals, contamination draws, then
//! jitter draws per grid in ladder order (cells row-major).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream for one replication of an experiment.
pub fn replication_rng(master_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication);
    rng
}

/// SplitMix64 finaliser; used to derive independent per-run master seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
