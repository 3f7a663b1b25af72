//! Stable, portable hashing shared by the Bloom filter, MinHash and the
//! built-in embedder. All hashes are xxHash64 over UTF-8 bytes, so files and
//! signatures produced here can be reproduced in any language.

use twox_hash::XxHash64;

/// Seed of the first Bloom-filter hash.
pub const BLOOM_SEED_1: u64 = 0;
/// Seed of the second Bloom-filter hash.
pub const BLOOM_SEED_2: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn xxh64(seed: u64, bytes: &[u8]) -> u64 {
    XxHash64::oneshot(seed, bytes)
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a base seed with a stream identifier.
#[inline]
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base ^ mix64(stream))
}
