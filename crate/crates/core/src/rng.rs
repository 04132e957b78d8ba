//! Seeding conventions.
//!
//! Every random quantity derives from one `u64` seed. Independent trials use
//! `seed + trial_index`; independent purposes within one run use a named
//! ChaCha stream so adding a new consumer never shifts existing draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StdRng = ChaCha8Rng;

/// Generator for a base seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `index` of a run with base seed `seed`.
pub fn trial(seed: u64, index: usize) -> ChaCha8Rng {
    seeded(seed.wrapping_add(index as u64))
}

/// Named stream of trial `index`: `seed + index`, stream `name`.
pub fn trial_stream(seed: u64, index: usize, name: &str) -> ChaCha8Rng {
    substream(seed.wrapping_add(index as u64), name)
}

/// Generator for the named purpose `name` under `seed`.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = seeded(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

// FNV-1a; stable across platforms and releases, unlike std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = substream(7, "model").random();
        let b: u64 = substream(7, "model").random();
        let c: u64 = substream(7, "data").random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let t0: u64 = trial(7, 0).random();
        let s: u64 = seeded(7).random();
        assert_eq!(t0, s);
    }
}
