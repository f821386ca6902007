use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one `(point, trial, tag)` cell of an experiment.
pub fn substream(seed: u64, point: u64, trial: u64, tag: u64) -> ChaCha8Rng {
    let mut seed_bytes = [0u8; 32];
    let mut h = splitmix64(seed);
    for (i, word) in [point, trial, tag, 0x5eed].into_iter().enumerate() {
        h = splitmix64(h ^ word);
        seed_bytes[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed_bytes)
}
