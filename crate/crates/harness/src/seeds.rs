//! Seed derivation. Every random draw in an experiment comes from one of
//! these, so results are a pure function of the config.

/// One round of the splitmix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed, |acc, &p| mix(acc ^ mix(p)))
}

/// Training environment of replication `rep`.
pub fn training(base_seed: u64, rep: usize) -> u64 {
    base_seed.wrapping_add(rep as u64)
}

/// The `k`-th validation environment of replication `rep`.
pub fn validation(base_seed: u64, rep: usize, k: usize) -> u64 {
    derive(&[1, training(base_seed, rep), k as u64])
}

/// The `k`-th test environment at the `rate`-th bias rate. Test sets do
/// not depend on the replication, so every replication is scored on the
/// same environments.
pub fn test(base_seed: u64, rate: usize, k: usize) -> u64 {
    derive(&[2, base_seed, rate as u64, k as u64])
}
