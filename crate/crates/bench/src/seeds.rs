//! Seed derivation. Seeds depend on the master seed and the problem name, plus the
//! run index for initial points, but never on the method, so every method starts
//! from the same point.

const RUN: u64 = 0x52554e;
const INSTANCE: u64 = 0x494e5354;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// FNV-1a, stable across platforms and compiler versions.
fn hash_name(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0, |h, &p| splitmix64(h ^ p))
}

/// Seed of the initial point of run `run_index` on `problem`.
pub fn run_seed(master: u64, problem: &str, run_index: usize) -> u64 {
    mix(&[RUN, master, hash_name(problem), run_index as u64])
}

/// Generator seed of the quadratic instance shared by all runs on `problem`.
pub fn instance_seed(master: u64, problem: &str) -> u64 {
    mix(&[INSTANCE, master, hash_name(problem)])
}

/// Generator seed when every run draws its own instance.
pub fn fresh_instance_seed(master: u64, problem: &str, run_index: usize) -> u64 {
    mix(&[INSTANCE, master, hash_name(problem), run_index as u64 + 1])
}
