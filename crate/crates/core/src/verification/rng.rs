use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type TrialRng = ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed; distinct `(master, index)` pairs give unrelated streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, index))
}
