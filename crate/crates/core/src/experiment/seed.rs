//! Counter-based seed derivation.
//!
//! Every random stream is a pure function of `(base_seed, trial index,
//! stream label, strategy)`, so results do not depend on execution order and
//! adding a strategy leaves the others' streams untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::policy::Strategy;

const INSTANCE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const POLICY_STREAM: u64 = 3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed of `parent` for the counter `label`.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(label.wrapping_mul(0x2545_f491_4f6c_dd1d)))
}

pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    derive_seed(base_seed, trial_index)
}

/// Stable per-strategy label: FNV-1a of the strategy name.
fn strategy_label(strategy: Strategy) -> u64 {
    strategy
        .name()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// The independent generators used by one trial.
pub struct TrialStreams {
    /// Draws the instance (arms, parameter, projector). Shared by all
    /// strategies of the same trial.
    pub instance: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub policy: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(trial_seed: u64, strategy: Strategy) -> Self {
        let label = strategy_label(strategy);
        TrialStreams {
            instance: ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, INSTANCE_STREAM)),
            noise: ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(trial_seed, NOISE_STREAM), label)),
            policy: ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(trial_seed, POLICY_STREAM), label)),
        }
    }

    pub fn instance_only(trial_seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, INSTANCE_STREAM))
    }
}
