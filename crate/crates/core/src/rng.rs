//! Counter-based per-trial random streams.
//!
//! Trial `i` of a run seeded with `master` draws from the ChaCha stream
//! `(key = master, stream = i)`, so its draws do not depend on which thread
//! runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Independent generator for auxiliary purposes (e.g. building Hamiltonians),
/// kept off the trial streams by a fixed domain tag.
pub fn domain_rng(master: u64, domain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(u64::MAX - domain);
    rng
}
