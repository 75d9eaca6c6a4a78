//! Deterministic random number streams for reproducible Monte Carlo.
//!
//! Every simulation run draws from its own [`RngStream`], derived from a
//! `(master_seed, salt, run_index)` triple. The derivation is counter-based:
//! the master seed and salt select a ChaCha key and the run index selects the
//! ChaCha stream, so any run can be regenerated in isolation and results do
//! not depend on the order in which runs execute.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stateless mixer used to fold the salt into the master seed
/// (splitmix64 finalizer).
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    /// Stream for one Monte Carlo run, fully determined by the triple.
    pub fn for_run(master_seed: u64, salt: u64, run_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ mix(salt));
        rng.set_stream(run_index);
        RngStream(rng)
    }

    /// Stream not tied to a particular run (fixtures, smoke tests).
    pub fn from_seed(master_seed: u64) -> Self {
        RngStream::for_run(master_seed, 0, 0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), RandError> {
        self.0.try_fill_bytes(dest)
    }
}
