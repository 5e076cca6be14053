//! Counter-based random substreams.
//!
//! A substream is the ChaCha8 keystream keyed by the 256-bit tuple
//! `(master seed, trajectory index, purpose tag, counter)`, each packed as a
//! little-endian `u64`. Distinct tuples give independent streams, and no
//! stream depends on the order in which others were consumed, so trajectories
//! can be generated in any order or on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags. Values are part of the stream key and must stay stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    ZJumpTimes = 1,
    ZJumpSizes = 2,
    ZBrownian = 3,
    ZBrownianOffGrid = 4,
    HJumpTimes = 5,
    HJumpSizes = 6,
    HBrownian = 7,
    HBrownianOffGrid = 8,
    PropertySamples = 9,
}

pub fn substream(master: u64, trajectory: u64, purpose: Purpose, counter: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&trajectory.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[24..].copy_from_slice(&counter.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
