//! Counter-based randomness: every draw is addressed by
//! (seed, device, stream, index), never by generation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mac::Mac;

/// Words reserved per index; a frame needs far fewer.
const WORDS_PER_INDEX: u128 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    Autonomous = 1,
    Active = 2,
    Idle = 3,
    Ble = 4,
    Setup = 5,
    Oneshot = 6,
}

#[derive(Clone)]
pub struct KeyedRng {
    base: ChaCha8Rng,
}

impl KeyedRng {
    pub fn new(seed: u64, mac: Mac, stream: Stream) -> Self {
        let m = mac.0.iter().fold(0u64, |acc, &b| acc << 8 | b as u64);
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(m << 8 | stream as u64);
        Self { base }
    }

    /// Generator positioned at the block reserved for `index`.
    pub fn at(&self, index: u64) -> ChaCha8Rng {
        let mut r = self.base.clone();
        r.set_word_pos(index as u128 * WORDS_PER_INDEX);
        r
    }
}
