//! Named random streams split from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Each concern draws from its own stream so that changing one
/// (for example token weights) leaves the others untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Activity = 1,
    Demand = 2,
    Dispatch = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn draws(seed: u64, stream: Stream) -> Vec<u64> {
        let mut rng = stream_rng(seed, stream);
        (0..4).map(|_| rng.next_u64()).collect()
    }

    #[test]
    fn streams_differ_and_repeat() {
        assert_eq!(draws(7, Stream::Activity), draws(7, Stream::Activity));
        assert_ne!(draws(7, Stream::Activity), draws(7, Stream::Demand));
        assert_ne!(draws(7, Stream::Activity), draws(8, Stream::Activity));
    }
}
