//! Counter-based deterministic random streams.
//!
//! Every stochastic routine in the crate derives an independent stream from a
//! root seed plus a list of coordinates: a purpose tag, then indices such as
//! replicate, level, and position. Because the stream for coordinate
//! `(seed, tag, j, k)` never depends on how many other streams were consumed,
//! simulations are reproducible bit-for-bit under any parallel schedule.

use rand::RngCore;

/// Stream purpose tags. Distinct tags guarantee that different uses of the
/// same `(j, k)` coordinates never collide.
pub(crate) mod tag {
    pub const OBSERVATION: u64 = 0x11;
    pub const OBSERVATION_SCALING: u64 = 0x12;
    pub const SPIKE_SLAB: u64 = 0x21;
    pub const SIEVE_MODEL: u64 = 0x22;
    pub const SIEVE_COEFF: u64 = 0x23;
    pub const PROBE: u64 = 0x31;
    pub const PROBE_MODEL: u64 = 0x32;
    pub const POSTERIOR_DRAW: u64 = 0x41;
    pub const POSTERIOR_MODEL: u64 = 0x42;
    pub const TRUTH: u64 = 0x51;
    pub const REPLICATE: u64 = 0x52;
    pub const MASS: u64 = 0x53;
}

/// Finalizer from SplitMix64: a 64-bit avalanche permutation.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Collapses a root seed and stream coordinates into a single stream seed.
///
/// The fold applies the SplitMix64 avalanche after every absorbed word, so
/// seeds that differ in any coordinate (or in coordinate order) land in
/// unrelated streams.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut state = mix64(seed ^ GOLDEN);
    for &part in parts {
        state = mix64(state.wrapping_add(GOLDEN) ^ mix64(part.wrapping_add(GOLDEN)));
    }
    state
}

/// SplitMix64 generator positioned on a derived stream.
///
/// SplitMix64 passes BigCrush and is trivially seekable; one instance is
/// created per coefficient draw, so cheap construction matters more than
/// state size.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    /// Opens the stream addressed by `(seed, parts...)`.
    pub fn new(seed: u64, parts: &[u64]) -> Self {
        CounterRng {
            state: derive_seed(seed, parts),
        }
    }

    /// Opens a stream directly from a already-derived stream seed.
    pub fn from_stream(stream: u64) -> Self {
        CounterRng { state: stream }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let word = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&word[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_coordinates_reproduce_the_stream() {
        let mut a = CounterRng::new(7, &[tag::OBSERVATION, 3, 9]);
        let mut b = CounterRng::new(7, &[tag::OBSERVATION, 3, 9]);
        for _ in 0..32 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn any_coordinate_change_moves_the_stream() {
        let base = CounterRng::new(7, &[tag::OBSERVATION, 3, 9]).next_u64();
        assert_ne!(base, CounterRng::new(8, &[tag::OBSERVATION, 3, 9]).next_u64());
        assert_ne!(base, CounterRng::new(7, &[tag::SPIKE_SLAB, 3, 9]).next_u64());
        assert_ne!(base, CounterRng::new(7, &[tag::OBSERVATION, 4, 9]).next_u64());
        assert_ne!(base, CounterRng::new(7, &[tag::OBSERVATION, 3, 10]).next_u64());
        assert_ne!(base, CounterRng::new(7, &[tag::OBSERVATION, 9, 3]).next_u64());
    }

    #[test]
    fn prefix_streams_do_not_alias_extended_ones() {
        // (seed, [a]) and (seed, [a, 0]) must differ.
        let short = derive_seed(1, &[5]);
        let long = derive_seed(1, &[5, 0]);
        assert_ne!(short, long);
    }

    #[test]
    fn uniform_draws_cover_the_unit_interval() {
        let mut rng = CounterRng::new(0, &[tag::PROBE, 0]);
        let n = 100_000;
        let mut sum = 0.0;
        let mut min: f64 = 1.0;
        let mut max: f64 = 0.0;
        for _ in 0..n {
            let u: f64 = rng.random();
            assert!((0.0..1.0).contains(&u));
            sum += u;
            min = min.min(u);
            max = max.max(u);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!(min < 1e-3 && max > 1.0 - 1e-3);
    }

    #[test]
    fn fill_bytes_handles_partial_chunks() {
        let mut rng = CounterRng::new(3, &[1]);
        let mut buf = [0u8; 13];
        rng.fill_bytes(&mut buf);
        // A fresh stream with the same address produces the same prefix via u64s.
        let mut rng2 = CounterRng::new(3, &[1]);
        let w0 = rng2.next_u64().to_le_bytes();
        assert_eq!(&buf[..8], &w0);
    }
}
