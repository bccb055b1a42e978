//! Counter-based random numbers keyed by `(seed, trial, lane)`.
//!
//! Every draw is a pure function of its key and a per-lane counter, so a
//! field realization never depends on which worker produced it or in which
//! order trials ran. A lane is a site ordinal, an axis coordinate, or any
//! other stable label the sampler chooses.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for one `(trial, lane)` pair.
    #[inline]
    pub fn stream(&self, trial: u64, lane: u64) -> Stream {
        let k = mix64(self.seed.wrapping_add(GOLDEN));
        let k = mix64(k ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let k = mix64(k ^ lane.wrapping_mul(0xA076_1D64_78BD_642F).wrapping_add(GOLDEN));
        Stream { key: k, counter: 0 }
    }
}

/// Lane label for a lattice site given by its coordinates, independent of
/// the rectangle the site is viewed in.
pub fn site_lane(coords: &[usize]) -> u64 {
    coords.iter().fold(0x5851_F42D_4C95_7F2D_u64, |h, &c| mix64(h ^ (c as u64)).wrapping_add(GOLDEN))
}

/// Lane label for coordinate `m` of axis `axis`.
pub fn axis_lane(axis: usize, m: usize) -> u64 {
    mix64(0x2545_F491_4F6C_DD1D ^ ((axis as u64) << 40) ^ m as u64)
}

#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    #[inline]
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

impl RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key ^ mix64(c.wrapping_mul(GOLDEN).wrapping_add(0x1234_5678_9ABC_DEF1)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
