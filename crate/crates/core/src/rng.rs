//! Reproducible random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The underlying generator is
//! ChaCha8 in counter mode, where the stream id selects an independent
//! keystream for the same key. Forking derives child stream ids with a
//! SplitMix64 finalizer so that children of distinct parents do not collide
//! in practice.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Serializable identity of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    id: StreamId,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            id: StreamId { seed, stream },
            inner,
        }
    }

    pub fn from_id(id: StreamId) -> Self {
        Self::new(id.seed, id.stream)
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Child stream `index` of this stream. Depends only on the identity of
    /// `self`, not on how many values have been drawn from it.
    pub fn fork(&self, index: u64) -> RngStream {
        let child = splitmix64(self.id.stream ^ splitmix64(index.wrapping_add(1)));
        RngStream::new(self.id.seed, child)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
