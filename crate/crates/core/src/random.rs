//! Pinned random streams.
//!
//! Every stream is ChaCha8 keyed by a 64-bit seed and a 64-bit stream id, so
//! a block of draws is fully determined by `(seed, block index)` and does not
//! depend on how blocks are scheduled across threads. Normals use the
//! Marsaglia polar method.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of draws per independently keyed block.
pub const BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }
}

/// Splits `count` draws into `(block index, start, len)` triples.
pub fn blocks(count: usize) -> impl Iterator<Item = (u64, usize, usize)> + Clone {
    let nblocks = count.div_ceil(BLOCK_SIZE);
    (0..nblocks).map(move |b| {
        let start = b * BLOCK_SIZE;
        (b as u64, start, BLOCK_SIZE.min(count - start))
    })
}
