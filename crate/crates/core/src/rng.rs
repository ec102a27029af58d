//! Reproducible, independently seekable random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::matrix::GeneralMatrix;

/// A ChaCha20 stream addressed by `(seed, stream_index)`.
///
/// ChaCha20 keys the generator with the seed and selects one of 2⁶⁴
/// non-overlapping streams by index, so paths simulated on distinct
/// indices are independent regardless of the order they run in.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        RngStream {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Stream for path `path` of a Monte Carlo run rooted at this stream.
    ///
    /// Child indices are `(stream_index << 32) | path`, so distinct roots with
    /// indices below 2³² never share a child.
    pub fn path_stream(&self, path: u64) -> RngStream {
        debug_assert!(path < 1 << 32, "path index exceeds 32 bits");
        RngStream::new(self.seed, (self.stream_index << 32) | (path & 0xffff_ffff))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// `rows×cols` matrix of iid standard normals, filled column by column.
    pub fn standard_normal_matrix(&mut self, rows: usize, cols: usize) -> GeneralMatrix {
        GeneralMatrix::from_fn(rows, cols, |_, _| self.rng.sample(StandardNormal))
    }
}
