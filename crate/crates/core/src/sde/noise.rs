use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

/// Gaussian increments for one trajectory.
///
/// ChaCha is a counter-mode generator: the key comes from `seed`, the stream
/// id is `trajectory_index`, and the block counter advances with the draws.
/// The sequence therefore depends only on `(seed, trajectory_index)`, never
/// on which thread runs the trajectory or how a batch is split.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    seed: u64,
    trajectory_index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory_index);
        Self { seed, trajectory_index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }

    #[inline]
    pub fn standard_normal<T: Real>(&mut self) -> T {
        T::lit(self.rng.sample::<f64, _>(StandardNormal))
    }

    /// Wiener increments over a step `h`: i.i.d. `N(0, h)` per coordinate.
    #[inline]
    pub fn fill_increments<T: Real>(&mut self, sqrt_h: T, out: &mut [T]) {
        for o in out.iter_mut() {
            *o = sqrt_h * self.standard_normal::<T>();
        }
    }
}
