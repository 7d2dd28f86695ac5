//! Seed derivation.
//!
//! Every random draw in the lab comes from a ChaCha12 generator keyed by
//! `seed_from_u64(base_seed ^ mix(domain))` and positioned on stream `index`.
//! A trial, a Monte Carlo chunk or a sampler call therefore owns an
//! independent substream determined only by `(base_seed, domain, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type LabRng = ChaCha12Rng;

/// Domains keep substreams of different consumers apart.
pub mod domain {
    pub const SAMPLES: u64 = 1;
    pub const MC_CHUNK: u64 = 2;
    pub const TRIAL: u64 = 3;
    pub const CONSTANTS: u64 = 4;
    pub const BATTERY: u64 = 5;
    pub const INIT: u64 = 6;
}

fn mix(x: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(base_seed: u64, domain: u64, index: u64) -> LabRng {
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed ^ mix(domain));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, used where a nested component needs its own base seed.
pub fn child_seed(base_seed: u64, domain: u64, index: u64) -> u64 {
    mix(mix(base_seed ^ mix(domain)) ^ index)
}

/// Uniform direction on the unit sphere in R^dim.
pub fn random_direction<T: crate::scalar::Scalar>(rng: &mut LabRng, dim: usize) -> Vec<T> {
    use rand::Rng;
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return g.iter().map(|x| T::lit(x / n)).collect();
        }
    }
}
