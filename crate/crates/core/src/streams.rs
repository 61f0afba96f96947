//! Reproducible random number streams.
//!
//! Every replicate of every experiment draws from its own ChaCha8 stream.
//! The key is derived from the master seed and an experiment "domain" tag,
//! the stream index is the replicate index, so results never depend on how
//! replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

pub type SimRng = ChaCha8Rng;

/// Domain tags used to separate the streams of independent arms.
pub mod domain {
    pub const FORWARD: u64 = 1;
    pub const CONTOUR: u64 = 2;
    pub const COALESCENT: u64 = 3;
    pub const APPROX: u64 = 4;
    pub const SELF_TEST: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for replicate `index` of the experiment arm `domain`.
pub fn replicate_rng(seed: u64, domain: u64, index: u64) -> SimRng {
    let key = splitmix64(seed ^ splitmix64(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exponential waiting time with the given rate. A zero rate never fires.
#[inline]
pub fn exp_wait<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Poisson count; `mean == 0` is the point mass at zero.
#[inline]
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    d.sample(rng) as u64
}
