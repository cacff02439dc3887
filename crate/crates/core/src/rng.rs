//! Counter-based random streams.
//!
//! Every random quantity in the crate is addressed by a `(seed, domain,
//! index)` triple: the seed and domain select a ChaCha key, the index selects
//! the ChaCha stream. Path `i` of an ensemble, sample `i` of a quadrature
//! rule, or draw `i` of a Gaussian measure therefore never depend on how many
//! other streams were consumed or in which order, so results are identical
//! for any partitioning of the work.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

/// Domain tags separating the independent uses of a single user seed.
pub mod domain {
    pub const GAUSSIAN_SAMPLE: u64 = 0x5341_4d50;
    pub const QUADRATURE: u64 = 0x5155_4144;
    pub const NOISE_PANEL: u64 = 0x5041_4e4c;
    pub const MOLLIFIER: u64 = 0x4d4f_4c4c;
    pub const PROBES: u64 = 0x5052_4f42;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A stream of uniform and standard normal variates.
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, domain: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ splitmix(domain);
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        Self { rng, spare: None }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 random bits, shifted off zero.
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the Box–Muller transform.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * math::sin(theta));
        r * math::cos(theta)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }
}
