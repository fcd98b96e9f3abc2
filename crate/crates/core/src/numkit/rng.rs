use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 generator. The whole state is one `u64`, so a stream is fully
/// described by its seed and reproducible in any language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Top 53 bits divided by 2^53, in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidRange { lo, hi });
        }
        let v = lo + (hi - lo) * self.next_f64();
        // lo + (hi-lo)*u can round up to hi when u is close to 1
        Ok(if v < hi { v } else { hi.next_down() })
    }

    /// Standard normal draw (Box-Muller, one value per two uniforms).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Free-function form of [`Rng::next_uniform`].
pub fn rng_next_uniform(rng: &mut Rng, lo: f64, hi: f64) -> Result<f64> {
    rng.next_uniform(lo, hi)
}

/// `index`-th output (0-based) of the splitmix64 stream seeded with `seed`.
/// Used to derive independent sub-seeds without sharing generator state.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = Rng::new(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index)));
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_stream_seed_zero() {
        // published splitmix64 test vector
        let mut rng = Rng::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 7_960_286_522_194_355_700);
        assert_eq!(rng.next_u64(), 487_617_019_471_545_679);
    }

    #[test]
    fn seed_42_first_uniform() {
        let mut rng = Rng::new(42);
        assert_eq!(rng.next_uniform(0.0, 1.0).unwrap(), 0.7415648787718233);
    }

    #[test]
    fn fresh_states_agree() {
        let a = Rng::new(99).next_uniform(-3.0, 5.0).unwrap();
        let b = Rng::new(99).next_uniform(-3.0, 5.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn range_contract() {
        let mut rng = Rng::new(5);
        for _ in 0..10_000 {
            let v = rng.next_uniform(0.0, 1.0).unwrap();
            assert!((0.0..1.0).contains(&v));
        }
        assert!(matches!(
            rng.next_uniform(1.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            rng.next_uniform(2.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn derived_seed_matches_stream_position() {
        let mut rng = Rng::new(11);
        let stream: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
        for (i, v) in stream.iter().enumerate() {
            assert_eq!(derive_seed(11, i as u64), *v);
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = Rng::new(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }
}
