//! Two-cube test systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charges::ChargeSystem;
use crate::error::{Error, Result};

/// `N/2` unit charges uniform in `[0, 1/2)^3`, `ceil(0.55 N/2)` of them
/// positive, and `N/2` in `[1/2, 1)^3` with the signs mirrored, so the
/// system is exactly neutral. Positions are scaled by `length`.
pub fn generate_biased_cubes(n: usize, seed: u64, length: f64) -> Result<ChargeSystem> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Input(format!("charge count {n} must be positive and even")));
    }
    let half = n / 2;
    let positive = (55 * half).div_ceil(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut charges = Vec::with_capacity(n);
    for (shift, sign) in [(0.0, 1.0), (0.5, -1.0)] {
        for k in 0..half {
            let p: [f64; 3] = std::array::from_fn(|_| (shift + 0.5 * rng.random::<f64>()) * length);
            positions.push(p);
            charges.push(if k < positive { sign } else { -sign });
        }
    }
    ChargeSystem::new(positions, charges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_the_bias_rule() {
        let c = generate_biased_cubes(100, 3, 1.0).unwrap();
        let pos1 = c.charges[..50].iter().filter(|&&q| q > 0.0).count();
        let neg2 = c.charges[50..].iter().filter(|&&q| q < 0.0).count();
        assert_eq!(pos1, 28);
        assert_eq!(neg2, 28);
        assert_eq!(c.total_charge(), 0.0);
        assert!(c.positions[..50].iter().all(|p| p.iter().all(|&x| (0.0..=0.5).contains(&x))));
        assert!(c.positions[50..].iter().all(|p| p.iter().all(|&x| (0.5..=1.0).contains(&x))));
    }

    #[test]
    fn deterministic_and_rejects_odd() {
        assert_eq!(generate_biased_cubes(10, 9, 2.0).unwrap(), generate_biased_cubes(10, 9, 2.0).unwrap());
        assert!(generate_biased_cubes(11, 9, 1.0).is_err());
    }
}
