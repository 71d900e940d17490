//! Seeded random states for verification sweeps and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::state::{Kind, LatticeState};

/// Range for positive `a` coordinates.
pub const A_RANGE: (f64, f64) = (0.5, 2.0);
/// Range for `b`, `q` and `p` coordinates.
pub const SIGNED_RANGE: (f64, f64) = (-1.0, 1.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a, used to derive per-check streams from one seed.
pub fn stream_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed
}

pub fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Random coordinates of a valid state; `sites` is `N` for the Toda kinds and
/// `VolterraQ`, `m` for `VolterraA`.
pub fn random_coords<R: Rng>(rng: &mut R, kind: Kind, sites: usize) -> Vec<f64> {
    match kind {
        Kind::TodaAb => {
            let mut x = uniform(rng, A_RANGE, sites - 1);
            x.extend(uniform(rng, SIGNED_RANGE, sites));
            x
        }
        Kind::TodaQp => uniform(rng, SIGNED_RANGE, 2 * sites),
        Kind::VolterraA => uniform(rng, A_RANGE, sites),
        Kind::VolterraQ => uniform(rng, SIGNED_RANGE, sites),
    }
}

pub fn random_state<R: Rng>(rng: &mut R, kind: Kind, sites: usize) -> crate::error::Result<LatticeState> {
    LatticeState::new(kind, random_coords(rng, kind, sites))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = random_coords(&mut rng(7), Kind::TodaAb, 4);
        let b = random_coords(&mut rng(7), Kind::TodaAb, 4);
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        assert!(LatticeState::new(Kind::TodaAb, a).is_ok());
        assert_ne!(stream_seed(1, "x"), stream_seed(1, "y"));
    }
}
