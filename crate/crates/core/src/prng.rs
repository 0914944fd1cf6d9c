//! SplitMix64 generator and the integer-threshold samplers used by world
//! generation and the built-in random strategy.
//!
//! Every sampling path works on raw 64-bit draws compared against integer
//! thresholds, so a given seed yields the same stream on every platform.

use std::fmt;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Restart rounds allowed in [`geometric_bounded`] before giving up.
pub const MAX_RESTART_ROUNDS: u32 = 10_000;

/// SplitMix64 pseudorandom generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    state: u64,
}

impl Generator {
    pub fn seed(value: u64) -> Self {
        Generator { state: value }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Anything that hands out raw 64-bit draws. Lets tests count draws.
pub trait DrawSource {
    fn draw(&mut self) -> u64;
}

impl DrawSource for Generator {
    #[inline]
    fn draw(&mut self) -> u64 {
        self.next_u64()
    }
}

/// A probability `num/den` realized as a threshold against a 64-bit draw.
///
/// A draw `u` is a success iff `u < floor(2^64 * num / den)`. The threshold
/// is held as `u128` so that `p = 1` (threshold `2^64`) is representable.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probability {
    num: u64,
    den: u64,
    threshold: u128,
}

impl Probability {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::Config(format!(
                "invalid probability {num}/{den}: need 0 <= num <= den and den > 0"
            )));
        }
        let threshold = ((1u128 << 64) * num as u128) / den as u128;
        Ok(Probability { num, den, threshold })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn threshold(&self) -> u128 {
        self.threshold
    }

    /// `1 - p`, as the exact rational `(den - num)/den`.
    pub fn complement(&self) -> Self {
        Probability::new(self.den - self.num, self.den).expect("complement of a valid probability")
    }

    /// True when no draw can ever succeed.
    pub fn is_zero(&self) -> bool {
        self.threshold == 0
    }
}

impl fmt::Debug for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// One Bernoulli trial. Consumes exactly one draw.
#[inline]
pub fn bernoulli<G: DrawSource + ?Sized>(gen: &mut G, p: Probability) -> bool {
    (gen.draw() as u128) < p.threshold
}

/// Bernoulli trial from a raw fraction, validating the bounds first.
pub fn bernoulli_ratio<G: DrawSource + ?Sized>(gen: &mut G, num: u64, den: u64) -> Result<bool> {
    Ok(bernoulli(gen, Probability::new(num, den)?))
}

/// Bounded geometric sample over `0..=k`.
///
/// Candidates `0, 1, ..., k` each get one trial with probability `p`; the
/// first success wins. If every candidate fails the walk restarts at 0, so
/// `P(i) = p(1-p)^i / (1 - (1-p)^(k+1))`.
///
/// # Panics
///
/// After [`MAX_RESTART_ROUNDS`] full rounds without success, which for any
/// nonzero `p` used here is astronomically unlikely and for `p = 0` is
/// certain.
pub fn geometric_bounded<G: DrawSource + ?Sized>(gen: &mut G, k: u32, p: Probability) -> u32 {
    for _ in 0..MAX_RESTART_ROUNDS {
        for candidate in 0..=k {
            if bernoulli(gen, p) {
                return candidate;
            }
        }
    }
    panic!("geometric_bounded(k={k}, p={p}) exceeded {MAX_RESTART_ROUNDS} restart rounds");
}

/// Sampler for the subprogram field: candidate 0 is tried with `p_zero`,
/// candidates `1..=k` with `p`, restarting from candidate 0 on a full miss.
pub fn call_state_sample<G: DrawSource + ?Sized>(
    gen: &mut G,
    k: u32,
    p_zero: Probability,
    p: Probability,
) -> u32 {
    for _ in 0..MAX_RESTART_ROUNDS {
        if bernoulli(gen, p_zero) {
            return 0;
        }
        for candidate in 1..=k {
            if bernoulli(gen, p) {
                return candidate;
            }
        }
    }
    panic!("call_state_sample(k={k}) exceeded {MAX_RESTART_ROUNDS} restart rounds");
}

/// Unbiased integer in `0..n` by rejection.
///
/// # Panics
///
/// If `n == 0`.
#[inline]
pub fn uniform_below<G: DrawSource + ?Sized>(gen: &mut G, n: u64) -> u64 {
    assert!(n >= 1, "uniform_below requires n >= 1");
    let zone = (1u128 << 64) - ((1u128 << 64) % n as u128);
    loop {
        let u = gen.draw();
        if (u as u128) < zone {
            return u % n;
        }
    }
}
