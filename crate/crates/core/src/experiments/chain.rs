use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::games::{build_cycle_chain, matching_pennies, Modulation, PolymatrixGame};
use crate::Result;

// Independent streams so that changing the player count does not reshuffle the other draws.
const MODULATION_STREAM: u64 = 1;
const PROFILE_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// One sine per edge: amplitude in `[0.5, 1.5]`, angular frequency `2π/T`, phase in `[0, 2π)`.
pub fn toroid_modulations(players: usize, seed: u64, period: f64) -> Vec<Modulation> {
    let mut r = rng(seed, MODULATION_STREAM);
    (0..players)
        .map(|_| {
            let amplitude = r.gen_range(0.5..1.5);
            let phase = r.gen_range(0.0..TAU);
            Modulation::sine(amplitude, TAU / period, phase)
        })
        .collect()
}

/// Cycle of Matching Pennies games, each rescaled by its own random sine.
pub fn toroid_chain(players: usize, seed: u64, period: f64) -> Result<PolymatrixGame> {
    build_cycle_chain(
        players,
        &toroid_modulations(players, seed, period),
        &matching_pennies(),
        period,
    )
}

/// Flat two-action profile with first-action probabilities drawn from `[lo, hi)`.
pub fn random_interior_profile(players: usize, seed: u64, lo: f64, hi: f64) -> Vec<f64> {
    let mut r = rng(seed, PROFILE_STREAM);
    (0..players)
        .flat_map(|_| {
            let p = r.gen_range(lo..hi);
            [p, 1.0 - p]
        })
        .collect()
}
