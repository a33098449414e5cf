#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toa::states::{build_state, GaussianSpec, GridParams, MomentumState, PhysicalConstants};
use toa::C64;

pub const PARAMS: GridParams = GridParams { pmax: 10.0, n: 4096 };

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Packet with `|p0| ∈ [3, 6]`, `σ ∈ [0.15, 0.3]`, placed at distance
/// `[4, 12]` on the side it arrives from, with a random complex weight.
pub fn random_packet(rng: &mut impl Rng, positive: bool) -> GaussianSpec {
    let sign = if positive { 1.0 } else { -1.0 };
    let p0 = sign * rng.gen_range(3.0..6.0);
    let sigma = rng.gen_range(0.15..0.3);
    let x0 = -sign * rng.gen_range(4.0..12.0);
    let w = C64::from_polar(rng.gen_range(0.3..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
    GaussianSpec::new(p0, sigma, x0).with_weight(w)
}

/// Superposition of one to three packets of either sign.
pub fn random_state(rng: &mut impl Rng) -> MomentumState {
    let k = rng.gen_range(1..=3);
    let specs: Vec<GaussianSpec> = (0..k)
        .map(|_| {
            let positive = rng.gen_bool(0.5);
            random_packet(rng, positive)
        })
        .collect();
    build_state(&specs, PhysicalConstants::default(), PARAMS).unwrap()
}

/// Superposition of one or two positive-momentum packets.
pub fn random_positive_state(rng: &mut impl Rng) -> MomentumState {
    let k = rng.gen_range(1..=2);
    let specs: Vec<GaussianSpec> = (0..k).map(|_| random_packet(rng, true)).collect();
    build_state(&specs, PhysicalConstants::default(), PARAMS).unwrap()
}

pub fn gaussian(p0: f64, sigma: f64, x0: f64) -> MomentumState {
    build_state(&[GaussianSpec::new(p0, sigma, x0)], PhysicalConstants::default(), PARAMS).unwrap()
}

pub fn state_of(specs: &[GaussianSpec]) -> MomentumState {
    build_state(specs, PhysicalConstants::default(), PARAMS).unwrap()
}

/// `∫ w |a - b|²` on a common grid.
pub fn l2_distance(a: &[C64], b: &[C64], weights: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| w * (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
