//! Momentum states as pairs of energy channels, and the arrival density
//! computed in both representations.

use toa::arrival::{auto_time_grid, kijowski_distribution, kijowski_energy};
use toa::states::{build_state, from_energy_channels, to_energy_channels, Channel, GaussianSpec, GridParams, PhysicalConstants};
use toa::C64;

fn main() -> toa::Result<()> {
    let state = build_state(
        &[
            GaussianSpec::new(5.0, 0.2, -10.0),
            GaussianSpec::new(-4.0, 0.3, 6.0).with_weight(C64::new(0.0, 0.7)),
        ],
        PhysicalConstants::default(),
        GridParams { pmax: 10.0, n: 4096 },
    )?;
    let channels = to_energy_channels(&state)?;
    println!("|psi|^2 = {:.12}", state.norm_sqr());
    println!(
        "|psi+|^2 + |psi-|^2 = {:.12} + {:.12}",
        channels.channel_norm_sqr(Channel::Plus),
        channels.channel_norm_sqr(Channel::Minus)
    );
    let back = from_energy_channels(&channels, state.grid())?;
    let err = back
        .values()
        .iter()
        .zip(state.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("round trip max error {err:.2e}");

    let grid = auto_time_grid(&state)?;
    let a = kijowski_distribution(&state, &grid)?;
    let b = kijowski_energy(&channels, &grid)?;
    let diff = a.density.iter().zip(&b.density).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("arrival density: momentum vs energy representation, sup difference {diff:.2e} (max {:.4})", a.max());
    Ok(())
}
