//! The self-adjoint extension family: its distribution depends on the
//! domain phase and is not covariant under time shifts once both energy
//! channels are populated.

use std::f64::consts::PI;

use toa::extensions::{alpha_covariance_violation, alpha_distribution, alpha_moment_check, alpha_time_grid};
use toa::states::{build_state, to_energy_channels, GaussianSpec, GridParams, PhysicalConstants};

fn main() -> toa::Result<()> {
    let state = build_state(
        &[GaussianSpec::new(5.0, 0.2, -10.0), GaussianSpec::new(-5.0, 0.2, -10.0)],
        PhysicalConstants::default(),
        GridParams { pmax: 10.0, n: 4096 },
    )?;
    let channels = to_energy_channels(&state)?;
    let grid = alpha_time_grid(&channels, 0.0)?;
    println!("{:>8} {:>10} {:>10} {:>12}", "alpha", "total", "peak", "max density");
    for alpha in [0.0, PI / 2.0, PI, 1.5 * PI] {
        let d = alpha_distribution(&channels, alpha, &grid)?;
        println!("{alpha:>8.4} {:>10.6} {:>10.4} {:>12.6}", d.total, d.argmax(), d.max());
    }
    println!("\n{}", alpha_covariance_violation(&channels, 0.0, 1.0)?.summary());
    for n in 1..=3 {
        println!("{}", alpha_moment_check(&channels, 0.0, n)?.summary());
    }
    Ok(())
}
