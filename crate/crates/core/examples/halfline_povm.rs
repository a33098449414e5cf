//! Momentum on the half-line for `ψ(x) = 2λ^{3/2} x e^{-λx}`: the POVM density,
//! its low moments, and the third moment the density cannot reproduce.

use std::f64::consts::PI;

use toa::halfline::{moment, moment_with_tolerance, momentum_density, operator_moment, HalfLineState};
use toa::numerics::Grid;
use toa::states::PhysicalConstants;

fn main() -> toa::Result<()> {
    let state = HalfLineState::linear_exponential(PhysicalConstants::default(), 1.0, 40.0, 8001)?;
    let dist = momentum_density(&state, &Grid::symmetric(200.0, 8001)?)?;
    println!("Pi(0) = {:.8} (2/pi = {:.8})", dist.density[4000], 2.0 / PI);
    println!("total = {:.8}", moment(&dist, 0)?);
    println!("<p> with relaxed tail tolerance = {:.2e}", moment_with_tolerance(&dist, 1, 1e-4)?);
    match moment(&dist, 2) {
        Ok(m) => println!("second moment {m}"),
        Err(e) => println!("second moment refused: {e}"),
    }
    let p3 = operator_moment(&state, 3)?;
    println!("<psi|p^3 psi> = {:.3e} + {:.6}i  (expected imaginary part 2)", p3.re, p3.im);
    Ok(())
}
