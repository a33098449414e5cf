//! The constant-field time operator `p/mg`: its distribution is the
//! momentum density pushed forward through `t = p/mg`.

use toa::extensions::constant_field_distribution;
use toa::states::{build_state, GaussianSpec, GridParams, PhysicalConstants};

fn main() -> toa::Result<()> {
    let state = build_state(
        &[GaussianSpec::new(5.0, 0.2, -10.0)],
        PhysicalConstants::default(),
        GridParams { pmax: 10.0, n: 4096 },
    )?;
    println!("{:>6} {:>12} {:>12} {:>12}", "g", "total", "mean", "std");
    for g in [1.0, 2.0, 5.0, -1.0] {
        let d = constant_field_distribution(&state, g)?;
        let mean = d.raw_moment(1) / d.total;
        let std = (d.raw_moment(2) / d.total - mean * mean).sqrt();
        println!("{g:>6.1} {:>12.9} {mean:>12.9} {std:>12.9}", d.total);
    }
    Ok(())
}
