//! Arrival-time density of a fast Gaussian packet at x = 0 and its
//! classical limit `t ≈ |x0| m / p0`.

use toa::arrival::{covariance_check, kijowski_auto};
use toa::states::{build_state, GaussianSpec, GridParams, PhysicalConstants};

fn main() -> toa::Result<()> {
    let constants = PhysicalConstants::default();
    let state = build_state(
        &[GaussianSpec::new(5.0, 0.2, -10.0)],
        constants,
        GridParams { pmax: 10.0, n: 4096 },
    )?;
    let dist = kijowski_auto(&state)?;
    let mean = dist.raw_moment(1) / dist.total;
    let var = dist.raw_moment(2) / dist.total - mean * mean;
    println!("total probability  {:.10}", dist.total);
    println!("mean arrival time  {mean:.6}  (classical 2.0)");
    println!("peak               {:.6}", dist.argmax());
    println!("spread             {:.6}", var.sqrt());

    let step = (dist.grid.len() / 12).max(1);
    println!("\n{:>10}  {:>14}", "t", "density");
    for (t, d) in dist.grid.nodes().iter().zip(&dist.density).step_by(step) {
        println!("{t:>10.4}  {d:>14.6e}");
    }

    let report = covariance_check(&state, 0.75, None)?;
    println!("\n{}", report.summary());
    Ok(())
}
