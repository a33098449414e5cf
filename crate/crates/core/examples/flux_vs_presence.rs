//! Mean passage time from the probability current against the mean
//! presence time: they coincide only in the classical limit. Broad packets
//! reach `p = 0` and leave the operator domain.

use toa::arrival::{arrival_mean_flux, presence_mean};
use toa::states::{build_state, GaussianSpec, GridParams, PhysicalConstants};

fn main() -> toa::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12}", "sigma", "<t>_J", "<T_AB>", "presence");
    for sigma in [0.1, 0.2, 0.4, 0.6] {
        let state = build_state(
            &[GaussianSpec::new(5.0, sigma, -10.0)],
            PhysicalConstants::default(),
            GridParams { pmax: 10.0, n: 4096 },
        )?;
        let (flux, presence) = match (arrival_mean_flux(&state), presence_mean(&state)) {
            (Ok(f), Ok(p)) => (f, p),
            (Err(e), _) | (_, Err(e)) => {
                println!("{sigma:>6.2} refused: {e}");
                continue;
            }
        };
        println!(
            "{sigma:>6.2} {:>12.6} {:>12.6} {:>12.6}",
            flux.flux_mean, flux.operator_mean, presence.operator_mean
        );
    }
    Ok(())
}
