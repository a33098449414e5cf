//! Non-orthogonality of the half-line momentum states, smeared with
//! Gaussian windows: position-space overlap against the delta plus
//! principal-value kernel.

use toa::halfline::{overlap_kernel_sides, GaussianWindow};
use toa::states::PhysicalConstants;

fn main() -> toa::Result<()> {
    let pairs = [
        (GaussianWindow::new(0.5, 0.4), GaussianWindow::new(0.5, 0.4)),
        (GaussianWindow::new(0.5, 0.4), GaussianWindow::new(1.2, 0.3)),
        (GaussianWindow::new(-1.0, 0.5), GaussianWindow::new(2.0, 0.25)),
    ];
    for (f, g) in pairs {
        let (lhs, rhs) = overlap_kernel_sides(&f, &g, PhysicalConstants::default())?;
        println!(
            "f at {:>5.2}, g at {:>5.2}:  <F|G> = {:>10.7} {:+.7}i   kernel = {:>10.7} {:+.7}i",
            f.center, g.center, lhs.re, lhs.im, rhs.re, rhs.im
        );
    }
    Ok(())
}
