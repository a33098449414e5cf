//! Deficiency subspaces of the time operator: two square-integrable
//! eigenvectors with eigenvalue +i, none with -i.

use toa::arrival::deficiency_check;

fn main() {
    let report = deficiency_check();
    println!("{}", report.summary());
    for c in &report.components {
        println!("  {}", c.summary());
        if !c.details.is_empty() {
            println!("    {}", c.details);
        }
    }
    println!("{}", report.details);
}
