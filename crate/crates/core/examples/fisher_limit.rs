//! Kernel-averaged KL divergence of a density against its own shifts,
//! compared with `(ħΔt/4m)·Fisher` as Δt shrinks.

use obslab::fluctuation::PhysicsParams;
use obslab::infometrics::{fisher_functional, fisher_limit_report};
use obslab::lattice::{Grid, ProbabilityDensity};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(16384, 24.0, -12.0)?;
    let params = PhysicsParams::new(1.0, 1.0, 0.01)?;
    let dts = [1e-2, 5e-3, 2.5e-3, 1e-3];

    // Two-bump mixture; for a single Gaussian the limit is already exact.
    let rho = ProbabilityDensity::from_fn(grid, |x| (-(x - 1.0).powi(2) / 2.0).exp() + (-(x + 1.0).powi(2) / 2.0).exp())?;
    println!("Fisher information {:.8}", fisher_functional(&rho));
    println!("{:>8} {:>14} {:>14} {:>10}", "dt", "E[KL]", "limit", "rel err");
    for row in fisher_limit_report(&rho, &params, &dts)? {
        println!("{:>8} {:>14.6e} {:>14.6e} {:>10.2e}", row.dt, row.expected, row.predicted, row.relative_error);
    }
    Ok(())
}
