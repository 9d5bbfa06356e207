//! The momentum-kernel divergence grows without bound as Δt shrinks and
//! stops depending on the density.

use obslab::experiment::runner::momentum_test_densities;
use obslab::fluctuation::{displacement_lattice, momentum_kernel, PhysicsParams};
use obslab::infometrics::{expected_divergence_under_kernel, Divergence};
use obslab::lattice::Grid;

fn main() -> obslab::Result<()> {
    let grid = Grid::new(10000, 1000.0, -500.0)?;
    let densities = momentum_test_densities(grid)?;
    for dt in [1e-1, 1e-2, 1e-3] {
        let params = PhysicsParams::new(1.0, 1.0, dt)?;
        let lattice = displacement_lattice(params.momentum_std(), grid.dx(), 8.0)?;
        let kernel = momentum_kernel(&params, &lattice)?;
        let values: Vec<f64> = densities
            .iter()
            .map(|(_, p)| expected_divergence_under_kernel(Divergence::KullbackLeibler, p, &kernel))
            .collect::<obslab::Result<_>>()?;
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("dt {dt:<6} E[KL] {values:.4?}  spread {:.2}%", 100.0 * (hi - lo) / hi);
    }
    Ok(())
}
