//! Minimize the kernel functional by gradient descent and compare with the
//! closed-form Gaussian.

use obslab::fluctuation::{kernel_functional, minimize_kernel_functional, KernelSolver, PhysicsParams};
use obslab::lattice::Grid;

fn main() -> obslab::Result<()> {
    let params = PhysicsParams::new(1.0, 1.0, 0.1)?;
    let std = params.position_std();
    let n = 512;
    let lattice = Grid::centered(n, 16.0 * std / n as f64)?;

    let gd = minimize_kernel_functional(&params, &lattice, KernelSolver::GradientDescent)?;
    let exact = minimize_kernel_functional(&params, &lattice, KernelSolver::ClosedForm)?;

    let worst = gd
        .weights()
        .values()
        .iter()
        .zip(exact.weights().values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    println!("max |P_gd - P_exact|  {worst:.3e}");
    println!("variance  gd {:.8}  predicted {:.8}", gd.variance(), std * std);
    println!(
        "functional gd {:.12}  exact {:.12}",
        kernel_functional(gd.weights().values(), &lattice, &params),
        kernel_functional(exact.weights().values(), &lattice, &params)
    );
    Ok(())
}
