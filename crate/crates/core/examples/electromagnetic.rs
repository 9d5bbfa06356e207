//! A packet in a constant vector potential drifts at (ħk0 - qA0)/m.

use obslab::fluctuation::PhysicsParams;
use obslab::lattice::{Grid, RealField};
use obslab::packets::gaussian_packet;
use obslab::schrodinger::{em_evolve, observables, EMPotential};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(1024, 80.0, -40.0)?;
    let params = PhysicsParams::new(1.0, 1.0, 0.1)?.with_charge(1.0)?;
    let (k0, a0) = (2.0, 0.5);
    let em = EMPotential::uniform(grid, a0, 0.0, 1.0)?;
    let psi0 = gaussian_packet(grid, 1.0, -10.0, k0)?;
    let zero = RealField::zeros(grid);

    let (dt, steps) = (1e-3, 2000);
    let x0 = observables(&psi0, &zero, &params)?.mean_x;
    let psi = em_evolve(&psi0, &em, &params, dt, steps)?;
    let x1 = observables(&psi, &zero, &params)?.mean_x;
    let t = dt * steps as f64;

    println!("drift measured  {:.8}", (x1 - x0) / t);
    println!("drift predicted {:.8}", k0 - a0);
    println!("norm drift      {:.2e}", (psi.norm_sqr() - psi0.norm_sqr()).abs());
    Ok(())
}
