//! The order-α equation is the standard one with ħ replaced by √α ħ.

use obslab::fluctuation::PhysicsParams;
use obslab::lattice::Grid;
use obslab::packets::coherent_state;
use obslab::schrodinger::{harmonic_potential, split_step_evolve};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(256, 20.0, -10.0)?;
    let v = harmonic_potential(grid, 1.0, 1.0, 0.0)?;
    let base = PhysicsParams::new(1.0, 1.0, 0.1)?;
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let generalized = base.with_alpha(alpha)?;
        let rescaled = base.with_hbar(alpha.sqrt())?;
        let psi0 = coherent_state(grid, generalized.hbar_eff(), 1.0, 1.0, 1.0)?;
        let a = split_step_evolve(&psi0, &v, &generalized, 1e-3, 2000)?;
        let b = split_step_evolve(&psi0, &v, &rescaled, 1e-3, 2000)?;
        println!(
            "alpha {alpha:<4} hbar_eff {:.6}  |psi_a - psi_b| {:.1e}  norm {:.15}",
            generalized.hbar_eff(),
            a.l2_distance(&b)?,
            a.norm_sqr()
        );
    }
    Ok(())
}
