//! Position/momentum transform at several β: round trip, momentum
//! expectation, free evolution in either picture and the commutator.

use obslab::fluctuation::PhysicsParams;
use obslab::lattice::{Grid, RealField};
use obslab::packets::gaussian_packet;
use obslab::schrodinger::{momentum_free_evolve, split_step_evolve};
use obslab::transform::{commutator_report, momentum_consistency, p_to_x, x_to_p};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(512, 40.0, -20.0)?;
    let params = PhysicsParams::new(1.0, 1.0, 0.1)?;
    let psi = gaussian_packet(grid, 1.0, 0.5, 1.5)?;

    for beta in [1.0, 2.0] {
        let back = p_to_x(&x_to_p(&psi, &params, beta)?, &grid, &params, beta)?;
        let c = commutator_report(&psi, &params, beta)?;
        println!("beta {beta}: round trip {:.1e}, [x,p] = {:.6} + {:.6}i", psi.l2_distance(&back)?, c.re, c.im);
    }

    let m = momentum_consistency(&psi, &params)?;
    println!("<p> operator {:.12}  transform {:.12}", m.p_via_operator, m.p_via_transform);

    let t = 1.0;
    let direct = split_step_evolve(&psi, &RealField::zeros(grid), &params, 0.1, 10)?;
    let via_p = p_to_x(&momentum_free_evolve(&x_to_p(&psi, &params, 1.0)?, &params, t)?, &grid, &params, 1.0)?;
    println!("free evolution, x vs p picture {:.1e}", direct.l2_distance(&via_p)?);
    Ok(())
}
