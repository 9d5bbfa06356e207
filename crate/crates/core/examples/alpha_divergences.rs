//! KL, Rényi and Tsallis divergences between two Gaussians, and their
//! convergence to KL as the order approaches one.

use obslab::infometrics::{kl_divergence, renyi_divergence, tsallis_divergence, DivergenceOrder};
use obslab::lattice::{Grid, ProbabilityDensity};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(4096, 40.0, -20.0)?;
    let p = ProbabilityDensity::from_fn(grid, |x| (-x * x / 2.0).exp())?;
    let q = ProbabilityDensity::from_fn(grid, |x| (-(x - 0.5).powi(2) / 2.0).exp())?;

    // Shift 0.5 between unit Gaussians: KL = 0.125, Rényi_a = 0.125 a.
    println!("KL          {:.10}", kl_divergence(&p, &q)?);
    for a in [0.5, 0.9, 0.999, 1.001, 2.0] {
        let o = DivergenceOrder::new(a)?;
        println!(
            "alpha {a:<6} renyi {:.10}  tsallis {:.10}",
            renyi_divergence(o, &p, &q)?,
            tsallis_divergence(o, &p, &q)?
        );
    }
    Ok(())
}
