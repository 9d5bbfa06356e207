//! Evolve an oscillator coherent state for one period with the split-step
//! solver and with the hydrodynamic (ρ, S) integrator on the window where
//! the density stays resolvable, then compare densities.

use std::f64::consts::PI;

use obslab::fluctuation::PhysicsParams;
use obslab::hydrodyn::{from_wavefunction, max_stable_step, HydroConfig, MadelungEvolver};
use obslab::lattice::Grid;
use obslab::packets::coherent_state;
use obslab::schrodinger::{density_l2, harmonic_potential, SplitStepper};

fn main() -> obslab::Result<()> {
    let grid = Grid::new(256, 20.0, -10.0)?;
    let params = PhysicsParams::new(1.0, 1.0, 0.1)?;
    let v = harmonic_potential(grid, 1.0, 1.0, 0.0)?;
    let psi0 = coherent_state(grid, 1.0, 1.0, 1.0, 1.0)?;
    let period = 2.0 * PI;

    let steps = 4000;
    let stepper = SplitStepper::new(&v, &params, period / steps as f64)?;
    let mut buf = psi0.values().to_vec();
    let mut floor = psi0.density();
    for _ in 0..steps {
        stepper.step(&mut buf);
        for (f, z) in floor.iter_mut().zip(&buf) {
            *f = f.min(z.norm_sqr());
        }
    }
    let rho0 = psi0.density();
    let rho1: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();

    let inside: Vec<usize> = (0..grid.n()).filter(|&i| floor[i] >= 1e-11).collect();
    let a = inside[0];
    let span = inside[inside.len() - 1] - a + 1;
    let len = span - span % 2;
    let mass0: f64 = rho0[a..a + len].iter().sum::<f64>() * grid.dx();

    let wpsi = psi0.window(a, len)?;
    let state = from_wavefunction(&wpsi, params.hbar_eff())?;
    let cfg = HydroConfig::default();
    let n_hydro = (period / max_stable_step(wpsi.grid(), &params, &cfg)).ceil() as usize;
    let mut ev = MadelungEvolver::new(&state, &v.window(a, len)?, &params, period / n_hydro as f64, &cfg)?;
    ev.run(n_hydro)?;
    let hydro: Vec<f64> = ev.density().iter().map(|r| r * mass0).collect();

    println!("window [{:.3}, {:.3}], mass {mass0:.12}", grid.coord(a), grid.coord(a + len - 1));
    println!("split-step return L2   {:.3e}", density_l2(&rho0, &rho1, grid.dx()));
    println!("hydro vs split-step L2 {:.3e} ({n_hydro} RK4 steps)", density_l2(&hydro, &rho1[a..a + len], grid.dx()));
    Ok(())
}
