//! Build the Gaussian fluctuation kernel, sample it and check the exact
//! uncertainty relation `<Δx Δp> = ħ/2`.

use obslab::fluctuation::{
    displacement_lattice, gaussian_kernel, sample_fluctuations, sample_moments, uncertainty_report, PhysicsParams,
};

fn main() -> obslab::Result<()> {
    let params = PhysicsParams::new(1.0, 1.0, 0.1)?;
    let std = params.position_std();
    let lattice = displacement_lattice(std, std / 16.0, 8.0)?;
    let kernel = gaussian_kernel(&params, &lattice)?;

    let r = uncertainty_report(&kernel, &params);
    println!("kernel std      {std:.6}");
    println!("<dx^2>          {:.6e}", r.dx2);
    println!("<dp^2>          {:.6e}", r.dp2);
    println!("<dx dp>         {:.12}  (hbar/2 = 0.5)", r.cross);

    let samples = sample_fluctuations(&kernel, 200_000, 7);
    let (mean, var) = sample_moments(&samples);
    let cross = params.mass() / params.dt() * var;
    println!("sampled mean    {mean:+.2e}");
    println!("sampled <dx dp> {cross:.4}");
    Ok(())
}
