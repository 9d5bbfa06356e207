//! Position/momentum transform pair and the operator checks built on it.
//!
//! With `ħ_β = sqrt(β)·ħ_eff` the transform is
//! `ψ(p) = (2πħ_β)^(-1/2) Σ_x Ψ(x) e^{-i p x/ħ_β} dx` on a centred momentum
//! grid with `dp·dx = 2πħ_β/n`, which makes the discrete map unitary.

use crate::error::{Error, Result};
use crate::fluctuation::PhysicsParams;
use crate::fourier;
use crate::lattice::{differentiate, Grid, Scheme, WaveFunction};
use crate::Complex64;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn hbar_beta(params: &PhysicsParams, beta: f64) -> f64 {
    beta.sqrt() * params.hbar_eff()
}

/// Centred momentum grid conjugate to `x_grid`.
pub fn conjugate_momentum_grid(x_grid: &Grid, params: &PhysicsParams, beta: f64) -> Result<Grid> {
    check_beta(beta)?;
    let n = x_grid.n();
    let dp = 2.0 * std::f64::consts::PI * hbar_beta(params, beta) / (n as f64 * x_grid.dx());
    Grid::centered(n, dp)
}

fn check_conjugate(x_grid: &Grid, p_grid: &Grid, hb: f64) -> Result<()> {
    let product = x_grid.dx() * p_grid.dx();
    let expected = 2.0 * std::f64::consts::PI * hb / x_grid.n() as f64;
    if x_grid.n() != p_grid.n() || (product - expected).abs() > 1e-12 * expected {
        return Err(Error::NonConjugateGrids { product, expected });
    }
    Ok(())
}

/// `e^{iθ}` for `θ = a·b/ħ` reduced modulo 2π before the exponential.
fn phase(a: f64, b: f64, hb: f64) -> Complex64 {
    let t = (a * b / hb).rem_euclid(2.0 * std::f64::consts::PI);
    Complex64::from_polar(1.0, t)
}

/// Transform a position-space wave function to its conjugate momentum grid.
pub fn x_to_p(psi_x: &WaveFunction, params: &PhysicsParams, beta: f64) -> Result<WaveFunction> {
    let xg = *psi_x.grid();
    let pg = conjugate_momentum_grid(&xg, params, beta)?;
    let hb = hbar_beta(params, beta);
    let (x0, p0) = (xg.x0(), pg.x0());
    let c = xg.dx() / (2.0 * std::f64::consts::PI * hb).sqrt();
    let mut buf: Vec<Complex64> = psi_x
        .values()
        .iter()
        .enumerate()
        .map(|(k, z)| z * phase(k as f64 * xg.dx(), p0, hb).conj())
        .collect();
    fourier::forward(&mut buf);
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= c * (phase(p0, x0, hb) * phase(j as f64 * pg.dx(), x0, hb)).conj();
    }
    WaveFunction::new(pg, buf)
}

/// Inverse of [`x_to_p`] onto `x_grid`, which must be conjugate to the
/// momentum grid of `psi_p`.
pub fn p_to_x(psi_p: &WaveFunction, x_grid: &Grid, params: &PhysicsParams, beta: f64) -> Result<WaveFunction> {
    check_beta(beta)?;
    let pg = *psi_p.grid();
    let hb = hbar_beta(params, beta);
    check_conjugate(x_grid, &pg, hb)?;
    let (x0, p0) = (x_grid.x0(), pg.x0());
    let n = pg.n() as f64;
    let c = pg.dx() * n / (2.0 * std::f64::consts::PI * hb).sqrt();
    let mut buf: Vec<Complex64> = psi_p
        .values()
        .iter()
        .enumerate()
        .map(|(j, z)| z * phase(p0, x0, hb) * phase(j as f64 * pg.dx(), x0, hb))
        .collect();
    fourier::inverse(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= c * phase(k as f64 * x_grid.dx(), p0, hb);
    }
    WaveFunction::new(*x_grid, buf)
}

/// Mean momentum computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumConsistency {
    pub p_via_operator: f64,
    pub p_via_transform: f64,
    pub difference: f64,
}

/// `<Ψ|-iħ∂|Ψ>` against `Σ p |ψ(p)|² dp`.
pub fn momentum_consistency(psi_x: &WaveFunction, params: &PhysicsParams) -> Result<MomentumConsistency> {
    let norm = psi_x.norm_sqr();
    let h = params.hbar_eff();
    let d = differentiate(psi_x, 1, Scheme::Spectral)?;
    let p_via_operator = psi_x
        .values()
        .iter()
        .zip(d.values())
        .map(|(z, dz)| (z.conj() * Complex64::new(0.0, -h) * dz).re)
        .sum::<f64>()
        * psi_x.grid().dx()
        / norm;
    let psi_p = x_to_p(psi_x, params, 1.0)?;
    let pg = psi_p.grid();
    let p_via_transform =
        psi_p.values().iter().enumerate().map(|(j, z)| pg.coord(j) * z.norm_sqr()).sum::<f64>() * pg.dx() / norm;
    Ok(MomentumConsistency { p_via_operator, p_via_transform, difference: (p_via_operator - p_via_transform).abs() })
}

/// `<ψ|x̂p̂ - p̂x̂|ψ> / <ψ|ψ>` with `p̂ = -i sqrt(β) ħ ∂` applied spectrally.
///
/// Only meaningful for packets localized well inside the box; fails with
/// `DelocalizedPacket` if the mean ± 6 standard deviations leaves it.
pub fn commutator_report(psi_x: &WaveFunction, params: &PhysicsParams, beta: f64) -> Result<Complex64> {
    check_beta(beta)?;
    let g = *psi_x.grid();
    let dx = g.dx();
    let xs = g.coords();
    let norm = psi_x.norm_sqr();
    let rho = psi_x.density();
    let mean = xs.iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() * dx / norm;
    let width = (xs.iter().zip(&rho).map(|(x, r)| (x - mean).powi(2) * r).sum::<f64>() * dx / norm).sqrt();
    let (left, right) = (g.x0(), g.x0() + g.length());
    if mean - 6.0 * width < left || mean + 6.0 * width >= right {
        return Err(Error::DelocalizedPacket { mean, width, left, right });
    }
    let p_hat = |f: &WaveFunction| -> Result<Vec<Complex64>> {
        let d = differentiate(f, 1, Scheme::Spectral)?;
        let c = Complex64::new(0.0, -hbar_beta(params, beta));
        Ok(d.values().iter().map(|z| c * z).collect())
    };
    let p_psi = p_hat(psi_x)?;
    let x_psi = WaveFunction::new(g, psi_x.values().iter().zip(&xs).map(|(z, x)| z * x).collect())?;
    let p_x_psi = p_hat(&x_psi)?;
    let value: Complex64 = psi_x
        .values()
        .iter()
        .zip(xs.iter().zip(p_psi.iter().zip(&p_x_psi)))
        .map(|(z, (x, (pp, pxp)))| z.conj() * (x * pp - pxp))
        .sum();
    Ok(value * dx / norm)
}
