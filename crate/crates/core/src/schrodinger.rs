//! Reference wave-function solvers.
//!
//! Every solver takes `ħ_eff = sqrt(alpha)·ħ` from [`PhysicsParams`], so
//! the order-α equation and the standard equation with a rescaled `ħ` run
//! through the same code.

use crate::error::{Error, Result};
use crate::fluctuation::PhysicsParams;
use crate::fourier;
use crate::lattice::{differentiate, Grid, RealField, Scheme, WaveFunction};
use crate::Complex64;

/// Constant vector potential plus scalar potential, with charge `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EMPotential {
    a: RealField,
    phi: RealField,
    q: f64,
}

impl EMPotential {
    /// Fails with `GaugeViolation` unless `A` is constant on the grid.
    pub fn new(a: RealField, phi: RealField, q: f64) -> Result<Self> {
        a.grid().check_same(phi.grid())?;
        if !q.is_finite() {
            return Err(Error::InvalidParameter("charge must be finite".into()));
        }
        let da = differentiate(&a, 1, Scheme::Central)?;
        let max_gradient = da.max_abs();
        if max_gradient > 1e-12 {
            return Err(Error::GaugeViolation { max_gradient });
        }
        Ok(EMPotential { a, phi, q })
    }

    /// Uniform `A0` and `φ0`.
    pub fn uniform(grid: Grid, a0: f64, phi0: f64, q: f64) -> Result<Self> {
        Self::new(RealField::constant(grid, a0)?, RealField::constant(grid, phi0)?, q)
    }

    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    /// The constant value of `A`.
    pub fn a0(&self) -> f64 {
        self.a.values()[0]
    }

    pub fn phi(&self) -> &RealField {
        &self.phi
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Strang split-step propagator for `H = -ħ²/2m ∂² + V`.
#[derive(Debug, Clone)]
pub struct SplitStepper {
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
}

impl SplitStepper {
    pub fn new(v: &RealField, params: &PhysicsParams, dt_step: f64) -> Result<Self> {
        check_step(dt_step)?;
        let h = params.hbar_eff();
        let phase = v.max_abs() * dt_step / h;
        if phase >= std::f64::consts::PI {
            return Err(Error::AliasGuard { phase });
        }
        let half_potential = v
            .values()
            .iter()
            .map(|&vi| Complex64::from_polar(1.0, -vi * dt_step / (2.0 * h)))
            .collect();
        let m = params.mass();
        let kinetic = v
            .grid()
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::from_polar(1.0, -h * k * k * dt_step / (2.0 * m)))
            .collect();
        Ok(SplitStepper { half_potential, kinetic })
    }

    pub fn step(&self, psi: &mut [Complex64]) {
        for (z, u) in psi.iter_mut().zip(&self.half_potential) {
            *z *= u;
        }
        fourier::forward(psi);
        for (z, u) in psi.iter_mut().zip(&self.kinetic) {
            *z *= u;
        }
        fourier::inverse(psi);
        for (z, u) in psi.iter_mut().zip(&self.half_potential) {
            *z *= u;
        }
    }
}

fn check_step(dt_step: f64) -> Result<()> {
    if !(dt_step.is_finite() && dt_step > 0.0) {
        return Err(Error::InvalidParameter(format!("dt_step must be positive, got {dt_step}")));
    }
    Ok(())
}

/// Split-step evolution of `iħ_eff ∂ψ/∂t = (-ħ_eff²/2m ∂² + V) ψ`.
pub fn split_step_evolve(
    psi: &WaveFunction,
    v: &RealField,
    params: &PhysicsParams,
    dt_step: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    psi.grid().check_same(v.grid())?;
    let stepper = SplitStepper::new(v, params, dt_step)?;
    let mut buf = psi.values().to_vec();
    for _ in 0..n_steps {
        stepper.step(&mut buf);
    }
    WaveFunction::new(*psi.grid(), buf)
}

/// Crank–Nicolson propagator for `H = (ħk - qA)²/2m + qφ` with constant `A`.
///
/// Each step solves `(1 + iτH) ψ' = (1 - iτH) ψ`, `τ = dt/2ħ_eff`, by
/// fixed-point iteration preconditioned with the diagonal kinetic part.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    grid: Grid,
    hbar: f64,
    mass: f64,
    q: f64,
    tau: f64,
    potential: Vec<f64>,
    ks: Vec<f64>,
}

const CN_TOL: f64 = 1e-15;
const CN_MAX_ITER: usize = 200;

impl CrankNicolson {
    pub fn new(em: &EMPotential, params: &PhysicsParams, dt_step: f64) -> Result<Self> {
        check_step(dt_step)?;
        let hbar = params.hbar_eff();
        let tau = dt_step / (2.0 * hbar);
        let potential: Vec<f64> = em.phi().values().iter().map(|p| em.q() * p).collect();
        let vmax = potential.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if tau * vmax >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "dt_step too large for the scalar potential (tau*max|q phi| = {})",
                tau * vmax
            )));
        }
        Ok(CrankNicolson {
            grid: *em.grid(),
            hbar,
            mass: params.mass(),
            q: em.q(),
            tau,
            potential,
            ks: em.grid().wavenumbers(),
        })
    }

    fn kinetic_symbol(&self, a: f64) -> Vec<f64> {
        self.ks
            .iter()
            .map(|&k| {
                let p = self.hbar * k - self.q * a;
                p * p / (2.0 * self.mass)
            })
            .collect()
    }

    /// One step with vector potential value `a` during the step.
    pub fn step(&self, psi: &mut Vec<Complex64>, a: f64) -> Result<()> {
        let i_tau = Complex64::new(0.0, self.tau);
        let kin = self.kinetic_symbol(a);

        let apply_kinetic = |x: &[Complex64]| -> Vec<Complex64> {
            let mut b = x.to_vec();
            fourier::forward(&mut b);
            for (z, k) in b.iter_mut().zip(&kin) {
                *z *= k;
            }
            fourier::inverse(&mut b);
            b
        };

        let kpsi = apply_kinetic(psi);
        let rhs: Vec<Complex64> = psi
            .iter()
            .zip(&kpsi)
            .zip(&self.potential)
            .map(|((z, kz), v)| z - i_tau * (kz + v * z))
            .collect();

        let mut x = psi.clone();
        for _ in 0..CN_MAX_ITER {
            let mut b: Vec<Complex64> = rhs.iter().zip(&x).zip(&self.potential).map(|((r, z), v)| r - i_tau * v * z).collect();
            fourier::forward(&mut b);
            for (z, k) in b.iter_mut().zip(&kin) {
                *z /= Complex64::new(1.0, self.tau * k);
            }
            fourier::inverse(&mut b);
            let mut diff = 0.0_f64;
            let mut size = 0.0_f64;
            for (a, b) in x.iter().zip(&b) {
                diff = diff.max((a - b).norm());
                size = size.max(b.norm());
            }
            x = b;
            if diff <= CN_TOL * size {
                *psi = x;
                return Ok(());
            }
        }
        Err(Error::NoConvergence { iterations: CN_MAX_ITER })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Crank–Nicolson evolution in a static electromagnetic potential.
pub fn em_evolve(
    psi: &WaveFunction,
    em: &EMPotential,
    params: &PhysicsParams,
    dt_step: f64,
    n_steps: usize,
) -> Result<WaveFunction> {
    let a0 = em.a0();
    em_evolve_with(psi, em, params, dt_step, n_steps, |_| a0)
}

/// As [`em_evolve`], with the spatially constant `A` replaced by `a_of_t`,
/// sampled at the midpoint of each step.
pub fn em_evolve_with(
    psi: &WaveFunction,
    em: &EMPotential,
    params: &PhysicsParams,
    dt_step: f64,
    n_steps: usize,
    a_of_t: impl Fn(f64) -> f64,
) -> Result<WaveFunction> {
    psi.grid().check_same(em.grid())?;
    let cn = CrankNicolson::new(em, params, dt_step)?;
    let mut buf = psi.values().to_vec();
    for s in 0..n_steps {
        cn.step(&mut buf, a_of_t((s as f64 + 0.5) * dt_step))?;
    }
    WaveFunction::new(*psi.grid(), buf)
}

/// Free evolution in the momentum representation, `ψ(p)·exp(-i p² t/2mħ_eff)`.
/// The grid coordinates of `psi_p` are momenta.
pub fn momentum_free_evolve(psi_p: &WaveFunction, params: &PhysicsParams, t: f64) -> Result<WaveFunction> {
    let c = t / (2.0 * params.mass() * params.hbar_eff());
    let grid = *psi_p.grid();
    let values = psi_p
        .values()
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let p = grid.coord(j);
            z * Complex64::from_polar(1.0, -p * p * c)
        })
        .collect();
    WaveFunction::new(grid, values)
}

/// Expectation values of a wave function under `H = p̂²/2m + V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub energy: f64,
}

/// `p̂ = -iħ_eff ∂` is applied spectrally; expectations are divided by the
/// norm.
pub fn observables(psi: &WaveFunction, v: &RealField, params: &PhysicsParams) -> Result<Observables> {
    psi.grid().check_same(v.grid())?;
    let grid = psi.grid();
    let dx = grid.dx();
    let h = params.hbar_eff();
    let norm = psi.norm_sqr();
    let rho = psi.density();
    let mean_x = grid.coords().iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() * dx / norm;
    let d1 = differentiate(psi, 1, Scheme::Spectral)?;
    let mean_p = psi
        .values()
        .iter()
        .zip(d1.values())
        .map(|(z, d)| (z.conj() * Complex64::new(0.0, -h) * d).re)
        .sum::<f64>()
        * dx
        / norm;
    let mut hat = psi.values().to_vec();
    fourier::forward(&mut hat);
    let n = grid.n() as f64;
    let kinetic = grid
        .wavenumbers()
        .iter()
        .zip(&hat)
        .map(|(k, z)| h * h * k * k / (2.0 * params.mass()) * z.norm_sqr())
        .sum::<f64>()
        * dx
        / n;
    let potential = v.values().iter().zip(&rho).map(|(vi, r)| vi * r).sum::<f64>() * dx;
    Ok(Observables { norm, mean_x, mean_p, energy: (kinetic + potential) / norm })
}

/// Harmonic potential `m ω² (x - x0)²/2`.
pub fn harmonic_potential(grid: Grid, mass: f64, omega: f64, x0: f64) -> Result<RealField> {
    RealField::from_fn(grid, |x| 0.5 * mass * omega * omega * (x - x0) * (x - x0))
}

/// Variance of `|ψ|²` about its mean.
pub fn position_variance(psi: &WaveFunction) -> f64 {
    let g = psi.grid();
    let rho = psi.density();
    let norm: f64 = rho.iter().sum::<f64>() * g.dx();
    let xs = g.coords();
    let mean = xs.iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() * g.dx() / norm;
    xs.iter().zip(&rho).map(|(x, r)| (x - mean).powi(2) * r).sum::<f64>() * g.dx() / norm
}

/// L2 distance between two densities on the same grid.
pub fn density_l2(a: &[f64], b: &[f64], dx: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dx).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packets::{coherent_state, gaussian_packet};

    fn params() -> PhysicsParams {
        PhysicsParams::new(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn free_dispersion() {
        let g = Grid::new(1024, 80.0, -40.0).unwrap();
        let s0 = 1.0;
        let psi = gaussian_packet(g, s0, 0.0, 0.0).unwrap();
        let v = RealField::zeros(g);
        let out = split_step_evolve(&psi, &v, &params(), 0.05, 40).unwrap();
        let t: f64 = 2.0;
        let expect = s0 * s0 * (1.0 + (t / (2.0 * s0 * s0)).powi(2));
        assert!((position_variance(&out) - expect).abs() / expect < 1e-6);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_period() {
        let g = Grid::new(256, 20.0, -10.0).unwrap();
        let omega = 1.0;
        let p = params();
        let psi = coherent_state(g, 1.0, 1.0, omega, 2.0).unwrap();
        let v = harmonic_potential(g, 1.0, omega, 0.0).unwrap();
        let steps = 2000;
        let dt = 2.0 * std::f64::consts::PI / omega / steps as f64;
        let out = split_step_evolve(&psi, &v, &p, dt, steps).unwrap();
        assert!(density_l2(&out.density(), &psi.density(), g.dx()) < 1e-8);
    }

    #[test]
    fn alias_guard() {
        let g = Grid::new(64, 10.0, -5.0).unwrap();
        let v = RealField::constant(g, 100.0).unwrap();
        let psi = gaussian_packet(g, 1.0, 0.0, 0.0).unwrap();
        let err = split_step_evolve(&psi, &v, &params(), 0.1, 1).unwrap_err();
        assert_eq!(err.guard_name(), "AliasGuard");
    }

    #[test]
    fn gauge_violation() {
        let g = Grid::new(64, 10.0, -5.0).unwrap();
        let a = RealField::from_fn(g, |x| 0.1 * x).unwrap();
        let err = EMPotential::new(a, RealField::zeros(g), 1.0).unwrap_err();
        assert_eq!(err.guard_name(), "GaugeViolation");
    }

    #[test]
    fn zero_charge_is_free() {
        let g = Grid::new(256, 40.0, -20.0).unwrap();
        let psi = gaussian_packet(g, 1.0, 0.0, 1.0).unwrap();
        let em = EMPotential::uniform(g, 0.7, 0.0, 0.0).unwrap();
        let p = params();
        let a = em_evolve(&psi, &em, &p, 1e-3, 100).unwrap();
        // Reference: Cayley transform of the free Hamiltonian applied mode by mode.
        let mut hat = psi.values().to_vec();
        fourier::forward(&mut hat);
        let tau = 0.5e-3;
        for (z, k) in hat.iter_mut().zip(g.wavenumbers()) {
            let e = k * k / 2.0;
            let c = Complex64::new(1.0, -tau * e) / Complex64::new(1.0, tau * e);
            *z *= c.powu(100);
        }
        fourier::inverse(&mut hat);
        let b = WaveFunction::new(g, hat).unwrap();
        assert!(a.l2_distance(&b).unwrap() < 1e-10);
    }

    #[test]
    fn ramped_vector_potential_shifts_packet() {
        let g = Grid::new(1024, 80.0, -40.0).unwrap();
        let p = params().with_charge(1.0).unwrap();
        let em = EMPotential::uniform(g, 0.0, 0.0, 1.0).unwrap();
        let psi = gaussian_packet(g, 1.0, -10.0, 2.0).unwrap();
        let out = em_evolve_with(&psi, &em, &p, 1e-3, 2000, |t| 0.5 * t).unwrap();
        let zero = RealField::zeros(g);
        let x0 = observables(&psi, &zero, &p).unwrap().mean_x;
        let x1 = observables(&out, &zero, &p).unwrap().mean_x;
        // ∫ (k0 - qA(t))/m dt over [0, 2] with A = t/2.
        assert!((x1 - x0 - 3.0).abs() < 1e-4, "{}", x1 - x0);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn observables_of_boosted_packet() {
        let g = Grid::new(512, 40.0, -20.0).unwrap();
        let k0 = 2.0 * std::f64::consts::PI * 5.0 / 40.0;
        let psi = gaussian_packet(g, 1.0, 0.0, k0).unwrap();
        let o = observables(&psi, &RealField::zeros(g), &params()).unwrap();
        assert!((o.mean_p - k0).abs() < 1e-10);
        assert!((o.energy - (k0 * k0 / 2.0 + 1.0 / 8.0)).abs() < 1e-10);
        let real = gaussian_packet(g, 1.0, 0.0, 0.0).unwrap();
        let o = observables(&real, &RealField::zeros(g), &params()).unwrap();
        assert!(o.mean_p.abs() < 1e-12);
    }

    #[test]
    fn momentum_phase_preserves_density() {
        let g = Grid::new(64, 10.0, -5.0).unwrap();
        let psi = gaussian_packet(g, 1.0, 0.5, 0.0).unwrap();
        let out = momentum_free_evolve(&psi, &params(), 3.7).unwrap();
        for (a, b) in psi.values().iter().zip(out.values()) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-14);
        }
        assert_eq!(momentum_free_evolve(&psi, &params(), 0.0).unwrap(), psi);
    }
}
