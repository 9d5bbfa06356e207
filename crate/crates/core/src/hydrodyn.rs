//! Madelung pair `(ρ, S)`: conversion to and from wave functions, the
//! quantum potential, and direct integration of the continuity and extended
//! Hamilton–Jacobi equations.
//!
//! The integrator works with `u = ln ρ`, for which
//!
//! ```text
//! ∂u/∂t = -(u'S' + S'')/m
//! ∂S/∂t = -S'²/2m - V + (ħ_eff²/2m)(u''/2 + u'²/4)
//! ```
//!
//! Spatial derivatives use the fourth-order [`Scheme::Open`] stencils, so
//! the state may live on a window of a larger box without wraparound. A
//! sixth-difference Kreiss–Oliger term damps grid-scale noise on both
//! fields. Time stepping is classical RK4.

use crate::error::{Error, Result};
use crate::fluctuation::PhysicsParams;
use crate::lattice::{self, differentiate, Grid, ProbabilityDensity, RealField, Scheme, WaveFunction, DENSITY_FLOOR};
use crate::Complex64;

/// Density and action field on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungState {
    rho: ProbabilityDensity,
    s: RealField,
}

impl MadelungState {
    pub fn new(rho: ProbabilityDensity, s: RealField) -> Result<Self> {
        rho.grid().check_same(s.grid())?;
        Ok(MadelungState { rho, s })
    }

    pub fn rho(&self) -> &ProbabilityDensity {
        &self.rho
    }

    pub fn s(&self) -> &RealField {
        &self.s
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }
}

/// Bohm potential `-(αħ²/2m) (√ρ)''/√ρ`, spectral on the floor-clamped `√ρ`.
pub fn quantum_potential(rho: &ProbabilityDensity, params: &PhysicsParams) -> RealField {
    quantum_potential_with(rho, params, Scheme::Spectral)
}

/// As [`quantum_potential`] with a chosen scheme. `Open` evaluates the
/// log-density form `-(αħ²/2m)(u''/2 + u'²/4)`, which stays accurate deep in
/// Gaussian tails.
pub fn quantum_potential_with(rho: &ProbabilityDensity, params: &PhysicsParams, scheme: Scheme) -> RealField {
    let c = -params.hbar_eff().powi(2) / (2.0 * params.mass());
    let grid = *rho.grid();
    let values = match scheme {
        Scheme::Open => bohm_log(&log_density(rho.values()), grid.dx()),
        _ => {
            let amp: Vec<f64> = rho.floored().iter().map(|v| v.sqrt()).collect();
            let f = RealField::new(grid, amp.clone()).expect("finite amplitude");
            let d2 = differentiate(&f, 2, scheme).expect("order 2 is valid");
            d2.values().iter().zip(&amp).map(|(d, a)| d / a).collect()
        }
    };
    RealField::new(grid, values.into_iter().map(|v| c * v).collect()).expect("finite potential")
}

fn log_density(rho: &[f64]) -> Vec<f64> {
    rho.iter().map(|v| v.max(DENSITY_FLOOR).ln()).collect()
}

/// `(√ρ)''/√ρ = u''/2 + u'²/4` with open stencils.
fn bohm_log(u: &[f64], dx: f64) -> Vec<f64> {
    let d1 = lattice::stencil(u, dx, 1, Scheme::Open);
    let d2 = lattice::stencil(u, dx, 2, Scheme::Open);
    d1.iter().zip(&d2).map(|(a, b)| 0.5 * b + 0.25 * a * a).collect()
}

/// `Ψ = √ρ e^{iS/ħ_eff}`.
pub fn to_wavefunction(state: &MadelungState, hbar_eff: f64) -> Result<WaveFunction> {
    if !(hbar_eff.is_finite() && hbar_eff > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar_eff must be positive, got {hbar_eff}")));
    }
    let values = state
        .rho
        .values()
        .iter()
        .zip(state.s.values())
        .map(|(r, s)| Complex64::from_polar(r.sqrt(), s / hbar_eff))
        .collect();
    WaveFunction::new(*state.grid(), values)
}

const NODE_THRESHOLD: f64 = 1e-10;

/// Inverse of [`to_wavefunction`].
///
/// The phase is unwrapped from the leftmost point of the connected region
/// of `|Ψ| > 1e-10` that contains the maximum of `|Ψ|`, with `S` there
/// pinned to `ħ_eff·arg Ψ`. Fails with `NodeCrossing` if `|Ψ|` exceeds the
/// threshold anywhere outside that region, or if the phase jumps by a
/// quarter turn or more between neighbours inside it (a sign change between
/// grid points).
pub fn from_wavefunction(psi: &WaveFunction, hbar_eff: f64) -> Result<MadelungState> {
    if !(hbar_eff.is_finite() && hbar_eff > 0.0) {
        return Err(Error::InvalidParameter(format!("hbar_eff must be positive, got {hbar_eff}")));
    }
    let z = psi.values();
    let n = z.len();
    let amp: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    let peak = (0..n).fold(0, |b, i| if amp[i] > amp[b] { i } else { b });
    let mut lo = peak;
    while lo > 0 && amp[lo - 1] > NODE_THRESHOLD {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n && amp[hi + 1] > NODE_THRESHOLD {
        hi += 1;
    }
    if let Some(index) = (0..n).find(|&i| (i < lo || i > hi) && amp[i] > NODE_THRESHOLD) {
        return Err(Error::NodeCrossing { index });
    }
    if let Some(index) = (lo..hi).find(|&i| (z[i + 1] * z[i].conj()).re <= 0.0) {
        return Err(Error::NodeCrossing { index });
    }

    let step = |a: Complex64, b: Complex64| -> f64 {
        let r = b * a.conj();
        if r.norm() == 0.0 {
            0.0
        } else {
            r.arg()
        }
    };
    let mut phase = vec![0.0; n];
    phase[lo] = z[lo].arg();
    for i in lo + 1..n {
        phase[i] = phase[i - 1] + step(z[i - 1], z[i]);
    }
    for i in (0..lo).rev() {
        phase[i] = phase[i + 1] - step(z[i], z[i + 1]);
    }
    let grid = *psi.grid();
    let rho = lattice::normalize(&RealField::new(grid, amp.iter().map(|a| a * a).collect())?)?;
    let s = RealField::new(grid, phase.into_iter().map(|p| hbar_eff * p).collect())?;
    MadelungState::new(rho, s)
}

/// Tunables of the hydrodynamic integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroConfig {
    /// `dt_step` must not exceed `stability_factor · m dx²/ħ_eff`.
    pub stability_factor: f64,
    /// Kreiss–Oliger strength `σ`; the damping symbol is `-(σ/dx) sin⁶(θ/2)`.
    pub dissipation: f64,
}

impl Default for HydroConfig {
    fn default() -> Self {
        HydroConfig { stability_factor: 0.2, dissipation: 20.0 }
    }
}

/// Smallest density the integrator tolerates before reporting instability.
pub const MIN_DENSITY: f64 = 1e-12;

/// Stepper for the `(ln ρ, S)` system.
#[derive(Debug, Clone)]
pub struct MadelungEvolver {
    grid: Grid,
    u: Vec<f64>,
    s: Vec<f64>,
    v: Vec<f64>,
    mass: f64,
    hbar2: f64,
    dt: f64,
    ko: f64,
    steps: usize,
}

impl MadelungEvolver {
    pub fn new(
        state: &MadelungState,
        v: &RealField,
        params: &PhysicsParams,
        dt_step: f64,
        config: &HydroConfig,
    ) -> Result<Self> {
        let grid = *state.grid();
        grid.check_same(v.grid())?;
        let h = params.hbar_eff();
        let dx = grid.dx();
        let bound = config.stability_factor * params.mass() * dx * dx / h;
        if !(dt_step > 0.0 && dt_step <= bound) {
            return Err(Error::InvalidParameter(format!("dt_step {dt_step} outside (0, {bound}]")));
        }
        if !(config.dissipation >= 0.0) || dt_step * config.dissipation / dx > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "dissipation {} too strong for dt_step {dt_step}",
                config.dissipation
            )));
        }
        let u = log_density(state.rho.values());
        if let Some(i) = u.iter().position(|&x| x < MIN_DENSITY.ln()) {
            return Err(Error::Instability { step: 0, reason: format!("density below {MIN_DENSITY:e} at index {i}") });
        }
        Ok(MadelungEvolver {
            grid,
            u,
            s: state.s.values().to_vec(),
            v: v.values().to_vec(),
            mass: params.mass(),
            hbar2: h * h,
            dt: dt_step,
            ko: config.dissipation / (64.0 * dx),
            steps: 0,
        })
    }

    fn dissipation(&self, f: &[f64], out: &mut [f64]) {
        let n = f.len();
        for i in 3..n - 3 {
            let d6 = f[i - 3] - 6.0 * f[i - 2] + 15.0 * f[i - 1] - 20.0 * f[i] + 15.0 * f[i + 1] - 6.0 * f[i + 2]
                + f[i + 3];
            out[i] += self.ko * d6;
        }
    }

    fn rhs(&self, u: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dx = self.grid.dx();
        let u1 = lattice::stencil(u, dx, 1, Scheme::Open);
        let u2 = lattice::stencil(u, dx, 2, Scheme::Open);
        let s1 = lattice::stencil(s, dx, 1, Scheme::Open);
        let s2 = lattice::stencil(s, dx, 2, Scheme::Open);
        let m = self.mass;
        let mut du: Vec<f64> = (0..u.len()).map(|i| -(u1[i] * s1[i] + s2[i]) / m).collect();
        let mut ds: Vec<f64> = (0..u.len())
            .map(|i| -s1[i] * s1[i] / (2.0 * m) - self.v[i] + self.hbar2 / (2.0 * m) * (0.5 * u2[i] + 0.25 * u1[i] * u1[i]))
            .collect();
        if self.ko > 0.0 {
            self.dissipation(u, &mut du);
            self.dissipation(s, &mut ds);
        }
        (du, ds)
    }

    /// Advance one RK4 step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + a * q).collect() };
        let (a1, b1) = self.rhs(&self.u, &self.s);
        let (a2, b2) = self.rhs(&axpy(&self.u, dt / 2.0, &a1), &axpy(&self.s, dt / 2.0, &b1));
        let (a3, b3) = self.rhs(&axpy(&self.u, dt / 2.0, &a2), &axpy(&self.s, dt / 2.0, &b2));
        let (a4, b4) = self.rhs(&axpy(&self.u, dt, &a3), &axpy(&self.s, dt, &b3));
        for i in 0..self.u.len() {
            self.u[i] += dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            self.s[i] += dt / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]);
        }
        self.steps += 1;
        if let Some(i) = self.u.iter().chain(&self.s).position(|x| !x.is_finite()) {
            return Err(Error::Instability { step: self.steps, reason: format!("non-finite value at index {}", i % self.u.len()) });
        }
        let floor = MIN_DENSITY.ln();
        if let Some(i) = self.u.iter().position(|&x| x < floor) {
            return Err(Error::Instability {
                step: self.steps,
                reason: format!("density {:e} below {MIN_DENSITY:e} at index {i}", self.u[i].exp()),
            });
        }
        Ok(())
    }

    pub fn run(&mut self, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Unnormalized density `e^u`.
    pub fn density(&self) -> Vec<f64> {
        self.u.iter().map(|x| x.exp()).collect()
    }

    /// `Σ ρ dx` of the raw evolved density.
    pub fn mass(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.grid.dx()
    }

    pub fn action(&self) -> &[f64] {
        &self.s
    }

    /// Current state with the density renormalized.
    pub fn state(&self) -> Result<MadelungState> {
        let rho = lattice::normalize(&RealField::new(self.grid, self.density())?)?;
        MadelungState::new(rho, RealField::new(self.grid, self.s.clone())?)
    }
}

/// Integrate `n_steps` RK4 steps with the default [`HydroConfig`].
pub fn evolve_madelung(
    state: &MadelungState,
    v: &RealField,
    params: &PhysicsParams,
    dt_step: f64,
    n_steps: usize,
) -> Result<MadelungState> {
    evolve_madelung_with(state, v, params, dt_step, n_steps, &HydroConfig::default())
}

pub fn evolve_madelung_with(
    state: &MadelungState,
    v: &RealField,
    params: &PhysicsParams,
    dt_step: f64,
    n_steps: usize,
    config: &HydroConfig,
) -> Result<MadelungState> {
    let mut ev = MadelungEvolver::new(state, v, params, dt_step, config)?;
    ev.run(n_steps)?;
    ev.state()
}

/// Largest stable step for the default configuration.
pub fn max_stable_step(grid: &Grid, params: &PhysicsParams, config: &HydroConfig) -> f64 {
    let dx = grid.dx();
    let cfl = config.stability_factor * params.mass() * dx * dx / params.hbar_eff();
    if config.dissipation > 0.0 {
        cfl.min(dx / config.dissipation)
    } else {
        cfl
    }
}
