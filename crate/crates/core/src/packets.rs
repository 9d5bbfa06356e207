//! Initial-state families used by the tests, examples and experiments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{Grid, WaveFunction};
use crate::Complex64;

/// `ψ ∝ exp(-(x-xc)²/4σ² + i k0 (x-xc))`, normalized on the grid, so that
/// `|ψ|²` has standard deviation `sigma`.
pub fn gaussian_packet(grid: Grid, sigma: f64, x_center: f64, k0: f64) -> Result<WaveFunction> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
    WaveFunction::from_fn(grid, |x| {
        let d = x - x_center;
        Complex64::from_polar(amp * (-d * d / (4.0 * sigma * sigma)).exp(), k0 * d)
    })?
    .normalized()
}

/// Width `σ` of the harmonic-oscillator ground-state density,
/// `σ² = ħ/(2mω)`.
pub fn oscillator_sigma(hbar: f64, mass: f64, omega: f64) -> f64 {
    (hbar / (2.0 * mass * omega)).sqrt()
}

/// Coherent state of `V = m ω² x²/2`: the ground state displaced to
/// `displacement`, initially at rest.
pub fn coherent_state(grid: Grid, hbar: f64, mass: f64, omega: f64, displacement: f64) -> Result<WaveFunction> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    gaussian_packet(grid, oscillator_sigma(hbar, mass, omega), displacement, 0.0)
}
