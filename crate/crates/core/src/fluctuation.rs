//! The fluctuation transition kernel: closed form, direct minimization of
//! its defining functional, sampling, and the uncertainty products it
//! implies.
//!
//! Sampling uses `ChaCha8Rng::seed_from_u64(seed)` and one uniform `f64` per
//! draw, mapped through the lattice CDF. That seed-to-stream mapping is part
//! of the public contract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::infometrics::DivergenceOrder;
use crate::lattice::{Grid, ProbabilityDensity, RealField};

/// Physical constants and the step parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    hbar: f64,
    mass: f64,
    dt: f64,
    alpha: DivergenceOrder,
    charge: f64,
}

impl PhysicsParams {
    /// `alpha` defaults to 1 and `charge` to 0.
    pub fn new(hbar: f64, mass: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("mass", mass), ("dt", dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(PhysicsParams { hbar, mass, dt, alpha: DivergenceOrder::default(), charge: 0.0 })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = DivergenceOrder::new(alpha)?;
        Ok(self)
    }

    pub fn with_charge(mut self, charge: f64) -> Result<Self> {
        if !charge.is_finite() {
            return Err(Error::InvalidParameter("charge must be finite".into()));
        }
        self.charge = charge;
        Ok(self)
    }

    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.hbar, self.mass, dt).map(|p| PhysicsParams { alpha: self.alpha, charge: self.charge, ..p })
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(hbar, self.mass, self.dt).map(|p| PhysicsParams { alpha: self.alpha, charge: self.charge, ..p })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.alpha()
    }

    pub fn order(&self) -> DivergenceOrder {
        self.alpha
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// `sqrt(alpha) * hbar`.
    pub fn hbar_eff(&self) -> f64 {
        self.alpha().sqrt() * self.hbar
    }

    /// Standard deviation `sqrt(ħΔt/2m)` of the position kernel.
    pub fn position_std(&self) -> f64 {
        (self.hbar * self.dt / (2.0 * self.mass)).sqrt()
    }

    /// Standard deviation `sqrt(mħ/2Δt)` of the momentum kernel.
    pub fn momentum_std(&self) -> f64 {
        (self.mass * self.hbar / (2.0 * self.dt)).sqrt()
    }
}

/// Whether a kernel displaces position (`w`) or momentum (`ω`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpace {
    Position,
    Momentum,
}

/// Normalized, centred displacement distribution on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    lattice: Grid,
    weights: ProbabilityDensity,
    variance: f64,
    space: KernelSpace,
}

impl TransitionKernel {
    /// Position-space kernel from arbitrary non-negative weights, which are
    /// normalized here. Fails unless the weights are centred on zero.
    pub fn from_weights(lattice: Grid, weights: Vec<f64>) -> Result<Self> {
        let k = Self::build(lattice, weights, KernelSpace::Position)?;
        let m1 = k.mean();
        if m1.abs() > 1e-10 * k.variance.sqrt() + 1e-300 {
            return Err(Error::InvalidParameter(format!("kernel mean {m1:e} is not zero")));
        }
        Ok(k)
    }

    // Kernels built here from symmetric formulas are centred up to the one
    // unpaired edge point of an even lattice. That point matters only for
    // nearly flat kernels, which the minimizer may legitimately return.
    fn build(lattice: Grid, weights: Vec<f64>, space: KernelSpace) -> Result<Self> {
        let weights = crate::lattice::normalize(&RealField::new(lattice, weights)?)?;
        let dw = lattice.dx();
        let m2 = weights
            .values()
            .iter()
            .enumerate()
            .map(|(j, &p)| lattice.coord(j).powi(2) * p * dw)
            .sum();
        Ok(TransitionKernel { lattice, weights, variance: m2, space })
    }

    pub fn lattice(&self) -> &Grid {
        &self.lattice
    }

    /// First moment `<w>`.
    pub fn mean(&self) -> f64 {
        self.weights.mean()
    }

    pub fn weights(&self) -> &ProbabilityDensity {
        &self.weights
    }

    /// Second moment `<w^2>`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn space(&self) -> KernelSpace {
        self.space
    }

    /// `max / min` over the weights; infinite if any weight is zero.
    pub fn flatness(&self) -> f64 {
        let v = self.weights.values();
        let max = v.iter().cloned().fold(0.0, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Centred lattice with the given spacing that covers `±widths·std`.
pub fn displacement_lattice(std: f64, spacing: f64, widths: f64) -> Result<Grid> {
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel std must be positive, got {std}")));
    }
    let half = (widths * std / spacing).ceil() as usize + 1;
    Grid::centered((2 * half).max(8), spacing)
}

fn gaussian_weights(lattice: &Grid, std: f64) -> Vec<f64> {
    let s2 = 2.0 * std * std;
    lattice.coords().iter().map(|w| (-w * w / s2).exp()).collect()
}

fn resolution_guard(lattice: &Grid, std: f64) -> Result<()> {
    if std < 4.0 * lattice.dx() {
        return Err(Error::UnresolvedKernel { std, spacing: lattice.dx() });
    }
    Ok(())
}

/// Fraction of the infinite-lattice Gaussian mass that falls outside.
fn tail_loss(lattice: &Grid, std: f64) -> f64 {
    let s2 = 2.0 * std * std;
    let dw = lattice.dx();
    let inside: f64 = gaussian_weights(lattice, std).iter().sum();
    let mut outside = 0.0;
    for (start, step) in [(lattice.coord(0) - dw, -dw), (lattice.coord(lattice.n() - 1) + dw, dw)] {
        let mut w: f64 = start;
        loop {
            let t = (-w * w / s2).exp();
            outside += t;
            if t < 1e-30 * inside {
                break;
            }
            w += step;
        }
    }
    outside / (inside + outside)
}

fn gaussian_on(lattice: &Grid, std: f64, space: KernelSpace) -> Result<TransitionKernel> {
    resolution_guard(lattice, std)?;
    let tail = tail_loss(lattice, std);
    if tail > 1e-12 {
        return Err(Error::TruncatedKernel { tail });
    }
    TransitionKernel::build(*lattice, gaussian_weights(lattice, std), space)
}

/// Kernel `∝ exp(-m w²/ħΔt)` with variance `ħΔt/2m`.
pub fn gaussian_kernel(params: &PhysicsParams, lattice: &Grid) -> Result<TransitionKernel> {
    gaussian_on(lattice, params.position_std(), KernelSpace::Position)
}

/// Momentum-space kernel `∝ exp(-Δt ω²/mħ)` with variance `mħ/2Δt`.
pub fn momentum_kernel(params: &PhysicsParams, lattice: &Grid) -> Result<TransitionKernel> {
    gaussian_on(lattice, params.momentum_std(), KernelSpace::Momentum)
}

/// Momentum-kernel weights `∝ exp(-Δt ω²/mħ)` normalized on `lattice`,
/// with no resolution or truncation guard. Used to follow the kernel as it
/// flattens across a fixed lattice when `Δt` shrinks.
pub fn momentum_kernel_weights(params: &PhysicsParams, lattice: &Grid) -> Result<ProbabilityDensity> {
    let w = gaussian_weights(lattice, params.momentum_std());
    crate::lattice::normalize(&RealField::new(*lattice, w)?)
}

/// How [`minimize_kernel_functional`] finds the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSolver {
    ClosedForm,
    GradientDescent,
}

/// `(m/ħΔt) Σ ℘ w² dw + Σ ℘ ln(℘/μ) dw` with the uniform reference
/// `μ = 1/(n dw)`. Zero weights contribute nothing to the entropy term.
pub fn kernel_functional(weights: &[f64], lattice: &Grid, params: &PhysicsParams) -> f64 {
    let c = params.mass() / (params.hbar() * params.dt());
    let dw = lattice.dx();
    let mu = 1.0 / lattice.length();
    weights
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let w = lattice.coord(j);
            let ent = if p > 0.0 { p * (p / mu).ln() } else { 0.0 };
            (c * w * w * p + ent) * dw
        })
        .sum()
}

/// Functional gradient `c w² + ln(℘/μ) + 1` per lattice point (without
/// the `dw` quadrature factor).
pub fn kernel_functional_gradient(weights: &[f64], lattice: &Grid, params: &PhysicsParams) -> Vec<f64> {
    let c = params.mass() / (params.hbar() * params.dt());
    let mu = 1.0 / lattice.length();
    weights
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let w = lattice.coord(j);
            c * w * w + (p.max(crate::lattice::DENSITY_FLOOR) / mu).ln() + 1.0
        })
        .collect()
}

const MAX_ITERATIONS: usize = 1_000_000;
const STEP: f64 = 0.5;

/// Minimize [`kernel_functional`] over normalized kernels on `lattice`.
///
/// `GradientDescent` runs exponentiated-gradient steps from the uniform
/// kernel, tracking log-weights so deep tails never underflow. It stops once
/// the functional decreases by less than 1e-14 in a step and the gradient
/// is constant to 1e-10 across the lattice.
pub fn minimize_kernel_functional(
    params: &PhysicsParams,
    lattice: &Grid,
    solver: KernelSolver,
) -> Result<TransitionKernel> {
    let std = params.position_std();
    resolution_guard(lattice, std)?;
    match solver {
        KernelSolver::ClosedForm => TransitionKernel::build(*lattice, gaussian_weights(lattice, std), KernelSpace::Position),
        KernelSolver::GradientDescent => {
            let c = params.mass() / (params.hbar() * params.dt());
            let dw = lattice.dx();
            let ws = lattice.coords();
            let mu = 1.0 / lattice.length();
            let mut logp = vec![-(lattice.length().ln()); lattice.n()];
            let mut prev = f64::INFINITY;
            for _ in 0..MAX_ITERATIONS {
                let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
                let value = kernel_functional(&p, lattice, params);
                let grad: Vec<f64> = ws.iter().zip(&logp).map(|(w, l)| c * w * w + l - mu.ln()).collect();
                let mean = grad.iter().sum::<f64>() / grad.len() as f64;
                let spread = grad.iter().fold(0.0_f64, |m, g| m.max((g - mean).abs()));
                if prev - value < 1e-14 && spread <= 1e-10 {
                    return TransitionKernel::build(*lattice, p, KernelSpace::Position);
                }
                prev = value;
                for (l, g) in logp.iter_mut().zip(&grad) {
                    *l -= STEP * g;
                }
                let m = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z = m + (logp.iter().map(|l| (l - m).exp()).sum::<f64>() * dw).ln();
                logp.iter_mut().for_each(|l| *l -= z);
            }
            Err(Error::NoConvergence { iterations: MAX_ITERATIONS })
        }
    }
}

/// Draw `count` displacements by inverse-CDF lookup on the kernel lattice.
pub fn sample_fluctuations(kernel: &TransitionKernel, count: usize, seed: u64) -> Vec<f64> {
    let lat = kernel.lattice();
    let mut cdf = Vec::with_capacity(lat.n());
    let mut acc = 0.0;
    for &p in kernel.weights().values() {
        acc += p * lat.dx();
        cdf.push(acc);
    }
    let total = acc;
    let last = lat.n() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * total;
            let j = cdf.partition_point(|&c| c <= u).min(last);
            lat.coord(j)
        })
        .collect()
}

/// Second moments of the position and momentum fluctuations implied by a
/// kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    pub dx2: f64,
    pub dp2: f64,
    pub cross: f64,
    pub product: f64,
}

/// For a position kernel `Δx = w`, `Δp = m w/Δt`; for a momentum kernel
/// `Δp = ω`, `Δx = ω Δt/m`.
pub fn uncertainty_report(kernel: &TransitionKernel, params: &PhysicsParams) -> UncertaintyReport {
    let v = kernel.variance();
    let r = params.mass() / params.dt();
    let (dx2, dp2, cross) = match kernel.space() {
        KernelSpace::Position => (v, r * r * v, r * v),
        KernelSpace::Momentum => (v / (r * r), v, v / r),
    };
    UncertaintyReport { dx2, dp2, cross, product: (dx2 * dp2).sqrt() }
}

/// Moments of a sample of displacements: `(mean, variance)`.
pub fn sample_moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (mean, var)
}
