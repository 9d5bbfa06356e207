//! Divergences between gridded densities, the Fisher functional, and
//! divergences averaged over a displacement kernel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fluctuation::{displacement_lattice, gaussian_kernel, PhysicsParams, TransitionKernel};
use crate::lattice::{differentiate, Grid, ProbabilityDensity, RealField, Scheme, DENSITY_FLOOR};

/// Order of a Rényi or Tsallis divergence. Order one is the KL limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceOrder(f64);

impl DivergenceOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("divergence order must be > 0, got {alpha}")));
        }
        Ok(DivergenceOrder(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn is_kl(self) -> bool {
        self.0 == 1.0
    }
}

impl Default for DivergenceOrder {
    fn default() -> Self {
        DivergenceOrder(1.0)
    }
}

/// Which divergence to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    KullbackLeibler,
    Renyi(DivergenceOrder),
    Tsallis(DivergenceOrder),
}

impl Divergence {
    /// Order of the divergence; 1 for KL.
    pub fn alpha(self) -> f64 {
        match self {
            Divergence::KullbackLeibler => 1.0,
            Divergence::Renyi(o) | Divergence::Tsallis(o) => o.alpha(),
        }
    }

    pub fn evaluate(self, p: &ProbabilityDensity, q: &ProbabilityDensity) -> Result<f64> {
        p.grid().check_same(q.grid())?;
        Ok(match self {
            Divergence::KullbackLeibler => kl_raw(p.values(), q.values(), p.grid().dx())?,
            Divergence::Renyi(o) => renyi_raw(o, p.values(), q.values(), p.grid().dx())?,
            Divergence::Tsallis(o) => tsallis_raw(o, p.values(), q.values(), p.grid().dx())?,
        })
    }
}

/// `∫ p ln(p/q) dx`.
pub fn kl_divergence(p: &ProbabilityDensity, q: &ProbabilityDensity) -> Result<f64> {
    Divergence::KullbackLeibler.evaluate(p, q)
}

/// `ln(∫ p^α q^(1-α) dx) / (α-1)`.
pub fn renyi_divergence(order: DivergenceOrder, p: &ProbabilityDensity, q: &ProbabilityDensity) -> Result<f64> {
    Divergence::Renyi(order).evaluate(p, q)
}

/// `(∫ p^α q^(1-α) dx - 1) / (α-1)`.
pub fn tsallis_divergence(order: DivergenceOrder, p: &ProbabilityDensity, q: &ProbabilityDensity) -> Result<f64> {
    Divergence::Tsallis(order).evaluate(p, q)
}

fn support_check(p: &[f64], q: &[f64]) -> Result<()> {
    match p.iter().zip(q).position(|(&a, &b)| a > 1e-12 && b <= DENSITY_FLOOR) {
        Some(index) => Err(Error::SupportViolation { index }),
        None => Ok(()),
    }
}

fn kl_raw(p: &[f64], q: &[f64], dx: f64) -> Result<f64> {
    support_check(p, q)?;
    let s: f64 = p
        .iter()
        .zip(q)
        .filter(|(&a, _)| a > DENSITY_FLOOR)
        .map(|(&a, &b)| a * (a / b.max(DENSITY_FLOOR)).ln())
        .sum();
    Ok(s * dx)
}

/// `ln ∫ p^α q^(1-α) dx`, accumulated with a log-sum-exp.
fn log_overlap(alpha: f64, p: &[f64], q: &[f64], dx: f64) -> f64 {
    let logs: Vec<f64> = p
        .iter()
        .zip(q)
        .filter(|(&a, _)| a > DENSITY_FLOOR)
        .map(|(&a, &b)| alpha * a.ln() + (1.0 - alpha) * b.max(DENSITY_FLOOR).ln())
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    m + s.ln() + dx.ln()
}

fn renyi_raw(order: DivergenceOrder, p: &[f64], q: &[f64], dx: f64) -> Result<f64> {
    if order.is_kl() {
        return kl_raw(p, q, dx);
    }
    support_check(p, q)?;
    let a = order.alpha();
    Ok(log_overlap(a, p, q, dx) / (a - 1.0))
}

fn tsallis_raw(order: DivergenceOrder, p: &[f64], q: &[f64], dx: f64) -> Result<f64> {
    if order.is_kl() {
        return kl_raw(p, q, dx);
    }
    support_check(p, q)?;
    let a = order.alpha();
    Ok(log_overlap(a, p, q, dx).exp_m1() / (a - 1.0))
}

/// `∫ (p')^2 / p dx`, evaluated as `4 ∫ ((√p)')^2 dx` with spectral
/// derivatives.
pub fn fisher_functional(p: &ProbabilityDensity) -> f64 {
    fisher_raw(p.values(), p.grid())
}

/// Fisher functional of non-negative samples that need not be normalized.
pub(crate) fn fisher_raw(values: &[f64], grid: &Grid) -> f64 {
    let amp = RealField::new(*grid, values.iter().map(|v| v.max(0.0).sqrt()).collect())
        .expect("square roots of finite samples are finite");
    let d = differentiate(&amp, 1, Scheme::Spectral).expect("order 1 is valid");
    4.0 * d.values().iter().map(|v| v * v).sum::<f64>() * grid.dx()
}

/// Average of `D(p(x) ‖ p(x + w))` over the kernel, with `p(x + w)` the
/// periodic shift of `p` by the lattice displacement `w`.
///
/// The kernel lattice must consist of integer multiples of the density
/// grid spacing.
pub fn expected_divergence_under_kernel(
    kind: Divergence,
    p: &ProbabilityDensity,
    kernel: &TransitionKernel,
) -> Result<f64> {
    let grid = p.grid();
    let dx = grid.dx();
    let lat = kernel.lattice();
    let ratio = lat.dx() / dx;
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return Err(Error::GridMismatch);
    }
    let n = grid.n() as i64;
    let shifts: Vec<(i64, f64)> = kernel
        .weights()
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(j, &w)| {
            let s = lat.coord(j) / dx;
            (s, w * lat.dx())
        })
        .map(|(s, w)| {
            let r = s.round();
            if (s - r).abs() > 1e-6 {
                Err(Error::GridMismatch)
            } else {
                Ok((r as i64, w))
            }
        })
        .collect::<Result<_>>()?;

    let pv = p.values();
    let terms: Vec<f64> = shifts
        .par_iter()
        .map(|&(s, w)| {
            if s == 0 {
                return Ok(0.0);
            }
            let q: Vec<f64> = (0..n).map(|i| pv[(i + s).rem_euclid(n) as usize]).collect();
            let d = match kind {
                Divergence::KullbackLeibler => kl_raw(pv, &q, dx)?,
                Divergence::Renyi(o) => renyi_raw(o, pv, &q, dx)?,
                Divergence::Tsallis(o) => tsallis_raw(o, pv, &q, dx)?,
            };
            Ok(w * d)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// One row of [`fisher_limit_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherLimitRow {
    pub dt: f64,
    pub expected: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

/// Compare the kernel-averaged KL divergence with `(ħΔt/4m)·Fisher` for
/// each `Δt`. The kernel lattice spans ±8 standard deviations at the
/// density grid spacing.
pub fn fisher_limit_report(
    p: &ProbabilityDensity,
    params: &PhysicsParams,
    dt_list: &[f64],
) -> Result<Vec<FisherLimitRow>> {
    let fisher = fisher_functional(p);
    dt_list
        .par_iter()
        .map(|&dt| {
            let pp = params.with_dt(dt)?;
            let lat = displacement_lattice(pp.position_std(), p.grid().dx(), 8.0)?;
            let kernel = gaussian_kernel(&pp, &lat)?;
            let expected = expected_divergence_under_kernel(Divergence::KullbackLeibler, p, &kernel)?;
            let predicted = pp.hbar() * dt / (4.0 * pp.mass()) * fisher;
            Ok(FisherLimitRow { dt, expected, predicted, relative_error: (expected - predicted).abs() / predicted })
        })
        .collect()
}
