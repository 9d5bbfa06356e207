//! Discrete action and observability functionals over time-sliced Madelung
//! states, and brute-force functional derivatives of them.
//!
//! The time integral runs over the interior slices `1..N-1`, with `∂S/∂t`
//! taken as a centred difference of the neighbouring slices. The first and
//! last slices are fixed endpoints.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fluctuation::{kernel_functional, PhysicsParams};
use crate::hydrodyn::MadelungState;
use crate::infometrics::{fisher_raw, Divergence};
use crate::lattice::{self, Grid, RealField, Scheme};

/// Which field a derivative is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Rho,
    S,
}

/// The two path functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    /// `Σ ∫ ρ(∂S/∂t + S'²/2m + V) dx dt`.
    ClassicalAction,
    /// `(2/ħ)·action + α(ħ/4m) Σ Fisher(ρ) dt`, with `α` taken from the
    /// metric.
    Observability(Divergence),
}

/// Time-sliced states together with everything needed to evaluate a path
/// functional on them.
#[derive(Debug, Clone)]
pub struct PathFunctional {
    pub kind: PathKind,
    pub params: PhysicsParams,
    pub potential: RealField,
    pub slices: Vec<MadelungState>,
    pub dt_slice: f64,
    /// Scheme for `S'`. `Spectral` needs periodic `S`; `Open` also accepts
    /// a linear ramp.
    pub s_scheme: Scheme,
}

/// A functional whose derivative [`functional_derivative`] can estimate.
#[derive(Debug, Clone)]
pub enum FunctionalSpec {
    /// [`kernel_functional`] at the given weights.
    Kernel { params: PhysicsParams, lattice: Grid, weights: Vec<f64> },
    Path(PathFunctional),
}

fn too_few(have: usize, need: usize, index: usize) -> Error {
    Error::TooFewSlices { have, need, index }
}

fn check_slices(states: &[MadelungState], v: &RealField, dt_slice: f64) -> Result<Grid> {
    if states.len() < 3 {
        return Err(too_few(states.len(), 3, 0));
    }
    if !(dt_slice.is_finite() && dt_slice > 0.0) {
        return Err(Error::InvalidParameter(format!("dt_slice must be positive, got {dt_slice}")));
    }
    let grid = *states[0].grid();
    for s in states {
        grid.check_same(s.grid())?;
    }
    grid.check_same(v.grid())?;
    Ok(grid)
}

struct Raw<'a> {
    grid: Grid,
    v: &'a [f64],
    params: PhysicsParams,
    dt: f64,
    scheme: Scheme,
}

impl Raw<'_> {
    fn derivative(&self, f: &[f64]) -> Vec<f64> {
        match self.scheme {
            Scheme::Spectral => {
                let field = RealField::new(self.grid, f.to_vec()).expect("finite samples");
                lattice::differentiate(&field, 1, Scheme::Spectral).expect("order 1").into_values()
            }
            s => lattice::stencil(f, self.grid.dx(), 1, s),
        }
    }

    fn action(&self, rho: &[Vec<f64>], s: &[Vec<f64>]) -> f64 {
        let m = self.params.mass();
        let dx = self.grid.dx();
        let mut total = 0.0;
        for j in 1..rho.len() - 1 {
            let ds = self.derivative(&s[j]);
            let mut slice = 0.0;
            for i in 0..self.grid.n() {
                let st = (s[j + 1][i] - s[j - 1][i]) / (2.0 * self.dt);
                slice += rho[j][i] * (st + ds[i] * ds[i] / (2.0 * m) + self.v[i]);
            }
            total += slice * dx * self.dt;
        }
        total
    }

    fn fisher_term(&self, rho: &[Vec<f64>], alpha: f64) -> f64 {
        let c = alpha * self.params.hbar() / (4.0 * self.params.mass());
        (1..rho.len() - 1).map(|j| c * fisher_raw(&rho[j], &self.grid) * self.dt).sum()
    }

    fn evaluate(&self, kind: PathKind, rho: &[Vec<f64>], s: &[Vec<f64>]) -> f64 {
        match kind {
            PathKind::ClassicalAction => self.action(rho, s),
            PathKind::Observability(metric) => {
                2.0 / self.params.hbar() * self.action(rho, s) + self.fisher_term(rho, metric.alpha())
            }
        }
    }
}

fn split(states: &[MadelungState]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    states.iter().map(|st| (st.rho().values().to_vec(), st.s().values().to_vec())).unzip()
}

/// `Σ_j ∫ ρ_j (∂S/∂t + S'²/2m + V) dx · dt_slice` over interior slices.
pub fn classical_action(
    states: &[MadelungState],
    dt_slice: f64,
    v: &RealField,
    params: &PhysicsParams,
    s_scheme: Scheme,
) -> Result<f64> {
    let grid = check_slices(states, v, dt_slice)?;
    let (rho, s) = split(states);
    let raw = Raw { grid, v: v.values(), params: *params, dt: dt_slice, scheme: s_scheme };
    Ok(raw.action(&rho, &s))
}

/// `(2/ħ)·classical_action + α(ħ/4m) Σ_j Fisher(ρ_j) dt_slice`.
pub fn observability_functional(
    states: &[MadelungState],
    dt_slice: f64,
    v: &RealField,
    params: &PhysicsParams,
    metric: Divergence,
    s_scheme: Scheme,
) -> Result<f64> {
    let grid = check_slices(states, v, dt_slice)?;
    let (rho, s) = split(states);
    let raw = Raw { grid, v: v.values(), params: *params, dt: dt_slice, scheme: s_scheme };
    Ok(raw.evaluate(PathKind::Observability(metric), &rho, &s))
}

/// The information part `α(ħ/4m) Σ_j Fisher(ρ_j) dt_slice` alone.
pub fn information_term(states: &[MadelungState], dt_slice: f64, params: &PhysicsParams, metric: Divergence) -> Result<f64> {
    let v = RealField::zeros(*states.first().ok_or_else(|| too_few(0, 3, 0))?.grid());
    let grid = check_slices(states, &v, dt_slice)?;
    let (rho, _) = split(states);
    let raw = Raw { grid, v: v.values(), params: *params, dt: dt_slice, scheme: Scheme::Spectral };
    Ok(raw.fisher_term(&rho, metric.alpha()))
}

/// Centred finite-difference estimate of `δI/δf(x_k)` at every grid point.
///
/// `ρ` perturbations add `eps` at one point and subtract `eps/n` everywhere,
/// so mass is unchanged and the estimate is the functional derivative minus
/// its grid mean. Path derivatives are divided by `dx·dt_slice`, kernel
/// derivatives by the lattice spacing. `S` may only be varied on slices
/// `2..N-2`, whose neighbours are themselves interior.
pub fn functional_derivative(spec: &FunctionalSpec, with_respect_to: Field, slice_index: usize, eps: f64) -> Result<RealField> {
    if !(1e-8..=1e-4).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [1e-8, 1e-4], got {eps}")));
    }
    match spec {
        FunctionalSpec::Kernel { params, lattice, weights } => {
            let n = lattice.n();
            let sub = eps / n as f64;
            if let Some(index) = weights.iter().position(|&w| w - sub <= 0.0) {
                return Err(Error::PerturbationUnderflow { index });
            }
            let values = (0..n)
                .into_par_iter()
                .map(|k| {
                    let eval = |sign: f64| {
                        let w: Vec<f64> = weights
                            .iter()
                            .enumerate()
                            .map(|(i, &x)| x + sign * (if i == k { eps } else { 0.0 } - sub))
                            .collect();
                        kernel_functional(&w, lattice, params)
                    };
                    (eval(1.0) - eval(-1.0)) / (2.0 * eps) / lattice.dx()
                })
                .collect();
            RealField::new(*lattice, values)
        }
        FunctionalSpec::Path(pf) => {
            let grid = check_slices(&pf.slices, &pf.potential, pf.dt_slice)?;
            let count = pf.slices.len();
            let (lo, need) = match with_respect_to {
                Field::Rho => (1, 3),
                Field::S => (2, 5),
            };
            if count < need || slice_index < lo || slice_index + lo >= count {
                return Err(too_few(count, need, slice_index));
            }
            let (rho, s) = split(&pf.slices);
            let n = grid.n();
            let sub = eps / n as f64;
            if with_respect_to == Field::Rho {
                if let Some(index) = rho[slice_index].iter().position(|&r| r - sub <= 0.0) {
                    return Err(Error::PerturbationUnderflow { index });
                }
            }
            let raw = Raw { grid, v: pf.potential.values(), params: pf.params, dt: pf.dt_slice, scheme: pf.s_scheme };
            let scale = 2.0 * eps * grid.dx() * pf.dt_slice;
            let values = (0..n)
                .into_par_iter()
                .map(|k| {
                    let eval = |sign: f64| match with_respect_to {
                        Field::Rho => {
                            let mut r = rho.clone();
                            for (i, x) in r[slice_index].iter_mut().enumerate() {
                                *x += sign * (if i == k { eps } else { 0.0 } - sub);
                            }
                            raw.evaluate(pf.kind, &r, &s)
                        }
                        Field::S => {
                            let mut t = s.clone();
                            t[slice_index][k] += sign * eps;
                            raw.evaluate(pf.kind, &rho, &t)
                        }
                    };
                    (eval(1.0) - eval(-1.0)) / scale
                })
                .collect();
            RealField::new(grid, values)
        }
    }
}

/// Pointwise residuals of the continuity and extended Hamilton–Jacobi
/// equations at the middle of three slices.
#[derive(Debug, Clone, PartialEq)]
pub struct MadelungResiduals {
    pub continuity: RealField,
    pub ehj: RealField,
}

/// `continuity = ∂ρ/∂t + (ρ S')'/m` and
/// `ehj = ∂S/∂t + S'²/2m + V - (αħ²/2m)(√ρ)''/√ρ`, with centred time
/// differences over `2·dt_slice`.
///
/// Spatial terms use the log-density form with the fourth-order open
/// stencils: `(ρS')' = ρ(u'S' + S'')` and `(√ρ)''/√ρ = u''/2 + u'²/4`,
/// `u = ln ρ`. This keeps both residuals meaningful on windows cut from a
/// larger box and in the far tails of localized states.
pub fn madelung_residuals(
    state: &MadelungState,
    state_prev: &MadelungState,
    state_next: &MadelungState,
    v: &RealField,
    params: &PhysicsParams,
    dt_slice: f64,
) -> Result<MadelungResiduals> {
    let grid = *state.grid();
    for g in [state_prev.grid(), state_next.grid(), v.grid()] {
        grid.check_same(g)?;
    }
    if !(dt_slice.is_finite() && dt_slice > 0.0) {
        return Err(Error::InvalidParameter(format!("dt_slice must be positive, got {dt_slice}")));
    }
    let dx = grid.dx();
    let rho = state.rho().values();
    let u: Vec<f64> = rho.iter().map(|r| r.max(lattice::DENSITY_FLOOR).ln()).collect();
    let s = state.s().values();
    let u1 = lattice::stencil(&u, dx, 1, Scheme::Open);
    let u2 = lattice::stencil(&u, dx, 2, Scheme::Open);
    let s1 = lattice::stencil(s, dx, 1, Scheme::Open);
    let s2 = lattice::stencil(s, dx, 2, Scheme::Open);
    let m = params.mass();
    let q = params.hbar_eff().powi(2) / (2.0 * m);
    let (rp, rn) = (state_prev.rho().values(), state_next.rho().values());
    let (sp, sn) = (state_prev.s().values(), state_next.s().values());
    let mut continuity = Vec::with_capacity(grid.n());
    let mut ehj = Vec::with_capacity(grid.n());
    for i in 0..grid.n() {
        continuity.push((rn[i] - rp[i]) / (2.0 * dt_slice) + rho[i] * (u1[i] * s1[i] + s2[i]) / m);
        ehj.push(
            (sn[i] - sp[i]) / (2.0 * dt_slice) + s1[i] * s1[i] / (2.0 * m) + v.values()[i]
                - q * (0.5 * u2[i] + 0.25 * u1[i] * u1[i]),
        );
    }
    Ok(MadelungResiduals { continuity: RealField::new(grid, continuity)?, ehj: RealField::new(grid, ehj)? })
}
