//! Uniform 1-D grids, fields on them, and the calculus primitives shared by
//! the rest of the crate.
//!
//! Grids are periodic. Coordinates are `x0 + k*dx` for `k` in `0..n`, and
//! the wavenumbers returned by [`Grid::wavenumbers`] follow FFT ordering:
//! `2*pi*j/(n*dx)` for `j < n/2`, then `2*pi*(j-n)/(n*dx)`. The Nyquist
//! entry `j = n/2` is therefore `-pi/dx`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier;

/// Values below this are clamped wherever a density sits in a denominator
/// or a logarithm.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Uniform periodic lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
    x0: f64,
}

impl Grid {
    /// Grid of `n` points covering `[x0, x0 + length)`.
    pub fn new(n: usize, length: f64, x0: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        Self::with_spacing(n, length / n as f64, x0)
    }

    pub fn with_spacing(n: usize, dx: f64, x0: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n must be even and >= 8, got {n}")));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidGrid("x0 must be finite".into()));
        }
        Ok(Grid { n, dx, x0 })
    }

    /// Grid with spacing `dx` whose point `n/2` sits at the origin.
    pub fn centered(n: usize, dx: f64) -> Result<Self> {
        Self::with_spacing(n, dx, -(n as f64 / 2.0) * dx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.coord(k)).collect()
    }

    /// FFT-ordered angular wavenumbers.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * std::f64::consts::PI / self.length();
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk })
            .collect()
    }

    /// The `len` consecutive points starting at index `start`.
    pub fn subgrid(&self, start: usize, len: usize) -> Result<Grid> {
        if start + len > self.n {
            return Err(Error::InvalidGrid(format!("window {start}+{len} exceeds {} points", self.n)));
        }
        Grid::with_spacing(len, self.dx, self.coord(start))
    }

    /// Same point count and matching spacing/origin up to rounding.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.x0 - other.x0).abs() <= 1e-12 * self.length().max(self.x0.abs())
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Finite real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coords().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n()])
    }

    pub fn zeros(grid: Grid) -> Self {
        RealField { grid, values: vec![0.0; grid.n()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Restriction to `grid.subgrid(start, len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let g = self.grid.subgrid(start, len)?;
        Ok(RealField { grid: g, values: self.values[start..start + len].to_vec() })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Finite complex samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Position- or momentum-space wave function.
pub type WaveFunction = ComplexField;

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.coords().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Restriction to `grid.subgrid(start, len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        let g = self.grid.subgrid(start, len)?;
        Ok(ComplexField { grid: g, values: self.values[start..start + len].to_vec() })
    }

    /// `sum |psi|^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Rescaled copy with unit L2 norm.
    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) {
            return Err(Error::ZeroMass(n2));
        }
        let s = 1.0 / n2.sqrt();
        Ok(ComplexField { grid: self.grid, values: self.values.iter().map(|z| z * s).collect() })
    }

    /// Discrete L2 distance `sqrt(sum |a-b|^2 dx)`.
    pub fn l2_distance(&self, other: &ComplexField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.dx).sqrt())
    }
}

/// Non-negative real field integrating to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl ProbabilityDensity {
    /// Wrap values that are already normalized (relative tolerance 1e-12).
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let field = RealField::new(grid, values)?;
        if let Some((i, &v)) = field.values.iter().enumerate().find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativeValue { index: i, value: v });
        }
        let mass = integrate(&field);
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(mass));
        }
        Ok(ProbabilityDensity { grid, values: field.values })
    }

    /// Normalize samples of an arbitrary non-negative function.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        normalize(&RealField::from_fn(grid, f)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_field(&self) -> RealField {
        RealField { grid: self.grid, values: self.values.clone() }
    }

    /// Values with the density floor applied.
    pub fn floored(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v.max(DENSITY_FLOOR)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.grid.coords().iter().zip(&self.values).map(|(x, p)| x * p).sum::<f64>() * self.grid.dx
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.grid
            .coords()
            .iter()
            .zip(&self.values)
            .map(|(x, p)| (x - m) * (x - m) * p)
            .sum::<f64>()
            * self.grid.dx
    }
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if grid.n() != len {
        return Err(Error::InvalidGrid(format!("expected {} values, got {len}", grid.n())));
    }
    Ok(())
}

/// Riemann sum `sum f dx`; on a periodic grid this is the trapezoid rule.
pub fn integrate(f: &RealField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.dx
}

/// Rescale a non-negative field to unit mass.
///
/// Values in `(-1e-15, 0)` are treated as rounding noise and set to zero. A
/// field whose mass is already within 1e-14 of one is returned unscaled, so
/// the operation is exactly idempotent.
pub fn normalize(f: &RealField) -> Result<ProbabilityDensity> {
    let mut values = f.values.clone();
    for (i, v) in values.iter_mut().enumerate() {
        if *v < -1e-15 {
            return Err(Error::NegativeValue { index: i, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mass = values.iter().sum::<f64>() * f.grid.dx;
    if !(mass > 0.0) {
        return Err(Error::ZeroMass(mass));
    }
    if (mass - 1.0).abs() > 1e-14 {
        let s = 1.0 / mass;
        values.iter_mut().for_each(|v| *v *= s);
    }
    Ok(ProbabilityDensity { grid: f.grid, values })
}

/// Finite-difference or spectral derivative scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Second-order periodic central stencils.
    Central,
    /// Multiplication by `ik` or `-k^2` in mode space. Odd derivatives drop
    /// the Nyquist mode.
    Spectral,
    /// Fourth-order stencils without wraparound: central in the interior,
    /// one-sided at the two points nearest each edge. For fields that are
    /// smooth but not periodic on the box.
    Open,
}

/// Fields that [`differentiate`] accepts.
pub trait Differentiable: Sized {
    fn derivative(&self, order: u8, scheme: Scheme) -> Result<Self>;
}

/// Derivative of order 1 or 2.
pub fn differentiate<F: Differentiable>(f: &F, order: u8, scheme: Scheme) -> Result<F> {
    f.derivative(order, scheme)
}

impl Differentiable for RealField {
    fn derivative(&self, order: u8, scheme: Scheme) -> Result<Self> {
        check_order(order)?;
        let values = match scheme {
            Scheme::Spectral => {
                let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                spectral_in_place(&mut buf, &self.grid, order);
                buf.into_iter().map(|z| z.re).collect()
            }
            _ => stencil(&self.values, self.grid.dx, order, scheme),
        };
        Ok(RealField { grid: self.grid, values })
    }
}

impl Differentiable for ComplexField {
    fn derivative(&self, order: u8, scheme: Scheme) -> Result<Self> {
        check_order(order)?;
        let values = match scheme {
            Scheme::Spectral => {
                let mut buf = self.values.clone();
                spectral_in_place(&mut buf, &self.grid, order);
                buf
            }
            _ => {
                let re: Vec<f64> = self.values.iter().map(|z| z.re).collect();
                let im: Vec<f64> = self.values.iter().map(|z| z.im).collect();
                let dre = stencil(&re, self.grid.dx, order, scheme);
                let dim = stencil(&im, self.grid.dx, order, scheme);
                dre.into_iter().zip(dim).map(|(a, b)| Complex64::new(a, b)).collect()
            }
        };
        Ok(ComplexField { grid: self.grid, values })
    }
}

fn check_order(order: u8) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("derivative order must be 1 or 2, got {order}")))
    }
}

pub(crate) fn spectral_in_place(buf: &mut [Complex64], grid: &Grid, order: u8) {
    let ks = grid.wavenumbers();
    let nyq = -std::f64::consts::PI / grid.dx();
    if order == 1 {
        fourier::apply_symbol(buf, &ks, |k| {
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k)
            }
        });
    } else {
        fourier::apply_symbol(buf, &ks, |k| Complex64::new(-k * k, 0.0));
    }
}

/// Real-valued stencil derivative for the `Central` and `Open` schemes.
pub(crate) fn stencil(f: &[f64], dx: f64, order: u8, scheme: Scheme) -> Vec<f64> {
    let n = f.len();
    match (scheme, order) {
        (Scheme::Central, 1) => (0..n)
            .map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * dx))
            .collect(),
        (Scheme::Central, _) => (0..n)
            .map(|i| (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) / (dx * dx))
            .collect(),
        (_, 1) => open_d1(f, dx),
        _ => open_d2(f, dx),
    }
}

fn open_d1(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let h = 12.0 * dx;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / h;
    }
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h;
    let m = n - 1;
    d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / h;
    d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / h;
    d
}

fn open_d2(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let h = 12.0 * dx * dx;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / h;
    }
    let edge0 = |g: &dyn Fn(usize) -> f64| {
        (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) / h
    };
    let edge1 = |g: &dyn Fn(usize) -> f64| {
        (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) / h
    };
    let m = n - 1;
    d[0] = edge0(&|j| f[j]);
    d[1] = edge1(&|j| f[j]);
    d[m] = edge0(&|j| f[m - j]);
    d[m - 1] = edge1(&|j| f[m - j]);
    d
}
