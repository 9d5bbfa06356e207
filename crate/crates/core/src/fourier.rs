// Thin wrapper over rustfft with per-thread plan caching.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward transform, X_k = sum_j x_j e^{-2 pi i jk/n}.
pub(crate) fn forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// Inverse transform including the 1/n factor.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
    let s = 1.0 / buf.len() as f64;
    for z in buf.iter_mut() {
        *z *= s;
    }
}

/// Multiply every mode by `symbol(k)` where k runs over the FFT-ordered
/// wavenumbers of the buffer.
pub(crate) fn apply_symbol<F>(buf: &mut [Complex64], wavenumbers: &[f64], symbol: F)
where
    F: Fn(f64) -> Complex64,
{
    forward(buf);
    for (z, &k) in buf.iter_mut().zip(wavenumbers) {
        *z *= symbol(k);
    }
    inverse(buf);
}
