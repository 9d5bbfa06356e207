//! Property-based checks of the invariants each module promises.

use std::f64::consts::PI;

use obslab::fluctuation::{
    displacement_lattice, gaussian_kernel, kernel_functional, minimize_kernel_functional, uncertainty_report,
    KernelSolver, PhysicsParams, TransitionKernel,
};
use obslab::hydrodyn::{evolve_madelung, from_wavefunction, MadelungEvolver, HydroConfig, MadelungState};
use obslab::infometrics::{kl_divergence, renyi_divergence, tsallis_divergence, DivergenceOrder};
use obslab::lattice::{differentiate, integrate, normalize, Grid, ProbabilityDensity, RealField, Scheme, WaveFunction};
use obslab::packets::{coherent_state, gaussian_packet};
use obslab::schrodinger::{
    em_evolve, harmonic_potential, momentum_free_evolve, observables, split_step_evolve, CrankNicolson, EMPotential,
    SplitStepper,
};
use obslab::transform::{commutator_report, p_to_x, x_to_p};
use obslab::variational::{functional_derivative, madelung_residuals, Field, FunctionalSpec, PathFunctional, PathKind};
use obslab::Complex64;
use proptest::prelude::*;

fn params(hbar: f64, mass: f64, dt: f64) -> PhysicsParams {
    PhysicsParams::new(hbar, mass, dt).unwrap()
}

fn periodic() -> Grid {
    Grid::new(128, 2.0 * PI, 0.0).unwrap()
}

/// Smooth periodic field from a handful of Fourier coefficients.
fn fourier_field(g: Grid, c: &[(f64, f64)]) -> RealField {
    RealField::from_fn(g, |x| {
        c.iter().enumerate().map(|(k, (a, b))| a * ((k + 1) as f64 * x).cos() + b * ((k + 1) as f64 * x).sin()).sum()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6)
}

/// Positive periodic density `exp(f)` for a random smooth `f`.
fn positive_density(g: Grid, c: &[(f64, f64)]) -> ProbabilityDensity {
    normalize(&fourier_field(g, c).map(f64::exp).unwrap()).unwrap()
}

fn l2(a: &[Complex64], b: &[Complex64], dx: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * dx).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_theorem(c in coeffs(), offset in -2.0..2.0f64) {
        let g = periodic();
        let f = fourier_field(g, &c).map(|v| v + offset).unwrap();
        for scheme in [Scheme::Spectral, Scheme::Central] {
            let d = differentiate(&f, 1, scheme).unwrap();
            prop_assert!(integrate(&d).abs() <= 1e-10);
        }
    }

    #[test]
    fn spectral_second_derivative_composes(c in coeffs()) {
        let f = fourier_field(periodic(), &c);
        let d2 = differentiate(&f, 2, Scheme::Spectral).unwrap();
        let d11 = differentiate(&differentiate(&f, 1, Scheme::Spectral).unwrap(), 1, Scheme::Spectral).unwrap();
        for (a, b) in d2.values().iter().zip(d11.values()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn normalize_is_idempotent(c in coeffs(), scale in 0.01..100.0f64) {
        let f = fourier_field(periodic(), &c).map(|v| scale * v.exp()).unwrap();
        let once = normalize(&f).unwrap();
        let twice = normalize(&once.to_field()).unwrap();
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn divergences_are_non_negative(cp in coeffs(), cq in coeffs(), alpha in 0.05..6.0f64) {
        let g = periodic();
        let (p, q) = (positive_density(g, &cp), positive_density(g, &cq));
        let o = DivergenceOrder::new(alpha).unwrap();
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(renyi_divergence(o, &p, &q).unwrap() >= -1e-12);
        prop_assert!(tsallis_divergence(o, &p, &q).unwrap() >= -1e-12);
    }

    #[test]
    fn renyi_is_monotone_in_order(cp in coeffs(), cq in coeffs(), a in 0.05..5.0f64, gap in 0.01..3.0f64) {
        let g = periodic();
        let (p, q) = (positive_density(g, &cp), positive_density(g, &cq));
        let lo = renyi_divergence(DivergenceOrder::new(a).unwrap(), &p, &q).unwrap();
        let hi = renyi_divergence(DivergenceOrder::new(a + gap).unwrap(), &p, &q).unwrap();
        prop_assert!(lo <= hi + 1e-12, "{} > {}", lo, hi);
    }

    #[test]
    fn split_step_is_unitary(c in coeffs(), k0 in -3.0..3.0f64) {
        let g = Grid::new(256, 40.0, -20.0).unwrap();
        let v = fourier_field(g, &c);
        let psi = gaussian_packet(g, 1.5, 0.0, k0).unwrap();
        let n = 200;
        let out = split_step_evolve(&psi, &v, &params(1.0, 1.0, 0.1), 1e-2, n).unwrap();
        prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() / n as f64 <= 1e-12);
    }

    #[test]
    fn transform_is_unitary_at_every_beta(
        sigma in 0.5..2.0f64, xc in -3.0..3.0f64, k0 in -2.0..2.0f64, beta in 0.2..5.0f64, hbar in 0.3..2.0f64
    ) {
        let g = Grid::new(512, 40.0, -20.0).unwrap();
        let p = params(hbar, 1.0, 0.1);
        let psi = gaussian_packet(g, sigma, xc, k0).unwrap();
        let phi = x_to_p(&psi, &p, beta).unwrap();
        prop_assert!((phi.norm_sqr() - psi.norm_sqr()).abs() <= 1e-12);
        let back = p_to_x(&phi, &g, &p, beta).unwrap();
        prop_assert!(l2(back.values(), psi.values(), g.dx()) <= 1e-12);
    }

    #[test]
    fn commuting_square(sigma in 0.7..2.0f64, xc in -3.0..3.0f64, k0 in -2.0..2.0f64, t in 0.0..2.0f64) {
        let g = Grid::new(512, 60.0, -30.0).unwrap();
        let p = params(1.0, 1.0, 0.1);
        let psi = gaussian_packet(g, sigma, xc, k0).unwrap();
        let direct = split_step_evolve(&psi, &RealField::zeros(g), &p, t.max(1e-3), 1).unwrap();
        let t = t.max(1e-3);
        let via = p_to_x(&momentum_free_evolve(&x_to_p(&psi, &p, 1.0).unwrap(), &p, t).unwrap(), &g, &p, 1.0).unwrap();
        prop_assert!(l2(direct.values(), via.values(), g.dx()) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn exact_uncertainty_for_random_constants(hbar in 0.05..5.0f64, mass in 0.05..20.0f64, dt in 1e-4..1.0f64) {
        let p = params(hbar, mass, dt);
        let std = p.position_std();
        let k = gaussian_kernel(&p, &displacement_lattice(std, std / 16.0, 8.0).unwrap()).unwrap();
        let r = uncertainty_report(&k, &p);
        prop_assert!((r.cross - hbar / 2.0).abs() <= 1e-10 * hbar / 2.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_kernel_minimizes_functional(
        bumps in prop::collection::vec((0usize..129, -0.3..0.3f64), 1..6)
    ) {
        let p = params(1.0, 1.0, 0.1);
        let std = p.position_std();
        let lat = displacement_lattice(std, std / 8.0, 8.0).unwrap();
        let best = minimize_kernel_functional(&p, &lat, KernelSolver::ClosedForm).unwrap();
        let w = best.weights().values();
        let mut trial: Vec<f64> = w.to_vec();
        for (k, amp) in bumps {
            let k = k % trial.len();
            trial[k] *= 1.0 + amp;
        }
        let z = trial.iter().sum::<f64>() * lat.dx();
        trial.iter_mut().for_each(|x| *x /= z);
        let best = kernel_functional(w, &lat, &p);
        prop_assert!(best <= kernel_functional(&trial, &lat, &p) + 1e-12 * best.abs());
    }

    #[test]
    fn cauchy_schwarz_for_random_kernels(half in prop::collection::vec(0.0..1.0f64, 4..20), dt in 0.01..1.0f64) {
        // Symmetric weights, so the kernel is centred.
        let n = 2 * half.len() + 2;
        let lat = Grid::centered(n, 0.05).unwrap();
        let mut w = vec![0.0; n];
        let mid = n / 2;
        w[mid] = 0.5;
        for (j, h) in half.iter().enumerate() {
            w[mid + 1 + j] = *h;
            w[mid - 1 - j] = *h;
        }
        let k = TransitionKernel::from_weights(lat, w).unwrap();
        let r = uncertainty_report(&k, &params(1.0, 1.3, dt));
        prop_assert!(r.product >= r.cross.abs() - 1e-12);
    }
}

/// Random smooth periodic `(ρ, S)` families: `ρ ∝ exp(a cos θ + c sin 2θ)`, `θ = x - ωt`,
/// `S = b sin(x + νt) + e t`.
#[derive(Debug, Clone, Copy)]
struct Family {
    a: f64,
    c: f64,
    w: f64,
    b: f64,
    nu: f64,
    e: f64,
}

impl Family {
    fn u(&self, x: f64, t: f64) -> (f64, f64, f64, f64) {
        let th = x - self.w * t;
        let u = self.a * th.cos() + self.c * (2.0 * th).sin();
        let ux = -self.a * th.sin() + 2.0 * self.c * (2.0 * th).cos();
        let uxx = -self.a * th.cos() - 4.0 * self.c * (2.0 * th).sin();
        let ut = -self.w * ux;
        (u, ux, uxx, ut)
    }

    fn slices(&self, g: Grid, dt: f64) -> Vec<MadelungState> {
        (0..5)
            .map(|j| {
                let t = j as f64 * dt;
                MadelungState::new(
                    ProbabilityDensity::from_fn(g, |x| self.u(x, t).0.exp()).unwrap(),
                    RealField::from_fn(g, |x| self.b * (x + self.nu * t).sin() + self.e * t).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }
}

fn family() -> impl Strategy<Value = Family> {
    (0.1..1.0f64, -0.5..0.5f64, -2.0..2.0f64, -1.0..1.0f64, -2.0..2.0f64, -1.0..1.0f64)
        .prop_map(|(a, c, w, b, nu, e)| Family { a, c, w, b, nu, e })
}

fn rel_max(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn functional_derivatives_match_euler_lagrange(f in family()) {
        let g = Grid::new(64, 2.0 * PI, 0.0).unwrap();
        let dt = 0.01;
        let t = 2.0 * dt;
        let p = params(1.0, 1.0, 0.1);
        let pf = PathFunctional {
            kind: PathKind::Observability(obslab::infometrics::Divergence::KullbackLeibler),
            params: p,
            potential: RealField::zeros(g),
            slices: f.slices(g, dt),
            dt_slice: dt,
            s_scheme: Scheme::Spectral,
        };
        let spec = FunctionalSpec::Path(pf);
        let xs = g.coords();

        let qhj: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let (_, ux, uxx, _) = f.u(x, t);
                let s_t = f.b * f.nu * (x + f.nu * t).cos() + f.e;
                let s_x = f.b * (x + f.nu * t).cos();
                2.0 * (s_t + s_x * s_x / 2.0 - 0.5 * (uxx / 2.0 + ux * ux / 4.0))
            })
            .collect();
        let mean = qhj.iter().sum::<f64>() / qhj.len() as f64;
        let qhj: Vec<f64> = qhj.iter().map(|v| v - mean).collect();
        let d_rho = functional_derivative(&spec, Field::Rho, 2, 1e-6).unwrap();
        prop_assert!(rel_max(d_rho.values(), &qhj) <= 1e-3);

        let rho = ProbabilityDensity::from_fn(g, |x| f.u(x, t).0.exp()).unwrap();
        let cont: Vec<f64> = xs
            .iter()
            .zip(rho.values())
            .map(|(&x, r)| {
                let (_, ux, _, ut) = f.u(x, t);
                let s_x = f.b * (x + f.nu * t).cos();
                let s_xx = -f.b * (x + f.nu * t).sin();
                -2.0 * r * (ut + ux * s_x + s_xx)
            })
            .collect();
        let d_s = functional_derivative(&spec, Field::S, 2, 1e-6).unwrap();
        prop_assert!(rel_max(d_s.values(), &cont) <= 1e-3);

        let half = functional_derivative(&spec, Field::Rho, 2, 5e-7).unwrap();
        prop_assert!(rel_max(half.values(), d_rho.values()) <= 2e-2);
    }
}

#[test]
fn renyi_and_tsallis_approach_kl_near_order_one() {
    let g = periodic();
    let p = positive_density(g, &[(0.6, -0.2), (0.1, 0.3)]);
    let q = positive_density(g, &[(-0.4, 0.5)]);
    let kl = kl_divergence(&p, &q).unwrap();
    for a in [1.0 - 1e-3, 1.0 + 1e-3] {
        let o = DivergenceOrder::new(a).unwrap();
        assert!((renyi_divergence(o, &p, &q).unwrap() - kl).abs() / kl <= 5e-3);
        assert!((tsallis_divergence(o, &p, &q).unwrap() - kl).abs() / kl <= 5e-3);
    }
}

#[test]
fn commutator_is_independent_of_packet() {
    let g = Grid::new(1024, 60.0, -30.0).unwrap();
    let packets = [
        gaussian_packet(g, 1.0, 0.0, 0.0).unwrap(),
        gaussian_packet(g, 0.6, -4.0, 2.0).unwrap(),
        gaussian_packet(g, 2.0, 3.0, -1.0).unwrap(),
        coherent_state(g, 1.0, 1.0, 2.0, 1.5).unwrap(),
        WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0 / (1.2 * x).cosh(), 0.5 * x)).unwrap(),
        WaveFunction::from_fn(g, |x| Complex64::new((1.0 + 0.3 * x) * (-x * x / 3.0).exp(), 0.2 * (-x * x).exp()))
            .unwrap(),
    ];
    for beta in [1.0f64, 2.0, 0.5] {
        let p = params(0.8, 1.0, 0.1);
        let expect = beta.sqrt() * 0.8;
        for psi in &packets {
            let c = commutator_report(psi, &p, beta).unwrap();
            assert!((c - Complex64::new(0.0, expect)).norm() <= 1e-6 * expect, "{c} vs {expect}");
        }
    }
}

#[test]
fn crank_nicolson_is_unitary_per_step() {
    let g = Grid::new(512, 40.0, -20.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let phi = RealField::from_fn(g, |x| 0.05 * x * x / (1.0 + 0.01 * x * x)).unwrap();
    let em = EMPotential::new(RealField::constant(g, 0.3).unwrap(), phi, 1.0).unwrap();
    let psi = gaussian_packet(g, 1.0, -2.0, 1.0).unwrap();
    let n = 500;
    let out = em_evolve(&psi, &em, &p, 1e-3, n).unwrap();
    assert!((out.norm_sqr() - psi.norm_sqr()).abs() / n as f64 <= 1e-13);
}

#[test]
fn generalized_equation_is_rescaled_hbar() {
    let g = Grid::new(256, 20.0, -10.0).unwrap();
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let psi = gaussian_packet(g, 0.8, 1.0, 0.5).unwrap();
    for alpha in [0.3f64, 2.0, 7.0] {
        let a = split_step_evolve(&psi, &v, &params(1.2, 1.0, 0.1).with_alpha(alpha).unwrap(), 1e-3, 300).unwrap();
        let b = split_step_evolve(&psi, &v, &params(alpha.sqrt() * 1.2, 1.0, 0.1), 1e-3, 300).unwrap();
        assert!(l2(a.values(), b.values(), g.dx()) <= 1e-13);
    }
}

#[test]
fn ehrenfest_relation() {
    let g = Grid::new(512, 30.0, -15.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let dt = 5e-4;
    let stepper = SplitStepper::new(&v, &p, dt).unwrap();
    let mut buf = gaussian_packet(g, 0.9, 1.5, 0.7).unwrap().into_values();
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for _ in 0..4000 {
        let psi = WaveFunction::new(g, buf.clone()).unwrap();
        let o = observables(&psi, &v, &p).unwrap();
        xs.push(o.mean_x);
        ps.push(o.mean_p);
        stepper.step(&mut buf);
    }
    for j in (2..xs.len() - 2).step_by(97) {
        let dxdt = (xs[j + 2] - xs[j - 2]) / (4.0 * dt);
        assert!((dxdt - ps[j] / p.mass()).abs() <= 1e-6, "{j}: {dxdt} vs {}", ps[j]);
    }
}

#[test]
fn second_order_convergence() {
    let g = Grid::new(256, 20.0, -10.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let psi = gaussian_packet(g, 0.9, 1.0, 0.0).unwrap();
    let t = 1.0;
    let split = |dt: f64| split_step_evolve(&psi, &v, &p, dt, (t / dt).round() as usize).unwrap();
    let reference = split(1.0 / 6400.0);
    let e1 = l2(split(0.02).values(), reference.values(), g.dx());
    let e2 = l2(split(0.01).values(), reference.values(), g.dx());
    assert!((e1 / e2 - 4.0).abs() <= 0.8, "split-step ratio {}", e1 / e2);

    let em = EMPotential::new(RealField::zeros(g), v.clone(), 1.0).unwrap();
    let cn = |dt: f64| em_evolve(&psi, &em, &p, dt, (t / dt).round() as usize).unwrap();
    let reference = cn(1.0 / 6400.0);
    let e1 = l2(cn(0.01).values(), reference.values(), g.dx());
    let e2 = l2(cn(0.005).values(), reference.values(), g.dx());
    assert!((e1 / e2 - 4.0).abs() <= 0.8, "Crank-Nicolson ratio {}", e1 / e2);
    let _ = CrankNicolson::new(&em, &p, 0.005).unwrap();
}

#[test]
fn schrodinger_states_satisfy_madelung_equations() {
    let g = Grid::new(256, 20.0, -10.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let h = 1e-3;
    let stepper = SplitStepper::new(&v, &p, h / 4.0).unwrap();
    let mut buf = coherent_state(g, 1.0, 1.0, 1.0, 1.5).unwrap().into_values();
    for _ in 0..2000 {
        stepper.step(&mut buf);
    }
    let mut snaps = Vec::new();
    for _ in 0..3 {
        snaps.push(WaveFunction::new(g, buf.clone()).unwrap());
        for _ in 0..4 {
            stepper.step(&mut buf);
        }
    }
    // Window on which all three slices keep ρ ≥ 1e-8.
    let ok: Vec<usize> =
        (0..g.n()).filter(|&i| snaps.iter().all(|s| s.values()[i].norm_sqr() >= 1e-8)).collect();
    let (a, span) = (ok[0], ok[ok.len() - 1] - ok[0] + 1);
    let len = span - span % 2;
    let states: Vec<MadelungState> =
        snaps.iter().map(|s| from_wavefunction(&s.window(a, len).unwrap(), 1.0).unwrap()).collect();
    // Slices are renormalized on the window; restore a common scale.
    let mass: Vec<f64> = snaps.iter().map(|s| s.window(a, len).unwrap().norm_sqr()).collect();
    let states: Vec<MadelungState> = states
        .iter()
        .zip(&mass)
        .map(|(st, m)| {
            let scaled = st.rho().values().iter().map(|r| r * m / mass[1]).collect::<Vec<_>>();
            MadelungState::new(
                normalize(&RealField::new(*st.grid(), scaled).unwrap()).unwrap(),
                st.s().clone(),
            )
            .unwrap()
        })
        .collect();
    let r = madelung_residuals(&states[1], &states[0], &states[2], &v.window(a, len).unwrap(), &p, h).unwrap();
    assert!(r.continuity.max_abs() <= 1e-4, "continuity {}", r.continuity.max_abs());
    assert!(r.ehj.max_abs() <= 1e-4, "ehj {}", r.ehj.max_abs());
}

fn ground_state(g: Grid) -> MadelungState {
    MadelungState::new(ProbabilityDensity::from_fn(g, |x| (-x * x).exp()).unwrap(), RealField::zeros(g)).unwrap()
}

#[test]
fn hydro_mass_and_order_alpha() {
    let g = Grid::new(96, 6.0, -3.0).unwrap();
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let dt = 5e-4;
    let mut ev = MadelungEvolver::new(&ground_state(g), &v, &p, dt, &HydroConfig::default()).unwrap();
    let m0 = ev.mass();
    ev.run(1000).unwrap();
    assert!((ev.mass() - m0).abs() <= 1e-8);

    let alpha: f64 = 2.0;
    let a = evolve_madelung(&ground_state(g), &v, &p.with_alpha(alpha).unwrap(), dt, 400).unwrap();
    let b = evolve_madelung(&ground_state(g), &v, &params(alpha.sqrt(), 1.0, 0.1), dt, 400).unwrap();
    for (x, y) in a.rho().values().iter().zip(b.rho().values()) {
        assert!((x - y).abs() <= 1e-10);
    }
    let ga = differentiate(a.s(), 1, Scheme::Open).unwrap();
    let gb = differentiate(b.s(), 1, Scheme::Open).unwrap();
    for (x, y) in ga.values().iter().zip(gb.values()) {
        assert!((x - y).abs() <= 1e-10);
    }
}

#[test]
fn hydro_is_invariant_to_action_offset() {
    let g = Grid::new(96, 6.0, -3.0).unwrap();
    let v = harmonic_potential(g, 1.0, 1.0, 0.0).unwrap();
    let p = params(1.0, 1.0, 0.1);
    let base = MadelungState::new(
        ProbabilityDensity::from_fn(g, |x| (-(x - 0.2) * (x - 0.2)).exp()).unwrap(),
        RealField::from_fn(g, |x| 0.3 * x).unwrap(),
    )
    .unwrap();
    let shifted = MadelungState::new(base.rho().clone(), base.s().map(|s| s + 5.0).unwrap()).unwrap();
    let a = evolve_madelung(&base, &v, &p, 5e-4, 400).unwrap();
    let b = evolve_madelung(&shifted, &v, &p, 5e-4, 400).unwrap();
    for (x, y) in a.rho().values().iter().zip(b.rho().values()) {
        assert!((x - y).abs() <= 1e-12);
    }
    for (x, y) in a.s().values().iter().zip(b.s().values()) {
        assert!((y - x - 5.0).abs() <= 1e-10);
    }
}
