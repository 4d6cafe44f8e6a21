//! Pseudospectral Kuramoto-Sivashinsky solver on (-pi, pi) with periodic
//! boundary conditions:
//!
//! ```text
//! z_t + nu z_xxxx + z_xx + z z_x = 0,   i.e.   z_t = A z + J(z)
//! A z = -nu z_xxxx - z_xx,               J(z) = -z z_x
//! ```
//!
//! The linearized generator at a constant equilibrium `z_e` is
//! `L v = A v - d/dx (z_e v)`, which is diagonal in the Fourier basis with
//! eigenvalues `n^2 (1 - nu n^2) - i n z_e`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::analysis::FlowPair;
use crate::error::{Error, Result};
use crate::etd::{step_plan, Etdrk4};
use crate::state::{SpectralField, State, Trajectory};

pub const DEFAULT_N_MODES: usize = 32;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_GUARD: f64 = 1e8;

/// Forward/inverse transforms between `N` Fourier modes and a physical grid
/// of `M >= 3N + 1` points. On such a grid the product of two fields is
/// alias-free on the retained modes `|n| <= N` (the two-thirds rule: the
/// retained band occupies at most 2/3 of the grid's resolvable modes).
#[derive(Clone)]
pub struct Dealiased {
    n_modes: usize,
    grid: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dealiased {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dealiased")
            .field("n_modes", &self.n_modes)
            .field("grid", &self.grid)
            .finish()
    }
}

impl Dealiased {
    pub fn new(n_modes: usize) -> Self {
        let grid = (3 * n_modes + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n_modes,
            grid,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        }
    }

    pub fn grid_len(&self) -> usize {
        self.grid
    }

    /// Values at `x_j = 2 pi j / M` from the nonnegative-mode coefficients.
    fn modes_to_grid(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::default(); self.grid];
        buf[0] = coeffs[0];
        for k in 1..=self.n_modes {
            buf[k] = coeffs[k];
            buf[self.grid - k] = coeffs[k].conj();
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Coefficients `c_0..=c_N` of the grid function `values`.
    fn grid_to_modes(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.grid as f64;
        buf.truncate(self.n_modes + 1);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf[0].im = 0.0;
        buf
    }

    /// Coefficients of `-d/dx (a b) * weight` for two real fields.
    fn derivative_of_product(&self, a: &[Complex64], b: &[Complex64], weight: f64) -> Vec<Complex64> {
        let ga = self.modes_to_grid(a);
        let product: Vec<f64> = if std::ptr::eq(a, b) {
            ga.iter().map(|v| v * v).collect()
        } else {
            let gb = self.modes_to_grid(b);
            ga.iter().zip(&gb).map(|(x, y)| x * y).collect()
        };
        let mut coeffs = self.grid_to_modes(&product);
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, -(k as f64) * weight);
        }
        coeffs[0] = Complex64::default();
        coeffs
    }

    /// `J(z) = -z z_x = -1/2 d/dx (z^2)`.
    fn nonlinear(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.derivative_of_product(z, z, 0.5)
    }
}

/// Kuramoto-Sivashinsky parameters and discretization.
#[derive(Clone, Debug)]
pub struct KsModel {
    nu: f64,
    n_modes: usize,
    dt: f64,
    guard: f64,
    transform: Dealiased,
}

impl KsModel {
    pub fn new(nu: f64, n_modes: usize, dt: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::arg("nu", format!("must be > 0, got {nu}")));
        }
        if n_modes < 4 {
            return Err(Error::arg("n_modes", format!("must be >= 4, got {n_modes}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Self {
            nu,
            n_modes,
            dt,
            guard: DEFAULT_GUARD,
            transform: Dealiased::new(n_modes),
        })
    }

    /// Default truncation `N = 32` and step `dt = 0.01`.
    pub fn with_defaults(nu: f64) -> Result<Self> {
        Self::new(nu, DEFAULT_N_MODES, DEFAULT_DT)
    }

    /// Coefficient magnitude above which the integration is declared unstable.
    pub fn with_guard(mut self, guard: f64) -> Result<Self> {
        if !(guard > 0.0) {
            return Err(Error::arg("guard", format!("must be > 0, got {guard}")));
        }
        self.guard = guard;
        Ok(self)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    fn check_mode(&self, n: i64) -> Result<()> {
        if n.unsigned_abs() as usize > self.n_modes {
            return Err(Error::ModeOutOfRange {
                n,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }

    fn check_field(&self, z: &SpectralField) -> Result<()> {
        if z.n_modes() != self.n_modes {
            return Err(Error::MismatchedTruncation {
                left: self.n_modes,
                right: z.n_modes(),
            });
        }
        Ok(())
    }

    fn symbol(&self, n: f64) -> f64 {
        -self.nu * n.powi(4) + n * n
    }

    /// Diagonal of `A - d/dx (c .)` on modes `0..=N`.
    fn generator_diagonal(&self, c: f64) -> Vec<Complex64> {
        (0..=self.n_modes)
            .map(|k| {
                let kf = k as f64;
                Complex64::new(self.symbol(kf), -kf * c)
            })
            .collect()
    }

    /// Evolve `z0` to `t_final`, calling `sample(t, coefficients)` after every
    /// `stride` steps and at the end.
    fn integrate(
        &self,
        z0: &SpectralField,
        t_final: f64,
        stride: usize,
        mut sample: impl FnMut(f64, &[Complex64]),
    ) -> Result<SpectralField> {
        self.check_field(z0)?;
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::arg("t_final", format!("must be >= 0, got {t_final}")));
        }
        let mean = z0.mean();
        let mut u: Vec<Complex64> = z0.nonnegative().to_vec();
        u[0] = Complex64::default();
        let diagonal = self.generator_diagonal(mean);
        let (steps, remainder) = step_plan(t_final, self.dt);
        let scheme = Etdrk4::new(&diagonal, self.dt);
        let nonlinear = |v: &[Complex64]| self.transform.nonlinear(v);
        for i in 1..=steps {
            u = scheme.step(&u, nonlinear);
            let t = i as f64 * self.dt;
            self.check_guard(&u, t)?;
            if i % stride == 0 || (i == steps && remainder.is_none()) {
                sample(t, &u);
            }
        }
        if let Some(h) = remainder {
            u = Etdrk4::new(&diagonal, h).step(&u, nonlinear);
            self.check_guard(&u, t_final)?;
            sample(t_final, &u);
        }
        u[0] = Complex64::new(mean, 0.0);
        SpectralField::from_nonnegative(u)
    }

    fn check_guard(&self, u: &[Complex64], t: f64) -> Result<()> {
        let magnitude = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(magnitude <= self.guard) {
            return Err(Error::StepUnstable {
                t,
                magnitude,
                guard: self.guard,
            });
        }
        Ok(())
    }

    /// The nonlinear semigroup `S(t) z0`.
    pub fn flow(&self, z0: &SpectralField, t: f64) -> Result<SpectralField> {
        self.integrate(z0, t, usize::MAX, |_, _| {})
    }
}

/// Fourier symbol of `A` on `e^{inx}`: `-nu n^4 + n^2`.
pub fn linear_symbol(model: &KsModel, n: i64) -> Result<f64> {
    model.check_mode(n)?;
    Ok(model.symbol(n as f64))
}

/// `J(z) = -z z_x`, evaluated pseudospectrally on a dealiased grid.
pub fn nonlinear_term(z: &SpectralField) -> SpectralField {
    let transform = Dealiased::new(z.n_modes());
    SpectralField::from_nonnegative(transform.nonlinear(z.nonnegative()))
        .expect("transform output is finite and Hermitian")
}

/// `-d/dx (z_base v)`, the Gateaux derivative of `J` at `z_base` in direction `v`.
pub fn gateaux_jacobian_apply(z_base: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    if z_base.n_modes() != v.n_modes() {
        return Err(Error::MismatchedTruncation {
            left: z_base.n_modes(),
            right: v.n_modes(),
        });
    }
    let transform = Dealiased::new(z_base.n_modes());
    SpectralField::from_nonnegative(transform.derivative_of_product(
        z_base.nonnegative(),
        v.nonnegative(),
        1.0,
    ))
}

/// `lambda_n = n^2 (1 - nu n^2) - i n z_e` for each `n` in `modes`.
pub fn eigenvalues_at_constant(
    model: &KsModel,
    z_e: f64,
    modes: impl IntoIterator<Item = i64>,
) -> Result<Vec<Complex64>> {
    modes
        .into_iter()
        .map(|n| {
            model.check_mode(n)?;
            let nf = n as f64;
            Ok(Complex64::new(nf * nf * (1.0 - model.nu * nf * nf), -nf * z_e))
        })
        .collect()
}

/// Integrate from `z0` to `t_final`, sampling every step. Norms are distances
/// to the constant equilibrium with the same mean as `z0`, which the flow
/// conserves, so they equal [`dist_to_constants`].
pub fn simulate(model: &KsModel, z0: &SpectralField, t_final: f64) -> Result<Trajectory<SpectralField>> {
    simulate_sampled(model, z0, t_final, 1)
}

/// Like [`simulate`] but records only every `stride`-th step (plus the endpoint).
pub fn simulate_sampled(
    model: &KsModel,
    z0: &SpectralField,
    t_final: f64,
    stride: usize,
) -> Result<Trajectory<SpectralField>> {
    if stride == 0 {
        return Err(Error::arg("stride", "must be >= 1"));
    }
    if !(t_final > 0.0) {
        return Err(Error::arg("t_final", format!("must be > 0, got {t_final}")));
    }
    let mean = z0.mean();
    let mut times = vec![0.0];
    let mut states = vec![z0.clone()];
    let mut failure = None;
    model.integrate(z0, t_final, stride, |t, u| {
        let mut coeffs = u.to_vec();
        coeffs[0] = Complex64::new(mean, 0.0);
        match SpectralField::from_nonnegative(coeffs) {
            Ok(field) => {
                times.push(t);
                states.push(field);
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let reference = SpectralField::constant(model.n_modes(), mean);
    Trajectory::new(times, states, &reference)
}

/// `T_{z_e}(t) h0`: every mode evolves as `e^{lambda_n t}`.
pub fn linearized_flow(model: &KsModel, z_e: f64, h0: &SpectralField, t: f64) -> Result<SpectralField> {
    model.check_field(h0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg("t", format!("must be >= 0, got {t}")));
    }
    let coeffs = h0
        .nonnegative()
        .iter()
        .zip(model.generator_diagonal(z_e))
        .map(|(c, lambda)| c * (lambda * t).exp())
        .collect();
    SpectralField::from_nonnegative(coeffs)
}

/// The linearized flow at the constant `z_e`, sampled on the model's step grid.
/// Norms are measured against zero (the flow acts on perturbations).
pub fn simulate_linearized(
    model: &KsModel,
    z_e: f64,
    h0: &SpectralField,
    t_final: f64,
) -> Result<Trajectory<SpectralField>> {
    if !(t_final > 0.0) {
        return Err(Error::arg("t_final", format!("must be > 0, got {t_final}")));
    }
    let (steps, remainder) = step_plan(t_final, model.dt);
    let mut times: Vec<f64> = (0..=steps).map(|i| i as f64 * model.dt).collect();
    if remainder.is_some() {
        times.push(t_final);
    }
    let states = times
        .iter()
        .map(|&t| linearized_flow(model, z_e, h0, t))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(times, states, &h0.zero_like())
}

/// `||z - mean(z)||`, the L2 distance to the set of constant functions.
pub fn dist_to_constants(z: &SpectralField) -> f64 {
    let mut coeffs = z.nonnegative().to_vec();
    coeffs[0] = Complex64::default();
    SpectralField::from_nonnegative(coeffs)
        .expect("dropping the mean keeps a valid field")
        .l2_norm()
}

/// Smooth zero-mean random direction: `c_n = (u + i v) / n^2` with `u, v`
/// uniform on (-1, 1).
pub fn random_direction<R: Rng + ?Sized>(n_modes: usize, rng: &mut R) -> SpectralField {
    let mut coeffs = vec![Complex64::default()];
    for n in 1..=n_modes {
        let scale = 1.0 / (n * n) as f64;
        coeffs.push(Complex64::new(
            rng.gen_range(-1.0..1.0) * scale,
            rng.gen_range(-1.0..1.0) * scale,
        ));
    }
    SpectralField::from_nonnegative(coeffs).expect("finite coefficients")
}

/// Nonlinear flow and its Frechet derivative at the constant equilibrium `z_e`.
pub fn flow_pair(model: &KsModel, z_e: f64) -> FlowPair<SpectralField> {
    let nonlinear_model = model.clone();
    let linear_model = model.clone();
    let n_modes = model.n_modes();
    FlowPair::new(
        move |z: &SpectralField, t| nonlinear_model.flow(z, t),
        move |h: &SpectralField, t| linearized_flow(&linear_model, z_e, h, t),
        SpectralField::constant(n_modes, z_e),
        move |rng, _delta| random_direction(n_modes, rng),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated product by direct convolution over `p + q = n`.
    fn convolve(a: &SpectralField, b: &SpectralField) -> Vec<Complex64> {
        let n_modes = a.n_modes() as i64;
        (0..=n_modes)
            .map(|n| {
                let mut sum = Complex64::default();
                for p in -n_modes..=n_modes {
                    let q = n - p;
                    if q.abs() <= n_modes {
                        sum += a.coeff(p).unwrap() * b.coeff(q).unwrap();
                    }
                }
                sum
            })
            .collect()
    }

    fn model(nu: f64) -> KsModel {
        KsModel::with_defaults(nu).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(KsModel::new(0.0, 32, 0.01).is_err());
        assert!(KsModel::new(1.0, 3, 0.01).is_err());
        assert!(KsModel::new(1.0, 8, 0.0).is_err());
        assert!(model(1.0).with_guard(-1.0).is_err());
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(linear_symbol(&model(1.0), 0).unwrap(), 0.0);
        assert_eq!(linear_symbol(&model(1.0), 1).unwrap(), 0.0);
        assert!((linear_symbol(&model(1.2), 2).unwrap() + 15.2).abs() < 1e-12);
        assert!(matches!(
            linear_symbol(&model(1.0), 40),
            Err(Error::ModeOutOfRange { n: 40, .. })
        ));
    }

    #[test]
    fn nonlinear_term_of_constant_is_zero() {
        let out = nonlinear_term(&SpectralField::constant(8, 3.5));
        assert!(out.l2_norm() < 1e-14);
    }

    #[test]
    fn nonlinear_term_of_cosine() {
        // -cos x * (-sin x) = sin(2x) / 2
        let z = SpectralField::cosine(8, 1, 1.0).unwrap();
        let out = nonlinear_term(&z);
        let expected = SpectralField::sine(8, 2, 0.5).unwrap();
        for n in 0..=8 {
            assert!((out.coeff(n).unwrap() - expected.coeff(n).unwrap()).norm() < 1e-15);
        }
        // Convolution oracle: J_n = -(i n / 2) (z * z)_n
        let conv = convolve(&z, &z);
        for n in 0..=8 {
            let oracle = conv[n as usize] * Complex64::new(0.0, -(n as f64) / 2.0);
            assert!((out.coeff(n).unwrap() - oracle).norm() < 1e-15);
        }
    }

    #[test]
    fn nonlinear_term_has_zero_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let mut z = random_direction(8, &mut rng);
            z = SpectralField::axpy(1.0, &SpectralField::constant(8, 0.7), &z).unwrap();
            assert_eq!(nonlinear_term(&z).mean(), 0.0);
        }
    }

    use rand::SeedableRng;

    #[test]
    fn gateaux_examples() {
        let v = SpectralField::sine(8, 3, 1.0).unwrap();
        assert!(gateaux_jacobian_apply(&SpectralField::zeros(8), &v).unwrap().l2_norm() < 1e-15);

        let c = 0.8;
        let base = SpectralField::constant(8, c);
        let mut coeffs = vec![Complex64::default(); 9];
        coeffs[3] = Complex64::new(0.4, -0.2);
        let v = SpectralField::from_nonnegative(coeffs.clone()).unwrap();
        let out = gateaux_jacobian_apply(&base, &v).unwrap();
        let expected = Complex64::new(0.0, -3.0 * c) * coeffs[3];
        assert!((out.coeff(3).unwrap() - expected).norm() < 1e-15);

        let cos = SpectralField::cosine(8, 1, 1.0).unwrap();
        let out = gateaux_jacobian_apply(&cos, &cos).unwrap();
        let expected = SpectralField::sine(8, 2, 1.0).unwrap();
        assert!(SpectralField::axpy(-1.0, &expected, &out).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn gateaux_matches_difference_quotient_of_j() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = random_direction(8, &mut rng);
        let v = random_direction(8, &mut rng);
        let eps = 1e-4;
        let plus = nonlinear_term(&SpectralField::axpy(eps, &v, &base).unwrap());
        let minus = nonlinear_term(&SpectralField::axpy(-eps, &v, &base).unwrap());
        let quotient = SpectralField::axpy(-1.0, &minus, &plus).unwrap().scaled(0.5 / eps);
        let derivative = gateaux_jacobian_apply(&base, &v).unwrap();
        // J is quadratic, so the central quotient is exact up to rounding.
        assert!(SpectralField::axpy(-1.0, &derivative, &quotient).unwrap().l2_norm() < 1e-9);
    }

    #[test]
    fn eigenvalue_examples() {
        let ev = eigenvalues_at_constant(&model(1.7), 3.0, [0]).unwrap();
        assert_eq!(ev[0], Complex64::new(0.0, 0.0));
        let ev = eigenvalues_at_constant(&model(1.2), 0.0, [1]).unwrap();
        assert!((ev[0] - Complex64::new(-0.2, 0.0)).norm() < 1e-15);
        let ev = eigenvalues_at_constant(&model(1.0), 2.0, [1]).unwrap();
        assert_eq!(ev[0], Complex64::new(0.0, -2.0));
        assert!(eigenvalues_at_constant(&model(1.0), 0.0, [33]).is_err());
    }

    #[test]
    fn spectrum_consistency() {
        // (A - d/dx(z_e .)) e^{inx} = lambda_n e^{inx}
        let m = model(1.3);
        let z_e = 0.6;
        let base = SpectralField::constant(m.n_modes(), z_e);
        for n in 1..=6i64 {
            let mut coeffs = vec![Complex64::default(); m.n_modes() + 1];
            coeffs[n as usize] = Complex64::new(1.0, 0.0);
            let mode = SpectralField::from_nonnegative(coeffs).unwrap();
            let jv = gateaux_jacobian_apply(&base, &mode).unwrap();
            let applied = jv.coeff(n).unwrap() + linear_symbol(&m, n).unwrap();
            let lambda = eigenvalues_at_constant(&m, z_e, [n]).unwrap()[0];
            assert!((applied - lambda).norm() < 1e-12, "mode {n}");
        }
    }

    #[test]
    fn constant_is_an_equilibrium() {
        let m = model(1.2);
        let z0 = SpectralField::constant(32, 0.9);
        let traj = simulate_sampled(&m, &z0, 2.0, 10).unwrap();
        for s in traj.states() {
            assert_eq!(s, &z0);
        }
    }

    #[test]
    fn mean_and_symmetry_are_conserved() {
        let m = model(0.9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let z0 = SpectralField::axpy(1.0, &SpectralField::constant(32, 0.4), &random_direction(32, &mut rng)).unwrap();
        let traj = simulate_sampled(&m, &z0, 3.0, 5).unwrap();
        for s in traj.states() {
            assert!((s.mean() - 0.4).abs() <= 1e-10);
            assert_eq!(s.coeff(0).unwrap().im, 0.0);
        }
    }

    #[test]
    fn guard_reports_instability() {
        let m = model(0.8).with_guard(1e-4).unwrap();
        let z0 = SpectralField::cosine(32, 1, 1e-6).unwrap();
        match simulate(&m, &z0, 100.0) {
            Err(Error::StepUnstable { t, .. }) => assert!(t > 10.0),
            other => panic!("expected StepUnstable, got {other:?}"),
        }
    }

    #[test]
    fn linearized_examples() {
        let m = model(1.2);
        let traj = simulate_linearized(&m, 0.0, &SpectralField::zeros(32), 1.0).unwrap();
        assert!(traj.norms().iter().all(|&r| r == 0.0));

        let h0 = SpectralField::cosine(32, 1, 1.0).unwrap();
        let h = linearized_flow(&m, 0.0, &h0, 5.0).unwrap();
        let expected = SpectralField::cosine(32, 1, (-1.0f64).exp()).unwrap();
        assert!(SpectralField::axpy(-1.0, &expected, &h).unwrap().l2_norm() < 1e-15);

        // Purely imaginary lambda_1 = -i: amplitude kept, phase rotates at rate 1.
        let m = model(1.0);
        for &t in &[0.3, 2.0, 17.0] {
            let h = linearized_flow(&m, 1.0, &h0, t).unwrap();
            let c1 = h.coeff(1).unwrap();
            assert!((c1.norm() - 0.5).abs() < 1e-15);
            assert!((c1.arg() + t).rem_euclid(2.0 * std::f64::consts::PI) < 1e-12
                || (c1.arg() + t).rem_euclid(2.0 * std::f64::consts::PI) > 2.0 * std::f64::consts::PI - 1e-12);
        }
    }

    #[test]
    fn dist_to_constants_examples() {
        assert_eq!(dist_to_constants(&SpectralField::constant(8, 2.0)), 0.0);
        let z = SpectralField::axpy(1.0, &SpectralField::cosine(8, 1, 1.0).unwrap(), &SpectralField::constant(8, 2.5)).unwrap();
        assert!((dist_to_constants(&z) - std::f64::consts::PI.sqrt()).abs() < 1e-14);

        // Golden-section search over constants c' for min ||z - c'||.
        let dist = |c: f64| SpectralField::axpy(-1.0, &SpectralField::constant(8, c), &z).unwrap().l2_norm();
        let (mut lo, mut hi) = (-10.0f64, 10.0f64);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if dist(a) < dist(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let c_star = 0.5 * (lo + hi);
        assert!((c_star - 2.5).abs() < 1e-6);
        assert!(dist_to_constants(&z) <= dist(c_star) + 1e-15);
    }

    #[test]
    fn fourth_order_in_time() {
        let m_for = |dt: f64| KsModel::new(1.1, 32, dt).unwrap();
        let z0 = SpectralField::axpy(
            1.0,
            &SpectralField::cosine(32, 1, 0.8).unwrap(),
            &SpectralField::sine(32, 2, 0.5).unwrap(),
        )
        .unwrap();
        let reference = m_for(0.000625).flow(&z0, 1.0).unwrap();
        let err = |dt: f64| {
            let z = m_for(dt).flow(&z0, 1.0).unwrap();
            SpectralField::axpy(-1.0, &reference, &z).unwrap().l2_norm()
        };
        // Larger steps sit in the stiff pre-asymptotic regime.
        let (e1, e2) = (err(0.01), err(0.005));
        let order = (e1 / e2).log2();
        assert!(order > 3.5 && order < 4.6, "order {order}, errors {e1:e} {e2:e}");
    }

    #[test]
    fn doubling_modes_changes_little() {
        let z16 = SpectralField::cosine(16, 1, 1e-2).unwrap();
        let z32 = SpectralField::cosine(32, 1, 1e-2).unwrap();
        let a = KsModel::new(1.2, 16, 0.01).unwrap().flow(&z16, 2.0).unwrap();
        let b = KsModel::new(1.2, 32, 0.01).unwrap().flow(&z32, 2.0).unwrap();
        let mut diff = 0.0f64;
        for n in 0..=32i64 {
            let an = if n <= 16 { a.coeff(n).unwrap() } else { Complex64::default() };
            diff = diff.max((an - b.coeff(n).unwrap()).norm());
        }
        assert!(diff < 1e-8, "max coefficient change {diff:e}");
    }
}
