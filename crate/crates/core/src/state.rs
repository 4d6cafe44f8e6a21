//! State representations shared by every model: finitely supported l2
//! sequences, Hermitian Fourier coefficient fields on (-pi, pi), trajectories
//! and the report types produced by the analyses.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::HalfContractionReport;
use crate::error::{Error, Result};

/// Linear-space operations the analyses need from a state representation.
pub trait State: Clone + fmt::Debug + Send + Sync {
    /// Norm of the ambient Hilbert space (l2 or L2(-pi, pi)).
    fn l2_norm(&self) -> f64;

    /// `a * x + y`.
    fn axpy(a: f64, x: &Self, y: &Self) -> Result<Self>;

    /// The zero element with the same shape (truncation) as `self`.
    fn zero_like(&self) -> Self;

    fn scaled(&self, a: f64) -> Self {
        Self::axpy(a, self, &self.zero_like()).expect("a state is compatible with its own zero")
    }

    /// `self - other`.
    fn sub(&self, other: &Self) -> Result<Self> {
        Self::axpy(-1.0, other, self)
    }
}

pub fn l2_norm<S: State>(state: &S) -> f64 {
    state.l2_norm()
}

pub fn state_axpy<S: State>(a: f64, x: &S, y: &S) -> Result<S> {
    S::axpy(a, x, y)
}

/// A finitely supported element of l2. Indices start at 1; absent indices are
/// exactly zero and stored values are always finite and nonzero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceState {
    entries: BTreeMap<usize, f64>,
}

impl SequenceState {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, value) in entries {
            if n == 0 {
                return Err(Error::InvalidState("sequence indices start at 1".into()));
            }
            if !value.is_finite() {
                return Err(Error::InvalidState(format!("entry {n} is not finite")));
            }
            if map.insert(n, value).is_some() {
                return Err(Error::InvalidState(format!("duplicate index {n}")));
            }
        }
        map.retain(|_, v| *v != 0.0);
        Ok(Self { entries: map })
    }

    /// The unit vector `e_n`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new([(n, 1.0)])
    }

    /// Coordinates `dense[0], dense[1], ...` placed at indices `1, 2, ...`.
    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        Self::new(dense.iter().enumerate().map(|(i, &v)| (i + 1, v)))
    }

    /// Coordinates `1..=len` as a dense vector; entries beyond `len` are dropped.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (&n, &v) in self.entries.range(1..=len) {
            out[n - 1] = v;
        }
        out
    }

    pub fn get(&self, n: usize) -> f64 {
        self.entries.get(&n).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&n, &v)| (n, v))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .filter_map(|(n, a)| other.entries.get(n).map(|b| a * b))
            .sum()
    }

    /// Apply `f(n, z_n)` to every stored coordinate.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|(&n, &v)| (n, f(n, v))))
    }
}

impl State for SequenceState {
    fn l2_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn axpy(a: f64, x: &Self, y: &Self) -> Result<Self> {
        let mut out = y.entries.clone();
        for (&n, &v) in &x.entries {
            *out.entry(n).or_insert(0.0) += a * v;
        }
        Self::new(out)
    }

    fn zero_like(&self) -> Self {
        Self::zero()
    }
}

/// A real periodic field on (-pi, pi) stored by its Fourier coefficients
/// `z(x) = sum_{|n| <= N} c_n e^{inx}`.
///
/// Only `c_0..=c_N` are stored; `c_{-n} = conj(c_n)` is implied, so Hermitian
/// symmetry holds by construction and `c_0` is real.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
}

/// Relative tolerance used when validating symmetry of user-supplied coefficients.
const SYMMETRY_TOL: f64 = 1e-12;

impl SpectralField {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); n_modes + 1],
        }
    }

    /// Build from the nonnegative-mode coefficients `c_0, ..., c_N`.
    /// `c_0` must be real (to a relative tolerance of 1e-12; the residue is dropped).
    pub fn from_nonnegative(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidState("spectral field needs at least mode 0".into()));
        }
        if let Some(n) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState(format!("coefficient {n} is not finite")));
        }
        let c0 = coeffs[0];
        if c0.im.abs() > SYMMETRY_TOL * c0.re.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "mode 0 must be real for a real field, got imaginary part {}",
                c0.im
            )));
        }
        coeffs[0].im = 0.0;
        Ok(Self { coeffs })
    }

    /// Build from the full coefficient list `c_{-N}, ..., c_N`, checking
    /// Hermitian symmetry `c_{-n} = conj(c_n)`.
    pub fn from_full(full: &[Complex64]) -> Result<Self> {
        if full.len().is_multiple_of(2) {
            return Err(Error::InvalidState(
                "full coefficient list must have odd length 2N+1".into(),
            ));
        }
        let n_modes = full.len() / 2;
        for n in 1..=n_modes {
            let pos = full[n_modes + n];
            let neg = full[n_modes - n];
            let scale = pos.norm().max(neg.norm()).max(1.0);
            if (neg - pos.conj()).norm() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidState(format!(
                    "coefficients of modes {n} and -{n} are not conjugate"
                )));
            }
        }
        Self::from_nonnegative(full[n_modes..].to_vec())
    }

    /// The constant field `c`.
    pub fn constant(n_modes: usize, c: f64) -> Self {
        let mut field = Self::zeros(n_modes);
        field.coeffs[0] = Complex64::new(c, 0.0);
        field
    }

    /// `amplitude * cos(k x)`.
    pub fn cosine(n_modes: usize, k: usize, amplitude: f64) -> Result<Self> {
        Self::single_mode(n_modes, k, Complex64::new(amplitude / 2.0, 0.0))
    }

    /// `amplitude * sin(k x)`.
    pub fn sine(n_modes: usize, k: usize, amplitude: f64) -> Result<Self> {
        Self::single_mode(n_modes, k, Complex64::new(0.0, -amplitude / 2.0))
    }

    fn single_mode(n_modes: usize, k: usize, coeff: Complex64) -> Result<Self> {
        if k == 0 || k > n_modes {
            return Err(Error::ModeOutOfRange {
                n: k as i64,
                n_modes,
            });
        }
        let mut field = Self::zeros(n_modes);
        field.coeffs[k] = coeff;
        Ok(field)
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_0, ..., c_N`.
    pub fn nonnegative(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient `c_n` for any `|n| <= N`.
    pub fn coeff(&self, n: i64) -> Result<Complex64> {
        let k = n.unsigned_abs() as usize;
        if k > self.n_modes() {
            return Err(Error::ModeOutOfRange {
                n,
                n_modes: self.n_modes(),
            });
        }
        Ok(if n < 0 {
            self.coeffs[k].conj()
        } else {
            self.coeffs[k]
        })
    }

    /// Mean value of the field over (-pi, pi), i.e. `c_0`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Point value `z(x)`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let oscillating: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| (*c * Complex64::from_polar(1.0, n as f64 * x)).re)
            .sum();
        self.coeffs[0].re + 2.0 * oscillating
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::MismatchedTruncation {
                left: self.n_modes(),
                right: other.n_modes(),
            });
        }
        Ok(())
    }
}

impl State for SpectralField {
    /// Parseval: `||z||^2 = 2 pi sum_n |c_n|^2`.
    fn l2_norm(&self) -> f64 {
        let tail: f64 = self.coeffs[1..].iter().map(|c| c.norm_sqr()).sum();
        (2.0 * PI * (self.coeffs[0].norm_sqr() + 2.0 * tail)).sqrt()
    }

    fn axpy(a: f64, x: &Self, y: &Self) -> Result<Self> {
        x.check_compatible(y)?;
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(xc, yc)| xc * a + yc)
            .collect();
        Self::from_nonnegative(coeffs)
    }

    fn zero_like(&self) -> Self {
        Self::zeros(self.n_modes())
    }
}

/// A time-stamped orbit with the distance of each state to a reference equilibrium.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    times: Vec<f64>,
    states: Vec<S>,
    norms: Vec<f64>,
}

impl<S: State> Trajectory<S> {
    /// Record `states` at `times`; norms are `||state - reference||`.
    pub fn new(times: Vec<f64>, states: Vec<S>, reference: &S) -> Result<Self> {
        let norms = states
            .iter()
            .map(|s| s.sub(reference).map(|d| d.l2_norm()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(times, states, norms)
    }

    pub fn from_parts(times: Vec<f64>, states: Vec<S>, norms: Vec<f64>) -> Result<Self> {
        if times.len() != states.len() || times.len() != norms.len() {
            return Err(Error::arg(
                "trajectory",
                format!(
                    "length mismatch: {} times, {} states, {} norms",
                    times.len(),
                    states.len(),
                    norms.len()
                ),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("trajectory", "times must be strictly increasing"));
        }
        Ok(Self {
            times,
            states,
            norms,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// Outcome of a stability classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilityClass {
    ExponentiallyStable,
    AsymptoticallyStableOnly,
    Unstable,
    Inconclusive,
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StabilityClass::ExponentiallyStable => "ExponentiallyStable",
            StabilityClass::AsymptoticallyStableOnly => "AsymptoticallyStableOnly",
            StabilityClass::Unstable => "Unstable",
            StabilityClass::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Least-squares decay fit of the linear flow over the window `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthWindow {
    pub horizon: f64,
    pub gamma: f64,
    pub m: f64,
}

/// A classification together with the constants estimated along the way and
/// every raw measurement that backs it.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    /// Classification of the linearized flow alone.
    pub linear_class: StabilityClass,
    pub m_est: f64,
    pub gamma_est: f64,
    pub alpha_est: f64,
    /// Set when a nonlinear orbit starting arbitrarily close to the reference
    /// failed to contract although the linear flow decays.
    pub counterexample: bool,
    pub evidence: String,
    pub windows: Vec<GrowthWindow>,
    pub tail_gamma: Option<f64>,
    pub frechet: Option<FrechetReport>,
    pub contraction: Option<HalfContractionReport>,
    /// `(delta, escaped)` for every nonlinear escape probe.
    pub escapes: Vec<(f64, bool)>,
}

impl StabilityVerdict {
    pub(crate) fn inconclusive(evidence: impl Into<String>) -> Self {
        Self {
            class: StabilityClass::Inconclusive,
            linear_class: StabilityClass::Inconclusive,
            m_est: 1.0,
            gamma_est: 0.0,
            alpha_est: 0.0,
            counterexample: false,
            evidence: evidence.into(),
            windows: Vec::new(),
            tail_gamma: None,
            frechet: None,
            contraction: None,
            escapes: Vec::new(),
        }
    }
}

/// A perturbation scale whose flow evaluation failed during a scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleFailure {
    pub scale: f64,
    pub error: String,
}

/// Remainder ratios `||S(t)(z+sh) - S(t)z - T(t)sh|| / (s||h||)` over a
/// descending ladder of scales.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrechetReport {
    pub time: f64,
    pub scales: Vec<f64>,
    pub remainders: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Log-log slope of remainder against scale; `None` when every remainder
    /// vanishes identically or fewer than two scales succeeded.
    pub fitted_order: Option<f64>,
    pub failures: Vec<ScaleFailure>,
}

impl FrechetReport {
    /// True when the ratios shrink with the scale: strictly decreasing, or all zero.
    pub fn ratios_vanish(&self) -> bool {
        if self.ratios.is_empty() {
            return false;
        }
        if self.ratios.iter().all(|&r| r == 0.0) {
            return true;
        }
        self.ratios.windows(2).all(|w| w[1] < w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
        (a - b).abs() <= abs + rel * b.abs()
    }

    #[test]
    fn zero_states_have_zero_norm() {
        assert_eq!(SequenceState::zero().l2_norm(), 0.0);
        assert_eq!(SpectralField::zeros(8).l2_norm(), 0.0);
    }

    #[test]
    fn pythagorean_sequence_norm() {
        let z = SequenceState::new([(1, 3.0), (2, 4.0)]).unwrap();
        assert_eq!(z.l2_norm(), 5.0);
    }

    #[test]
    fn cosine_field_norm_matches_quadrature() {
        // Composite Simpson on cos^2 over (-pi, pi) as an independent oracle.
        let m = 2000;
        let h = 2.0 * PI / m as f64;
        let f = |x: f64| x.cos().powi(2);
        let mut sum = f(-PI) + f(PI);
        for i in 1..m {
            let x = -PI + i as f64 * h;
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let quadrature = (sum * h / 3.0).sqrt();
        let field = SpectralField::cosine(4, 1, 1.0).unwrap();
        assert!(close(field.l2_norm(), quadrature, 1e-10, 1e-8));
        assert!(close(field.l2_norm(), PI.sqrt(), 1e-12, 0.0));
    }

    #[test]
    fn axpy_examples() {
        let x = SequenceState::new([(1, 1.0)]).unwrap();
        let y = SequenceState::new([(1, 3.0)]).unwrap();
        assert_eq!(state_axpy(0.0, &x, &y).unwrap(), y);
        assert_eq!(state_axpy(2.0, &x, &y).unwrap(), SequenceState::new([(1, 5.0)]).unwrap());
        let minus_x = x.scaled(-1.0);
        assert!(state_axpy(1.0, &x, &minus_x).unwrap().is_zero());

        let f = SpectralField::cosine(6, 2, 0.3).unwrap();
        let g = f.scaled(-1.0);
        assert_eq!(state_axpy(1.0, &f, &g).unwrap(), SpectralField::zeros(6));
    }

    #[test]
    fn mismatched_truncation_is_rejected() {
        let a = SpectralField::zeros(4);
        let b = SpectralField::zeros(5);
        assert_eq!(
            state_axpy(1.0, &a, &b),
            Err(Error::MismatchedTruncation { left: 4, right: 5 })
        );
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(SequenceState::new([(0, 1.0)]).is_err());
        assert!(SequenceState::new([(3, f64::NAN)]).is_err());
        assert!(SpectralField::from_nonnegative(vec![Complex64::new(1.0, 0.5)]).is_err());
        let asym = [
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 1.0),
        ];
        assert!(SpectralField::from_full(&asym).is_err());
        let sym = [
            Complex64::new(1.0, -1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 1.0),
        ];
        let field = SpectralField::from_full(&sym).unwrap();
        assert_eq!(field.coeff(-1).unwrap(), Complex64::new(1.0, -1.0));
        assert!(field.coeff(2).is_err());
    }

    #[test]
    fn trajectory_rejects_non_increasing_times() {
        let s = SequenceState::zero();
        assert!(Trajectory::new(vec![0.0, 0.0], vec![s.clone(), s.clone()], &s).is_err());
        assert!(Trajectory::from_parts(vec![0.0], vec![s], vec![]).is_err());
    }

    #[test]
    fn evaluate_reconstructs_real_field() {
        let mut field = SpectralField::cosine(4, 1, 1.0).unwrap();
        field = SpectralField::axpy(1.0, &SpectralField::sine(4, 3, 2.0).unwrap(), &field).unwrap();
        for &x in &[-2.0f64, 0.1, 1.7] {
            let expected = x.cos() + 2.0 * (3.0 * x).sin();
            assert!(close(field.evaluate(x), expected, 1e-12, 0.0));
        }
    }

    fn spectral_strategy(n_modes: usize) -> impl Strategy<Value = SpectralField> {
        (
            -5.0..5.0f64,
            prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), n_modes),
        )
            .prop_map(|(c0, rest)| {
                let mut coeffs = vec![Complex64::new(c0, 0.0)];
                coeffs.extend(rest.into_iter().map(|(re, im)| Complex64::new(re, im)));
                SpectralField::from_nonnegative(coeffs).unwrap()
            })
    }

    fn sequence_strategy() -> impl Strategy<Value = SequenceState> {
        prop::collection::btree_map(1usize..40, -10.0..10.0f64, 0..12)
            .prop_map(|m| SequenceState::new(m).unwrap())
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(x in sequence_strategy(), f in spectral_strategy(6), a in -20.0..20.0f64) {
            let lhs = state_axpy(a, &x, &SequenceState::zero()).unwrap().l2_norm();
            prop_assert!(close(lhs, a.abs() * x.l2_norm(), 1e-300, 1e-12));
            let lhs = state_axpy(a, &f, &f.zero_like()).unwrap().l2_norm();
            prop_assert!(close(lhs, a.abs() * f.l2_norm(), 1e-300, 1e-12));
        }

        #[test]
        fn triangle_inequality(x in sequence_strategy(), y in sequence_strategy(),
                               f in spectral_strategy(5), g in spectral_strategy(5)) {
            let sum = state_axpy(1.0, &x, &y).unwrap();
            prop_assert!(sum.l2_norm() <= x.l2_norm() + y.l2_norm() + 1e-12);
            let sum = state_axpy(1.0, &f, &g).unwrap();
            prop_assert!(sum.l2_norm() <= f.l2_norm() + g.l2_norm() + 1e-12);
        }

        #[test]
        fn arithmetic_keeps_hermitian_symmetry(f in spectral_strategy(5), g in spectral_strategy(5), a in -3.0..3.0f64) {
            let h = state_axpy(a, &f, &g).unwrap();
            prop_assert_eq!(h.coeff(0).unwrap().im, 0.0);
            for n in 1..=5i64 {
                prop_assert_eq!(h.coeff(-n).unwrap(), h.coeff(n).unwrap().conj());
            }
        }
    }
}
