//! Zwart's counterexample on l2: `z_n' = -z_n / n + z_n^2`.
//!
//! The linearization at zero decays in every coordinate, but only at rate
//! `1/n`, so it is asymptotically and not exponentially stable. The
//! nonlinear flow has the stationary states `z_n = 1/n` arbitrarily close to
//! zero, so the zero equilibrium of the nonlinear system is not asymptotically
//! stable. Every coordinate decouples and has a closed-form solution, so all
//! operations here are exact up to rounding.

use crate::analysis::FlowPair;
use crate::error::{Error, Result};
use crate::state::{SequenceState, Trajectory};

/// Marker for the fixed dynamics `z_n' = -z_n / n + z_n^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ZwartModel;

impl ZwartModel {
    /// Generator `F(z)_n = -z_n / n + z_n^2`.
    pub fn rhs(&self, z: &SequenceState) -> Result<SequenceState> {
        z.map_indexed(|n, v| -v / n as f64 + v * v)
    }
}

/// Time at which coordinate `n` started from `z0n` reaches infinity, if ever.
///
/// The denominator `1 - n z0n (1 - e^{-t/n})` vanishes at
/// `t* = -n ln(1 - 1/(n z0n))`, which is finite only when `n z0n > 1`.
pub fn blow_up_time(n: usize, z0n: f64) -> Option<f64> {
    let nf = n as f64;
    let nz = nf * z0n;
    if nz > 1.0 {
        Some(-nf * (-1.0 / nz).ln_1p())
    } else {
        None
    }
}

fn coordinate(n: usize, z0n: f64, t: f64) -> Result<f64> {
    if let Some(t_star) = blow_up_time(n, z0n) {
        if t_star <= t {
            return Err(Error::BlowUp { n, t_star });
        }
    }
    let nf = n as f64;
    let decay = (-t / nf).exp();
    let nz = nf * z0n;
    // Grouped so that n z0n = 1 gives exactly z0n.
    Ok(z0n * decay / ((1.0 - nz) + nz * decay))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Closed-form nonlinear flow, coordinate by coordinate.
pub fn exact_solution(z0: &SequenceState, t: f64) -> Result<SequenceState> {
    check_time(t)?;
    let mut out = Vec::with_capacity(z0.support_len());
    for (n, v) in z0.iter() {
        out.push((n, coordinate(n, v, t)?));
    }
    SequenceState::new(out)
}

/// Linearized flow at zero: `z_n(t) = z0n e^{-t/n}`.
pub fn linear_solution(z0: &SequenceState, t: f64) -> Result<SequenceState> {
    check_time(t)?;
    z0.map_indexed(|n, v| v * (-t / n as f64).exp())
}

/// Distance to the equilibrium set `{z : z_n in {0, 1/n}}`.
pub fn dist_to_equilibria(z: &SequenceState) -> f64 {
    z.iter()
        .map(|(n, v)| {
            let target = 1.0 / n as f64;
            (v * v).min((v - target) * (v - target))
        })
        .sum::<f64>()
        .sqrt()
}

/// Orbit from the stationary state `{n: 1/n}`; norms are measured against zero.
pub fn counterexample_orbit(n: usize, t_grid: &[f64]) -> Result<Trajectory<SequenceState>> {
    if n == 0 {
        return Err(Error::arg("n", "must be >= 1"));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::arg("t_grid", "must start at t >= 0"));
    }
    let z0 = SequenceState::new([(n, 1.0 / n as f64)])?;
    let states = t_grid
        .iter()
        .map(|&t| exact_solution(&z0, t))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(t_grid.to_vec(), states, &SequenceState::zero())
}

/// `lim_{t -> inf} ||z(t)||` for the flow truncated to coordinates `1..=n_max`.
///
/// Each coordinate tends to 0 when `z0n < 1/n`, stays at `1/n` when
/// `z0n = 1/n` (to a few ulps), and blows up in finite time otherwise.
pub fn truncated_limit(z0: &SequenceState, n_max: usize) -> Result<f64> {
    if n_max == 0 {
        return Err(Error::arg("N", "must be >= 1"));
    }
    let mut sum = 0.0;
    for (n, v) in z0.iter().take_while(|(n, _)| *n <= n_max) {
        let nz = n as f64 * v;
        if (nz - 1.0).abs() <= 4.0 * f64::EPSILON {
            let limit = 1.0 / n as f64;
            sum += limit * limit;
        } else if nz > 1.0 {
            let t_star = blow_up_time(n, v).expect("n z0n > 1");
            return Err(Error::BlowUp { n, t_star });
        }
    }
    Ok(sum.sqrt())
}

/// Nonlinear and linearized flows at the zero equilibrium.
///
/// Perturbations are drawn along the counterexample directions: a probe at
/// size `delta` is the unit vector `e_n` with `n = round(1/delta)`, so that the
/// scaled probe `delta e_n` is the stationary state `{n: 1/n}` whenever
/// `delta = 1/n`.
pub fn flow_pair() -> FlowPair<SequenceState> {
    FlowPair::new(
        |z: &SequenceState, t| exact_solution(z, t),
        |h: &SequenceState, t| linear_solution(h, t),
        SequenceState::zero(),
        |_rng, delta| {
            let n = (1.0 / delta).round().max(1.0) as usize;
            SequenceState::unit(n).expect("n >= 1")
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::State;

    fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
        (a - b).abs() <= abs + rel * b.abs()
    }

    #[test]
    fn stationary_state_is_unchanged() {
        for n in [1usize, 3, 7, 10, 49, 1000] {
            let z0 = SequenceState::new([(n, 1.0 / n as f64)]).unwrap();
            let z = exact_solution(&z0, 5.0).unwrap();
            assert!(close(z.get(n), 1.0 / n as f64, 0.0, 1e-15), "n = {n}");
        }
    }

    #[test]
    fn zero_is_invariant() {
        assert!(exact_solution(&SequenceState::zero(), 10.0).unwrap().is_zero());
        assert!(linear_solution(&SequenceState::zero(), 3.0).unwrap().is_zero());
    }

    #[test]
    fn closed_form_value() {
        let z0 = SequenceState::new([(5, 0.1)]).unwrap();
        let z = exact_solution(&z0, 2.0).unwrap();
        let e = (-0.4f64).exp();
        let expected = 0.1 * e / (0.5 * (e - 1.0) + 1.0);
        assert!(close(z.get(5), expected, 0.0, 1e-14));
    }

    #[test]
    fn blow_up_reports_analytic_time() {
        let z0 = SequenceState::new([(4, 0.5)]).unwrap();
        match exact_solution(&z0, 10.0) {
            Err(Error::BlowUp { n, t_star }) => {
                assert_eq!(n, 4);
                assert!(close(t_star, 4.0 * 2f64.ln(), 0.0, 1e-14));
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
        // Just before t* the solution is finite and large.
        let z = exact_solution(&z0, 4.0 * 2f64.ln() - 1e-6).unwrap();
        assert!(z.get(4) > 1e4);
    }

    #[test]
    fn linear_solution_examples() {
        let z = linear_solution(&SequenceState::unit(1).unwrap(), 1.0).unwrap();
        assert!(close(z.get(1), (-1.0f64).exp(), 0.0, 1e-15));
        let z = linear_solution(&SequenceState::new([(2, 3.0)]).unwrap(), 2.0).unwrap();
        assert!(close(z.get(2), 3.0 * (-1.0f64).exp(), 0.0, 1e-15));
    }

    #[test]
    fn distance_to_equilibrium_set() {
        assert_eq!(dist_to_equilibria(&SequenceState::zero()), 0.0);
        let on_set = SequenceState::new([(3, 1.0 / 3.0), (8, 0.125)]).unwrap();
        assert!(dist_to_equilibria(&on_set) < 1e-16);
        // Brute force over both admissible values of coordinate 1.
        let z = SequenceState::new([(1, 0.75)]).unwrap();
        let brute = [0.0f64, 1.0]
            .iter()
            .map(|y| (0.75 - y).abs())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(dist_to_equilibria(&z), brute);
        assert_eq!(brute, 0.25);
    }

    #[test]
    fn counterexample_orbit_has_constant_norm() {
        let grid: Vec<f64> = (0..=100).map(f64::from).collect();
        let orbit = counterexample_orbit(10, &grid).unwrap();
        assert!(orbit.norms().iter().all(|&r| (r - 0.1).abs() <= 1e-14));
        let orbit = counterexample_orbit(1, &[0.0]).unwrap();
        assert_eq!(orbit.norms(), &[1.0]);
        let dense: Vec<f64> = (0..2000).map(|i| i as f64 * 0.05).collect();
        let orbit = counterexample_orbit(3, &dense).unwrap();
        assert!(orbit.norms().iter().all(|&r| (r - 1.0 / 3.0).abs() <= 4.0 * f64::EPSILON));
    }

    #[test]
    fn truncated_limits() {
        let z0 = SequenceState::new((1..=100).map(|n| (n, 0.9 / n as f64))).unwrap();
        assert_eq!(truncated_limit(&z0, 100).unwrap(), 0.0);
        assert_eq!(truncated_limit(&SequenceState::zero(), 5).unwrap(), 0.0);
        let z0 = SequenceState::new([(7, 1.0 / 7.0)]).unwrap();
        assert!(close(truncated_limit(&z0, 10).unwrap(), 1.0 / 7.0, 0.0, 1e-15));
        let z0 = SequenceState::new([(2, 0.6)]).unwrap();
        assert!(matches!(truncated_limit(&z0, 10), Err(Error::BlowUp { n: 2, .. })));
        // Coordinates beyond the truncation are discarded.
        assert_eq!(truncated_limit(&z0, 1).unwrap(), 0.0);
    }

    #[test]
    fn semigroup_property() {
        let z0 = SequenceState::new([(1, 0.4), (2, -0.3), (5, 0.1), (9, 0.05)]).unwrap();
        for &(s, t) in &[(0.5, 1.5), (3.0, 7.0), (10.0, 0.1)] {
            let two_step = exact_solution(&exact_solution(&z0, s).unwrap(), t).unwrap();
            let one_step = exact_solution(&z0, s + t).unwrap();
            for (n, v) in one_step.iter() {
                assert!(close(two_step.get(n), v, 1e-300, 1e-10));
            }
        }
    }

    #[test]
    fn linear_flow_norm_decreases_to_zero() {
        let z0 = SequenceState::new([(1, 1.0), (4, -2.0), (12, 0.5)]).unwrap();
        let mut previous = z0.l2_norm();
        for i in 1..50 {
            let norm = linear_solution(&z0, i as f64).unwrap().l2_norm();
            assert!(norm < previous);
            previous = norm;
        }
        let eps: f64 = 1e-6;
        let t = 10.0 * 12.0 * (1.0 / eps).ln();
        assert!(linear_solution(&z0, t).unwrap().l2_norm() <= eps);
    }

    #[test]
    fn rhs_vanishes_on_equilibria() {
        let z = SequenceState::new([(2, 0.5), (6, 1.0 / 6.0)]).unwrap();
        assert!(ZwartModel.rhs(&z).unwrap().l2_norm() < 1e-16);
    }
}
