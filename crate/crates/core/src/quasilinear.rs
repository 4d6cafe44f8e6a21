//! Dissipative quasilinear testbed `z' = A z + f(z)` on the sine basis of (0, pi).
//!
//! States are coefficient vectors in the orthonormal basis
//! `sqrt(2/pi) sin(n x)`, stored as [`SequenceState`] with indices `1..=N`, so
//! the l2 norm of the coefficients is the L2(0, pi) norm. `A` is the Dirichlet
//! Laplacian (`-n^2` on mode `n`) and the nonlinearity is the rank-one map
//! `f(z) = eps tanh(<z, w>) v`, whose derivative is bounded by `eps` and
//! globally Lipschitz, so all the Gronwall constants are analytic.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{fit_log_log_slope, FlowPair};
use crate::error::{Error, Result};
use crate::etd::{step_plan, Etdrk4};
use crate::state::{SequenceState, State};

pub const DEFAULT_N_MODES: usize = 16;
pub const DEFAULT_DT: f64 = 0.01;

/// `max_s |d/ds sech^2(s)| = 4 / (3 sqrt 3)`, attained at `tanh^2 s = 1/3`.
pub const SECH2_SLOPE_MAX: f64 = 0.769_800_358_919_501;

#[derive(Clone, Debug, PartialEq)]
pub struct QuasilinearTestbed {
    n_modes: usize,
    coupling: f64,
    w: SequenceState,
    v: SequenceState,
    dt: f64,
}

impl QuasilinearTestbed {
    /// Testbed with the default shapes `w = v = e_1`.
    pub fn new(n_modes: usize, coupling: f64) -> Result<Self> {
        let e1 = SequenceState::unit(1)?;
        Self::with_shapes(n_modes, coupling, e1.clone(), e1)
    }

    /// Testbed with custom shape vectors; both are normalized to unit length.
    pub fn with_shapes(n_modes: usize, coupling: f64, w: SequenceState, v: SequenceState) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::arg("n_modes", "must be >= 1"));
        }
        // eps = 0 is admitted: it is the linear limit of the testbed.
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::arg("epsilon_c", format!("must be >= 0, got {coupling}")));
        }
        let normalize = |s: SequenceState, name: &'static str| -> Result<SequenceState> {
            if s.max_index().is_some_and(|n| n > n_modes) {
                return Err(Error::arg(name, "support exceeds the truncation"));
            }
            let norm = s.l2_norm();
            if norm == 0.0 {
                return Err(Error::arg(name, "shape vector must be nonzero"));
            }
            Ok(s.scaled(1.0 / norm))
        };
        Ok(Self {
            n_modes,
            coupling,
            w: normalize(w, "w")?,
            v: normalize(v, "v")?,
            dt: DEFAULT_DT,
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg("dt", format!("must be > 0, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn w(&self) -> &SequenceState {
        &self.w
    }

    pub fn v(&self) -> &SequenceState {
        &self.v
    }

    fn check_state(&self, z: &SequenceState) -> Result<()> {
        match z.max_index() {
            Some(n) if n > self.n_modes => Err(Error::MismatchedTruncation {
                left: self.n_modes,
                right: n,
            }),
            _ => Ok(()),
        }
    }

    /// `A z`.
    pub fn apply_a(&self, z: &SequenceState) -> Result<SequenceState> {
        self.check_state(z)?;
        z.map_indexed(|n, v| -((n * n) as f64) * v)
    }

    /// `f(z) = eps tanh(<z, w>) v`.
    pub fn f(&self, z: &SequenceState) -> Result<SequenceState> {
        self.check_state(z)?;
        Ok(self.v.scaled(self.coupling * z.dot(&self.w).tanh()))
    }

    fn dense_w(&self) -> Vec<f64> {
        self.w.to_dense(self.n_modes)
    }

    fn dense_v(&self) -> Vec<f64> {
        self.v.to_dense(self.n_modes)
    }
}

fn sech2(s: f64) -> f64 {
    let c = s.cosh();
    1.0 / (c * c)
}

/// `A z + f(z)`.
pub fn testbed_rhs(tb: &QuasilinearTestbed, z: &SequenceState) -> Result<SequenceState> {
    SequenceState::axpy(1.0, &tb.apply_a(z)?, &tb.f(z)?)
}

/// `Df(z_base) h = eps sech^2(<z_base, w>) <h, w> v`.
pub fn df_apply(tb: &QuasilinearTestbed, z_base: &SequenceState, h: &SequenceState) -> Result<SequenceState> {
    tb.check_state(z_base)?;
    tb.check_state(h)?;
    let gain = tb.coupling * sech2(z_base.dot(&tb.w)) * h.dot(&tb.w);
    Ok(tb.v.scaled(gain))
}

/// Constants of the Gronwall chain on the ball `N_{z,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GronwallConstants {
    /// `sup ||Df||` over the ball.
    pub k: f64,
    /// `||Df(z)||` at the center.
    pub m: f64,
    /// Lipschitz constant of `Df` on the ball.
    pub l: f64,
}

pub fn gronwall_constants(tb: &QuasilinearTestbed, z_center: &SequenceState, r: f64) -> Result<GronwallConstants> {
    if !(r > 0.0) {
        return Err(Error::arg("r", format!("must be > 0, got {r}")));
    }
    tb.check_state(z_center)?;
    let eps = tb.coupling;
    Ok(GronwallConstants {
        k: eps,
        m: eps * sech2(z_center.dot(&tb.w)),
        l: eps * SECH2_SLOPE_MAX,
    })
}

/// `k(t_f) = L / (2 (K - M)) (e^{2 K t_f} - e^{2 M t_f})`, with the limit
/// `L t_f e^{2 K t_f}` when `K` and `M` coincide.
pub fn k_of_tf(k: f64, m: f64, l: f64, t_f: f64) -> Result<f64> {
    for (name, value) in [("K", k), ("M", m), ("L", l)] {
        if !(value >= 0.0) {
            return Err(Error::arg(name, format!("must be >= 0, got {value}")));
        }
    }
    if !(t_f > 0.0) {
        return Err(Error::arg("t_f", format!("must be > 0, got {t_f}")));
    }
    if (k - m).abs() < 1e-12 {
        return Ok(l * t_f * (2.0 * k * t_f).exp());
    }
    Ok(l / (2.0 * (k - m)) * ((2.0 * k * t_f).exp() - (2.0 * m * t_f).exp()))
}

/// Sampled solution of the nonlinear flow and (optionally) its variational
/// equation `psi' = A psi + Df(z(t)) psi` along it.
struct Evolution {
    times: Vec<f64>,
    z: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

/// Integrate `(z, psi)` jointly with ETDRK4. Because the variational part is
/// advanced by the same scheme, `psi` is exactly the derivative of the
/// discrete flow map.
fn evolve(tb: &QuasilinearTestbed, z0: &[f64], psi0: Option<&[f64]>, t_final: f64) -> Evolution {
    let n = tb.n_modes;
    let w = tb.dense_w();
    let v = tb.dense_v();
    let eps = tb.coupling;
    let with_psi = psi0.is_some();
    let dim = if with_psi { 2 * n } else { n };

    let diagonal: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(-(((i % n) + 1).pow(2) as f64), 0.0))
        .collect();
    let mut state: Vec<Complex64> = z0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    if let Some(p) = psi0 {
        state.extend(p.iter().map(|&x| Complex64::new(x, 0.0)));
    }
    let nonlinear = |u: &[Complex64]| -> Vec<Complex64> {
        let s: f64 = u[..n].iter().zip(&w).map(|(a, b)| a.re * b).sum();
        let gain = eps * s.tanh();
        let mut out: Vec<Complex64> = v.iter().map(|&vi| Complex64::new(gain * vi, 0.0)).collect();
        if with_psi {
            let proj: f64 = u[n..].iter().zip(&w).map(|(a, b)| a.re * b).sum();
            let dgain = eps * sech2(s) * proj;
            out.extend(v.iter().map(|&vi| Complex64::new(dgain * vi, 0.0)));
        }
        out
    };

    let split = |u: &[Complex64]| -> (Vec<f64>, Vec<f64>) {
        let z = u[..n].iter().map(|c| c.re).collect();
        let psi = if with_psi { u[n..].iter().map(|c| c.re).collect() } else { Vec::new() };
        (z, psi)
    };

    let (steps, remainder) = step_plan(t_final, tb.dt);
    let scheme = Etdrk4::new(&diagonal, tb.dt);
    let mut out = Evolution {
        times: vec![0.0],
        z: vec![z0.to_vec()],
        psi: vec![psi0.map(<[f64]>::to_vec).unwrap_or_default()],
    };
    for i in 1..=steps {
        state = scheme.step(&state, nonlinear);
        let (z, psi) = split(&state);
        out.times.push(i as f64 * tb.dt);
        out.z.push(z);
        out.psi.push(psi);
    }
    if let Some(h) = remainder {
        state = Etdrk4::new(&diagonal, h).step(&state, nonlinear);
        let (z, psi) = split(&state);
        out.times.push(t_final);
        out.z.push(z);
        out.psi.push(psi);
    }
    out
}

fn to_state(dense: &[f64]) -> SequenceState {
    SequenceState::from_dense(dense).expect("integrator output is finite")
}

/// Nonlinear semigroup `S(t) z0`.
pub fn flow(tb: &QuasilinearTestbed, z0: &SequenceState, t: f64) -> Result<SequenceState> {
    tb.check_state(z0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg("t", format!("must be >= 0, got {t}")));
    }
    let ev = evolve(tb, &z0.to_dense(tb.n_modes), None, t);
    Ok(to_state(ev.z.last().expect("at least the initial sample")))
}

/// Variational flow `T_{z0}(t) h`, integrated along the orbit from `z0`.
pub fn linearized_flow(tb: &QuasilinearTestbed, z0: &SequenceState, h: &SequenceState, t: f64) -> Result<SequenceState> {
    tb.check_state(z0)?;
    tb.check_state(h)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg("t", format!("must be >= 0, got {t}")));
    }
    let psi0 = h.to_dense(tb.n_modes);
    let ev = evolve(tb, &z0.to_dense(tb.n_modes), Some(&psi0), t);
    Ok(to_state(ev.psi.last().expect("at least the initial sample")))
}

/// Flow pair at the base point `z0`; perturbation directions are uniform on
/// the cube in all `N` coordinates.
pub fn flow_pair(tb: &QuasilinearTestbed, z0: SequenceState) -> FlowPair<SequenceState> {
    let (tb_nl, tb_lin, n) = (tb.clone(), tb.clone(), tb.n_modes);
    let base = z0.clone();
    FlowPair::new(
        move |z: &SequenceState, t| flow(&tb_nl, z, t),
        move |h: &SequenceState, t| linearized_flow(&tb_lin, &base, h, t),
        z0,
        move |rng, _delta| {
            use rand::Rng;
            let dense: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            SequenceState::from_dense(&dense).expect("finite")
        },
    )
}

/// Per-scale outcome of [`verify_remainder_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleCheck {
    pub scale: f64,
    /// `max_t ||phi(t)||` over the sampled times.
    pub max_remainder: f64,
    /// `k(t_f) s^2`.
    pub remainder_bound: f64,
    pub remainder_ok: bool,
    /// `max_t ||y(t) - z(t)||^2 / (s^2 e^{2Kt})`; the separation bound holds when <= 1.
    pub separation_ratio: f64,
    pub separation_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderReport {
    pub t_final: f64,
    pub constants: GronwallConstants,
    pub k_tf: f64,
    pub checks: Vec<ScaleCheck>,
    /// Log-log slope of `max_remainder` against scale.
    pub fitted_order: Option<f64>,
    pub remainder_bound_holds: bool,
    pub separation_bound_holds: bool,
}

/// Compare the nonlinear flows from `z0` and `z0 + s h` with the variational
/// flow from `s h` over `[0, t_final]`, for each scale `s`.
pub fn verify_remainder_bound(
    tb: &QuasilinearTestbed,
    z0: &SequenceState,
    direction: &SequenceState,
    scales: &[f64],
    t_final: f64,
) -> Result<RemainderReport> {
    tb.check_state(z0)?;
    tb.check_state(direction)?;
    if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0)) || scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::arg("scales", "must be positive and strictly decreasing"));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::arg("t_final", format!("must be > 0, got {t_final}")));
    }
    let norm = direction.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let h = direction.scaled(1.0 / norm).to_dense(tb.n_modes);
    let base = z0.to_dense(tb.n_modes);
    let constants = gronwall_constants(tb, z0, scales[0])?;
    let k_tf = k_of_tf(constants.k, constants.m, constants.l, t_final)?;

    let checks: Vec<ScaleCheck> = scales
        .par_iter()
        .map(|&s| {
            let psi0: Vec<f64> = h.iter().map(|x| s * x).collect();
            let y0: Vec<f64> = base.iter().zip(&psi0).map(|(a, b)| a + b).collect();
            let zs = evolve(tb, &base, Some(&psi0), t_final);
            let ys = evolve(tb, &y0, None, t_final);
            let mut max_remainder = 0.0f64;
            let mut separation_ratio = 0.0f64;
            // Measured against the separation actually formed in floating
            // point, which can differ from s^2 in the last bits.
            let sep0: f64 = y0.iter().zip(&base).map(|(a, b)| (a - b).powi(2)).sum();
            for (i, &t) in zs.times.iter().enumerate() {
                let (y, z, psi) = (&ys.z[i], &zs.z[i], &zs.psi[i]);
                let phi: f64 = (0..tb.n_modes).map(|k| (y[k] - z[k] - psi[k]).powi(2)).sum::<f64>().sqrt();
                let sep2: f64 = (0..tb.n_modes).map(|k| (y[k] - z[k]).powi(2)).sum();
                max_remainder = max_remainder.max(phi);
                separation_ratio = separation_ratio.max(sep2 / (sep0 * (2.0 * constants.k * t).exp()));
            }
            let remainder_bound = k_tf * s * s;
            ScaleCheck {
                scale: s,
                max_remainder,
                remainder_bound,
                remainder_ok: max_remainder <= remainder_bound,
                separation_ratio,
                separation_ok: separation_ratio <= 1.0,
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = checks
        .iter()
        .filter(|c| c.max_remainder > 0.0)
        .map(|c| (c.scale, c.max_remainder))
        .collect();
    Ok(RemainderReport {
        t_final,
        constants,
        k_tf,
        fitted_order: fit_log_log_slope(&points),
        remainder_bound_holds: checks.iter().all(|c| c.remainder_ok),
        separation_bound_holds: checks.iter().all(|c| c.separation_ok),
        checks,
    })
}
