//! Model-agnostic checks of linearized stability.
//!
//! Everything here works on a [`FlowPair`]: a nonlinear semigroup `S(t)`, a
//! candidate derivative semigroup `T(t)` acting on perturbations, the base
//! point they are linearized at, and a seeded sampler of perturbation
//! directions. The checks are:
//!
//! * [`frechet_ratio_scan`]: the remainder `S(t)(z + s h) - S(t) z - T(t) s h`
//!   over shrinking `s`, and its log-log order;
//! * [`estimate_growth_constants`] and [`contraction_time`]: the decay
//!   constants `(M, gamma)` of the linear flow and the horizon
//!   `t_bar = ln(4M) / gamma` at which it contracts by 1/4;
//! * [`verify_half_contraction`]: whether the nonlinear flow contracts by 1/2
//!   at `t_bar` from sampled starts at distance `delta`;
//! * [`classify`]: the combination of the above into a [`StabilityVerdict`].
//!
//! All verdicts are sampled evidence, not proofs. Randomness only enters
//! through explicit seeds, and results are collected in input order.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{
    FrechetReport, GrowthWindow, ScaleFailure, StabilityClass, StabilityVerdict, State, Trajectory,
};

pub type Flow<S> = Arc<dyn Fn(&S, f64) -> Result<S> + Send + Sync>;

/// Draws a perturbation direction; the second argument is the probe size
/// `delta`, which samplers are free to ignore.
pub type DirectionSampler<S> = Arc<dyn Fn(&mut ChaCha8Rng, f64) -> S + Send + Sync>;

/// A nonlinear flow, its candidate derivative at `reference`, and a sampler
/// of perturbation directions.
#[derive(Clone)]
pub struct FlowPair<S> {
    nonlinear: Flow<S>,
    linear: Flow<S>,
    reference: S,
    sampler: DirectionSampler<S>,
}

impl<S: fmt::Debug> fmt::Debug for FlowPair<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowPair").field("reference", &self.reference).finish_non_exhaustive()
    }
}

impl<S: State + 'static> FlowPair<S> {
    pub fn new(
        nonlinear: impl Fn(&S, f64) -> Result<S> + Send + Sync + 'static,
        linear: impl Fn(&S, f64) -> Result<S> + Send + Sync + 'static,
        reference: S,
        sampler: impl Fn(&mut ChaCha8Rng, f64) -> S + Send + Sync + 'static,
    ) -> Self {
        Self {
            nonlinear: Arc::new(nonlinear),
            linear: Arc::new(linear),
            reference,
            sampler: Arc::new(sampler),
        }
    }

    /// `S(t) z`.
    pub fn nonlinear(&self, z: &S, t: f64) -> Result<S> {
        (self.nonlinear)(z, t)
    }

    /// `T(t) h` for a perturbation `h` of the reference.
    pub fn linear(&self, h: &S, t: f64) -> Result<S> {
        (self.linear)(h, t)
    }

    pub fn reference(&self) -> &S {
        &self.reference
    }

    /// A unit-norm direction from the sampler.
    pub fn unit_direction(&self, rng: &mut ChaCha8Rng, delta: f64) -> Result<S> {
        let d = (self.sampler)(rng, delta);
        let norm = d.l2_norm();
        if !(norm > 0.0) {
            return Err(Error::ZeroDirection);
        }
        Ok(d.scaled(1.0 / norm))
    }

    /// Largest deviation from `S(s) S(t) z = S(s + t) z` and the same for `T`,
    /// relative to the size of the result.
    pub fn semigroup_defect(&self, z: &S, h: &S, s: f64, t: f64) -> Result<(f64, f64)> {
        let defect = |flow: &Flow<S>, x: &S| -> Result<f64> {
            let two = flow(&flow(x, s)?, t)?;
            let one = flow(x, s + t)?;
            Ok(two.sub(&one)?.l2_norm() / one.l2_norm().max(f64::MIN_POSITIVE))
        };
        Ok((defect(&self.nonlinear, z)?, defect(&self.linear, h)?))
    }
}

/// Least-squares slope and intercept of `ys` against `xs`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x` over points with positive coordinates.
pub fn fit_log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    linear_fit(&xs, &ys).map(|(slope, _)| slope)
}

/// Independent ChaCha8 stream `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Scan the Frechet remainder of `S(t)` at the pair's reference along `direction`.
///
/// For each scale `s` this computes `w = S(t)(z + s h) - S(t) z - T(t)(s h)`,
/// records `||w|| / (s ||h||)` and fits the log-log slope of `||w||` against
/// `s` (2 for a quadratic remainder). Failed flow evaluations are recorded
/// per scale and the scan continues.
pub fn frechet_ratio_scan<S: State + 'static>(
    pair: &FlowPair<S>,
    direction: &S,
    scales: &[f64],
    t: f64,
) -> Result<FrechetReport> {
    let h_norm = direction.l2_norm();
    if h_norm == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0)) || scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::arg("scales", "must be positive and strictly decreasing"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::arg("t", format!("must be > 0, got {t}")));
    }
    let base = pair.nonlinear(pair.reference(), t)?;
    let outcomes: Vec<Result<f64>> = scales
        .par_iter()
        .map(|&s| {
            let h = direction.scaled(s);
            let perturbed = pair.nonlinear(&S::axpy(1.0, &h, pair.reference())?, t)?;
            let linear = pair.linear(&h, t)?;
            Ok(perturbed.sub(&base)?.sub(&linear)?.l2_norm())
        })
        .collect();

    let mut report = FrechetReport {
        time: t,
        scales: Vec::new(),
        remainders: Vec::new(),
        ratios: Vec::new(),
        fitted_order: None,
        failures: Vec::new(),
    };
    for (&s, outcome) in scales.iter().zip(outcomes) {
        match outcome {
            Ok(remainder) => {
                report.scales.push(s);
                report.remainders.push(remainder);
                report.ratios.push(remainder / (s * h_norm));
            }
            Err(e) => report.failures.push(ScaleFailure {
                scale: s,
                error: e.to_string(),
            }),
        }
    }
    let points: Vec<(f64, f64)> = report.scales.iter().copied().zip(report.remainders.iter().copied()).collect();
    report.fitted_order = fit_log_log_slope(&points);
    Ok(report)
}

/// Decay constants in `||z(t) - z_e|| <= M e^{-gamma t} ||z(0) - z_e||`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub m: f64,
    pub gamma: f64,
}

/// Fit `(M, gamma)` to sampled distances. Times are taken relative to the
/// first sample, whose distance is the normalization. `gamma` is minus the
/// least-squares slope of `ln ||z(t) - z_e||` over the later samples (all
/// samples when there are fewer than three), and
/// `M = max_t ||z(t) - z_e|| e^{gamma t} / ||z(0) - z_e||`, clamped to `M >= 1`.
fn growth_from_samples(times: &[f64], norms: &[f64]) -> Result<GrowthConstants> {
    if times.len() < 2 || times.len() != norms.len() {
        return Err(Error::DegenerateFit("need at least two samples".into()));
    }
    if let Some(i) = norms.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::DegenerateFit(format!(
            "distance {} at t = {} is not positive",
            norms[i], times[i]
        )));
    }
    let t0 = times[0];
    let rel_t: Vec<f64> = times.iter().map(|t| t - t0).collect();
    let logs: Vec<f64> = norms.iter().map(|r| r.ln()).collect();
    let skip = usize::from(times.len() >= 3);
    let (slope, _) = linear_fit(&rel_t[skip..], &logs[skip..])
        .ok_or_else(|| Error::DegenerateFit("times do not spread".into()))?;
    let gamma = -slope;
    let m = rel_t
        .iter()
        .zip(&logs)
        .map(|(t, l)| (l - logs[0] + gamma * t).exp())
        .fold(1.0, f64::max);
    Ok(GrowthConstants { m, gamma })
}

/// Fit `(M, gamma)` to a trajectory's distances from its reference.
/// A negative `gamma` signals growth.
pub fn estimate_growth_constants<S: State>(traj: &Trajectory<S>) -> Result<GrowthConstants> {
    growth_from_samples(traj.times(), traj.norms())
}

/// `t_bar = ln(4M) / gamma`, the time at which `M e^{-gamma t} = 1/4`.
pub fn contraction_time(m: f64, gamma: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::arg("M", format!("must be >= 1, got {m}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::arg("gamma", format!("must be > 0, got {gamma}")));
    }
    Ok((4.0 * m).ln() / gamma)
}

/// Half-contraction results for one probe size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaProbe {
    pub delta: f64,
    /// `||S(t_bar) z0 - z_e|| / delta` per successful sample.
    pub nonlinear_factors: Vec<f64>,
    /// `||T(t_bar)(z0 - z_e)|| / delta`.
    pub linear_factors: Vec<f64>,
    /// `||S(t_bar) z0 - z_e - T(t_bar)(z0 - z_e)|| / delta`.
    pub remainder_ratios: Vec<f64>,
    /// `max_{tau} ||S(tau) z0 - z_e|| / delta` over `tau` in `{t_bar/4, ..., t_bar}`.
    pub transient_factors: Vec<f64>,
    pub failures: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfContractionReport {
    pub t_bar: f64,
    pub seed: u64,
    pub samples: usize,
    pub probes: Vec<DeltaProbe>,
    /// Largest `delta` at which every sample contracted by at least 1/2.
    pub largest_passing_delta: Option<f64>,
    pub max_linear_factor: f64,
    /// Measured `C` in `||S(tau) z0 - z_e|| <= C ||z0 - z_e||` on `[0, t_bar]`.
    pub empirical_c: f64,
}

impl HalfContractionReport {
    /// True if every probe with `delta <= bound` passed (and at least one exists).
    pub fn passes_at_or_below(&self, bound: f64) -> bool {
        let mut relevant = self.probes.iter().filter(|p| p.delta <= bound).peekable();
        relevant.peek().is_some() && relevant.all(|p| p.passed)
    }

    /// True if some probe failed.
    pub fn any_failed(&self) -> bool {
        self.probes.iter().any(|p| !p.passed)
    }
}

const TRANSIENT_CHECKPOINTS: usize = 4;

struct SampleOutcome {
    nonlinear: f64,
    linear: f64,
    remainder: f64,
    transient: f64,
}

fn contraction_sample<S: State + 'static>(pair: &FlowPair<S>, t_bar: f64, delta: f64, rng: &mut ChaCha8Rng) -> Result<SampleOutcome> {
    let h = pair.unit_direction(rng, delta)?.scaled(delta);
    let z0 = S::axpy(1.0, &h, pair.reference())?;
    // S(t_bar) as a composition of quarter steps, recording the transient.
    let chunk = t_bar / TRANSIENT_CHECKPOINTS as f64;
    let mut z = z0;
    let mut transient = 1.0f64;
    for _ in 0..TRANSIENT_CHECKPOINTS {
        z = pair.nonlinear(&z, chunk)?;
        transient = transient.max(z.sub(pair.reference())?.l2_norm() / delta);
    }
    let deviation = z.sub(pair.reference())?;
    let linear = pair.linear(&h, t_bar)?;
    Ok(SampleOutcome {
        nonlinear: deviation.l2_norm() / delta,
        linear: linear.l2_norm() / delta,
        remainder: deviation.sub(&linear)?.l2_norm() / delta,
        transient,
    })
}

/// For each `delta`, start `samples` seeded orbits at distance `delta` from
/// the reference and check `||S(t_bar) z0 - z_e|| <= delta / 2`.
pub fn verify_half_contraction<S: State + 'static>(
    pair: &FlowPair<S>,
    t_bar: f64,
    deltas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<HalfContractionReport> {
    if !(t_bar > 0.0 && t_bar.is_finite()) {
        return Err(Error::arg("t_bar", format!("must be > 0, got {t_bar}")));
    }
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) || deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::arg("deltas", "must be positive and strictly decreasing"));
    }
    if samples == 0 {
        return Err(Error::arg("samples", "must be >= 1"));
    }
    let tasks: Vec<(usize, usize)> = (0..deltas.len()).flat_map(|i| (0..samples).map(move |j| (i, j))).collect();
    let outcomes: Vec<Result<SampleOutcome>> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let mut rng = rng_for(seed, (i * samples + j) as u64);
            contraction_sample(pair, t_bar, deltas[i], &mut rng)
        })
        .collect();

    let mut probes: Vec<DeltaProbe> = deltas
        .iter()
        .map(|&delta| DeltaProbe {
            delta,
            nonlinear_factors: Vec::new(),
            linear_factors: Vec::new(),
            remainder_ratios: Vec::new(),
            transient_factors: Vec::new(),
            failures: Vec::new(),
            passed: true,
        })
        .collect();
    for (&(i, _), outcome) in tasks.iter().zip(outcomes) {
        let probe = &mut probes[i];
        match outcome {
            Ok(o) => {
                probe.passed &= o.nonlinear <= 0.5;
                probe.nonlinear_factors.push(o.nonlinear);
                probe.linear_factors.push(o.linear);
                probe.remainder_ratios.push(o.remainder);
                probe.transient_factors.push(o.transient);
            }
            Err(e) => {
                probe.passed = false;
                probe.failures.push(e.to_string());
            }
        }
    }
    let largest_passing_delta = probes.iter().filter(|p| p.passed).map(|p| p.delta).reduce(f64::max);
    let max_of = |f: fn(&DeltaProbe) -> &Vec<f64>| probes.iter().flat_map(|p| f(p).iter().copied()).fold(0.0, f64::max);
    let max_linear_factor = max_of(|p| &p.linear_factors);
    let empirical_c = max_of(|p| &p.transient_factors);
    Ok(HalfContractionReport {
        t_bar,
        seed,
        samples,
        probes,
        largest_passing_delta,
        max_linear_factor,
        empirical_c,
    })
}

/// Probe settings for [`classify`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub seed: u64,
    /// Descending probe sizes for the contraction and escape checks.
    pub deltas: Vec<f64>,
    pub samples: usize,
    /// First linear fit window `[0, horizon]`; later windows double it.
    pub horizon: f64,
    pub doublings: usize,
    pub window_samples: usize,
    /// Decay rates below this are treated as "no uniform exponential rate".
    pub gamma_threshold: f64,
    /// Tail decay rates at or below this count as neutral, not decaying.
    pub tail_floor: f64,
    pub frechet_time: f64,
    pub frechet_scales: Vec<f64>,
    pub escape_radius: f64,
    pub escape_horizon: f64,
    pub escape_checkpoints: usize,
}

impl ProbeConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            deltas: vec![1e-3, 5e-4, 2.5e-4, 1e-4],
            samples: 20,
            horizon: 10.0,
            doublings: 8,
            window_samples: 64,
            gamma_threshold: 1e-3,
            tail_floor: 1e-9,
            frechet_time: 1.0,
            frechet_scales: vec![1e-1, 1e-2, 1e-3, 1e-4],
            escape_radius: 1e-2,
            escape_horizon: 200.0,
            escape_checkpoints: 200,
        }
    }
}

/// Distances beyond this factor of the initial one (either way) end the window doubling.
const UNDERFLOW_RATIO: f64 = 1e-150;

/// `(t, ||T(t) h||)` samples on one window grid.
type Window = Vec<(f64, f64)>;

/// Linear decay fits over doubling windows, worst case over the probe directions.
struct LinearEvidence {
    windows: Vec<GrowthWindow>,
    tail_gamma: f64,
}

fn linear_evidence<S: State + 'static>(pair: &FlowPair<S>, directions: &[S], probes: &ProbeConfig) -> Result<LinearEvidence> {
    let horizons: Vec<f64> = (0..=probes.doublings).map(|k| probes.horizon * 2f64.powi(k as i32)).collect();
    let w = probes.window_samples.max(2);
    let saturated = |win: &[(f64, f64)]| {
        let r0 = win[0].1;
        win.iter().any(|&(_, r)| !(r >= UNDERFLOW_RATIO * r0 && r <= r0 / UNDERFLOW_RATIO))
    };
    // Distances for each direction on each window grid, in input order. A
    // direction stops doubling after its first saturated window; a flow error
    // past the first window (overflow of a growing mode) counts as saturation.
    let per_direction: Vec<Result<Vec<Window>>> = directions
        .par_iter()
        .map(|d| {
            let mut windows: Vec<Window> = Vec::with_capacity(horizons.len());
            for (k, &horizon) in horizons.iter().enumerate() {
                let mut samples = Vec::with_capacity(w + 1);
                for j in 0..=w {
                    let t = horizon * j as f64 / w as f64;
                    match pair.linear(d, t) {
                        Ok(z) => samples.push((t, z.l2_norm())),
                        Err(e) if k == 0 => return Err(e),
                        Err(_) => return Ok(windows),
                    }
                }
                let stop = saturated(&samples);
                windows.push(samples);
                if stop {
                    break;
                }
            }
            Ok(windows)
        })
        .collect();
    let per_direction = per_direction.into_iter().collect::<Result<Vec<_>>>()?;

    let mut windows = Vec::new();
    let mut tail_gamma = f64::NAN;
    for (k, &horizon) in horizons.iter().enumerate() {
        // Stop doubling once some direction has decayed or grown by ~150 decades.
        let stop = per_direction.iter().any(|win| win.get(k).is_none_or(|w| saturated(w)));
        if stop && !windows.is_empty() {
            break;
        }
        let mut gamma = f64::INFINITY;
        let mut tail = f64::INFINITY;
        for win in &per_direction {
            let (times, norms): (Vec<f64>, Vec<f64>) = win[k].iter().copied().unzip();
            gamma = gamma.min(growth_from_samples(&times, &norms)?.gamma);
            let half = times.len() / 2;
            tail = tail.min(growth_from_samples(&times[half..], &norms[half..])?.gamma);
        }
        let mut m = 1.0f64;
        for win in &per_direction {
            let r0 = win[k][0].1;
            for &(t, r) in &win[k] {
                m = m.max(r / r0 * (gamma * t).exp());
            }
        }
        windows.push(GrowthWindow { horizon, gamma, m });
        tail_gamma = tail;
    }
    Ok(LinearEvidence { windows, tail_gamma })
}

/// Sort the linear evidence into a stability class.
fn linear_class(evidence: &LinearEvidence, probes: &ProbeConfig) -> StabilityClass {
    let gammas: Vec<f64> = evidence.windows.iter().map(|w| w.gamma).collect();
    let last = *gammas.last().expect("at least one window");
    if gammas.iter().all(|&g| g >= probes.gamma_threshold) {
        StabilityClass::ExponentiallyStable
    } else if last <= -probes.gamma_threshold {
        StabilityClass::Unstable
    } else if gammas.iter().all(|&g| g > 0.0) && last < probes.gamma_threshold && evidence.tail_gamma > probes.tail_floor {
        StabilityClass::AsymptoticallyStableOnly
    } else {
        StabilityClass::Inconclusive
    }
}

/// Does some orbit started at distance `delta` leave the escape ball?
fn escapes<S: State + 'static>(pair: &FlowPair<S>, delta: f64, probes: &ProbeConfig, stream: u64) -> Result<bool> {
    let chunk = probes.escape_horizon / probes.escape_checkpoints.max(1) as f64;
    for j in 0..probes.samples {
        let mut rng = rng_for(probes.seed, stream * probes.samples as u64 + j as u64);
        let h = pair.unit_direction(&mut rng, delta)?.scaled(delta);
        let mut z = S::axpy(1.0, &h, pair.reference())?;
        for _ in 0..probes.escape_checkpoints.max(1) {
            z = match pair.nonlinear(&z, chunk) {
                Ok(z) => z,
                Err(e) if e.is_instability() => return Ok(true),
                Err(e) => return Err(e),
            };
            if z.sub(pair.reference())?.l2_norm() > probes.escape_radius {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Classify the stability of the pair's reference equilibrium.
///
/// * `ExponentiallyStable`: every linear fit window decays at least at
///   `gamma_threshold`, the Frechet ratios vanish, and the nonlinear flow
///   contracts by 1/2 at `t_bar` for some probe size.
/// * `Unstable`: the linear flow grows and, for every probe size, some
///   nonlinear orbit leaves the `escape_radius` ball.
/// * `AsymptoticallyStableOnly`: the linear flow decays in every window but
///   its fitted rate drops below `gamma_threshold` (heuristic for "no uniform
///   exponential rate"), and no nonlinear orbit failed to contract.
/// * `Inconclusive` otherwise; `counterexample` is set when the linear flow
///   decays but a nonlinear orbit did not contract.
pub fn classify<S: State + 'static>(pair: &FlowPair<S>, probes: &ProbeConfig) -> StabilityVerdict {
    match classify_inner(pair, probes) {
        Ok(v) => v,
        Err(e) => StabilityVerdict::inconclusive(format!("probe failed: {e}")),
    }
}

fn classify_inner<S: State + 'static>(pair: &FlowPair<S>, probes: &ProbeConfig) -> Result<StabilityVerdict> {
    if probes.deltas.is_empty() || probes.samples == 0 {
        return Err(Error::arg("probes", "need at least one delta and one sample"));
    }
    let directions = (0..probes.samples)
        .map(|i| {
            let mut rng = rng_for(probes.seed ^ 0x5eed_d1e5, i as u64);
            let mut sum = pair.reference().zero_like();
            for &delta in &probes.deltas {
                sum = S::axpy(1.0, &pair.unit_direction(&mut rng, delta)?, &sum)?;
            }
            let norm = sum.l2_norm();
            if norm == 0.0 {
                return Err(Error::ZeroDirection);
            }
            Ok(sum.scaled(1.0 / norm))
        })
        .collect::<Result<Vec<S>>>()?;

    let evidence = linear_evidence(pair, &directions, probes)?;
    let linear = linear_class(&evidence, probes);
    let last = evidence.windows.last().expect("at least one window").clone();
    let fits: Vec<String> = evidence
        .windows
        .iter()
        .map(|w| format!("[0,{}]: gamma={:.6e} M={:.4}", w.horizon, w.gamma, w.m))
        .collect();
    let mut verdict = StabilityVerdict::inconclusive(String::new());
    verdict.linear_class = linear;
    verdict.windows = evidence.windows.clone();
    verdict.tail_gamma = Some(evidence.tail_gamma);
    verdict.m_est = last.m;
    verdict.gamma_est = last.gamma;
    let mut notes = vec![
        format!("linear flow: {linear} over {} directions; fits {}", directions.len(), fits.join(", ")),
        format!("tail decay rate {:.6e}", evidence.tail_gamma),
    ];

    match linear {
        StabilityClass::ExponentiallyStable => {
            let frechet = frechet_ratio_scan(pair, &directions[0], &probes.frechet_scales, probes.frechet_time)?;
            let t_bar = contraction_time(last.m, last.gamma)?;
            let contraction = verify_half_contraction(pair, t_bar, &probes.deltas, probes.samples, probes.seed)?;
            notes.push(format!(
                "frechet scan at t={}: ratios {:?}, order {:?}",
                frechet.time, frechet.ratios, frechet.fitted_order
            ));
            notes.push(format!(
                "half contraction at t_bar={t_bar:.6}: largest passing delta {:?}",
                contraction.largest_passing_delta
            ));
            if frechet.ratios_vanish() && contraction.largest_passing_delta.is_some() {
                verdict.class = StabilityClass::ExponentiallyStable;
                verdict.alpha_est = std::f64::consts::LN_2 / t_bar;
            } else {
                notes.push("nonlinear probes did not confirm the linear decay".into());
            }
            verdict.frechet = Some(frechet);
            verdict.contraction = Some(contraction);
        }
        StabilityClass::Unstable => {
            let outcomes: Vec<Result<bool>> = probes
                .deltas
                .par_iter()
                .enumerate()
                .map(|(i, &delta)| escapes(pair, delta, probes, i as u64))
                .collect();
            let outcomes = outcomes.into_iter().collect::<Result<Vec<bool>>>()?;
            verdict.escapes = probes.deltas.iter().copied().zip(outcomes.iter().copied()).collect();
            notes.push(format!("escape from radius {:e}: {:?}", probes.escape_radius, verdict.escapes));
            if outcomes.iter().all(|&e| e) {
                verdict.class = StabilityClass::Unstable;
            }
        }
        StabilityClass::AsymptoticallyStableOnly => {
            let t_bar = contraction_time(last.m, last.gamma)?;
            let contraction = verify_half_contraction(pair, t_bar, &probes.deltas, probes.samples, probes.seed)?;
            notes.push(format!(
                "half contraction at t_bar={t_bar:.6}: largest passing delta {:?}",
                contraction.largest_passing_delta
            ));
            if contraction.any_failed() {
                verdict.counterexample = true;
                notes.push("counterexample: nonlinear orbits near the equilibrium did not contract although the linear flow decays".into());
            } else {
                verdict.class = StabilityClass::AsymptoticallyStableOnly;
            }
            verdict.contraction = Some(contraction);
        }
        StabilityClass::Inconclusive => {
            notes.push("linear flow neither decays uniformly nor grows".into());
        }
    }
    notes.push("verdict is sampled evidence (heuristic windows), not a proof".into());
    verdict.evidence = notes.join("; ");
    Ok(verdict)
}
