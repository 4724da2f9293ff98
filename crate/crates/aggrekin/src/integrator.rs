//! Adaptive explicit integration with dense output and event location.
//!
//! The method is the Dormand–Prince 5(4) embedded pair with proportional-
//! integral step-size control, the pair's standard quartic interpolant for
//! dense output, and sign-change event detection refined by bisection on the
//! interpolant. [`integrate_augmented`] appends an auxiliary clock column
//! `d(aux)/dt = rho(y)` to the state, which realizes the model's time
//! reparameterizations (the integration variable of a transformed system
//! tracks the original time, or vice versa).
//!
//! The systems handled here are non-stiff at the scales we integrate;
//! stiffness near the slow manifolds is removed by the model's own time
//! rescalings rather than by implicit stepping. Unbounded orbits are caught
//! by a growth guard: any component exceeding 1e30 aborts with
//! [`IntegrateError::NonFiniteState`].

use thiserror::Error;

/// Component magnitude beyond which integration aborts instead of silently
/// overflowing (polynomially growing orbits are unbounded).
pub const GROWTH_GUARD: f64 = 1e30;

/// Relative accuracy of located event times.
pub const EVENT_TIME_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step limit of {steps} steps exhausted at t = {t}")]
    StepLimit { t: f64, steps: usize },
    #[error("non-finite state or field value at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("clock rate must stay positive, got {value} at t = {t}")]
    ClockNotPositive { t: f64, value: f64 },
}

/// Tolerances and limits for one integration run.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Cap on attempted (accepted + rejected) steps.
    pub max_steps: usize,
    /// Store interpolation coefficients for every accepted step, enabling
    /// [`Trajectory::sample`]. Disable for long runs; [`Trajectory::at_time`]
    /// then falls back to the nearest stored sample.
    pub dense_output: bool,
    /// Keep every k-th accepted sample (the final sample is always kept).
    /// Bounds memory on step-limited runs without touching the stepping.
    pub store_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
            dense_output: true,
            store_every: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(IntegrateError::InvalidConfig("rtol and atol must be > 0".into()));
        }
        if self.max_steps == 0 {
            return Err(IntegrateError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(IntegrateError::InvalidConfig("max_step must be > 0".into()));
        }
        Ok(())
    }
}

type EventFn<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + 'a>;

/// Sign-change event function evaluated along the trajectory.
pub struct Event<'a> {
    f: EventFn<'a>,
    terminal: bool,
}

impl<'a> Event<'a> {
    /// Record crossings of `f = 0` and keep integrating.
    pub fn new(f: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Self { f: Box::new(f), terminal: false }
    }

    /// Stop the integration at the first crossing of `f = 0`.
    pub fn terminal(f: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        Self { f: Box::new(f), terminal: true }
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Status {
    ReachedTEnd,
    EventStop,
    StepLimit,
}

/// A located zero crossing of an event function.
#[derive(Debug, Clone)]
pub struct EventHit {
    pub t: f64,
    /// Index into the event slice passed to the integrator.
    pub event: usize,
    pub state: Vec<f64>,
}

#[derive(Debug)]
struct DenseSeg {
    t0: f64,
    h: f64,
    /// Five interpolation coefficient blocks of `dim` values each.
    cont: Vec<f64>,
}

/// Time-stamped solution samples at the accepted steps, plus event records
/// and (optionally) dense-output data.
#[derive(Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub events: Vec<EventHit>,
    pub status: Status,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    dense: Vec<DenseSeg>,
    dim: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial sample")
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial sample")
    }

    /// Time window covered by the stored samples.
    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.last_time())
    }

    /// Evaluate the dense interpolant at `t`. Returns `None` when `t` lies
    /// outside the covered span or dense output was disabled.
    pub fn sample(&self, t: f64) -> Option<Vec<f64>> {
        if self.dense.is_empty() {
            return None;
        }
        let (lo, hi) = self.span();
        if t < lo || t > hi {
            return None;
        }
        // Last segment whose start lies at or before t.
        let idx = match self.dense.partition_point(|seg| seg.t0 <= t) {
            0 => 0,
            k => k - 1,
        };
        let seg = &self.dense[idx];
        let theta = if seg.h == 0.0 { 0.0 } else { ((t - seg.t0) / seg.h).clamp(0.0, 1.0) };
        Some(eval_cont(&seg.cont, self.dim, theta))
    }

    /// State at `t`: the dense sample when available, otherwise the stored
    /// sample closest in time. Returns the actual time of the returned state.
    pub fn at_time(&self, t: f64) -> Option<(f64, Vec<f64>)> {
        let (lo, hi) = self.span();
        if t < lo || t > hi {
            return None;
        }
        if let Some(y) = self.sample(t) {
            return Some((t, y));
        }
        let idx = self.times.partition_point(|&tk| tk <= t);
        let right = idx.min(self.times.len() - 1);
        let left = right.saturating_sub(1);
        let pick = if (self.times[right] - t).abs() < (t - self.times[left]).abs() {
            right
        } else {
            left
        };
        Some((self.times[pick], self.states[pick].clone()))
    }
}

#[inline]
fn eval_cont(cont: &[f64], dim: usize, theta: f64) -> Vec<f64> {
    let om = 1.0 - theta;
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim {
        let c1 = cont[i];
        let c2 = cont[dim + i];
        let c3 = cont[2 * dim + i];
        let c4 = cont[3 * dim + i];
        let c5 = cont[4 * dim + i];
        out.push(c1 + theta * (c2 + om * (c3 + theta * (c4 + om * c5))));
    }
    out
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order solution weights.
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Embedded error weights (5th minus 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants (Hairer's defaults for DOPRI5).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrate `dy/dt = field(t, y)` over `t_span = (t0, t1)` with `t1 > t0`.
///
/// Local error per step is kept below `atol + rtol * |y|` per component.
/// Event functions are checked for sign changes across each accepted step
/// and crossings are refined on the dense interpolant to a relative time
/// accuracy of 1e-12; a terminal event truncates the run ([`Status::EventStop`]).
pub fn integrate<F>(
    field: F,
    y0: &[f64],
    t_span: (f64, f64),
    config: &IntegratorConfig,
    events: &[Event],
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError>,
{
    run(field, y0, t_span, config, events)
}

/// Integrate `field` while accumulating the auxiliary time
/// `aux(t) = integral of rho(y)` as an extra trailing component.
///
/// The returned trajectory has `y0.len() + 1` columns, the clock last and
/// starting at zero. Event functions see the augmented state and can
/// therefore stop the run when the auxiliary time reaches a target. The
/// clock must stay strictly positive; otherwise the run aborts with
/// [`IntegrateError::ClockNotPositive`].
pub fn integrate_augmented<F, C>(
    mut field: F,
    y0: &[f64],
    t_span: (f64, f64),
    config: &IntegratorConfig,
    clock: C,
    events: &[Event],
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError>,
    C: Fn(f64, &[f64]) -> f64,
{
    let dim = y0.len();
    let mut y0_aug = Vec::with_capacity(dim + 1);
    y0_aug.extend_from_slice(y0);
    y0_aug.push(0.0);
    let aug_field = move |t: f64, y: &[f64], dydt: &mut [f64]| -> Result<(), IntegrateError> {
        field(t, &y[..dim], &mut dydt[..dim])?;
        let rho = clock(t, &y[..dim]);
        if !(rho > 0.0) {
            return Err(IntegrateError::ClockNotPositive { t, value: rho });
        }
        dydt[dim] = rho;
        Ok(())
    };
    run(aug_field, &y0_aug, t_span, config, events)
}

fn run<F>(
    mut field: F,
    y0: &[f64],
    (t0, t1): (f64, f64),
    config: &IntegratorConfig,
    events: &[Event],
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError>,
{
    config.validate()?;
    if !(t1 > t0) {
        return Err(IntegrateError::InvalidConfig(format!(
            "t_span must satisfy t1 > t0, got ({t0}, {t1})"
        )));
    }
    let dim = y0.len();
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0.to_vec()],
        events: Vec::new(),
        status: Status::StepLimit,
        steps_accepted: 0,
        steps_rejected: 0,
        dense: Vec::new(),
        dim,
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut cont = vec![0.0; 5 * dim];

    field(t, &y, &mut k1)?;
    if !k1.iter().all(|v| v.is_finite()) {
        return Err(IntegrateError::NonFiniteState { t });
    }
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.f)(t, &y)).collect();

    let mut h = initial_step(&mut field, t, t1, &y, &k1, config)?;
    let mut fac_old: f64 = 1e-4;
    let mut steps = 0usize;

    loop {
        if steps >= config.max_steps {
            traj.status = Status::StepLimit;
            return Err(IntegrateError::StepLimit { t, steps });
        }
        steps += 1;
        h = h.min(config.max_step).min(t1 - t);
        // Stretch slightly onto t1 so rounding in t1 - t cannot leave an
        // unintegrable sliver behind the final step.
        let last = t + 1.01 * h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            // Step underflow means the error control cannot make progress.
            return Err(IntegrateError::NonFiniteState { t });
        }

        // Stages 2..6 and the 5th-order solution.
        for i in 0..dim {
            y_stage[i] = y[i] + h * A21 * k1[i];
        }
        field(t + C2 * h, &y_stage, &mut k2)?;
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        field(t + C3 * h, &y_stage, &mut k3)?;
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        field(t + C4 * h, &y_stage, &mut k4)?;
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        field(t + C5 * h, &y_stage, &mut k5)?;
        for i in 0..dim {
            y_stage[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        field(t + h, &y_stage, &mut k6)?;
        for i in 0..dim {
            y_new[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        field(t + h, &y_new, &mut k7)?; // FSAL stage

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..dim {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = config.atol + config.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
            finite &= y_new[i].is_finite() && k7[i].is_finite();
        }
        let err = (err_sq / dim as f64).sqrt();

        if !finite || !err.is_finite() {
            // Retry with a much smaller step; treat as a rejection.
            traj.steps_rejected += 1;
            h *= 0.25;
            if h <= f64::EPSILON * t.abs().max(1.0) {
                return Err(IntegrateError::NonFiniteState { t });
            }
            continue;
        }

        if err > 1.0 {
            traj.steps_rejected += 1;
            let fac = (err.powf(EXPO1) / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
            continue;
        }

        // Accepted.
        traj.steps_accepted += 1;
        let t_new = if last { t1 } else { t + h };
        if y_new.iter().any(|v| v.abs() > GROWTH_GUARD) {
            return Err(IntegrateError::NonFiniteState { t: t_new });
        }

        let need_cont = config.dense_output || !events.is_empty();
        if need_cont {
            build_cont(&mut cont, dim, h, &y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7);
            if config.dense_output {
                traj.dense.push(DenseSeg { t0: t, h, cont: cont.clone() });
            }
        }

        // Event scan over this step.
        let mut terminal_hit: Option<(f64, usize, Vec<f64>)> = None;
        if !events.is_empty() {
            let mut crossings: Vec<(f64, usize)> = Vec::new();
            for (j, ev) in events.iter().enumerate() {
                let g_new = (ev.f)(t_new, &y_new);
                if g_prev[j] != 0.0 && g_prev[j].signum() != g_new.signum() {
                    let theta = locate_event(&ev.f, &cont, dim, t, h, g_prev[j]);
                    crossings.push((theta, j));
                }
                g_prev[j] = g_new;
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (theta, j) in crossings {
                let t_ev = t + theta * h;
                let y_ev = eval_cont(&cont, dim, theta);
                traj.events.push(EventHit { t: t_ev, event: j, state: y_ev.clone() });
                if events[j].terminal {
                    terminal_hit = Some((t_ev, j, y_ev));
                    break;
                }
            }
        }

        if let Some((t_ev, _, y_ev)) = terminal_hit {
            traj.times.push(t_ev);
            traj.states.push(y_ev);
            traj.status = Status::EventStop;
            // The final dense segment keeps its full step scale; sampling is
            // already clamped to the event time by `span`.
            return Ok(traj);
        }

        if last || traj.steps_accepted.is_multiple_of(config.store_every.max(1)) {
            traj.times.push(t_new);
            traj.states.push(y_new.clone());
        }
        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut k7);

        if last {
            traj.status = Status::ReachedTEnd;
            return Ok(traj);
        }

        // PI step-size control.
        let fac11 = err.powf(EXPO1);
        let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        h /= fac;
        fac_old = err.max(1e-4);
    }
}

#[allow(clippy::too_many_arguments)]
fn build_cont(
    cont: &mut [f64],
    dim: usize,
    h: f64,
    y: &[f64],
    y_new: &[f64],
    k1: &[f64],
    k3: &[f64],
    k4: &[f64],
    k5: &[f64],
    k6: &[f64],
    k7: &[f64],
) {
    for i in 0..dim {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        cont[i] = y[i];
        cont[dim + i] = ydiff;
        cont[2 * dim + i] = bspl;
        cont[3 * dim + i] = ydiff - h * k7[i] - bspl;
        cont[4 * dim + i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
}

/// Bisect the event function on the dense interpolant of the current step.
fn locate_event(
    g: &dyn Fn(f64, &[f64]) -> f64,
    cont: &[f64],
    dim: usize,
    t: f64,
    h: f64,
    g_left: f64,
) -> f64 {
    let mut a = 0.0;
    let mut b = 1.0;
    let mut ga = g_left;
    let tol = EVENT_TIME_TOL * (t.abs() + h.abs()).max(1.0) / h.abs();
    for _ in 0..128 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let y_mid = eval_cont(cont, dim, mid);
        let gm = g(t + mid * h, &y_mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Hairer's starting-step heuristic: balance the size of the state against
/// the field, probe one Euler step, and take the more conservative estimate.
fn initial_step<F>(
    field: &mut F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    f0: &[f64],
    config: &IntegratorConfig,
) -> Result<f64, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError>,
{
    let dim = y0.len();
    let span = t1 - t0;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..dim {
        let sc = config.atol + config.rtol * y0[i].abs();
        d0 += (y0[i] / sc) * (y0[i] / sc);
        d1 += (f0[i] / sc) * (f0[i] / sc);
    }
    d0 = (d0 / dim as f64).sqrt();
    d1 = (d1 / dim as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(config.max_step);

    let mut y1 = vec![0.0; dim];
    let mut f1 = vec![0.0; dim];
    for i in 0..dim {
        y1[i] = y0[i] + h0 * f0[i];
    }
    field(t0 + h0, &y1, &mut f1)?;
    let mut d2 = 0.0;
    for i in 0..dim {
        let sc = config.atol + config.rtol * y0[i].abs();
        let df = (f1[i] - f0[i]) / sc;
        d2 += df * df;
    }
    d2 = (d2 / dim as f64).sqrt() / h0;

    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span).min(config.max_step))
}
