//! The three integrable systems and their time relations.
//!
//! | kind     | state vector      | integration time | clock column |
//! |----------|-------------------|------------------|--------------|
//! | original | `[p, q, r]`       | `t`              | none         |
//! | blowup   | `[p1, q1, r1, t]` | `T`              | `dt/dT = r1` |
//! | compact  | `[u, v, w, t]`    | `tau`            | `dt/dtau = w`|
//!
//! Transformed runs integrate in their own rescaled time and track the
//! original time `t` as a trailing clock column; a terminal event on that
//! column stops the run exactly when `t` reaches the requested horizon, so
//! `t_end` means the same thing for every system.

use crate::integrator::{
    integrate, integrate_augmented, Event, IntegrateError, IntegratorConfig, Status, Trajectory,
};
use crate::model::{self, ModelParams, State};
use crate::transforms::{self, from_blowup, from_compact, to_blowup, to_compact};
use crate::AnalysisError;

/// Which coordinate chart to integrate in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SystemKind {
    Original,
    Blowup,
    Compact,
}

impl SystemKind {
    /// Name of the integration time variable.
    pub fn time_name(&self) -> &'static str {
        match self {
            SystemKind::Original => "t",
            SystemKind::Blowup => "T",
            SystemKind::Compact => "tau",
        }
    }

    /// Component names in state-vector order (clock column included).
    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            SystemKind::Original => &["p", "q", "r"],
            SystemKind::Blowup => &["p1", "q1", "r1", "t"],
            SystemKind::Compact => &["u", "v", "w", "t"],
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(SystemKind::Original),
            "blowup" => Ok(SystemKind::Blowup),
            "compact" => Ok(SystemKind::Compact),
            other => Err(format!("unknown system '{other}', expected original|blowup|compact")),
        }
    }
}

/// Generous bound on the transformed-time horizon; runs stop at the `t`
/// target event long before reaching it.
const TRANSFORMED_SPAN: f64 = 1e12;

/// Integrate the chosen system from an original-coordinates initial state
/// until the original time reaches `t_end`.
///
/// Transformed systems check their chart preconditions (`q > 0` for the
/// blow-up, `p + q > 0` for the compactification) before mapping the state.
pub fn simulate(
    kind: SystemKind,
    params: &ModelParams,
    init: State,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory, AnalysisError> {
    init.check_admissible(params)?;
    match kind {
        SystemKind::Original => {
            let traj = integrate(
                original_field(params),
                &init.as_array(),
                (0.0, t_end),
                config,
                &[],
            )?;
            Ok(traj)
        }
        SystemKind::Blowup => {
            let bs = to_blowup(&init)?;
            let stop = [Event::terminal(move |_tt: f64, y: &[f64]| y[3] - t_end)];
            let traj = integrate_augmented(
                blowup_t_field(params),
                &[bs.p1, bs.q1, bs.r1],
                (0.0, TRANSFORMED_SPAN),
                config,
                |_tt, y: &[f64]| y[2], // dt/dT = r1
                &stop,
            )?;
            expect_event_stop(traj)
        }
        SystemKind::Compact => {
            let cs = to_compact(&init, params)?;
            let stop = [Event::terminal(move |_tt: f64, y: &[f64]| y[3] - t_end)];
            let traj = integrate_augmented(
                compact_tau_field(params),
                &[cs.u, cs.v, cs.w],
                (0.0, TRANSFORMED_SPAN),
                config,
                |_tt, y: &[f64]| y[2], // dt/dtau = w
                &stop,
            )?;
            expect_event_stop(traj)
        }
    }
}

fn expect_event_stop(traj: Trajectory) -> Result<Trajectory, AnalysisError> {
    if traj.status == Status::EventStop {
        Ok(traj)
    } else {
        Err(AnalysisError::Inconclusive(
            "transformed run ended before the original-time target".into(),
        ))
    }
}

/// Map the final sample of a simulated trajectory back to original
/// coordinates.
pub fn terminal_state(
    kind: SystemKind,
    params: &ModelParams,
    traj: &Trajectory,
) -> Result<State, AnalysisError> {
    let y = traj.last_state();
    match kind {
        SystemKind::Original => Ok(State::from_slice(y)),
        SystemKind::Blowup => Ok(from_blowup(&transforms::BlowupState {
            p1: y[0],
            q1: y[1],
            r1: y[2],
        })),
        SystemKind::Compact => {
            let cs = transforms::CompactState { u: y[0], v: y[1], w: y[2] };
            Ok(from_compact(&cs, params)?)
        }
    }
}

/// Field closure for the original system, layout `[p, q, r]`.
pub fn original_field(
    params: &ModelParams,
) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError> {
    let params = *params;
    move |_t, y, dydt| {
        let f = model::rhs_raw(y, &params);
        dydt.copy_from_slice(&f);
        Ok(())
    }
}

/// Field closure for the blown-up system in T-time, layout `[p1, q1, r1]`.
pub fn blowup_t_field(
    params: &ModelParams,
) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError> {
    let params = *params;
    move |_t, y, dydt| {
        let f = transforms::blowup_rhs(y, &params);
        dydt.copy_from_slice(&f);
        Ok(())
    }
}

/// Field closure for the compactified system in tau-time, layout `[u, v, w]`.
pub fn compact_tau_field(
    params: &ModelParams,
) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<(), IntegrateError> {
    let params = *params;
    move |_t, y, dydt| {
        let f = transforms::compact_rhs(y, &params);
        dydt.copy_from_slice(&f);
        Ok(())
    }
}
