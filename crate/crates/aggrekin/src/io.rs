//! CSV serialization of trajectories and sweep results.
//!
//! All floats are written with 17 significant digits (`{:.16e}`), which round
//! trips `f64` exactly and keeps repeated runs byte-identical.

use crate::analysis::SweepResult;
use crate::integrator::Trajectory;

#[inline]
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a trajectory as CSV: header `t,<components...>`, one row per
/// accepted step, with located event states merged in at their times.
pub fn trajectory_csv(traj: &Trajectory, time_name: &str, names: &[&str]) -> String {
    assert_eq!(names.len(), traj.dim(), "one column name per state component");
    let mut out = String::new();
    out.push_str(time_name);
    for name in names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');

    let mut row = |t: f64, state: &[f64]| {
        let mut line = fmt(t);
        for v in state {
            line.push(',');
            line.push_str(&fmt(*v));
        }
        line.push('\n');
        out.push_str(&line);
    };

    let mut ev = traj.events.iter().peekable();
    for (t, state) in traj.times.iter().zip(&traj.states) {
        while let Some(hit) = ev.peek() {
            if hit.t < *t {
                row(hit.t, &hit.state);
                ev.next();
            } else {
                break;
            }
        }
        row(*t, state);
        // event exactly at a sample time: emit after the sample, once
        while let Some(hit) = ev.peek() {
            if hit.t == *t {
                row(hit.t, &hit.state);
                ev.next();
            } else {
                break;
            }
        }
    }
    for hit in ev {
        row(hit.t, &hit.state);
    }
    out
}

/// Grid CSV `k1,k2,alpha_bar`, row-major over the k1 axis.
pub fn sweep_grid_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("k1,k2,alpha_bar\n");
    for (i, k1) in sweep.k1.iter().enumerate() {
        for (j, k2) in sweep.k2.iter().enumerate() {
            out.push_str(&fmt(*k1));
            out.push(',');
            out.push_str(&fmt(*k2));
            out.push(',');
            out.push_str(&fmt(sweep.alpha_grid[i * sweep.k2.len() + j]));
            out.push('\n');
        }
    }
    out
}

/// Level-curve CSV `k1,k2`.
pub fn curve_csv(curve: &[[f64; 2]]) -> String {
    let mut out = String::from("k1,k2\n");
    for point in curve {
        out.push_str(&fmt(point[0]));
        out.push(',');
        out.push_str(&fmt(point[1]));
        out.push('\n');
    }
    out
}
