//! Model parameters, admissible states, the vector field, the nontrivial
//! equilibrium, and regime classification.
//!
//! The state `(p, q, r)` counts one-hand bound cross-linkers, both-hand
//! bound cross-links, and oligomers of a connected aggregate. Each oligomer
//! carries `n >= 3` binding sites, so admissible states satisfy
//! `n r - p - 2 q >= 0` (free sites) and `q >= r` (connectivity). The six
//! binding/unbinding reactions give the rates
//!
//! ```text
//! dp/dt = (k1 - k3 p)(n r - p - 2 q) + km q (1 - (n-1) p / ((n-2) r)) - (k2 + km1) p
//! dq/dt = k2 p + k3 p (n r - p - 2 q) - km q
//! dr/dt = k2 p - km q a(q, r),    a(q, r) = (n r - 2 q) / ((n-2) r)
//! ```
//!
//! with `k1`, `k2` absorbing the (constant) free cross-linker and oligomer
//! concentrations. The equilibrium split ratio `alpha_bar` of `a(q, r)` is
//! available in closed form and selects the long-time regime: dissolution
//! for `alpha_bar > 1`, a stable finite aggregate for `0 < alpha_bar < 1`,
//! and unbounded polynomial growth for `alpha_bar < 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the band around `alpha_bar = 0` and `alpha_bar = 1` that
/// classifies as a boundary case instead of one of the three open regimes.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Relative admissibility tolerance at oligomer count `r`; integrator drift
/// scales with the state magnitude, so the band does too.
#[inline]
pub fn constraint_tol(n: f64, r: f64) -> f64 {
    1e-9 * (n * r).max(1.0)
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("rate constant {name} must be > 0, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("oligomer size n must be >= 3, got {n}")]
    OligomerTooSmall { n: i64 },
    #[error("alpha(q, r) requires r > 0, got r = {r}")]
    ZeroDenominator { r: f64 },
    #[error("inadmissible state (p={p}, q={q}, r={r}): {reason}")]
    InadmissibleState { p: f64, q: f64, r: f64, reason: &'static str },
    #[error("no positive equilibrium: alpha_bar = {alpha_bar} is outside (0, 1)")]
    NoPositiveEquilibrium { alpha_bar: f64 },
}

/// Unvalidated parameter record, mirroring the JSON parameter-file schema
/// `{"n", "kappa1", "kappa2", "kappa3", "kappa_m1", "kappa_m"}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RawParams {
    pub n: i64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Reverse of reaction 1 (cross-linker detachment), `kappa_{-1}`.
    pub kappa_m1: f64,
    /// Cross-link breakage rate, `kappa_{-}`.
    pub kappa_m: f64,
}

/// Validated model parameters: oligomer size `n >= 3` and strictly positive
/// rate constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    n: u32,
    kappa1: f64,
    kappa2: f64,
    kappa3: f64,
    kappa_m1: f64,
    kappa_m: f64,
}

impl ModelParams {
    pub fn new(
        n: i64,
        kappa1: f64,
        kappa2: f64,
        kappa3: f64,
        kappa_m1: f64,
        kappa_m: f64,
    ) -> Result<Self, ModelError> {
        validate_params(RawParams { n, kappa1, kappa2, kappa3, kappa_m1, kappa_m })
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    #[inline]
    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    #[inline]
    pub fn kappa3(&self) -> f64 {
        self.kappa3
    }

    #[inline]
    pub fn kappa_m1(&self) -> f64 {
        self.kappa_m1
    }

    #[inline]
    pub fn kappa_m(&self) -> f64 {
        self.kappa_m
    }

    /// `(n, k1, k2, k3, km1, km)` with `n` as a float, for rate formulas.
    #[inline]
    pub fn unpack(&self) -> (f64, f64, f64, f64, f64, f64) {
        (self.n as f64, self.kappa1, self.kappa2, self.kappa3, self.kappa_m1, self.kappa_m)
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            n: self.n as i64,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            kappa3: self.kappa3,
            kappa_m1: self.kappa_m1,
            kappa_m: self.kappa_m,
        }
    }

    /// Copy with a different cross-link breakage rate `kappa_m`.
    pub fn with_kappa_m(&self, kappa_m: f64) -> Result<Self, ModelError> {
        validate_params(RawParams { kappa_m, ..self.raw() })
    }
}

/// Check `n >= 3` and strict positivity of every rate constant.
pub fn validate_params(raw: RawParams) -> Result<ModelParams, ModelError> {
    if raw.n < 3 {
        return Err(ModelError::OligomerTooSmall { n: raw.n });
    }
    let rates = [
        ("kappa1", raw.kappa1),
        ("kappa2", raw.kappa2),
        ("kappa3", raw.kappa3),
        ("kappa_m1", raw.kappa_m1),
        ("kappa_m", raw.kappa_m),
    ];
    for (name, value) in rates {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ModelError::NonPositiveRate { name, value });
        }
    }
    Ok(ModelParams {
        n: raw.n as u32,
        kappa1: raw.kappa1,
        kappa2: raw.kappa2,
        kappa3: raw.kappa3,
        kappa_m1: raw.kappa_m1,
        kappa_m: raw.kappa_m,
    })
}

/// Aggregate state: one-hand bound cross-linkers `p`, both-hand bound
/// cross-links `q`, oligomers `r`. Treated as continuous counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl State {
    pub fn new(p: f64, q: f64, r: f64) -> Self {
        Self { p, q, r }
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 3] {
        [self.p, self.q, self.r]
    }

    #[inline]
    pub fn from_slice(y: &[f64]) -> Self {
        Self { p: y[0], q: y[1], r: y[2] }
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        (self.p * self.p + self.q * self.q + self.r * self.r).sqrt()
    }

    /// Free binding sites `n r - p - 2 q`.
    #[inline]
    pub fn free_sites(&self, params: &ModelParams) -> f64 {
        params.n as f64 * self.r - self.p - 2.0 * self.q
    }

    /// Check nonnegativity, free sites, and connectivity within the relative
    /// tolerance of [`constraint_tol`].
    pub fn check_admissible(&self, params: &ModelParams) -> Result<(), ModelError> {
        let tol = constraint_tol(params.n as f64, self.r);
        let fail = |reason| Err(ModelError::InadmissibleState {
            p: self.p,
            q: self.q,
            r: self.r,
            reason,
        });
        if !(self.p.is_finite() && self.q.is_finite() && self.r.is_finite()) {
            return fail("non-finite component");
        }
        if self.p < -tol || self.q < -tol || self.r < -tol {
            return fail("negative component");
        }
        if self.free_sites(params) < -tol {
            return fail("free binding sites n r - p - 2 q < 0");
        }
        if self.q - self.r < -tol {
            return fail("connectivity q >= r violated");
        }
        Ok(())
    }
}

/// Split ratio `a(q, r) = (n r - 2 q) / ((n - 2) r)` governing whether a
/// breaking cross-link removes an oligomer. Lies in `[0, 1]` on admissible
/// states.
pub fn alpha(q: f64, r: f64, params: &ModelParams) -> Result<f64, ModelError> {
    if !(r > 0.0) {
        return Err(ModelError::ZeroDenominator { r });
    }
    let n = params.n as f64;
    Ok((n * r - 2.0 * q) / ((n - 2.0) * r))
}

/// Right-hand side of the model, without admissibility gating. Callers are
/// expected to stay near the admissible set; `r = 0` yields non-finite rates.
#[inline]
pub(crate) fn rhs_raw(y: &[f64], params: &ModelParams) -> [f64; 3] {
    let (n, k1, k2, k3, km1, km) = params.unpack();
    let (p, q, r) = (y[0], y[1], y[2]);
    let free = n * r - p - 2.0 * q;
    let a = (n * r - 2.0 * q) / ((n - 2.0) * r);
    let dp = (k1 - k3 * p) * free + km * q * (1.0 - (n - 1.0) * p / ((n - 2.0) * r))
        - (k2 + km1) * p;
    let dq = k2 * p + k3 * p * free - km * q;
    let dr = k2 * p - km * q * a;
    [dp, dq, dr]
}

/// Evaluate the model rates `(dp, dq, dr)` at an admissible state.
///
/// The right-hand side extends continuously to the origin, which is the only
/// admissible state with `r = 0`; there it returns `(0, 0, 0)`. Any other
/// `r = 0` input is rejected.
pub fn vector_field(state: &State, params: &ModelParams) -> Result<[f64; 3], ModelError> {
    state.check_admissible(params)?;
    if state.r <= 0.0 {
        return if state.p == 0.0 && state.q == 0.0 && state.r == 0.0 {
            Ok([0.0; 3])
        } else {
            Err(ModelError::InadmissibleState {
                p: state.p,
                q: state.q,
                r: state.r,
                reason: "r = 0 is only admissible at the origin",
            })
        };
    }
    Ok(rhs_raw(&state.as_array(), params))
}

/// Long-time regime selected by the position of `alpha_bar` relative to 0
/// and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    /// `alpha_bar > 1`: the zero state is locally asymptotically stable.
    Dissolution,
    /// `0 < alpha_bar < 1`: a positive equilibrium aggregate exists.
    StableAggregate,
    /// `alpha_bar < 0`: aggregates grow polynomially (`q ~ t^2`).
    PolyGrowth,
    /// `alpha_bar` within [`BOUNDARY_TOL`] of 0.
    BoundaryZero,
    /// `alpha_bar` within [`BOUNDARY_TOL`] of 1.
    BoundaryOne,
}

/// Regime classification together with the `alpha_bar` value it derives from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub alpha_bar: f64,
}

/// Equilibrium value of the split ratio,
/// `alpha_bar = n/(n-2) + (km1 + k1 - sqrt((k1+km1)^2 + 4 k1 k2 (n-1))) / (km (n-1))`.
///
/// Independent of `kappa3`, strictly decreasing in `kappa1` and `kappa2`.
pub fn alpha_bar(params: &ModelParams) -> f64 {
    let (n, k1, k2, _, km1, km) = params.unpack();
    let disc = (k1 + km1) * (k1 + km1) + 4.0 * k1 * k2 * (n - 1.0);
    n / (n - 2.0) + (km1 + k1 - disc.sqrt()) / (km * (n - 1.0))
}

/// Classify the parameter regime from `alpha_bar`. Values within
/// [`BOUNDARY_TOL`] of 0 or 1 are tagged as boundary cases rather than
/// silently binned into a neighbouring regime.
pub fn classify(params: &ModelParams) -> Regime {
    let ab = alpha_bar(params);
    let tag = if (ab - 1.0).abs() <= BOUNDARY_TOL {
        RegimeTag::BoundaryOne
    } else if ab.abs() <= BOUNDARY_TOL {
        RegimeTag::BoundaryZero
    } else if ab > 1.0 {
        RegimeTag::Dissolution
    } else if ab > 0.0 {
        RegimeTag::StableAggregate
    } else {
        RegimeTag::PolyGrowth
    };
    Regime { tag, alpha_bar: ab }
}

/// The unique nontrivial steady state, relevant for `0 < alpha_bar < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub p_bar: f64,
    pub q_bar: f64,
    pub r_bar: f64,
    /// Scale factor `A` entering the closed form; reported so formula and
    /// residual cross-checks can be run independently.
    #[serde(rename = "A")]
    pub a: f64,
}

impl Equilibrium {
    #[inline]
    pub fn state(&self) -> State {
        State { p: self.p_bar, q: self.q_bar, r: self.r_bar }
    }
}

/// Closed-form nontrivial equilibrium:
///
/// ```text
/// p_bar = (km A / k2) (1 - ab)/ab
/// q_bar = A (1 - ab)/ab^2
/// r_bar = 2 A / (n - (n-2) ab) * (1 - ab)/ab^2
/// A     = 2 k1 k2^2 (n-2) / (k3 km (km (n-1)(n - (n-2) ab) + 2 km1 (n-2)))
/// ```
///
/// Errors with [`ModelError::NoPositiveEquilibrium`] unless `0 < alpha_bar < 1`.
pub fn equilibrium(params: &ModelParams) -> Result<Equilibrium, ModelError> {
    let (n, k1, k2, k3, km1, km) = params.unpack();
    let ab = alpha_bar(params);
    if !(ab > 0.0 && ab < 1.0) {
        return Err(ModelError::NoPositiveEquilibrium { alpha_bar: ab });
    }
    let a = 2.0 * k1 * k2 * k2 * (n - 2.0)
        / (k3 * km * (km * (n - 1.0) * (n - (n - 2.0) * ab) + 2.0 * km1 * (n - 2.0)));
    let p_bar = km * a / k2 * (1.0 - ab) / ab;
    let q_bar = a * (1.0 - ab) / (ab * ab);
    let r_bar = 2.0 * a / (n - (n - 2.0) * ab) * (1.0 - ab) / (ab * ab);
    Ok(Equilibrium { p_bar, q_bar, r_bar, a })
}
