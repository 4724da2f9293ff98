//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime (visible under `cargo test --test acceptance -- --nocapture`).
//!
//! Expected values are frozen from independent closed-form evaluation: the
//! regime thresholds and equilibrium from the steady-state formulas, and the
//! growth constants from the affine reduction of the v-layer problem at the
//! growth-figure rates (U = -17 v / 28, v*^2 = 156.8/765), which pins
//! v*, u* = U(v*), and A* = A(u*, v*, 0) without touching the library's
//! root-finding path.

use std::time::Instant;

use aggrekin::analysis::{
    bifurcation_sweep, fit_growth, run_regime_experiment, transform_agreement_batch,
    verify_theorem2, ExperimentOptions, SweepConfig, SweepFixed, Verdict,
};
use aggrekin::integrator::IntegratorConfig;
use aggrekin::model::{
    alpha, alpha_bar, classify, equilibrium, ModelParams, RegimeTag, State,
};
use aggrekin::rng::{random_admissible, SplitMix64};
use aggrekin::systems::{self, SystemKind};
use aggrekin::transforms::{
    blowup_field, compact_field, find_slow_constants, from_blowup, from_compact, layer_v_field,
    manifold_field, to_blowup, to_compact, v_star, BlowupState, CompactState,
};

fn fig_params(kappa_m: f64) -> ModelParams {
    ModelParams::new(5, 1.0, 1.0, 1.0, 1.0, kappa_m).unwrap()
}

fn fig_init() -> State {
    State::new(2.0, 4.0, 3.0)
}

/// Growth constants at the growth-figure rates, from the affine reduction.
struct GrowthOracle {
    v_star: f64,
    u_star: f64,
    a_star: f64,
}

fn growth_oracle() -> GrowthOracle {
    let v_star = -(156.8f64 / 765.0).sqrt();
    let u_star = -17.0 * v_star / 28.0;
    // A(u, v, 0) = ((u - v) - u - (2/3) u * 0.2 * 5) / 2 at unit rates except
    // kappa_m = 0.2: kappa_m n (n-1) / ((n-2) * 2) = 0.2 * 20 / 6 = 2/3.
    let a_star = 0.5 * (-v_star - 2.0 / 3.0 * u_star);
    GrowthOracle { v_star, u_star, a_star }
}

fn lean_config() -> IntegratorConfig {
    IntegratorConfig { dense_output: false, store_every: 20, ..Default::default() }
}

fn report(criterion: &str, elapsed_ms: f64, limit_ms: f64) {
    println!("ACCEPTANCE {criterion}: PASS in {elapsed_ms:.3} ms (limit {limit_ms:.0} ms)");
    assert!(
        elapsed_ms < limit_ms,
        "{criterion} exceeded its runtime budget: {elapsed_ms:.1} ms >= {limit_ms:.0} ms"
    );
}

#[test]
// the stable-regime alpha_bar (0.6366100...) happens to sit near 2/pi; it is
// not that constant
#[allow(clippy::approx_constant)]
fn criterion_1_regime_triptych() {
    let t0 = Instant::now();
    let cases = [
        (0.6, RegimeTag::StableAggregate, 0.636610),
        (0.93, RegimeTag::Dissolution, 1.002114),
        (0.2, RegimeTag::PolyGrowth, -1.423503),
    ];
    for (km, tag, ab) in cases {
        let regime = classify(&fig_params(km));
        assert_eq!(regime.tag, tag, "kappa_m = {km}");
        assert!(
            (regime.alpha_bar - ab).abs() < 1e-6,
            "alpha_bar {} vs {ab} at kappa_m = {km}",
            regime.alpha_bar
        );
    }
    report("1 regime-triptych", t0.elapsed().as_secs_f64() * 1e3, 1.0);
}

#[test]
fn criterion_2_stable_convergence() {
    let t0 = Instant::now();
    let params = fig_params(0.6);
    let eq = equilibrium(&params).unwrap();
    let traj = systems::simulate(
        SystemKind::Original,
        &params,
        fig_init(),
        200.0,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let y = traj.last_state();
    let dev = ((y[0] - eq.p_bar).powi(2) + (y[1] - eq.q_bar).powi(2) + (y[2] - eq.r_bar).powi(2))
        .sqrt();
    let rel = dev / eq.state().norm();
    assert!(rel <= 1e-6, "relative distance to equilibrium at t=200: {rel:.3e}");
    // the event-driven experiment localizes the crossing before the horizon
    let rep =
        run_regime_experiment(&params, fig_init(), 200.0, &ExperimentOptions::default()).unwrap();
    match rep.verdict {
        Verdict::ConvergedToEquilibrium { t, .. } => assert!(t <= 200.0),
        other => panic!("expected equilibrium convergence, got {other:?}"),
    }
    assert_eq!(rep.regime, RegimeTag::StableAggregate);
    report("2 stable-convergence", t0.elapsed().as_secs_f64() * 1e3, 1000.0);
}

#[test]
fn criterion_3_dissolution() {
    let t0 = Instant::now();
    let params = fig_params(0.93);
    let rep =
        run_regime_experiment(&params, fig_init(), 1e5, &ExperimentOptions::default()).unwrap();
    assert_eq!(rep.regime, RegimeTag::Dissolution);
    match rep.verdict {
        Verdict::ConvergedToZero { t, norm } => {
            assert!(t <= 1e5, "dissolved at t = {t}");
            assert!(norm <= 1e-3 * 1.0001, "norm at stop: {norm:.3e}");
        }
        other => panic!("expected dissolution, got {other:?}"),
    }
    assert!(rep.norms_eventually_decreasing, "state norm must decrease eventually");
    report("3 dissolution", t0.elapsed().as_secs_f64() * 1e3, 5000.0);
}

#[test]
fn criterion_4_polynomial_growth() {
    let t0 = Instant::now();
    let params = fig_params(0.2);
    let oracle = growth_oracle();

    // library constants must agree with the independent closed forms
    let sc = find_slow_constants(&params, 0.01).unwrap();
    assert!((sc.v_star - oracle.v_star).abs() < 1e-9);
    assert!((sc.u_star - oracle.u_star).abs() < 1e-9);
    assert!((sc.a_star - oracle.a_star).abs() < 1e-9);

    let traj = aggrekin::integrate(
        systems::original_field(&params),
        &fig_init().as_array(),
        (0.0, 1e4),
        &lean_config(),
        &[],
    )
    .unwrap();
    let fit = fit_growth(&traj, (1e3, 1e4)).unwrap();
    assert!((fit.exponent_p - 1.0).abs() < 0.05, "p exponent {}", fit.exponent_p);
    assert!((fit.exponent_q - 2.0).abs() < 0.05, "q exponent {}", fit.exponent_q);
    assert!((fit.exponent_r - 2.0).abs() < 0.05, "r exponent {}", fit.exponent_r);

    let coeff_q_target = oracle.a_star * oracle.a_star;
    let coeff_p_target = oracle.u_star * oracle.a_star;
    assert!(
        (fit.coeff_q - coeff_q_target).abs() / coeff_q_target < 0.05,
        "coeff_q {} vs (A*)^2 = {coeff_q_target}",
        fit.coeff_q
    );
    assert!(
        (fit.coeff_p - coeff_p_target).abs() / coeff_p_target < 0.05,
        "coeff_p {} vs u* A* = {coeff_p_target}",
        fit.coeff_p
    );

    let y = traj.last_state();
    let nr_over_2q = 5.0 * y[2] / (2.0 * y[1]);
    assert!((nr_over_2q - 1.0).abs() < 0.01, "n r / (2 q) at t = 1e4: {nr_over_2q}");
    report("4 polynomial-growth", t0.elapsed().as_secs_f64() * 1e3, 10_000.0);
}

#[test]
fn criterion_5_transform_equivalence() {
    let t0 = Instant::now();
    let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-13);
    let regimes = [(0.6, 50.0), (0.93, 20.0), (0.2, 50.0)];
    let mut rng = SplitMix64::new(0xacce97);
    for (km, t_end) in regimes {
        let params = fig_params(km);
        let inits: Vec<State> =
            (0..20).map(|_| random_admissible(&params, &mut rng, 4.0)).collect();
        for (init, result) in
            inits.iter().zip(transform_agreement_batch(&params, &inits, t_end, &cfg))
        {
            let rep = result.unwrap();
            assert!(
                rep.max_rel_dev_blowup < 1e-6,
                "blow-up deviation {} from {init:?} at kappa_m = {km}",
                rep.max_rel_dev_blowup
            );
            assert!(
                rep.max_rel_dev_compact < 1e-6,
                "compactified deviation {} from {init:?} at kappa_m = {km}",
                rep.max_rel_dev_compact
            );
        }
    }
    report("5 transform-equivalence", t0.elapsed().as_secs_f64() * 1e3, 30_000.0);
}

#[test]
fn criterion_6_theorem2_error_scaling() {
    let t0 = Instant::now();
    let params = fig_params(0.2);
    let rep = verify_theorem2(&params, 1.0, 0.0, &[1e-2, 5e-3, 2.5e-3], 10.0).unwrap();
    for (name, ratios, lo, hi) in [
        ("u", &rep.ratios_u, 1.5, 3.0),
        ("v", &rep.ratios_v, 1.5, 3.0),
        ("w", &rep.ratios_w, 3.0, 5.0),
    ] {
        for r in ratios {
            assert!(
                (lo..=hi).contains(r),
                "{name} error ratio {r} outside [{lo}, {hi}] (sup errors u={:?} v={:?} w={:?})",
                rep.sup_err_u,
                rep.sup_err_v,
                rep.sup_err_w
            );
        }
    }
    report("6 theorem2-error-scaling", t0.elapsed().as_secs_f64() * 1e3, 30_000.0);
}

#[test]
fn criterion_7_slow_constant_consistency() {
    let t0 = Instant::now();
    let params = fig_params(0.2);
    let vs = v_star(&params).unwrap();
    let residual = layer_v_field(vs, 1.0, &params);
    assert!(residual.abs() < 1e-12, "v-layer residual at v*: {residual:.3e}");

    // explicit v* = B (k1 - km1 - (n/2) k2 + n km / (2(n-2))) under the two
    // readings of B's last term
    let bracket = 1.0 - 1.0 - 2.5 + 5.0 * 0.2 / 6.0;
    let b_of = |last: f64| {
        let inner = 125.0 * 0.04 / 12.0 + 4.0 + 10.0 + 1.0 + 25.0 * 0.2 / 3.0 + last;
        2.0 * 0.2f64.sqrt() / inner.sqrt()
    };
    let product = b_of(125.0 * 0.2 / 6.0) * bracket;
    let quotient = b_of(125.0 / (6.0 * 0.2)) * bracket;
    let matches_product = (product - vs).abs() <= 1e-9 * vs.abs().max(1.0);
    let matches_quotient = (quotient - vs).abs() <= 1e-9 * vs.abs().max(1.0);
    println!(
        "  numeric v* = {vs:.12}; explicit: product reading {product:.12} (match: {matches_product}), quotient reading {quotient:.12} (match: {matches_quotient})"
    );
    assert!(matches_product, "product reading of B must reproduce the numeric v*");
    assert!(!matches_quotient, "as-printed quotient reading should not match");

    let sc = find_slow_constants(&params, 0.01).unwrap();
    assert!(sc.b_consistent, "library must surface the matching reading");
    assert!((sc.b_formula - b_of(125.0 * 0.2 / 6.0)).abs() < 1e-12);
    report("7 slow-constant-consistency", t0.elapsed().as_secs_f64() * 1e3, 1000.0);
}

#[test]
fn criterion_8_bifurcation_diagram() {
    let t0 = Instant::now();
    let sweep = bifurcation_sweep(&SweepConfig {
        k1_min: 0.0,
        k1_max: 5.0,
        k2_min: 0.0,
        k2_max: 5.0,
        resolution: 200,
        fixed: SweepFixed { n: 5, kappa3: 1.0, kappa_m1: 1.0, kappa_m: 1.0 },
    })
    .unwrap();
    assert_eq!(sweep.alpha_grid.len(), 200 * 200);
    assert!(!sweep.curve_alpha1.is_empty() && !sweep.curve_alpha0.is_empty());

    // dissolution boundary sits below the growth boundary in kappa2
    for pt0 in &sweep.curve_alpha0 {
        if let Some(pt1) = sweep.curve_alpha1.iter().find(|p| p[0] == pt0[0]) {
            assert!(pt0[1] > pt1[1], "curve ordering violated at k1 = {}", pt0[0]);
        }
    }

    // the alpha_bar = 1 curve decreases towards kappa_m/(n-2) = 1/3 as k1
    // grows: strictly decreasing tail, always above the limit, and ending at
    // the closed-form value for k1 = 5
    let curve = &sweep.curve_alpha1;
    for w in curve.windows(2) {
        assert!(w[1][1] < w[0][1], "alpha1 curve not decreasing at k1 = {}", w[1][0]);
    }
    for pt in curve {
        assert!(pt[1] > 1.0 / 3.0, "alpha1 curve dipped below kappa_m/(n-2)");
    }
    let last = curve.last().unwrap();
    assert_eq!(last[0], 5.0);
    // closed form at k1 = 5: sqrt(36 + 80 k2) = 6 + 8/3  =>  k2 = 39.111/80
    assert!(
        (last[1] - 0.48888888888888893).abs() < 1e-6,
        "alpha1 curve endpoint {} vs closed form",
        last[1]
    );
    let mid = curve[curve.len() / 2];
    assert!(
        last[1] - 1.0 / 3.0 < mid[1] - 1.0 / 3.0,
        "curve must approach the kappa2 = 1/3 asymptote"
    );
    report("8 bifurcation-diagram", t0.elapsed().as_secs_f64() * 1e3, 5000.0);
}

#[test]
fn criterion_9_invariant_suite() {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0x1417);

    // constraint propagation to 1e-6 relative along the three figure runs
    let runs = [(0.6, 200.0), (0.93, 1e4), (0.2, 1e4)];
    for (km, horizon) in runs {
        let params = fig_params(km);
        let traj = aggrekin::integrate(
            systems::original_field(&params),
            &fig_init().as_array(),
            (0.0, horizon),
            &lean_config(),
            &[],
        )
        .unwrap();
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let tol = 1e-6 * (5.0 * y[2]).max(1.0);
            let free = 5.0 * y[2] - y[0] - 2.0 * y[1];
            assert!(free >= -tol, "free sites {free:.3e} at t = {t} (kappa_m = {km})");
            assert!(y[1] - y[2] >= -tol, "connectivity violated at t = {t} (kappa_m = {km})");
            assert!(
                y[0] >= -tol && y[1] >= -tol && y[2] >= -tol,
                "negative component at t = {t} (kappa_m = {km})"
            );
        }
    }

    // alpha within [0, 1] on admissible states
    let params = fig_params(0.6);
    for _ in 0..1000 {
        let s = random_admissible(&params, &mut rng, 5.0);
        let a = alpha(s.q, s.r, &params).unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&a));
    }

    // manifold invariance to machine precision
    let growth = fig_params(0.2);
    for _ in 0..200 {
        let r1 = rng.uniform(0.41, 1.0);
        let p1 = rng.uniform(0.0, 5.0 * r1 - 2.0);
        let f = blowup_field(&BlowupState { p1, q1: 0.0, r1 }, &growth).unwrap();
        assert_eq!(f[1], 0.0, "q1 = 0 must be exactly invariant");
        let m = manifold_field(p1, 1.0, &growth).unwrap();
        assert_eq!(m[1], 0.0, "r1 = 1 must be exactly invariant on the manifold");
        let u = rng.uniform(0.05, 2.0);
        let v = rng.uniform(-2.0, 2.0);
        let g = compact_field(&CompactState { u, v, w: 0.0 }, &growth).unwrap();
        assert_eq!(g[1], 0.0, "v must be frozen at w = 0");
        assert_eq!(g[2], 0.0, "w = 0 must be exactly invariant");
    }

    // equilibrium residual over 1000 random stable-regime parameter sets
    let mut accepted = 0;
    while accepted < 1000 {
        let n = 3 + (rng.next_u64() % 6) as i64;
        let p = ModelParams::new(
            n,
            rng.log_uniform(0.1, 10.0),
            rng.log_uniform(0.1, 10.0),
            rng.log_uniform(0.1, 10.0),
            rng.log_uniform(0.1, 10.0),
            rng.log_uniform(0.1, 10.0),
        )
        .unwrap();
        let ab = alpha_bar(&p);
        if !(ab > 1e-4 && ab < 1.0 - 1e-4) {
            continue;
        }
        accepted += 1;
        let eq = equilibrium(&p).unwrap();
        let f = aggrekin::vector_field(&eq.state(), &p).unwrap();
        let res = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        assert!(res <= 1e-9 * eq.state().norm().max(1.0), "residual {res:.3e} for {p:?}");
    }

    // transform round trips to 1e-12 relative
    for _ in 0..1000 {
        let s = random_admissible(&params, &mut rng, 6.0);
        let b = from_blowup(&to_blowup(&s).unwrap());
        let c = from_compact(&to_compact(&s, &params).unwrap(), &params).unwrap();
        for (orig, (via_b, via_c)) in
            [s.p, s.q, s.r].iter().zip([(b.p, c.p), (b.q, c.q), (b.r, c.r)])
        {
            assert!((via_b - orig).abs() <= 1e-12 * orig.abs().max(1.0));
            assert!((via_c - orig).abs() <= 1e-12 * orig.abs().max(1.0));
        }
    }

    report("9 invariant-suite", t0.elapsed().as_secs_f64() * 1e3, 30_000.0);
}
