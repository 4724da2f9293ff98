//! Scalar root finding: bracketing bisection followed by Newton polish.

/// Bisect `f` on `[a, b]` (which must bracket a sign change, `f(a) > 0 > f(b)`
/// or the reverse) until the interval is below `tol` relative to the root
/// magnitude. Returns the midpoint of the final interval.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol * mid.abs().max(1.0) {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Bracketing bisection to 1e-8 relative, then Newton polish to 1e-12.
/// Falls back to the bisection result if Newton wanders outside `[a, b]`.
pub(crate) fn bisect_then_newton<F, D>(f: &F, df: &D, a: f64, b: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let coarse = bisect(f, a, b, 1e-8)?;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut x = coarse;
    for _ in 0..20 {
        let fx = f(x);
        let dfx = df(x);
        if dfx == 0.0 {
            break;
        }
        let step = fx / dfx;
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi {
            return Some(coarse);
        }
        x = next;
        if step.abs() <= 1e-12 * x.abs().max(1.0) {
            break;
        }
    }
    Some(x)
}
