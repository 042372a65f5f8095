//! Bracketed monotone root-finding: Newton steps clipped to a bisection
//! bracket, for strictly increasing functions.

/// Find the root of the strictly increasing `f` (with derivative `df`) in
/// the bracket [lo, hi], assuming f(lo) <= 0 <= f(hi). The bracket shrinks
/// until its width is below `tol_abs + tol_rel * hi`.
pub fn newton_bisect<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, tol_abs: f64, tol_rel: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    debug_assert!(lo <= hi);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        if hi - lo <= tol_abs + tol_rel * hi.abs() {
            break;
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        // fall back to bisection whenever Newton leaves the bracket
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Grow an upper bound by doubling from `start` until `f(hi) >= target`.
/// `f` must be unbounded and nondecreasing.
pub fn double_until<F: Fn(f64) -> f64>(f: F, start: f64, target: f64) -> f64 {
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..1100 {
        if f(hi) >= target {
            return hi;
        }
        hi *= 2.0;
    }
    hi
}
