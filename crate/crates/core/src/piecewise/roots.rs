// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scalar root finding used by the piece algebra.
//!
//! Square-loss pieces are handled in closed form. Poisson pieces need Newton
//! iterations; every solver here keeps a bracket so that a Newton step which
//! leaves it is replaced by bisection.

use super::ROOT_TOL;

const MAX_ITER: usize = 200;

/// Real roots of `a x^2 + b x + c = 0` in increasing order.
///
/// Degenerates to the linear case when `a` is zero. A double root is
/// reported once.
pub(crate) fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let sq = disc.sqrt();
    // Stable form: avoid cancellation between -b and sqrt(disc).
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        let r = sq / (2.0 * a);
        (-r, r)
    } else {
        (q / a, c / q)
    };
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Root of `f` inside `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs (or one of them is zero). Newton steps are taken from the current
/// best end and rejected in favour of bisection when they leave the bracket.
pub(crate) fn bracketed<F, D>(f: F, df: D, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo.signum() != fhi.signum(), "root not bracketed");
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if fx.abs() < ROOT_TOL {
            return x;
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            return x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Newton iteration on a convex function that is monotone on the side of the
/// root where `start` lies. From such a start the iterates approach the root
/// monotonically, so no bracket is needed; a bracket is still used to stop
/// early when the iterates stop moving.
pub(crate) fn monotone_newton<F, D>(f: F, df: D, start: f64, other_side: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = start;
    let mut fx = f(x);
    for _ in 0..MAX_ITER {
        if fx.abs() < ROOT_TOL {
            return x;
        }
        let d = df(x);
        let next = x - fx / d;
        let outside = if start < other_side {
            next > other_side || next < x
        } else {
            next < other_side || next > x
        };
        if d == 0.0 || !next.is_finite() || outside {
            break;
        }
        if next == x {
            return x;
        }
        x = next;
        fx = f(x);
    }
    if fx.abs() < ROOT_TOL {
        return x;
    }
    let (lo, hi) = if x < other_side {
        (x, other_side)
    } else {
        (other_side, x)
    };
    bracketed(f, df, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots_cover_degenerate_cases() {
        assert_eq!(quadratic_roots(1.0, -4.0, 3.0), vec![1.0, 3.0]);
        assert!(quadratic_roots(1.0, -4.0, 5.0).is_empty());
        assert_eq!(quadratic_roots(1.0, -4.0, 4.0), vec![2.0]);
        assert_eq!(quadratic_roots(0.0, 2.0, -4.0), vec![2.0]);
        assert!(quadratic_roots(0.0, 0.0, 1.0).is_empty());
        assert_eq!(quadratic_roots(-1.0, 0.0, 4.0), vec![-2.0, 2.0]);
    }

    #[test]
    fn bracketed_finds_cubic_root() {
        let r = bracketed(|x| x * x * x - 2.0, |x| 3.0 * x * x, 0.0, 2.0);
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn monotone_newton_from_right_of_convex_root() {
        // x - 3 ln x - 1 = 0 has its larger root near 5.2.
        let f = |x: f64| x - 3.0 * x.ln() - 1.0;
        let df = |x: f64| 1.0 - 3.0 / x;
        let r = monotone_newton(f, df, 20.0, 3.0);
        assert!(f(r).abs() < 1e-12);
        assert!(r > 3.0);
    }
}
