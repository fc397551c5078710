//! Scalar root-finding helpers: plain bisection for pinned-tolerance
//! boundary solves, and a guarded Brent iteration for the statistical
//! inversions.

use crate::error::{Error, Result};

/// Bisection on a monotone function until the bracket is narrower than
/// `xtol`. `f(lo)` and `f(hi)` must straddle zero.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::computation(format!(
            "root not bracketed on [{lo}, {hi}] (f: {flo} .. {fhi})"
        )));
    }
    let rising = fhi > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < xtol {
            return Ok(mid);
        }
        let fm = f(mid);
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brent's method (inverse-quadratic/secant with bisection fallback).
/// Converges when the bracket shrinks below `xtol` or |f| < `ftol`.
pub fn brent(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    ftol: f64,
) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::computation(format!(
            "root not bracketed on [{a}, {b}] (f: {fa} .. {fb})"
        )));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() < ftol {
            return Ok(b);
        }
        if fa.abs() < fb.abs() {
            // keep b as the best estimate
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // secant
                (2.0 * m * s, 1.0 - s)
            } else {
                // inverse quadratic interpolation
                let q_ = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q_ * (q_ - r) - (b - a) * (r - 1.0)),
                    (q_ - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Expand a bracket symmetrically around `x0` until `f` changes sign or the
/// half-width exceeds `max_halfwidth`.
pub fn expand_bracket(
    mut f: impl FnMut(f64) -> f64,
    x0: f64,
    initial_halfwidth: f64,
    max_halfwidth: f64,
) -> Result<(f64, f64)> {
    let mut h = initial_halfwidth;
    let mut lo = x0 - h;
    let mut hi = x0 + h;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    while flo.signum() == fhi.signum() {
        h *= 2.0;
        if h > max_halfwidth {
            return Err(Error::computation(format!(
                "no sign change within {max_halfwidth} of {x0}"
            )));
        }
        lo = x0 - h;
        hi = x0 + h;
        flo = f(lo);
        fhi = f(hi);
    }
    Ok((lo, hi))
}
