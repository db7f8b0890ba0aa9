//! One-dimensional minimization and root finding.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// True when the minimizer sits within tolerance of either bracket end.
    pub at_boundary: bool,
}

/// Golden-section search for a minimum of `f` on [lo, hi], stopping once
/// the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Minimum> {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    let edge = 2.0 * tol;
    Ok(Minimum {
        x,
        value,
        at_boundary: (x - lo).abs() <= edge || (hi - x).abs() <= edge,
    })
}

/// Root of a continuous function with a sign change on [lo, hi], by
/// bisection safeguarding Newton-like secant steps (Brent's method).
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
    what: &'static str,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NonConvergence {
            what,
            value: fa,
            error: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
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
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NonConvergence {
        what,
        value: b,
        error: fb,
    })
}

/// Expands an initial bracket geometrically until `f` changes sign, within
/// the hard limits [min, max].
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    min: f64,
    max: f64,
) -> Option<(f64, f64)> {
    for _ in 0..200 {
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Some((lo, hi));
        }
        let width = hi - lo;
        if lo > min {
            lo = (lo - width).max(min);
        }
        if hi < max {
            hi = (hi + width).min(max);
        }
        if lo <= min && hi >= max {
            let (flo, fhi) = (f(lo), f(hi));
            return (flo.signum() != fhi.signum()).then_some((lo, hi));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let m = golden_section(|x| Ok((x - 1.3).powi(2) + 2.0), -4.0, 5.0, 1e-9).unwrap();
        // Function values resolve x only to about sqrt(machine epsilon).
        assert!((m.x - 1.3).abs() < 1e-7);
        assert!(!m.at_boundary);
    }

    #[test]
    fn golden_flags_boundary() {
        let m = golden_section(|x| Ok(x), 0.0, 1.0, 1e-8).unwrap();
        assert!(m.at_boundary);
    }

    #[test]
    fn brent_solves_cubic() {
        let r = brent_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, "cubic").unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_no_sign_change() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, "none").is_err());
    }

    #[test]
    fn bracket_expands() {
        let (a, b) = expand_bracket(|x| x - 50.0, 0.0, 1.0, 0.0, 1e6).unwrap();
        assert!(a <= 50.0 && b >= 50.0);
    }
}
