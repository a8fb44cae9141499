use crate::error::{Error, Result};

use super::{integrate_profile_with, ProfileOptions, SolitonProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    pub profile: ProfileOptions,
    pub max_iterations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { profile: ProfileOptions { tol: 1e-11, ..ProfileOptions::default() }, max_iterations: 200 }
    }
}

/// Finds `c` with `|A_c + beta + 2| <= tol_beta` by sign bracketing and Brent's method.
pub fn shoot_for_beta(beta: f64, tol_beta: f64, opts: &ShootOptions) -> Result<(f64, SolitonProfile)> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("cone order must exceed -1, got {beta}")));
    }
    if !(tol_beta > 0.0) {
        return Err(Error::Domain(format!("tol_beta = {tol_beta} must be positive")));
    }
    let eval = |c: f64| -> Result<(f64, SolitonProfile)> {
        let p = integrate_profile_with(c, &opts.profile)?;
        let lim = super::limit_coefficient(&p)?;
        Ok((lim.a_c + beta + 2.0, p))
    };

    let (mut lo, mut hi) = (-0.5, 1.0);
    let (mut f_lo, mut p_lo) = eval(lo)?;
    if f_lo.abs() <= tol_beta {
        return Ok((lo, p_lo));
    }
    // A_c tends to -infinity as c -> -1 and to -1 as c -> infinity
    while f_lo > 0.0 {
        lo = -1.0 + 0.5 * (lo + 1.0);
        if lo + 1.0 < 1e-6 {
            return Err(Error::Range(format!("no sign change for beta = {beta} with c down to {lo}")));
        }
        (f_lo, p_lo) = eval(lo)?;
    }
    let (mut f_hi, mut p_hi) = eval(hi)?;
    while f_hi < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Range(format!("no sign change for beta = {beta} with c up to {hi}")));
        }
        (f_hi, p_hi) = eval(hi)?;
    }
    if f_lo.abs() <= tol_beta {
        return Ok((lo, p_lo));
    }
    if f_hi.abs() <= tol_beta {
        return Ok((hi, p_hi));
    }

    // Brent: b is the best iterate, a the previous one, c the bracketing partner of b
    let (mut a, mut fa) = (lo, f_lo);
    let (mut b, mut fb, mut pb) = (hi, f_hi, p_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iterations {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 1e-15;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol_beta {
            break;
        }
        if xm.abs() <= tol1 {
            break;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        (fb, pb) = eval(b)?;
    }
    if fb.abs() <= tol_beta {
        // after a swap the stored profile may belong to the other end
        return if pb.c == b { Ok((b, pb)) } else { eval(b).map(|(_, p)| (b, p)) };
    }
    Err(Error::Range(format!("shooting for beta = {beta} stalled at c = {b} with mismatch {fb:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_c_zero() {
        let (c, p) = shoot_for_beta(0.0, 1e-6, &ShootOptions::default()).unwrap();
        assert!(c.abs() < 1e-4, "c = {c}");
        assert!((p.a_limit + 2.0).abs() < 1e-6);
    }

    #[test]
    fn tear_drops() {
        let (c, p) = shoot_for_beta(-0.5, 1e-6, &ShootOptions::default()).unwrap();
        assert!((p.a_limit + 1.5).abs() < 1e-6);
        // -(c+1)/c < -1.5 forces 0 < c < 2
        assert!(c > 0.0 && c < 2.0, "c = {c}");
        let (c, p) = shoot_for_beta(1.0, 1e-6, &ShootOptions::default()).unwrap();
        assert!((p.a_limit + 3.0).abs() < 1e-6);
        assert!(c < 0.0 && c > -1.0);
    }

    #[test]
    fn rejects_orders_below_minus_one() {
        assert!(shoot_for_beta(-1.0, 1e-6, &ShootOptions::default()).is_err());
    }
}
