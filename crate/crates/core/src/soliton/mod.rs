//! Rotationally symmetric gradient solitons `g = e^(2u(r)) (dr^2 + r^2 d theta^2)`.
//!
//! With `A = r u'` and `B = r e^(2u)` the soliton equation for the radial field
//! `c r d/dr` becomes
//!
//! ```text
//! A' = -B (cA + c + 1),    B' = B (2A + 1) / r.
//! ```
//!
//! Profiles are integrated in `t = ln r` from a series launch near `r = 0`. The
//! curvature `K = cA + c + 1` is carried as its own state so that it keeps full
//! relative accuracy when it becomes tiny for large `c`.

mod football;
pub mod rk;
mod shoot;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use rk::{Control, Dopri5, OdeSystem, Outcome, Tolerances};

pub use football::{construct_football, export_as_cone_metric, natural_w_max, ExportSource, FootballMetric};
pub use shoot::{shoot_for_beta, ShootOptions};

/// Largest launch radius accepted by [`series_start`].
pub const MAX_R_START: f64 = 1e-3;
/// Largest accepted ratio of the first omitted series term to the leading term.
pub const SERIES_RATIO_LIMIT: f64 = 1e-8;

/// Launch data `(u, u', A, B)` at `r_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStart {
    pub u: f64,
    pub du: f64,
    pub a: f64,
    pub b: f64,
}

fn series_coefficients(c: f64) -> (f64, f64, f64) {
    let a2 = -(1.0 + c) / 4.0;
    let a4 = (1.0 + c) * (2.0 * c + 1.0) / 32.0;
    let a6 = -(a4 + a2 * a2) * (3.0 * c + 1.0) / 18.0;
    (a2, a4, a6)
}

/// `u = a2 r^2 + a4 r^4`, the regular solution with `u(0) = u'(0) = 0`.
pub fn series_start(c: f64, r_start: f64) -> Result<SeriesStart> {
    check_c(c)?;
    if !(r_start > 0.0 && r_start <= MAX_R_START) {
        return Err(Error::Domain(format!("r_start = {r_start} must lie in (0, {MAX_R_START}]")));
    }
    let (a2, a4, a6) = series_coefficients(c);
    let r2 = r_start * r_start;
    if a2 != 0.0 {
        let ratio = (a6 * r2 * r2 / a2).abs();
        if ratio > SERIES_RATIO_LIMIT {
            return Err(Error::Precision { r_start, ratio });
        }
    }
    let u = r2 * (a2 + a4 * r2);
    let a = r2 * (2.0 * a2 + 4.0 * a4 * r2);
    Ok(SeriesStart { u, du: a / r_start, a, b: r_start * (2.0 * u).exp() })
}

fn check_c(c: f64) -> Result<()> {
    if c.is_nan() || c < -1.0 || !c.is_finite() {
        return Err(Error::Domain(format!("c must exceed -1, got {c}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BBelowEps,
    RMaxHit,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub r: f64,
    pub u: f64,
    pub a: f64,
    pub b: f64,
    /// `cA + c + 1`, integrated directly.
    pub k: f64,
}

/// Power-law extrapolation of the part of the profile beyond `r_stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    /// Measured exponent `p` in `B ~ r^p`.
    pub decay_exponent: f64,
    /// Estimate of `int_{r_stop}^inf B dr`.
    pub b_integral: f64,
    /// Added to `A(r_stop)` to estimate the limit.
    pub correction: f64,
    pub uncertainty: f64,
    pub area_tail: f64,
    /// False when `B` decays slower than `r^-1.05`.
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub r_start: f64,
    pub r_max: f64,
    pub eps_b: f64,
    pub tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { r_start: 1e-4, r_max: 1e6, eps_b: 1e-12, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonProfile {
    pub c: f64,
    pub samples: Vec<ProfileSample>,
    pub a_limit: f64,
    /// Limit of `cA + c + 1`; positive exactly when `A_c > -(c+1)/c`.
    pub k_limit: f64,
    pub r_stop: f64,
    pub stop_reason: StopReason,
    pub area: f64,
    pub tail: TailEstimate,
    pub tol: f64,
}

/// State `[A, K, B, u, area]` as functions of `t = ln r`.
struct SolitonOde {
    c: f64,
}

impl OdeSystem<5> for SolitonOde {
    fn rhs(&self, t: f64, y: &[f64; 5], d: &mut [f64; 5]) {
        let p = t.exp() * y[2];
        d[0] = -p * y[1];
        d[1] = -self.c * p * y[1];
        d[2] = y[2] * (2.0 * y[0] + 1.0);
        d[3] = y[0];
        d[4] = 2.0 * PI * p;
    }
}

/// For `c >= 1`, `A = (K - c - 1)/c` is more accurate than the integrated `A`: it keeps
/// `A > -(c+1)/c` visible while `K` underflows relative to `c + 1`.
fn a_from_state(c: f64, y: &[f64; 5]) -> f64 {
    if c >= 1.0 {
        (y[1] - c - 1.0) / c
    } else {
        y[0]
    }
}

fn sample_of(c: f64, t: f64, y: &[f64; 5]) -> ProfileSample {
    ProfileSample { r: t.exp(), u: y[3], a: a_from_state(c, y), b: y[2], k: y[1] }
}

/// Integrates the profile for `c` with launch `r_start = 1e-4`.
pub fn integrate_profile(c: f64, r_max: f64, eps_b: f64, tol: f64) -> Result<SolitonProfile> {
    integrate_profile_with(c, &ProfileOptions { r_max, eps_b, tol, ..ProfileOptions::default() })
}

pub fn integrate_profile_with(c: f64, opts: &ProfileOptions) -> Result<SolitonProfile> {
    check_c(c)?;
    if !(1e-13..=1e-6).contains(&opts.tol) {
        return Err(Error::Domain(format!("tol = {} must lie in [1e-13, 1e-6]", opts.tol)));
    }
    if !(opts.r_max > opts.r_start) || !opts.r_max.is_finite() {
        return Err(Error::Domain(format!("r_max = {} must exceed r_start = {}", opts.r_max, opts.r_start)));
    }
    if !(opts.eps_b > 0.0) {
        return Err(Error::Domain(format!("eps_B = {} must be positive", opts.eps_b)));
    }
    if c == -1.0 {
        return Ok(flat_profile(opts));
    }

    let start = series_start(c, opts.r_start)?;
    let t0 = opts.r_start.ln();
    let t_end = opts.r_max.ln();
    let (a2, a4, _) = series_coefficients(c);
    let r2 = opts.r_start * opts.r_start;
    // area of the launch disk: 2 pi int_0^r s e^(2u) ds to fourth order
    let area0 = PI * r2 * (1.0 + a2 * r2 + (2.0 * a4 + 2.0 * a2 * a2) * r2 * r2 / 3.0);
    let y0 = [start.a, c * start.a + c + 1.0, start.b, start.u, area0];

    let tol = opts.tol;
    let mut rk = Dopri5::new(Tolerances { rtol: tol, atol: [tol, 0.0, 0.0, tol, tol] });
    let mut samples = vec![sample_of(c, t0, &y0)];
    let (t_last, y_last, outcome) = rk.integrate(&SolitonOde { c }, t0, y0, t_end, |t, y, dy| {
        samples.push(sample_of(c, t, y));
        let p = t.exp() * y[2];
        if p < opts.eps_b && dy[0].abs() < 1e-12 {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    let stop_reason = match outcome {
        Outcome::Stopped => StopReason::BBelowEps,
        Outcome::ReachedEnd => StopReason::RMaxHit,
        Outcome::StepUnderflow | Outcome::TooManySteps => StopReason::StepUnderflow,
    };
    let tail = if stop_reason == StopReason::StepUnderflow {
        TailEstimate::unknown(f64::NAN)
    } else {
        tail_estimate(c, &samples)
    };
    let k_limit = y_last[1] * (-c * tail.b_integral).exp();
    Ok(SolitonProfile {
        c,
        a_limit: if c >= 1.0 { (k_limit - c - 1.0) / c } else { y_last[0] + tail.correction },
        k_limit,
        r_stop: t_last.exp(),
        stop_reason,
        area: y_last[4] + tail.area_tail,
        tail,
        tol,
        samples,
    })
}

/// `c = -1`: the flat plane, `u = 0`, `A = 0`, `B = r`.
fn flat_profile(opts: &ProfileOptions) -> SolitonProfile {
    let n = 64;
    let (t0, t1) = (opts.r_start.ln(), opts.r_max.ln());
    let samples = (0..n)
        .map(|i| {
            let r = if i + 1 == n { opts.r_max } else { (t0 + (t1 - t0) * i as f64 / (n - 1) as f64).exp() };
            ProfileSample { r, u: 0.0, a: 0.0, b: r, k: 0.0 }
        })
        .collect();
    SolitonProfile {
        c: -1.0,
        samples,
        a_limit: 0.0,
        k_limit: 0.0,
        r_stop: opts.r_max,
        stop_reason: StopReason::RMaxHit,
        area: PI * opts.r_max * opts.r_max,
        tail: TailEstimate { area_tail: f64::INFINITY, ..TailEstimate::unknown(1.0) },
        tol: opts.tol,
    }
}

fn tail_estimate(c: f64, samples: &[ProfileSample]) -> TailEstimate {
    let n = samples.len();
    if n < 2 {
        return TailEstimate::unknown(f64::NAN);
    }
    let (s0, s1) = (&samples[n - 2], &samples[n - 1]);
    let p = (s1.b / s0.b).ln() / (s1.r / s0.r).ln();
    // int_r^inf B ds with B ~ r^p
    let decay = -(p + 1.0);
    let reliable = p < -1.05;
    if !(decay > 0.0) {
        return TailEstimate::unknown(p);
    }
    let b_int = s1.r * s1.b / decay;
    // K' = -c B K integrates exactly to K e^(-c int B), and A moves by the change in K over c
    let correction = if c == 0.0 { -s1.k * b_int } else { s1.k * (-c * b_int).exp_m1() / c };
    TailEstimate {
        decay_exponent: p,
        b_integral: b_int,
        correction,
        uncertainty: correction.abs(),
        area_tail: 2.0 * PI * b_int,
        reliable,
    }
}

impl TailEstimate {
    fn unknown(p: f64) -> Self {
        Self {
            decay_exponent: p,
            b_integral: 0.0,
            correction: 0.0,
            uncertainty: f64::INFINITY,
            area_tail: 0.0,
            reliable: false,
        }
    }
}

/// Limit of `A` and its tail uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub a_c: f64,
    pub uncertainty: f64,
    pub reliable: bool,
}

pub fn limit_coefficient(profile: &SolitonProfile) -> Result<LimitEstimate> {
    if profile.stop_reason == StopReason::StepUnderflow {
        return Err(Error::Range(format!(
            "profile for c = {} stopped on step underflow at r = {:.6e}",
            profile.c, profile.r_stop
        )));
    }
    Ok(LimitEstimate { a_c: profile.a_limit, uncertainty: profile.tail.uncertainty, reliable: profile.tail.reliable })
}

impl SolitonProfile {
    /// Cone order at the `r = infinity` end, `-A_c - 2`.
    pub fn cone_order(&self) -> f64 {
        -self.a_limit - 2.0
    }

    /// Gauss curvature `K = -e^(-2u) A'/r = (cA + c + 1) B e^(-2u) / r` at a sample.
    pub fn curvature(&self, s: &ProfileSample) -> f64 {
        s.k * s.b * (-2.0 * s.u).exp() / s.r
    }

    /// `(u, A, B, K)` at radius `r`, by the launch series below the first sample and
    /// quintic Hermite interpolation in `ln r` between samples.
    pub fn state_at(&self, r: f64) -> Result<ProfileSample> {
        let first = &self.samples[0];
        let last = self.samples.last().expect("profiles are never empty");
        if !(r > 0.0) || r > last.r * (1.0 + 1e-12) {
            return Err(Error::Range(format!("r = {r} lies outside the profile range (0, {}]", last.r)));
        }
        if self.c == -1.0 {
            return Ok(ProfileSample { r, u: 0.0, a: 0.0, b: r, k: 0.0 });
        }
        if r <= first.r {
            let (a2, a4, _) = series_coefficients(self.c);
            let r2 = r * r;
            let u = r2 * (a2 + a4 * r2);
            let a = r2 * (2.0 * a2 + 4.0 * a4 * r2);
            return Ok(ProfileSample { r, u, a, b: r * (2.0 * u).exp(), k: self.c * a + self.c + 1.0 });
        }
        let hi = self.samples.partition_point(|s| s.r < r).min(self.samples.len() - 1);
        let (s0, s1) = (&self.samples[hi - 1], &self.samples[hi]);
        let (d0, d1) = (self.jets(s0), self.jets(s1));
        let h = s1.r.ln() - s0.r.ln();
        let x = ((r.ln() - s0.r.ln()) / h).clamp(0.0, 1.0);
        let at = |i: usize| quintic_hermite(d0[i], d1[i], h, x);
        Ok(ProfileSample { r, u: at(0), a: at(1), b: at(2).exp(), k: at(3).exp() })
    }

    /// Value and first two `t`-derivatives of `(u, A, ln B, ln K)` at a sample.
    fn jets(&self, s: &ProfileSample) -> [[f64; 3]; 4] {
        let c = self.c;
        let p = s.r * s.b;
        let da = -p * s.k;
        let dda = da * (2.0 * s.a + 2.0 - c * p);
        [
            [s.u, s.a, da],
            [s.a, da, dda],
            [s.b.ln(), 2.0 * s.a + 1.0, 2.0 * da],
            [s.k.ln(), -c * p, -c * p * (2.0 * s.a + 2.0)],
        ]
    }
}

/// Quintic Hermite interpolation from value, slope and curvature at both ends of a step of length `h`.
fn quintic_hermite(y0: [f64; 3], y1: [f64; 3], h: f64, x: f64) -> f64 {
    let (x2, x3) = (x * x, x * x * x);
    let (x4, x5) = (x3 * x, x3 * x2);
    let h0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
    let h1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
    let h2 = 0.5 * (x2 - 3.0 * x3 + 3.0 * x4 - x5);
    let h4 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
    let h5 = 0.5 * (x3 - 2.0 * x4 + x5);
    h0 * y0[0] + h * (h1 * y0[1] + h4 * y1[1]) + h * h * (h2 * y0[2] + h5 * y1[2]) + (1.0 - h0) * y1[0]
}

/// Sup over samples of `|R - 2 - (2c + 2cA)|`, with `R = -2 e^(-2u)(u'' + u'/r)` and
/// `u'' + u'/r = A'/r` taken from the equation for `A'`.
pub fn soliton_residual(profile: &SolitonProfile) -> f64 {
    let c = profile.c;
    profile
        .samples
        .iter()
        .map(|s| {
            let a_prime = -s.b * (c * s.a + c + 1.0);
            let r_scalar = -2.0 * (-2.0 * s.u).exp() * a_prime / s.r;
            (r_scalar - 2.0 - 2.0 * c - 2.0 * c * s.a).abs()
        })
        .fold(0.0, f64::max)
}

/// Minimum of the Gauss curvature over the samples.
pub fn curvature_min(profile: &SolitonProfile) -> f64 {
    profile.samples.iter().map(|s| profile.curvature(s)).fold(f64::INFINITY, f64::min)
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub a_c: f64,
    pub uncertainty: f64,
    pub beta: f64,
    pub area: f64,
    pub min_k: f64,
    pub residual: f64,
    pub max_a_increase: f64,
}

/// `n` values of `c` spaced geometrically in `c + 1` between `c_min` and `c_max`.
pub fn sweep_values(n: usize, c_min: f64, c_max: f64) -> Result<Vec<f64>> {
    if n < 2 || !(c_min > -1.0) || !(c_max > c_min) {
        return Err(Error::Domain(format!(
            "sweep needs n >= 2 and -1 < c_min < c_max, got n = {n}, [{c_min}, {c_max}]"
        )));
    }
    let (lo, hi) = ((c_min + 1.0).ln(), (c_max + 1.0).ln());
    Ok((0..n)
        .map(|i| if i + 1 == n { c_max } else { (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp() - 1.0 })
        .collect())
}

/// Largest increase of `A` between consecutive samples.
pub fn max_a_increase(profile: &SolitonProfile) -> f64 {
    profile.samples.windows(2).map(|w| w[1].a - w[0].a).fold(0.0, f64::max)
}

/// Integrates one profile per `c`, in parallel; rows come back in input order.
pub fn sweep(cs: &[f64], opts: &ProfileOptions) -> Result<Vec<SweepRow>> {
    cs.par_iter()
        .map(|&c| {
            let p = integrate_profile_with(c, opts)?;
            let lim = limit_coefficient(&p)?;
            Ok(SweepRow {
                c,
                a_c: lim.a_c,
                uncertainty: lim.uncertainty,
                beta: p.cone_order(),
                area: p.area,
                min_k: curvature_min(&p),
                residual: soliton_residual(&p),
                max_a_increase: max_a_increase(&p),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference limit from the conserved quantity of the autonomous `(A, P = rB)` system:
    /// `y = A_c + 1` is the negative root of `y - ln(cy + 1)/c = 1 - ln(1 + c)/c`
    /// (`y = -1` at `c = 0`). Solved by bisection, independently of the integrator.
    fn limit_oracle(c: f64) -> f64 {
        if c == 0.0 {
            return -2.0;
        }
        let rhs = 1.0 - (1.0 + c).ln() / c;
        let f = |y: f64| y - (c * y + 1.0).ln() / c - rhs;
        let hi = -1e-300;
        let mut lo = if c > 0.0 { -1.0 / c } else { -1.0 };
        if c < 0.0 {
            while f(lo).signum() == f(hi).signum() {
                lo *= 2.0;
            }
        }
        let s_lo = f(lo).signum();
        let mut hi = hi;
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid).signum() == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) - 1.0
    }

    #[test]
    fn oracle_reference_values() {
        assert_eq!(limit_oracle(0.0), -2.0);
        assert!((limit_oracle(-0.5) - (-2.5119)).abs() < 1e-3);
        assert!((limit_oracle(1.0) - (-1.5936)).abs() < 1e-3);
        assert!((limit_oracle(10.0) - (-1.09998)).abs() < 1e-5);
    }

    #[test]
    fn series_launch_examples() {
        let s = series_start(-1.0, 1e-4).unwrap();
        assert_eq!((s.u, s.a, s.b), (0.0, 0.0, 1e-4));
        let s = series_start(0.0, 1e-4).unwrap();
        let exact = (4.0f64 / (4.0 + 1e-8)).ln();
        assert!((s.u - exact).abs() < 1e-16);
        assert!((s.u + 2.5e-9).abs() < 1e-15);
        let s = series_start(3.0, 1e-4).unwrap();
        assert!(s.u < 0.0 && (s.u + 1e-8).abs() < 1e-14);
        assert!((s.a - 1e-4 * s.du).abs() < 1e-20);
    }

    #[test]
    fn series_launch_rejects_bad_radius() {
        assert!(matches!(series_start(0.0, 2e-3), Err(Error::Domain(_))));
        assert!(matches!(series_start(1e6, 1e-3), Err(Error::Precision { .. })));
        assert!(series_start(-1.5, 1e-4).is_err());
    }

    #[test]
    fn round_sphere_profile() {
        let p = integrate_profile(0.0, 1e6, 1e-12, 1e-10).unwrap();
        let mut worst: f64 = 0.0;
        for s in p.samples.iter().filter(|s| s.r <= 100.0) {
            worst = worst.max((s.u - (4.0 / (4.0 + s.r * s.r)).ln()).abs());
        }
        for i in 0..=400 {
            let r = 100.0 * i as f64 / 400.0 + 1e-6;
            let s = p.state_at(r).unwrap();
            worst = worst.max((s.u - (4.0 / (4.0 + r * r)).ln()).abs());
        }
        assert!(worst < 1e-9, "sup error {worst:e}");
        let lim = limit_coefficient(&p).unwrap();
        assert!((lim.a_c + 2.0).abs() < 1e-6 && lim.uncertainty < 1e-6, "{lim:?}");
        assert!(soliton_residual(&p) < 1e-7);
        assert!(curvature_min(&p) > 0.0);
        assert!((p.curvature(&p.samples[0]) - 1.0).abs() < 1e-6);
        assert!((p.area - 4.0 * PI).abs() < 1e-5 * 4.0 * PI);
    }

    #[test]
    fn limits_match_first_integral() {
        for c in [-0.9, -0.5, 1.0, 10.0] {
            let p = integrate_profile(c, 1e6, 1e-12, 1e-11).unwrap();
            let want = limit_oracle(c);
            assert!((p.a_limit - want).abs() < 1e-6, "c = {c}: {} vs {want}", p.a_limit);
        }
    }

    #[test]
    fn limit_bounds_for_extreme_c() {
        let p = integrate_profile(10.0, 1e6, 1e-12, 1e-10).unwrap();
        assert!(p.a_limit > -1.1 && p.a_limit < -1.0);
        let p = integrate_profile(-0.5, 1e6, 1e-12, 1e-10).unwrap();
        let fine = integrate_profile(-0.5, 1e6, 1e-12, 1e-12).unwrap();
        assert!(p.a_limit < -2.0);
        assert!((p.a_limit - fine.a_limit).abs() < 1e-7);
        let p = integrate_profile(-0.9, 1e6, 1e-12, 1e-10).unwrap();
        let lim = limit_coefficient(&p).unwrap();
        assert!(lim.a_c < -2.5 && lim.uncertainty < 1e-4);
    }

    #[test]
    fn large_c_keeps_curvature_positive() {
        // A_c sits within 1e-40 of -(c+1)/c here; the bound is seen through K
        let p = integrate_profile(100.0, 1e6, 1e-12, 1e-10).unwrap();
        assert!(p.k_limit > 0.0);
        assert!(p.a_limit >= -1.01 && p.a_limit < -1.0);
        assert!(p.samples.iter().all(|s| s.k > 0.0 && s.a >= -1.01));
        assert!(p.samples.windows(2).all(|w| w[1].a <= w[0].a));
    }

    #[test]
    fn residual_detects_corruption() {
        let mut p = integrate_profile(1.0, 1e6, 1e-12, 1e-10).unwrap();
        assert!(soliton_residual(&p) < 1e-6);
        for s in p.samples.iter_mut() {
            s.u += 1e-3 * (-(s.r.ln()).powi(2)).exp();
        }
        assert!(soliton_residual(&p) > 1e-4);
    }

    #[test]
    fn curvature_positive_for_examples() {
        for c in [5.0, -0.5] {
            let p = integrate_profile(c, 1e6, 1e-12, 1e-10).unwrap();
            assert!(curvature_min(&p) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(integrate_profile(-2.0, 1e6, 1e-12, 1e-10).is_err());
        assert!(integrate_profile(0.0, 1e6, 1e-12, 1e-3).is_err());
        let flat = integrate_profile(-1.0, 1e3, 1e-12, 1e-10).unwrap();
        assert!(flat.samples.iter().all(|s| s.u == 0.0 && s.a == 0.0 && s.b == s.r));
    }

    #[test]
    fn interpolation_matches_samples() {
        let p = integrate_profile(1.0, 1e6, 1e-12, 1e-10).unwrap();
        for s in p.samples.iter().step_by(7) {
            let q = p.state_at(s.r).unwrap();
            assert!((q.u - s.u).abs() < 1e-12 && (q.a - s.a).abs() < 1e-12);
        }
        assert!(p.state_at(2.0 * p.r_stop).is_err());
    }

    #[test]
    fn sweep_preserves_order() {
        let cs = sweep_values(5, -0.5, 10.0).unwrap();
        let rows = sweep(&cs, &ProfileOptions::default()).unwrap();
        assert_eq!(rows.len(), 5);
        for (row, c) in rows.iter().zip(&cs) {
            assert_eq!(row.c, *c);
            assert!(row.a_c < -1.0 && row.min_k > 0.0);
        }
    }
}
