//! Dormand–Prince 5(4) with an embedded error estimate and FSAL reuse.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dydt: &mut [f64; N]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<const N: usize> {
    pub rtol: f64,
    /// Per-component absolute tolerance; zero makes a component purely relative.
    pub atol: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ReachedEnd,
    Stopped,
    StepUnderflow,
    TooManySteps,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

pub struct Dopri5<const N: usize> {
    pub tol: Tolerances<N>,
    pub max_steps: usize,
    pub h_max: f64,
    pub stats: Stats,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(tol: Tolerances<N>) -> Self {
        Self { tol, max_steps: 1_000_000, h_max: f64::INFINITY, stats: Stats::default() }
    }

    fn error_norm(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.tol.atol[i] + self.tol.rtol * y[i].abs().max(y_new[i].abs());
            let e = if sc > 0.0 { err[i] / sc } else { 0.0 };
            acc += e * e;
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step(&mut self, sys: &impl OdeSystem<N>, t0: f64, y0: &[f64; N], f0: &[f64; N], span: f64) -> f64 {
        let scale = |i: usize, y: &[f64; N]| self.tol.atol[i] + self.tol.rtol * y[i].abs();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..N {
            let sc = scale(i, y0);
            if sc > 0.0 {
                d0 += (y0[i] / sc).powi(2);
                d1 += (f0[i] / sc).powi(2);
            }
        }
        let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y0[i] + h0 * f0[i];
        }
        let mut f1 = [0.0; N];
        sys.rhs(t0 + h0, &y1, &mut f1);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..N {
            let sc = scale(i, y0);
            if sc > 0.0 {
                d2 += ((f1[i] - f0[i]) / sc).powi(2);
            }
        }
        let d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }

    /// Integrates from `t0` to `t_end`. `on_step(t, y, dydt)` sees every accepted step
    /// and may stop the integration early.
    pub fn integrate<S, F>(
        &mut self,
        sys: &S,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: F,
    ) -> (f64, [f64; N], Outcome)
    where
        S: OdeSystem<N>,
        F: FnMut(f64, &[f64; N], &[f64; N]) -> Control,
    {
        let mut t = t0;
        let mut y = y0;
        let mut k1 = [0.0; N];
        sys.rhs(t, &y, &mut k1);
        self.stats.rhs_evals += 1;
        let span = t_end - t0;
        if span <= 0.0 {
            return (t, y, Outcome::ReachedEnd);
        }
        let mut h = self.initial_step(sys, t, &y, &k1, span);
        let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
            ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
        let mut tmp = [0.0; N];
        let mut y_new = [0.0; N];
        let mut err = [0.0; N];
        let mut prev_err: f64 = 1e-4;
        let mut rejected_last = false;

        loop {
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return (t, y, Outcome::TooManySteps);
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return (t, y, Outcome::StepUnderflow);
            }

            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            sys.rhs(t + C2 * h, &tmp, &mut k2);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(t + C3 * h, &tmp, &mut k3);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(t + C4 * h, &tmp, &mut k4);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(t + C5 * h, &tmp, &mut k5);
            for i in 0..N {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            sys.rhs(t + h, &tmp, &mut k6);
            for i in 0..N {
                y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            sys.rhs(t + h, &y_new, &mut k7);
            self.stats.rhs_evals += 6;
            for i in 0..N {
                err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let norm = self.error_norm(&y, &y_new, &err);
            let finite = norm.is_finite() && y_new.iter().all(|v| v.is_finite());

            if finite && norm <= 1.0 {
                self.stats.accepted += 1;
                t = if last { t_end } else { t + h };
                y = y_new;
                k1 = k7;
                if on_step(t, &y, &k1) == Control::Stop {
                    return (t, y, Outcome::Stopped);
                }
                if last {
                    return (t, y, Outcome::ReachedEnd);
                }
                // PI controller (Gustafsson); no growth right after a rejection
                let norm = norm.max(1e-10);
                let mut fac = 0.9 * norm.powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0);
                fac = fac.clamp(0.2, 5.0);
                if rejected_last {
                    fac = fac.min(1.0);
                }
                prev_err = norm;
                rejected_last = false;
                h = (h * fac).min(self.h_max);
            } else {
                self.stats.rejected += 1;
                rejected_last = true;
                let fac = if finite { (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h *= fac;
            }
        }
    }
}
