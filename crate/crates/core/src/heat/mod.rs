//! The linear problem `u_t = a Laplacian u + f` on truncated cone surfaces with
//! Neumann data at the truncation circles, solved by backward Euler.
//!
//! Each step solves `(I - dt D L) u = u_prev + dt f` with `D = a / m`, where `L` is the
//! flat operator and `m = e^(2 phi) rho^2` the area density. Scaling row `i` by
//! `W_i / D_i` (`W` the trapezoid weights in `w`) makes the system symmetric positive
//! definite, and it is solved by preconditioned conjugate gradients. Nodes with
//! `a = 0` decouple to `u = u_prev + dt f`.

mod cg;
mod spacetime;

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::coords::GridSpec;
use crate::error::{Error, Result};
use crate::surface::stencil::{d_theta, d_w, trapezoid_weight, CompensatedSum};
use crate::surface::{ConeMetric, ScalarField};

pub use spacetime::SpaceTimeField;

/// Relative residual at which each implicit solve stops.
pub const LINEAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HeatProblem {
    pub metric: ConeMetric,
    pub a: SpaceTimeField,
    pub f: SpaceTimeField,
    pub u0: ScalarField,
    pub t_final: f64,
    pub dt: f64,
}

impl HeatProblem {
    pub fn new(
        metric: ConeMetric,
        a: SpaceTimeField,
        f: SpaceTimeField,
        u0: ScalarField,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        let grid = metric.grid();
        for (name, g) in [("a", a.grid()), ("f", f.grid()), ("u0", u0.grid())] {
            if !grid.same_shape(g) {
                return Err(Error::Shape(format!("{name} is not sampled on the metric grid")));
            }
        }
        if a.min_value() < 0.0 {
            return Err(Error::Domain(format!("coefficient a must be nonnegative, found {}", a.min_value())));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::Domain(format!("final time must be positive, got {t_final}")));
        }
        if !(dt > 0.0) || dt > t_final {
            return Err(Error::Domain(format!("dt = {dt} must lie in (0, T]")));
        }
        Ok(Self { metric, a, f, u0, t_final, dt })
    }

    /// `a = 1`, time-independent forcing.
    pub fn unit_coefficient(
        metric: ConeMetric,
        f: ScalarField,
        u0: ScalarField,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        let grid = *metric.grid();
        Self::new(
            metric,
            SpaceTimeField::constant(ScalarField::constant(grid, 1.0)),
            SpaceTimeField::constant(f),
            u0,
            t_final,
            dt,
        )
    }

    /// Step times `0, dt, ..., T`; the last step is shortened if `T / dt` is not an integer.
    pub fn step_times(&self) -> Vec<f64> {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| (i as f64 * self.dt).min(self.t_final)).collect();
        times[n] = self.t_final;
        times
    }
}

/// Row index of `w = -k` in the metric grid.
fn level_row(metric: &ConeMetric, k: u32) -> Result<usize> {
    if k < 1 || k > metric.chart.k_max {
        return Err(Error::Domain(format!("truncation level {k} outside 1..={}", metric.chart.k_max)));
    }
    metric.grid().row_of(-(k as f64)).ok_or_else(|| {
        Error::Domain(format!("w = -{k} is not a grid node; build the grid with GridSpec::with_spacing"))
    })
}

/// Backward-Euler operator on one truncated grid.
struct Stepper {
    grid: GridSpec,
    /// Trapezoid weight of each row (without the spacing).
    row_weight: Vec<f64>,
    /// `e^(2 phi) rho^2` at each node.
    density: Vec<f64>,
    cw: f64,
    ct: f64,
}

impl Stepper {
    fn new(metric: &ConeMetric) -> Self {
        let grid = *metric.grid();
        let hw = grid.h_w();
        let ht = grid.h_theta();
        let beta = metric.chart.beta;
        Self {
            grid,
            row_weight: (0..grid.n_w).map(|i| trapezoid_weight(i, grid.n_w, 1.0)).collect(),
            density: metric.density(),
            cw: 1.0 / (LN_2 * LN_2 * hw * hw),
            ct: 1.0 / ((beta + 1.0) * (beta + 1.0) * ht * ht),
        }
    }

    /// `out = W L x` with Neumann reflection; symmetric in `x`.
    fn weighted_laplacian(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nw, nt) = (g.n_w, g.n_theta);
        for i in 0..nw {
            let wi = self.row_weight[i];
            for j in 0..nt {
                let k = i * nt + j;
                let jp = if j + 1 == nt { k + 1 - nt } else { k + 1 };
                let jm = if j == 0 { k + nt - 1 } else { k - 1 };
                let radial = if i == 0 {
                    x[k + nt] - x[k]
                } else if i + 1 == nw {
                    x[k - nt] - x[k]
                } else {
                    x[k + nt] - 2.0 * x[k] + x[k - nt]
                };
                out[k] = self.cw * radial + wi * self.ct * (x[jp] - 2.0 * x[k] + x[jm]);
            }
        }
        // boundary rows: W = 1/2 and the reflected stencil is 2 (x1 - x0), so the product is x1 - x0
    }

    fn laplacian_diag(&self, i: usize) -> f64 {
        let radial = if i == 0 || i + 1 == self.grid.n_w { -self.cw } else { -2.0 * self.cw };
        radial - 2.0 * self.row_weight[i] * self.ct
    }

    fn step(&self, u_prev: &[f64], a: &ScalarField, f: &ScalarField, dt: f64) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let nt = self.grid.n_theta;
        let mut u: Vec<f64> = (0..n).map(|k| u_prev[k] + dt * f.values()[k]).collect();
        let active: Vec<usize> = (0..n).filter(|&k| a.values()[k] > 0.0).collect();
        if active.is_empty() {
            return Ok(u);
        }
        // W / D = W m / a
        let scale: Vec<f64> =
            active.iter().map(|&k| self.row_weight[k / nt] * self.density[k] / a.values()[k]).collect();

        let mut rhs: Vec<f64> = active.iter().zip(&scale).map(|(&k, s)| s * u[k]).collect();
        if active.len() < n {
            let mut fixed = u.clone();
            for &k in &active {
                fixed[k] = 0.0;
            }
            let mut wl = vec![0.0; n];
            self.weighted_laplacian(&fixed, &mut wl);
            for (p, &k) in active.iter().enumerate() {
                rhs[p] += dt * wl[k];
            }
        }
        let diag: Vec<f64> = active.iter().zip(&scale).map(|(&k, s)| s - dt * self.laplacian_diag(k / nt)).collect();

        let full_in = std::cell::RefCell::new(vec![0.0; n]);
        let full_out = std::cell::RefCell::new(vec![0.0; n]);
        let apply = |x: &[f64], out: &mut [f64]| {
            let mut xin = full_in.borrow_mut();
            let mut xout = full_out.borrow_mut();
            for (p, &k) in active.iter().enumerate() {
                xin[k] = x[p];
            }
            self.weighted_laplacian(&xin, &mut xout);
            for (p, &k) in active.iter().enumerate() {
                out[p] = scale[p] * x[p] - dt * xout[k];
            }
        };
        let mut x: Vec<f64> = active.iter().map(|&k| u[k]).collect();
        let max_iter = 20 * n.max(100);
        cg::solve(apply, &diag, &rhs, &mut x, LINEAR_TOL, max_iter)?;
        for (p, &k) in active.iter().enumerate() {
            u[k] = x[p];
        }
        Ok(u)
    }
}

/// Backward-Euler solution on the surface truncated at `w = -k`, one frame per step.
pub fn solve_truncated(problem: &HeatProblem, k: u32) -> Result<SpaceTimeField> {
    let first = level_row(&problem.metric, k)?;
    let metric = problem.metric.tail_from(first)?;
    let grid = *metric.grid();
    let a = problem.a.restricted(first, grid)?;
    let f = problem.f.restricted(first, grid)?;
    let u0 = ScalarField::new(grid, problem.u0.tail_from(first)?.into_values())?;

    let stepper = Stepper::new(&metric);
    let times = problem.step_times();
    let mut frames = Vec::with_capacity(times.len());
    frames.push(u0);
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        let prev = frames.last().expect("initial frame").values();
        let next = stepper.step(prev, &a.at(w[1]), &f.at(w[1]), dt)?;
        frames.push(ScalarField::new(grid, next)?);
    }
    SpaceTimeField::new(times, frames)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationStudy {
    pub levels: Vec<u32>,
    /// `[w_lo, w_hi]` on which the levels are compared.
    pub band: (f64, f64),
    /// Sup over band nodes and step times of `|u_k - u_k'|` for adjacent levels.
    pub sup_gaps: Vec<f64>,
    #[serde(skip)]
    pub solutions: Vec<SpaceTimeField>,
    /// Set when the gaps fail to decrease over the last two pairs.
    pub warning: Option<String>,
}

/// Solves at every level and compares adjacent levels on `band` (default: the shallowest domain).
pub fn solve_singular(
    problem: &HeatProblem,
    levels: &[u32],
    band: Option<(f64, f64)>,
) -> Result<(SpaceTimeField, TruncationStudy)> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!("levels must be strictly increasing, got {levels:?}")));
    }
    let grid = *problem.metric.grid();
    let band = band.unwrap_or((-(levels[0] as f64), grid.w_max));
    if band.0 < -(levels[0] as f64) - 1e-12 || band.1 > grid.w_max || !(band.1 > band.0) {
        return Err(Error::Domain(format!("band {band:?} is not inside every truncated domain")));
    }
    let solutions = levels.iter().map(|&k| solve_truncated(problem, k)).collect::<Result<Vec<_>>>()?;

    let rows: Vec<usize> =
        (0..grid.n_w).filter(|&i| grid.w(i) >= band.0 - 1e-12 && grid.w(i) <= band.1 + 1e-12).collect();
    let mut sup_gaps = Vec::new();
    for (pair, sols) in levels.windows(2).zip(solutions.windows(2)) {
        let off0 = level_row(&problem.metric, pair[0])?;
        let off1 = level_row(&problem.metric, pair[1])?;
        let mut gap: f64 = 0.0;
        for (f0, f1) in sols[0].frames().iter().zip(sols[1].frames()) {
            for &i in &rows {
                for j in 0..grid.n_theta {
                    gap = gap.max((f0.get(i - off0, j) - f1.get(i - off1, j)).abs());
                }
            }
        }
        sup_gaps.push(gap);
    }
    let n = sup_gaps.len();
    let warning = (n >= 2 && sup_gaps[n - 1] > sup_gaps[n - 2])
        .then(|| format!("truncation gaps increased: {:.3e} -> {:.3e}", sup_gaps[n - 2], sup_gaps[n - 1]));
    let deepest = solutions.last().expect("at least one level").clone();
    Ok((deepest, TruncationStudy { levels: levels.to_vec(), band, sup_gaps, solutions, warning }))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport {
    /// Worst value of `observed - bound`; the check passes when it is at most the tolerance.
    pub excess: f64,
    pub worst_time: f64,
    pub pass: bool,
}

/// `max_t (max |u(., t)| - C1 - C2 t)`, passing when at most `1e-9`.
pub fn check_max_principle(solution: &SpaceTimeField, c1: f64, c2: f64) -> BoundReport {
    let mut excess = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    for (t, frame) in solution.times().iter().zip(solution.frames()) {
        let e = frame.max_abs() - c1 - c2 * t;
        if e > excess {
            excess = e;
            worst_time = *t;
        }
    }
    BoundReport { excess, worst_time, pass: excess <= 1e-9 }
}

/// Dirichlet energy `int |grad u|^2 dA`, the same for every metric in the conformal class:
/// `int [(beta+1)/ln 2 (u_w)^2 + ln 2/(beta+1) (u_theta)^2] dw dtheta`.
pub fn energy(metric: &ConeMetric, field: &ScalarField) -> Result<f64> {
    metric.background().check_same_grid(field)?;
    let g = field.grid();
    let b1 = metric.chart.beta + 1.0;
    let dw = d_w(field);
    let dt = d_theta(field);
    let mut sum = CompensatedSum::default();
    for i in 0..g.n_w {
        let wi = trapezoid_weight(i, g.n_w, g.h_w()) * g.h_theta();
        for j in 0..g.n_theta {
            let (uw, ut) = (dw.get(i, j), dt.get(i, j));
            sum.add(wi * (b1 / LN_2 * uw * uw + LN_2 / b1 * ut * ut));
        }
    }
    Ok(sum.value())
}

/// Checks `E(u(t)) <= (e^t - 1) max_s E(f(s)) + 1e-8` at every frame (needs `u0 = 0`).
pub fn check_energy_growth(problem: &HeatProblem, solution: &SpaceTimeField) -> Result<BoundReport> {
    if problem.u0.max_abs() != 0.0 {
        return Err(Error::Domain("the energy bound assumes u0 = 0".into()));
    }
    let first = problem.metric.grid().n_w - solution.grid().n_w;
    let metric = if first == 0 { problem.metric.clone() } else { problem.metric.tail_from(first)? };
    let f = problem.f.restricted(first, *metric.grid())?;
    let mut f_energy: f64 = 0.0;
    for frame in f.frames() {
        f_energy = f_energy.max(energy(&metric, frame)?);
    }
    let mut excess = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    for (t, frame) in solution.times().iter().zip(solution.frames()) {
        let e = energy(&metric, frame)? - t.exp_m1() * f_energy;
        if e > excess {
            excess = e;
            worst_time = *t;
        }
    }
    Ok(BoundReport { excess, worst_time, pass: excess <= 1e-8 })
}
