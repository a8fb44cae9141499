//! Normalized Ricci flow `g(t) = e^(2u) g0` in conformal gauge,
//!
//! ```text
//! u_t = e^(-2u) Laplacian_0 u + r/2 - e^(-2u) K0,
//! ```
//!
//! advanced in windows of length `dt`. Each window iterates the map `v -> u` that
//! freezes `v` in the coefficients and solves the linear heat problem with
//! `a = e^(-2v)` and `f = r/2 - e^(-2v) K0`.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heat::{solve_truncated, HeatProblem, SpaceTimeField};
use crate::surface::stencil::{d_theta, d_w};
use crate::surface::{area, base_gauss_curvature, gauss_bonnet_integral, integrate, ConeMetric, ScalarField};

#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub g0: ConeMetric,
    pub k0: ScalarField,
    pub r_const: f64,
    pub t_final: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Abort when `sup |u|` exceeds this.
    pub sup_guard: f64,
    /// Relative volume drift above which the trajectory is flagged.
    pub volume_drift_bound: f64,
    /// Initial conformal factor; zero unless set.
    pub u0: ScalarField,
}

impl FlowProblem {
    /// Flow from `g0` with `K0` taken from the metric (closed form if supplied) and
    /// `r = 2 int K0 dA / Vol`, the average scalar curvature.
    pub fn new(g0: ConeMetric, t_final: f64, dt: f64) -> Result<Self> {
        if !(t_final > 0.0) || !(dt > 0.0) || dt > t_final {
            return Err(Error::Domain(format!("need 0 < dt <= T, got dt = {dt}, T = {t_final}")));
        }
        let base = g0.base();
        let k0 = base_gauss_curvature(&base);
        let r_const = 2.0 * integrate(&base, &k0)? / area(&base);
        let grid = *g0.grid();
        Ok(Self {
            u0: ScalarField::zeros(grid),
            g0: base,
            k0,
            r_const,
            t_final,
            dt,
            picard_tol: 1e-10,
            picard_max: 50,
            sup_guard: 10.0,
            volume_drift_bound: 1e-3,
        })
    }

    /// Overrides the normalization constant.
    pub fn with_r_const(mut self, r_const: f64) -> Self {
        self.r_const = r_const;
        self
    }

    pub fn with_initial(mut self, u0: ScalarField) -> Result<Self> {
        self.g0.background().check_same_grid(&u0)?;
        self.u0 = u0;
        Ok(self)
    }

    fn coefficients(&self, v: &ScalarField) -> (ScalarField, ScalarField) {
        let a = v.map(|x| (-2.0 * x).exp());
        let half_r = 0.5 * self.r_const;
        let f = a.zip_with(&self.k0, |e, k| half_r - e * k).expect("same grid");
        (a, f)
    }
}

/// One application of the frozen-coefficient map on the window covered by `v`;
/// the window starts from `v(0)`.
pub fn picard_map(problem: &FlowProblem, v: &SpaceTimeField) -> Result<SpaceTimeField> {
    let window = *v.times().last().expect("never empty");
    if !(window > 0.0) {
        return Err(Error::Domain("the window must have positive length".into()));
    }
    let mut a_frames = Vec::with_capacity(v.len());
    let mut f_frames = Vec::with_capacity(v.len());
    for frame in v.frames() {
        let (a, f) = problem.coefficients(frame);
        a_frames.push(a);
        f_frames.push(f);
    }
    let heat = HeatProblem::new(
        problem.g0.clone(),
        SpaceTimeField::new(v.times().to_vec(), a_frames)?,
        SpaceTimeField::new(v.times().to_vec(), f_frames)?,
        v.frames()[0].clone(),
        window,
        window.min(problem.dt),
    )?;
    solve_truncated(&heat, problem.g0.chart.k_max)
}

/// Flux of `u` through the innermost grid circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryFlux {
    /// Line integral of `|grad u|` (independent of the conformal factor).
    pub line_integral: f64,
    /// Max over the circle of `|rho u_rho| + |u_theta|`.
    pub circle_max: f64,
}

pub fn boundary_flux(metric: &ConeMetric, u: &ScalarField) -> Result<BoundaryFlux> {
    metric.background().check_same_grid(u)?;
    let g = u.grid();
    let b1 = metric.chart.beta + 1.0;
    let uw = d_w(u);
    let ut = d_theta(u);
    let mut line = 0.0;
    let mut circle_max: f64 = 0.0;
    for j in 0..g.n_theta {
        let radial = uw.get(0, j) / LN_2;
        let angular = ut.get(0, j);
        line += (radial * radial + (angular / b1).powi(2)).sqrt() * b1 * g.h_theta();
        circle_max = circle_max.max(radial.abs() + angular.abs());
    }
    Ok(BoundaryFlux { line_integral: line, circle_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub volume: f64,
    pub gb_integral: f64,
    pub boundary_flux: f64,
    pub sup_u: f64,
    pub picard_iters: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub ledger: Vec<LedgerRow>,
    #[serde(skip)]
    pub u: SpaceTimeField,
    /// Largest ratio of successive Picard changes seen in each window.
    pub contraction: Vec<f64>,
    pub flags: Vec<String>,
}

impl FlowTrajectory {
    pub fn times(&self) -> &[f64] {
        self.u.times()
    }

    pub fn relative_volume_drift(&self) -> f64 {
        let v0 = self.ledger[0].volume;
        self.ledger.iter().map(|r| (r.volume - v0).abs() / v0).fold(0.0, f64::max)
    }

    /// Largest `|int K_t dA_t - int K_0 dA_0|` over the run.
    pub fn gauss_bonnet_drift(&self) -> f64 {
        let g0 = self.ledger[0].gb_integral;
        self.ledger.iter().map(|r| (r.gb_integral - g0).abs()).fold(0.0, f64::max)
    }

    pub fn max_sup_u(&self) -> f64 {
        self.ledger.iter().map(|r| r.sup_u).fold(0.0, f64::max)
    }
}

fn ledger_row(problem: &FlowProblem, t: f64, u: &ScalarField, picard_iters: usize) -> Result<LedgerRow> {
    let metric = problem.g0.with_conformal(u.clone())?.with_base_curvature(problem.k0.clone())?;
    Ok(LedgerRow {
        t,
        volume: area(&metric),
        gb_integral: gauss_bonnet_integral(&metric),
        boundary_flux: boundary_flux(&metric, u)?.line_integral,
        sup_u: u.max_abs(),
        picard_iters,
    })
}

pub fn run_flow(problem: &FlowProblem) -> Result<FlowTrajectory> {
    let grid = *problem.g0.grid();
    let n = ((problem.t_final / problem.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut frames = vec![problem.u0.clone()];
    let mut ledger = vec![ledger_row(problem, 0.0, &problem.u0, 0)?];
    let mut contraction = Vec::with_capacity(n);
    let mut flags = Vec::new();
    let v0 = ledger[0].volume;

    for step in 1..=n {
        let t0 = times[step - 1];
        let t1 = if step == n { problem.t_final } else { step as f64 * problem.dt };
        let h = t1 - t0;
        let u_start = frames[step - 1].clone();
        let mut v_end = u_start.clone();
        let mut iters = 0;
        let mut prev_change = f64::NAN;
        let mut worst_ratio: f64 = 0.0;
        loop {
            if iters == problem.picard_max {
                return Err(Error::Window {
                    t0,
                    reason: format!("no convergence in {} iterations", problem.picard_max),
                    residual: prev_change,
                });
            }
            let v = SpaceTimeField::new(vec![0.0, h], vec![u_start.clone(), v_end.clone()])?;
            let u = picard_map(problem, &v)?;
            let next = u.last().clone();
            let change = next.max_abs_diff(&v_end)?;
            iters += 1;
            if prev_change > 0.0 && change > 0.0 {
                worst_ratio = worst_ratio.max(change / prev_change);
            }
            prev_change = change;
            v_end = next;
            if change < problem.picard_tol {
                break;
            }
        }
        let sup = v_end.max_abs();
        if sup > problem.sup_guard {
            return Err(Error::Window {
                t0,
                reason: format!("sup |u| = {sup:.3e} exceeds the guard {}", problem.sup_guard),
                residual: prev_change,
            });
        }
        let row = ledger_row(problem, t1, &v_end, iters)?;
        let drift = (row.volume - v0).abs() / v0;
        if drift > problem.volume_drift_bound && flags.is_empty() {
            flags.push(format!("relative volume drift {drift:.3e} at t = {t1} exceeds {}", problem.volume_drift_bound));
        }
        ledger.push(row);
        contraction.push(worst_ratio);
        times.push(t1);
        frames.push(v_end);
    }
    debug_assert!(frames.iter().all(|f| f.grid().same_shape(&grid)));
    Ok(FlowTrajectory { ledger, u: SpaceTimeField::new(times, frames)?, contraction, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::{ConeChart, GridSpec};
    use crate::soliton::{export_as_cone_metric, natural_w_max, shoot_for_beta, ShootOptions};
    use std::f64::consts::PI;

    fn sphere() -> ConeMetric {
        ConeMetric::round_sphere(6, 97, 8).unwrap()
    }

    fn tear_drop(k: u32, n_w: usize) -> ConeMetric {
        let (_, p) = shoot_for_beta(1.0, 1e-8, &ShootOptions::default()).unwrap();
        let chart = ConeChart::new(1.0, k).unwrap();
        let grid = GridSpec::for_chart(&chart, natural_w_max(1.0, k), n_w, 8).unwrap();
        export_as_cone_metric(&p, grid).unwrap()
    }

    fn frozen(u: &ScalarField, h: f64) -> SpaceTimeField {
        SpaceTimeField::new(vec![0.0, h], vec![u.clone(), u.clone()]).unwrap()
    }

    #[test]
    fn auto_normalization_is_average_curvature() {
        let p = FlowProblem::new(sphere(), 0.1, 0.01).unwrap();
        assert!((p.r_const - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_curvature_is_a_fixed_point() {
        let p = FlowProblem::new(sphere(), 0.1, 0.01).unwrap();
        let g = *p.g0.grid();
        let u = picard_map(&p, &frozen(&ScalarField::zeros(g), 0.01)).unwrap();
        assert!(u.max_abs() < 1e-14);
    }

    #[test]
    fn mismatched_normalization_grows_linearly() {
        let p = FlowProblem::new(sphere(), 0.1, 0.01).unwrap().with_r_const(4.0);
        let g = *p.g0.grid();
        let u = picard_map(&p, &frozen(&ScalarField::zeros(g), 0.01)).unwrap();
        assert!(u.last().values().iter().all(|v| (v - 0.01).abs() < 1e-14));
    }

    #[test]
    fn sphere_is_stationary() {
        let p = FlowProblem::new(sphere(), 0.5, 1e-2).unwrap();
        let tr = run_flow(&p).unwrap();
        assert!(tr.max_sup_u() < 1e-8);
        assert_eq!(tr.ledger.len(), 51);
        assert!(tr.flags.is_empty());
    }

    #[test]
    fn picard_map_contracts_on_tear_drop() {
        let p = FlowProblem::new(tear_drop(6, 97), 0.1, 1e-2).unwrap();
        let g = *p.g0.grid();
        let v1 = ScalarField::zeros(g);
        let v2 = ScalarField::from_fn(g, |w, _| 0.05 * (-(w - 3.0).powi(2) / 8.0).exp());
        let s1 = SpaceTimeField::new(vec![0.0, 1e-2], vec![v1.clone(), v1.clone()]).unwrap();
        let s2 = SpaceTimeField::new(vec![0.0, 1e-2], vec![v1.clone(), v2.clone()]).unwrap();
        let u1 = picard_map(&p, &s1).unwrap();
        let u2 = picard_map(&p, &s2).unwrap();
        let q = u1.last().max_abs_diff(u2.last()).unwrap() / v1.max_abs_diff(&v2).unwrap();
        assert!(q < 1.0, "q = {q}");
    }

    #[test]
    fn volume_follows_its_ode_when_r_is_mis_set() {
        let base = FlowProblem::new(tear_drop(6, 97), 0.2, 1e-3).unwrap();
        let r_hat = 1.25 * base.r_const;
        let p = base.with_r_const(r_hat);
        let total_k = integrate(&p.g0, &p.k0).unwrap();
        let v_star = 2.0 / r_hat * total_k;
        let tr = run_flow(&p).unwrap();
        let v0 = tr.ledger[0].volume;
        for row in tr.ledger.iter().skip(1) {
            let want = (v0 - v_star) * (r_hat * row.t).exp();
            let got = row.volume - v_star;
            assert!((got / want - 1.0).abs() < 0.02, "t = {}: {got} vs {want}", row.t);
        }
    }

    #[test]
    fn picard_counts_do_not_grow_as_dt_shrinks() {
        let metric = tear_drop(6, 97);
        let mut counts = Vec::new();
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let p = FlowProblem::new(metric.clone(), 0.02, dt).unwrap();
            let tr = run_flow(&p).unwrap();
            counts.push(tr.ledger.iter().map(|r| r.picard_iters).max().unwrap());
        }
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    }

    #[test]
    fn tear_drop_conserves_volume() {
        let p = FlowProblem::new(tear_drop(6, 97), 0.05, 1e-3).unwrap();
        let tr = run_flow(&p).unwrap();
        assert!(tr.relative_volume_drift() < 1e-3);
        assert!(tr.gauss_bonnet_drift() < 1e-2 * 2.0 * PI);
        assert!(tr.max_sup_u() > 1e-6, "the soliton moves under the normalized flow");
    }

    #[test]
    fn flux_examples() {
        let m = sphere();
        let g = *m.grid();
        let flux = boundary_flux(&m, &ScalarField::constant(g, 3.0)).unwrap();
        assert_eq!((flux.line_integral, flux.circle_max), (0.0, 0.0));
        let flux = boundary_flux(&m, &ScalarField::from_fn(g, |w, _| w)).unwrap();
        assert!((flux.circle_max - 1.0 / LN_2).abs() < 1e-12);
        assert!((flux.line_integral - 2.0 * PI / LN_2).abs() < 1e-12);
        let mut maxima = Vec::new();
        for k in [4u32, 6, 8] {
            let chart = ConeChart::new(0.5, k).unwrap();
            let grid = GridSpec::with_spacing(&chart, 1.0, 16, 8).unwrap();
            let m = ConeMetric::flat_cone(chart, grid).unwrap();
            let u = ScalarField::from_fn(grid, |w, _| w.exp2());
            maxima.push(boundary_flux(&m, &u).unwrap().circle_max);
        }
        for (x, k) in maxima.iter().zip([4, 6, 8]) {
            assert!((x * 2f64.powi(k) - 1.0).abs() < 1e-2, "{maxima:?}");
        }
    }

    #[test]
    fn guard_aborts_runaway() {
        let mut p = FlowProblem::new(sphere(), 0.5, 0.05).unwrap().with_r_const(40.0);
        p.sup_guard = 0.1;
        assert!(matches!(run_flow(&p), Err(Error::Window { .. })));
    }
}
