use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::coords::{ConeChart, GridSpec};
use crate::error::{Error, Result};
use crate::surface::{ConeMetric, ScalarField};

use super::{shoot_for_beta, ShootOptions, SolitonProfile};

/// Two cone points of orders `beta1` (at `r = infinity`) and `beta2` (at `r = 0`),
/// obtained from the profile of order `lambda` by rescaling `theta` by `beta2 + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootballMetric {
    pub beta1: f64,
    pub beta2: f64,
    pub lambda: f64,
    pub c: f64,
    pub angular_factor: f64,
    #[serde(skip)]
    pub base: SolitonProfile,
}

impl FootballMetric {
    /// Cone angles at `r = infinity` and at `r = 0`.
    pub fn angles(&self) -> [f64; 2] {
        [2.0 * PI * (-self.base.a_limit - 1.0) * self.angular_factor, 2.0 * PI * self.angular_factor]
    }

    pub fn area(&self) -> f64 {
        self.angular_factor * self.base.area
    }

    /// `chi + beta1 + beta2`.
    pub fn euler(&self) -> f64 {
        2.0 + self.beta1 + self.beta2
    }
}

pub fn construct_football(beta1: f64, beta2: f64, tol_beta: f64, opts: &ShootOptions) -> Result<FootballMetric> {
    for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
        if !(b > -1.0) || !b.is_finite() {
            return Err(Error::Domain(format!("{name} must exceed -1, got {b}")));
        }
    }
    let lambda = (beta1 + 1.0) / (beta2 + 1.0) - 1.0;
    let (c, base) = shoot_for_beta(lambda, tol_beta, opts)?;
    Ok(FootballMetric { beta1, beta2, lambda, c, angular_factor: beta2 + 1.0, base })
}

/// Something that can be resampled as a [`ConeMetric`].
#[derive(Debug, Clone, Copy)]
pub enum ExportSource<'a> {
    Profile(&'a SolitonProfile),
    Football(&'a FootballMetric),
}

impl<'a> From<&'a SolitonProfile> for ExportSource<'a> {
    fn from(p: &'a SolitonProfile) -> Self {
        Self::Profile(p)
    }
}

impl<'a> From<&'a FootballMetric> for ExportSource<'a> {
    fn from(f: &'a FootballMetric) -> Self {
        Self::Football(f)
    }
}

impl ExportSource<'_> {
    fn profile(&self) -> &SolitonProfile {
        match self {
            Self::Profile(p) => p,
            Self::Football(f) => &f.base,
        }
    }

    /// `(order of the profile, chart order at r = infinity, theta factor, euler)`.
    fn shape(&self) -> (f64, f64, f64, f64) {
        match self {
            Self::Profile(p) => {
                let order = p.cone_order();
                (order, order, 1.0, 2.0 + order)
            }
            Self::Football(f) => (f.lambda, f.beta1, f.angular_factor, f.euler()),
        }
    }

    /// Order of the cone at the `r = infinity` end.
    pub fn chart_order(&self) -> f64 {
        self.shape().1
    }

    /// `w` at which the exported cylinder reaches `r = 2^-k` at the `r = 0` end.
    pub fn natural_w_max(&self, k: u32) -> f64 {
        natural_w_max(self.shape().0, k)
    }
}

/// With `r = rho^sigma`, `sigma = -1/(lambda+1)`, the radius `r = 2^-k` sits at `w = k (lambda + 1)`.
pub fn natural_w_max(lambda: f64, k: u32) -> f64 {
    k as f64 * (lambda + 1.0)
}

/// Resamples the profile on the cylinder grid with the cone end `r = infinity` at `w -> -infinity`.
///
/// With `r = rho^sigma` the metric `e^(2u)(dr^2 + gamma^2 r^2 d theta^2)` becomes
/// `e^(2 wt)(d rho^2 + (beta+1)^2 rho^2 d theta^2)` with `wt = u(r) + ln|sigma| + (sigma-1) ln rho`.
/// The conformal factor is zero and the base curvature is the profile's `K`.
pub fn export_as_cone_metric<'a>(source: impl Into<ExportSource<'a>>, grid: GridSpec) -> Result<ConeMetric> {
    let source = source.into();
    let profile = source.profile();
    let (order, chart_beta, _, euler) = source.shape();
    if !(order > -1.0) {
        return Err(Error::Domain(format!("profile order {order} does not describe a cone")));
    }
    let k = -grid.w_min;
    if (k - k.round()).abs() > 1e-9 || k < 1.0 {
        return Err(Error::Domain(format!("grid must start at w = -k for an integer k, got {}", grid.w_min)));
    }
    let chart = ConeChart::new(chart_beta, k.round() as u32)?;
    let sigma = -1.0 / (order + 1.0);
    let r_needed = (sigma * grid.w_min).exp2();
    if r_needed > profile.r_stop {
        return Err(Error::Range(format!(
            "grid reaches r = {r_needed:.6e} but the profile stops at r = {:.6e}",
            profile.r_stop
        )));
    }

    let mut bg = Vec::with_capacity(grid.len());
    let mut k0 = Vec::with_capacity(grid.len());
    for i in 0..grid.n_w {
        let w = grid.w(i);
        let r = (sigma * w).exp2();
        let s = profile.state_at(r)?;
        let wt = s.u + sigma.abs().ln() + (sigma - 1.0) * w * LN_2;
        let curvature = profile.curvature(&s);
        for _ in 0..grid.n_theta {
            bg.push(wt);
            k0.push(curvature);
        }
    }
    let background = ScalarField::new(grid, bg)?;
    ConeMetric::new(chart, background, ScalarField::zeros(grid), euler)?
        .with_base_curvature(ScalarField::new(grid, k0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::integrate_profile;
    use crate::surface::{area, gauss_bonnet_defect, gauss_curvature, integrate};

    #[test]
    fn football_orders() {
        let opts = ShootOptions::default();
        let f = construct_football(1.0, 0.0, 1e-7, &opts).unwrap();
        assert_eq!(f.lambda, 1.0);
        let [a1, a2] = f.angles();
        assert!((a1 - 4.0 * PI).abs() < 1e-5 && (a2 - 2.0 * PI).abs() < 1e-12);

        let f = construct_football(0.0, 1.0, 1e-7, &opts).unwrap();
        assert_eq!(f.lambda, -0.5);
        assert!((f.base.a_limit + 1.5).abs() < 1e-6);
        let [a1, a2] = f.angles();
        assert!((a1 - 2.0 * PI).abs() < 1e-5 && (a2 - 4.0 * PI).abs() < 1e-12);

        let f = construct_football(0.5, 0.5, 1e-7, &opts).unwrap();
        assert!(f.lambda.abs() < 1e-15 && f.c.abs() < 1e-4);
        assert!((f.area() - 1.5 * 4.0 * PI).abs() < 1e-4);
    }

    #[test]
    fn sphere_export_matches_round_sphere() {
        let p = integrate_profile(0.0, 1e6, 1e-12, 1e-10).unwrap();
        let chart = ConeChart::new(0.0, 6).unwrap();
        let grid = GridSpec::for_chart(&chart, 6.0, 193, 16).unwrap();
        let m = export_as_cone_metric(&p, grid).unwrap();
        // round sphere in rho: wt = ln(4 / (1 + 4 rho^2))
        for i in 0..grid.n_w {
            let rho = grid.rho(i);
            let want = (4.0 / (1.0 + 4.0 * rho * rho)).ln();
            assert!((m.background().get(i, 0) - want).abs() < 1e-7, "row {i}");
        }
        let k = gauss_curvature(&m);
        let base = m.base_curvature().unwrap();
        assert!(k.max_abs_diff(base).unwrap() < 5e-2);
        assert!((area(&m) - 4.0 * PI).abs() < 0.005 * 4.0 * PI);
        let total = integrate(&m, base).unwrap();
        assert!((total - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
    }

    #[test]
    fn tear_drop_defect_shrinks_with_truncation() {
        let (_, p) = shoot_for_beta(1.0, 1e-7, &ShootOptions::default()).unwrap();
        let mut defects = Vec::new();
        for k in [6u32, 8, 10] {
            let chart = ConeChart::new(1.0, k).unwrap();
            let w_max = natural_w_max(1.0, k);
            let grid = GridSpec::with_spacing(&chart, w_max, 16, 16).unwrap();
            let m = export_as_cone_metric(&p, grid).unwrap();
            defects.push(gauss_bonnet_defect(&m).abs());
            if k >= 8 {
                let a = area(&m);
                assert!((a - p.area).abs() < 0.005 * p.area, "k = {k}: {a} vs {}", p.area);
            }
        }
        assert!(defects[1] < defects[0] && defects[2] < defects[1], "{defects:?}");
    }

    #[test]
    fn export_rejects_uncovered_grid() {
        let p = integrate_profile(0.0, 10.0, 1e-12, 1e-10).unwrap();
        let chart = ConeChart::new(0.0, 8).unwrap();
        let grid = GridSpec::for_chart(&chart, 8.0, 65, 8).unwrap();
        assert!(matches!(export_as_cone_metric(&p, grid), Err(Error::Range(_))));
    }
}
