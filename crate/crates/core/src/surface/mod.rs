//! Sampled cone metrics on the `(w, theta)` cylinder.
//!
//! A [`ConeMetric`] is `g = e^(2u) g0` with `g0 = e^(2 wt)(d rho^2 + (beta+1)^2 rho^2 d theta^2)`,
//! where `wt` is the background factor and `u` the conformal factor. In the grid
//! coordinates `g0 = e^(2 wt) rho^2 ((ln 2)^2 dw^2 + (beta+1)^2 d theta^2)`, so
//! `dA = e^(2u + 2wt) (beta+1) rho^2 ln 2 dw d theta`.

mod field;
pub mod stencil;

use std::f64::consts::{LN_2, PI};

pub use field::ScalarField;
use stencil::{flat_operator, trapezoid_weight, Boundary, CompensatedSum};

use serde::{Deserialize, Serialize};

use crate::coords::{ConeChart, Divisor, GridSpec};
use crate::error::{Error, Result};

/// A sphere with up to two cone points, realized as one cylinder with two truncated ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    pub divisor: Divisor,
    ends: Vec<ConeChart>,
}

impl SurfaceModel {
    /// Sphere topology: every divisor entry becomes an end, and the remaining
    /// ends (up to two) are smooth poles with order zero.
    pub fn sphere(divisor: Divisor, k_max: u32) -> Result<Self> {
        let mut ends =
            divisor.entries().iter().map(|(_, beta)| ConeChart::new(*beta, k_max)).collect::<Result<Vec<_>>>()?;
        while ends.len() < 2 {
            ends.push(ConeChart::new(0.0, k_max)?);
        }
        Ok(Self { divisor, ends })
    }

    pub fn ends(&self) -> &[ConeChart] {
        &self.ends
    }

    /// `chi + sum beta_i` with `chi = 2`.
    pub fn euler(&self) -> f64 {
        2.0 + self.divisor.total_order()
    }
}

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    beta: f64,
    k_max: u32,
    w_max: f64,
    n_w: usize,
    n_theta: usize,
    euler: f64,
    background: String,
    conformal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_curvature: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeMetric {
    pub chart: ConeChart,
    background: ScalarField,
    conformal: ScalarField,
    pub euler: f64,
    base_curvature: Option<ScalarField>,
}

impl ConeMetric {
    pub fn new(chart: ConeChart, background: ScalarField, conformal: ScalarField, euler: f64) -> Result<Self> {
        background.check_same_grid(&conformal)?;
        let g = background.grid();
        if (g.w_min - chart.w_min()).abs() > 1e-12 {
            return Err(Error::Shape(format!(
                "grid starts at w = {} but the chart is truncated at w = {}",
                g.w_min,
                chart.w_min()
            )));
        }
        Ok(Self { chart, background, conformal, euler, base_curvature: None })
    }

    /// The exact flat cone `d rho^2 + (beta+1)^2 rho^2 d theta^2`.
    pub fn flat_cone(chart: ConeChart, grid: GridSpec) -> Result<Self> {
        Self::new(chart, ScalarField::zeros(grid), ScalarField::zeros(grid), 2.0 + chart.beta)
            .map(|m| m.with_base_curvature_unchecked(ScalarField::zeros(grid)))
    }

    /// The unit round sphere, `wt = ln(4 / (4 + rho^2))` with `beta = 0`, on `[-k_max, k_max]`.
    pub fn round_sphere(k_max: u32, n_w: usize, n_theta: usize) -> Result<Self> {
        let chart = ConeChart::new(0.0, k_max)?;
        let grid = GridSpec::for_chart(&chart, k_max as f64, n_w, n_theta)?;
        let bg = ScalarField::from_fn(grid, |w, _| {
            let rho2 = (2.0 * w).exp2();
            (4.0 / (4.0 + rho2)).ln()
        });
        let metric = Self::new(chart, bg, ScalarField::zeros(grid), 2.0)?;
        Ok(metric.with_base_curvature_unchecked(ScalarField::constant(grid, 1.0)))
    }

    pub fn grid(&self) -> &GridSpec {
        self.background.grid()
    }

    pub fn background(&self) -> &ScalarField {
        &self.background
    }

    pub fn conformal(&self) -> &ScalarField {
        &self.conformal
    }

    /// Gauss curvature of `g0`, if supplied in closed form.
    pub fn base_curvature(&self) -> Option<&ScalarField> {
        self.base_curvature.as_ref()
    }

    pub fn with_base_curvature(mut self, k0: ScalarField) -> Result<Self> {
        self.background.check_same_grid(&k0)?;
        self.base_curvature = Some(k0);
        Ok(self)
    }

    fn with_base_curvature_unchecked(mut self, k0: ScalarField) -> Self {
        self.base_curvature = Some(k0);
        self
    }

    /// JSON with the chart, grid shape, `euler` and the fields as embedded CSV text.
    pub fn to_json(&self) -> Result<String> {
        let g = self.grid();
        let doc = MetricDoc {
            beta: self.chart.beta,
            k_max: self.chart.k_max,
            w_max: g.w_max,
            n_w: g.n_w,
            n_theta: g.n_theta,
            euler: self.euler,
            background: self.background.to_csv(),
            conformal: self.conformal.to_csv(),
            base_curvature: self.base_curvature.as_ref().map(ScalarField::to_csv),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MetricDoc = serde_json::from_str(text)?;
        let chart = ConeChart::new(doc.beta, doc.k_max)?;
        let grid = GridSpec::for_chart(&chart, doc.w_max, doc.n_w, doc.n_theta)?;
        let field = |csv: &str| -> Result<ScalarField> {
            let f = ScalarField::from_csv(csv)?;
            if !f.grid().same_shape(&grid) {
                return Err(Error::Shape("embedded field does not match the declared grid".into()));
            }
            ScalarField::new(grid, f.into_values())
        };
        let metric = Self::new(chart, field(&doc.background)?, field(&doc.conformal)?, doc.euler)?;
        match doc.base_curvature {
            Some(k0) => metric.with_base_curvature(field(&k0)?),
            None => Ok(metric),
        }
    }

    /// Same background, new conformal factor.
    pub fn with_conformal(&self, u: ScalarField) -> Result<Self> {
        self.background.check_same_grid(&u)?;
        Ok(Self { conformal: u, ..self.clone() })
    }

    /// The background metric `g0` (conformal factor reset to zero).
    pub fn base(&self) -> Self {
        Self { conformal: ScalarField::zeros(*self.grid()), ..self.clone() }
    }

    /// Restriction to rows `first..n_w`; the chart is re-truncated accordingly.
    pub fn tail_from(&self, first: usize) -> Result<Self> {
        let background = self.background.tail_from(first)?;
        let w_min = background.grid().w_min;
        let k = -w_min;
        if (k - k.round()).abs() > 1e-9 || k < 1.0 {
            return Err(Error::Domain(format!("truncation level w = {w_min} is not -k for an integer k >= 1")));
        }
        let chart = ConeChart::new(self.chart.beta, k.round() as u32)?;
        let mut grid = *background.grid();
        grid.w_min = -k.round();
        let background = ScalarField::new(grid, background.into_values())?;
        let conformal = ScalarField::new(grid, self.conformal.tail_from(first)?.into_values())?;
        let base_curvature = match &self.base_curvature {
            Some(k0) => Some(ScalarField::new(grid, k0.tail_from(first)?.into_values())?),
            None => None,
        };
        Ok(Self { chart, background, conformal, euler: self.euler, base_curvature })
    }

    fn check_field(&self, field: &ScalarField) -> Result<()> {
        self.background.check_same_grid(field)
    }

    /// `e^(-2 wt) rho^-2`: the factor turning the flat operator into `Laplacian_{g0}`.
    fn base_scale(&self) -> Vec<f64> {
        let g = self.grid();
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_w {
            let rho2 = (2.0 * g.w(i)).exp2();
            for j in 0..g.n_theta {
                out.push((-2.0 * self.background.get(i, j)).exp() / rho2);
            }
        }
        out
    }

    /// Area density `e^(2u + 2wt) rho^2` (without the constant `(beta+1) ln 2`).
    pub fn density(&self) -> Vec<f64> {
        let g = self.grid();
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_w {
            let rho2 = (2.0 * g.w(i)).exp2();
            for j in 0..g.n_theta {
                out.push((2.0 * (self.background.get(i, j) + self.conformal.get(i, j))).exp() * rho2);
            }
        }
        out
    }

    /// Quadrature weights for `dA_g`: trapezoid in `w`, rectangle rule in `theta`.
    pub fn area_weights(&self) -> Vec<f64> {
        let g = self.grid();
        let c = (self.chart.beta + 1.0) * LN_2 * g.h_theta();
        let density = self.density();
        let mut out = Vec::with_capacity(g.len());
        for i in 0..g.n_w {
            let wi = trapezoid_weight(i, g.n_w, g.h_w());
            for j in 0..g.n_theta {
                out.push(c * wi * density[g.index(i, j)]);
            }
        }
        out
    }
}

/// `Laplacian_g(field)` with one-sided second-order stencils on the two boundary rows.
pub fn cone_laplacian(metric: &ConeMetric, field: &ScalarField) -> Result<ScalarField> {
    metric.check_field(field)?;
    let flat = flat_operator(field, metric.chart.beta, Boundary::OneSided);
    let scale = metric.base_scale();
    let u = metric.conformal.values();
    let values = flat.iter().zip(&scale).zip(u).map(|((l, s), u)| (-2.0 * u).exp() * (s * l)).collect();
    ScalarField::new(*metric.grid(), values)
}

/// Gauss curvature of the background `g0`: the supplied field, or `-Laplacian_flat(wt) e^(-2 wt)`.
pub fn base_gauss_curvature(metric: &ConeMetric) -> ScalarField {
    if let Some(k0) = &metric.base_curvature {
        return k0.clone();
    }
    let flat = flat_operator(&metric.background, metric.chart.beta, Boundary::OneSided);
    let scale = metric.base_scale();
    let values = flat.iter().zip(&scale).map(|(l, s)| -s * l).collect();
    ScalarField::new(*metric.grid(), values).expect("curvature of a finite background")
}

/// `K = e^(-2u)(-Laplacian_{g0} u + K0)`.
pub fn gauss_curvature(metric: &ConeMetric) -> ScalarField {
    let k0 = base_gauss_curvature(metric);
    let base = metric.base();
    let lap0 = cone_laplacian(&base, &metric.conformal).expect("same grid");
    let values = lap0
        .values()
        .iter()
        .zip(k0.values())
        .zip(metric.conformal.values())
        .map(|((l, k), u)| (-2.0 * u).exp() * (k - l))
        .collect();
    ScalarField::new(*metric.grid(), values).expect("finite curvature")
}

/// Scalar curvature `R = 2K`.
pub fn scalar_curvature(metric: &ConeMetric) -> ScalarField {
    gauss_curvature(metric).scaled(2.0)
}

/// `integral of field dA_g` over the truncated surface, summed w-major with compensation.
pub fn integrate(metric: &ConeMetric, field: &ScalarField) -> Result<f64> {
    metric.check_field(field)?;
    let weights = metric.area_weights();
    let mut sum = CompensatedSum::default();
    for (wgt, v) in weights.iter().zip(field.values()) {
        sum.add(wgt * v);
    }
    Ok(sum.value())
}

pub fn area(metric: &ConeMetric) -> f64 {
    let weights = metric.area_weights();
    let mut sum = CompensatedSum::default();
    for w in weights {
        sum.add(w);
    }
    sum.value()
}

/// `integral of K dA`.
pub fn gauss_bonnet_integral(metric: &ConeMetric) -> f64 {
    integrate(metric, &gauss_curvature(metric)).expect("same grid")
}

/// `integral of K dA - 2 pi chi~`; tends to zero as the truncation deepens.
pub fn gauss_bonnet_defect(metric: &ConeMetric) -> f64 {
    gauss_bonnet_integral(metric) - 2.0 * PI * metric.euler
}
