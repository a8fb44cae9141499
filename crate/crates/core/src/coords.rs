//! Coordinates around a cone point and the dyadic annuli built on them.
//!
//! Near a cone point of order `beta` a smooth polar radius `r` is replaced by
//! `rho = r^(beta+1) / (beta+1)`, in which the flat cone metric reads
//! `d rho^2 + (beta+1)^2 rho^2 d theta^2`. The logarithmic coordinate
//! `w = log2(rho)` turns a punctured neighbourhood into a half cylinder, and
//! the annuli `Omega_k = { 2^-(k+1) < rho < 2^-(k-1) }` become the tubes
//! `(-k-1, -k+1) x S^1`.

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_order(beta: f64) -> Result<()> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("cone order must exceed -1, got {beta}")));
    }
    Ok(())
}

/// `rho = r^(beta+1) / (beta+1)`.
pub fn rho_of_r(r: f64, beta: f64) -> Result<f64> {
    check_order(beta)?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be non-negative, got {r}")));
    }
    let p = beta + 1.0;
    Ok(r.powf(p) / p)
}

/// Inverse of [`rho_of_r`].
pub fn r_of_rho(rho: f64, beta: f64) -> Result<f64> {
    check_order(beta)?;
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("rho must be non-negative, got {rho}")));
    }
    let p = beta + 1.0;
    Ok((p * rho).powf(1.0 / p))
}

/// `w = log2(rho)`; exact on powers of two.
pub fn w_of_rho(rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    Ok(rho.log2())
}

/// One dyadic annulus containing a given `rho`, with the rescaled radius `s = 2^k rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusHit {
    pub k: i32,
    pub s: f64,
}

/// Annuli `Omega_k` (open intervals, `k >= 1`) that contain `rho`.
///
/// Annuli overlap, so an interior point belongs to two of them; a dyadic point
/// `2^-k` belongs only to `Omega_k`, where it sits at `s = 1`. The chart edge
/// `rho = 1` lies outside every `Omega_k` with `k >= 1` and is reported as
/// `k = 0, s = 1`.
pub fn annulus_of(rho: f64) -> Result<Vec<AnnulusHit>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0, 1], got {rho}")));
    }
    if rho == 1.0 {
        return Ok(vec![AnnulusHit { k: 0, s: 1.0 }]);
    }
    let w = rho.log2();
    let k_lo = (-w).floor() as i32 - 1;
    let mut hits = Vec::with_capacity(2);
    for k in k_lo.max(1)..=k_lo + 3 {
        // s = 2^k rho is exact in binary floating point.
        let s = rho * 2f64.powi(k);
        if s > 0.5 && s < 2.0 {
            hits.push(AnnulusHit { k, s });
        }
    }
    Ok(hits)
}

/// The set of cone points with their orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divisor {
    entries: Vec<(String, f64)>,
}

impl Divisor {
    pub const MAX_POINTS: usize = 2;

    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.len() > Self::MAX_POINTS {
            return Err(Error::Domain(format!(
                "at most {} cone points are supported, got {}",
                Self::MAX_POINTS,
                entries.len()
            )));
        }
        let mut seen = HashSet::new();
        for (label, beta) in &entries {
            check_order(*beta)?;
            if !seen.insert(label.as_str()) {
                return Err(Error::Domain(format!("duplicate cone point label {label:?}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn total_order(&self) -> f64 {
        self.entries.iter().map(|(_, b)| b).sum()
    }

    /// Cone angle `2 pi (beta + 1)` of entry `i`.
    pub fn cone_angle(&self, i: usize) -> Option<f64> {
        self.entries.get(i).map(|(_, b)| 2.0 * PI * (b + 1.0))
    }
}

/// Coordinate stack `r <-> rho <-> w <-> s` for a single cone point, truncated at `rho = 2^-k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeChart {
    pub beta: f64,
    pub k_max: u32,
}

impl ConeChart {
    pub fn new(beta: f64, k_max: u32) -> Result<Self> {
        check_order(beta)?;
        if k_max < 1 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        if k_max > 1000 {
            return Err(Error::Domain(format!("k_max = {k_max} is not representable")));
        }
        Ok(Self { beta, k_max })
    }

    pub fn rho_cut(&self) -> f64 {
        2f64.powi(-(self.k_max as i32))
    }

    /// `sigma = -1 / (beta + 1)`, the exponent in `r = r_tilde^sigma` at a cone end placed at infinity.
    pub fn sigma(&self) -> f64 {
        -1.0 / (self.beta + 1.0)
    }

    pub fn cone_angle(&self) -> f64 {
        2.0 * PI * (self.beta + 1.0)
    }

    pub fn w_min(&self) -> f64 {
        -(self.k_max as f64)
    }
}

/// Uniform sampling of the `(w, theta)` cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub w_min: f64,
    pub w_max: f64,
    pub n_w: usize,
    pub n_theta: usize,
}

impl GridSpec {
    pub const MIN_SAMPLES: usize = 8;

    pub fn new(w_min: f64, w_max: f64, n_w: usize, n_theta: usize) -> Result<Self> {
        if n_w < Self::MIN_SAMPLES || n_theta < Self::MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "grid needs at least {} samples per direction, got n_w = {n_w}, n_theta = {n_theta}",
                Self::MIN_SAMPLES
            )));
        }
        if !(w_min < 0.0) || !(w_max > w_min) || !w_max.is_finite() {
            return Err(Error::Domain(format!("bad w range [{w_min}, {w_max}]")));
        }
        Ok(Self { w_min, w_max, n_w, n_theta })
    }

    /// Grid for a chart: `w_min = -k_max`.
    pub fn for_chart(chart: &ConeChart, w_max: f64, n_w: usize, n_theta: usize) -> Result<Self> {
        Self::new(chart.w_min(), w_max, n_w, n_theta)
    }

    /// Grid on `[-k_max, w_max]` whose spacing is exactly `1 / per_unit`, so that every
    /// integer level `w = -k` is a node. `w_max + k_max` must be a multiple of the spacing.
    pub fn with_spacing(chart: &ConeChart, w_max: f64, per_unit: usize, n_theta: usize) -> Result<Self> {
        let span = w_max - chart.w_min();
        let cells = span * per_unit as f64;
        if (cells - cells.round()).abs() > 1e-9 {
            return Err(Error::Domain(format!("span {span} is not a multiple of 1/{per_unit}")));
        }
        Self::for_chart(chart, w_max, cells.round() as usize + 1, n_theta)
    }

    pub fn len(&self) -> usize {
        self.n_w * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_w(&self) -> f64 {
        (self.w_max - self.w_min) / (self.n_w - 1) as f64
    }

    pub fn h_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn w(&self, i: usize) -> f64 {
        if i + 1 == self.n_w {
            self.w_max
        } else {
            self.w_min + i as f64 * self.h_w()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.h_theta()
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.w(i).exp2()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Row index of the node at `w`, if `w` is (to rounding) a grid node.
    pub fn row_of(&self, w: f64) -> Option<usize> {
        let x = (w - self.w_min) / self.h_w();
        let i = x.round();
        if (x - i).abs() < 1e-7 && i >= 0.0 && (i as usize) < self.n_w {
            Some(i as usize)
        } else {
            None
        }
    }

    /// The sub-grid made of rows `first..n_w`.
    pub fn tail_from(&self, first: usize) -> Result<Self> {
        if first + Self::MIN_SAMPLES > self.n_w {
            return Err(Error::Domain(format!(
                "truncation at row {first} leaves fewer than {} rows",
                Self::MIN_SAMPLES
            )));
        }
        Ok(Self { w_min: self.w(first), w_max: self.w_max, n_w: self.n_w - first, n_theta: self.n_theta })
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.n_w == other.n_w
            && self.n_theta == other.n_theta
            && (self.w_min - other.w_min).abs() <= 1e-12 * (1.0 + self.w_min.abs())
            && (self.w_max - other.w_max).abs() <= 1e-12 * (1.0 + self.w_max.abs())
    }
}

/// Distance on the circle of circumference `2 pi`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
