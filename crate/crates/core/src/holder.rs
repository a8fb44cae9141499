//! Weighted Hölder norms on dyadic annuli.
//!
//! The annulus `Omega_k = {2^(-k-1) < rho < 2^(-k+1)}` is the tube `-k-1 < w < -k+1`,
//! rescaled by `s = 2^k rho = 2^(w+k)` to `1/2 < s < 2`. The `C^{l,alpha}` norm there is
//! the sum of sups of all `(s, theta)` derivatives up to order `l` plus the Hölder
//! quotients of the order-`l` derivatives, sampled over all pairs of grid nodes.
//! Derivatives are taken in `w` and converted with `d/ds = d/dw / (s ln 2)`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::coords::{angular_distance, GridSpec};
use crate::error::{Error, Result};
use crate::heat::SpaceTimeField;
use crate::surface::stencil::{d_theta, d_thth, d_w, d_ww};
use crate::surface::ScalarField;

/// Fewest radial samples accepted inside one annulus.
pub const MIN_RADIAL_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderSpec {
    pub l: u8,
    pub alpha: f64,
}

impl HolderSpec {
    pub fn new(l: u8, alpha: f64) -> Result<Self> {
        if l > 2 {
            return Err(Error::Domain(format!("derivative order {l} exceeds 2")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie strictly inside (0, 1)")));
        }
        Ok(Self { l, alpha })
    }
}

/// Sampling options for the pairwise quotients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderOptions {
    /// Use every `stride`-th node in each direction (1 = all pairs).
    pub stride: usize,
    /// Include the band `w >= -2` measured with [`cylinder_norm`].
    pub smooth_band: bool,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self { stride: 1, smooth_band: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusNorm {
    pub k: i32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub total: f64,
    pub parts: Vec<AnnulusNorm>,
    /// Annulus attaining the largest part.
    pub saturating_k: Option<i32>,
    /// Norm of the band `w >= -2`, if measured.
    pub smooth: Option<f64>,
    /// Set when the deepest parts keep growing at a non-decaying rate.
    pub unbounded_trend: bool,
    /// Largest jump of a sampled quantity between neighbouring nodes; the continuum
    /// sups can exceed the sampled ones by about this much.
    pub slack: f64,
}

impl NormReport {
    fn assemble(parts: Vec<AnnulusNorm>, smooth: Option<f64>, slack: f64) -> Self {
        let best = parts.iter().copied().fold(None::<AnnulusNorm>, |acc, p| match acc {
            Some(a) if a.value >= p.value => Some(a),
            _ => Some(p),
        });
        let total = parts.iter().map(|p| p.value).chain(smooth).fold(0.0, f64::max);
        let n = parts.len();
        let unbounded_trend = n >= 4 && {
            let inc: Vec<f64> = parts[n - 4..].windows(2).map(|w| w[1].value - w[0].value).collect();
            inc.iter().all(|&d| d > 0.0) && inc[2] >= 0.5 * inc[0]
        };
        Self { total, parts, saturating_k: best.map(|p| p.k), smooth, unbounded_trend, slack }
    }
}

/// Derivatives of a field in `(w, theta)`.
struct Jets {
    f: ScalarField,
    fw: ScalarField,
    ft: ScalarField,
    fww: ScalarField,
    fwt: ScalarField,
    ftt: ScalarField,
}

impl Jets {
    fn new(field: &ScalarField, l: u8) -> Self {
        let g = *field.grid();
        let zero = || ScalarField::zeros(g);
        if l == 0 {
            return Self { f: field.clone(), fw: zero(), ft: zero(), fww: zero(), fwt: zero(), ftt: zero() };
        }
        let fw = d_w(field);
        let ft = d_theta(field);
        let (fww, fwt, ftt) =
            if l == 2 { (d_ww(field), d_theta(&fw), d_thth(field)) } else { (zero(), zero(), zero()) };
        Self { f: field.clone(), fw, ft, fww, fwt, ftt }
    }

    /// Derivative values at node `(i, j)`: lower orders first, then the top order.
    /// `rescale` selects `(s, theta)` derivatives at `s`, otherwise `(w, theta)` ones.
    fn at(&self, i: usize, j: usize, l: u8, rescale: Option<f64>) -> (Vec<f64>, Vec<f64>) {
        let f = self.f.get(i, j);
        if l == 0 {
            return (vec![], vec![f]);
        }
        let (fw, ft) = (self.fw.get(i, j), self.ft.get(i, j));
        let (d1, c) = match rescale {
            Some(s) => (1.0 / (s * LN_2), true),
            None => (1.0, false),
        };
        let first = [fw * d1, ft];
        if l == 1 {
            return (vec![f], first.to_vec());
        }
        let fww = self.fww.get(i, j);
        let second = if c {
            [(fww - LN_2 * fw) * d1 * d1, self.fwt.get(i, j) * d1, self.ftt.get(i, j)]
        } else {
            [fww, self.fwt.get(i, j), self.ftt.get(i, j)]
        };
        (vec![f, first[0], first[1]], second.to_vec())
    }
}

/// A sampled node: position `(x, theta, time)` and the derivative values.
struct Node {
    x: f64,
    theta: f64,
    t: f64,
    lower: Vec<f64>,
    top: Vec<f64>,
}

fn rows_in(grid: &GridSpec, lo: f64, hi: f64, open: bool) -> Vec<usize> {
    let eps = 1e-9 * grid.h_w();
    (0..grid.n_w)
        .filter(|&i| {
            let w = grid.w(i);
            if open {
                w > lo + eps && w < hi - eps
            } else {
                w >= lo - eps && w <= hi + eps
            }
        })
        .collect()
}

/// `sum sup|D f| + sum sup |D f(X) - D f(Y)| / d(X, Y)^alpha`, over the given nodes.
fn norm_of_nodes(nodes: &[Node], alpha: f64, dist: impl Fn(&Node, &Node) -> f64 + Sync) -> f64 {
    let Some(first) = nodes.first() else { return 0.0 };
    let (nl, nt) = (first.lower.len(), first.top.len());
    let mut total = 0.0;
    for c in 0..nl {
        total += nodes.iter().map(|n| n.lower[c].abs()).fold(0.0, f64::max);
    }
    for c in 0..nt {
        total += nodes.iter().map(|n| n.top[c].abs()).fold(0.0, f64::max);
    }
    let quotients: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let mut best = vec![0.0f64; nt];
            let a = &nodes[i];
            for b in &nodes[i + 1..] {
                let d = dist(a, b);
                if d > 0.0 {
                    let scale = d.powf(-alpha);
                    for ((q, x), y) in best.iter_mut().zip(&a.top).zip(&b.top) {
                        *q = q.max((x - y).abs() * scale);
                    }
                }
            }
            best
        })
        .reduce(|| vec![0.0; nt], |x, y| x.iter().zip(&y).map(|(p, q)| p.max(*q)).collect());
    total + quotients.iter().sum::<f64>()
}

fn slack_of_nodes(grid: &GridSpec, jets: &Jets, rows: &[usize], l: u8, rescale: impl Fn(usize) -> Option<f64>) -> f64 {
    let mut slack: f64 = 0.0;
    for (a, &i) in rows.iter().enumerate() {
        for j in 0..grid.n_theta {
            let (lo, top) = jets.at(i, j, l, rescale(i));
            let jn = (j + 1) % grid.n_theta;
            let mut neighbours = vec![jets.at(i, jn, l, rescale(i))];
            if let Some(&i2) = rows.get(a + 1) {
                neighbours.push(jets.at(i2, j, l, rescale(i2)));
            }
            for (nlo, ntop) in neighbours {
                for (x, y) in lo.iter().chain(&top).zip(nlo.iter().chain(&ntop)) {
                    slack = slack.max((x - y).abs());
                }
            }
        }
    }
    slack
}

fn check_rows(k: i32, rows: &[usize]) -> Result<()> {
    if rows.len() < MIN_RADIAL_SAMPLES {
        return Err(Error::Resolution { k, samples: rows.len(), required: MIN_RADIAL_SAMPLES });
    }
    Ok(())
}

/// Annuli `k >= 1` whose whole tube lies inside the grid.
fn annuli(grid: &GridSpec) -> Vec<i32> {
    let eps = 1e-9;
    (1..=((-grid.w_min).floor() as i32))
        .filter(|&k| -(k as f64) - 1.0 >= grid.w_min - eps && -(k as f64) + 1.0 <= grid.w_max + eps)
        .collect()
}

fn strided(rows: Vec<usize>, stride: usize) -> Vec<usize> {
    rows.into_iter().step_by(stride.max(1)).collect()
}

fn annulus_norm(
    field: &ScalarField,
    jets: &Jets,
    k: i32,
    spec: HolderSpec,
    opts: &HolderOptions,
) -> Result<(f64, f64)> {
    let g = field.grid();
    let rows = rows_in(g, -(k as f64) - 1.0, -(k as f64) + 1.0, true);
    check_rows(k, &rows)?;
    let rows = strided(rows, opts.stride);
    let s_of = |i: usize| (g.w(i) + k as f64).exp2();
    let mut nodes = Vec::new();
    for &i in &rows {
        for j in (0..g.n_theta).step_by(opts.stride.max(1)) {
            let (lower, top) = jets.at(i, j, spec.l, Some(s_of(i)));
            nodes.push(Node { x: s_of(i), theta: g.theta(j), t: 0.0, lower, top });
        }
    }
    let value = norm_of_nodes(&nodes, spec.alpha, |a, b| {
        let dth = angular_distance(a.theta, b.theta);
        ((a.x - b.x).powi(2) + dth * dth).sqrt()
    });
    Ok((value, slack_of_nodes(g, jets, &rows, spec.l, |i| Some(s_of(i)))))
}

/// A band `lo < w < hi` (or `lo <= w <= hi` when closed), labelled `k` in errors.
struct Tube {
    lo: f64,
    hi: f64,
    open: bool,
    k: i32,
}

fn tube_norm(field: &ScalarField, jets: &Jets, tube: Tube, spec: HolderSpec, stride: usize) -> Result<(f64, f64)> {
    let g = field.grid();
    let rows = rows_in(g, tube.lo, tube.hi, tube.open);
    check_rows(tube.k, &rows)?;
    let rows = strided(rows, stride);
    let mut nodes = Vec::new();
    for &i in &rows {
        for j in (0..g.n_theta).step_by(stride.max(1)) {
            let (lower, top) = jets.at(i, j, spec.l, None);
            nodes.push(Node { x: g.w(i), theta: g.theta(j), t: 0.0, lower, top });
        }
    }
    let value = norm_of_nodes(&nodes, spec.alpha, |a, b| {
        let dth = angular_distance(a.theta, b.theta);
        ((a.x - b.x).powi(2) + dth * dth).sqrt()
    });
    Ok((value, slack_of_nodes(g, jets, &rows, spec.l, |_| None)))
}

/// Per-annulus norms of `field` for every annulus inside the grid, plus the band `w >= -2`.
pub fn weighted_holder_norm(field: &ScalarField, spec: HolderSpec, opts: &HolderOptions) -> Result<NormReport> {
    let g = *field.grid();
    let jets = Jets::new(field, spec.l);
    let results = annuli(&g)
        .into_par_iter()
        .map(|k| annulus_norm(field, &jets, k, spec, opts).map(|(v, s)| (AnnulusNorm { k, value: v }, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut slack = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let parts = results.into_iter().map(|r| r.0).collect();
    let smooth = if opts.smooth_band && g.w_max > -2.0 {
        let (v, s) = tube_norm(field, &jets, Tube { lo: -2.0, hi: g.w_max, open: false, k: 0 }, spec, opts.stride)?;
        slack = slack.max(s);
        Some(v)
    } else {
        None
    };
    Ok(NormReport::assemble(parts, smooth, slack))
}

/// The same norm on the tube `-k-1 < w < -k+1` measured in `(w, theta)` directly.
pub fn cylinder_norm(field: &ScalarField, k: i32, spec: HolderSpec) -> Result<f64> {
    let jets = Jets::new(field, spec.l);
    let tube = Tube { lo: -(k as f64) - 1.0, hi: -(k as f64) + 1.0, open: true, k };
    tube_norm(field, &jets, tube, spec, 1).map(|r| r.0)
}

/// Space-time `C^{0,alpha}` norms with `t~ = 2^(2k) t` on annulus `k` and distance
/// `max(|x - y|, sqrt|t~ - s~|)`. The band `w >= -2` uses unscaled time.
pub fn parabolic_holder_norm(field: &SpaceTimeField, spec: HolderSpec, opts: &HolderOptions) -> Result<NormReport> {
    if spec.l != 0 {
        return Err(Error::Domain("the parabolic norm is implemented for l = 0 only".into()));
    }
    let g = *field.grid();
    let stride = opts.stride.max(1);
    let build = |rows: &[usize], x_of: &dyn Fn(usize) -> f64, time_scale: f64| {
        let mut nodes = Vec::new();
        for (frame, t) in field.frames().iter().zip(field.times()) {
            for &i in rows {
                for j in (0..g.n_theta).step_by(stride) {
                    let v = frame.get(i, j);
                    nodes.push(Node { x: x_of(i), theta: g.theta(j), t: time_scale * t, lower: vec![], top: vec![v] });
                }
            }
        }
        nodes
    };
    let dist = |a: &Node, b: &Node| {
        let dth = angular_distance(a.theta, b.theta);
        ((a.x - b.x).powi(2) + dth * dth).sqrt().max((a.t - b.t).abs().sqrt())
    };
    let parts = annuli(&g)
        .into_iter()
        .map(|k| {
            let rows = rows_in(&g, -(k as f64) - 1.0, -(k as f64) + 1.0, true);
            check_rows(k, &rows)?;
            let rows = strided(rows, stride);
            let nodes = build(&rows, &|i| (g.w(i) + k as f64).exp2(), (2.0 * k as f64).exp2());
            Ok(AnnulusNorm { k, value: norm_of_nodes(&nodes, spec.alpha, dist) })
        })
        .collect::<Result<Vec<_>>>()?;
    let smooth = if opts.smooth_band && g.w_max > -2.0 {
        let rows = rows_in(&g, -2.0, g.w_max, false);
        check_rows(0, &rows)?;
        let rows = strided(rows, stride);
        let nodes = build(&rows, &|i| g.w(i), 1.0);
        Some(norm_of_nodes(&nodes, spec.alpha, dist))
    } else {
        None
    };
    Ok(NormReport::assemble(parts, smooth, 0.0))
}
