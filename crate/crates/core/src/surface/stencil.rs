//! Second-order finite differences on the cylinder grid.
//!
//! `theta` is periodic. In `w`, rows `0` and `n_w - 1` either use one-sided
//! second-order formulas (for evaluating arbitrary fields) or the Neumann
//! ghost-point reflection `f[-1] = f[1]` (for the truncated heat problems).

use std::f64::consts::LN_2;

use crate::coords::GridSpec;
use crate::surface::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    OneSided,
    Neumann,
}

fn d2_row(g: &GridSpec, v: &[f64], i: usize, j: usize, boundary: Boundary) -> f64 {
    let n = g.n_w;
    let at = |r: usize| v[g.index(r, j)];
    let h2 = g.h_w() * g.h_w();
    match (i, boundary) {
        (0, Boundary::Neumann) => 2.0 * (at(1) - at(0)) / h2,
        (0, Boundary::OneSided) => (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2,
        (i, Boundary::Neumann) if i == n - 1 => 2.0 * (at(n - 2) - at(n - 1)) / h2,
        (i, Boundary::OneSided) if i == n - 1 => (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2,
        (i, _) => (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2,
    }
}

fn d2_col(g: &GridSpec, v: &[f64], i: usize, j: usize) -> f64 {
    let nt = g.n_theta;
    let jp = if j + 1 == nt { 0 } else { j + 1 };
    let jm = if j == 0 { nt - 1 } else { j - 1 };
    let ht = g.h_theta();
    (v[g.index(i, jp)] - 2.0 * v[g.index(i, j)] + v[g.index(i, jm)]) / (ht * ht)
}

/// The flat cone operator `(ln 2)^-2 d_ww + (beta+1)^-2 d_thth` in `(w, theta)`.
///
/// Multiplying by `e^(-2 phi) rho^-2` gives the Laplacian of `e^(2 phi)(d rho^2 + (beta+1)^2 rho^2 d theta^2)`.
pub fn flat_operator(field: &ScalarField, beta: f64, boundary: Boundary) -> Vec<f64> {
    let g = field.grid();
    let v = field.values();
    let cw = 1.0 / (LN_2 * LN_2);
    let ct = 1.0 / ((beta + 1.0) * (beta + 1.0));
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_w {
        for j in 0..g.n_theta {
            out.push(cw * d2_row(g, v, i, j, boundary) + ct * d2_col(g, v, i, j));
        }
    }
    out
}

/// `d/dw`, centered inside and one-sided second order on the two boundary rows.
pub fn d_w(field: &ScalarField) -> ScalarField {
    let g = *field.grid();
    let v = field.values();
    let h = g.h_w();
    let n = g.n_w;
    let mut out = vec![0.0; g.len()];
    for j in 0..g.n_theta {
        let at = |r: usize| v[g.index(r, j)];
        out[g.index(0, j)] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        out[g.index(n - 1, j)] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
        for i in 1..n - 1 {
            out[g.index(i, j)] = (at(i + 1) - at(i - 1)) / (2.0 * h);
        }
    }
    ScalarField::new(g, out).expect("derivative of a finite field")
}

/// `d/dtheta`, periodic centered.
pub fn d_theta(field: &ScalarField) -> ScalarField {
    let g = *field.grid();
    let v = field.values();
    let nt = g.n_theta;
    let h = g.h_theta();
    let mut out = vec![0.0; g.len()];
    for i in 0..g.n_w {
        for j in 0..nt {
            let jp = if j + 1 == nt { 0 } else { j + 1 };
            let jm = if j == 0 { nt - 1 } else { j - 1 };
            out[g.index(i, j)] = (v[g.index(i, jp)] - v[g.index(i, jm)]) / (2.0 * h);
        }
    }
    ScalarField::new(g, out).expect("derivative of a finite field")
}

/// `d^2/dw^2` with one-sided boundary rows.
pub fn d_ww(field: &ScalarField) -> ScalarField {
    let g = *field.grid();
    let v = field.values();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_w {
        for j in 0..g.n_theta {
            out.push(d2_row(&g, v, i, j, Boundary::OneSided));
        }
    }
    ScalarField::new(g, out).expect("derivative of a finite field")
}

/// `d^2/dtheta^2`, periodic.
pub fn d_thth(field: &ScalarField) -> ScalarField {
    let g = *field.grid();
    let v = field.values();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_w {
        for j in 0..g.n_theta {
            out.push(d2_col(&g, v, i, j));
        }
    }
    ScalarField::new(g, out).expect("derivative of a finite field")
}

/// Trapezoid weight of row `i` in `w`.
pub fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
