use crate::coords::GridSpec;
use crate::error::{Error, Result};

/// A function sampled on the `(w, theta)` cylinder grid, stored w-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.n_w,
                grid.n_theta,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite sample at row {}, column {}",
                pos / grid.n_theta,
                pos % grid.n_theta
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(w, theta)` at every node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_w {
            let w = grid.w(i);
            for j in 0..grid.n_theta {
                values.push(f(w, grid.theta(j)));
            }
        }
        Self { grid, values }
    }

    /// `w,theta,value` rows with a header, `theta` fastest, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,theta,value\n");
        for i in 0..self.grid.n_w {
            for j in 0..self.grid.n_theta {
                out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.grid.w(i), self.grid.theta(j), self.get(i, j)));
            }
        }
        out
    }

    /// Inverse of [`ScalarField::to_csv`]; the grid is recovered from the coordinates.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("w,theta,value") {
            return Err(Error::Parse("expected header w,theta,value".into()));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
            if cols.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns, found {}", n + 2, cols.len())));
            }
            rows.push([cols[0], cols[1], cols[2]]);
        }
        let n_theta = rows.iter().take_while(|r| rows.first().is_some_and(|f| r[0] == f[0])).count();
        if n_theta == 0 || rows.len() % n_theta != 0 {
            return Err(Error::Parse("rows do not form a (w, theta) grid".into()));
        }
        let grid = GridSpec::new(rows[0][0], rows[rows.len() - 1][0], rows.len() / n_theta, n_theta)?;
        for (k, r) in rows.iter().enumerate() {
            let (i, j) = (k / n_theta, k % n_theta);
            if (r[0] - grid.w(i)).abs() > 1e-9 * (1.0 + r[0].abs()) || (r[1] - grid.theta(j)).abs() > 1e-9 {
                return Err(Error::Parse(format!("line {} is off the uniform grid", k + 2)));
            }
        }
        Self::new(grid, rows.into_iter().map(|r| r[2]).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_theta;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Rows `first..n_w` as a field on the truncated grid.
    pub fn tail_from(&self, first: usize) -> Result<Self> {
        let grid = self.grid.tail_from(first)?;
        let start = first * self.grid.n_theta;
        Ok(Self { grid, values: self.values[start..].to_vec() })
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: {}x{} on [{}, {}] vs {}x{} on [{}, {}]",
                self.grid.n_w,
                self.grid.n_theta,
                self.grid.w_min,
                self.grid.w_max,
                other.grid.n_w,
                other.grid.n_theta,
                other.grid.w_min,
                other.grid.w_max
            )))
        }
    }
}
