use serde::Serialize;

use crate::coords::GridSpec;
use crate::error::{Error, Result};
use crate::surface::ScalarField;

/// Frames of a field at increasing times, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeField {
    times: Vec<f64>,
    #[serde(skip)]
    frames: Vec<ScalarField>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, frames: Vec<ScalarField>) -> Result<Self> {
        if times.is_empty() || times.len() != frames.len() {
            return Err(Error::Shape(format!("{} times for {} frames", times.len(), frames.len())));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain(format!("time series must start at 0, not {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("times must be strictly increasing".into()));
        }
        for f in &frames[1..] {
            frames[0].check_same_grid(f)?;
        }
        Ok(Self { times, frames })
    }

    /// A field that does not depend on time.
    pub fn constant(frame: ScalarField) -> Self {
        Self { times: vec![0.0], frames: vec![frame] }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[ScalarField] {
        &self.frames
    }

    pub fn grid(&self) -> &GridSpec {
        self.frames[0].grid()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &ScalarField {
        self.frames.last().expect("never empty")
    }

    /// Linear interpolation in time; constant extrapolation outside `[0, t_last]`.
    pub fn at(&self, t: f64) -> ScalarField {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.frames[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.frames[n - 1].clone();
        }
        let hi = self.times.partition_point(|&s| s <= t);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let x = (t - t0) / (t1 - t0);
        if x == 0.0 {
            return self.frames[hi - 1].clone();
        }
        self.frames[hi - 1].zip_with(&self.frames[hi], |a, b| (1.0 - x) * a + x * b).expect("frames share one grid")
    }

    /// Restriction of every frame to rows `first..` of the grid, relabelled onto `grid`.
    pub(crate) fn restricted(&self, first: usize, grid: GridSpec) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|f| ScalarField::new(grid, f.tail_from(first)?.into_values()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { times: self.times.clone(), frames })
    }

    pub fn min_value(&self) -> f64 {
        self.frames.iter().flat_map(|f| f.values().iter().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }
}
