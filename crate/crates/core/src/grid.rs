//! Uniform tensor grids over boxes in `(t, x)` or `x` alone.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != resolution.len() || lower.is_empty() {
            return Err(Error::InvalidProblem(
                "grid bounds and resolutions must have the same nonzero length".into(),
            ));
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() || lower[i] > upper[i] {
                return Err(Error::InvalidProblem(format!(
                    "bad grid interval [{}, {}] on axis {i}",
                    lower[i], upper[i]
                )));
            }
            if resolution[i] == 0 {
                return Err(Error::InvalidProblem(format!("zero resolution on axis {i}")));
            }
        }
        Ok(Grid {
            lower,
            upper,
            resolution,
        })
    }

    /// Parses `"lo:hi,lo:hi,..."` and a resolution list `"n,n,..."`; a single
    /// resolution applies to every axis.
    pub fn parse(box_spec: &str, res_spec: &str) -> Result<Self> {
        let bad = |what: &str, s: &str| Error::InvalidProblem(format!("bad {what} `{s}`"));
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for part in box_spec.split(',') {
            let (lo, hi) = part.split_once(':').ok_or_else(|| bad("box interval", part))?;
            lower.push(lo.trim().parse::<f64>().map_err(|_| bad("box bound", lo))?);
            upper.push(hi.trim().parse::<f64>().map_err(|_| bad("box bound", hi))?);
        }
        let mut resolution = res_spec
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad("resolution", s)))
            .collect::<Result<Vec<_>>>()?;
        if resolution.len() == 1 {
            resolution = vec![resolution[0]; lower.len()];
        }
        Grid::new(lower, upper, resolution)
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if self.resolution[axis] <= 1 {
            0.0
        } else {
            (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
        }
    }

    /// Coordinates of node `index`; the last axis varies fastest.
    pub fn node(&self, mut index: usize, out: &mut [f64]) {
        for axis in (0..self.dimension()).rev() {
            let n = self.resolution[axis];
            let i = index % n;
            index /= n;
            out[axis] = self.lower[axis] + i as f64 * self.spacing(axis);
        }
    }

    pub fn node_vec(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.node(index, &mut out);
        out
    }
}
