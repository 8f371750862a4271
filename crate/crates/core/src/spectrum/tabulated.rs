use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spectral density sampled on a strictly increasing frequency grid.
///
/// Between grid nodes the density is a monotone piecewise-cubic Hermite
/// interpolant (Fritsch–Carlson slopes), so non-negative samples yield a
/// non-negative curve. Outside `[grid[0], cutoff]` the density is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSpectrum {
    grid: Vec<f64>,
    samples: Vec<f64>,
    slopes: Vec<f64>,
    cutoff: f64,
}

impl TabulatedSpectrum {
    /// Build from samples. `cutoff` defaults to the last grid point and must
    /// lie inside the grid.
    pub fn new(grid: Vec<f64>, samples: Vec<f64>, cutoff: Option<f64>) -> Result<Self> {
        if grid.len() != samples.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points but {} samples were given",
                grid.len(),
                samples.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidParameter(
                "a tabulated spectrum needs at least two samples".into(),
            ));
        }
        if grid[0] < 0.0 || grid.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "tabulated frequencies must be finite and non-negative".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "tabulated frequency grid must be strictly increasing".into(),
            ));
        }
        if samples.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidParameter(
                "tabulated densities must be finite and non-negative".into(),
            ));
        }
        let last = *grid.last().unwrap();
        let cutoff = cutoff.unwrap_or(last);
        if !(cutoff > grid[0] && cutoff <= last) {
            return Err(Error::InvalidParameter(format!(
                "cutoff {cutoff} must lie in ({}, {last}]",
                grid[0]
            )));
        }
        let slopes = pchip_slopes(&grid, &samples);
        Ok(Self {
            grid,
            samples,
            slopes,
            cutoff,
        })
    }

    /// Parse the two-column text format: `frequency density` per line,
    /// whitespace separated, `#` starts a comment.
    pub fn from_reader<R: BufRead>(reader: R, cutoff: Option<f64>) -> Result<Self> {
        let mut grid = Vec::new();
        let mut samples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let content = match line.find('#') {
                Some(i) => &line[..i],
                None => &line[..],
            };
            let mut cols = content.split_whitespace();
            let Some(first) = cols.next() else { continue };
            let second = cols.next().ok_or_else(|| {
                Error::Parse(format!("line {}: expected two columns", lineno + 1))
            })?;
            if cols.next().is_some() {
                return Err(Error::Parse(format!(
                    "line {}: more than two columns",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}: {s:?}", lineno + 1)))
            };
            grid.push(parse(first)?);
            samples.push(parse(second)?);
        }
        Self::new(grid, samples, cutoff)
    }

    pub fn from_path(path: impl AsRef<Path>, cutoff: Option<f64>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_reader(std::io::BufReader::new(file), cutoff)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn lower_edge(&self) -> f64 {
        self.grid[0]
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|g| g * factor).collect(),
            slopes: self.slopes.iter().map(|d| d * factor).collect(),
            cutoff: self.cutoff,
        }
    }

    pub fn value(&self, omega: f64) -> f64 {
        if omega < self.grid[0] || omega > self.cutoff {
            return 0.0;
        }
        // index of the interval [grid[k], grid[k+1]] containing omega
        let k = match self.grid.binary_search_by(|w| w.total_cmp(&omega)) {
            Ok(i) => return self.samples[i],
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let h = x1 - x0;
        let s = (omega - x0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.samples[k]
            + h10 * h * self.slopes[k]
            + h01 * self.samples[k + 1]
            + h11 * h * self.slopes[k + 1];
        v.max(0.0)
    }
}

/// Fritsch–Carlson monotone slopes with the shape-preserving three-point
/// end conditions.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
