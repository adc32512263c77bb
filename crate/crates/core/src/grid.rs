//! Graded radial grids, profiles sampled on them, and quadrature rules that
//! stay exact on power weights at the singular endpoint r = 0.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    kappa: f64,
}

impl RadialGrid {
    /// Nodes `r_end·(i/n)^κ`, i = 0..=n.
    pub fn graded(r_end: f64, n: usize, kappa: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::BadGrid(format!("n = {n} < 8")));
        }
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::BadGrid(format!("grading {kappa} < 1")));
        }
        if !(r_end > 0.0) || !r_end.is_finite() {
            return Err(Error::BadGrid(format!("end radius {r_end} must be positive")));
        }
        let nf = n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| r_end * (i as f64 / nf).powf(kappa)).collect();
        nodes[n] = r_end;
        Ok(Self { nodes, kappa })
    }

    pub fn uniform(r_end: f64, n: usize) -> Result<Self> {
        Self::graded(r_end, n, 1.0)
    }

    /// Arbitrary strictly increasing nodes (at least two). The first node need
    /// not be zero, which is how trajectories starting at s0 > 0 are stored.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::BadGrid("need at least two nodes".into()));
        }
        if nodes[0] < 0.0 || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadGrid("nodes must be finite and nonnegative".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadGrid("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, kappa: 1.0 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of cells.
    pub fn count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index i of the cell [x_i, x_{i+1}] holding r (the last cell for r = end).
    pub fn locate(&self, r: f64) -> Result<usize> {
        let (lo, hi) = (self.start(), self.end());
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfDomain { r, lo, hi });
        }
        let i = self.nodes.partition_point(|&x| x <= r);
        Ok(i.saturating_sub(1).min(self.count() - 1))
    }
}

/// A function of r sampled on a grid, with an optional derivative channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    derivative: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes.len() {
            return Err(Error::BadGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.nodes.len()
            )));
        }
        Ok(Self { grid, values, derivative: None })
    }

    pub fn with_derivative(mut self, derivative: Vec<f64>) -> Result<Self> {
        if derivative.len() != self.values.len() {
            return Err(Error::BadGrid("derivative channel length mismatch".into()));
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid, values, derivative: None }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self { grid: self.grid.clone(), values, derivative: None }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Piecewise-linear interpolation.
    pub fn interpolate(&self, r: f64) -> Result<f64> {
        let i = self.grid.locate(r)?;
        let x = &self.grid.nodes;
        let t = (r - x[i]) / (x[i + 1] - x[i]);
        Ok(self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }

    /// Cubic Hermite interpolation when the derivative channel is present,
    /// linear otherwise.
    pub fn interpolate_smooth(&self, r: f64) -> Result<f64> {
        let Some(d) = &self.derivative else {
            return self.interpolate(r);
        };
        let i = self.grid.locate(r)?;
        let x = &self.grid.nodes;
        let h = x[i + 1] - x[i];
        let t = (r - x[i]) / h;
        let (y0, y1, d0, d1) = (self.values[i], self.values[i + 1], d[i] * h, d[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1)
    }

    /// Resample onto another grid covering a subset of this one.
    pub fn resample(&self, grid: Arc<RadialGrid>) -> Result<Self> {
        let values = grid
            .nodes
            .iter()
            .map(|&r| self.interpolate_smooth(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values, derivative: None })
    }

    /// CSV with header `r,v` or `r,v,dv`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.derivative {
            Some(d) => {
                out.push_str("r,v,dv\n");
                for ((r, v), dv) in self.nodes().iter().zip(&self.values).zip(d) {
                    let _ = writeln!(out, "{r},{v},{dv}");
                }
            }
            None => {
                out.push_str("r,v\n");
                for (r, v) in self.nodes().iter().zip(&self.values) {
                    let _ = writeln!(out, "{r},{v}");
                }
            }
        }
        out
    }
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Weights (w_a, w_b) with ∫_a^b τ^ν ℓ(τ) dτ = w_a ℓ(a) + w_b ℓ(b) for every
/// linear ℓ.
pub(crate) fn linear_moment_weights(a: f64, b: f64, nu: f64) -> (f64, f64) {
    let h = b - a;
    // Closed-form moments cancel badly on cells far from the origin.
    let (m0, m1) = if a > 0.0 && h < 0.05 * a {
        let mid = 0.5 * (a + b);
        let half = 0.5 * h;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for (x, w) in GL8_X.iter().zip(GL8_W) {
            for s in [-1.0, 1.0] {
                let t = mid + s * half * x;
                // (t - a) written directly keeps precision.
                let dt = half * (1.0 + s * x);
                let wt = w * half * t.powf(nu);
                m0 += wt;
                m1 += wt * dt;
            }
        }
        (m0, m1)
    } else {
        let p0 = |x: f64| x.powf(nu + 1.0) / (nu + 1.0);
        let p1 = |x: f64| x.powf(nu + 2.0) / (nu + 2.0);
        let m0 = p0(b) - p0(a);
        let m1 = p1(b) - p1(a) - a * m0;
        (m0, m1)
    };
    let wb = m1 / h;
    (m0 - wb, wb)
}

/// s ↦ ∫_{x_0}^s τ^ν f(τ) dτ at every node, with f linear on each cell and the
/// power weight integrated exactly.
pub fn cumulative_weighted_integral(f: &RadialProfile, nu: f64) -> Result<RadialProfile> {
    Ok(RadialProfile {
        grid: f.grid.clone(),
        values: cumulative_weighted(f.nodes(), f.values(), nu)?,
        derivative: None,
    })
}

pub(crate) fn cumulative_weighted(x: &[f64], f: &[f64], nu: f64) -> Result<Vec<f64>> {
    if !(nu > -1.0) {
        return Err(Error::NonIntegrableWeight(nu));
    }
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    let mut acc = Neumaier::default();
    for i in 0..x.len() - 1 {
        let (wa, wb) = linear_moment_weights(x[i], x[i + 1], nu);
        acc.add(wa * f[i] + wb * f[i + 1]);
        out.push(acc.value());
    }
    Ok(out)
}

/// ∫_r^{end} f(s) ds by the trapezoid rule, exact for piecewise-linear f.
pub fn outer_integral_from(f: &RadialProfile, r: f64) -> Result<f64> {
    let grid = &f.grid;
    let i = grid.locate(r)?;
    let x = grid.nodes();
    let v = f.values();
    let fr = f.interpolate(r)?;
    let mut acc = Neumaier::default();
    acc.add(0.5 * (x[i + 1] - r) * (fr + v[i + 1]));
    for j in i + 1..grid.count() {
        acc.add(0.5 * (x[j + 1] - x[j]) * (v[j] + v[j + 1]));
    }
    Ok(acc.value())
}
