//! Parameter sweeps: the (axis1, axis2) phase-diagram scanner and batch IVP
//! runs. Cells are independent and may run on the rayon pool; results are
//! always stored by index so the output does not depend on scheduling.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bvp::{picard_solve, PicardOptions, SolveStatus};
use crate::error::{Error, Result};
use crate::ivp::{integrate_pure_power, PurePowerParams, Trajectory};
use crate::model::{classify_regime, CoefficientSpec, ProblemParams, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecMode {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is on, sequentially
    /// otherwise.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

/// `items.map(f)` with results in input order.
pub fn map_ordered<T, R, F>(items: &[T], mode: ExecMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "R")]
    R,
}

impl AxisName {
    fn apply(self, pp: &mut ProblemParams, value: f64) {
        match self {
            AxisName::P => pp.p = value,
            AxisName::Gamma => pp.gamma = value,
            AxisName::Alpha => pp.alpha = value,
            AxisName::Beta => pp.beta = value,
            AxisName::M => pp.m = value,
            AxisName::N => pp.n_dim = value,
            AxisName::R => pp.radius = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl ScanAxis {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParameter(format!("scan axis {:?}: steps ≥ 2", self.name)));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!("scan axis {:?}: lo < hi", self.name)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i == self.steps - 1 { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / last })
            .collect()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub axis1: f64,
    pub axis2: f64,
    pub predicted: Verdict,
    pub observed: SolveStatus,
    pub critical_p: Option<f64>,
    /// None for Indeterminate predictions.
    pub agreement: Option<bool>,
}

pub fn agreement(predicted: Verdict, observed: SolveStatus) -> Option<bool> {
    match predicted {
        Verdict::Indeterminate => None,
        Verdict::ExistencePredicted => Some(observed == SolveStatus::Converged),
        _ => Some(observed != SolveStatus::Converged),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub axis1: ScanAxis,
    pub axis2: ScanAxis,
    /// Row-major in (axis1, axis2).
    pub cells: Vec<ScanCell>,
}

/// Classify and solve every cell of the grid `axis1 × axis2` around `base`.
pub fn scan_phase_diagram(
    base: &ProblemParams,
    coeffs: &CoefficientSpec,
    opts: &PicardOptions,
    axis1: ScanAxis,
    axis2: ScanAxis,
    mode: ExecMode,
) -> Result<PhaseDiagram> {
    axis1.validate()?;
    axis2.validate()?;
    if axis1.name == axis2.name {
        return Err(Error::InvalidParameter("scan axes must differ".into()));
    }
    let mut points = Vec::with_capacity(axis1.steps * axis2.steps);
    for a in axis1.values() {
        for b in axis2.values() {
            points.push((a, b));
        }
    }
    let cells = map_ordered(&points, mode, |&(a, b)| -> Result<ScanCell> {
        let mut pp = *base;
        axis1.name.apply(&mut pp, a);
        axis2.name.apply(&mut pp, b);
        let class = classify_regime(&pp);
        let observed = picard_solve(&pp, coeffs, opts)?.status;
        Ok(ScanCell {
            axis1: a,
            axis2: b,
            predicted: class.verdict,
            observed,
            critical_p: class.critical_p,
            agreement: agreement(class.verdict, observed),
        })
    });
    Ok(PhaseDiagram { axis1, axis2, cells: cells.into_iter().collect::<Result<Vec<_>>>()? })
}

/// CSV `axis1,axis2,predicted,observed,critical_p,agreement`, one row per cell.
pub fn emit_phase_diagram(diagram: &PhaseDiagram) -> Result<String> {
    let expected = diagram.axis1.steps * diagram.axis2.steps;
    if diagram.cells.len() != expected {
        return Err(Error::IncompleteGrid { expected, found: diagram.cells.len() });
    }
    let mut out = String::from("axis1,axis2,predicted,observed,critical_p,agreement\n");
    for c in &diagram.cells {
        let crit = c.critical_p.map_or("na".to_string(), |v| v.to_string());
        let agree = c.agreement.map_or("na".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.axis1,
            c.axis2,
            c.predicted.as_str(),
            c.observed.as_str(),
            crit,
            agree
        );
    }
    Ok(out)
}

/// Rows (fixed non-p coordinate) along which the Converged cells do not form
/// a down-set in p, allowing one transitional cell. Empty unless one axis is p.
pub fn monotonicity_warnings(diagram: &PhaseDiagram) -> Vec<String> {
    let (n1, n2) = (diagram.axis1.steps, diagram.axis2.steps);
    let rows: Vec<(f64, Vec<&ScanCell>)> = if diagram.axis1.name == AxisName::P {
        (0..n2).map(|j| (diagram.cells[j].axis2, (0..n1).map(|i| &diagram.cells[i * n2 + j]).collect())).collect()
    } else if diagram.axis2.name == AxisName::P {
        (0..n1).map(|i| (diagram.cells[i * n2].axis1, diagram.cells[i * n2..(i + 1) * n2].iter().collect())).collect()
    } else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (fixed, row) in rows {
        let converged: Vec<bool> = row.iter().map(|c| c.observed == SolveStatus::Converged).collect();
        // cells that break the down-set: non-converged followed later by converged
        let first_fail = converged.iter().position(|c| !c).unwrap_or(converged.len());
        let stray = converged[first_fail..].iter().filter(|&&c| c).count();
        if stray > 1 {
            out.push(format!("row {fixed}: {stray} converged cells above the first failure"));
        }
    }
    out
}

/// Integrate many pure-power IVPs; results are in input order.
pub fn integrate_batch(
    params: &[PurePowerParams],
    r_max: f64,
    rtol: f64,
    mode: ExecMode,
) -> Vec<Result<Trajectory>> {
    map_ordered(params, mode, |pp| integrate_pure_power(pp, r_max, rtol))
}
