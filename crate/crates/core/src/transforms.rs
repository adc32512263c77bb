//! Changes of variables between the diffusion problem and plain-weight
//! problems, and the blow-up rescaling, each with a residual check of the
//! target equation.

use std::sync::Arc;

use serde::Serialize;

use crate::bvp::numerical_derivative;
use crate::error::{Error, Result};
use crate::grid::{cumulative_weighted, RadialGrid, RadialProfile};
use crate::model::{CoefficientSpec, ProblemParams};

/// Tolerance on u(s0) = 1/d.
pub const THRESHOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransformedParams {
    /// −div(|x|^α|∇w|^{m−2}∇w) = coefficient·|x|^β (w^{exponent} − 1)^p
    Plain { coefficient: f64, exponent: f64, p: f64 },
    /// −(r^{N+α−1}|v'|^{m−2}v')' = λ r^{N+β−1} v^℘ on (s0, ∞), v(s0) = 1
    PurePower { lambda: f64, wp: f64, s0: f64 },
    /// Rescaled problem on [0, zR/t] with source factor 1/(a(0)+g(k))^γ.
    Rescaled {
        t: f64,
        z: f64,
        source_factor: f64,
        y_end: f64,
        c_gamma: f64,
        /// max over nodes of |w'| divided by the derivative bound
        bound_ratio: f64,
        bound_holds: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    #[serde(skip)]
    pub output: RadialProfile,
    pub transformed_params: TransformedParams,
    /// Integrated-form defect of the target equation.
    pub residual: f64,
}

fn derivative_of(v: &RadialProfile) -> Result<Vec<f64>> {
    match v.derivative() {
        Some(d) => Ok(d.to_vec()),
        None if v.grid().count() >= 32 => Ok(numerical_derivative(v.nodes(), v.values())),
        None => Err(Error::MissingDerivative(v.grid().count())),
    }
}

/// max_r |flux(r) − flux(r_0) + ∫_{r_0}^r s^{N+β−1} source| / (1 + max|flux| + ∫ source),
/// with flux = r^{N+α−1}|w'|^{m−2}w' / diffusion.
fn integrated_defect(
    pp: &ProblemParams,
    x: &[f64],
    dw: &[f64],
    diffusion: impl Fn(usize) -> f64,
    source: &[f64],
) -> Result<f64> {
    let na1 = pp.n_dim + pp.alpha - 1.0;
    let inner = cumulative_weighted(x, source, pp.n_dim + pp.beta - 1.0)?;
    let flux: Vec<f64> = x
        .iter()
        .zip(dw)
        .enumerate()
        .map(|(i, (&r, &d))| {
            if r > 0.0 {
                r.powf(na1) * d.abs().powf(pp.m - 1.0).copysign(d) / diffusion(i)
            } else {
                0.0
            }
        })
        .collect();
    let scale = 1.0 + flux.iter().fold(0.0_f64, |a, f| a.max(f.abs())) + inner[inner.len() - 1].abs();
    let worst = flux
        .iter()
        .zip(&inner)
        .fold(0.0_f64, |a, (f, s)| a.max((f - flux[0] + s).abs()));
    Ok(worst / scale)
}

/// Exponent 1 − γ/(m−1) of the diffusion-removing map.
fn removal_exponent(m: f64, gamma: f64) -> Result<f64> {
    let limit = m - 1.0;
    if !(gamma >= 0.0 && gamma < limit) {
        return Err(Error::GammaOutOfRange { gamma, limit });
    }
    Ok(1.0 - gamma / limit)
}

/// w = (1+u)^{1−γ/(m−1)} for a solution u of the problem with a ≡ 1, g(u) = u.
/// The residual is taken against the plain-weight equation for w.
pub fn diffusion_to_plain(u: &RadialProfile, pp: &ProblemParams) -> Result<TransformReport> {
    let k = removal_exponent(pp.m, pp.gamma)?;
    if let Some(&bad) = u.values().iter().find(|&&t| !(t >= 0.0)) {
        return Err(Error::NegativeArgument { what: "u", value: bad });
    }
    let du = derivative_of(u)?;
    let w: Vec<f64> = u.values().iter().map(|&t| (1.0 + t).powf(k)).collect();
    let dw: Vec<f64> = u.values().iter().zip(&du).map(|(&t, &d)| k * (1.0 + t).powf(k - 1.0) * d).collect();
    let coefficient = k.powf(pp.m - 1.0);
    let exponent = 1.0 / k;
    let source: Vec<f64> = w
        .iter()
        .map(|&t| coefficient * (t.powf(exponent) - 1.0).max(0.0).powf(pp.p))
        .collect();
    let residual = integrated_defect(pp, u.nodes(), &dw, |_| 1.0, &source)?;
    let output = RadialProfile::new(u.grid().clone(), w)?.with_derivative(dw)?;
    Ok(TransformReport {
        output,
        transformed_params: TransformedParams::Plain { coefficient, exponent, p: pp.p },
        residual,
    })
}

/// Inverse of [`diffusion_to_plain`]: u = w^{(m−1)/(m−1−γ)} − 1.
pub fn plain_to_diffusion(w: &RadialProfile, m: f64, gamma: f64) -> Result<RadialProfile> {
    let k = removal_exponent(m, gamma)?;
    let out = w.map(|_, t| t.powf(1.0 / k) - 1.0);
    match w.derivative() {
        Some(dw) => {
            let du = w.values().iter().zip(dw).map(|(&t, &d)| t.powf(1.0 / k - 1.0) * d / k).collect();
            out.with_derivative(du)
        }
        None => Ok(out),
    }
}

/// Induced exponent ℘ = p(m−1)/(m−1−γ).
pub fn induced_exponent(m: f64, gamma: f64, p: f64) -> f64 {
    p * (m - 1.0) / (m - 1.0 - gamma)
}

/// λ = ((m−1−γ)/(m−1))^{m−1} d^{m−1−p}.
pub fn induced_lambda(m: f64, gamma: f64, p: f64, d: f64) -> f64 {
    ((m - 1.0 - gamma) / (m - 1.0)).powf(m - 1.0) * d.powf(m - 1.0 - p)
}

/// v = (d·u)^{1−γ/(m−1)} on the broken segment [s0, ·]; the residual is taken
/// against the pure-power equation with (λ, ℘).
pub fn broken_to_plain(u: &RadialProfile, pp: &ProblemParams, d: f64) -> Result<TransformReport> {
    if !(d > 1.0) {
        return Err(Error::InvalidParameter("d > 1".into()));
    }
    if pp.gamma == 0.0 {
        return Err(Error::GammaOutOfRange { gamma: 0.0, limit: pp.m - 1.0 });
    }
    let k = removal_exponent(pp.m, pp.gamma)?;
    let found = u.values()[0];
    if (found * d - 1.0).abs() > THRESHOLD_TOL {
        return Err(Error::ThresholdMismatch { expected: 1.0 / d, found });
    }
    if let Some(i) = u.values().iter().position(|&t| !(t > 0.0)) {
        return Err(Error::PositivityViolated { r: u.nodes()[i], u: u.values()[i] });
    }
    let du = derivative_of(u)?;
    let v: Vec<f64> = u.values().iter().map(|&t| (d * t).powf(k)).collect();
    let dv: Vec<f64> = u
        .values()
        .iter()
        .zip(&du)
        .map(|(&t, &g)| k * d * (d * t).powf(k - 1.0) * g)
        .collect();
    let wp = induced_exponent(pp.m, pp.gamma, pp.p);
    let lambda = induced_lambda(pp.m, pp.gamma, pp.p, d);
    let source: Vec<f64> = v.iter().map(|&t| lambda * t.powf(wp)).collect();
    let residual = integrated_defect(pp, u.nodes(), &dv, |_| 1.0, &source)?;
    let s0 = u.nodes()[0];
    let output = RadialProfile::new(u.grid().clone(), v)?.with_derivative(dv)?;
    Ok(TransformReport { output, transformed_params: TransformedParams::PurePower { lambda, wp, s0 }, residual })
}

/// Blow-up rescaling w(y) = v(t y / z)/t with t = ‖v‖∞ and
/// z = (a(0)+g(k))^{γ/(β−α+m)} t^{(β−α+1+p)/(β−α+m)}.
pub fn blowup_rescale(
    v: &RadialProfile,
    k: f64,
    coeffs: &CoefficientSpec,
    pp: &ProblemParams,
) -> Result<TransformReport> {
    let t = v.sup_norm();
    if !(t > 0.0) {
        return Err(Error::TrivialProfile);
    }
    let bam = pp.ba_m();
    if !(bam > 0.0) {
        return Err(Error::OriginSingularity(bam));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidParameter("truncation level k > 0".into()));
    }
    let dv = derivative_of(v)?;
    let base = coeffs.a_unchecked(0.0) + coeffs.g_unchecked(k);
    let z = base.powf(pp.gamma / bam) * t.powf((pp.ba_1() + pp.p) / bam);
    let y_end = z * v.grid().end() / t;
    let grid = Arc::new(RadialGrid::graded(y_end, v.grid().count(), v.grid().kappa())?);
    let derivative = RadialProfile::new(v.grid().clone(), dv)?;
    let (mut w, mut dw) = (Vec::with_capacity(grid.count() + 1), Vec::with_capacity(grid.count() + 1));
    for &y in grid.nodes() {
        let r = (t * y / z).min(v.grid().end());
        w.push(v.interpolate(r)? / t);
        dw.push(derivative.interpolate(r)? / z);
    }
    // the endpoint maps exactly
    *w.last_mut().unwrap() = v.values()[v.values().len() - 1] / t;

    let source_factor = base.powf(-pp.gamma);
    let y = grid.nodes();
    let diffusion = |i: usize| (coeffs.a_unchecked(t * y[i] / z) + coeffs.g_trunc(Some(k), t * w[i])).powf(pp.gamma);
    let source: Vec<f64> = w.iter().map(|&s| source_factor * s.max(0.0).powf(pp.p)).collect();
    let residual = integrated_defect(pp, y, &dw, diffusion, &source)?;

    let (c1, c2) = coeffs.bounds();
    let c_gamma = (1.0 + c2 / c1).powf(pp.gamma);
    let bound_ratio = y.iter().zip(&dw).skip(1).fold(0.0_f64, |acc, (&yy, &d)| {
        let bound = (2.0 * c_gamma * yy.powf(pp.ba_1()) / (pp.n_dim + pp.beta)).powf(1.0 / (pp.m - 1.0));
        acc.max(d.abs() / bound)
    });
    let output = RadialProfile::new(grid.clone(), w)?.with_derivative(dw)?;
    Ok(TransformReport {
        output,
        transformed_params: TransformedParams::Rescaled {
            t,
            z,
            source_factor,
            y_end,
            c_gamma,
            bound_ratio,
            bound_holds: bound_ratio <= 1.1,
        },
        residual,
    })
}
