//! Residuals of the two integral identities: the variational identity for the
//! pure-power IVP and the Pohozaev-type identity for BVP solutions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{cumulative_weighted, RadialGrid, RadialProfile};
use crate::ivp::{PurePowerParams, Trajectory};
use crate::model::{compute_exponents, CoefficientSpec, ProblemParams};

const EPS: f64 = 1e-300;
/// Fine-grid size for quadrature on resampled trajectories.
const FINE: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Sum of the absolute values of every term.
    pub scale: f64,
    pub relative_residual: f64,
    pub terms: BTreeMap<String, f64>,
}

impl ResidualReport {
    fn build(lhs_terms: &[(&str, f64)], rhs_terms: &[(&str, f64)]) -> Self {
        let lhs: f64 = lhs_terms.iter().map(|t| t.1).sum();
        let rhs: f64 = rhs_terms.iter().map(|t| t.1).sum();
        let scale: f64 = lhs_terms.iter().chain(rhs_terms).map(|t| t.1.abs()).sum();
        let mut terms = BTreeMap::new();
        for (k, v) in lhs_terms {
            terms.insert(format!("lhs.{k}"), *v);
        }
        for (k, v) in rhs_terms {
            terms.insert(format!("rhs.{k}"), *v);
        }
        Self { lhs, rhs, scale, relative_residual: (lhs - rhs).abs() / scale.max(EPS), terms }
    }
}

/// Residual of
///
/// ```text
/// λ((N+β)/(℘+1) − (N+α−m)/m) ∫_{s0}^r s^{N+β−1} u^{℘+1}
///   = −(m−1)/m r^{N+α−1}|u'(r)|^{m−1} U_ρ(r) + (m−1)/m s0^{N+α−1}|u'(s0)|^{m−1} U_ρ(s0)
///     + λ/(℘+1) [r^{N+β} u^{℘+1}(r) − s0^{N+β} u^{℘+1}(s0)].
/// ```
pub fn lemma22_identity_residual(traj: &Trajectory, pp: &PurePowerParams, r: f64) -> Result<ResidualReport> {
    let s0 = traj.r[0];
    let (ur, dur, _) = traj.eval(r)?;
    let end = traj.r.partition_point(|&x| x <= r);
    if let Some(i) = traj.u[..end].iter().position(|&u| u <= 0.0) {
        return Err(Error::PositivityViolated { r: traj.r[i], u: traj.u[i] });
    }
    if ur <= 0.0 {
        return Err(Error::PositivityViolated { r, u: ur });
    }
    let (n, m, a, b, lam, wp) = (pp.n_dim, pp.m, pp.alpha, pp.beta, pp.lambda, pp.wp);
    let rho = pp.rho();
    let integral = if r > s0 {
        let grid = Arc::new(RadialGrid::from_nodes(
            (0..=FINE).map(|i| s0 + (r - s0) * i as f64 / FINE as f64).collect(),
        )?);
        let x = grid.nodes();
        let f: Vec<f64> = x
            .iter()
            .map(|&s| traj.eval(s).map(|(u, _, _)| u.max(0.0).powf(wp + 1.0)))
            .collect::<Result<_>>()?;
        *cumulative_weighted(x, &f, n + b - 1.0)?.last().unwrap()
    } else {
        0.0
    };
    let coeff = lam * ((n + b) / (wp + 1.0) - (n + a - m) / m);
    let (u0, du0) = (traj.u[0], traj.du[0]);
    let pow0 = |x: f64, e: f64| if x == 0.0 { 0.0 } else { x.powf(e) };
    let boundary = |s: f64, u: f64, du: f64| {
        (m - 1.0) / m * pow0(s, n + a - 1.0) * du.abs().powf(m - 1.0) * (s * du + rho * u)
    };
    let lhs = [("integral", coeff * integral)];
    let rhs = [
        ("boundary_r", -boundary(r, ur, dur)),
        ("boundary_s0", boundary(s0, u0, du0)),
        ("potential", lam / (wp + 1.0) * (pow0(r, n + b) * ur.powf(wp + 1.0) - pow0(s0, n + b) * u0.powf(wp + 1.0))),
    ];
    Ok(ResidualReport::build(&lhs, &rhs))
}

/// Multiplier exponent window −(N+α−m) < σ ≤ m−1.
pub fn sigma_window(pp: &ProblemParams, sigma: f64) -> Result<()> {
    let lo = -pp.na_m();
    let hi = pp.m - 1.0;
    if !(sigma > lo && sigma <= hi) {
        return Err(Error::SigmaOutOfRange { sigma, lo, hi });
    }
    Ok(())
}

/// σ − m + 2 − (N+α−m+1+σ)/m + (N+β+1+σ−m)/(p+1)
pub fn pohozaev_c1(pp: &ProblemParams, sigma: f64) -> f64 {
    let (n, m, a, b, p) = (pp.n_dim, pp.m, pp.alpha, pp.beta, pp.p);
    sigma - m + 2.0 - (n + a - m + 1.0 + sigma) / m + (n + b + 1.0 + sigma - m) / (p + 1.0)
}

/// (N+β+1+σ−m)(m−1−σ)/(p+1)
pub fn pohozaev_c2(pp: &ProblemParams, sigma: f64) -> f64 {
    let (n, m, b, p) = (pp.n_dim, pp.m, pp.beta, pp.p);
    (n + b + 1.0 + sigma - m) * (m - 1.0 - sigma) / (p + 1.0)
}

/// The p at which c₁ changes sign for a given σ.
pub fn c1_root_p(pp: &ProblemParams, sigma: f64) -> f64 {
    let (n, m, a, b) = (pp.n_dim, pp.m, pp.alpha, pp.beta);
    m * (n + b - m + 1.0 + sigma) / (n + a - m + (m - 1.0) * (m - 1.0 - sigma)) - 1.0
}

/// Samples needed by both Pohozaev functionals.
struct Samples<'a> {
    x: &'a [f64],
    v: &'a [f64],
    dv: &'a [f64],
    /// a + g(v)
    diff: Vec<f64>,
}

impl<'a> Samples<'a> {
    fn new(pp: &ProblemParams, coeffs: &CoefficientSpec, v: &'a RadialProfile) -> Result<Self> {
        let dv = v.derivative().ok_or(Error::MissingDerivative(v.grid().count()))?;
        if v.nodes()[0] != 0.0 || (v.grid().end() - pp.radius).abs() > 1e-12 * pp.radius {
            return Err(Error::BadGrid("profile must live on [0, R]".into()));
        }
        let x = v.nodes();
        let diff = x.iter().zip(v.values()).map(|(&r, &t)| coeffs.a_unchecked(r) + coeffs.g_trunc(None, t)).collect();
        Ok(Self { x, v: v.values(), dv, diff })
    }

    /// ∫_0^R r^ν f(r) dr by product integration.
    fn integral(&self, nu: f64, f: impl Fn(usize) -> f64) -> Result<f64> {
        let vals: Vec<f64> = (0..self.x.len()).map(f).collect();
        Ok(*cumulative_weighted(self.x, &vals, nu)?.last().unwrap())
    }
}

/// Residual of the Pohozaev-type identity for a profile v on [0, R] with
/// multiplier exponent σ ∈ (−(N+α−m), m−1].
pub fn pohozaev_residual(
    pp: &ProblemParams,
    coeffs: &CoefficientSpec,
    v: &RadialProfile,
    sigma: f64,
) -> Result<ResidualReport> {
    sigma_window(pp, sigma)?;
    let s = Samples::new(pp, coeffs, v)?;
    let (m, gamma) = (pp.m, pp.gamma);
    let e = pp.na_m() + sigma;
    let energy = s.integral(e, |i| s.dv[i].abs().powf(m) / s.diff[i].powf(gamma))?;
    let rr = pp.radius;
    let last = s.x.len() - 1;
    let boundary = (m - 1.0) / m * rr.powf(e + 1.0) * s.dv[last].abs().powf(m)
        / (coeffs.a_unchecked(rr) + coeffs.g_unchecked(0.0)).powf(gamma);
    let a_term = if gamma == 0.0 {
        0.0
    } else {
        -gamma / m
            * s.integral(e + 1.0, |i| {
                s.dv[i].abs().powf(m) * coeffs.a_prime(s.x[i]) / s.diff[i].powf(gamma + 1.0)
            })?
    };
    let g_term = if gamma == 0.0 {
        0.0
    } else {
        -gamma / m
            * s.integral(e + 1.0, |i| {
                s.dv[i].abs().powf(m) * s.dv[i] * coeffs.g_prime(s.v[i].max(0.0)) / s.diff[i].powf(gamma + 1.0)
            })?
    };
    let cross_coeff = -(pp.n_dim + pp.beta + 1.0 + sigma - m) / (pp.p + 1.0) * (sigma - m + 1.0);
    let cross = if sigma == m - 1.0 {
        0.0
    } else {
        cross_coeff
            * s.integral(e - 1.0, |i| {
                s.dv[i].abs().powf(m - 1.0).copysign(s.dv[i]) * s.v[i] / s.diff[i].powf(gamma)
            })?
    };
    let lhs = [("energy", pohozaev_c1(pp, sigma) * energy)];
    let rhs = [("boundary", boundary), ("a_prime", a_term), ("g_prime", g_term), ("cross", cross)];
    Ok(ResidualReport::build(&lhs, &rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignReport {
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    /// ∫ r^{N+α−m+σ}|v'|^m/(a+g)^γ
    pub energy_integral: f64,
    /// ∫ r^{N+α+σ−m−1}|v'|^{m−1} v/(a+g)^γ
    pub cross_integral: f64,
    /// c₁·energy − c₂·cross, the combination of the nonexistence argument.
    pub combination: f64,
    pub combination_positive: bool,
    /// c₁·energy + c₂·cross, which the identity equates to the (positive)
    /// boundary, a' and g' terms when v' < 0.
    pub identity_combination: f64,
    /// c₁ < 0 and c₂ ≥ 0: the combination cannot be positive.
    pub excludes_solutions: bool,
}

/// The sign combination used to rule out supercritical solutions, with σ
/// defaulting to the explicit σ* of the exponent set.
pub fn pohozaev_sign_certificate(
    pp: &ProblemParams,
    coeffs: &CoefficientSpec,
    v: &RadialProfile,
    sigma: Option<f64>,
) -> Result<SignReport> {
    let sigma = match sigma {
        Some(s) => s,
        None => compute_exponents(pp)?.sigma_star,
    };
    sigma_window(pp, sigma)?;
    let s = Samples::new(pp, coeffs, v)?;
    let (m, gamma) = (pp.m, pp.gamma);
    let e = pp.na_m() + sigma;
    let energy = s.integral(e, |i| s.dv[i].abs().powf(m) / s.diff[i].powf(gamma))?;
    let cross = s.integral(e - 1.0, |i| s.dv[i].abs().powf(m - 1.0) * s.v[i] / s.diff[i].powf(gamma))?;
    let (c1, c2) = (pohozaev_c1(pp, sigma), pohozaev_c2(pp, sigma));
    let combination = c1 * energy - c2 * cross;
    Ok(SignReport {
        sigma,
        c1,
        c2,
        energy_integral: energy,
        cross_integral: cross,
        combination,
        combination_positive: combination > 0.0,
        identity_combination: c1 * energy + c2 * cross,
        excludes_solutions: c1 < 0.0 && c2 >= 0.0,
    })
}
