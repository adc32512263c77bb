//! Whole-line initial value problems
//!
//! ```text
//! -(r^{N+α-1} |u'|^{m-2} u')' = λ r^{N+β-1} u^℘,   u(s0) = u0, u'(s0) = u1 ≤ 0,
//! ```
//!
//! and the broken problem that switches to the diffusion-weighted flux once u
//! drops to 1/d. The state is (u, Q) with Q the flux, which stays smooth where
//! u' vanishes.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, RadialProfile};
use crate::model::{gt_tol, ProblemParams};
use crate::ode::{self, OdeOptions, Path, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurePowerParams {
    #[serde(rename = "N")]
    pub n_dim: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Source exponent ℘.
    pub wp: f64,
    pub s0: f64,
    pub u_s0: f64,
    pub du_s0: f64,
}

impl PurePowerParams {
    /// Data u(0) = 1, u'(0) = 0.
    pub fn from_origin(n_dim: f64, m: f64, alpha: f64, beta: f64, lambda: f64, wp: f64) -> Self {
        Self { n_dim, m, alpha, beta, lambda, wp, s0: 0.0, u_s0: 1.0, du_s0: 0.0 }
    }

    pub fn rho(&self) -> f64 {
        (self.n_dim + self.alpha - self.m) / (self.m - 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) {
            return Err(Error::InvalidParameter("m > 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter("lambda > 0".into()));
        }
        if !(self.u_s0 > 0.0) {
            return Err(Error::InvalidParameter("u(s0) > 0".into()));
        }
        if !(self.du_s0 <= 0.0) {
            return Err(Error::InvalidParameter("u'(s0) ≤ 0".into()));
        }
        if !(self.s0 >= 0.0) {
            return Err(Error::InvalidParameter("s0 ≥ 0".into()));
        }
        if !(self.wp > 0.0) {
            return Err(Error::InvalidParameter("source exponent > 0".into()));
        }
        if !(self.n_dim + self.beta > 0.0) {
            return Err(Error::NonIntegrableWeight(self.n_dim + self.beta - 1.0));
        }
        Ok(())
    }
}

/// Output of an IVP run: nodes, state, state derivatives, events.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub first_zero: Option<f64>,
    /// Radius where the broken problem switches regime.
    pub switch_radius: Option<f64>,
    pub r_max: f64,
    /// The equation parameters on the (last) pure-power segment.
    pub params: PurePowerParams,
    diffusion: Option<Broken>,
}

impl Trajectory {
    /// Exclusive end of the positivity window: nodes `0..end` have u > 0.
    pub fn positivity_end(&self) -> usize {
        self.u.iter().position(|&u| u <= 0.0).unwrap_or(self.u.len()).min(match self.first_zero {
            Some(_) => self.u.len() - 1,
            None => self.u.len(),
        })
    }

    /// u as a profile on the trajectory's nodes, with derivative channel.
    pub fn profile(&self) -> Result<RadialProfile> {
        let grid = Arc::new(RadialGrid::from_nodes(self.r.clone())?);
        RadialProfile::new(grid, self.u.clone())?.with_derivative(self.du.clone())
    }

    /// Q as a profile with derivative channel.
    pub fn flux_profile(&self) -> Result<RadialProfile> {
        let grid = Arc::new(RadialGrid::from_nodes(self.r.clone())?);
        RadialProfile::new(grid, self.q.clone())?.with_derivative(self.dq.clone())
    }

    fn locate(&self, r: f64) -> Result<usize> {
        let (lo, hi) = (self.r[0], self.r[self.r.len() - 1]);
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfDomain { r, lo, hi });
        }
        let i = self.r.partition_point(|&x| x <= r);
        Ok(i.saturating_sub(1).min(self.r.len() - 2))
    }

    /// Cubic Hermite evaluation of (u, u', Q).
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        let i = self.locate(r)?;
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let herm = |y0: f64, y1: f64, d0: f64, d1: f64| {
            let (t2, t3) = (t * t, t * t * t);
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + t) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * h * d1;
            let dv = ((6.0 * t2 - 6.0 * t) * y0
                + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
                + (-6.0 * t2 + 6.0 * t) * y1
                + (3.0 * t2 - 2.0 * t) * h * d1)
                / h;
            (v, dv)
        };
        let (u, _) = herm(self.u[i], self.u[i + 1], self.du[i], self.du[i + 1]);
        let (q, _) = herm(self.q[i], self.q[i + 1], self.dq[i], self.dq[i + 1]);
        // u' from the flux is more accurate than differentiating the interpolant.
        let du = self.du_from_flux(r, q, u);
        Ok((u, du, q))
    }

    fn du_from_flux(&self, r: f64, q: f64, u: f64) -> f64 {
        let pp = &self.params;
        if r == 0.0 {
            return 0.0;
        }
        let mut w = q / r.powf(pp.n_dim + pp.alpha - 1.0);
        if let Some(b) = &self.diffusion {
            if r >= b.s0 {
                w *= (b.d * u.abs()).powf(b.gamma);
            }
        }
        w.abs().powf(1.0 / (pp.m - 1.0)).copysign(w)
    }

    /// Copy restricted to [r_start, r_end], with interpolated end nodes.
    pub fn truncated(&self, r_end: f64) -> Result<Self> {
        let i = self.locate(r_end)?;
        let mut out = self.clone();
        let keep = i + 1;
        out.r.truncate(keep);
        out.u.truncate(keep);
        out.du.truncate(keep);
        out.q.truncate(keep);
        out.dq.truncate(keep);
        if *out.r.last().unwrap() < r_end {
            let (u, du, q) = self.eval(r_end)?;
            out.r.push(r_end);
            out.u.push(u);
            out.du.push(du);
            out.q.push(q);
            out.dq.push(self.source_derivative(r_end, u));
        }
        if self.first_zero.is_some_and(|z| z > r_end) {
            out.first_zero = None;
        }
        out.r_max = r_end;
        Ok(out)
    }

    fn source_derivative(&self, r: f64, u: f64) -> f64 {
        let pp = &self.params;
        -pp.lambda * r.powf(pp.n_dim + pp.beta - 1.0) * u.max(0.0).powf(pp.wp)
    }

    /// u on `n` uniform nodes over [s0, end] of the broken segment, with
    /// derivative channel. The end stops just short of the first zero.
    pub fn broken_segment(&self, n: usize) -> Result<RadialProfile> {
        let s0 = self.diffusion.map(|b| b.s0).ok_or_else(|| Error::InvalidParameter("trajectory has no broken segment".into()))?;
        let end = match self.first_zero {
            Some(z) => z - 1e-3 * (z - s0),
            None => *self.r.last().unwrap(),
        };
        if !(end > s0) || n < 2 {
            return Err(Error::BadGrid("empty broken segment".into()));
        }
        let nodes: Vec<f64> = (0..=n).map(|i| if i == n { end } else { s0 + (end - s0) * i as f64 / n as f64 }).collect();
        let (mut u, mut du) = (Vec::with_capacity(n + 1), Vec::with_capacity(n + 1));
        for &r in &nodes {
            let (a, b, _) = self.eval(r)?;
            u.push(a);
            du.push(b);
        }
        let grid = Arc::new(RadialGrid::from_nodes(nodes)?);
        RadialProfile::new(grid, u)?.with_derivative(du)
    }

    /// U_ρ = r u' + ρ u at every node.
    pub fn u_rho(&self, rho: f64) -> Vec<f64> {
        self.r.iter().zip(&self.u).zip(&self.du).map(|((r, u), du)| r * du + rho * u).collect()
    }

    /// r^ρ u at every node.
    pub fn r_rho_u(&self, rho: f64) -> Vec<f64> {
        self.r.iter().zip(&self.u).map(|(r, u)| r.powf(rho) * u).collect()
    }

    /// r^{N+β} u^{℘+1} at every node (zero where u ≤ 0).
    pub fn tailweight(&self) -> Vec<f64> {
        let pp = &self.params;
        self.r
            .iter()
            .zip(&self.u)
            .map(|(r, u)| r.powf(pp.n_dim + pp.beta) * u.max(0.0).powf(pp.wp + 1.0))
            .collect()
    }

    /// CSV with columns `r,u,Q,U_rho,r_rho_u,tailweight`.
    pub fn to_csv(&self) -> String {
        let rho = self.params.rho();
        let (ur, rr, tw) = (self.u_rho(rho), self.r_rho_u(rho), self.tailweight());
        let mut out = String::from("r,u,Q,U_rho,r_rho_u,tailweight\n");
        for i in 0..self.r.len() {
            let _ = writeln!(out, "{},{},{},{},{},{}", self.r[i], self.u[i], self.q[i], ur[i], rr[i], tw[i]);
        }
        out
    }
}

/// Diffusion factor d^γ |u|^γ active from s0 on.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Broken {
    s0: f64,
    d: f64,
    gamma: f64,
}

// Trajectory carries the broken-segment data privately.
impl Trajectory {
    fn new(params: PurePowerParams, r_max: f64) -> Self {
        Self {
            r: Vec::new(),
            u: Vec::new(),
            du: Vec::new(),
            q: Vec::new(),
            dq: Vec::new(),
            first_zero: None,
            switch_radius: None,
            r_max,
            params,
            diffusion: None,
        }
    }
}

/// Leading terms of the regular solution at the origin with u(0) = 1.
#[derive(Debug, Clone, Copy)]
struct Series {
    kappa: f64,
    c: f64,
    c2: f64,
    lambda: f64,
    wp: f64,
    nb: f64,
}

impl Series {
    fn new(pp: &PurePowerParams) -> Result<Self> {
        let b1 = pp.beta - pp.alpha + 1.0;
        if !(b1 > 0.0) {
            return Err(Error::StartupFailure(b1));
        }
        let nb = pp.n_dim + pp.beta;
        let kappa = (pp.beta - pp.alpha + pp.m) / (pp.m - 1.0);
        let a = (pp.lambda / nb).powf(1.0 / (pp.m - 1.0));
        let c = a / kappa;
        let c2 = a * pp.wp * c * nb / ((nb + kappa) * (pp.m - 1.0) * 2.0 * kappa);
        Ok(Self { kappa, c, c2, lambda: pp.lambda, wp: pp.wp, nb })
    }

    fn u(&self, r: f64) -> f64 {
        let t = r.powf(self.kappa);
        1.0 - self.c * t + self.c2 * t * t
    }

    fn du(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let k = self.kappa;
        (-self.c * k * r.powf(k) + 2.0 * k * self.c2 * r.powf(2.0 * k)) / r
    }

    fn q(&self, r: f64) -> f64 {
        let (k, nb, wp, c) = (self.kappa, self.nb, self.wp, self.c);
        -self.lambda
            * (r.powf(nb) / nb - wp * c * r.powf(nb + k) / (nb + k)
                + (wp * self.c2 + wp * (wp - 1.0) * c * c / 2.0) * r.powf(nb + 2.0 * k) / (nb + 2.0 * k))
    }

    /// Radius where the first neglected term drops below 0.1·rtol.
    fn start_radius(&self, rtol: f64) -> f64 {
        let c3 = (self.c2 * self.c2 / self.c).max(self.c2.abs()).max(1e-300);
        let r0 = (0.1 * rtol / c3).powf(1.0 / (3.0 * self.kappa));
        // keep u(r0) close to 1 so the expansion is meaningful
        r0.min((0.05 / self.c).powf(1.0 / self.kappa))
    }
}

fn ode_options(rtol: f64, h0: f64) -> OdeOptions {
    OdeOptions { rtol, atol: rtol * 1e-2, max_step_rel: 0.02, max_step_abs: 0.0, h0, event_tol: 1e-12 }
}

fn rhs(pp: PurePowerParams, broken: Option<Broken>) -> impl Fn(f64, &State) -> State {
    let na1 = pp.n_dim + pp.alpha - 1.0;
    let nb1 = pp.n_dim + pp.beta - 1.0;
    let inv_m1 = 1.0 / (pp.m - 1.0);
    move |r: f64, y: &State| {
        let mut w = y[1] / r.powf(na1);
        if let Some(b) = broken {
            w *= (b.d * y[0].abs()).powf(b.gamma);
        }
        let du = if inv_m1 == 1.0 { w } else { w.abs().powf(inv_m1).copysign(w) };
        let dq = -pp.lambda * r.powf(nb1) * y[0].max(0.0).powf(pp.wp);
        [du, dq]
    }
}

fn append_path(traj: &mut Trajectory, path: &Path) {
    for ((x, y), f) in path.x.iter().zip(&path.y).zip(&path.f) {
        if traj.r.last().is_some_and(|&l| *x <= l) {
            continue;
        }
        traj.r.push(*x);
        traj.u.push(y[0]);
        traj.q.push(y[1]);
        traj.du.push(f[0]);
        traj.dq.push(f[1]);
    }
}

fn push_series(traj: &mut Trajectory, s: &Series, r_end: f64) {
    const K: usize = 16;
    for i in 0..K {
        let r = r_end * i as f64 / K as f64;
        let u = s.u(r);
        traj.r.push(r);
        traj.u.push(u);
        traj.du.push(s.du(r));
        traj.q.push(s.q(r));
        traj.dq.push(-s.lambda * r.powf(s.nb - 1.0) * u.max(0.0).powf(s.wp));
    }
}

/// Integrate the pure-power problem until the first zero of u or r_max.
pub fn integrate_pure_power(pp: &PurePowerParams, r_max: f64, rtol: f64) -> Result<Trajectory> {
    pp.validate()?;
    if !(r_max > pp.s0) {
        return Err(Error::InvalidParameter("r_max > s0".into()));
    }
    if !(rtol > 0.0) {
        return Err(Error::InvalidParameter("rtol > 0".into()));
    }
    let mut traj = Trajectory::new(*pp, r_max);
    let f = rhs(*pp, None);
    let g = |y: &State| y[0];
    let (x0, y0, h0) = if pp.s0 == 0.0 {
        let s = Series::new(&PurePowerParams { u_s0: 1.0, ..*pp })?;
        let r0 = s.start_radius(rtol).min(0.1 * r_max);
        // rescale for u(0) ≠ 1: u(r) = u0·ũ(u0^{(℘−m+1)/(β−α+m)} r)
        let u0 = pp.u_s0;
        let scale = u0.powf((pp.wp - pp.m + 1.0) / (pp.beta - pp.alpha + pp.m));
        let sr = r0 / scale;
        let mut tmp = Trajectory::new(*pp, r_max);
        push_series(&mut tmp, &s, r0);
        let qscale = u0.powf(pp.m - 1.0) * scale.powf(-(pp.n_dim + pp.alpha - pp.m));
        for i in 0..tmp.r.len() {
            traj.r.push(tmp.r[i] / scale);
            traj.u.push(u0 * tmp.u[i]);
            traj.du.push(u0 * scale * tmp.du[i]);
            traj.q.push(qscale * tmp.q[i]);
            traj.dq.push(qscale * scale * tmp.dq[i]);
        }
        (sr, [u0 * s.u(r0), qscale * s.q(r0)], 0.01 * sr)
    } else {
        let q0 = pp.s0.powf(pp.n_dim + pp.alpha - 1.0) * pp.du_s0.abs().powf(pp.m - 1.0).copysign(pp.du_s0);
        (pp.s0, [pp.u_s0, q0], 1e-3 * pp.s0.max(1e-3))
    };
    let mut path = Path::default();
    let out = ode::integrate(&f, &g, x0, y0, r_max, &ode_options(rtol, h0), &mut path)?;
    append_path(&mut traj, &path);
    traj.first_zero = out.event;
    Ok(traj)
}

/// Integrate the broken problem: plain equation with source u^p from u(0) = 1
/// until u = 1/d at s0, then with the flux divided by (d·u)^γ.
pub fn integrate_broken(params: &ProblemParams, d: f64, r_max: f64, rtol: f64) -> Result<Trajectory> {
    if !(d > 1.0) {
        return Err(Error::InvalidParameter("d > 1".into()));
    }
    if !params.h0() {
        return Err(Error::InvalidParameter("(H0) must hold".into()));
    }
    let pp = PurePowerParams::from_origin(params.n_dim, params.m, params.alpha, params.beta, 1.0, params.p);
    pp.validate()?;
    let level = 1.0 / d;
    let series = Series::new(&pp)?;
    let r0 = series.start_radius(rtol).min(0.1 * r_max);
    let mut traj = Trajectory::new(pp, r_max);
    let f1 = rhs(pp, None);
    let g1 = |y: &State| y[0] - level;

    let (s0, y_s0) = if series.u(r0) <= level {
        // crossing inside the series region
        let (mut lo, mut hi) = (0.0, r0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series.u(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        push_series(&mut traj, &series, hi);
        (hi, [level, series.q(hi)])
    } else {
        push_series(&mut traj, &series, r0);
        let mut path = Path::default();
        let out = ode::integrate(&f1, &g1, r0, [series.u(r0), series.q(r0)], r_max, &ode_options(rtol, 0.01 * r0), &mut path)?;
        append_path(&mut traj, &path);
        match out.event {
            Some(s0) => (s0, [*traj.u.last().unwrap(), *traj.q.last().unwrap()]),
            None => return Err(Error::NoCrossing { level, r_max }),
        }
    };
    traj.switch_radius = Some(s0);
    if s0 >= r_max {
        return Ok(traj);
    }
    let broken = Broken { s0, d, gamma: params.gamma };
    let f2 = rhs(pp, Some(broken));
    let g2 = |y: &State| y[0];
    let mut path = Path::default();
    let h0 = 1e-3 * s0.max(1e-6);
    let out = ode::integrate(&f2, &g2, s0, y_s0, r_max, &ode_options(rtol, h0), &mut path)?;
    // the node at s0 is already present; its u' must switch to the broken branch
    let k = traj.r.len() - 1;
    traj.r.truncate(k);
    traj.u.truncate(k);
    traj.du.truncate(k);
    traj.q.truncate(k);
    traj.dq.truncate(k);
    append_path(&mut traj, &path);
    traj.first_zero = out.event;
    traj.diffusion = Some(broken);
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Radii of the inspected positivity window.
    pub window: (f64, f64),
    pub sup_u: f64,
    pub min_u_rho: f64,
    /// Largest node-to-node increase of U_ρ (≤ 0 when nonincreasing).
    pub max_u_rho_increase: f64,
    /// Largest node-to-node decrease of r^ρ u (≤ 0 when nondecreasing).
    pub max_r_rho_u_decrease: f64,
}

impl MonotonicityReport {
    /// Check against the absolute tolerance `tol` (scaled by 1 + ‖u‖ for the sign).
    pub fn holds(&self, tol: f64) -> bool {
        self.min_u_rho >= -tol * (1.0 + self.sup_u)
            && self.max_u_rho_increase <= tol
            && self.max_r_rho_u_decrease <= tol
    }
}

/// Sign and monotonicity of U_ρ and r^ρ u on the positivity window.
pub fn lemma21_diagnostics(traj: &Trajectory, rho: f64) -> MonotonicityReport {
    let end = traj.positivity_end().max(1);
    let ur = traj.u_rho(rho);
    let rr = traj.r_rho_u(rho);
    let mut rep = MonotonicityReport {
        window: (traj.r[0], traj.r[end - 1]),
        sup_u: traj.u[..end].iter().fold(0.0_f64, |a, &u| a.max(u.abs())),
        min_u_rho: ur[..end].iter().copied().fold(f64::INFINITY, f64::min),
        max_u_rho_increase: f64::NEG_INFINITY,
        max_r_rho_u_decrease: f64::NEG_INFINITY,
    };
    for i in 0..end.saturating_sub(1) {
        rep.max_u_rho_increase = rep.max_u_rho_increase.max(ur[i + 1] - ur[i]);
        rep.max_r_rho_u_decrease = rep.max_r_rho_u_decrease.max(rr[i] - rr[i + 1]);
    }
    rep
}

/// Decay exponent e with r^{N+β} u^{℘+1} ≤ C r^{−e}, and whether the
/// N + β = ϱ℘ branch applies.
pub fn decay_exponent(pp: &PurePowerParams) -> (f64, bool) {
    let nb = pp.n_dim + pp.beta;
    let na_m = pp.n_dim + pp.alpha - pp.m;
    let rho_wp = pp.rho() * pp.wp;
    let critical = !gt_tol((nb - rho_wp).abs(), 0.0);
    if critical {
        ((na_m * (pp.wp + 1.0) - (pp.m - 1.0) * nb) / (pp.m - 1.0), true)
    } else {
        ((pp.m * nb - na_m * (pp.wp + 1.0)) / (pp.wp - pp.m + 1.0), false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub exponent: f64,
    pub equal_branch: bool,
    pub window: (f64, f64),
    /// sup of r^{N+β} u^{℘+1} r^{e} over the window.
    pub scaled_sup: f64,
}

/// Empirical constant of the a priori decay bound over [end/4, end] of the
/// positivity window.
pub fn lemma22_bound_check(traj: &Trajectory, pp: &PurePowerParams) -> BoundReport {
    let (e, eq) = decay_exponent(pp);
    let end = traj.positivity_end().max(1);
    let r_end = traj.r[end - 1];
    let lo = r_end / 4.0;
    let nb = pp.n_dim + pp.beta;
    let mut sup = 0.0_f64;
    for i in 0..end {
        let r = traj.r[i];
        if r >= lo {
            let t = r.powf(nb) * traj.u[i].max(0.0).powf(pp.wp + 1.0) * r.powf(e);
            sup = sup.max(t);
        }
    }
    BoundReport { exponent: e, equal_branch: eq, window: (lo, r_end), scaled_sup: sup }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub r_end: f64,
    /// r^{N+β} u^{℘+1} at the window end.
    pub tail: f64,
    /// tail(r_end) / tail(r_end / 2).
    pub ratio: f64,
}

/// Tail weight at the end of the positivity window and its ratio across a
/// halving of the radius.
pub fn decay_check(traj: &Trajectory, pp: &PurePowerParams) -> Result<DecayReport> {
    let end = traj.positivity_end().max(1);
    let r_end = traj.r[end - 1];
    let nb = pp.n_dim + pp.beta;
    let tw = |r: f64, u: f64| r.powf(nb) * u.max(0.0).powf(pp.wp + 1.0);
    let tail = tw(r_end, traj.u[end - 1]);
    let (uh, _, _) = traj.eval(0.5 * r_end)?;
    let half = tw(0.5 * r_end, uh);
    Ok(DecayReport { r_end, tail, ratio: tail / half })
}
