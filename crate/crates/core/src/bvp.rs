//! The fixed-point operator
//!
//! ```text
//! F(v)(r) = ∫_r^R [ (a(s) + g_k(v(s)))^γ / s^{N+α-1} · ∫_0^s τ^{N+β-1} v(τ)^p dτ ]^{1/(m-1)} ds
//! ```
//!
//! its forced variant, and a damped Picard solver built on it.
//!
//! F builds v(R) = 0 and v'(0) = 0 into every iterate, so boundary
//! conditions never need to be imposed separately.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linear_moment_weights, Neumaier, RadialGrid, RadialProfile};
use crate::model::{CoefficientSpec, ProblemParams};

/// Precomputed quadrature weights and coefficient samples for one grid.
pub(crate) struct Kernel<'a> {
    pp: ProblemParams,
    coeffs: &'a CoefficientSpec,
    x: &'a [f64],
    wa: Vec<f64>,
    wb: Vec<f64>,
    /// s^{-(N+α-1)}
    inv_w: Vec<f64>,
    a: Vec<f64>,
    /// Exponent of the outer integrand at the origin, (β−α+1)/(m−1).
    e: f64,
}

impl<'a> Kernel<'a> {
    pub fn new(pp: &ProblemParams, coeffs: &'a CoefficientSpec, x: &'a [f64]) -> Result<Self> {
        let nu = pp.n_dim + pp.beta - 1.0;
        if !(nu > -1.0) {
            return Err(Error::NonIntegrableWeight(nu));
        }
        if pp.ba_m() <= 0.0 {
            return Err(Error::OriginSingularity(pp.ba_m()));
        }
        let n = x.len() - 1;
        let (mut wa, mut wb) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (a, b) = linear_moment_weights(x[i], x[i + 1], nu);
            wa.push(a);
            wb.push(b);
        }
        let na1 = pp.n_dim + pp.alpha - 1.0;
        let inv_w = x.iter().map(|&s| if s > 0.0 { s.powf(-na1) } else { 0.0 }).collect();
        let a = x.iter().map(|&s| coeffs.a_unchecked(s)).collect();
        Ok(Self { pp: *pp, coeffs, x, wa, wb, inv_w, a, e: pp.ba_1() / (pp.m - 1.0) })
    }

    fn source(&self, v: &[f64], forcing: f64) -> Vec<f64> {
        let p = self.pp.p;
        v.iter().map(|&t| t.max(0.0).powf(p) + forcing).collect()
    }

    /// Inner integral ∫_0^s τ^{N+β-1} f(τ) dτ at every node.
    fn inner(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        out.push(0.0);
        let mut acc = Neumaier::default();
        for i in 0..f.len() - 1 {
            acc.add(self.wa[i] * f[i] + self.wb[i] * f[i + 1]);
            out.push(acc.value());
        }
        out
    }

    /// Returns (F(v), −outer integrand), the latter being the derivative of F(v).
    pub fn apply(&self, k: Option<f64>, v: &[f64], forcing: f64) -> (Vec<f64>, Vec<f64>) {
        let gamma = self.pp.gamma;
        let inv_m1 = 1.0 / (self.pp.m - 1.0);
        let inner = self.inner(&self.source(v, forcing));
        let n = self.x.len() - 1;
        let mut phi = vec![0.0; n + 1];
        for i in 1..=n {
            let mut base = inner[i] * self.inv_w[i];
            if gamma != 0.0 {
                base *= (self.a[i] + self.coeffs.g_trunc(k, v[i])).powf(gamma);
            }
            phi[i] = if inv_m1 == 1.0 { base } else { base.max(0.0).powf(inv_m1) };
        }
        // phi(s) ~ C s^e near the origin.
        phi[0] = if self.e > 0.0 { 0.0 } else { phi[1] };
        let mut out = vec![0.0; n + 1];
        let mut acc = Neumaier::default();
        for i in (1..n).rev() {
            acc.add(0.5 * (self.x[i + 1] - self.x[i]) * (phi[i] + phi[i + 1]));
            out[i] = acc.value();
        }
        acc.add(phi[1] * self.x[1] / (self.e + 1.0));
        out[0] = acc.value();
        let deriv = phi.into_iter().map(|t| -t).collect();
        (out, deriv)
    }

    pub fn sup_apply(&self, k: Option<f64>, v: &[f64]) -> f64 {
        // F(v) is nonincreasing, its maximum sits at the origin.
        self.apply(k, v, 0.0).0[0]
    }
}

fn check_profile(pp: &ProblemParams, v: &RadialProfile) -> Result<()> {
    let grid = v.grid();
    if grid.start() != 0.0 || (grid.end() - pp.radius).abs() > 1e-12 * pp.radius {
        return Err(Error::BadGrid(format!(
            "profile must live on [0, R = {}], got [{}, {}]",
            pp.radius,
            grid.start(),
            grid.end()
        )));
    }
    Ok(())
}

/// F(v) with the truncation g_k (`k = None` for no truncation). The returned
/// profile carries its derivative channel.
pub fn apply_f(
    pp: &ProblemParams,
    coeffs: &CoefficientSpec,
    k: Option<f64>,
    v: &RadialProfile,
) -> Result<RadialProfile> {
    apply_f_forced(pp, coeffs, k, 0.0, pp.p + 1.0, v)
}

/// h(t) = t^{q−p} for t ≥ 1, 1 below.
pub fn forcing_h(t: f64, q_minus_p: f64) -> f64 {
    if t >= 1.0 {
        t.powf(q_minus_p)
    } else {
        1.0
    }
}

/// F with source v^p + ξ/h(‖v‖∞).
pub fn apply_f_forced(
    pp: &ProblemParams,
    coeffs: &CoefficientSpec,
    k: Option<f64>,
    xi: f64,
    q: f64,
    v: &RadialProfile,
) -> Result<RadialProfile> {
    check_profile(pp, v)?;
    if !(xi >= 0.0) {
        return Err(Error::InvalidParameter("forcing xi ≥ 0".into()));
    }
    if !(q > pp.p) {
        return Err(Error::InvalidParameter("q > p".into()));
    }
    if let Some(k) = k {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter("truncation level k > 0".into()));
        }
    }
    let kernel = Kernel::new(pp, coeffs, v.nodes())?;
    let forcing = xi / forcing_h(v.sup_norm(), q - pp.p);
    let (out, d) = kernel.apply(k, v.values(), forcing);
    RadialProfile::new(v.grid().clone(), out)?.with_derivative(d)
}

/// Three-point derivative on a nonuniform grid.
pub(crate) fn numerical_derivative(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let mut d = vec![0.0; n + 1];
    for i in 1..n {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = (-h1 / (h0 * (h0 + h1))) * v[i - 1]
            + ((h1 - h0) / (h0 * h1)) * v[i]
            + (h0 / (h1 * (h0 + h1))) * v[i + 1];
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * v[0] + (h0 + h1) / (h0 * h1) * v[1]
        - h0 / (h1 * (h0 + h1)) * v[2];
    let (h0, h1) = (x[n - 1] - x[n - 2], x[n] - x[n - 1]);
    d[n] = h1 / (h0 * (h0 + h1)) * v[n - 2] - (h0 + h1) / (h0 * h1) * v[n - 1]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * v[n];
    d
}

/// Normalized defect of the integrated equation
/// `max |flux(r) − ∫_0^r s^{N+β−1} v^p| / (1 + ∫_0^R s^{N+β−1} v^p)`.
pub fn ode_residual(pp: &ProblemParams, coeffs: &CoefficientSpec, v: &RadialProfile) -> Result<f64> {
    let x = v.nodes();
    let owned;
    let dv = match v.derivative() {
        Some(d) => d,
        None => {
            if v.grid().count() < 32 {
                return Err(Error::MissingDerivative(v.grid().count()));
            }
            owned = numerical_derivative(x, v.values());
            &owned
        }
    };
    let kernel = Kernel::new(pp, coeffs, x)?;
    let inner = kernel.inner(&kernel.source(v.values(), 0.0));
    let total = inner[inner.len() - 1];
    let na1 = pp.n_dim + pp.alpha - 1.0;
    let mut worst = 0.0_f64;
    for (i, &r) in x.iter().enumerate() {
        let d = dv[i];
        let flux = if r > 0.0 {
            let diff = (kernel.a[i] + coeffs.g_trunc(None, v.values()[i])).powf(pp.gamma);
            -r.powf(na1) * d.abs().powf(pp.m - 1.0).copysign(d) / diff
        } else {
            0.0
        };
        worst = worst.max((flux - inner[i]).abs());
    }
    Ok(worst / (1.0 + total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PicardScheme {
    /// Rescale each iterate onto the fixed point of its ray before the
    /// damped update. Stable for superlinear sources.
    RayNormalized,
    /// v ← (1−θ)v + θF(v).
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// c·(1 − (r/R)²)
    Parabolic(f64),
    Constant(f64),
    Supplied(RadialProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_cap: f64,
    pub initial_guess: InitialGuess,
    pub scheme: PicardScheme,
    /// Grid cells.
    pub n: usize,
    /// Grading exponent; `None` picks the default for the parameters.
    pub kappa: Option<f64>,
    /// Upper bound on [`ode_residual`] for a converged report.
    pub residual_tol: f64,
    /// Re-solve on 2n cells and demand agreement before reporting convergence.
    pub refine_check: bool,
    /// Relative sup-norm change allowed by the refinement check.
    pub refine_tol: f64,
    /// Truncation level of g; `None` for none.
    pub truncation: Option<f64>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
            divergence_cap: 1e8,
            initial_guess: InitialGuess::Parabolic(1.0),
            scheme: PicardScheme::RayNormalized,
            n: 1024,
            kappa: None,
            residual_tol: 1e-6,
            refine_check: true,
            refine_tol: 1e-2,
            truncation: None,
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter("damping theta in (0, 1]".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol > 0".into()));
        }
        if !(self.divergence_cap > 1.0) {
            return Err(Error::InvalidParameter("divergence_cap > 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    Diverged,
    CollapsedToZero,
    OriginBlowup,
    Stalled,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::Diverged => "Diverged",
            SolveStatus::CollapsedToZero => "CollapsedToZero",
            SolveStatus::OriginBlowup => "OriginBlowup",
            SolveStatus::Stalled => "Stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    #[serde(skip)]
    pub solution: Option<RadialProfile>,
    pub iterations: usize,
    pub final_update: f64,
    pub ode_residual: Option<f64>,
    #[serde(skip)]
    pub picard_history: Vec<f64>,
    /// Sup norm of the last iterate.
    pub amplitude: f64,
    /// Damping in force when the iteration stopped.
    pub theta: f64,
    /// Why a non-converged status was chosen, when not self-explanatory.
    pub reason: Option<String>,
}

impl SolveReport {
    fn bare(status: SolveStatus, reason: Option<String>) -> Self {
        Self {
            status,
            solution: None,
            iterations: 0,
            final_update: f64::NAN,
            ode_residual: None,
            picard_history: Vec::new(),
            amplitude: f64::NAN,
            theta: f64::NAN,
            reason,
        }
    }
}

/// Brent's method on a bracketing interval.
fn brent(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    b
}

enum RayScale {
    Found(f64),
    TooLarge,
    TooSmall,
}

/// Solve ‖F(c·w)‖∞ = c for c > 0 in log-coordinates, starting near `guess`.
fn ray_scale(kernel: &Kernel, k: Option<f64>, w: &[f64], guess: f64, cap: f64) -> RayScale {
    let mut buf = vec![0.0; w.len()];
    let mut phi = |lc: f64| {
        let c = lc.exp();
        for (b, &t) in buf.iter_mut().zip(w) {
            *b = c * t;
        }
        let s = kernel.sup_apply(k, &buf);
        if s <= 0.0 {
            f64::NEG_INFINITY
        } else {
            s.ln() - lc
        }
    };
    let lcap = cap.ln();
    let lmin = -600.0;
    let g = guess.ln().clamp(lmin, lcap);
    let f0 = phi(g);
    if f0 == 0.0 {
        return RayScale::Found(g.exp());
    }
    // March outward in the direction of the sign change.
    let mut step = 0.05;
    let (mut a, mut fa) = (g, f0);
    loop {
        let b = if f0 < 0.0 { a + step } else { a - step };
        if b > lcap + 1.0 {
            return RayScale::TooLarge;
        }
        if b < lmin {
            return if f0 < 0.0 { RayScale::TooLarge } else { RayScale::TooSmall };
        }
        let fb = phi(b);
        if fb.is_finite() && fb.signum() != fa.signum() {
            let root = brent(&mut phi, a, b, fa, fb, 1e-14);
            return RayScale::Found(root.exp());
        }
        if fb == f64::NEG_INFINITY {
            return RayScale::TooSmall;
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
}

fn initial_profile(pp: &ProblemParams, grid: &Arc<RadialGrid>, guess: &InitialGuess) -> Result<Vec<f64>> {
    let r = pp.radius;
    Ok(match guess {
        InitialGuess::Parabolic(c) => grid.nodes().iter().map(|x| c * (1.0 - (x / r).powi(2))).collect(),
        InitialGuess::Constant(c) => vec![*c; grid.count() + 1],
        InitialGuess::Supplied(p) => p.resample(grid.clone())?.values().to_vec(),
    })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, t| a.max(t.abs()))
}

/// Damped Picard iteration on a single grid, without the refinement check.
fn picard_on_grid(
    pp: &ProblemParams,
    coeffs: &CoefficientSpec,
    opts: &PicardOptions,
    grid: &Arc<RadialGrid>,
) -> Result<SolveReport> {
    let kernel = Kernel::new(pp, coeffs, grid.nodes())?;
    let k = opts.truncation;
    let mut v = initial_profile(pp, grid, &opts.initial_guess)?;
    let init_sup = sup(&v);
    let mut theta = opts.theta;
    let mut history = Vec::new();
    let mut grow_streak = 0;
    let mut scale_guess = init_sup.max(1e-300);

    let finish = |status, v: Vec<f64>, it, upd, history: Vec<f64>, theta, reason: Option<String>| {
        let mut rep = SolveReport::bare(status, reason);
        rep.amplitude = sup(&v);
        rep.iterations = it;
        rep.final_update = upd;
        rep.picard_history = history;
        rep.theta = theta;
        rep
    };

    if init_sup == 0.0 {
        let (fv, _) = kernel.apply(k, &v, 0.0);
        return Ok(finish(SolveStatus::CollapsedToZero, fv, 1, 0.0, vec![0.0], theta, None));
    }

    for it in 1..=opts.max_iter {
        let (base, fv) = match opts.scheme {
            PicardScheme::Plain => {
                let (fv, _) = kernel.apply(k, &v, 0.0);
                (v.clone(), fv)
            }
            PicardScheme::RayNormalized => {
                let s = sup(&v);
                if s == 0.0 || !s.is_finite() {
                    return Ok(finish(SolveStatus::CollapsedToZero, v, it, f64::NAN, history, theta, None));
                }
                let w: Vec<f64> = v.iter().map(|t| t / s).collect();
                let c = match ray_scale(&kernel, k, &w, scale_guess, opts.divergence_cap) {
                    RayScale::Found(c) => c,
                    RayScale::TooLarge => {
                        let reason = Some("no amplitude below the divergence cap".to_string());
                        return Ok(finish(SolveStatus::Diverged, v, it, f64::NAN, history, theta, reason));
                    }
                    RayScale::TooSmall => {
                        let reason = Some("iterate shape admits only the zero amplitude".to_string());
                        return Ok(finish(SolveStatus::CollapsedToZero, v, it, f64::NAN, history, theta, reason));
                    }
                };
                scale_guess = c;
                let base: Vec<f64> = w.iter().map(|t| c * t).collect();
                let (fv, _) = kernel.apply(k, &base, 0.0);
                (base, fv)
            }
        };
        let denom = sup(&base).max(1e-300);
        let diff = base.iter().zip(&fv).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        let upd = diff / denom;
        if let Some(&last) = history.last() {
            if upd > last {
                grow_streak += 1;
                if grow_streak >= 2 {
                    theta = (theta * 0.5).max(1e-6);
                    grow_streak = 0;
                }
            } else {
                grow_streak = 0;
            }
        }
        history.push(upd);
        let fsup = sup(&fv);
        if !fsup.is_finite() || fsup > opts.divergence_cap {
            return Ok(finish(SolveStatus::Diverged, fv, it, upd, history, theta, None));
        }
        if fsup < opts.tol * init_sup {
            return Ok(finish(SolveStatus::CollapsedToZero, fv, it, upd, history, theta, None));
        }
        if upd < opts.tol {
            let (sol, dsol) = kernel.apply(k, &base, 0.0);
            let profile = RadialProfile::new(grid.clone(), sol.clone())?.with_derivative(dsol)?;
            let mut rep = finish(SolveStatus::Converged, sol, it, upd, history, theta, None);
            rep.solution = Some(profile);
            return Ok(rep);
        }
        v = base.iter().zip(&fv).map(|(b, f)| (1.0 - theta) * b + theta * f).collect();
    }
    let upd = history.last().copied().unwrap_or(f64::NAN);
    Ok(finish(SolveStatus::Stalled, v, opts.max_iter, upd, history, theta, None))
}

fn grid_for(pp: &ProblemParams, opts: &PicardOptions, n: usize) -> Result<Arc<RadialGrid>> {
    let kappa = opts.kappa.unwrap_or_else(|| pp.default_grading());
    Ok(Arc::new(RadialGrid::graded(pp.radius, n, kappa)?))
}

/// Positive on [0, R), strictly decreasing there, zero at R.
fn positive_decreasing(v: &[f64]) -> bool {
    let n = v.len() - 1;
    v[n] == 0.0 && v[..n].iter().all(|&t| t > 0.0) && v.windows(2).all(|w| w[1] < w[0])
}

/// Damped Picard iteration on F.
///
/// Convergence additionally requires a positive strictly decreasing profile,
/// an ODE residual within `residual_tol`, and (with `refine_check`) agreement
/// of the amplitude with a solve on a grid twice as fine.
pub fn picard_solve(pp: &ProblemParams, coeffs: &CoefficientSpec, opts: &PicardOptions) -> Result<SolveReport> {
    pp.validate()?;
    coeffs.validate()?;
    opts.validate()?;
    if pp.ba_m() <= 0.0 {
        return Ok(SolveReport::bare(
            SolveStatus::OriginBlowup,
            Some(format!("outer integrand ~ s^{} is not integrable at 0", pp.ba_1() / (pp.m - 1.0))),
        ));
    }
    let grid = grid_for(pp, opts, opts.n)?;
    let mut rep = picard_on_grid(pp, coeffs, opts, &grid)?;
    if rep.status != SolveStatus::Converged {
        return Ok(rep);
    }
    let sol = rep.solution.clone().expect("converged report carries a profile");
    if !positive_decreasing(sol.values()) {
        rep.status = SolveStatus::Diverged;
        rep.reason = Some("fixed point is not positive and strictly decreasing".into());
        return Ok(rep);
    }
    let res = ode_residual(pp, coeffs, &sol)?;
    rep.ode_residual = Some(res);
    if res > opts.residual_tol {
        rep.status = SolveStatus::Stalled;
        rep.reason = Some(format!("ode residual {res} above {}", opts.residual_tol));
        return Ok(rep);
    }
    if opts.refine_check {
        let fine = grid_for(pp, opts, 2 * opts.n)?;
        let other = picard_on_grid(pp, coeffs, opts, &fine)?;
        let ok = match (&other.status, &other.solution) {
            (SolveStatus::Converged, Some(s)) => {
                (s.sup_norm() - sol.sup_norm()).abs() <= opts.refine_tol * sol.sup_norm()
            }
            _ => false,
        };
        if !ok {
            rep.status = SolveStatus::Diverged;
            rep.reason = Some(format!(
                "fixed point unresolved under refinement (2n solve: {}, amplitude {} vs {})",
                other.status.as_str(),
                other.amplitude,
                sol.sup_norm()
            ));
        }
    }
    Ok(rep)
}
