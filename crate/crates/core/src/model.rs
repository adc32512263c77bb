//! Problem parameters, coefficient families, closed-form exponents and the
//! existence / nonexistence regime classifier.
//!
//! The radial problem is
//!
//! ```text
//! -( r^{N+α-1} |v'|^{m-2} v' / (a(r) + g(v))^γ )' = r^{N+β-1} v^p,   0 < r < R,
//!  v'(0) = 0,  v(R) = 0.
//! ```
//!
//! Every threshold that decides the regime (`m*_{α,β}`, `m*_{α,β,γ}`, `Υ`,
//! `Υ₁`, `Υ₂`, `ϱ`, `σ*`) is evaluated here and nowhere else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for every threshold comparison.
pub const THRESHOLD_RTOL: f64 = 1e-12;

fn scale(a: f64, b: f64) -> f64 {
    THRESHOLD_RTOL * a.abs().max(b.abs()).max(1.0)
}

/// `a < b` beyond the comparison tolerance.
pub fn lt_tol(a: f64, b: f64) -> bool {
    a < b - scale(a, b)
}

/// `a >= b` up to the comparison tolerance.
pub fn ge_tol(a: f64, b: f64) -> bool {
    !lt_tol(a, b)
}

/// `a > b` beyond the comparison tolerance.
pub fn gt_tol(a: f64, b: f64) -> bool {
    a > b + scale(a, b)
}

/// `a <= b` up to the comparison tolerance.
pub fn le_tol(a: f64, b: f64) -> bool {
    !gt_tol(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Dimension. Real-valued so scans can cross it continuously.
    #[serde(rename = "N")]
    pub n_dim: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl ProblemParams {
    pub fn new(n_dim: f64, m: f64, alpha: f64, beta: f64, gamma: f64, p: f64, radius: f64) -> Self {
        Self { n_dim, m, alpha, beta, gamma, p, radius }
    }

    /// Basic invariants: m > 1, R > 0, p > 1, γ ≥ 0, all finite.
    pub fn validate(&self) -> Result<()> {
        let all = [self.n_dim, self.m, self.alpha, self.beta, self.gamma, self.p, self.radius];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("all parameters must be finite".into()));
        }
        if self.m <= 1.0 {
            return Err(Error::InvalidParameter("m > 1".into()));
        }
        if self.radius <= 0.0 {
            return Err(Error::InvalidParameter("R > 0".into()));
        }
        if self.p <= 1.0 {
            return Err(Error::InvalidParameter("p > 1".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter("gamma ≥ 0".into()));
        }
        Ok(())
    }

    /// N + α − m
    pub fn na_m(&self) -> f64 {
        self.n_dim + self.alpha - self.m
    }

    /// β − α + m
    pub fn ba_m(&self) -> f64 {
        self.beta - self.alpha + self.m
    }

    /// β − α + 1
    pub fn ba_1(&self) -> f64 {
        self.beta - self.alpha + 1.0
    }

    /// m(N + β + 1) − N − α, positive under (H0).
    pub fn first_sign(&self) -> f64 {
        self.m * (self.n_dim + self.beta + 1.0) - self.n_dim - self.alpha
    }

    /// α − β + m(N + β − 1)
    pub fn second_sign(&self) -> f64 {
        self.alpha - self.beta + self.m * (self.n_dim + self.beta - 1.0)
    }

    /// (H0): N + α − m > 0 and β − α + 1 > 0 (m > 1 is a type invariant).
    pub fn h0(&self) -> bool {
        self.m > 1.0 && gt_tol(self.na_m(), 0.0) && gt_tol(self.ba_1(), 0.0)
    }

    /// Exponent of the origin behaviour `v(0) - v(r) ~ r^{(β-α+m)/(m-1)}`.
    pub fn origin_exponent(&self) -> f64 {
        self.ba_m() / (self.m - 1.0)
    }

    /// Default grading `max(1, (m−1)/(β−α+1))` for BVP grids.
    pub fn default_grading(&self) -> f64 {
        let b = self.ba_1();
        if b > 0.0 {
            ((self.m - 1.0) / b).max(1.0)
        } else {
            1.0
        }
    }
}

/// a(r): bounded positive radial coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DiffusionWeight {
    Constant { c: f64 },
    /// a(r) = c1 + (c2 − c1)·exp(−r); nonincreasing from c2 to c1.
    ExpInterpolant { c1: f64, c2: f64 },
}

/// g(u): the solution-dependent part of the diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Nonlinearity {
    Zero,
    Linear,
    /// g(u) = u + A(1 − exp(−u)), A ≥ 0.
    LinearPlusSaturating { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub a: DiffusionWeight,
    pub g: Nonlinearity,
}

impl Default for CoefficientSpec {
    /// The prototype a ≡ 1, g(u) = u.
    fn default() -> Self {
        Self { a: DiffusionWeight::Constant { c: 1.0 }, g: Nonlinearity::Linear }
    }
}

impl CoefficientSpec {
    pub fn new(a: DiffusionWeight, g: Nonlinearity) -> Self {
        Self { a, g }
    }

    /// (c1, c2) with c1 ≤ a(r) ≤ c2.
    pub fn bounds(&self) -> (f64, f64) {
        match self.a {
            DiffusionWeight::Constant { c } => (c, c),
            DiffusionWeight::ExpInterpolant { c1, c2 } => (c1, c2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c1, c2) = self.bounds();
        if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
            return Err(Error::InvalidParameter("0 < c1 ≤ c2".into()));
        }
        if let Nonlinearity::LinearPlusSaturating { amplitude } = self.g {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(Error::InvalidParameter("A ≥ 0".into()));
            }
        }
        Ok(())
    }

    pub fn eval_a(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::NegativeArgument { what: "a(r)", value: r });
        }
        Ok(self.a_unchecked(r))
    }

    pub fn eval_g(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::NegativeArgument { what: "g(u)", value: u });
        }
        Ok(self.g_unchecked(u))
    }

    /// g_k(u) = g(min(u, k)).
    pub fn eval_g_truncated(&self, k: f64, u: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter("truncation level k > 0".into()));
        }
        if u < 0.0 {
            return Err(Error::NegativeArgument { what: "g_k(u)", value: u });
        }
        Ok(self.g_unchecked(u.min(k)))
    }

    pub(crate) fn a_unchecked(&self, r: f64) -> f64 {
        match self.a {
            DiffusionWeight::Constant { c } => c,
            DiffusionWeight::ExpInterpolant { c1, c2 } => c1 + (c2 - c1) * (-r).exp(),
        }
    }

    pub(crate) fn g_unchecked(&self, u: f64) -> f64 {
        match self.g {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => u,
            Nonlinearity::LinearPlusSaturating { amplitude } => u + amplitude * (-(-u).exp_m1()),
        }
    }

    /// g composed with the clamp at level k (`None` means no truncation).
    pub(crate) fn g_trunc(&self, k: Option<f64>, u: f64) -> f64 {
        let u = u.max(0.0);
        match k {
            Some(k) => self.g_unchecked(u.min(k)),
            None => self.g_unchecked(u),
        }
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        match self.a {
            DiffusionWeight::Constant { .. } => 0.0,
            DiffusionWeight::ExpInterpolant { c1, c2 } => -(c2 - c1) * (-r).exp(),
        }
    }

    pub fn g_prime(&self, u: f64) -> f64 {
        match self.g {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear => 1.0,
            Nonlinearity::LinearPlusSaturating { amplitude } => 1.0 + amplitude * (-u).exp(),
        }
    }
}

/// All derived exponents and thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub m_star_ab: f64,
    pub m_star_abg: f64,
    pub upsilon: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub rho: f64,
    pub sigma_star: f64,
    /// m(N−1)/(N−m); `None` when N = m.
    pub serrin: Option<f64>,
    /// m*_{α,β,γ} − 1, the critical power.
    pub critical_p: f64,
}

fn nonzero(x: f64, what: &'static str) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::DegenerateDenominator(what))
    } else {
        Ok(x)
    }
}

/// m*_{α,β,γ} from its defining display.
pub fn m_star_abg_direct(pp: &ProblemParams) -> f64 {
    let ProblemParams { n_dim: n, m, beta, gamma, .. } = *pp;
    (m * (m - 1.0) * (n + beta) - gamma * pp.first_sign()) / ((m - 1.0) * pp.na_m())
}

/// m*_{α,β,γ} through the reduction `m*_{α,β} − γ/(m−1)·(m*_{α,β} − 1)`.
pub fn m_star_abg_reduced(pp: &ProblemParams) -> f64 {
    let msab = pp.m * (pp.n_dim + pp.beta) / pp.na_m();
    msab - pp.gamma / (pp.m - 1.0) * (msab - 1.0)
}

pub fn compute_exponents(pp: &ProblemParams) -> Result<ExponentSet> {
    if !(pp.m > 1.0) {
        return Err(Error::InvalidParameter("m > 1".into()));
    }
    let ProblemParams { n_dim: n, m, alpha, beta, gamma, .. } = *pp;
    let na_m = nonzero(pp.na_m(), "N + alpha - m")?;
    let first = nonzero(pp.first_sign(), "m(N + beta + 1) - N - alpha")?;
    let second = pp.second_sign();
    let ups1_den = nonzero(m * (n + alpha - 1.0) - m + 1.0, "m(N + alpha - 1) - m + 1")?;
    let ups2_den = nonzero(na_m + (m - 1.0).powi(2), "N + alpha - m + (m - 1)^2")?;
    let sigma_den = nonzero((m - 1.0) * (m * second - gamma * first), "sigma* denominator")?;

    let m_star_ab = m * (n + beta) / na_m;
    let m_star_abg = m_star_abg_direct(pp);
    let upsilon = m * (m - 1.0) * pp.ba_m() / first;
    let upsilon1 = m * (m - 1.0) * second * (n + alpha - 1.0) / (first * ups1_den);
    let upsilon2 = m * (m - 1.0).powi(2) * second / (ups2_den * first);
    let rho = na_m / (m - 1.0);
    let sigma_star = (m * (m - 1.0).powi(2) * second - gamma * ups2_den * first) / sigma_den;
    let serrin = if n != m { Some(m * (n - 1.0) / (n - m)) } else { None };
    Ok(ExponentSet {
        m_star_ab,
        m_star_abg,
        upsilon,
        upsilon1,
        upsilon2,
        rho,
        sigma_star,
        serrin,
        critical_p: m_star_abg - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub h0: bool,
    pub h1: bool,
    pub h1_prime: bool,
    pub h2: bool,
    pub h3: bool,
    pub h2_prime: bool,
    pub h3_prime: bool,
}

/// (H1): m − 1 < p < m*_{α,β,γ} − 1 and 0 ≤ γ < Υ.
///
/// γ = 0 is admitted: the problem then has no diffusion and (H1) coincides
/// with (H1)'.
fn h1(pp: &ProblemParams, ex: &ExponentSet) -> bool {
    gt_tol(pp.p, pp.m - 1.0)
        && lt_tol(pp.p, ex.critical_p)
        && pp.gamma >= 0.0
        && lt_tol(pp.gamma, ex.upsilon)
}

fn h1_prime(pp: &ProblemParams, ex: &ExponentSet) -> bool {
    gt_tol(pp.p, pp.m - 1.0) && lt_tol(pp.p, ex.m_star_ab - 1.0)
}

pub fn check_hypotheses(pp: &ProblemParams, coeffs: &CoefficientSpec) -> HypothesisReport {
    let h0 = pp.h0();
    let ex = compute_exponents(pp).ok();
    let (h1v, h1p) = match (&ex, h0) {
        (Some(ex), true) => (h1(pp, ex), h1_prime(pp, ex)),
        _ => (false, false),
    };
    let (c1, c2) = coeffs.bounds();
    let h3 = c1 > 0.0 && c1 <= c2 && c2.is_finite();
    let h2 = match coeffs.g {
        Nonlinearity::Zero => false,
        Nonlinearity::Linear => true,
        Nonlinearity::LinearPlusSaturating { amplitude } => amplitude >= 0.0,
    };
    // Every g family is C¹; nondecreasing needs A ≥ 0.
    let h2_prime = match coeffs.g {
        Nonlinearity::LinearPlusSaturating { amplitude } => amplitude >= 0.0,
        _ => true,
    };
    // Constant a is trivially C¹ nonincreasing; the interpolant needs c2 ≥ c1.
    let h3_prime = h3;
    HypothesisReport { h0, h1: h1v, h1_prime: h1p, h2, h3, h2_prime, h3_prime }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ExistencePredicted,
    NonexistenceSupercriticalCaseI,
    NonexistenceSupercriticalCaseII,
    NonexistenceTheorem13,
    Indeterminate,
}

impl Verdict {
    pub fn is_nonexistence(self) -> bool {
        matches!(
            self,
            Verdict::NonexistenceSupercriticalCaseI
                | Verdict::NonexistenceSupercriticalCaseII
                | Verdict::NonexistenceTheorem13
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ExistencePredicted => "ExistencePredicted",
            Verdict::NonexistenceSupercriticalCaseI => "NonexistenceSupercriticalCaseI",
            Verdict::NonexistenceSupercriticalCaseII => "NonexistenceSupercriticalCaseII",
            Verdict::NonexistenceTheorem13 => "NonexistenceTheorem13",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub verdict: Verdict,
    pub checks: Vec<HypothesisCheck>,
    pub critical_p: Option<f64>,
}

pub fn classify_regime(pp: &ProblemParams) -> RegimeClassification {
    let h0 = pp.h0();
    let ex = compute_exponents(pp).ok();
    let case_i_geom = ge_tol(pp.m * (pp.n_dim + pp.alpha - 1.0), pp.ba_m());
    let thm13_geom = le_tol(pp.ba_m(), 0.0);
    let n_beta_pos = gt_tol(pp.n_dim + pp.beta, 0.0);

    let (h1v, h1p, sup, case_i, case_ii) = match (&ex, h0) {
        (Some(ex), true) => {
            let sup = ge_tol(pp.p, ex.critical_p);
            (
                h1(pp, ex),
                h1_prime(pp, ex),
                sup,
                lt_tol(pp.gamma, ex.upsilon) && case_i_geom,
                lt_tol(pp.gamma, ex.upsilon1) && !case_i_geom,
            )
        }
        _ => (false, false, false, false, false),
    };

    let verdict = if pp.gamma > 0.0 && n_beta_pos && thm13_geom {
        Verdict::NonexistenceTheorem13
    } else if h0 && h1v {
        Verdict::ExistencePredicted
    } else if h0 && sup && case_i {
        Verdict::NonexistenceSupercriticalCaseI
    } else if h0 && sup && case_ii {
        Verdict::NonexistenceSupercriticalCaseII
    } else {
        Verdict::Indeterminate
    };

    let check = |name: &str, satisfied: bool| HypothesisCheck { name: name.to_string(), satisfied };
    RegimeClassification {
        verdict,
        checks: vec![
            check("(H0)", h0),
            check("(H1)", h1v),
            check("(H1)'", h1p),
            check("(i)", case_i),
            check("(ii)", case_ii),
            check("beta-alpha+m<=0", thm13_geom),
            check("N+beta>0", n_beta_pos),
        ],
        critical_p: ex.map(|e| e.critical_p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pp(n: f64, m: f64, a: f64, b: f64, g: f64, p: f64) -> ProblemParams {
        ProblemParams::new(n, m, a, b, g, p, 1.0)
    }

    #[test]
    fn unweighted_reduces_to_sobolev() {
        let ex = compute_exponents(&pp(4.0, 2.0, 0.0, 0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(ex.m_star_ab, 4.0);
        assert_relative_eq!(ex.m_star_abg, 4.0);
        assert_relative_eq!(ex.rho, 2.0);
    }

    #[test]
    fn dual_formulas_agree_on_examples() {
        let p = pp(5.0, 2.0, 0.0, 0.0, 0.5, 2.0);
        let ex = compute_exponents(&p).unwrap();
        assert_relative_eq!(ex.m_star_ab, 10.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(ex.m_star_abg, 13.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(m_star_abg_reduced(&p), 13.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(ex.upsilon, 4.0 / 7.0, max_relative = 1e-14);

        let p = pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.0);
        let ex = compute_exponents(&p).unwrap();
        assert_relative_eq!(ex.m_star_abg, 3.4, max_relative = 1e-14);
        assert_relative_eq!(m_star_abg_reduced(&p), 3.4, max_relative = 1e-14);
        assert_relative_eq!(ex.critical_p, 2.4, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_denominator() {
        let err = compute_exponents(&pp(3.0, 3.0, 0.0, 0.0, 0.0, 2.0)).unwrap_err();
        assert_eq!(err.kind(), "DegenerateDenominator");
    }

    #[test]
    fn hypotheses_prototype_all_true() {
        let r = check_hypotheses(&pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.0), &CoefficientSpec::default());
        assert!(r.h0 && r.h1 && r.h1_prime && r.h2 && r.h3 && r.h2_prime && r.h3_prime);
    }

    #[test]
    fn hypotheses_h0_failures() {
        let c = CoefficientSpec::default();
        assert!(!check_hypotheses(&pp(4.0, 2.0, 2.0, -1.0, 0.2, 2.0), &c).h0);
        assert!(!check_hypotheses(&pp(3.0, 3.0, 0.0, 0.0, 0.2, 2.5), &c).h0);
    }

    #[test]
    fn zero_g_fails_h2_only() {
        let c = CoefficientSpec::new(DiffusionWeight::Constant { c: 1.0 }, Nonlinearity::Zero);
        let r = check_hypotheses(&pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.0), &c);
        assert!(!r.h2 && r.h2_prime && r.h3);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_regime(&pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.0)).verdict,
            Verdict::ExistencePredicted
        );
        assert_eq!(
            classify_regime(&pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.5)).verdict,
            Verdict::NonexistenceSupercriticalCaseI
        );
        let c = classify_regime(&pp(4.0, 2.0, 2.0, -1.0, 0.3, 2.0));
        assert_eq!(c.verdict, Verdict::NonexistenceTheorem13);
    }

    #[test]
    fn classify_at_exact_threshold_is_supercritical() {
        // 2.4 is not exactly representable; the tolerance decides.
        let c = classify_regime(&pp(4.0, 2.0, 0.0, 0.0, 0.2, 2.4));
        assert_eq!(c.verdict, Verdict::NonexistenceSupercriticalCaseI);
        assert_relative_eq!(c.critical_p.unwrap(), 2.4, max_relative = 1e-14);
    }

    #[test]
    fn classify_case_ii_gap_is_indeterminate() {
        // m(N+α−1) < β−α+m: N=3, m=2, α=-0.5, β=3 -> 2*1.5 = 3 < 5.5.
        let base = pp(3.0, 2.0, -0.5, 3.0, 0.0, 2.0);
        let ex = compute_exponents(&base).unwrap();
        assert!(ex.upsilon1 < ex.upsilon);
        let gamma = 0.5 * (ex.upsilon1 + ex.upsilon);
        let mut q = base;
        q.gamma = gamma;
        q.p = compute_exponents(&q).unwrap().critical_p + 0.1;
        assert_eq!(classify_regime(&q).verdict, Verdict::Indeterminate);
        q.gamma = 0.5 * ex.upsilon1;
        q.p = compute_exponents(&q).unwrap().critical_p + 0.1;
        assert_eq!(classify_regime(&q).verdict, Verdict::NonexistenceSupercriticalCaseII);
    }

    #[test]
    fn coefficient_evaluation() {
        let c = CoefficientSpec::new(DiffusionWeight::ExpInterpolant { c1: 1.0, c2: 2.0 }, Nonlinearity::Linear);
        assert_relative_eq!(c.eval_a(0.0).unwrap(), 2.0);
        assert_relative_eq!(c.eval_a(60.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(c.eval_g_truncated(3.0, 5.0).unwrap(), 3.0);
        assert_eq!(c.eval_g_truncated(3.0, 2.0).unwrap(), 2.0);
        assert_eq!(c.eval_a(-1.0).unwrap_err().kind(), "NegativeArgument");
        assert_eq!(c.eval_g(-1.0).unwrap_err().kind(), "NegativeArgument");
    }

    #[test]
    fn saturating_family_derivative_at_zero() {
        let c = CoefficientSpec::new(
            DiffusionWeight::Constant { c: 1.0 },
            Nonlinearity::LinearPlusSaturating { amplitude: 0.7 },
        );
        assert_eq!(c.eval_g(0.0).unwrap(), 0.0);
        assert_relative_eq!(c.g_prime(0.0), 1.7);
    }

    fn h0_tuple() -> impl Strategy<Value = ProblemParams> {
        (1.0f64..8.0, 1.1f64..4.0, 0.05f64..6.0, 0.05f64..4.0, 0.0f64..2.0, 1.05f64..8.0).prop_map(
            |(n, m, na_m, ba_1, gamma, p)| {
                let alpha = na_m + m - n;
                let beta = ba_1 + alpha - 1.0;
                ProblemParams::new(n, m, alpha, beta, gamma, p, 1.0)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn dual_formulas_agree(pp in h0_tuple()) {
            let (a, b) = (m_star_abg_direct(&pp), m_star_abg_reduced(&pp));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    proptest! {
        #[test]
        fn threshold_ordering(pp in h0_tuple()) {
            prop_assume!(pp.h0());
            if let Ok(ex) = compute_exponents(&pp) {
                prop_assert!(ex.upsilon < pp.m - 1.0);
                if pp.m * (pp.n_dim + pp.alpha - 1.0) < pp.ba_m() {
                    prop_assert!(ex.upsilon1 < ex.upsilon);
                }
                if (pp.m - 2.0) * pp.m >= pp.beta - pp.alpha {
                    prop_assert!(ex.upsilon2 > ex.upsilon);
                }
            }
        }

        #[test]
        fn sigma_window_under_nonexistence(pp in h0_tuple()) {
            let class = classify_regime(&pp);
            if matches!(class.verdict, Verdict::NonexistenceSupercriticalCaseI | Verdict::NonexistenceSupercriticalCaseII) {
                let ex = compute_exponents(&pp).unwrap();
                prop_assert!(ex.sigma_star > -pp.na_m() && ex.sigma_star <= pp.m - 1.0 + 1e-12, "{}", ex.sigma_star);
            }
        }

        #[test]
        fn classifier_is_deterministic(pp in h0_tuple()) {
            prop_assert_eq!(classify_regime(&pp), classify_regime(&pp));
        }

        #[test]
        fn g_families_nondecreasing(u1 in 0.0f64..50.0, du in 0.0f64..50.0, amp in 0.0f64..5.0) {
            for g in [Nonlinearity::Zero, Nonlinearity::Linear, Nonlinearity::LinearPlusSaturating { amplitude: amp }] {
                let c = CoefficientSpec::new(DiffusionWeight::Constant { c: 1.0 }, g);
                prop_assert!(c.eval_g(u1).unwrap() <= c.eval_g(u1 + du).unwrap());
            }
        }

        #[test]
        fn interpolant_nonincreasing(r1 in 0.0f64..30.0, dr in 0.0f64..30.0, c1 in 0.1f64..3.0, dc in 0.0f64..3.0) {
            let c = CoefficientSpec::new(DiffusionWeight::ExpInterpolant { c1, c2: c1 + dc }, Nonlinearity::Linear);
            prop_assert!(c.eval_a(r1).unwrap() >= c.eval_a(r1 + dr).unwrap());
        }

        #[test]
        fn saturating_family_is_asymptotically_linear(amp in 0.0f64..100.0) {
            let c = CoefficientSpec::new(DiffusionWeight::Constant { c: 1.0 }, Nonlinearity::LinearPlusSaturating { amplitude: amp });
            let ratio = c.eval_g(1e6).unwrap() / 1e6;
            prop_assert!((ratio - 1.0).abs() <= 1e-3);
        }
    }
}
