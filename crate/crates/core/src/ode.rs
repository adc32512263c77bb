//! Dormand–Prince 8(5,3) stepper with Hairer's error norm and step control,
//! plus sign-change event location by re-stepping from the step start.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 1.0 / 3.0;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

pub(crate) type State = [f64; 2];

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        *o += h * s;
    }
    out
}

pub(crate) struct StepResult {
    pub y: State,
    pub f: State,
    /// Hairer's scaled error; accept when ≤ 1.
    pub err: f64,
}

/// One DOP853 step of size h from (x, y) with f(x, y) = k1 known.
pub(crate) fn step(
    f: &impl Fn(f64, &State) -> State,
    x: f64,
    y: &State,
    k1: &State,
    h: f64,
    rtol: f64,
    atol: f64,
) -> StepResult {
    let k2 = f(x + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &axpy(y, h, &[(A41, k1), (A43, &k3)]));
    let k5 = f(x + C5 * h, &axpy(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]));
    let k6 = f(x + C6 * h, &axpy(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]));
    let k7 = f(x + C7 * h, &axpy(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]));
    let k8 = f(
        x + C8 * h,
        &axpy(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
    );
    let k9 = f(
        x + C9 * h,
        &axpy(y, h, &[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)]),
    );
    let k10 = f(
        x + C10 * h,
        &axpy(
            y,
            h,
            &[(A101, k1), (A104, &k4), (A105, &k5), (A106, &k6), (A107, &k7), (A108, &k8), (A109, &k9)],
        ),
    );
    let k11 = f(
        x + C11 * h,
        &axpy(
            y,
            h,
            &[
                (A111, k1),
                (A114, &k4),
                (A115, &k5),
                (A116, &k6),
                (A117, &k7),
                (A118, &k8),
                (A119, &k9),
                (A1110, &k10),
            ],
        ),
    );
    let k12 = f(
        x + h,
        &axpy(
            y,
            h,
            &[
                (A121, k1),
                (A124, &k4),
                (A125, &k5),
                (A126, &k6),
                (A127, &k7),
                (A128, &k8),
                (A129, &k9),
                (A1210, &k10),
                (A1211, &k11),
            ],
        ),
    );
    let mut incr = [0.0; 2];
    for i in 0..2 {
        incr[i] = B1 * k1[i]
            + B6 * k6[i]
            + B7 * k7[i]
            + B8 * k8[i]
            + B9 * k9[i]
            + B10 * k10[i]
            + B11 * k11[i]
            + B12 * k12[i];
    }
    let ynew = [y[0] + h * incr[0], y[1] + h * incr[1]];
    let (mut err, mut err2) = (0.0, 0.0);
    for i in 0..2 {
        let sk = atol + rtol * y[i].abs().max(ynew[i].abs());
        let e2 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
        err2 += (e2 / sk).powi(2);
        let e = ER1 * k1[i]
            + ER6 * k6[i]
            + ER7 * k7[i]
            + ER8 * k8[i]
            + ER9 * k9[i]
            + ER10 * k10[i]
            + ER11 * k11[i]
            + ER12 * k12[i];
        err += (e / sk).powi(2);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * err * (1.0 / (deno * 2.0)).sqrt();
    let fnew = f(x + h, &ynew);
    StepResult { y: ynew, f: fnew, err: if err.is_finite() { err } else { f64::INFINITY } }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Maximal step as a fraction of x (plus an absolute floor).
    pub max_step_rel: f64,
    pub max_step_abs: f64,
    pub h0: f64,
    pub event_tol: f64,
}

/// Accepted nodes with state and right-hand side at each.
#[derive(Debug, Clone, Default)]
pub(crate) struct Path {
    pub x: Vec<f64>,
    pub y: Vec<State>,
    pub f: Vec<State>,
}

impl Path {
    fn push(&mut self, x: f64, y: State, f: State) {
        self.x.push(x);
        self.y.push(y);
        self.f.push(f);
    }
}

pub(crate) struct OdeOutcome {
    /// Location of the event, if it fired.
    pub event: Option<f64>,
}

/// Integrate from (x0, y0) to x_end, stopping where `g` first drops to zero
/// from a positive value. The event node is appended to the path.
pub(crate) fn integrate(
    f: &impl Fn(f64, &State) -> State,
    g: &impl Fn(&State) -> f64,
    x0: f64,
    y0: State,
    x_end: f64,
    opts: &OdeOptions,
    path: &mut Path,
) -> Result<OdeOutcome> {
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    if path.x.last() != Some(&x) {
        path.push(x, y, k1);
    }
    let mut h = opts.h0.min(x_end - x);
    let mut rejected = false;
    while x < x_end {
        let hmax = opts.max_step_rel * x + opts.max_step_abs;
        h = h.min(hmax).min(x_end - x);
        if h <= 1e-14 * x.abs().max(1e-300) {
            return Err(Error::StepFailure(x));
        }
        let st = step(f, x, &y, &k1, h, opts.rtol, opts.atol);
        let fac11 = st.err.powf(0.125);
        if st.err <= 1.0 {
            let gnew = g(&st.y);
            if gnew <= 0.0 && g(&y) > 0.0 {
                let xe = locate_event(f, g, x, &y, &k1, h, opts);
                let ye = if xe == x + h { st.y } else { step(f, x, &y, &k1, xe - x, opts.rtol, opts.atol).y };
                if xe > x {
                    path.push(xe, ye, f(xe, &ye));
                }
                return Ok(OdeOutcome { event: Some(xe) });
            }
            let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 1.0 / 0.333);
            let mut hnew = h / fac;
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
            x += h;
            if x_end - x < 1e-13 * x_end.abs() {
                x = x_end;
            }
            y = st.y;
            k1 = st.f;
            path.push(x, y, k1);
            h = hnew;
        } else {
            rejected = true;
            h /= (fac11 / 0.9).min(1.0 / 0.333);
        }
    }
    Ok(OdeOutcome { event: None })
}

/// Bisection on the step length until |g| ≤ event_tol.
fn locate_event(
    f: &impl Fn(f64, &State) -> State,
    g: &impl Fn(&State) -> f64,
    x: f64,
    y: &State,
    k1: &State,
    h: f64,
    opts: &OdeOptions,
) -> f64 {
    let (mut lo, mut hi) = (0.0, h);
    let mut best = h;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(&step(f, x, y, k1, mid, opts.rtol, opts.atol).y);
        if gm.abs() <= opts.event_tol {
            best = mid;
            break;
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        best = hi;
    }
    x + best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_first_zero() {
        // y0'' = −y0, y0(0) = 1, zero at π/2.
        let f = |_x: f64, y: &State| [y[1], -y[0]];
        let g = |y: &State| y[0];
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, max_step_rel: 1.0, max_step_abs: 0.1, h0: 1e-3, event_tol: 1e-13 };
        let mut path = Path::default();
        let out = integrate(&f, &g, 0.0, [1.0, 0.0], 10.0, &opts, &mut path).unwrap();
        let xe = out.event.unwrap();
        assert!((xe - std::f64::consts::FRAC_PI_2).abs() < 1e-11, "{xe}");
        for (x, y) in path.x.iter().zip(&path.y) {
            assert!((y[0] - x.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn exponential_growth_to_end() {
        let f = |_x: f64, y: &State| [y[0], 0.0];
        let g = |_y: &State| 1.0;
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-12, max_step_rel: 1.0, max_step_abs: 1.0, h0: 1e-2, event_tol: 1e-12 };
        let mut path = Path::default();
        let out = integrate(&f, &g, 0.0, [1.0, 0.0], 5.0, &opts, &mut path).unwrap();
        assert!(out.event.is_none());
        let last = path.y.last().unwrap()[0];
        assert!((last / 5.0_f64.exp() - 1.0).abs() < 1e-9);
        assert_eq!(*path.x.last().unwrap(), 5.0);
    }
}
