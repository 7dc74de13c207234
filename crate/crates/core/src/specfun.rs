//! Special functions and small numerical-analysis kernels.
//!
//! Everything here is a pure function of its arguments. The incomplete beta
//! function is the workhorse of the closed-form marginals; the quadrature and
//! bisection routines are used to normalise those marginals and to read
//! quantiles off them.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved_error:e}")]
    NoConvergence { estimate: f64, achieved_error: f64 },
    #[error("target {target} is outside the bracket [{f_lo}, {f_hi}]")]
    Bracket { target: f64, f_lo: f64, f_hi: f64 },
}

/// Shape pair `(a, b)` of a beta distribution; both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    a: f64,
    b: f64,
}

impl BetaShape {
    pub fn new(a: f64, b: f64) -> Result<Self, SpecFunError> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(SpecFunError::Domain(format!(
                "beta shape parameters must be positive and finite, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    /// Shape of the posterior of a Bernoulli rate after `s` successes in `n`
    /// trials under a flat prior: `Beta(s + 1, n - s + 1)`.
    pub fn from_counts(n: u64, s: u64) -> Self {
        debug_assert!(s <= n);
        Self {
            a: s as f64 + 1.0,
            b: (n - s) as f64 + 1.0,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn swap(self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    /// Log of the density at `x`; `-inf` outside `(0, 1)` except where the
    /// density has a finite limit at the boundary.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        let left = if self.a == 1.0 {
            0.0
        } else {
            (self.a - 1.0) * x.ln()
        };
        let right = if self.b == 1.0 {
            0.0
        } else {
            (self.b - 1.0) * (-x).ln_1p()
        };
        left + right - ln_beta(self.a, self.b)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }
}

const LANCZOS_G: f64 = 671.0 / 128.0;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// `ln Γ(x)` for `x > 0`, Lanczos approximation with `g = 671/128`.
pub fn log_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(SpecFunError::Domain(format!(
            "log_gamma requires a positive finite argument, got {x}"
        )));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    let mut y = x;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (SQRT_TWO_PI * ser / x).ln()
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    log_gamma_unchecked(a) + log_gamma_unchecked(b) - log_gamma_unchecked(a + b)
}

/// Both tails of the regularized incomplete beta function, in log space:
/// `(ln I_x(a, b), ln (1 - I_x(a, b)))`.
///
/// Each tail is computed directly on the side where the continued fraction
/// converges fast and the other one through `ln(-expm1(.))`, so neither value
/// loses relative accuracy when it is tiny.
pub fn ln_reg_inc_beta_tails(x: f64, shape: BetaShape) -> Result<(f64, f64), SpecFunError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(SpecFunError::Domain(format!(
            "incomplete beta argument must lie in [0, 1], got {x}"
        )));
    }
    Ok(tails_unchecked(x, shape))
}

pub(crate) fn tails_unchecked(x: f64, shape: BetaShape) -> (f64, f64) {
    let (a, b) = (shape.a, shape.b);
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x >= 1.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = ln_front + continued_fraction(x, a, b).ln() - a.ln();
        (lower, ln_one_minus_exp(lower))
    } else {
        let upper = ln_front + continued_fraction(1.0 - x, b, a).ln() - b.ln();
        (ln_one_minus_exp(upper), upper)
    }
}

/// `ln(1 - e^v)` for `v <= 0`.
pub(crate) fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// `ln I_x(a, b)`.
pub fn ln_reg_inc_beta(x: f64, shape: BetaShape) -> Result<f64, SpecFunError> {
    ln_reg_inc_beta_tails(x, shape).map(|(lower, _)| lower)
}

/// The regularized incomplete beta function `I_x(a, b)`, i.e. the CDF of a
/// `Beta(a, b)` variable at `x`.
pub fn reg_inc_beta(x: f64, shape: BetaShape) -> Result<f64, SpecFunError> {
    ln_reg_inc_beta(x, shape).map(f64::exp)
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 100_000;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` with absolute error
/// target `tol`.
///
/// The interval is first cut into a handful of panels so that narrow features
/// are not missed by the coarsest Simpson estimate. Panels that still fail the
/// halving test at the depth limit contribute their error estimate to the
/// `achieved_error` of a [`SpecFunError::NoConvergence`].
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, SpecFunError>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(SpecFunError::Domain(format!(
            "integration bounds must be finite with lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(SpecFunError::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }

    let eval = |x: f64| -> Result<f64, SpecFunError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SpecFunError::Domain(format!(
                "integrand is not finite at {x}: {v}"
            )))
        }
    };

    let width = (hi - lo) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut unresolved = 0.0;
    let mut left = lo;
    let mut f_left = eval(lo)?;
    for i in 0..INITIAL_PANELS {
        let right = if i + 1 == INITIAL_PANELS {
            hi
        } else {
            lo + width * (i + 1) as f64
        };
        let mid = 0.5 * (left + right);
        let f_mid = eval(mid)?;
        let f_right = eval(right)?;
        let whole = (right - left) / 6.0 * (f_left + 4.0 * f_mid + f_right);
        let panel = Panel {
            a: left,
            b: right,
            fa: f_left,
            fm: f_mid,
            fb: f_right,
            whole,
        };
        total += simpson_step(&eval, panel, panel_tol, MAX_DEPTH, &mut unresolved)?;
        left = right;
        f_left = f_right;
    }

    if unresolved > tol {
        Err(SpecFunError::NoConvergence {
            estimate: total,
            achieved_error: unresolved,
        })
    } else {
        Ok(total)
    }
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_step<E>(
    eval: &E,
    p: Panel,
    tol: f64,
    depth: u32,
    unresolved: &mut f64,
) -> Result<f64, SpecFunError>
where
    E: Fn(f64) -> Result<f64, SpecFunError>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || lm <= p.a || rm >= p.b {
        *unresolved += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    let l = Panel {
        a: p.a,
        b: m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let r = Panel {
        a: m,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    Ok(simpson_step(eval, l, 0.5 * tol, depth - 1, unresolved)?
        + simpson_step(eval, r, 0.5 * tol, depth - 1, unresolved)?)
}

/// Solves `f(x) = target` for a non-decreasing `f` by bisection on `[lo, hi]`.
///
/// Bisection runs until the bracket has collapsed to a few ulps, so the
/// result is accurate in `x` as well as in `f(x)` (flat tails included).
pub fn invert_monotone<F>(f: F, target: f64, lo: f64, hi: f64) -> Result<f64, SpecFunError>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(SpecFunError::Domain(format!(
            "invalid bracket [{lo}, {hi}]"
        )));
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo <= target && target <= f_hi) {
        return Err(SpecFunError::Bracket { target, f_lo, f_hi });
    }
    if f_lo == target {
        return Ok(lo);
    }
    if f_hi == target {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let v = f(mid);
        if v == target {
            return Ok(mid);
        }
        if v < target {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
