//! Moment constants of the ground state.
//!
//! ```text
//! L_{k,d} = ∫_0^1 s^d / √(1 - s^{k+1}) ds
//! M_{k,d} = ∫_0^1 (1-x)^k W_p(x)^d dx
//! R_{k,d} = ∫_0^1 x^k W_p(x)^d dx
//! S_{k,d} = ∫_0^{1/2} x^k W_p(x)^d dx
//! ```
//!
//! Each value carries the method that produced it. Closed forms and the
//! integration-by-parts recursions are the primary routes; direct quadrature
//! of the defining integral is both the fallback and the cross-check.

use std::fmt;

use serde::Serialize;

use crate::error::{check_domain, Error, Result};
use crate::ground_state::GroundState;
use crate::quadrature::{integrate_adaptive_with, l_constant, Integrand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentKind {
    L,
    S,
    R,
    M,
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MomentKind::L => "L",
            MomentKind::S => "S",
            MomentKind::R => "R",
            MomentKind::M => "M",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Recursion,
    Quadrature,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::ClosedForm => "closed_form",
            Method::Recursion => "recursion",
            Method::Quadrature => "quadrature",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentConstant {
    pub kind: MomentKind,
    pub k: f64,
    pub d: f64,
    /// `None` for `L`, which does not depend on a ground state.
    pub p: Option<f64>,
    pub value: f64,
    pub method: Method,
    /// Short description of the formula that produced `value`.
    pub route: &'static str,
}

/// Exponent selector for [`s_base`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SExponent {
    Zero,
    One,
    P,
    Q(f64),
}

impl fmt::Display for SExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExponent::Zero => f.write_str("0"),
            SExponent::One => f.write_str("1"),
            SExponent::P => f.write_str("p"),
            SExponent::Q(q) => write!(f, "{q}"),
        }
    }
}

const INDEX_TOL: f64 = 1e-12;

fn same_index(a: f64, b: f64) -> bool {
    (a - b).abs() <= INDEX_TOL * a.abs().max(b.abs()).max(1.0)
}

fn moment(
    gs: &GroundState,
    kind: MomentKind,
    k: f64,
    d: f64,
    value: f64,
    method: Method,
    route: &'static str,
) -> MomentConstant {
    MomentConstant {
        kind,
        k,
        d,
        p: Some(gs.p()),
        value,
        method,
        route,
    }
}

fn l(gs: &GroundState, d: f64) -> Result<f64> {
    Ok(l_constant(gs.p(), d, gs.quadrature_options().tol)?.value)
}

/// `∫_a^b weight(x) W_p(x)^d dx` sampling `W_p` directly.
fn weighted_w_integral(
    gs: &GroundState,
    weight: impl Fn(f64) -> f64,
    d: f64,
    a: f64,
    b: f64,
) -> Result<f64> {
    let integrand = Integrand::smooth(|x: f64| {
        let w = gs.w_unchecked(x);
        if w == 0.0 {
            0.0
        } else {
            weight(x) * w.powf(d)
        }
    });
    let opts = gs.quadrature_options();
    // W_p is symmetric about 1/2; splitting there keeps each panel one-sided.
    if a < 0.5 && b > 0.5 {
        Ok(integrate_adaptive_with(&integrand, a, 0.5, opts)?.value
            + integrate_adaptive_with(&integrand, 0.5, b, opts)?.value)
    } else {
        Ok(integrate_adaptive_with(&integrand, a, b, opts)?.value)
    }
}

fn check_indices(k: f64, d: f64) -> Result<()> {
    check_domain("k", k, k >= 0.0 && k.is_finite(), "k >= 0")?;
    check_domain("d", d, d >= 0.0 && d.is_finite(), "d >= 0")
}

/// `S_{k,d}` by adaptive quadrature over `[0, 1/2]`.
pub fn s_quadrature(gs: &GroundState, k: f64, d: f64) -> Result<MomentConstant> {
    check_indices(k, d)?;
    let value = weighted_w_integral(gs, |x| x.powf(k), d, 0.0, 0.5)?;
    Ok(moment(
        gs,
        MomentKind::S,
        k,
        d,
        value,
        Method::Quadrature,
        "direct quadrature",
    ))
}

/// `R_{k,d}` by adaptive quadrature over `[0, 1]`.
pub fn r_quadrature(gs: &GroundState, k: f64, d: f64) -> Result<MomentConstant> {
    check_indices(k, d)?;
    let value = weighted_w_integral(gs, |x| x.powf(k), d, 0.0, 1.0)?;
    Ok(moment(
        gs,
        MomentKind::R,
        k,
        d,
        value,
        Method::Quadrature,
        "direct quadrature",
    ))
}

/// `M_{k,d}` by adaptive quadrature over `[0, 1]`.
pub fn m_quadrature(gs: &GroundState, k: f64, d: f64) -> Result<MomentConstant> {
    check_indices(k, d)?;
    let value = weighted_w_integral(gs, |x| (1.0 - x).powf(k), d, 0.0, 1.0)?;
    Ok(moment(
        gs,
        MomentKind::M,
        k,
        d,
        value,
        Method::Quadrature,
        "direct quadrature",
    ))
}

/// `S_{0,q} = √((p+1)/2) ξ^{(2q-p+1)/2} L_{p,q}`, half of `‖W_p‖_q^q`.
fn s0_closed(gs: &GroundState, q: f64) -> Result<f64> {
    let p = gs.p();
    Ok(((p + 1.0) / 2.0).sqrt() * gs.xi().powf((2.0 * q - p + 1.0) / 2.0) * l(gs, q)?)
}

/// `S_{2,p} = ξ - √(2(p+1)) ξ^{(3-p)/2} L_{p,1}`.
fn s2p_closed(gs: &GroundState) -> Result<f64> {
    let (p, xi) = (gs.p(), gs.xi());
    Ok(xi - (2.0 * (p + 1.0)).sqrt() * xi.powf((3.0 - p) / 2.0) * l(gs, 1.0)?)
}

/// `S_{0,p} = W_p'(0) = √(2/(p+1)) ξ^{(p+1)/2}`.
fn s0p_closed(gs: &GroundState) -> f64 {
    let p = gs.p();
    (2.0 / (p + 1.0)).sqrt() * gs.xi().powf((p + 1.0) / 2.0)
}

/// Closed-form `S_{k,d}` for the pairs where one is known: `S_{1,0}`, `S_{2,0}`,
/// `S_{0,1}`, `S_{0,p}`, `S_{1,p}`, `S_{2,p}` and `S_{0,q}` for any `q`.
pub fn s_base(gs: &GroundState, k: u32, exponent: SExponent) -> Result<MomentConstant> {
    let p = gs.p();
    let (d, value, route) = match (k, exponent) {
        (1, SExponent::Zero) => (0.0, 0.125, "elementary"),
        (2, SExponent::Zero) => (0.0, 1.0 / 24.0, "elementary"),
        (0, SExponent::One) => (1.0, s0_closed(gs, 1.0)?, "half norm identity"),
        (0, SExponent::P) => (p, s0p_closed(gs), "boundary slope"),
        (1, SExponent::P) => (p, gs.xi(), "integration by parts"),
        (2, SExponent::P) => (p, s2p_closed(gs)?, "integration by parts"),
        (0, SExponent::Q(q)) => {
            check_domain("q", q, q >= 0.0 && q.is_finite(), "q >= 0")?;
            (q, s0_closed(gs, q)?, "half norm identity")
        }
        _ => {
            return Err(Error::NoClosedForm {
                k,
                selector: exponent.to_string(),
            })
        }
    };
    Ok(moment(
        gs,
        MomentKind::S,
        k as f64,
        d,
        value,
        Method::ClosedForm,
        route,
    ))
}

/// Base of a recursion chain: the exponent it terminates at and the number of
/// `p+1` steps needed to get back up to `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionPlan {
    pub base: f64,
    pub steps: u32,
}

impl RecursionPlan {
    /// Descends `q → q - (p+1)` and checks that it lands on 0 or p.
    pub fn for_index(p: f64, q: f64) -> Result<Self> {
        let step = p + 1.0;
        let unsupported = Error::UnsupportedIndex { q, step };
        if !q.is_finite() || q < -INDEX_TOL {
            return Err(unsupported);
        }
        for base in [0.0, p] {
            let m = ((q - base) / step).round();
            if m >= 0.0 && same_index(q, base + m * step) {
                return Ok(Self {
                    base,
                    steps: m as u32,
                });
            }
        }
        Err(unsupported)
    }

    /// Exponent after `level` steps.
    pub fn exponent(&self, p: f64, level: u32) -> f64 {
        self.base + level as f64 * (p + 1.0)
    }
}

/// `S_{1,q}` for `q = m(p+1)` or `q = m(p+1) + p`, from
/// `S_{1,q} = (p+1)/(2q-p+1) { ξ^{q-p+1}/(q-p+1) + 2(q-p)/(p+1) ξ^{p+1} S_{1,q-p-1} }`.
pub fn s1_recursion(gs: &GroundState, q: f64) -> Result<MomentConstant> {
    let (p, xi) = (gs.p(), gs.xi());
    let plan = RecursionPlan::for_index(p, q)?;
    let mut value = if plan.base == 0.0 { 0.125 } else { xi };
    for level in 1..=plan.steps {
        let q = plan.exponent(p, level);
        value = (p + 1.0) / (2.0 * q - p + 1.0)
            * (xi.powf(q - p + 1.0) / (q - p + 1.0)
                + 2.0 * (q - p) / (p + 1.0) * xi.powf(p + 1.0) * value);
    }
    let method = if plan.steps == 0 {
        Method::ClosedForm
    } else {
        Method::Recursion
    };
    Ok(moment(
        gs,
        MomentKind::S,
        1.0,
        plan.exponent(p, plan.steps),
        value,
        method,
        "parts recursion",
    ))
}

/// `S_{2,q}` for `q = m(p+1)` or `q = m(p+1) + p`, from
/// `S_{2,q} = (p+1)/(2q-p+1) { (ξ^{q-p+1} - √(2(p+1)) ξ^{(2q-3p+3)/2} L_{p,q-p+1})/(q-p+1)
///            + 2(q-p)/(p+1) ξ^{p+1} S_{2,q-p-1} }`.
pub fn s2_recursion(gs: &GroundState, q: f64) -> Result<MomentConstant> {
    let (p, xi) = (gs.p(), gs.xi());
    let plan = RecursionPlan::for_index(p, q)?;
    let mut value = if plan.base == 0.0 {
        1.0 / 24.0
    } else {
        s2p_closed(gs)?
    };
    let root = (2.0 * (p + 1.0)).sqrt();
    for level in 1..=plan.steps {
        let q = plan.exponent(p, level);
        let e = q - p + 1.0;
        let boundary =
            (xi.powf(e) - root * xi.powf((2.0 * q - 3.0 * p + 3.0) / 2.0) * l(gs, e)?) / e;
        value = (p + 1.0) / (2.0 * q - p + 1.0)
            * (boundary + 2.0 * (q - p) / (p + 1.0) * xi.powf(p + 1.0) * value);
    }
    let method = if plan.steps == 0 {
        Method::ClosedForm
    } else {
        Method::Recursion
    };
    Ok(moment(
        gs,
        MomentKind::S,
        2.0,
        plan.exponent(p, plan.steps),
        value,
        method,
        "parts recursion",
    ))
}

/// `S_{r,p} = r (1/2)^{r-1} ξ - r(r-1) S_{r-2,1}` for `r ≥ 2`.
///
/// `S_{0,1}` has a closed form; `S_{k,1}` for `k ≥ 1` does not and is taken
/// from quadrature, in which case the result is tagged as quadrature.
pub fn s_rp_reduction(gs: &GroundState, r: u32) -> Result<MomentConstant> {
    if r < 2 {
        return Err(Error::Domain {
            name: "r",
            value: r as f64,
            expected: "r >= 2",
        });
    }
    let inner = if r == 2 {
        s_base(gs, 0, SExponent::One)?
    } else {
        s_quadrature(gs, (r - 2) as f64, 1.0)?
    };
    let rf = r as f64;
    let value = rf * 0.5f64.powi(r as i32 - 1) * gs.xi() - rf * (rf - 1.0) * inner.value;
    let method = if inner.method == Method::Quadrature {
        Method::Quadrature
    } else {
        Method::Recursion
    };
    Ok(moment(
        gs,
        MomentKind::S,
        rf,
        gs.p(),
        value,
        method,
        "reduction to S_{r-2,1}",
    ))
}

/// `S_{r,p}` through whichever route is exact for `r`.
fn s_rp(gs: &GroundState, r: u32) -> Result<MomentConstant> {
    match r {
        0 | 1 => s_base(gs, r, SExponent::P),
        _ => s_rp_reduction(gs, r),
    }
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `M_{2,p+1}` as obtained by unrolling one step of both recursions:
/// `√((p+1)/2) ξ^{(p+3)/2} L_{p,p+1} - ξ^{p+1}/(3(p+3)) - (p+1)/(p+3) √(2(p+1)) ξ^{(5-p)/2} L_{p,2}`.
pub fn m2_p_plus_1(gs: &GroundState) -> Result<f64> {
    let (p, xi) = (gs.p(), gs.xi());
    Ok(
        ((p + 1.0) / 2.0).sqrt() * xi.powf((p + 3.0) / 2.0) * l(gs, p + 1.0)?
            - xi.powf(p + 1.0) / (3.0 * (p + 3.0))
            - (p + 1.0) / (p + 3.0)
                * (2.0 * (p + 1.0)).sqrt()
                * xi.powf((5.0 - p) / 2.0)
                * l(gs, 2.0)?,
    )
}

/// A second published expression for `M_{2,p+1}`, with `1/(3(p+1))` and
/// `L_{p,1}` in place of `1/(3(p+3))` and `L_{p,2}`. It does not follow from the
/// recursions; it is kept only so the discrepancy can be measured.
pub fn m2_p_plus_1_alternative(gs: &GroundState) -> Result<f64> {
    let (p, xi) = (gs.p(), gs.xi());
    Ok(
        ((p + 1.0) / 2.0).sqrt() * xi.powf((p + 3.0) / 2.0) * l(gs, p + 1.0)?
            - xi.powf(p + 1.0) / (3.0 * (p + 1.0))
            - (p + 1.0) / (p + 3.0)
                * (2.0 * (p + 1.0)).sqrt()
                * xi.powf((5.0 - p) / 2.0)
                * l(gs, 1.0)?,
    )
}

/// `M_{2,2p+1} = √((p+1)/2) ξ^{3(p+1)/2} L_{p,2p+1}
///              - (2/3) √(2(p+1)) ξ^{(p+5)/2} (L_{p,p+2}/(p+2) + 2 L_{p,1})`.
pub fn m2_2p_plus_1(gs: &GroundState) -> Result<f64> {
    let (p, xi) = (gs.p(), gs.xi());
    Ok(
        ((p + 1.0) / 2.0).sqrt() * xi.powf(1.5 * (p + 1.0)) * l(gs, 2.0 * p + 1.0)?
            - 2.0 / 3.0
                * (2.0 * (p + 1.0)).sqrt()
                * xi.powf((p + 5.0) / 2.0)
                * (l(gs, p + 2.0)? / (p + 2.0) + 2.0 * l(gs, 1.0)?),
    )
}

/// `M_{3,p} = √(2/(p+1)) ξ^{(p+1)/2} - 3 √(2(p+1)) ξ^{(3-p)/2} L_{p,1}`.
pub fn m3_p(gs: &GroundState) -> Result<f64> {
    let (p, xi) = (gs.p(), gs.xi());
    Ok(s0p_closed(gs) - 3.0 * (2.0 * (p + 1.0)).sqrt() * xi.powf((3.0 - p) / 2.0) * l(gs, 1.0)?)
}

/// `R_{2,q} = S_{0,q} - 2 S_{1,q} + 2 S_{2,q}` with both recursions.
fn r2_by_recursion(gs: &GroundState, q: f64) -> Result<(f64, Method)> {
    let s1 = s1_recursion(gs, q)?;
    let s2 = s2_recursion(gs, q)?;
    let method = if s1.method == Method::ClosedForm && s2.method == Method::ClosedForm {
        Method::ClosedForm
    } else {
        Method::Recursion
    };
    Ok((s0_closed(gs, q)? - 2.0 * s1.value + 2.0 * s2.value, method))
}

/// `M_{n,p}` from the binomial expansion of `(1-x)^n` on `[0, 1/2]`, with the
/// reflected half folded back onto `S_{r,p}`.
pub fn m_binomial(gs: &GroundState, n: u32) -> Result<MomentConstant> {
    let mut value = 0.0;
    let mut any_quadrature = false;
    let mut push = |coef: f64, s: MomentConstant| {
        any_quadrature |= s.method == Method::Quadrature;
        value += coef * s.value;
    };
    if n % 2 == 1 {
        // the x^n terms of the two halves cancel
        for r in 0..n {
            push(sign(r) * binomial(n, r), s_rp(gs, r)?);
        }
    } else {
        for r in 0..n {
            push(sign(r) * binomial(n, r), s_rp(gs, r)?);
        }
        push(2.0, s_rp(gs, n)?);
    }
    let method = if any_quadrature {
        Method::Quadrature
    } else {
        Method::ClosedForm
    };
    Ok(moment(
        gs,
        MomentKind::M,
        n as f64,
        gs.p(),
        value,
        method,
        "binomial reduction",
    ))
}

fn sign(r: u32) -> f64 {
    if r.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `M_{n,q}` by the most specific closed form or recursion available,
/// falling back to direct quadrature.
pub fn m_constant(gs: &GroundState, n: u32, q: f64) -> Result<MomentConstant> {
    check_domain("q", q, q >= 0.0 && q.is_finite(), "q >= 0")?;
    let p = gs.p();
    let nf = n as f64;
    let done = |value: f64, method: Method, route: &'static str| {
        Ok(moment(gs, MomentKind::M, nf, q, value, method, route))
    };
    match n {
        0 => done(2.0 * s0_closed(gs, q)?, Method::ClosedForm, "norm identity"),
        1 => done(s0_closed(gs, q)?, Method::ClosedForm, "half norm identity"),
        2 if same_index(q, p + 1.0) => done(
            m2_p_plus_1(gs)?,
            Method::ClosedForm,
            "unrolled recursion, q = p+1",
        ),
        2 if same_index(q, 2.0 * p + 1.0) => done(
            m2_2p_plus_1(gs)?,
            Method::ClosedForm,
            "unrolled recursion, q = 2p+1",
        ),
        2 if RecursionPlan::for_index(p, q).is_ok() => {
            let (value, method) = r2_by_recursion(gs, q)?;
            done(value, method, "S_0 - 2 S_1 + 2 S_2 recursion")
        }
        3 if same_index(q, p) => done(m3_p(gs)?, Method::ClosedForm, "cubic weight, q = p"),
        _ if same_index(q, p) => {
            let mut m = m_binomial(gs, n)?;
            m.d = q;
            Ok(m)
        }
        _ => m_quadrature(gs, nf, q),
    }
}

/// `R_{k,q}`: closed forms for `k ≤ 1`, the `S` recursions for `k = 2` when
/// they apply, quadrature otherwise.
pub fn r_constant(gs: &GroundState, k: u32, q: f64) -> Result<MomentConstant> {
    check_domain("q", q, q >= 0.0 && q.is_finite(), "q >= 0")?;
    let kf = k as f64;
    let done = |value: f64, method: Method, route: &'static str| {
        Ok(moment(gs, MomentKind::R, kf, q, value, method, route))
    };
    match k {
        0 => done(2.0 * s0_closed(gs, q)?, Method::ClosedForm, "norm identity"),
        1 => done(
            s0_closed(gs, q)?,
            Method::ClosedForm,
            "reflection, R_1 = S_0",
        ),
        2 if RecursionPlan::for_index(gs.p(), q).is_ok() => {
            let (value, method) = r2_by_recursion(gs, q)?;
            done(value, method, "S_0 - 2 S_1 + 2 S_2 recursion")
        }
        _ => r_quadrature(gs, kf, q),
    }
}

/// `S_{k,q}`: closed forms first, then the recursions for `k ∈ {1, 2}` and the
/// reduction for `q = p`, quadrature otherwise.
pub fn s_constant(gs: &GroundState, k: u32, q: f64) -> Result<MomentConstant> {
    check_domain("q", q, q >= 0.0 && q.is_finite(), "q >= 0")?;
    let p = gs.p();
    let selector = match k {
        0..=2 if same_index(q, p) => Some(SExponent::P),
        0 if same_index(q, 1.0) => Some(SExponent::One),
        0 => Some(SExponent::Q(q)),
        1 | 2 if q == 0.0 => Some(SExponent::Zero),
        _ => None,
    };
    if let Some(selector) = selector {
        return s_base(gs, k, selector);
    }
    match k {
        1 if RecursionPlan::for_index(p, q).is_ok() => s1_recursion(gs, q),
        2 if RecursionPlan::for_index(p, q).is_ok() => s2_recursion(gs, q),
        _ if same_index(q, p) => s_rp_reduction(gs, k),
        _ => s_quadrature(gs, k as f64, q),
    }
}

/// `‖W_p‖_q^q = 2 √((p+1)/2) ξ^{(2q-p+1)/2} L_{p,q}`.
pub fn norm_power(gs: &GroundState, q: f64) -> Result<f64> {
    Ok(2.0 * s0_closed(gs, q)?)
}
