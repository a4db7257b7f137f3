//! Adaptive Gauss–Kronrod quadrature on finite intervals, with removal of an
//! inverse-square-root singularity at the right endpoint, plus the weighted
//! singular integrals `L_{k,d}` and a Beta-function oracle for them.
//!
//! The singular case is handled by the substitution `s = b - u²`, which turns
//! `∫_a^b g(s) ds` into `∫_0^{√(b-a)} 2u g(b - u²) du`. For `g(s) ~ (b-s)^{-1/2}`
//! the new integrand is bounded and smooth, so the adaptive driver never has
//! to refine towards the endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::constants::{Method, MomentConstant, MomentKind};
use crate::error::{check_domain, Error, Result};

/// Default requested accuracy, applied as `tol * max(1, |value|)`.
pub const DEFAULT_TOL: f64 = 1e-11;
/// Default cap on integrand evaluations per call.
pub const DEFAULT_MAX_EVALUATIONS: usize = 1_000_000;

/// Endpoint behaviour of an integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Singularity {
    None,
    /// `g(s) (b - s)^{1/2}` stays bounded as `s → b`.
    InvSqrtRight,
}

/// An evaluation rule together with its singularity descriptor.
pub struct Integrand<F> {
    rule: F,
    singularity: Singularity,
}

impl<F: Fn(f64) -> f64> Integrand<F> {
    pub fn smooth(rule: F) -> Self {
        Self {
            rule,
            singularity: Singularity::None,
        }
    }

    pub fn inv_sqrt_right(rule: F) -> Self {
        Self {
            rule,
            singularity: Singularity::InvSqrtRight,
        }
    }

    pub fn singularity(&self) -> Singularity {
        self.singularity
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.rule)(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

// Gauss–Kronrod 10/21 pair (QUADPACK qk21). Kronrod nodes in decreasing order,
// the Gauss nodes are the odd-indexed ones.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Number of integrand evaluations per panel.
pub const POINTS_PER_PANEL: usize = 21;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    /// Kronrod minus Gauss, rescaled; this is what splitting can reduce.
    truncation: f64,
    /// `truncation` raised to the roundoff floor of the panel.
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.truncation == other.truncation
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.truncation.total_cmp(&other.truncation)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error rescaling.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x })
        }
    };

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let fc = eval(center)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let truncation = err;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        a,
        b,
        value,
        truncation,
        error: err,
    })
}

/// Fixed 21-point Kronrod rule on `[a, b]` (exact for polynomials of degree 31).
pub fn kronrod21<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = WGK[10] * f(center);
    for j in 0..10 {
        let dx = half * XGK[j];
        sum += WGK[j] * (f(center - dx) + f(center + dx));
    }
    sum * half
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    let first = gk21(f, a, b)?;
    let mut evaluations = POINTS_PER_PANEL;
    let mut total = first.value;
    let mut total_err = first.truncation;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    loop {
        if total_err <= opts.tol * total.abs().max(1.0) {
            break;
        }
        if evaluations + 2 * POINTS_PER_PANEL > opts.max_evaluations {
            return Err(Error::QuadratureNotConverged {
                best: QuadratureResult {
                    value: total,
                    error_estimate: total_err.max(heap.iter().map(|p| p.error).sum()),
                    evaluations,
                },
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at floating-point resolution, nothing left to split.
            heap.push(worst);
            return Err(Error::QuadratureNotConverged {
                best: QuadratureResult {
                    value: total,
                    error_estimate: total_err.max(heap.iter().map(|p| p.error).sum()),
                    evaluations,
                },
            });
        }
        let left = gk21(f, worst.a, mid)?;
        let right = gk21(f, mid, worst.b)?;
        evaluations += 2 * POINTS_PER_PANEL;
        total += left.value + right.value - worst.value;
        total_err += left.truncation + right.truncation - worst.truncation;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift from incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error_estimate: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations,
    })
}

/// Integrates `g` over `[a, b]` to `tol * max(1, |value|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    g: &Integrand<F>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    integrate_adaptive_with(g, a, b, &QuadratureOptions::with_tol(tol))
}

pub fn integrate_adaptive_with<F: Fn(f64) -> f64>(
    g: &Integrand<F>,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult> {
    check_domain("a", a, a.is_finite(), "finite")?;
    check_domain("b", b, b.is_finite() && b > a, "finite and b > a")?;
    check_domain("tol", opts.tol, opts.tol > 0.0, "tol > 0")?;
    match g.singularity {
        Singularity::None => adaptive(&|s| g.eval(s), a, b, opts),
        Singularity::InvSqrtRight => {
            let width = (b - a).sqrt();
            adaptive(&|u: f64| 2.0 * u * g.eval(b - u * u), 0.0, width, opts)
        }
    }
}

/// `L_{k,d} = ∫_0^1 s^d / √(1 - s^{k+1}) ds` by singular-endpoint quadrature.
pub fn l_constant(k: f64, d: f64, tol: f64) -> Result<MomentConstant> {
    check_domain("k", k, k > 0.0, "k > 0")?;
    check_domain("d", d, d >= 0.0, "d >= 0")?;
    let integrand = Integrand::inv_sqrt_right(|s: f64| {
        // 1 - s^{k+1} without cancellation near s = 1
        let gap = -f64::exp_m1((k + 1.0) * s.ln());
        s.powf(d) / gap.sqrt()
    });
    let res = integrate_adaptive(&integrand, 0.0, 1.0, tol)?;
    Ok(MomentConstant {
        kind: MomentKind::L,
        k,
        d,
        p: None,
        value: res.value,
        method: Method::Quadrature,
        route: "singular quadrature",
    })
}

/// `B(a, b) = Γ(a)Γ(b)/Γ(a+b)` through log-gamma.
pub fn beta_oracle(a: f64, b: f64) -> Result<f64> {
    use statrs::function::gamma::ln_gamma;
    check_domain("a", a, a > 0.0 && a.is_finite(), "a > 0")?;
    check_domain("b", b, b > 0.0 && b.is_finite(), "b > 0")?;
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// The Beta-function closed form of `L_{k,d}` obtained with `u = s^{k+1}`.
pub fn l_constant_beta(k: f64, d: f64) -> Result<f64> {
    Ok(beta_oracle((d + 1.0) / (k + 1.0), 0.5)? / (k + 1.0))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_integrand() {
        let g = Integrand::smooth(|_| 1.0);
        let r = integrate_adaptive(&g, 0.0, 1.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-14);
        assert!(r.evaluations >= 1);
        assert!(r.error_estimate >= 0.0);
    }

    #[test]
    fn arcsine_derivative_singularity() {
        let g = Integrand::inv_sqrt_right(|s: f64| s / (1.0 - s * s).sqrt());
        let r = integrate_adaptive(&g, 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quartic_singularity_matches_beta() {
        let g = Integrand::inv_sqrt_right(|s: f64| 1.0 / (1.0 - s.powi(4)).sqrt());
        let r = integrate_adaptive(&g, 0.0, 1.0, DEFAULT_TOL).unwrap();
        let oracle = beta_oracle(0.25, 0.5).unwrap() / 4.0;
        assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-10);
    }

    #[test]
    fn substitution_keeps_panels_away_from_endpoint() {
        // The transformed integrand is smooth, a handful of panels suffice.
        let g = Integrand::inv_sqrt_right(|s: f64| 1.0 / (1.0 - s.powi(4)).sqrt());
        let r = integrate_adaptive(&g, 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!(r.evaluations < 50 * POINTS_PER_PANEL, "{}", r.evaluations);
    }

    #[test]
    fn nan_is_an_immediate_error() {
        let g = Integrand::smooth(|s: f64| if s > 0.3 { f64::NAN } else { s });
        assert!(matches!(
            integrate_adaptive(&g, 0.0, 1.0, 1e-10),
            Err(Error::NonFiniteIntegrand { .. })
        ));
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let g = Integrand::smooth(|s: f64| (1.0 / s.max(1e-300)).sin());
        let opts = QuadratureOptions {
            tol: 1e-14,
            max_evaluations: 10 * POINTS_PER_PANEL,
        };
        match integrate_adaptive_with(&g, 0.0, 1.0, &opts) {
            Err(Error::QuadratureNotConverged { best }) => {
                assert!(best.evaluations <= opts.max_evaluations);
                assert!(best.value.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_interval_and_tol() {
        let g = Integrand::smooth(|s: f64| s);
        assert!(integrate_adaptive(&g, 1.0, 0.0, 1e-10).is_err());
        assert!(integrate_adaptive(&g, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn l_constant_examples() {
        assert_abs_diff_eq!(
            l_constant(1.0, 0.0, DEFAULT_TOL).unwrap().value,
            PI / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            l_constant(3.0, 3.0, DEFAULT_TOL).unwrap().value,
            0.5,
            epsilon = 1e-12
        );
        // mpmath, 30 digits: 1.3110287771460598964
        assert_abs_diff_eq!(
            l_constant(3.0, 0.0, DEFAULT_TOL).unwrap().value,
            1.3110287771460598964,
            epsilon = 1e-12
        );
    }

    #[test]
    fn l_constant_domain() {
        assert!(l_constant(0.0, 1.0, DEFAULT_TOL).is_err());
        assert!(l_constant(1.0, -1.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn beta_examples() {
        assert_abs_diff_eq!(beta_oracle(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(beta_oracle(0.5, 0.5).unwrap(), PI, epsilon = 1e-13);
        // mpmath: 5.2441151085842396209
        assert_abs_diff_eq!(
            beta_oracle(0.25, 0.5).unwrap(),
            5.2441151085842396209,
            epsilon = 1e-12
        );
        assert!(beta_oracle(0.0, 1.0).is_err());
        assert!(beta_oracle(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_against_direct_quadrature() {
        // ∫_0^1 t^{-3/4} (1-t)^{-1/2} dt, left singularity removed by t = v^4
        let g = Integrand::inv_sqrt_right(|v: f64| 4.0 / (1.0 - v.powi(4)).sqrt());
        let r = integrate_adaptive(&g, 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(r.value, beta_oracle(0.25, 0.5).unwrap(), epsilon = 1e-10);
    }

    #[test]
    fn kronrod_fixed_rule_is_exact_on_polynomials() {
        let v = kronrod21(|x: f64| x.powi(30) + 3.0 * x, 0.0, 2.0);
        let exact = 2f64.powi(31) / 31.0 + 6.0;
        assert!((v - exact).abs() <= 1e-13 * exact);
    }
}
