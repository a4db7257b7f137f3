//! Solutions and bifurcation curves of
//!
//! ```text
//! -(∫_0^1 (1-x)^n u(x)^q dx) u''(x) = λ u(x)^p,   u > 0 on (0,1),   u(0) = u(1) = 0.
//! ```
//!
//! Every solution is a multiple `t W_p` of the ground state. Substituting gives
//! `t^{q-p+1} M_{n,q} = λ`, so for `q - p + 1 ≠ 0` the amplitude is unique,
//! and for `q - p + 1 = 0` either every `t > 0` works (`λ = M_{n,q}`) or none does.

mod discrete;

use std::sync::Arc;

use serde::Serialize;

pub use discrete::{
    mesh_residual, newton_solve_discrete, newton_solve_discrete_with, observed_order,
    residual_check, MeshProfile, MeshResidual, NewtonOptions, NewtonReport, ResidualLevel,
    ResidualReport,
};

use crate::constants::{m_constant, MomentConstant};
use crate::error::{check_domain, Error, Result};
use crate::ground_state::GroundState;
use crate::quadrature::{integrate_adaptive_with, Integrand, QuadratureOptions};

/// `|q - p + 1|` at or below this counts as the degenerate exponent.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Relative tolerance for `λ = M_{n,q}` in the degenerate case.
pub const MATCHING_TOL: f64 = 1e-9;
/// Relative agreement required between the two `n = 1` curve formulas.
pub const DUAL_FORMULA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub q: f64,
    pub n: u32,
    pub lambda: f64,
}

impl ProblemSpec {
    pub fn new(p: f64, q: f64, n: u32, lambda: f64) -> Result<Self> {
        check_domain("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        check_domain("q", q, q > 1.0 && q.is_finite(), "q > 1")?;
        check_domain("n", n as f64, n >= 1, "n >= 1")?;
        check_domain(
            "lambda",
            lambda,
            lambda > 0.0 && lambda.is_finite(),
            "lambda > 0",
        )?;
        Ok(Self { p, q, n, lambda })
    }

    /// `q - p + 1`, the power in `λ ∝ α^{q-p+1}`.
    pub fn exponent(&self) -> f64 {
        self.q - self.p + 1.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.exponent().abs() <= DEGENERATE_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Variant {
    /// `u = t W_p` with `t = (λ / M_{n,q})^{1/(q-p+1)}`.
    Unique {
        amplitude: f64,
    },
    /// Every `t W_p`, `t > 0`, solves the problem.
    Family,
    Infeasible,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Unique { .. } => "unique",
            Variant::Family => "family",
            Variant::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub spec: ProblemSpec,
    pub variant: Variant,
    pub ground_state: Arc<GroundState>,
    /// The `M_{n,q}` the classification was based on.
    pub m: MomentConstant,
}

impl ExactSolution {
    pub fn amplitude(&self) -> Result<f64> {
        match self.variant {
            Variant::Unique { amplitude } => Ok(amplitude),
            other => Err(Error::NoScalarAmplitude {
                variant: other.name(),
            }),
        }
    }

    /// The solution as a profile; family members need an explicit `t`.
    pub fn profile(&self, family_t: Option<f64>) -> Result<ScaledGroundState> {
        let t = match (self.variant, family_t) {
            (Variant::Unique { amplitude }, _) => amplitude,
            (Variant::Family, Some(t)) => {
                check_domain("t", t, t > 0.0 && t.is_finite(), "t > 0")?;
                t
            }
            (other, _) => {
                return Err(Error::NoScalarAmplitude {
                    variant: other.name(),
                })
            }
        };
        Ok(ScaledGroundState {
            ground_state: Arc::clone(&self.ground_state),
            scale: t,
        })
    }
}

/// Classifies the problem and builds the solution.
pub fn solve_exact(spec: &ProblemSpec) -> Result<ExactSolution> {
    solve_exact_with(Arc::new(GroundState::new(spec.p)?), spec)
}

/// As [`solve_exact`], reusing an existing ground state for `spec.p`.
pub fn solve_exact_with(
    ground_state: Arc<GroundState>,
    spec: &ProblemSpec,
) -> Result<ExactSolution> {
    check_domain(
        "p",
        spec.p,
        spec.p == ground_state.p(),
        "equal to the ground state's p",
    )?;
    let m = m_constant(&ground_state, spec.n, spec.q)?;
    let variant = if !spec.is_degenerate() {
        Variant::Unique {
            amplitude: (spec.lambda / m.value).powf(1.0 / spec.exponent()),
        }
    } else if (spec.lambda - m.value).abs() <= MATCHING_TOL * m.value {
        Variant::Family
    } else {
        Variant::Infeasible
    };
    Ok(ExactSolution {
        spec: *spec,
        variant,
        ground_state,
        m,
    })
}

/// `α = ‖u_λ‖_∞ = t_λ ξ_p`.
pub fn alpha_of_lambda(sol: &ExactSolution) -> Result<f64> {
    Ok(sol.amplitude()? * sol.ground_state.xi())
}

/// `λ(α) = M_{n,q} ξ_p^{-(q-p+1)} α^{q-p+1}`.
///
/// For `n = 1` the independent form `(p+1) L_{p,0} L_{p,q} α^{q-p+1}` is also
/// evaluated and the two must agree to [`DUAL_FORMULA_TOL`].
pub fn lambda_of_alpha(gs: &GroundState, n: u32, q: f64, alpha: f64) -> Result<f64> {
    Ok(curve_coefficient(gs, n, q)?.0 * alpha.powf(q - gs.p() + 1.0))
}

/// `λ(α) / α^{q-p+1}` and the formula it came from.
pub fn curve_coefficient(gs: &GroundState, n: u32, q: f64) -> Result<(f64, CurveFormula)> {
    let p = gs.p();
    let e = q - p + 1.0;
    let m = m_constant(gs, n, q)?;
    if e.abs() <= DEGENERATE_TOL {
        return Err(Error::DegenerateExponent {
            critical_lambda: m.value,
        });
    }
    let general = m.value * gs.xi().powf(-e);
    if n != 1 {
        return Ok((general, CurveFormula::General));
    }
    let tol = gs.quadrature_options().tol;
    let linear = (p + 1.0) * gs.l_p0() * crate::quadrature::l_constant(p, q, tol)?.value;
    let gap = (general - linear).abs() / linear.abs();
    if gap > DUAL_FORMULA_TOL {
        return Err(Error::FormulaMismatch {
            first: general,
            second: linear,
            gap,
        });
    }
    Ok((linear, CurveFormula::LinearWeight))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFormula {
    /// `M_{n,q} ξ_p^{-(q-p+1)} α^{q-p+1}`
    General,
    /// `(p+1) L_{p,0} L_{p,q} α^{q-p+1}`, valid for `n = 1`
    LinearWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationCurve {
    /// `(α, λ(α))`, increasing in `α`.
    pub samples: Vec<(f64, f64)>,
    pub formula: CurveFormula,
    /// `q - p + 1`
    pub exponent: f64,
}

impl BifurcationCurve {
    pub fn sample(gs: &GroundState, n: u32, q: f64, alphas: &[f64]) -> Result<Self> {
        for &a in alphas {
            check_domain("alpha", a, a > 0.0 && a.is_finite(), "alpha > 0")?;
        }
        let (coefficient, formula) = curve_coefficient(gs, n, q)?;
        let exponent = q - gs.p() + 1.0;
        Ok(Self {
            samples: alphas
                .iter()
                .map(|&a| (a, coefficient * a.powf(exponent)))
                .collect(),
            formula,
            exponent,
        })
    }

    /// Least-squares slope of `log λ` against `log α`.
    pub fn fitted_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .map(|&(a, l)| (a.ln(), l.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    check_domain("min", min, min > 0.0 && min.is_finite(), "min > 0")?;
    check_domain("max", max, max >= min && max.is_finite(), "max >= min")?;
    check_domain("count", count as f64, count >= 1, "count >= 1")?;
    if count == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                min
            } else if i == count - 1 {
                max
            } else {
                (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// A function on `[0, 1]`, possibly only piecewise smooth.
pub trait Profile {
    fn value(&self, x: f64) -> f64;

    /// Interior points where the profile may have a kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Profile for GroundState {
    fn value(&self, x: f64) -> f64 {
        self.w_unchecked(x.clamp(0.0, 1.0))
    }
}

/// `t W_p`.
#[derive(Debug, Clone)]
pub struct ScaledGroundState {
    pub ground_state: Arc<GroundState>,
    pub scale: f64,
}

impl Profile for ScaledGroundState {
    fn value(&self, x: f64) -> f64 {
        self.scale * self.ground_state.value(x)
    }
}

/// `(h * u^q)(t) = ∫_0^t h(t - s) u(s)^q ds`.
pub fn convolution_eval<H, U>(
    kernel: H,
    u: &U,
    q: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64>
where
    H: Fn(f64) -> f64,
    U: Profile + ?Sized,
{
    check_domain("t", t, (0.0..=1.0).contains(&t), "0 <= t <= 1")?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let integrand = Integrand::smooth(|s: f64| {
        let v = u.value(s);
        if v == 0.0 {
            0.0
        } else {
            kernel(t - s) * v.powf(q)
        }
    });
    let mut cuts = vec![0.0];
    cuts.extend(u.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t));
    cuts.push(t);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate_adaptive_with(&integrand, w[0], w[1], opts)?.value;
    }
    Ok(total)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::constants::norm_power;
    use approx::assert_relative_eq;

    const L30: f64 = 1.3110287771460598964;

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(1.0, 2.0, 1, 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 0.5, 1, 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 2.0, 0, 1.0).is_err());
        assert!(ProblemSpec::new(2.0, 2.0, 1, 0.0).is_err());
        assert!(ProblemSpec::new(3.0, 2.0, 1, 1.0).unwrap().is_degenerate());
    }

    #[test]
    fn unit_ratio_gives_unit_amplitude() {
        let gs = Arc::new(GroundState::new(2.0).unwrap());
        let m = m_constant(&gs, 2, 3.0).unwrap().value;
        let sol = solve_exact_with(gs, &ProblemSpec::new(2.0, 3.0, 2, m).unwrap()).unwrap();
        assert_relative_eq!(sol.amplitude().unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            alpha_of_lambda(&sol).unwrap(),
            sol.ground_state.xi(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn degenerate_cases() {
        let gs = Arc::new(GroundState::new(3.0).unwrap());
        let m = m_constant(&gs, 1, 2.0).unwrap().value;
        let fam =
            solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(3.0, 2.0, 1, m).unwrap()).unwrap();
        assert_eq!(fam.variant, Variant::Family);
        assert!(matches!(
            alpha_of_lambda(&fam),
            Err(Error::NoScalarAmplitude { .. })
        ));
        assert!(fam.profile(None).is_err());
        assert!(fam.profile(Some(2.0)).is_ok());
        let none = solve_exact_with(gs, &ProblemSpec::new(3.0, 2.0, 1, 1.5 * m).unwrap()).unwrap();
        assert_eq!(none.variant, Variant::Infeasible);
        assert!(none.profile(Some(1.0)).is_err());
    }

    #[test]
    fn cubic_case_amplitude() {
        let sol = solve_exact(&ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap()).unwrap();
        let xi = sol.ground_state.xi();
        let m13 = 2f64.sqrt() * xi.powi(2) * 0.5;
        assert_relative_eq!(sol.amplitude().unwrap(), 1.0 / m13, max_relative = 1e-11);
    }

    #[test]
    fn curve_for_cubic_case() {
        let gs = GroundState::new(3.0).unwrap();
        let (c, f) = curve_coefficient(&gs, 1, 3.0).unwrap();
        assert_eq!(f, CurveFormula::LinearWeight);
        assert_relative_eq!(c, 2.0 * L30, max_relative = 1e-11);
        let lam = lambda_of_alpha(&gs, 1, 3.0, gs.xi()).unwrap();
        assert_relative_eq!(
            lam,
            m_constant(&gs, 1, 3.0).unwrap().value,
            max_relative = 1e-10
        );
        assert!(matches!(
            lambda_of_alpha(&gs, 1, 2.0, 1.0),
            Err(Error::DegenerateExponent { .. })
        ));
    }

    #[test]
    fn alpha_lambda_round_trip() {
        let gs = Arc::new(GroundState::new(2.0).unwrap());
        for (n, q) in [(1, 3.0), (2, 5.0), (3, 4.0)] {
            for alpha in [0.1, 1.0, 7.5] {
                let lam = lambda_of_alpha(&gs, n, q, alpha).unwrap();
                let sol =
                    solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(2.0, q, n, lam).unwrap())
                        .unwrap();
                assert_relative_eq!(alpha_of_lambda(&sol).unwrap(), alpha, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn doubling_lambda_with_unit_exponent() {
        let gs = Arc::new(GroundState::new(3.0).unwrap());
        let a1 = alpha_of_lambda(
            &solve_exact_with(
                Arc::clone(&gs),
                &ProblemSpec::new(3.0, 3.0, 1, 2.0 * L30).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        assert_relative_eq!(a1, 1.0, max_relative = 1e-10);
        let a2 = alpha_of_lambda(
            &solve_exact_with(gs, &ProblemSpec::new(3.0, 3.0, 1, 4.0 * L30).unwrap()).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(a2, 2.0 * a1, max_relative = 1e-13);
    }

    #[test]
    fn curve_slope() {
        let gs = GroundState::new(2.0).unwrap();
        let alphas = log_spaced(0.1, 10.0, 10).unwrap();
        let curve = BifurcationCurve::sample(&gs, 2, 4.5, &alphas).unwrap();
        assert_eq!(curve.formula, CurveFormula::General);
        assert!((curve.fitted_slope() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn log_spacing() {
        let v = log_spaced(0.1, 10.0, 5).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[4], 10.0);
        assert!((v[2] - 1.0).abs() < 1e-15);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn convolution_cases() {
        let gs = GroundState::new(2.0).unwrap();
        let opts = QuadratureOptions::default();
        assert_eq!(
            convolution_eval(|_| 1.0, &gs, 2.0, 0.0, &opts).unwrap(),
            0.0
        );
        let full = convolution_eval(|_| 1.0, &gs, 3.0, 1.0, &opts).unwrap();
        assert_relative_eq!(full, norm_power(&gs, 3.0).unwrap(), max_relative = 1e-10);
        let sol = solve_exact(&ProblemSpec::new(2.0, 3.0, 2, 4.0).unwrap()).unwrap();
        let t = sol.amplitude().unwrap();
        let profile = sol.profile(None).unwrap();
        let q_nq = convolution_eval(|y: f64| y * y, &profile, 3.0, 1.0, &opts).unwrap();
        assert_relative_eq!(q_nq, t.powi(3) * sol.m.value, max_relative = 1e-9);
    }
}
