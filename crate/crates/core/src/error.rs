use thiserror::Error;

use crate::quadrature::QuadratureResult;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("integrand returned a non-finite value at s = {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error(
        "quadrature did not converge after {} evaluations (best value {}, error estimate {})",
        best.evaluations, best.value, best.error_estimate
    )]
    QuadratureNotConverged { best: QuadratureResult },
    #[error("no closed form for S_{{{k},{selector}}}")]
    NoClosedForm { k: u32, selector: String },
    #[error("index q = {q} is not reachable from a base case by steps of p+1 = {step}")]
    UnsupportedIndex { q: f64, step: f64 },
    #[error("degenerate exponent q - p + 1 = 0: the solution set is a vertical line at lambda = {critical_lambda}")]
    DegenerateExponent { critical_lambda: f64 },
    #[error("{variant} solution has no scalar amplitude")]
    NoScalarAmplitude { variant: &'static str },
    #[error("profile is not positive in the interior (min value {min})")]
    NonPositiveProfile { min: f64 },
    #[error("mesh of size {n} rejected: {reason}")]
    InvalidMesh { n: usize, reason: &'static str },
    #[error("shooting blew up at x = {x} (value {value}, bound {bound})")]
    ShootingBlowUp { x: f64, value: f64, bound: f64 },
    #[error(
        "Newton iteration failed after {iterations} iterations (residual {residual:e}): {reason}"
    )]
    NewtonFailed {
        iterations: usize,
        residual: f64,
        reason: &'static str,
    },
    #[error("formulas disagree: {first} vs {second} (relative gap {gap:e})")]
    FormulaMismatch { first: f64, second: f64, gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
