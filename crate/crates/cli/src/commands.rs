use std::fmt::Write as _;
use std::sync::Arc;

use kirchhoff_core::constants::{
    m_constant, m_quadrature, r_constant, r_quadrature, s_constant, s_quadrature,
};
use kirchhoff_core::nonlocal::{
    log_spaced, residual_check, solve_exact_with, BifurcationCurve, CurveFormula, ResidualReport,
};
use kirchhoff_core::quadrature::{l_constant, l_constant_beta, QuadratureOptions};
use kirchhoff_core::verify::{self, VerifyConfig};
use kirchhoff_core::{
    Error, GroundState, Method, MomentConstant, MomentKind, ProblemSpec, Variant,
};
use serde::Serialize;
use thiserror::Error;

use crate::args::{
    ConstantsArgs, CurveArgs, Format, IndexSpec, ProfileArgs, SolveArgs, VerifyArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot serialise output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(
                Error::Domain { .. }
                | Error::DegenerateExponent { .. }
                | Error::InvalidMesh { .. }
                | Error::UnsupportedIndex { .. }
                | Error::NoClosedForm { .. }
                | Error::NoScalarAmplitude { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Rendered output plus what the process should report.
pub struct Outcome {
    pub body: String,
    /// Printed to stderr.
    pub note: Option<String>,
    pub exit_code: u8,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            note: None,
            exit_code: 0,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn ground_state(p: f64, tol: f64) -> CliResult<Arc<GroundState>> {
    Ok(Arc::new(GroundState::with_options(
        p,
        QuadratureOptions::with_tol(tol),
    )?))
}

#[derive(Serialize)]
struct SolveReport {
    p: f64,
    q: f64,
    n: u32,
    lambda: f64,
    xi: f64,
    #[serde(flatten)]
    variant: Variant,
    /// `t ξ_p`; absent when no single `t` is determined.
    alpha: Option<f64>,
    m: MomentConstant,
    residual: Option<ResidualReport>,
    note: Option<&'static str>,
}

pub fn solve(a: &SolveArgs) -> CliResult<Outcome> {
    let spec = ProblemSpec::new(a.p, a.q, a.n, a.lambda)?;
    let gs = ground_state(a.p, a.output.tol)?;
    let xi = gs.xi();
    let sol = solve_exact_with(gs, &spec)?;
    let (t, note) = match sol.variant {
        Variant::Unique { amplitude } => (Some(amplitude), None),
        Variant::Family => (
            a.family_t,
            Some("q = p - 1 and lambda = M_{n,q}: every t W_p with t > 0 is a solution"),
        ),
        Variant::Infeasible => (
            None,
            Some("q = p - 1 and lambda != M_{n,q}: no solution exists"),
        ),
    };
    let residual = match t {
        Some(_) => Some(residual_check(&sol, a.family_t, a.mesh)?),
        None => None,
    };
    let report = SolveReport {
        p: a.p,
        q: a.q,
        n: a.n,
        lambda: a.lambda,
        xi,
        variant: sol.variant,
        alpha: t.map(|t| t * xi),
        m: sol.m,
        residual,
        note,
    };
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => solve_csv(&report),
    };
    Ok(Outcome::ok(body))
}

fn solve_csv(r: &SolveReport) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        ("variant", r.variant.name().to_owned()),
        ("xi", num(r.xi)),
        ("m_value", num(r.m.value)),
        ("m_method", r.m.method.to_string()),
    ];
    if let Variant::Unique { amplitude } = r.variant {
        rows.push(("amplitude", num(amplitude)));
    }
    if let Some(alpha) = r.alpha {
        rows.push(("alpha", num(alpha)));
    }
    if let Some(res) = &r.residual {
        for level in &res.levels {
            rows.push(("residual_n", level.n.to_string()));
            rows.push(("residual_max_norm", num(level.max_norm)));
        }
        rows.push(("residual_order", num(res.observed_order)));
    }
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

#[derive(Serialize)]
struct CurveSample {
    alpha: f64,
    lambda: f64,
}

#[derive(Serialize)]
struct CurveReport {
    p: f64,
    q: f64,
    n: u32,
    formula: CurveFormula,
    exponent: f64,
    samples: Vec<CurveSample>,
}

pub fn curve(a: &CurveArgs) -> CliResult<Outcome> {
    ProblemSpec::new(a.p, a.q, a.n, 1.0)?;
    let r = a.alpha_range;
    let alphas = log_spaced(r.min, r.max, r.count)?;
    let gs = ground_state(a.p, a.output.tol)?;
    let curve = BifurcationCurve::sample(&gs, a.n, a.q, &alphas)?;
    let body = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("alpha,lambda\n");
            for &(alpha, lambda) in &curve.samples {
                let _ = writeln!(out, "{},{}", num(alpha), num(lambda));
            }
            out
        }
        Format::Json => json(&CurveReport {
            p: a.p,
            q: a.q,
            n: a.n,
            formula: curve.formula,
            exponent: curve.exponent,
            samples: curve
                .samples
                .iter()
                .map(|&(alpha, lambda)| CurveSample { alpha, lambda })
                .collect(),
        })?,
    };
    Ok(Outcome::ok(body))
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    u: f64,
}

pub fn profile(a: &ProfileArgs) -> CliResult<Outcome> {
    if a.mesh < 2 {
        return Err(CliError::Input(format!(
            "--mesh must be at least 2, got {}",
            a.mesh
        )));
    }
    let gs = ground_state(a.p, a.output.tol)?;
    let (scale, note) = match (a.q, a.n, a.lambda) {
        (Some(q), Some(n), Some(lambda)) => {
            let spec = ProblemSpec::new(a.p, q, n, lambda)?;
            let sol = solve_exact_with(Arc::clone(&gs), &spec)?;
            match (sol.variant, a.family_t) {
                (Variant::Unique { amplitude }, _) => (Some(amplitude), None),
                (Variant::Family, Some(t)) => (Some(sol.profile(Some(t))?.scale), None),
                (Variant::Family, None) => (
                    None,
                    Some("family of solutions t W_p; pass --family-t to pick one"),
                ),
                (Variant::Infeasible, _) => (None, Some("no solution exists for this lambda")),
            }
        }
        _ => (Some(1.0), None),
    };
    let rows: Vec<ProfileRow> = match scale {
        Some(t) => {
            let n = a.mesh;
            (0..=n)
                .map(|i| {
                    // Evaluate on the left half so the output is exactly symmetric.
                    let j = i.min(n - i);
                    let w = gs.evaluate_w(j as f64 / n as f64)?;
                    Ok(ProfileRow {
                        x: i as f64 / n as f64,
                        u: t * w,
                    })
                })
                .collect::<CliResult<_>>()?
        }
        None => Vec::new(),
    };
    let body = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,u\n");
            for r in &rows {
                let _ = writeln!(out, "{},{}", num(r.x), num(r.u));
            }
            out
        }
        Format::Json => json(&rows)?,
    };
    Ok(Outcome {
        body,
        note: note.map(str::to_owned),
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct ConstantRow {
    kind: MomentKind,
    k: f64,
    d: f64,
    value: f64,
    method: Method,
    route: &'static str,
    /// Relative gap to the independent route; absent when the value is itself
    /// the quadrature.
    delta: Option<f64>,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

type QuadratureFn = fn(&GroundState, f64, f64) -> kirchhoff_core::Result<MomentConstant>;

fn integer_index(k: f64) -> Option<u32> {
    (k >= 0.0 && k.fract() == 0.0 && k <= u32::MAX as f64).then_some(k as u32)
}

fn constant_row(gs: Option<&GroundState>, index: IndexSpec, tol: f64) -> CliResult<ConstantRow> {
    let IndexSpec { kind, k, d } = index;
    if kind == MomentKind::L {
        let c = l_constant(k, d, tol)?;
        return Ok(ConstantRow {
            kind,
            k,
            d,
            value: c.value,
            method: c.method,
            route: "beta identity cross-check",
            delta: Some(rel(c.value, l_constant_beta(k, d)?)),
        });
    }
    let gs = gs.ok_or_else(|| CliError::Input(format!("--p is required for {kind} constants")))?;
    let (c, quad) = match (kind, integer_index(k)) {
        (MomentKind::S, Some(ki)) => (s_constant(gs, ki, d)?, s_quadrature as QuadratureFn),
        (MomentKind::R, Some(ki)) => (r_constant(gs, ki, d)?, r_quadrature as QuadratureFn),
        (MomentKind::M, Some(ki)) => (m_constant(gs, ki, d)?, m_quadrature as QuadratureFn),
        (MomentKind::S, None) => (s_quadrature(gs, k, d)?, s_quadrature as QuadratureFn),
        (MomentKind::R, None) => (r_quadrature(gs, k, d)?, r_quadrature as QuadratureFn),
        (MomentKind::M, None) => (m_quadrature(gs, k, d)?, m_quadrature as QuadratureFn),
        (MomentKind::L, _) => unreachable!("handled above"),
    };
    let delta = if c.method == Method::Quadrature {
        None
    } else {
        Some(rel(c.value, quad(gs, k, d)?.value))
    };
    Ok(ConstantRow {
        kind,
        k,
        d,
        value: c.value,
        method: c.method,
        route: c.route,
        delta,
    })
}

pub fn constants(a: &ConstantsArgs) -> CliResult<Outcome> {
    let tol = a.output.tol;
    let gs = a.p.map(|p| ground_state(p, tol)).transpose()?;
    let rows: Vec<ConstantRow> = a
        .indices
        .iter()
        .map(|&i| constant_row(gs.as_deref(), i, tol))
        .collect::<CliResult<_>>()?;
    let body = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("kind,k,d,value,method,delta\n");
            for r in &rows {
                let delta = r.delta.map(num).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.kind,
                    r.k,
                    r.d,
                    num(r.value),
                    r.method,
                    delta
                );
            }
            out
        }
        Format::Json => json(&rows)?,
    };
    Ok(Outcome::ok(body))
}

pub fn verify(a: &VerifyArgs) -> CliResult<Outcome> {
    if a.mesh < 64 {
        return Err(CliError::Input(format!(
            "--mesh must be at least 64, got {}",
            a.mesh
        )));
    }
    let mut config = VerifyConfig {
        quadrature: QuadratureOptions::with_tol(a.output.tol),
        mesh: a.mesh,
        ..VerifyConfig::default()
    };
    if !a.p.is_empty() {
        config.p_grid = a.p.clone();
    }
    let report = verify::run(&config)?;
    let body = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut out = String::from("name,p,delta,tolerance,passed\n");
            for c in &report.checks {
                let p = c.p.map(|p| p.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{}",
                    c.name,
                    p,
                    num(c.delta),
                    num(c.tolerance),
                    c.passed
                );
            }
            out
        }
    };
    let total = report.checks.len();
    let failed: Vec<String> = report
        .failures()
        .map(|c| match c.p {
            Some(p) => format!("{} (p = {p})", c.name),
            None => c.name.clone(),
        })
        .collect();
    let note = if failed.is_empty() {
        format!("{total}/{total} checks passed")
    } else {
        format!(
            "{}/{total} checks passed; failed: {}",
            total - failed.len(),
            failed.join(", ")
        )
    };
    Ok(Outcome {
        body,
        note: Some(note),
        exit_code: if report.passed { 0 } else { 1 },
    })
}
