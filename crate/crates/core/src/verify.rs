//! Self-check report: every identity the library relies on, recomputed along
//! two independent routes and compared at a fixed tolerance.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::thread;

use serde::Serialize;

use crate::constants::{
    m2_2p_plus_1, m2_p_plus_1, m2_p_plus_1_alternative, m_constant, m_quadrature, r_quadrature,
    s1_recursion, s2_recursion, s_base, s_quadrature, s_rp_reduction, SExponent,
};
use crate::error::Result;
use crate::ground_state::{shoot_ode_oracle, GroundState};
use crate::nonlocal::{
    log_spaced, newton_solve_discrete, observed_order, residual_check, solve_exact_with,
    BifurcationCurve, MeshProfile, ProblemSpec, Variant,
};
use crate::quadrature::{l_constant, l_constant_beta, QuadratureOptions};

pub const DEFAULT_P_GRID: [f64; 3] = [1.5, 2.0, 3.0];
/// Required observed convergence order for mesh-refinement checks at `p >= 2`.
pub const MIN_ORDER: f64 = 1.8;

/// `W_p ≈ a x - c x^{p+2}` near the boundary, so for `p < 2` the centred
/// difference is only `O(h^p)` at the first nodes and the max-norm order is `p`.
pub fn required_order(p: f64) -> f64 {
    MIN_ORDER - (2.0 - p).max(0.0)
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub p_grid: Vec<f64>,
    pub quadrature: QuadratureOptions,
    /// Coarsest mesh of the refinement checks; `2N` and `4N` follow.
    pub mesh: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            p_grid: DEFAULT_P_GRID.to_vec(),
            quadrature: QuadratureOptions::default(),
            mesh: 128,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// The identity under test.
    pub anchor: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub values: BTreeMap<String, f64>,
    /// The compared quantity: a deviation, or an order for refinement checks.
    pub delta: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub p_grid: Vec<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn find(&self, name: &str) -> impl Iterator<Item = &Check> {
        let name = name.to_owned();
        self.checks.iter().filter(move |c| c.name == name)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Accumulates named values and the worst deviation of one check.
struct Entry {
    name: String,
    anchor: &'static str,
    p: Option<f64>,
    values: BTreeMap<String, f64>,
    delta: f64,
    tolerance: f64,
    /// Refinement checks pass when `delta >= tolerance`.
    at_least: bool,
    verdict: Option<String>,
}

impl Entry {
    fn new(name: impl Into<String>, anchor: &'static str, p: Option<f64>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            anchor,
            p,
            values: BTreeMap::new(),
            delta: 0.0,
            tolerance,
            at_least: false,
            verdict: None,
        }
    }

    fn order(name: impl Into<String>, anchor: &'static str, p: f64) -> Self {
        Self {
            at_least: true,
            delta: f64::INFINITY,
            ..Self::new(name, anchor, Some(p), required_order(p))
        }
    }

    fn value(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.values.insert(key.into(), v);
        self
    }

    /// Records a deviation; NaN counts as a failure.
    fn deviation(&mut self, key: impl Into<String>, d: f64) -> &mut Self {
        let d = if d.is_nan() { f64::INFINITY } else { d };
        self.values.insert(key.into(), d);
        self.delta = self.delta.max(d);
        self
    }

    fn observed(&mut self, key: impl Into<String>, order: f64) -> &mut Self {
        let order = if order.is_nan() {
            f64::NEG_INFINITY
        } else {
            order
        };
        self.values.insert(key.into(), order);
        self.delta = self.delta.min(order);
        self
    }

    fn finish(self, outcome: Result<()>) -> Check {
        let (passed, error) = match outcome {
            Ok(()) if self.at_least => (self.delta >= self.tolerance, None),
            Ok(()) => (self.delta <= self.tolerance, None),
            Err(e) => (false, Some(e.to_string())),
        };
        Check {
            name: self.name,
            anchor: self.anchor,
            p: self.p,
            values: self.values,
            delta: self.delta,
            tolerance: self.tolerance,
            passed,
            verdict: self.verdict,
            error,
        }
    }
}

fn run_check(mut entry: Entry, body: impl FnOnce(&mut Entry) -> Result<()>) -> Check {
    let outcome = body(&mut entry);
    entry.finish(outcome)
}

/// Runs every check. Per-`p` checks run on one thread per grid value.
pub fn run(config: &VerifyConfig) -> Result<Report> {
    let mut p_values = config.p_grid.clone();
    for p in [2.0, 3.0] {
        if !p_values.contains(&p) {
            p_values.push(p);
        }
    }
    let states: Vec<Arc<GroundState>> = thread::scope(|s| {
        let handles: Vec<_> = p_values
            .iter()
            .map(|&p| {
                s.spawn(move || GroundState::with_options(p, config.quadrature).map(Arc::new))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ground state construction panicked"))
            .collect::<Result<_>>()
    })?;
    let state = |p: f64| -> Arc<GroundState> {
        let i = p_values
            .iter()
            .position(|&x| x == p)
            .expect("ground state built for every p used");
        Arc::clone(&states[i])
    };

    let mut checks = global_checks(config);
    let per_p: Vec<Vec<Check>> = thread::scope(|s| {
        let handles: Vec<_> = config
            .p_grid
            .iter()
            .map(|&p| {
                let gs = state(p);
                s.spawn(move || per_p_checks(&gs, config))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("verification thread panicked"))
            .collect()
    });
    checks.extend(per_p.into_iter().flatten());
    checks.push(cubic_curve(&state(3.0)));
    checks.extend(newton_checks(&state, config.mesh));

    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        p_grid: config.p_grid.clone(),
        checks,
        passed,
    })
}

fn global_checks(config: &VerifyConfig) -> Vec<Check> {
    let tol = config.quadrature.tol;
    let mut out = Vec::new();
    out.push(run_check(
        Entry::new("l_exact", "L_{p,p} = 2/(p+1), L_{1,0} = pi/2", None, 1e-10),
        |e| {
            for p in [1.5, 2.0, 3.0, 5.0] {
                let v = l_constant(p, p, tol)?.value;
                e.value(format!("L_{p},{p}"), v)
                    .deviation(format!("delta_{p}"), (v - 2.0 / (p + 1.0)).abs());
            }
            let v = l_constant(1.0, 0.0, tol)?.value;
            e.value("L_1,0", v)
                .deviation("delta_arcsine", (v - PI / 2.0).abs());
            Ok(())
        },
    ));
    out.push(run_check(
        Entry::new(
            "beta_identity",
            "L_{k,d} = B((d+1)/(k+1), 1/2)/(k+1)",
            None,
            1e-9,
        ),
        |e| {
            for k in [1.0, 1.5, 2.0, 3.0, 5.0] {
                for d in [0.0, 1.0, 2.0, k, k + 1.0] {
                    let quad = l_constant(k, d, tol)?.value;
                    let beta = l_constant_beta(k, d)?;
                    e.deviation(format!("k={k},d={d}"), (quad - beta).abs());
                }
            }
            Ok(())
        },
    ));
    out
}

/// Deterministic low-discrepancy points in `(0, 1)`.
fn golden_points(count: usize) -> impl Iterator<Item = f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    (1..=count).map(move |i| (i as f64 * phi).fract())
}

fn per_p_checks(shared: &Arc<GroundState>, config: &VerifyConfig) -> Vec<Check> {
    let gs: &GroundState = shared;
    let p = gs.p();
    let xi = gs.xi();
    let sp = Some(p);
    let mut out = Vec::new();

    out.push(run_check(
        Entry::new("time_map_half", "x(xi_p) = 1/2", sp, 1e-10),
        |e| {
            let x = gs.time_map_x_of_w(xi)?;
            e.value("x", x).deviation("delta", (x - 0.5).abs());
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "energy_identity",
            "W'^2/2 + W^{p+1}/(p+1) = xi^{p+1}/(p+1)",
            sp,
            1e-9,
        ),
        |e| {
            let target = xi.powf(p + 1.0) / (p + 1.0);
            let mut worst: f64 = 0.0;
            for x in golden_points(100) {
                let (w, dw) = gs.evaluate_w_and_prime(x)?;
                worst = worst.max(rel(0.5 * dw * dw + w.powf(p + 1.0) / (p + 1.0), target));
            }
            e.value("points", 100.0).deviation("max_rel", worst);
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::order("ode_residual_order", "-W'' = W^p", p),
        |e| {
            let residuals = ode_residuals(gs, [256, 512, 1024])?;
            for (n, r) in [256, 512, 1024].iter().zip(&residuals) {
                e.value(format!("residual_{n}"), *r);
            }
            e.observed("order", observed_order(residuals));
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "shooting_agreement",
            "time-map profile = RK4 shooting profile",
            sp,
            1e-6,
        ),
        |e| {
            let shot = shoot_ode_oracle(p, 10_000)?;
            let mut worst: f64 = 0.0;
            for (i, &v) in shot.values.iter().enumerate() {
                worst = worst.max((v - gs.evaluate_w(shot.x(i))?).abs());
            }
            e.value("shooting_max", shot.max())
                .deviation("max_abs", worst);
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "norm_identity",
            "int W^q = 2 sqrt((p+1)/2) xi^{(2q-p+1)/2} L_{p,q}",
            sp,
            1e-8,
        ),
        |e| {
            for q in [p, p + 1.0, 2.0 * p + 1.0] {
                let closed = m_constant(gs, 0, q)?.value;
                let quad = m_quadrature(gs, 0.0, q)?.value;
                e.value(format!("closed_q={q}"), closed)
                    .deviation(format!("rel_q={q}"), rel(closed, quad));
            }
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "s_base_values",
            "S_{1,0} = 1/8, S_{2,0} = 1/24, S_{1,p} = xi_p",
            sp,
            1e-10,
        ),
        |e| {
            for (k, d, exact) in [(1.0, 0.0, 0.125), (2.0, 0.0, 1.0 / 24.0), (1.0, p, xi)] {
                let quad = s_quadrature(gs, k, d)?.value;
                e.value(format!("S_{k},{d}"), quad)
                    .deviation(format!("rel_{k},{d}"), rel(quad, exact));
            }
            for (k, sel) in [(0, SExponent::One), (0, SExponent::P), (2, SExponent::P)] {
                let closed = s_base(gs, k, sel)?;
                let quad = s_quadrature(gs, closed.k, closed.d)?.value;
                e.deviation(format!("closed_vs_quad_{k},{sel}"), rel(closed.value, quad));
            }
            Ok(())
        },
    ));

    let recursion_grid: Vec<f64> = (1..=3)
        .flat_map(|m| {
            let base = m as f64 * (p + 1.0);
            [base, base + p]
        })
        .collect();
    out.push(run_check(
        Entry::new("s1_recursion", "S_{1,q} from S_{1,q-p-1}", sp, 1e-8),
        |e| {
            for &q in &recursion_grid {
                let r = s1_recursion(gs, q)?.value;
                e.deviation(
                    format!("rel_q={q}"),
                    rel(r, s_quadrature(gs, 1.0, q)?.value),
                );
            }
            Ok(())
        },
    ));
    out.push(run_check(
        Entry::new("s2_recursion", "S_{2,q} from S_{2,q-p-1}", sp, 1e-8),
        |e| {
            for &q in &recursion_grid {
                let r = s2_recursion(gs, q)?.value;
                e.deviation(
                    format!("rel_q={q}"),
                    rel(r, s_quadrature(gs, 2.0, q)?.value),
                );
            }
            Ok(())
        },
    ));
    out.push(run_check(
        Entry::new(
            "s_rp_reduction",
            "S_{r,p} = r 2^{1-r} xi - r(r-1) S_{r-2,1}",
            sp,
            1e-8,
        ),
        |e| {
            for r in 2..=5u32 {
                let v = s_rp_reduction(gs, r)?.value;
                e.deviation(
                    format!("rel_r={r}"),
                    rel(v, s_quadrature(gs, r as f64, p)?.value),
                );
            }
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "m_constant_paths",
            "closed forms and recursions for M_{n,q}",
            sp,
            1e-8,
        ),
        |e| {
            let mut cases: Vec<(u32, f64)> = vec![(1, p), (1, p + 1.0), (1, 2.0 * p + 1.0)];
            cases.extend(recursion_grid.iter().map(|&q| (2, q)));
            cases.extend((2..=5).map(|n| (n, p)));
            for (n, q) in cases {
                let m = m_constant(gs, n, q)?;
                let quad = m_quadrature(gs, n as f64, q)?.value;
                e.deviation(format!("rel_n={n},q={q},{}", m.method), rel(m.value, quad));
            }
            let q = 2.0 * p + 1.0;
            e.deviation(
                "rel_m2_2p_plus_1",
                rel(m2_2p_plus_1(gs)?, m_quadrature(gs, 2.0, q)?.value),
            );
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new("reflection_m2_r2", "M_{2,q} = R_{2,q}", sp, 1e-9),
        |e| {
            for q in [p, p + 1.0, 2.0 * p + 1.0] {
                let m = m_quadrature(gs, 2.0, q)?.value;
                let r = r_quadrature(gs, 2.0, q)?.value;
                e.deviation(format!("rel_q={q}"), rel(m, r));
            }
            Ok(())
        },
    ));
    out.push(run_check(
        Entry::new("telescoping_m1", "M_{1,q} = int W^q - R_{1,q}", sp, 1e-9),
        |e| {
            for q in [p, p + 1.0, 2.0 * p + 1.0] {
                let lhs = m_quadrature(gs, 1.0, q)?.value;
                let rhs = m_constant(gs, 0, q)?.value - r_quadrature(gs, 1.0, q)?.value;
                e.deviation(format!("rel_q={q}"), rel(lhs, rhs));
            }
            Ok(())
        },
    ));

    out.push(adjudicate_m2(gs));

    out.push(run_check(
        Entry::new(
            "n1_dual_formula",
            "M_{1,q} xi^{-(q-p+1)} = (p+1) L_{p,0} L_{p,q}",
            sp,
            1e-10,
        ),
        |e| {
            for q in [p, p + 1.0, 2.0 * p + 1.0] {
                let general = m_constant(gs, 1, q)?.value * xi.powf(-(q - p + 1.0));
                let linear = (p + 1.0) * gs.l_p0() * l_constant(p, q, config.quadrature.tol)?.value;
                e.value(format!("general_q={q}"), general)
                    .value(format!("linear_q={q}"), linear)
                    .deviation(format!("rel_q={q}"), rel(general, linear));
            }
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "curve_slope",
            "log-log slope of lambda(alpha) = q-p+1",
            sp,
            1e-9,
        ),
        |e| {
            let alphas = log_spaced(0.1, 10.0, 10)?;
            for (n, q) in [(1, p + 1.0), (2, 2.0 * p + 1.0)] {
                let curve = BifurcationCurve::sample(gs, n, q, &alphas)?;
                let slope = curve.fitted_slope();
                e.value(format!("slope_n={n},q={q}"), slope)
                    .deviation(format!("delta_n={n},q={q}"), (slope - curve.exponent).abs());
            }
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::new(
            "trichotomy",
            "unique iff q-p+1 != 0; family iff lambda = M_{n,q}",
            sp,
            1e-12,
        ),
        |e| {
            let gs = Arc::clone(shared);
            let q = p + 1.0;
            let m = m_constant(&gs, 1, q)?.value;
            let base = solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(p, q, 1, m)?)?;
            let t = base.amplitude()?;
            e.deviation("unit_ratio", (t - 1.0).abs());
            for c in [0.5, 3.0, 10.0] {
                let scaled = solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(p, q, 1, c * m)?)?;
                let expected = c.powf(1.0 / (q - p + 1.0)) * t;
                e.deviation(format!("scaling_c={c}"), rel(scaled.amplitude()?, expected));
            }
            if p - 1.0 > 1.0 {
                let q = p - 1.0;
                let m = m_constant(&gs, 1, q)?.value;
                let family = solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(p, q, 1, m)?)?;
                let infeasible =
                    solve_exact_with(Arc::clone(&gs), &ProblemSpec::new(p, q, 1, 1.5 * m)?)?;
                let wrong = [
                    family.variant != Variant::Family,
                    infeasible.variant != Variant::Infeasible,
                ];
                e.deviation(
                    "degenerate_misclassified",
                    wrong.iter().filter(|&&w| w).count() as f64,
                );
            }
            Ok(())
        },
    ));

    out.push(run_check(
        Entry::order("residual_check", "exact solution on N, 2N, 4N", p),
        |e| {
            let gs = Arc::clone(shared);
            let sol = solve_exact_with(gs, &ProblemSpec::new(p, p, 1, 1.0)?)?;
            let report = residual_check(&sol, None, config.mesh)?;
            for level in &report.levels {
                e.value(format!("residual_{}", level.n), level.max_norm);
            }
            e.observed("order", report.observed_order);
            Ok(())
        },
    ));

    out
}

/// Max-norm of `(W(x+h) - 2W(x) + W(x-h))/h² + W(x)^p` on each mesh.
fn ode_residuals(gs: &GroundState, meshes: [usize; 3]) -> Result<Vec<f64>> {
    let p = gs.p();
    meshes
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            let w: Vec<f64> = (0..=n)
                .map(|i| gs.evaluate_w(i as f64 * h))
                .collect::<Result<_>>()?;
            Ok((1..n)
                .map(|i| ((w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h) + w[i].powf(p)).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Two published expressions for `M_{2,p+1}` disagree; quadrature decides.
fn adjudicate_m2(gs: &GroundState) -> Check {
    let p = gs.p();
    let mut entry = Entry::new(
        "eq_1_21_vs_4_20",
        "M_{2,p+1}: L_{p,2}/(3(p+3)) form vs L_{p,1}/(3(p+1)) form",
        Some(p),
        1e-8,
    );
    let outcome = (|| -> Result<()> {
        let quad = m_quadrature(gs, 2.0, p + 1.0)?.value;
        let proof = m2_p_plus_1(gs)?;
        let statement = m2_p_plus_1_alternative(gs)?;
        let d_proof = rel(proof, quad);
        let d_statement = rel(statement, quad);
        entry
            .value("quadrature", quad)
            .value("l_p2_form", proof)
            .value("l_p1_form", statement)
            .value("delta_l_p1_form", d_statement)
            .deviation("delta_l_p2_form", d_proof);
        entry.verdict = Some(if d_proof <= 1e-8 && d_statement > 1e-8 {
            format!("quadrature confirms the L_{{p,2}} form; the L_{{p,1}} form is off by {d_statement:.3e} relative")
        } else if d_proof <= 1e-8 {
            "quadrature confirms both forms at this p".to_owned()
        } else {
            format!("quadrature does not confirm the L_{{p,2}} form (relative gap {d_proof:.3e})")
        });
        Ok(())
    })();
    entry.finish(outcome)
}

fn cubic_curve(gs: &GroundState) -> Check {
    run_check(
        Entry::new(
            "cubic_curve_coefficient",
            "p = q = 3, n = 1: lambda/alpha = 2 L_{3,0}",
            Some(3.0),
            1e-6,
        ),
        |e| {
            let expected = 2.0 * l_constant_beta(3.0, 0.0)?;
            let curve = BifurcationCurve::sample(gs, 1, 3.0, &log_spaced(0.1, 10.0, 5)?)?;
            for &(a, l) in &curve.samples {
                e.deviation(format!("alpha={a}"), rel(l / a, expected));
            }
            e.value("expected", expected);
            Ok(())
        },
    )
}

/// The discrete Newton oracle on fixed specs, refined over `N, 2N, 4N`.
fn newton_checks(state: &dyn Fn(f64) -> Arc<GroundState>, mesh: usize) -> Vec<Check> {
    let specs = [(3.0, 3.0, 1, 1.0), (2.0, 4.0, 2, 1.0), (3.0, 7.0, 2, 5.0)];
    let meshes = [mesh, 2 * mesh, 4 * mesh];
    thread::scope(|s| {
        let handles: Vec<_> = specs
            .iter()
            .map(|&(p, q, n, lambda)| {
                let gs = state(p);
                s.spawn(move || {
                    let name = format!("newton_discrete[p={p},q={q},n={n},lambda={lambda}]");
                    run_check(
                        Entry::order(name, "discrete Newton vs exact solution", p),
                        |e| {
                            let spec = ProblemSpec::new(p, q, n, lambda)?;
                            let sol = solve_exact_with(gs, &spec)?;
                            let exact = sol.profile(None)?;
                            let mut errors = Vec::new();
                            for &m in &meshes {
                                let initial = MeshProfile::sample(&exact, m, 1.1)?;
                                let report = newton_solve_discrete(&spec, m, &initial)?;
                                let err = report.profile.max_abs_diff(&exact);
                                e.value(format!("error_{m}"), err)
                                    .value(format!("iterations_{m}"), report.iterations as f64);
                                errors.push(err);
                            }
                            e.observed("order", observed_order(errors));
                            Ok(())
                        },
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("newton thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_report_passes() {
        let report = run(&VerifyConfig::default()).unwrap();
        for c in report.failures() {
            eprintln!(
                "{}: delta {} tol {} {:?}",
                c.name, c.delta, c.tolerance, c.error
            );
        }
        assert!(report.passed);
        let adjudication: Vec<_> = report.find("eq_1_21_vs_4_20").collect();
        assert_eq!(adjudication.len(), 3);
        assert!(adjudication.iter().all(|c| c.verdict.is_some()));
        assert!(report.find("n1_dual_formula").all(|c| c.delta <= 1e-10));
    }
}
