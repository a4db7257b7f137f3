//! Uniform-mesh discretisation of the nonlocal problem: centred second
//! differences for `u''` and composite Simpson for the coefficient integral.
//!
//! Used two ways: as a residual probe for the exact solution, and as a fully
//! independent damped Newton solver for the discrete system.

use serde::Serialize;

use super::{ExactSolution, ProblemSpec, Profile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshProfile {
    values: Vec<f64>,
}

impl MeshProfile {
    /// Values at `x_i = i/N`, `i = 0..=N`; the endpoints must be zero.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        if n < 2 {
            return Err(Error::InvalidMesh {
                n,
                reason: "need at least two cells",
            });
        }
        if values[0] != 0.0 || values[n] != 0.0 {
            return Err(Error::InvalidMesh {
                n,
                reason: "endpoint values must be zero",
            });
        }
        Ok(Self { values })
    }

    /// Samples `f` at the interior nodes, zero at the ends.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=n)
            .map(|i| {
                if i == 0 || i == n {
                    0.0
                } else {
                    f(i as f64 / n as f64)
                }
            })
            .collect();
        Self::new(values)
    }

    pub fn sample<P: Profile + ?Sized>(profile: &P, n: usize, scale: f64) -> Result<Self> {
        Self::from_fn(n, |x| scale * profile.value(x))
    }

    /// `c x (1 - x)`.
    pub fn parabola(n: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, |x| c * x * (1.0 - x))
    }

    pub fn mesh_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.mesh_size() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs_diff<P: Profile + ?Sized>(&self, other: &P) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &u)| (u - other.value(self.x(i))).abs())
            .fold(0.0, f64::max)
    }

    fn interior_min(&self) -> f64 {
        let n = self.mesh_size();
        self.values[1..n]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl Profile for MeshProfile {
    /// Piecewise-linear interpolation.
    fn value(&self, x: f64) -> f64 {
        let n = self.mesh_size();
        let s = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    fn breakpoints(&self) -> Vec<f64> {
        (1..self.mesh_size()).map(|i| self.x(i)).collect()
    }
}

/// The discrete operator for a given spec and mesh.
struct DiscreteSystem {
    p: f64,
    q: f64,
    lambda: f64,
    n: usize,
    inv_h2: f64,
    /// Simpson weight times `(1 - x_j)^n`
    weights: Vec<f64>,
}

impl DiscreteSystem {
    fn new(spec: &ProblemSpec, n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidMesh {
                n,
                reason: "composite Simpson needs an even mesh size >= 4",
            });
        }
        let h = 1.0 / n as f64;
        let weights = (0..=n)
            .map(|j| {
                let simpson = if j == 0 || j == n {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                simpson * h / 3.0 * (1.0 - j as f64 * h).powi(spec.n as i32)
            })
            .collect();
        Ok(Self {
            p: spec.p,
            q: spec.q,
            lambda: spec.lambda,
            n,
            inv_h2: (n * n) as f64,
            weights,
        })
    }

    fn coefficient(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.weights)
            .map(|(&v, &w)| if v > 0.0 { w * v.powf(self.q) } else { 0.0 })
            .sum()
    }

    /// `(-u_{i-1} + 2u_i - u_{i+1}) / h²` at interior nodes.
    fn minus_laplacian(&self, u: &[f64], i: usize) -> f64 {
        (2.0 * u[i] - u[i - 1] - u[i + 1]) * self.inv_h2
    }

    /// Residual at interior nodes `1..N`, indexed `0..N-1`.
    fn residual(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let k = self.coefficient(u);
        let r = (1..self.n)
            .map(|i| k * self.minus_laplacian(u, i) - self.lambda * u[i].max(0.0).powf(self.p))
            .collect();
        (r, k)
    }

    /// `λ max u^p`, the natural size of each residual entry.
    fn scale(&self, u: &[f64]) -> f64 {
        let top = u.iter().copied().fold(0.0, f64::max);
        self.lambda * top.powf(self.p)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshResidual {
    pub n: usize,
    pub max_norm: f64,
    pub l2_norm: f64,
    /// Simpson value of `∫_0^1 (1-x)^n u^q dx`.
    pub coefficient: f64,
}

/// Residual of the discrete equations at a given mesh profile.
pub fn mesh_residual(profile: &MeshProfile, spec: &ProblemSpec) -> Result<MeshResidual> {
    let min = profile.interior_min();
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NonPositiveProfile { min });
    }
    let n = profile.mesh_size();
    let system = DiscreteSystem::new(spec, n)?;
    let (r, coefficient) = system.residual(profile.values());
    let h = 1.0 / n as f64;
    Ok(MeshResidual {
        n,
        max_norm: max_norm(&r),
        l2_norm: (h * r.iter().map(|x| x * x).sum::<f64>()).sqrt(),
        coefficient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualLevel {
    pub n: usize,
    pub max_norm: f64,
    pub l2_norm: f64,
    pub coefficient: f64,
    /// `t^q M_{n,q}`
    pub coefficient_exact: f64,
    pub coefficient_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub levels: Vec<ResidualLevel>,
    /// Smallest `log2(r_N / r_{2N})` over consecutive levels, max-norm.
    pub observed_order: f64,
}

/// Samples the exact solution on meshes `N`, `2N`, `4N` and measures how the
/// discrete residual decays.
pub fn residual_check(
    sol: &ExactSolution,
    family_t: Option<f64>,
    n: usize,
) -> Result<ResidualReport> {
    if n < 64 {
        return Err(Error::InvalidMesh {
            n,
            reason: "residual check needs N >= 64",
        });
    }
    let profile = sol.profile(family_t)?;
    let t = profile.scale;
    let coefficient_exact = t.powf(sol.spec.q) * sol.m.value;
    let mut levels = Vec::with_capacity(3);
    for mesh in [n, 2 * n, 4 * n] {
        let sampled = MeshProfile::sample(&profile, mesh, 1.0)?;
        let r = mesh_residual(&sampled, &sol.spec)?;
        levels.push(ResidualLevel {
            n: mesh,
            max_norm: r.max_norm,
            l2_norm: r.l2_norm,
            coefficient: r.coefficient,
            coefficient_exact,
            coefficient_rel_dev: (r.coefficient - coefficient_exact).abs() / coefficient_exact,
        });
    }
    let observed_order = observed_order(levels.iter().map(|l| l.max_norm));
    Ok(ResidualReport {
        levels,
        observed_order,
    })
}

/// Smallest `log2` ratio of consecutive errors on meshes refined by two.
pub fn observed_order(errors: impl IntoIterator<Item = f64>) -> f64 {
    let e: Vec<f64> = errors.into_iter().collect();
    e.windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Convergence when `‖F‖_∞ ≤ tol · max(1, λ max u^p)`.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tol: 1e-10,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub profile: MeshProfile,
    pub iterations: usize,
    pub residual: f64,
    pub coefficient: f64,
}

pub fn newton_solve_discrete(
    spec: &ProblemSpec,
    n: usize,
    initial: &MeshProfile,
) -> Result<NewtonReport> {
    if initial.mesh_size() != n {
        return Err(Error::InvalidMesh {
            n: initial.mesh_size(),
            reason: "initial profile is on a different mesh",
        });
    }
    newton_solve_discrete_with(spec, initial, &NewtonOptions::default())
}

/// Damped Newton on the `N-1` interior unknowns.
///
/// The Jacobian is `T + a bᵀ`: `T` tridiagonal from the local terms,
/// `a = -D₂u/h²` and `b = ∂K/∂u` from the coefficient integral. Each step
/// solves it with two tridiagonal solves and Sherman–Morrison.
pub fn newton_solve_discrete_with(
    spec: &ProblemSpec,
    initial: &MeshProfile,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    if spec.is_degenerate() {
        let system = DiscreteSystem::new(spec, initial.mesh_size())?;
        return Err(Error::DegenerateExponent {
            critical_lambda: system.coefficient(initial.values()),
        });
    }
    let min = initial.interior_min();
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NonPositiveProfile { min });
    }
    let n = initial.mesh_size();
    let system = DiscreteSystem::new(spec, n)?;
    let m = n - 1;
    let mut u = initial.values().to_vec();
    let (mut r, mut k) = system.residual(&u);
    let mut norm = max_norm(&r);

    for iteration in 0..=opts.max_iterations {
        if norm <= opts.tol * system.scale(&u).max(1.0) {
            return Ok(NewtonReport {
                profile: MeshProfile { values: u },
                iterations: iteration,
                residual: norm,
                coefficient: k,
            });
        }
        if iteration == opts.max_iterations {
            break;
        }

        let off = -k * system.inv_h2;
        let mut diag = vec![0.0; m];
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            diag[j] = 2.0 * k * system.inv_h2 - spec.lambda * spec.p * u[i].powf(spec.p - 1.0);
            a[j] = system.minus_laplacian(&u, i);
            b[j] = system.weights[i] * spec.q * u[i].powf(spec.q - 1.0);
        }
        let sub = vec![off; m - 1];
        let sup = vec![off; m - 1];
        let singular = || Error::NewtonFailed {
            iterations: iteration,
            residual: norm,
            reason: "singular Jacobian",
        };
        let y = solve_tridiagonal(&sub, &diag, &sup, &r).ok_or_else(singular)?;
        let z = solve_tridiagonal(&sub, &diag, &sup, &a).ok_or_else(singular)?;
        let denom = 1.0 + dot(&b, &z);
        if denom == 0.0 || !denom.is_finite() {
            return Err(singular());
        }
        let factor = dot(&b, &y) / denom;
        let step: Vec<f64> = y.iter().zip(&z).map(|(y, z)| y - factor * z).collect();

        let mut theta = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = u.clone();
            for j in 0..m {
                trial[j + 1] -= theta * step[j];
            }
            if trial[1..n].iter().all(|&v| v > 0.0) {
                let (tr, tk) = system.residual(&trial);
                let tn = max_norm(&tr);
                if tn < norm {
                    u = trial;
                    r = tr;
                    k = tk;
                    norm = tn;
                    accepted = true;
                    break;
                }
            }
            theta *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailed {
                iterations: iteration,
                residual: norm,
                reason: "no damped step reduced the residual while keeping u positive",
            });
        }
    }
    Err(Error::NewtonFailed {
        iterations: opts.max_iterations,
        residual: norm,
        reason: "iteration limit reached",
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting for a tridiagonal system
/// (the LAPACK `gtsv` scheme). Returns `None` on an exactly singular pivot.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    // second superdiagonal fill-in from row swaps lives in dl
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
    }
    Some(b)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::ground_state::GroundState;
    use crate::nonlocal::{solve_exact, solve_exact_with};
    use std::sync::Arc;

    fn dense_mul(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn tridiagonal_solver_handles_small_pivots() {
        // first pivot zero forces a row swap
        let sub = [1.0, 2.0, -1.0, 0.5];
        let diag = [0.0, 3.0, -4.0, 1.0, 2.5];
        let sup = [2.0, -1.0, 1.0, 3.0];
        let x = [1.0, -2.0, 0.5, 4.0, -1.5];
        let rhs = dense_mul(&sub, &diag, &sup, &x);
        let got = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-13, "{g} vs {e}");
        }
        assert!(solve_tridiagonal(&[0.0], &[0.0, 1.0], &[0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn mesh_profile_validation() {
        assert!(MeshProfile::new(vec![0.0, 1.0]).is_err());
        assert!(MeshProfile::new(vec![0.1, 1.0, 0.0]).is_err());
        let m = MeshProfile::parabola(4, 4.0).unwrap();
        assert_eq!(m.values(), &[0.0, 0.75, 1.0, 0.75, 0.0]);
        assert!((m.value(0.125) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn zero_profile_is_rejected() {
        let spec = ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap();
        let zero = MeshProfile::new(vec![0.0; 129]).unwrap();
        assert!(matches!(
            mesh_residual(&zero, &spec),
            Err(Error::NonPositiveProfile { .. })
        ));
        assert!(matches!(
            newton_solve_discrete(&spec, 128, &zero),
            Err(Error::NonPositiveProfile { .. })
        ));
    }

    #[test]
    fn residual_decays_at_second_order() {
        let sol = solve_exact(&ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap()).unwrap();
        let report = residual_check(&sol, None, 128).unwrap();
        assert!(report.observed_order >= 1.8, "{report:?}");
        assert!(report.levels[2].coefficient_rel_dev < 1e-6);
    }

    #[test]
    fn family_member_residual() {
        let gs = Arc::new(GroundState::new(3.0).unwrap());
        let m = crate::constants::m_constant(&gs, 1, 2.0).unwrap().value;
        let sol = solve_exact_with(gs, &ProblemSpec::new(3.0, 2.0, 1, m).unwrap()).unwrap();
        assert!(residual_check(&sol, None, 128).is_err());
        let report = residual_check(&sol, Some(2.0), 128).unwrap();
        assert!(report.observed_order >= 1.8, "{report:?}");
    }

    #[test]
    fn newton_from_exact_start_is_immediate() {
        let spec = ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap();
        let sol = solve_exact(&spec).unwrap();
        let start = MeshProfile::sample(&sol.profile(None).unwrap(), 256, 1.0).unwrap();
        let out = newton_solve_discrete(&spec, 256, &start).unwrap();
        assert!(out.iterations <= 2, "{}", out.iterations);
    }

    #[test]
    fn newton_from_scaled_start() {
        let spec = ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap();
        let sol = solve_exact(&spec).unwrap();
        let exact = sol.profile(None).unwrap();
        let start = MeshProfile::sample(&exact, 256, 1.1).unwrap();
        let out = newton_solve_discrete(&spec, 256, &start).unwrap();
        let dev = out.profile.max_abs_diff(&exact);
        assert!(
            dev <= 5e-4 * sol.ground_state.xi() * sol.amplitude().unwrap(),
            "{dev}"
        );
    }

    #[test]
    fn newton_from_parabola() {
        let spec = ProblemSpec::new(2.0, 4.0, 2, 1.0).unwrap();
        let sol = solve_exact(&spec).unwrap();
        let alpha = sol.amplitude().unwrap() * sol.ground_state.xi();
        let start = MeshProfile::parabola(256, 4.0 * alpha).unwrap();
        let out = newton_solve_discrete(&spec, 256, &start).unwrap();
        assert!(out.profile.max_abs_diff(&sol.profile(None).unwrap()) < 1e-3 * alpha);
    }

    #[test]
    fn newton_rejects_degenerate_spec() {
        let spec = ProblemSpec::new(3.0, 2.0, 1, 1.0).unwrap();
        let start = MeshProfile::parabola(64, 1.0).unwrap();
        assert!(matches!(
            newton_solve_discrete(&spec, 64, &start),
            Err(Error::DegenerateExponent { .. })
        ));
    }

    #[test]
    fn odd_mesh_is_rejected() {
        let spec = ProblemSpec::new(3.0, 3.0, 1, 1.0).unwrap();
        let start = MeshProfile::parabola(65, 1.0).unwrap();
        assert!(matches!(
            mesh_residual(&start, &spec),
            Err(Error::InvalidMesh { .. })
        ));
    }
}
