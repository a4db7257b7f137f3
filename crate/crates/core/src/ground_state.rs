//! The positive solution `W_p` of `-W'' = W^p`, `W(0) = W(1) = 0`, evaluated
//! through its time map.
//!
//! On `[0, 1/2]` the energy identity gives `x(w) = c ∫_0^{w/ξ} ds / √(1 - s^{p+1})`
//! with `c = √((p+1)/2) ξ^{(1-p)/2}`. Everything here works in the variable
//! `v = √(1 - w/ξ)`, in which
//!
//! ```text
//! x(v) = c ∫_v^1 g(u) du,   g(u) = 2u / √(1 - (1 - u²)^{p+1}),
//! ```
//!
//! and `g` is smooth and bounded away from zero on `[0, 1]`. The square-root
//! flattening of `x(w)` at `w = ξ` therefore never reaches the integrator, and
//! inversion by Newton's method in `v` is well conditioned up to `x = 1/2`.

use serde::Serialize;

use crate::error::{check_domain, Error, Result};
use crate::quadrature::{kronrod21, l_constant, QuadratureOptions};

/// Number of nodes in the inverse table.
pub const TABLE_SIZE: usize = 2048;

/// `ξ_p = ‖W_p‖_∞ = (2(p+1))^{1/(p-1)} L_{p,0}^{2/(p-1)}`.
pub fn sup_norm_xi(p: f64) -> Result<f64> {
    sup_norm_xi_with(p, &QuadratureOptions::default())
}

fn sup_norm_xi_with(p: f64, opts: &QuadratureOptions) -> Result<f64> {
    check_domain("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
    let l0 = l_constant(p, 0.0, opts.tol)?.value;
    Ok(xi_from_l0(p, l0))
}

fn xi_from_l0(p: f64, l0: f64) -> f64 {
    (2.0 * (p + 1.0)).powf(1.0 / (p - 1.0)) * l0.powf(2.0 / (p - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    p: f64,
    xi: f64,
    l_p0: f64,
    /// `√((p+1)/2) ξ^{(1-p)/2}`
    scale: f64,
    table_x: Vec<f64>,
    /// decreasing from 1 to 0
    table_v: Vec<f64>,
    table_w: Vec<f64>,
    #[serde(skip)]
    quad: QuadratureOptions,
}

impl GroundState {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_options(p, QuadratureOptions::default())
    }

    /// Builds the ground state; `quad` is also used by every moment integral
    /// computed against this instance.
    pub fn with_options(p: f64, quad: QuadratureOptions) -> Result<Self> {
        check_domain("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
        let l_p0 = l_constant(p, 0.0, quad.tol)?.value;
        let xi = xi_from_l0(p, l_p0);
        let scale = ((p + 1.0) / 2.0).sqrt() * xi.powf((1.0 - p) / 2.0);

        let last = TABLE_SIZE - 1;
        let table_v: Vec<f64> = (0..TABLE_SIZE)
            .map(|i| {
                if i == last {
                    0.0
                } else {
                    // Chebyshev nodes in w map to these exactly
                    (i as f64 * std::f64::consts::PI / (2.0 * last as f64)).cos()
                }
            })
            .collect();
        let table_w: Vec<f64> = table_v
            .iter()
            .map(|&v| xi * (1.0 - v) * (1.0 + v))
            .collect();
        let mut gs = Self {
            p,
            xi,
            l_p0,
            scale,
            table_x: Vec::with_capacity(TABLE_SIZE),
            table_v,
            table_w,
            quad,
        };
        let mut x = 0.0;
        gs.table_x.push(x);
        for i in 1..TABLE_SIZE {
            x += gs.scale * kronrod21(|u| gs.density(u), gs.table_v[i], gs.table_v[i - 1]);
            gs.table_x.push(x);
        }
        Ok(gs)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `ξ_p = W_p(1/2)`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn l_p0(&self) -> f64 {
        self.l_p0
    }

    pub fn quadrature_options(&self) -> &QuadratureOptions {
        &self.quad
    }

    /// Inverse table as `(x_i, w_i)` pairs, increasing in both coordinates.
    pub fn table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.table_x
            .iter()
            .copied()
            .zip(self.table_w.iter().copied())
    }

    fn density(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 2.0 / (self.p + 1.0).sqrt();
        }
        2.0 * u / self.gap(u).sqrt()
    }

    /// `1 - (1 - v²)^{p+1}`
    fn gap(&self, v: f64) -> f64 {
        -f64::exp_m1((self.p + 1.0) * f64::ln_1p(-v * v))
    }

    /// x on `[0, 1/2]` for the table parameter `v`.
    fn x_of_v(&self, v: f64) -> f64 {
        // first index with table_v[i] <= v, table_v is decreasing
        let i = self.table_v.partition_point(|&t| t > v);
        if i == 0 {
            return 0.0;
        }
        let i = i.min(TABLE_SIZE - 1);
        // v in [table_v[i], table_v[i-1]]
        self.table_x[i - 1] + self.scale * kronrod21(|u| self.density(u), v, self.table_v[i - 1])
    }

    /// Solves `x(v) = x` for `x ∈ [0, 1/2]`.
    fn locate(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let last = TABLE_SIZE - 1;
        if x >= self.table_x[last] {
            return 0.0;
        }
        let i = self.table_x.partition_point(|&t| t <= x) - 1;
        let (x_lo, x_hi) = (self.table_x[i], self.table_x[i + 1]);
        let (mut v_hi, mut v_lo) = (self.table_v[i], self.table_v[i + 1]);
        let anchor = v_hi;

        // phi(v) = x(v) - x is decreasing in v; phi(v_lo) >= 0 >= phi(v_hi)
        let phi = |v: f64| x_lo + self.scale * kronrod21(|u| self.density(u), v, anchor) - x;
        let mut v = v_hi + (v_lo - v_hi) * (x - x_lo) / (x_hi - x_lo);
        for _ in 0..60 {
            let f = phi(v);
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                v_lo = v;
            } else {
                v_hi = v;
            }
            let slope = -self.scale * self.density(v);
            let mut next = v - f / slope;
            if !(next > v_lo && next < v_hi) {
                next = 0.5 * (v_lo + v_hi);
            }
            let step = (next - v).abs();
            v = next;
            if step <= 2.0 * f64::EPSILON * v.max(f64::MIN_POSITIVE)
                || v_hi - v_lo <= f64::EPSILON * v_hi
            {
                break;
            }
        }
        v
    }

    /// `x ∈ [0, 1/2]` with `W_p(x) = w`, for `0 ≤ w ≤ ξ`.
    pub fn time_map_x_of_w(&self, w: f64) -> Result<f64> {
        check_domain("w", w, (0.0..=self.xi).contains(&w), "0 <= w <= xi")?;
        let v = ((self.xi - w) / self.xi).sqrt();
        Ok(self.x_of_v(v))
    }

    fn half_interval(x: f64) -> Result<f64> {
        check_domain("x", x, (0.0..=1.0).contains(&x), "0 <= x <= 1")?;
        Ok(if x > 0.5 { 1.0 - x } else { x })
    }

    fn w_of_v(&self, v: f64) -> f64 {
        self.xi * (1.0 - v) * (1.0 + v)
    }

    fn w_prime_of_v(&self, v: f64) -> f64 {
        (2.0 / (self.p + 1.0)).sqrt() * self.xi.powf((self.p + 1.0) / 2.0) * self.gap(v).sqrt()
    }

    /// `W_p(x)` on `[0, 1]`.
    pub fn evaluate_w(&self, x: f64) -> Result<f64> {
        let y = Self::half_interval(x)?;
        Ok(self.w_of_v(self.locate(y)))
    }

    /// `W_p'(x)` on `[0, 1]`; odd about `x = 1/2`.
    pub fn evaluate_w_prime(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate_w_and_prime(x)?.1)
    }

    /// `(W_p(x), W_p'(x))` from a single inversion.
    pub fn evaluate_w_and_prime(&self, x: f64) -> Result<(f64, f64)> {
        let y = Self::half_interval(x)?;
        let v = self.locate(y);
        let slope = self.w_prime_of_v(v);
        Ok((self.w_of_v(v), if x > 0.5 { -slope } else { slope }))
    }

    /// `W_p(x)`; caller guarantees `x ∈ [0, 1]`.
    pub(crate) fn w_unchecked(&self, x: f64) -> f64 {
        let y = if x > 0.5 { 1.0 - x } else { x };
        self.w_of_v(self.locate(y.max(0.0)))
    }
}

/// `W_p` on a uniform mesh from a fixed-step RK4 shooting run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingProfile {
    pub values: Vec<f64>,
}

impl ShootingProfile {
    pub fn mesh_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.mesh_size() as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|W(x_i) - W(1 - x_i)|` over the mesh.
    pub fn asymmetry(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates `-W'' = W^p` from `W(0) = 0`, `W'(0) = √(2/(p+1)) ξ^{(p+1)/2}`
/// with classical RK4. Test oracle only; nothing else in the crate calls it.
pub fn shoot_ode_oracle(p: f64, mesh_size: usize) -> Result<ShootingProfile> {
    check_domain("p", p, p > 1.0 && p.is_finite(), "p > 1")?;
    if mesh_size < 100 {
        return Err(Error::InvalidMesh {
            n: mesh_size,
            reason: "shooting needs at least 100 steps",
        });
    }
    let xi = sup_norm_xi(p)?;
    let bound = 10.0 * xi;
    let h = 1.0 / mesh_size as f64;
    // odd extension keeps the right-hand side defined if W dips below zero at x = 1
    let force = |w: f64| -w.signum() * w.abs().powf(p);
    let mut w = 0.0;
    let mut dw = (2.0 / (p + 1.0)).sqrt() * xi.powf((p + 1.0) / 2.0);
    let mut values = Vec::with_capacity(mesh_size + 1);
    values.push(w);
    for i in 1..=mesh_size {
        let (k1w, k1d) = (dw, force(w));
        let (k2w, k2d) = (dw + 0.5 * h * k1d, force(w + 0.5 * h * k1w));
        let (k3w, k3d) = (dw + 0.5 * h * k2d, force(w + 0.5 * h * k2w));
        let (k4w, k4d) = (dw + h * k3d, force(w + h * k3w));
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        dw += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if !w.is_finite() || w.abs() > bound {
            return Err(Error::ShootingBlowUp {
                x: i as f64 * h,
                value: w,
                bound,
            });
        }
        values.push(w);
    }
    Ok(ShootingProfile { values })
}
