//! The three-level family on `ℝⁿ ⊕ ℝᵏ`: `R(e_i∧e_j)` is `x e_i∧e_j` for
//! both indices in the first factor, `y e_i∧e_j` for mixed pairs and
//! `z e_i∧e_j` for both in the second factor. Q preserves the family.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bivector::BivectorSpace;
use crate::curvature::CurvatureOperator;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ReducedState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n < 2 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and k >= 1, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// `(x', y', z') = ((n-1)x² + ky², y(y + (n-1)x + (k-1)z), (k-1)z² + ny²)`.
pub fn reduced_system_rhs(v: ReducedState, n: usize, k: usize) -> Result<ReducedState> {
    check_nk(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    Ok(ReducedState {
        x: (nf - 1.0) * v.x * v.x + kf * v.y * v.y,
        y: v.y * (v.y + (nf - 1.0) * v.x + (kf - 1.0) * v.z),
        z: (kf - 1.0) * v.z * v.z + nf * v.y * v.y,
    })
}

/// The diagonal operator on Λ²ℝ^{n+k} with levels `(x, y, z)`.
pub fn embed(v: ReducedState, n: usize, k: usize) -> Result<CurvatureOperator> {
    check_nk(n, k)?;
    let space = BivectorSpace::new(n + k)?;
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for (a, &(i, j)) in space.pairs().iter().enumerate() {
        m[(a, a)] = match (i < n, j < n) {
            (true, true) => v.x,
            (true, false) => v.y,
            _ => v.z,
        };
    }
    Ok(CurvatureOperator::from_matrix_unchecked(&space, m))
}

/// Levels read back from an operator of the family (first pair of each kind).
pub fn levels(r: &CurvatureOperator, n: usize, k: usize) -> Result<ReducedState> {
    check_nk(n, k)?;
    if r.n() != n + k {
        return Err(Error::DimensionMismatch {
            expected: n + k,
            found: r.n(),
        });
    }
    let s = r.space();
    let at = |i, j| {
        let a = s.index(i, j).expect("ordered pair");
        r.matrix()[(a, a)]
    };
    Ok(ReducedState {
        x: if n >= 2 { at(0, 1) } else { 0.0 },
        y: at(0, n),
        z: if k >= 2 { at(n, n + 1) } else { 0.0 },
    })
}

/// Right-hand side with `y = 1` and time rescaled by `y`:
/// `x' = k - x - (k-1)xz`, `z' = n - z - (n-1)xz`.
pub fn associated_rhs(x: f64, z: f64, n: usize, k: usize) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    (kf - x - (kf - 1.0) * x * z, nf - z - (nf - 1.0) * x * z)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssociatedFlow {
    pub n: usize,
    pub k: usize,
    pub start: (f64, f64),
    /// `(t, x, z)` samples.
    pub samples: Vec<(f64, f64, f64)>,
    pub limit: (f64, f64),
    pub distance_to_fixed_point: f64,
    /// Largest deviation of `z̆ = x - a z` (`a = (k-1)/(n-1)`) from its
    /// closed form `c + (z̆₀ - c)e^{-t}`, `c = (n-k)/(n-1)`.
    pub decoupled_error: f64,
    pub diverged: bool,
}

/// RK4 for the associated planar system.
pub fn associated_system_flow(
    start: (f64, f64),
    n: usize,
    k: usize,
    t_end: f64,
    step: f64,
) -> Result<AssociatedFlow> {
    check_nk(n, k)?;
    if !(step > 0.0 && t_end >= 0.0) {
        return Err(Error::InvalidArgument("step must be positive and t_end nonnegative".into()));
    }
    let count = (t_end / step).ceil() as usize;
    let h = if count > 0 { t_end / count as f64 } else { 0.0 };
    let f = |p: (f64, f64)| associated_rhs(p.0, p.1, n, k);
    let add = |p: (f64, f64), d: (f64, f64), s: f64| (p.0 + s * d.0, p.1 + s * d.1);
    let a = (k as f64 - 1.0) / (n as f64 - 1.0);
    let c = (n as f64 - k as f64) / (n as f64 - 1.0);
    let zb0 = start.0 - a * start.1;

    let mut p = start;
    let mut samples = vec![(0.0, p.0, p.1)];
    let mut decoupled_error: f64 = 0.0;
    let mut diverged = false;
    for i in 1..=count {
        let k1 = f(p);
        let k2 = f(add(p, k1, h / 2.0));
        let k3 = f(add(p, k2, h / 2.0));
        let k4 = f(add(p, k3, h));
        p = (
            p.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            p.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        let t = i as f64 * h;
        if !(p.0.is_finite() && p.1.is_finite()) || p.0.abs().max(p.1.abs()) > 1e8 {
            diverged = true;
            break;
        }
        let zb = p.0 - a * p.1;
        decoupled_error = decoupled_error.max((zb - (c + (zb0 - c) * (-t).exp())).abs());
        samples.push((t, p.0, p.1));
    }
    Ok(AssociatedFlow {
        n,
        k,
        start,
        limit: p,
        distance_to_fixed_point: (p.0 - 1.0).abs().max((p.1 - 1.0).abs()),
        samples,
        decoupled_error,
        diverged,
    })
}

/// Transformed variables `x̆ = x + a z`, `z̆ = x - a z`, `a = (k-1)/(n-1)`,
/// and their right-hand sides:
/// `z̆' = (n-k)/(n-1) - z̆`,
/// `x̆' = (2nk - n - k)/(n-1) - x̆ - ½(n-1)(x̆² - z̆²)`.
pub fn transformed_rhs(xb: f64, zb: f64, n: usize, k: usize) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    (
        (2.0 * nf * kf - nf - kf) / (nf - 1.0) - xb - 0.5 * (nf - 1.0) * (xb * xb - zb * zb),
        (nf - kf) / (nf - 1.0) - zb,
    )
}

pub fn to_transformed(x: f64, z: f64, n: usize, k: usize) -> (f64, f64) {
    let a = (k as f64 - 1.0) / (n as f64 - 1.0);
    (x + a * z, x - a * z)
}

/// Linearization of the associated system at `(1, 1)`; its eigenvalues are
/// `-1` and `-(n + k - 1)`.
pub fn associated_jacobian_at_fixed_point(n: usize, k: usize) -> [[f64; 2]; 2] {
    let (nf, kf) = (n as f64, k as f64);
    [[-kf, -(kf - 1.0)], [-(nf - 1.0), -nf]]
}

/// Normalized flow from a perturbed `Sⁿ × ℝᵏ` with mixed level `y0 > 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductToSphere {
    pub n: usize,
    pub k: usize,
    pub y0: f64,
    pub tau_end: f64,
    /// Spectral norm of `R(τ_end) - R_sphere` for the normalized round
    /// sphere of dimension `n + k`.
    pub final_distance: f64,
    pub final_levels: ReducedState,
    pub max_relative_bianchi: f64,
    pub max_scalar_drift: f64,
}

/// Starts at levels `(1, y0, 0)` scaled to `s = 1` and integrates the full
/// normalized flow with fixed-step RK4.
pub fn product_to_sphere(n: usize, k: usize, y0: f64, tau_end: f64, step: f64) -> Result<ProductToSphere> {
    let start = embed(ReducedState::new(1.0, y0, 0.0), n, k)?;
    let start = start.scaled(1.0 / start.scalar());
    let traj = crate::flow::integrate_normalized(&start, tau_end, &crate::flow::StepPolicy::rk4(step))?;
    let last = &traj.last().operator;
    let sphere = crate::models::sphere(n + k, true)?;
    let diff = last.matrix() - sphere.matrix();
    let final_distance = nalgebra::SymmetricEigen::new(diff)
        .eigenvalues
        .amax();
    Ok(ProductToSphere {
        n,
        k,
        y0,
        tau_end,
        final_distance,
        final_levels: levels(last, n, k)?,
        max_relative_bianchi: traj.max_relative_bianchi(),
        max_scalar_drift: traj.max_scalar_drift,
    })
}

/// Normalized flow from `Sⁿ × ℝ` displaced by `ε` along the unit ⟨Ric0⟩
/// direction that adds positive mixed curvature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineEscape {
    pub n: usize,
    pub epsilon: f64,
    /// `(τ, ‖R(τ) - R0‖)` samples.
    pub distances: Vec<(f64, f64)>,
    /// First τ with `‖R - R0‖ > 10ε`, if reached.
    pub escape_time: Option<f64>,
    pub monotone: bool,
    pub max_relative_bianchi: f64,
}

pub fn line_escape(n: usize, epsilon: f64, tau_end: f64, step: f64) -> Result<LineEscape> {
    let r0 = crate::models::sphere_times_flat(n, 1)?;
    let rho = super::product_line_direction(n)?;
    // ρ lowers the mixed level; move the other way
    let start = &r0 - &rho.scaled(epsilon);
    let start = start.scaled(1.0 / start.scalar());
    let policy = crate::flow::StepPolicy {
        sample_every: ((1.0 / step).round() as usize).max(1),
        ..crate::flow::StepPolicy::rk4(step)
    };
    let traj = crate::flow::integrate_normalized(&start, tau_end, &policy)?;
    let distances: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .map(|s| (s.time, (&s.operator - &r0).norm()))
        .collect();
    let escape_time = distances.iter().find(|d| d.1 > 10.0 * epsilon).map(|d| d.0);
    let upto = distances
        .iter()
        .position(|d| d.1 > 10.0 * epsilon)
        .unwrap_or(distances.len() - 1);
    let monotone = distances[..=upto].windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(LineEscape {
        n,
        epsilon,
        distances,
        escape_time,
        monotone,
        max_relative_bianchi: traj.max_relative_bianchi(),
    })
}
