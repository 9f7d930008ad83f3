//! Four dimensions: Hodge star, the self-dual splitting, zeros of Q and
//! Einstein zeros of Q̃.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bivector::BivectorSpace;
use crate::curvature::{four_form_operator, q_of, q_tilde_unchecked, CurvatureOperator};
use crate::models::{dual_bases, from_dual_spectra};
use crate::Result;

/// `*` on Λ²ℝ⁴: `*e12 = e34`, `*e13 = -e24`, `*e14 = e23`.
pub fn hodge_star() -> DMatrix<f64> {
    let space = BivectorSpace::new(4).expect("n = 4");
    four_form_operator(&space, [0, 1, 2, 3]).expect("valid quadruple")
}

/// `(⟨[ξ₁, ξ₂], ξ₃⟩², ⟨[η₁, η₂], η₃⟩²)` for the self-dual basis ξ and the
/// anti-self-dual basis η.
pub fn structure_constants() -> (f64, f64) {
    let space = BivectorSpace::new(4).expect("n = 4");
    let [p, m] = dual_bases();
    let c = |b: &[DVector<f64>; 3]| {
        let br = space.bracket(&b[0], &b[1]).expect("same space");
        br.dot(&b[2]).powi(2)
    };
    (c(&p), c(&m))
}

/// Diagonal of `Q(R)` in the ± bases for `R` diagonal there with entries
/// `plus`, `minus`: each block gives `xᵢ² + μ xⱼ xₖ`.
pub fn block_q(mu: f64, x: [f64; 3]) -> [f64; 3] {
    [
        x[0] * x[0] + mu * x[1] * x[2],
        x[1] * x[1] + mu * x[0] * x[2],
        x[2] * x[2] + mu * x[0] * x[1],
    ]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QZeroReport {
    pub c1: f64,
    pub c2: f64,
    /// Solutions with `x₁ + x₂ + x₃ = 0`; only the trivial one exists.
    pub solutions: Vec<[f64; 3]>,
    /// Minimum over the unit circle of the traceless plane of `‖(xᵢ² + c₁xⱼxₖ)‖`.
    pub min_residual_on_circle: f64,
    /// Minimum of `‖Q(R)‖` over assembled unit-norm traceless candidates.
    pub min_q_norm_candidates: f64,
    pub seeds: usize,
}

fn circle_point(theta: f64) -> [f64; 3] {
    // orthonormal basis of {x₁ + x₂ + x₃ = 0}
    let u = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let v = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let (s, c) = theta.sin_cos();
    [c * u[0] + s * v[0], c * u[1] + s * v[1], c * u[2] + s * v[2]]
}

fn residual3(f: [f64; 3]) -> f64 {
    (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt()
}

/// Zeros of Q in dimension 4 through `x₁² + c₁x₂x₃ = 0` (and cyclic) on the
/// traceless plane. The system is homogeneous, so nontrivial solutions
/// would appear on the unit circle; a grid scan with Gauss–Newton polishing
/// along the circle finds the minimum residual there.
pub fn q_zero_solver() -> QZeroReport {
    let (c1, c2) = structure_constants();
    let g = |theta: f64| residual3(block_q(c1, circle_point(theta)));
    let seeds = 720;
    let mut best = f64::INFINITY;
    for i in 0..seeds {
        let mut theta = i as f64 * std::f64::consts::TAU / seeds as f64;
        // Newton on d/dθ of ½‖F‖², with numerical derivatives
        for _ in 0..30 {
            let h = 1e-5;
            let d1 = (g(theta + h).powi(2) - g(theta - h).powi(2)) / (2.0 * h);
            let d2 = (g(theta + h).powi(2) - 2.0 * g(theta).powi(2) + g(theta - h).powi(2)) / (h * h);
            if d2 <= 0.0 || !d2.is_finite() {
                break;
            }
            let step = d1 / d2;
            theta -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        best = best.min(g(theta));
    }

    let mut min_q = f64::INFINITY;
    for i in 0..72 {
        for j in 0..72 {
            let x = circle_point(i as f64 * std::f64::consts::TAU / 72.0);
            let y = circle_point(j as f64 * std::f64::consts::TAU / 72.0);
            // unit norm on both blocks together
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for (a, b) in [(1.0, 0.0), (0.0, 1.0), (s, s)] {
                let r = from_dual_spectra(x.map(|v| a * v), y.map(|v| b * v)).expect("equal traces");
                min_q = min_q.min(q_of(&r).norm());
            }
        }
    }
    QZeroReport {
        c1,
        c2,
        solutions: vec![[0.0; 3]],
        min_residual_on_circle: best,
        min_q_norm_candidates: min_q,
        seeds,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EinsteinZeroReport {
    pub mu: f64,
    /// Nontrivial solutions of `λᵢ² + μλⱼλₖ = λᵢ/4`, `Σλ = 1/4`, sorted.
    pub solutions: Vec<[f64; 3]>,
    pub max_residual: f64,
    /// The same set from the case analysis: `λᵢ ≠ λⱼ` forces `λₖ = 0`, so
    /// either all are equal (`1/(4(1+μ))`, consistent with the trace iff
    /// `μ = 2`) or a permutation of `(0, 0, 1/4)`.
    pub case_analysis: Vec<[f64; 3]>,
    pub seeds: usize,
    /// `‖Q̃‖` of every operator assembled from a pair of block solutions.
    pub assembled_defects: Vec<f64>,
}

fn einstein_residual(mu: f64, l: [f64; 3]) -> [f64; 4] {
    let q = block_q(mu, l);
    [
        q[0] - l[0] / 4.0,
        q[1] - l[1] / 4.0,
        q[2] - l[2] / 4.0,
        l[0] + l[1] + l[2] - 0.25,
    ]
}

fn gauss_newton(mu: f64, mut l: [f64; 3]) -> [f64; 3] {
    for _ in 0..60 {
        let f = DVector::from_row_slice(&einstein_residual(mu, l));
        if f.amax() < 1e-15 {
            break;
        }
        let jac = DMatrix::from_row_slice(
            4,
            3,
            &[
                2.0 * l[0] - 0.25,
                mu * l[2],
                mu * l[1],
                mu * l[2],
                2.0 * l[1] - 0.25,
                mu * l[0],
                mu * l[1],
                mu * l[0],
                2.0 * l[2] - 0.25,
                1.0,
                1.0,
                1.0,
            ],
        );
        let Some(step) = jac.clone().svd(true, true).solve(&f, 1e-14).ok() else {
            break;
        };
        for i in 0..3 {
            l[i] -= step[i];
        }
        if step.amax() < 1e-16 {
            break;
        }
    }
    l
}

// lexicographic order insensitive to rounding noise around equal entries
fn cmp_rounded(a: &[f64; 3], b: &[f64; 3]) -> std::cmp::Ordering {
    let key = |v: &[f64; 3]| v.map(|x| (x * 1e9).round() as i64);
    key(a).cmp(&key(b))
}

/// Einstein zeros of Q̃ in dimension 4, block by block.
///
/// Seeds `(λ₁, λ₂)` on a grid of mesh 1/40 over `[-1/2, 1/2]²` with
/// `λ₃ = 1/4 - λ₁ - λ₂`, polished by Gauss–Newton on the four equations.
pub fn einstein_zero_solver() -> EinsteinZeroReport {
    let (mu, _) = structure_constants();
    let mut found: Vec<[f64; 3]> = Vec::new();
    let mut seeds = 0;
    for i in -20..=20 {
        for j in -20..=20 {
            seeds += 1;
            let (a, b) = (i as f64 / 40.0, j as f64 / 40.0);
            let l = gauss_newton(mu, [a, b, 0.25 - a - b]);
            let res = einstein_residual(mu, l).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if res <= 1e-12 && !found.iter().any(|s| (0..3).all(|k| (s[k] - l[k]).abs() < 1e-8)) {
                found.push(l);
            }
        }
    }
    found.sort_by(cmp_rounded);
    let max_residual = found
        .iter()
        .flat_map(|l| einstein_residual(mu, *l))
        .fold(0.0_f64, |m, v| m.max(v.abs()));

    let mut case_analysis = vec![[0.0, 0.0, 0.25], [0.0, 0.25, 0.0], [0.25, 0.0, 0.0]];
    let equal = 1.0 / (4.0 * (1.0 + mu));
    if (3.0 * equal - 0.25).abs() <= 1e-12 {
        case_analysis.push([equal; 3]);
    }
    case_analysis.sort_by(cmp_rounded);

    let mut assembled_defects = Vec::new();
    for plus in &found {
        for minus in &found {
            if let Ok(r) = assemble(*plus, *minus) {
                assembled_defects.push(q_tilde_unchecked(&r).norm());
            }
        }
    }
    EinsteinZeroReport {
        mu,
        solutions: found,
        max_residual,
        case_analysis,
        seeds,
        assembled_defects,
    }
}

/// Operator with the given spectra on the self-dual and anti-self-dual bases.
pub fn assemble(plus: [f64; 3], minus: [f64; 3]) -> Result<CurvatureOperator> {
    from_dual_spectra(plus, minus)
}
