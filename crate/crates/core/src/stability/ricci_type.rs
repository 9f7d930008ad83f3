//! Zeros of Q̃ with vanishing Weyl part in ambient dimension `n + 1`.
//!
//! For such a zero `R = I/(n(n+1)) + (2/(n-1)) Ric0 ∧ id`, the eigenvalues
//! `λᵢ` of `Ric0` satisfy, with `S = Σλ²`,
//!
//! `(1/(n(n+1)(n-1)) + S/(n-1)) λᵢ + 2/(n-1)² (λᵢ² - S/(n+1)) = 0`
//!
//! and `(Ric0 ∧ Ric0)_W = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bivector::{BivectorSpace, SymEndo};
use crate::curvature::{q_tilde_unchecked, CurvatureOperator};
use crate::{models, Error, Result};

/// Left-hand side of the per-eigenvalue equation for every `i`.
pub fn eigenvalue_equation(n: usize, lambdas: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    let s: f64 = lambdas.iter().map(|l| l * l).sum();
    lambdas
        .iter()
        .map(|&l| {
            (1.0 / (nf * (nf + 1.0) * (nf - 1.0)) + s / (nf - 1.0)) * l
                + 2.0 / ((nf - 1.0) * (nf - 1.0)) * (l * l - s / (nf + 1.0))
        })
        .collect()
}

/// `‖(D ∧ D)_W‖` for `D = diag(lambdas)`.
pub fn weyl_constraint(lambdas: &[f64]) -> Result<f64> {
    let space = BivectorSpace::new(lambdas.len())?;
    let d = SymEndo::from_diagonal(lambdas);
    let m = space.wedge_endos(&d, &d)?;
    Ok(CurvatureOperator::from_matrix_unchecked(&space, m).decompose()?.r_w.norm())
}

/// The Weyl test values `⟨D∧D, ξ⟩` for the elements built from
/// `A_i = e_i e_iᵀ`:
/// `ξ₁ = A₁∧A₂ + A₃∧A₄ - A₁∧A₃ - A₂∧A₄`,
/// `ξ₂ = A₁∧A₄ + A₂∧A₃ - ½(A₁∧A₂ + A₁∧A₃ + A₂∧A₄ + A₃∧A₄)` and, for `p ≥ 5`,
/// `ξ_p = A₁∧A₂ + A_p∧A₄ - A₁∧A_p - A₂∧A₄`.
pub fn weyl_test_values(lambdas: &[f64]) -> Result<Vec<f64>> {
    let m = lambdas.len();
    if m < 4 {
        return Err(Error::UnsupportedDimension {
            n: m,
            reason: "Weyl test elements need ambient dimension >= 4",
        });
    }
    let space = BivectorSpace::new(m)?;
    let unit = |i: usize| {
        let mut d = vec![0.0; m];
        d[i] = 1.0;
        SymEndo::from_diagonal(&d)
    };
    let w = |i: usize, j: usize| space.wedge_endos(&unit(i), &unit(j)).expect("same n");
    let d = SymEndo::from_diagonal(lambdas);
    let dd = space.wedge_endos(&d, &d)?;
    let mut xis = vec![
        w(0, 1) + w(2, 3) - w(0, 2) - w(1, 3),
        w(0, 3) + w(1, 2) - (w(0, 1) + w(0, 2) + w(1, 3) + w(2, 3)) * 0.5,
    ];
    for p in 4..m {
        xis.push(w(0, 1) + w(p, 3) - w(0, p) - w(1, 3));
    }
    Ok(xis
        .iter()
        .map(|xi| crate::curvature::trace_inner(xi, &dd))
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RicciTypeSolution {
    pub n: usize,
    /// Eigenvalues of Ric0, the distinguished one last.
    pub spectrum: Vec<f64>,
    pub lambda: f64,
    /// Two-valued patterns `(p copies, m - p copies)` tried and whether they
    /// pass the Weyl constraint.
    pub patterns: Vec<(usize, bool)>,
    pub equation_residual: f64,
    pub weyl_residual: f64,
    /// Distance from Gauss–Newton on the full system, started near the
    /// solution, to the closed-form spectrum.
    pub newton_distance: f64,
    /// `max |R - R_model|` against normalized `Sⁿ × ℝ`.
    pub model_distance: f64,
    pub q_tilde_defect: f64,
}

/// `λ` solving `n(n+1)λ² - 2λ + 1/(n(n+1)) = 0`, the per-eigenvalue
/// equation restricted to the pattern `(λ, …, λ, -nλ)`. The discriminant
/// vanishes, so the root is double.
pub fn pattern_root(n: usize) -> f64 {
    let nf = n as f64;
    let a = nf * (nf + 1.0);
    let (b, c) = (-2.0, 1.0 / a);
    let disc = b * b - 4.0 * a * c;
    let disc = if disc.abs() <= 1e-12 { 0.0 } else { disc };
    (-b + disc.max(0.0).sqrt()) / (2.0 * a)
}

/// Ricci-type zero of Q̃ in ambient dimension `n + 1`.
///
/// Each λᵢ solves one quadratic with common coefficients, so Ric0 has at
/// most two eigenvalues. The Weyl constraint is tested on every split;
/// only the split with a single distinguished eigenvalue survives, and the
/// per-eigenvalue equation then fixes its scale.
pub fn ricci_type_spectrum(n: usize) -> Result<RicciTypeSolution> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "ambient dimension n + 1 must be at least 4",
        });
    }
    let m = n + 1;
    let mut patterns = Vec::new();
    for p in 1..m {
        let q = m - p;
        let mut l = vec![q as f64; p];
        l.extend(std::iter::repeat_n(-(p as f64), q));
        let scale = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ok = weyl_constraint(&l)? / (scale * scale) <= 1e-12;
        patterns.push((p, ok));
    }
    let lambda = pattern_root(n);
    let mut spectrum = vec![lambda; n];
    spectrum.push(-(n as f64) * lambda);

    let equation_residual = eigenvalue_equation(n, &spectrum)
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let weyl_residual = weyl_constraint(&spectrum)?;
    let newton = newton_polish(n, &spectrum.iter().map(|v| v * 1.01).collect::<Vec<_>>());
    let newton_distance = newton
        .iter()
        .zip(&spectrum)
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));

    let r = assemble(&spectrum)?;
    let model = models::sphere_times_flat(n, 1)?;
    Ok(RicciTypeSolution {
        n,
        lambda,
        patterns,
        equation_residual,
        weyl_residual,
        newton_distance,
        model_distance: (r.matrix() - model.matrix()).amax(),
        q_tilde_defect: q_tilde_unchecked(&r).norm(),
        spectrum,
    })
}

/// Gauss–Newton on the per-eigenvalue equations, the trace condition and
/// the Weyl test values. Converges only linearly at the double root.
pub fn newton_polish(n: usize, start: &[f64]) -> Vec<f64> {
    let m = start.len();
    let f = |l: &[f64]| -> DVector<f64> {
        let mut v = eigenvalue_equation(n, l);
        v.push(l.iter().sum());
        v.extend(weyl_test_values(l).expect("m >= 4"));
        DVector::from_vec(v)
    };
    let mut l = start.to_vec();
    for _ in 0..200 {
        let f0 = f(&l);
        let h = 1e-7;
        let mut jac = DMatrix::zeros(f0.len(), m);
        for k in 0..m {
            let mut lp = l.clone();
            let mut lm = l.clone();
            lp[k] += h;
            lm[k] -= h;
            jac.set_column(k, &((f(&lp) - f(&lm)) / (2.0 * h)));
        }
        let Ok(step) = jac.svd(true, true).solve(&f0, 1e-12) else {
            break;
        };
        for k in 0..m {
            l[k] -= step[k];
        }
        if step.amax() < 1e-15 {
            break;
        }
    }
    l
}

/// `I/(n(n+1)) + (2/(n-1)) diag(lambdas) ∧ id` in ambient dimension
/// `n + 1 = lambdas.len()`.
pub fn assemble(lambdas: &[f64]) -> Result<CurvatureOperator> {
    let m = lambdas.len();
    let space = BivectorSpace::new(m)?;
    let nf = (m - 1) as f64;
    let ric0 = CurvatureOperator::wedge_identity(&space, &SymEndo::from_diagonal(lambdas))?;
    Ok(&CurvatureOperator::identity(&space).scaled(1.0 / (nf * (nf + 1.0))) + &ric0.scaled(2.0 / (nf - 1.0)))
}

/// Checks a given Ricci-type zero: it must not be a multiple of the
/// identity; returns the sorted eigenvalues of its traceless Ricci tensor.
pub fn ricci_spectrum_of_zero(r: &CurvatureOperator) -> Result<Vec<f64>> {
    let parts = r.decompose()?;
    let scale = r.norm().max(1.0);
    if parts.r_w.norm() > 1e-8 * scale {
        return Err(Error::InvalidArgument("operator is not of Ricci type".into()));
    }
    if parts.r_ric0.norm() <= 1e-12 * scale {
        return Err(Error::InvalidArgument(
            "operator is a multiple of the identity".into(),
        ));
    }
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(r.ricci_traceless().into_matrix())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}
