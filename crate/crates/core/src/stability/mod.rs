//! Linearization of Q̃ at its zeros and the zero classifications.

pub mod dim4;
pub mod padded;
pub mod reduced;
pub mod ricci_type;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::curvature::{
    q_bilinear, q_tilde_unchecked, trace_inner, tri, CurvatureOperator, IrreducibleBasis,
};
use crate::{Error, NumericPolicy, Result};

/// Real part above which an eigenvalue counts as positive.
pub const UNSTABLE_TOL: f64 = 1e-7;

/// The slice `S0 = {A ∈ S²_B : s(A) = 0}` with an orthonormal basis made of
/// a ⟨Ric0⟩ part followed by a ⟨W⟩ part.
#[derive(Clone, Debug)]
pub struct Slice {
    pub basis: IrreducibleBasis,
}

impl Slice {
    pub fn new(space: &crate::bivector::BivectorSpace) -> Result<Self> {
        Ok(Self {
            basis: IrreducibleBasis::new(space)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.slice_dim()
    }

    pub fn ricci_dim(&self) -> usize {
        self.basis.ricci.len()
    }

    pub fn element(&self, a: usize) -> &DMatrix<f64> {
        let r = self.basis.ricci.len();
        if a < r {
            &self.basis.ricci[a]
        } else {
            &self.basis.weyl[a - r]
        }
    }

    pub fn coords(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.basis.slice().map(|e| trace_inner(e, m)))
    }

    pub fn assemble(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.element(0).nrows(), self.element(0).ncols());
        for (e, x) in self.basis.slice().zip(c.iter()) {
            out += e * *x;
        }
        out
    }
}

fn require_unit_scalar(r: &CurvatureOperator, policy: &NumericPolicy) -> Result<()> {
    let s = r.scalar();
    if (s - 1.0).abs() > policy.scalar_tol {
        return Err(Error::NotUnitScalar(s));
    }
    Ok(())
}

/// `DQ̃(R)A = 2Q(R, A) - ‖Ric R‖² A - 2⟨Ric R, Ric A⟩ R`.
pub fn directional_derivative(r: &CurvatureOperator, a: &CurvatureOperator) -> Result<CurvatureOperator> {
    let ric_r = r.ricci();
    let q = q_bilinear(r, a)?.scaled(2.0);
    let coupling = 2.0 * ric_r.inner(&a.ricci());
    Ok(&(&q - &a.scaled(ric_r.norm_squared())) - &r.scaled(coupling))
}

/// Matrix `J[a][b] = ⟨E_a, DQ̃(R) E_b⟩` over the slice basis.
pub fn jacobian_analytic(r: &CurvatureOperator, slice: &Slice) -> Result<DMatrix<f64>> {
    jacobian_analytic_with(r, slice, &NumericPolicy::default())
}

pub fn jacobian_analytic_with(r: &CurvatureOperator, slice: &Slice, policy: &NumericPolicy) -> Result<DMatrix<f64>> {
    require_unit_scalar(r, policy)?;
    let d = slice.dim();
    let mut j = DMatrix::zeros(d, d);
    for b in 0..d {
        let e = CurvatureOperator::from_matrix_unchecked(r.space(), slice.element(b).clone());
        let image = directional_derivative(r, &e)?;
        j.set_column(b, &slice.coords(image.matrix()));
    }
    Ok(j)
}

/// Central differences of Q̃ along each slice direction.
pub fn jacobian_fd(r: &CurvatureOperator, slice: &Slice, h: f64) -> Result<DMatrix<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive")));
    }
    let d = slice.dim();
    let mut j = DMatrix::zeros(d, d);
    for b in 0..d {
        let e = CurvatureOperator::from_matrix_unchecked(r.space(), slice.element(b).clone());
        let plus = q_tilde_unchecked(&(r + &e.scaled(h)));
        let minus = q_tilde_unchecked(&(r - &e.scaled(h)));
        let diff = (plus.matrix() - minus.matrix()) / (2.0 * h);
        j.set_column(b, &slice.coords(&diff));
    }
    Ok(j)
}

/// `⟨DQ̃(R)A, A⟩ = tri(R, A, A) - ‖Ric R‖²‖A‖² - 2⟨Ric R, Ric A⟩⟨R, A⟩`.
pub fn quadratic_form(r: &CurvatureOperator, a: &CurvatureOperator) -> Result<f64> {
    let ric_r = r.ricci();
    Ok(tri(r, a, a)? - ric_r.norm_squared() * a.inner(a) - 2.0 * ric_r.inner(&a.ricci()) * r.inner(a))
}

/// Block formulas for the Jacobian entries in the adapted basis
/// `{ρ_α} ∪ {ξ_β}`, with `coupling` the coefficient of the
/// `⟨R, ρ_i⟩⟨R, ·⟩` correction:
///
/// * `⟨J ρ_i, ρ_j⟩ = tri(R, ρ_i, ρ_j) - ‖Ric‖²δ_ij - c⟨R, ρ_i⟩⟨R, ρ_j⟩`
/// * `⟨J ρ, ξ⟩ = tri(R, ρ, ξ) - c⟨R, ρ⟩⟨R, ξ⟩`
/// * `⟨J ξ_k, ξ_l⟩ = tri(R, ξ_k, ξ_l) - ‖Ric‖²δ_kl`
/// * `⟨J ξ, ρ⟩ = tri(R, ξ, ρ)`
///
/// The directional derivative gives `c = 2(n - 2)`.
pub fn block_formula_jacobian(r: &CurvatureOperator, slice: &Slice, coupling: f64) -> Result<DMatrix<f64>> {
    let d = slice.dim();
    let nr = slice.ricci_dim();
    let ric2 = r.ricci_norm_squared();
    let elems: Vec<CurvatureOperator> = (0..d)
        .map(|a| CurvatureOperator::from_matrix_unchecked(r.space(), slice.element(a).clone()))
        .collect();
    let overlaps: Vec<f64> = elems.iter().map(|e| r.inner(e)).collect();
    let mut j = DMatrix::zeros(d, d);
    for b in 0..d {
        let qb = q_bilinear(r, &elems[b])?;
        for a in 0..d {
            let mut v = 2.0 * qb.inner(&elems[a]);
            if a == b {
                v -= ric2;
            }
            if b < nr {
                v -= coupling * overlaps[b] * overlaps[a];
            }
            j[(a, b)] = v;
        }
    }
    Ok(j)
}

/// Tangent directions `[ad_Λ, R]` of the O(n) orbit, one per basis Λ.
pub fn orbit_directions(r: &CurvatureOperator) -> Result<Vec<DMatrix<f64>>> {
    let space = r.space();
    (0..space.dim())
        .map(|g| {
            let ad = space.ad_matrix(&space.basis(g))?;
            Ok(&ad * r.matrix() - r.matrix() * &ad)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Unstable,
    NotUnstableAtLinearOrder,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub base_point_ref: String,
    /// `‖Q̃(R)‖`; the report is only meaningful near zero.
    pub q_tilde_defect: f64,
    pub slice_dim: usize,
    /// Eigenvalues of the Jacobian on the slice, sorted by decreasing real part.
    pub spectrum: Vec<Eigenvalue>,
    pub orbit_dim: usize,
    /// Largest `‖J T‖` over unit orbit tangents `T`.
    pub orbit_residual: f64,
    /// Eigenvalues off the orbit with `|Re| <= 1e-7`.
    pub center_dim: usize,
    pub max_re_off_orbit: f64,
    pub verdict: Verdict,
    pub witness_eigenvalue: Eigenvalue,
    /// Unit operator (row-major N×N matrix) along the eigenvector of the
    /// eigenvalue with largest real part off the orbit.
    pub witness_direction: Vec<Vec<f64>>,
    /// `max |J - Jᵀ|`.
    pub jacobian_asymmetry: f64,
    /// `max |J_analytic - J_fd|` with step `1e-4`.
    pub fd_max_diff: f64,
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok(Vec::new());
    }
    let cap = 200 * dim;
    let asym = (m - m.transpose()).amax();
    let mut ev: Vec<Complex<f64>> = if asym <= 1e-13 * m.amax().max(1.0) {
        // symmetric up to rounding: real spectrum, and Francis steps can
        // stall on the clustered eigenvalues typical of symmetric points
        let sym = (m + m.transpose()) * 0.5;
        nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, cap)
            .ok_or(Error::EigenNonConvergence(cap))?
            .eigenvalues
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .collect()
    } else {
        nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, cap)
            .ok_or(Error::EigenNonConvergence(cap))?
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    };
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(ev)
}

/// Real unit vector spanning (the real part of) the eigenvector of `m` for
/// eigenvalue `ev`, by complex inverse iteration.
fn eigenvector(m: &DMatrix<f64>, ev: Complex<f64>) -> DVector<f64> {
    let d = m.nrows();
    let shift = ev + Complex::new(1e-10 * (1.0 + ev.norm()), 0.0);
    let a = DMatrix::from_fn(d, d, |i, j| {
        Complex::new(m[(i, j)], 0.0) - if i == j { shift } else { Complex::new(0.0, 0.0) }
    });
    let lu = a.lu();
    let mut v = DVector::from_fn(d, |i, _| Complex::new(1.0 + (i as f64 * 0.37).sin(), 0.0));
    for _ in 0..4 {
        match lu.solve(&v) {
            Some(w) if w.norm() > 0.0 => v = w.unscale(w.norm()),
            _ => break,
        }
    }
    let re = v.map(|c| c.re);
    let im = v.map(|c| c.im);
    let pick = if re.norm() >= im.norm() { re } else { im };
    let n = pick.norm();
    if n > 0.0 {
        pick / n
    } else {
        DVector::zeros(d)
    }
}

fn orthonormal_span(cols: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if cols.ncols() == 0 {
        return DMatrix::zeros(cols.nrows(), 0);
    }
    let svd = SVD::new(cols.clone(), true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 1e-12 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    DMatrix::from_fn(cols.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the orthogonal complement of the columns of `q`.
fn complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let d = q.nrows();
    let proj = DMatrix::identity(d, d) - q * q.transpose();
    let eig = SymmetricEigen::new(proj);
    let keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    DMatrix::from_fn(d, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

/// Builds the Jacobian at `r`, quotients the orbit directions and classifies.
pub fn analyze(r: &CurvatureOperator, base_point_ref: &str) -> Result<StabilityReport> {
    analyze_with(r, base_point_ref, &NumericPolicy::default())
}

pub fn analyze_with(r: &CurvatureOperator, base_point_ref: &str, policy: &NumericPolicy) -> Result<StabilityReport> {
    let slice = Slice::new(r.space())?;
    let j = jacobian_analytic_with(r, &slice, policy)?;
    let fd = jacobian_fd(r, &slice, 1e-4)?;
    let (j_report, spectrum) = eigen_classify(r, &slice, &j, policy)?;
    Ok(StabilityReport {
        base_point_ref: base_point_ref.to_string(),
        q_tilde_defect: q_tilde_unchecked(r).norm(),
        slice_dim: slice.dim(),
        spectrum,
        fd_max_diff: (&j - fd).amax(),
        jacobian_asymmetry: (&j - j.transpose()).amax(),
        ..j_report
    })
}

/// Spectrum of `J` and the verdict on the orbit quotient `K = Cᵀ J C`, where
/// `C` spans the complement of the orbit tangent space in the slice. Since
/// `J` vanishes on the orbit, the spectrum of `J` is that of `K` plus zeros.
pub fn eigen_classify(
    r: &CurvatureOperator,
    slice: &Slice,
    j: &DMatrix<f64>,
    policy: &NumericPolicy,
) -> Result<(StabilityReport, Vec<Eigenvalue>)> {
    let d = slice.dim();
    let tangents = orbit_directions(r)?;
    let mut t = DMatrix::zeros(d, tangents.len());
    for (c, m) in tangents.iter().enumerate() {
        t.set_column(c, &slice.coords(m));
    }
    let orbit = orthonormal_span(&t, policy.rank_tol);
    let orbit_residual = if orbit.ncols() > 0 { (j * &orbit).amax() } else { 0.0 };
    let c = complement(&orbit);
    let k = c.transpose() * j * &c;

    let spectrum: Vec<Eigenvalue> = sorted_eigenvalues(j)?
        .into_iter()
        .map(|z| Eigenvalue { re: z.re, im: z.im })
        .collect();
    let quotient = sorted_eigenvalues(&k)?;
    let top = quotient.first().copied().unwrap_or(Complex::new(f64::NEG_INFINITY, 0.0));
    let center_dim = quotient.iter().filter(|z| z.re.abs() <= UNSTABLE_TOL).count();
    let witness = if k.nrows() > 0 {
        slice.assemble(&(&c * eigenvector(&k, top)))
    } else {
        DMatrix::zeros(r.space().dim(), r.space().dim())
    };
    let verdict = if top.re > UNSTABLE_TOL {
        Verdict::Unstable
    } else {
        Verdict::NotUnstableAtLinearOrder
    };
    let report = StabilityReport {
        base_point_ref: String::new(),
        q_tilde_defect: f64::NAN,
        slice_dim: d,
        spectrum: spectrum.clone(),
        orbit_dim: orbit.ncols(),
        orbit_residual,
        center_dim,
        max_re_off_orbit: top.re,
        verdict,
        witness_eigenvalue: Eigenvalue {
            re: top.re,
            im: top.im,
        },
        witness_direction: witness.row_iter().map(|row| row.iter().copied().collect()).collect(),
        jacobian_asymmetry: (j - j.transpose()).amax(),
        fd_max_diff: f64::NAN,
    };
    Ok((report, spectrum))
}

/// The unit ⟨Ric0⟩ direction `ρ = id ∧ A` at normalized `Sⁿ × ℝ`, with
/// `A = 2√(n/(n²-1)) (D_n + (n-1)/n D_{n-1} + … + 1/n D_1)` and `D_k` the
/// traceless diagonal matrix with `1, -1` in places `k, k+1`. Equals
/// `2√(n/(n²-1)) diag(1/n, …, 1/n, -1)`.
pub fn product_line_direction(n: usize) -> Result<CurvatureOperator> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "the sphere factor needs n >= 3",
        });
    }
    let m = n + 1;
    let nf = n as f64;
    let c = 2.0 * (nf / (nf * nf - 1.0)).sqrt();
    let mut a = vec![0.0; m];
    for k in 1..=n {
        let coeff = c * k as f64 / nf;
        a[k - 1] += coeff;
        a[k] -= coeff;
    }
    let space = crate::bivector::BivectorSpace::new(m)?;
    CurvatureOperator::wedge_identity(&space, &crate::bivector::SymEndo::from_diagonal(&a))
}

/// Quadratic-form value of the Jacobian at normalized `Sⁿ × ℝ` along
/// [`product_line_direction`], with two closed forms for comparison:
/// `(2n(n-3)+2)/(n²-1)` and `2(n²-3n+1)/(n(n²-1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineDirectionValue {
    pub n: usize,
    pub computed: f64,
    pub closed_form_a: f64,
    pub closed_form_b: f64,
}

pub fn product_line_value(n: usize) -> Result<LineDirectionValue> {
    let r = crate::models::sphere_times_flat(n, 1)?;
    let rho = product_line_direction(n)?;
    let nf = n as f64;
    Ok(LineDirectionValue {
        n,
        computed: quadratic_form(&r, &rho)?,
        closed_form_a: (2.0 * nf * (nf - 3.0) + 2.0) / (nf * nf - 1.0),
        closed_form_b: 2.0 * (nf * nf - 3.0 * nf + 1.0) / (nf * (nf * nf - 1.0)),
    })
}
