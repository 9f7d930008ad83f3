//! Algebraic curvature operators and the quadratic vector field
//! `Q(R) = R² + R#`.
//!
//! An operator is stored as its symmetric N×N coefficient matrix
//! `M[α][β] = ⟨R(ω_β), ω_α⟩` in the lexicographic bivector basis. The inner
//! product on operators is `⟨A, B⟩ = tr(AB)`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::bivector::{BivectorSpace, SymEndo};
use crate::{Error, NumericPolicy, Result};

/// `tr(AB)` for symmetric matrices.
pub fn trace_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn check_square(space: &BivectorSpace, m: &DMatrix<f64>) -> Result<()> {
    let dim = space.dim();
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: if m.nrows() != dim { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// The three coefficient positions of the 4-form `e_i∧e_j∧e_k∧e_l` inside
/// S²(Λ²), with signs: `(ij,kl) +`, `(ik,jl) -`, `(il,jk) +`.
fn four_form_slots(space: &BivectorSpace, q: [usize; 4]) -> [(usize, usize, f64); 3] {
    let idx = |a, b| space.index(a, b).expect("ordered quadruple");
    let [i, j, k, l] = q;
    [
        (idx(i, j), idx(k, l), 1.0),
        (idx(i, k), idx(j, l), -1.0),
        (idx(i, l), idx(j, k), 1.0),
    ]
}

fn quadruples(n: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..n).flat_map(move |i| {
        ((i + 1)..n).flat_map(move |j| {
            ((j + 1)..n).flat_map(move |k| ((k + 1)..n).map(move |l| [i, j, k, l]))
        })
    })
}

/// Entry `R_{ijkl} = ⟨R(e_i∧e_j), e_k∧e_l⟩` extended antisymmetrically.
fn tensor_entry(space: &BivectorSpace, m: &DMatrix<f64>, i: usize, j: usize, k: usize, l: usize) -> f64 {
    match (space.signed_index(i, j), space.signed_index(k, l)) {
        (Some((a, sa)), Some((b, sb))) => sa * sb * m[(a, b)],
        _ => 0.0,
    }
}

/// Largest absolute cyclic sum `R_{ijkl} + R_{jkil} + R_{kijl}` over the
/// basis. Zero exactly on S²_B. Only distinct indices can contribute: for a
/// symmetric operator the cyclic sum is an alternating 4-form.
pub fn bianchi_residual(space: &BivectorSpace, m: &DMatrix<f64>) -> f64 {
    let n = space.n();
    let mut worst: f64 = 0.0;
    for [i, j, k, l] in quadruples(n) {
        let cyc = tensor_entry(space, m, i, j, k, l)
            + tensor_entry(space, m, j, k, i, l)
            + tensor_entry(space, m, k, i, j, l);
        worst = worst.max(cyc.abs());
    }
    worst
}

/// Orthogonal projection of S²(Λ²ℝⁿ) onto S²_B: removes the Λ⁴ component
/// spanned by the (mutually orthogonal) 4-forms `e_i∧e_j∧e_k∧e_l`.
pub fn project_bianchi_matrix(space: &BivectorSpace, s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = s.clone();
    for q in quadruples(space.n()) {
        let slots = four_form_slots(space, q);
        // ⟨S, T⟩ / ⟨T, T⟩ with ‖T‖² = 6.
        let coeff = slots
            .iter()
            .map(|&(a, b, sg)| sg * (s[(a, b)] + s[(b, a)]))
            .sum::<f64>()
            / 6.0;
        for &(a, b, sg) in &slots {
            out[(a, b)] -= coeff * sg;
            out[(b, a)] -= coeff * sg;
        }
    }
    out
}

/// The Λ⁴ element `e_i∧e_j∧e_k∧e_l` (indices strictly increasing) as an
/// operator on Λ².
pub fn four_form_operator(space: &BivectorSpace, q: [usize; 4]) -> Result<DMatrix<f64>> {
    if !(q[0] < q[1] && q[1] < q[2] && q[2] < q[3] && q[3] < space.n()) {
        return Err(Error::InvalidArgument(format!(
            "indices {q:?} must be strictly increasing and below {}",
            space.n()
        )));
    }
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for (a, b, sg) in four_form_slots(space, q) {
        m[(a, b)] = sg;
        m[(b, a)] = sg;
    }
    Ok(m)
}

/// Hamilton's sharp product via the bracket table:
/// `(A#B)_{γδ} = ½ Σ A_{εα} B_{ζβ} c^γ_{εζ} c^δ_{αβ}`.
pub fn sharp(space: &BivectorSpace, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(space, a)?;
    check_square(space, b)?;
    let dim = space.dim();
    let mut out = DMatrix::zeros(dim, dim);
    for gamma in 0..dim {
        let into_gamma = space.brackets_into(gamma);
        for delta in 0..dim {
            let mut acc = 0.0;
            for outer in space.brackets_into(delta) {
                let mut inner = 0.0;
                for e in into_gamma {
                    inner += e.sign * a[(e.left, outer.left)] * b[(e.right, outer.right)];
                }
                acc += outer.sign * inner;
            }
            out[(gamma, delta)] = 0.5 * acc;
        }
    }
    Ok(out)
}

/// `Q(A, B) = ½(AB + BA) + A#B` on symmetric matrices.
pub fn q_bilinear_matrix(space: &BivectorSpace, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = sharp(space, a, b)?;
    Ok((a * b + b * a) * 0.5 + s)
}

/// An algebraic curvature operator: symmetric and satisfying the first
/// Bianchi identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureOperator {
    space: BivectorSpace,
    matrix: DMatrix<f64>,
}

/// `R = R_I + R_Ric0 + R_W`.
#[derive(Clone, Debug)]
pub struct IrreducibleParts {
    pub r_i: CurvatureOperator,
    pub r_ric0: CurvatureOperator,
    pub r_w: CurvatureOperator,
}

impl IrreducibleParts {
    pub fn reconstruct(&self) -> CurvatureOperator {
        &(&self.r_i + &self.r_ric0) + &self.r_w
    }
}

impl CurvatureOperator {
    /// Validates symmetry and the Bianchi identity with the default policy.
    pub fn from_matrix(space: &BivectorSpace, m: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_with(space, m, &NumericPolicy::default())
    }

    pub fn from_matrix_with(space: &BivectorSpace, m: DMatrix<f64>, policy: &NumericPolicy) -> Result<Self> {
        check_square(space, &m)?;
        let scale = scale_of(&m);
        let asym = asymmetry(&m);
        if asym > policy.entry_tol * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let residual = bianchi_residual(space, &m);
        if residual > policy.bianchi_tol * scale {
            return Err(Error::BianchiViolation(residual));
        }
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    /// Orthogonal projection of a symmetric matrix onto S²_B.
    pub fn project(space: &BivectorSpace, s: &DMatrix<f64>) -> Result<Self> {
        check_square(space, s)?;
        let asym = asymmetry(s);
        if asym > NumericPolicy::default().entry_tol * scale_of(s) {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = (s + s.transpose()) * 0.5;
        Ok(Self {
            space: space.clone(),
            matrix: project_bianchi_matrix(space, &sym),
        })
    }

    /// For results of operations that preserve S²_B.
    pub(crate) fn from_matrix_unchecked(space: &BivectorSpace, m: DMatrix<f64>) -> Self {
        Self {
            space: space.clone(),
            matrix: m,
        }
    }

    pub fn zero(space: &BivectorSpace) -> Self {
        Self::from_matrix_unchecked(space, DMatrix::zeros(space.dim(), space.dim()))
    }

    /// `I = id ∧ id`, the identity on Λ².
    pub fn identity(space: &BivectorSpace) -> Self {
        Self::from_matrix_unchecked(space, DMatrix::identity(space.dim(), space.dim()))
    }

    /// `A ∧ id` for a symmetric endomorphism A; always Bianchi.
    pub fn wedge_identity(space: &BivectorSpace, a: &SymEndo) -> Result<Self> {
        let m = space.wedge_endos(a, &SymEndo::identity(space.n()))?;
        Ok(Self::from_matrix_unchecked(space, m))
    }

    pub fn space(&self) -> &BivectorSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `R_{ijkl} = ⟨R(e_i∧e_j), e_k∧e_l⟩` for arbitrary indices.
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        tensor_entry(&self.space, &self.matrix, i, j, k, l)
    }

    pub fn inner(&self, other: &Self) -> f64 {
        trace_inner(&self.matrix, &other.matrix)
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_matrix_unchecked(&self.space, &self.matrix * c)
    }

    pub fn bianchi_residual(&self) -> f64 {
        bianchi_residual(&self.space, &self.matrix)
    }

    /// `Ric(R)_{ij} = Σ_k R_{ikjk}`.
    pub fn ricci(&self) -> SymEndo {
        let n = self.n();
        let mut ric = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| self.entry(i, k, j, k)).sum();
                ric[(i, j)] = v;
                ric[(j, i)] = v;
            }
        }
        SymEndo::new_unchecked(ric)
    }

    pub fn scalar(&self) -> f64 {
        // s = Σ_{i,k} R_{ikik} = 2 tr M
        2.0 * self.matrix.trace()
    }

    pub fn ricci_traceless(&self) -> SymEndo {
        self.ricci().traceless()
    }

    /// `‖Ric(R)‖² = tr(Ric²)`.
    pub fn ricci_norm_squared(&self) -> f64 {
        self.ricci().norm_squared()
    }

    pub fn decompose(&self) -> Result<IrreducibleParts> {
        let n = self.n();
        if n < 3 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "the irreducible decomposition needs n >= 3",
            });
        }
        let nf = n as f64;
        let r_i = Self::identity(&self.space).scaled(self.scalar() / (nf * (nf - 1.0)));
        let r_ric0 = Self::wedge_identity(&self.space, &self.ricci_traceless())?.scaled(2.0 / (nf - 2.0));
        let r_w = &(self - &r_i) - &r_ric0;
        Ok(IrreducibleParts { r_i, r_ric0, r_w })
    }

    /// Eigenvalues of the coefficient matrix, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            })
        }
    }
}

impl Add for &CurvatureOperator {
    type Output = CurvatureOperator;
    fn add(self, rhs: Self) -> CurvatureOperator {
        assert_eq!(self.space, rhs.space, "operators live in different spaces");
        CurvatureOperator::from_matrix_unchecked(&self.space, &self.matrix + &rhs.matrix)
    }
}

impl Sub for &CurvatureOperator {
    type Output = CurvatureOperator;
    fn sub(self, rhs: Self) -> CurvatureOperator {
        assert_eq!(self.space, rhs.space, "operators live in different spaces");
        CurvatureOperator::from_matrix_unchecked(&self.space, &self.matrix - &rhs.matrix)
    }
}

impl Neg for &CurvatureOperator {
    type Output = CurvatureOperator;
    fn neg(self) -> CurvatureOperator {
        self.scaled(-1.0)
    }
}

impl Mul<&CurvatureOperator> for f64 {
    type Output = CurvatureOperator;
    fn mul(self, rhs: &CurvatureOperator) -> CurvatureOperator {
        rhs.scaled(self)
    }
}

/// `Q(A, B)`; bilinear and symmetric, maps S²_B × S²_B into S²_B.
pub fn q_bilinear(a: &CurvatureOperator, b: &CurvatureOperator) -> Result<CurvatureOperator> {
    a.same_space(b)?;
    let m = q_bilinear_matrix(&a.space, &a.matrix, &b.matrix)?;
    Ok(CurvatureOperator::from_matrix_unchecked(&a.space, m))
}

/// `Q(R) = R² + R#`.
pub fn q_of(r: &CurvatureOperator) -> CurvatureOperator {
    let m = q_bilinear_matrix(&r.space, &r.matrix, &r.matrix).expect("square by construction");
    CurvatureOperator::from_matrix_unchecked(&r.space, m)
}

/// `tri(A, B, C) = 2⟨Q(A, B), C⟩`.
pub fn tri(a: &CurvatureOperator, b: &CurvatureOperator, c: &CurvatureOperator) -> Result<f64> {
    a.same_space(c)?;
    Ok(2.0 * q_bilinear(a, b)?.inner(c))
}

/// Cubic potential `P(R) = ⅓⟨Q(R), R⟩` whose gradient is Q.
pub fn potential(r: &CurvatureOperator) -> f64 {
    q_of(r).inner(r) / 3.0
}

/// Largest `|∂_E P(R) - ⟨Q(R), E⟩|` over an orthonormal basis `E` of S²_B,
/// with the directional derivative taken by central differences of step `h`.
pub fn gradient_defect(r: &CurvatureOperator, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive")));
    }
    let basis = IrreducibleBasis::new(r.space())?;
    let q = q_of(r);
    let mut worst: f64 = 0.0;
    for e in basis.all() {
        let e = CurvatureOperator::from_matrix_unchecked(r.space(), e.clone());
        let plus = potential(&(r + &e.scaled(h)));
        let minus = potential(&(r - &e.scaled(h)));
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((fd - q.inner(&e)).abs());
    }
    Ok(worst)
}

/// Closed form of `Q(R)` for `R` of Ricci type, with `E = Ric0(R)`, `s = s(R)`:
/// `E∧E/(n-2) + 2s/(n(n-1)) E∧id - 2/(n-2)² (E²)₀∧id + (s²/(n²(n-1)) + ‖E‖²/(n(n-2))) I`.
pub fn ricci_type_q(r: &CurvatureOperator) -> Result<CurvatureOperator> {
    let n = r.n();
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "Ricci type needs n >= 3",
        });
    }
    let scale = r.norm().max(1.0);
    if r.decompose()?.r_w.norm() > 1e-8 * scale {
        return Err(Error::InvalidArgument("operator has a Weyl part".into()));
    }
    let space = r.space();
    let nf = n as f64;
    let s = r.scalar();
    let e = r.ricci_traceless();
    let e2 = e.square().traceless();
    let id = SymEndo::identity(n);
    let m = space.wedge_endos(&e, &e)? / (nf - 2.0) + space.wedge_endos(&e, &id)? * (2.0 * s / (nf * (nf - 1.0)))
        - space.wedge_endos(&e2, &id)? * (2.0 / ((nf - 2.0) * (nf - 2.0)))
        + DMatrix::identity(space.dim(), space.dim())
            * (s * s / (nf * nf * (nf - 1.0)) + e.norm_squared() / (nf * (nf - 2.0)));
    Ok(CurvatureOperator::from_matrix_unchecked(space, m))
}

/// The special case `R ∈ ⟨Ric0⟩`:
/// `(E∧E)_W/(n-2) - 4/(n-2)² (E²)₀∧id + ‖E‖²/(n(n-1)) I`.
pub fn ricci_part_q(r: &CurvatureOperator) -> Result<CurvatureOperator> {
    let n = r.n();
    let scale = r.norm().max(1.0);
    let parts = r.decompose()?;
    if parts.r_w.norm() > 1e-8 * scale || parts.r_i.norm() > 1e-8 * scale {
        return Err(Error::InvalidArgument("operator is not in the traceless Ricci part".into()));
    }
    let space = r.space();
    let nf = n as f64;
    let e = r.ricci_traceless();
    let ee = CurvatureOperator::from_matrix_unchecked(space, space.wedge_endos(&e, &e)?);
    let m = ee.decompose()?.r_w.into_matrix() / (nf - 2.0)
        - space.wedge_endos(&e.square().traceless(), &SymEndo::identity(n))? * (4.0 / ((nf - 2.0) * (nf - 2.0)))
        + DMatrix::identity(space.dim(), space.dim()) * (e.norm_squared() / (nf * (nf - 1.0)));
    Ok(CurvatureOperator::from_matrix_unchecked(space, m))
}

/// `Q̃(R) = Q(R) - ‖Ric(R)‖² R` without checking `s(R) = 1`.
pub fn q_tilde_unchecked(r: &CurvatureOperator) -> CurvatureOperator {
    let q = q_of(r);
    &q - &r.scaled(r.ricci_norm_squared())
}

/// The normalized field `Q̃(R) = Q(R) - ‖Ric(R)‖² R` on `s(R) = 1`.
pub fn q_tilde(r: &CurvatureOperator) -> Result<CurvatureOperator> {
    q_tilde_with(r, &NumericPolicy::default())
}

pub fn q_tilde_with(r: &CurvatureOperator, policy: &NumericPolicy) -> Result<CurvatureOperator> {
    let s = r.scalar();
    if (s - 1.0).abs() > policy.scalar_tol {
        return Err(Error::NotUnitScalar(s));
    }
    Ok(q_tilde_unchecked(r))
}

/// Orthonormal basis of S²_B adapted to `⟨I⟩ ⊕ ⟨Ric0⟩ ⊕ ⟨W⟩`, under
/// `⟨A, B⟩ = tr(AB)`.
#[derive(Clone, Debug)]
pub struct IrreducibleBasis {
    pub identity: DMatrix<f64>,
    pub ricci: Vec<DMatrix<f64>>,
    pub weyl: Vec<DMatrix<f64>>,
}

impl IrreducibleBasis {
    pub fn new(space: &BivectorSpace) -> Result<Self> {
        let n = space.n();
        if n < 3 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "the irreducible decomposition needs n >= 3",
            });
        }
        let dim = space.dim();
        let identity = DMatrix::identity(dim, dim) / (dim as f64).sqrt();

        // ⟨X∧id, Y∧id⟩ = (n-2)/4 tr(XY) for traceless X, Y, so an orthonormal
        // basis of S²_0(ℝⁿ) maps to an orthogonal one.
        let scale = 2.0 / ((n as f64) - 2.0).sqrt();
        let mut ricci = Vec::with_capacity(n * (n + 1) / 2 - 1);
        for k in 1..n {
            // Helmert vectors: (1, .., 1, -k, 0, ..) / sqrt(k(k+1))
            let norm = ((k * (k + 1)) as f64).sqrt();
            let d: Vec<f64> = (0..n)
                .map(|i| match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -(k as f64) / norm,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect();
            let w = space.wedge_endos(&SymEndo::from_diagonal(&d), &SymEndo::identity(n))?;
            ricci.push(w * scale);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut x = DMatrix::zeros(n, n);
                x[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                x[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
                let w = space.wedge_endos(&SymEndo::new_unchecked(x), &SymEndo::identity(n))?;
                ricci.push(w * scale);
            }
        }

        let expected_weyl = n * (n + 1) * (n + 2) * (n.saturating_sub(3)) / 12;
        let mut weyl: Vec<DMatrix<f64>> = Vec::with_capacity(expected_weyl);
        'outer: for a in 0..dim {
            for b in a..dim {
                if weyl.len() == expected_weyl {
                    break 'outer;
                }
                let mut e = DMatrix::zeros(dim, dim);
                e[(a, b)] = 1.0;
                e[(b, a)] = 1.0;
                let p = CurvatureOperator::project(space, &e)?;
                let mut w = p.decompose()?.r_w.into_matrix();
                // Two Gram–Schmidt passes.
                for _ in 0..2 {
                    for q in &weyl {
                        let c = trace_inner(q, &w);
                        w -= q * c;
                    }
                }
                let norm = w.norm();
                if norm > 1e-8 {
                    weyl.push(w / norm);
                }
            }
        }
        if weyl.len() != expected_weyl {
            return Err(Error::InvalidArgument(format!(
                "Weyl basis has dimension {}, expected {expected_weyl}",
                weyl.len()
            )));
        }
        Ok(Self {
            identity,
            ricci,
            weyl,
        })
    }

    /// Basis of the `s = 0` slice: Ricci part followed by Weyl part.
    pub fn slice(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.ricci.iter().chain(self.weyl.iter())
    }

    pub fn slice_dim(&self) -> usize {
        self.ricci.len() + self.weyl.len()
    }

    pub fn all(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        std::iter::once(&self.identity).chain(self.slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn space(n: usize) -> BivectorSpace {
        BivectorSpace::new(n).unwrap()
    }

    fn hodge_star4() -> DMatrix<f64> {
        four_form_operator(&space(4), [0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn bianchi_examples() {
        let s = space(5);
        assert_eq!(bianchi_residual(&s, &DMatrix::identity(10, 10)), 0.0);
        let star = hodge_star4();
        assert!(bianchi_residual(&space(4), &star) > 1.0);
        let proj = CurvatureOperator::project(&space(4), &star).unwrap();
        assert!(proj.norm() < 1e-15);
        assert!(trace_inner(proj.matrix(), &star).abs() < 1e-15);
    }

    #[test]
    fn projection_fixes_bianchi_and_is_idempotent() {
        let s = space(6);
        let r = models::random_bianchi(6, 11, 1.0).unwrap();
        let again = CurvatureOperator::project(&s, r.matrix()).unwrap();
        assert!((again.matrix() - r.matrix()).norm() < 1e-14);

        let raw = DMatrix::from_fn(15, 15, |i, j| ((i * 7 + j * 7) as f64).sin() + ((i * j) as f64).cos());
        let p1 = CurvatureOperator::project(&s, &raw).unwrap();
        assert!(p1.bianchi_residual() <= 1e-12);
        let p2 = CurvatureOperator::project(&s, p1.matrix()).unwrap();
        assert!((p1.matrix() - p2.matrix()).norm() < 1e-12);
        // orthogonal projection: the removed part is orthogonal to the kept part
        let removed = &raw - p1.matrix();
        assert!(trace_inner(&removed, p1.matrix()).abs() < 1e-10);
        assert!(p1.norm() <= raw.norm() + 1e-12);
    }

    #[test]
    fn non_bianchi_rejected() {
        let err = CurvatureOperator::from_matrix(&space(4), hodge_star4()).unwrap_err();
        assert!(matches!(err, Error::BianchiViolation(_)));
        let mut asym = DMatrix::identity(6, 6);
        asym[(0, 1)] = 0.5;
        assert!(matches!(
            CurvatureOperator::from_matrix(&space(4), asym),
            Err(Error::NotSymmetric(_))
        ));
        assert!(matches!(
            CurvatureOperator::from_matrix(&space(4), DMatrix::identity(5, 5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ricci_and_scalar_of_identity() {
        for n in 3..=7 {
            let r = CurvatureOperator::identity(&space(n));
            let ric = r.ricci();
            let nf = n as f64;
            assert!((ric.matrix() - DMatrix::identity(n, n) * (nf - 1.0)).norm() < 1e-14);
            assert!((r.scalar() - nf * (nf - 1.0)).abs() < 1e-12);
            assert!(r.ricci_traceless().norm_squared() < 1e-24);
        }
    }

    #[test]
    fn ricci_of_normalized_sphere_times_line() {
        for n in 3..=6 {
            let r = models::sphere_times_flat(n, 1).unwrap();
            let nf = n as f64;
            let ric = r.ricci();
            for i in 0..=n {
                let expected = if i < n { 1.0 / nf } else { 0.0 };
                assert!((ric.matrix()[(i, i)] - expected).abs() < 1e-14);
            }
            assert!((r.scalar() - 1.0).abs() < 1e-14);
            let ric0 = r.ricci_traceless();
            for i in 0..=n {
                let expected = if i < n { 1.0 / (nf * (nf + 1.0)) } else { -1.0 / (nf + 1.0) };
                assert!((ric0.matrix()[(i, i)] - expected).abs() < 1e-14);
            }
            assert!(ric0.trace().abs() < 1e-14);
            let parts = r.decompose().unwrap();
            assert!(parts.r_w.norm() < 1e-14);
        }
    }

    #[test]
    fn decomposition_invariants() {
        for n in 3..=7 {
            let r = models::random_bianchi(n, 100 + n as u64, 1.0).unwrap();
            let p = r.decompose().unwrap();
            assert!((p.reconstruct().matrix() - r.matrix()).norm() < 1e-12);
            assert!(p.r_i.inner(&p.r_ric0).abs() < 1e-12);
            assert!(p.r_i.inner(&p.r_w).abs() < 1e-12);
            assert!(p.r_ric0.inner(&p.r_w).abs() < 1e-12);
            assert!(p.r_w.ricci().norm_squared() < 1e-24);
            assert!(p.r_i.ricci_traceless().norm_squared() < 1e-24);
            assert!(p.r_ric0.scalar().abs() < 1e-12);
            assert!(p.r_w.scalar().abs() < 1e-12);
            assert!(p.r_w.bianchi_residual() < 1e-12);
        }
        assert!(CurvatureOperator::identity(&space(2)).decompose().is_err());
    }

    #[test]
    fn sphere_has_no_ricci_or_weyl_part() {
        let r = CurvatureOperator::identity(&space(5)).scaled(0.7);
        let p = r.decompose().unwrap();
        assert!(p.r_ric0.norm() < 1e-14);
        assert!(p.r_w.norm() < 1e-14);
    }

    #[test]
    fn sharp_of_identity() {
        for n in 3..=8 {
            let s = space(n);
            let i = DMatrix::identity(s.dim(), s.dim());
            let ii = sharp(&s, &i, &i).unwrap();
            assert!((ii - &i * (n as f64 - 2.0)).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn sharp_of_weyl_with_identity() {
        let s = space(5);
        let w = models::random_bianchi(5, 3, 1.0).unwrap().decompose().unwrap().r_w;
        let i = DMatrix::identity(10, 10);
        let wi = sharp(&s, w.matrix(), &i).unwrap();
        assert!((wi + w.matrix()).norm() < 1e-12);
    }

    #[test]
    fn sharp_symmetric_in_arguments() {
        let s = space(5);
        let a = models::random_bianchi(5, 1, 1.0).unwrap();
        let b = models::random_bianchi(5, 2, 1.0).unwrap();
        let ab = sharp(&s, a.matrix(), b.matrix()).unwrap();
        let ba = sharp(&s, b.matrix(), a.matrix()).unwrap();
        assert!((&ab - &ba).norm() < 1e-10);
        assert!((&ab - ab.transpose()).norm() < 1e-10);
        assert!(sharp(&s, &DMatrix::zeros(3, 3), b.matrix()).is_err());
    }

    #[test]
    fn q_identity_relations() {
        for n in 3..=7 {
            let sp = space(n);
            let nf = n as f64;
            let i = CurvatureOperator::identity(&sp);
            let r = models::random_bianchi(n, 40 + n as u64, 1.0).unwrap();
            let p = r.decompose().unwrap();
            let lhs = q_bilinear(&i, &r).unwrap();
            let rhs = &p.r_i.scaled(nf - 1.0) + &p.r_ric0.scaled((nf - 2.0) / 2.0);
            assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-10);
            assert!(q_bilinear(&i, &p.r_w).unwrap().norm() < 1e-10);
            let qi = q_of(&i);
            assert!((qi.matrix() - i.matrix() * (nf - 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn q_preserves_bianchi_and_trace_identities() {
        for seed in 0..10 {
            let n = 4 + (seed as usize % 3);
            let r = models::random_bianchi(n, seed, 1.0).unwrap();
            let q = q_of(&r);
            assert!(q.bianchi_residual() < 1e-10);
            let ric = r.ricci();
            assert!((q.scalar() - ric.norm_squared()).abs() < 1e-10 * ric.norm_squared().max(1.0));
            let ric_q = q.ricci();
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            v += ric.matrix()[(k, l)] * r.entry(i, k, j, l);
                        }
                    }
                    assert!((ric_q.matrix()[(i, j)] - v).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ricci_type_closed_forms() {
        for n in 3..=6 {
            let r = crate::models::random_bianchi(n, 40 + n as u64, 1.0).unwrap();
            let parts = r.decompose().unwrap();
            let ricci_type = &parts.r_i + &parts.r_ric0;
            let closed = ricci_type_q(&ricci_type).unwrap();
            assert!((closed.matrix() - q_of(&ricci_type).matrix()).amax() < 1e-12, "n = {n}");
            let closed = ricci_part_q(&parts.r_ric0).unwrap();
            assert!((closed.matrix() - q_of(&parts.r_ric0).matrix()).amax() < 1e-12, "n = {n}");
        }
        let r = crate::models::random_bianchi(5, 1, 1.0).unwrap();
        assert!(ricci_type_q(&r).is_err());
    }

    #[test]
    fn tri_symmetry() {
        let a = models::random_bianchi(5, 7, 1.0).unwrap();
        let b = models::random_bianchi(5, 8, 1.0).unwrap();
        let c = models::random_bianchi(5, 9, 1.0).unwrap();
        let base = tri(&a, &b, &c).unwrap();
        for v in [
            tri(&a, &c, &b).unwrap(),
            tri(&b, &a, &c).unwrap(),
            tri(&b, &c, &a).unwrap(),
            tri(&c, &a, &b).unwrap(),
            tri(&c, &b, &a).unwrap(),
        ] {
            assert!((v - base).abs() < 1e-9);
        }
    }

    #[test]
    fn potential_examples() {
        let sp = space(5);
        let zero = CurvatureOperator::zero(&sp);
        assert_eq!(potential(&zero), 0.0);
        // central differences of a cubic carry an error h²·P(e) independent of R
        assert!(gradient_defect(&zero, 1e-5).unwrap() < 1e-9);
        let i = CurvatureOperator::identity(&sp);
        assert!((potential(&i) - 4.0 * 10.0 / 3.0).abs() < 1e-10);
        let r = models::random_bianchi(5, 5, 1.0).unwrap();
        assert!(gradient_defect(&r, 1e-5).unwrap() < 1e-7);
        assert!(gradient_defect(&r, 0.0).is_err());
    }

    #[test]
    fn q_tilde_requires_unit_scalar() {
        let r = models::sphere(4, false).unwrap();
        assert!(matches!(q_tilde(&r), Err(Error::NotUnitScalar(_))));
        let r = models::sphere(4, true).unwrap();
        assert!(q_tilde(&r).unwrap().norm() < 1e-14);
    }

    #[test]
    fn irreducible_basis_is_orthonormal() {
        for n in 3..=6 {
            let b = IrreducibleBasis::new(&space(n)).unwrap();
            let all: Vec<_> = b.all().collect();
            let nf = n as f64;
            assert_eq!(all.len(), (nf * nf * (nf * nf - 1.0) / 12.0) as usize);
            for (i, x) in all.iter().enumerate() {
                assert!(bianchi_residual(&space(n), x) < 1e-12);
                for (j, y) in all.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((trace_inner(x, y) - expected).abs() < 1e-10);
                }
            }
            for r in &b.ricci {
                let op = CurvatureOperator::from_matrix(&space(n), r.clone()).unwrap();
                assert!(op.scalar().abs() < 1e-12);
                assert!(op.decompose().unwrap().r_w.norm() < 1e-12);
            }
            for w in &b.weyl {
                let op = CurvatureOperator::from_matrix(&space(n), w.clone()).unwrap();
                assert!(op.ricci().norm_squared() < 1e-20);
            }
        }
    }
}
