//! The bivector space Λ²ℝⁿ, identified with so(n).
//!
//! Basis convention: the bivectors `e_i ∧ e_j` with `i < j` are ordered
//! lexicographically on the pair `(i, j)`. With 0-based indices the position
//! of `(i, j)` is `i (2n - i - 1) / 2 + (j - i - 1)`. Files label this
//! ordering `lex-pairs-1based`, since they name the pairs `(1,2), (1,3), ...`.
//!
//! The identification with skew matrices is `x ∧ y = x yᵀ - y xᵀ`, so that
//! `(x ∧ y) z = ⟨y, z⟩ x - ⟨x, z⟩ y` and the basis is orthonormal for
//! `⟨A, B⟩ = -½ tr(AB)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Coefficients of a bivector in the lexicographic basis.
pub type Bivector = DVector<f64>;

/// A nonzero bracket of basis elements: `[ω_left, ω_right] = sign · ω_target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct BracketEntry {
    pub left: usize,
    pub right: usize,
    pub target: usize,
    pub sign: f64,
}

struct Tables {
    n: usize,
    dim: usize,
    pairs: Vec<(usize, usize)>,
    /// `index[i * n + j]` for `i < j`.
    index: Vec<usize>,
    /// Every ordered pair with a nonzero bracket, grouped by target.
    by_target: Vec<Vec<BracketEntry>>,
}

/// Λ²ℝⁿ with its basis indexing and bracket table.
///
/// The bracket table is computed once in [`BivectorSpace::new`] and shared
/// read-only by clones.
#[derive(Clone)]
pub struct BivectorSpace(Arc<Tables>);

impl fmt::Debug for BivectorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BivectorSpace")
            .field("n", &self.0.n)
            .field("dim", &self.0.dim)
            .finish()
    }
}

impl PartialEq for BivectorSpace {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n
    }
}

impl Eq for BivectorSpace {}

/// Position of `(i, j)`, `i < j < n`, in the lexicographic ordering.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl BivectorSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension {
                n,
                reason: "bivectors need n >= 2",
            });
        }
        let dim = n * (n - 1) / 2;
        let mut pairs = Vec::with_capacity(dim);
        let mut index = vec![usize::MAX; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                index[i * n + j] = pairs.len();
                pairs.push((i, j));
            }
        }
        debug_assert!(pairs
            .iter()
            .enumerate()
            .all(|(a, &(i, j))| pair_index(n, i, j) == a));

        let skew: Vec<DMatrix<f64>> = pairs
            .iter()
            .map(|&(i, j)| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = 1.0;
                m[(j, i)] = -1.0;
                m
            })
            .collect();
        let mut by_target = vec![Vec::new(); dim];
        for (a, sa) in skew.iter().enumerate() {
            for (b, sb) in skew.iter().enumerate() {
                let c = sa * sb - sb * sa;
                for (g, &(i, j)) in pairs.iter().enumerate() {
                    let v = c[(i, j)];
                    if v != 0.0 {
                        by_target[g].push(BracketEntry {
                            left: a,
                            right: b,
                            target: g,
                            sign: v,
                        });
                    }
                }
            }
        }
        Ok(Self(Arc::new(Tables {
            n,
            dim,
            pairs,
            index,
            by_target,
        })))
    }

    /// Ambient dimension n.
    pub fn n(&self) -> usize {
        self.0.n
    }

    /// N = n(n-1)/2.
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.0.pairs
    }

    pub fn pair(&self, alpha: usize) -> (usize, usize) {
        self.0.pairs[alpha]
    }

    /// Index of `e_i ∧ e_j` for `i < j`.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        if i < j && j < self.0.n {
            Some(self.0.index[i * self.0.n + j])
        } else {
            None
        }
    }

    /// `e_i ∧ e_j = sign · ω_index` for any `i ≠ j`.
    pub fn signed_index(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.index(i, j).map(|a| (a, 1.0)),
            std::cmp::Ordering::Greater => self.index(j, i).map(|a| (a, -1.0)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub(crate) fn brackets_into(&self, target: usize) -> &[BracketEntry] {
        &self.0.by_target[target]
    }

    pub fn basis(&self, alpha: usize) -> Bivector {
        let mut v = DVector::zeros(self.dim());
        v[alpha] = 1.0;
        v
    }

    fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: len,
            })
        }
    }

    /// Coefficients of `x ∧ y`.
    pub fn wedge_vectors(&self, x: &[f64], y: &[f64]) -> Result<Bivector> {
        self.check_len(x.len(), self.n())?;
        self.check_len(y.len(), self.n())?;
        Ok(DVector::from_iterator(
            self.dim(),
            self.pairs().iter().map(|&(i, j)| x[i] * y[j] - x[j] * y[i]),
        ))
    }

    /// Lie bracket `[φ, ψ]`, the commutator of the corresponding skew matrices.
    pub fn bracket(&self, phi: &Bivector, psi: &Bivector) -> Result<Bivector> {
        self.check_len(phi.len(), self.dim())?;
        self.check_len(psi.len(), self.dim())?;
        let out = DVector::from_fn(self.dim(), |g, _| {
            self.brackets_into(g)
                .iter()
                .map(|e| e.sign * phi[e.left] * psi[e.right])
                .sum()
        });
        Ok(out)
    }

    /// ⟨φ, ψ⟩ on coefficient vectors (the basis is orthonormal).
    pub fn inner(&self, phi: &Bivector, psi: &Bivector) -> Result<f64> {
        self.check_len(phi.len(), self.dim())?;
        self.check_len(psi.len(), self.dim())?;
        Ok(phi.dot(psi))
    }

    pub fn to_skew(&self, phi: &Bivector) -> Result<SkewMatrix> {
        self.check_len(phi.len(), self.dim())?;
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (a, &(i, j)) in self.pairs().iter().enumerate() {
            m[(i, j)] = phi[a];
            m[(j, i)] = -phi[a];
        }
        Ok(SkewMatrix(m))
    }

    pub fn from_skew(&self, m: &SkewMatrix) -> Result<Bivector> {
        self.check_len(m.0.nrows(), self.n())?;
        Ok(DVector::from_iterator(
            self.dim(),
            self.pairs().iter().map(|&(i, j)| m.0[(i, j)]),
        ))
    }

    /// Matrix of `ad_φ = [φ, ·]` acting on Λ².
    pub fn ad_matrix(&self, phi: &Bivector) -> Result<DMatrix<f64>> {
        self.check_len(phi.len(), self.dim())?;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for g in 0..self.dim() {
            for e in self.brackets_into(g) {
                m[(g, e.right)] += e.sign * phi[e.left];
            }
        }
        Ok(m)
    }

    /// `A ∧ B` on Λ², defined by `(A∧B)(v∧w) = ½(Av ∧ Bw + Bv ∧ Aw)`.
    ///
    /// Column β holds the image of the basis bivector β.
    pub fn wedge_endos(&self, a: &SymEndo, b: &SymEndo) -> Result<DMatrix<f64>> {
        self.check_len(a.0.nrows(), self.n())?;
        self.check_len(b.0.nrows(), self.n())?;
        let (a, b) = (&a.0, &b.0);
        let dim = self.dim();
        let pairs = self.pairs();
        Ok(DMatrix::from_fn(dim, dim, |row, col| {
            let (k, l) = pairs[row];
            let (i, j) = pairs[col];
            0.5 * (a[(k, i)] * b[(l, j)] - a[(l, i)] * b[(k, j)] + b[(k, i)] * a[(l, j)]
                - b[(l, i)] * a[(k, j)])
        }))
    }
}

fn max_asymmetry(m: &DMatrix<f64>, sign: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - sign * m[(j, i)]).abs());
        }
    }
    worst
}

fn entry_scale(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// An element of so(n) in matrix form.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let dev = max_asymmetry(&m, -1.0);
        if dev > tol * entry_scale(&m) {
            return Err(Error::NotSkew(dev));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `-½ tr(ΦΨ)`.
    pub fn inner(&self, other: &SkewMatrix) -> Result<f64> {
        if self.0.shape() != other.0.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.0.nrows(),
                found: other.0.nrows(),
            });
        }
        Ok(-0.5 * (&self.0 * &other.0).trace())
    }

    pub fn commutator(&self, other: &SkewMatrix) -> SkewMatrix {
        SkewMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }
}

/// A self-adjoint endomorphism of ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEndo(DMatrix<f64>);

impl SymEndo {
    pub fn new(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let dev = max_asymmetry(&m, 1.0);
        if dev > tol * entry_scale(&m) {
            return Err(Error::NotSymmetric(dev));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Traceless part `A - (tr A / n) id`.
    pub fn traceless(&self) -> SymEndo {
        let n = self.n();
        let shift = self.trace() / n as f64;
        SymEndo(&self.0 - DMatrix::identity(n, n) * shift)
    }

    /// `tr(AB)`.
    pub fn inner(&self, other: &SymEndo) -> f64 {
        self.0.component_mul(&other.0).sum()
    }

    /// `tr(A²)`.
    pub fn norm_squared(&self) -> f64 {
        self.inner(self)
    }

    pub fn square(&self) -> SymEndo {
        SymEndo(&self.0 * &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn index_is_lexicographic_bijection() {
        let s = BivectorSpace::new(5).unwrap();
        assert_eq!(s.dim(), 10);
        let mut seen = [false; 10];
        for i in 0..5 {
            for j in (i + 1)..5 {
                let a = s.index(i, j).unwrap();
                assert_eq!(a, pair_index(5, i, j));
                assert_eq!(s.pair(a), (i, j));
                assert!(!seen[a]);
                seen[a] = true;
            }
        }
        assert_eq!(s.index(0, 1), Some(0));
        assert_eq!(s.index(3, 4), Some(9));
        assert_eq!(s.signed_index(2, 1), Some((s.index(1, 2).unwrap(), -1.0)));
        assert!(BivectorSpace::new(1).is_err());
    }

    #[test]
    fn wedge_of_basis_vectors() {
        let s = BivectorSpace::new(4).unwrap();
        let w = s.wedge_vectors(&unit(4, 0), &unit(4, 1)).unwrap();
        assert_eq!(w, s.basis(0));
        let x = [0.3, -1.2, 2.0, 0.5];
        assert_eq!(s.wedge_vectors(&x, &x).unwrap().norm(), 0.0);
        let e1e2 = [1.0, 1.0, 0.0, 0.0];
        assert_eq!(s.wedge_vectors(&e1e2, &unit(4, 1)).unwrap(), s.basis(0));
        assert!(matches!(
            s.wedge_vectors(&[1.0, 0.0], &unit(4, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wedge_matches_skew_action() {
        // (x∧y) z = <y,z> x - <x,z> y
        let s = BivectorSpace::new(4).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 0.2, 0.7]);
        let y = DVector::from_vec(vec![1.1, 0.4, -0.6, 0.0]);
        let z = DVector::from_vec(vec![-0.5, 0.9, 0.1, 1.3]);
        let w = s.wedge_vectors(x.as_slice(), y.as_slice()).unwrap();
        let m = s.to_skew(&w).unwrap();
        let lhs = m.matrix() * &z;
        let rhs = &x * y.dot(&z) - &y * x.dot(&z);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn bracket_examples() {
        let s = BivectorSpace::new(4).unwrap();
        let e12 = s.basis(s.index(0, 1).unwrap());
        let e23 = s.basis(s.index(1, 2).unwrap());
        let e13 = s.basis(s.index(0, 2).unwrap());
        let e34 = s.basis(s.index(2, 3).unwrap());
        assert_eq!(s.bracket(&e12, &e23).unwrap(), e13);
        assert_eq!(s.bracket(&e12, &e12).unwrap().norm(), 0.0);
        assert_eq!(s.bracket(&e12, &e34).unwrap().norm(), 0.0);

        // Oracle: matrix commutator.
        let phi = DVector::from_fn(6, |i, _| (i as f64 * 0.7).sin());
        let psi = DVector::from_fn(6, |i, _| (i as f64 * 1.3 + 0.2).cos());
        let via_table = s.bracket(&phi, &psi).unwrap();
        let via_matrix = s
            .from_skew(&s.to_skew(&phi).unwrap().commutator(&s.to_skew(&psi).unwrap()))
            .unwrap();
        assert!((via_table - via_matrix).norm() < 1e-14);
    }

    #[test]
    fn inner_product_two_routes() {
        let s = BivectorSpace::new(5).unwrap();
        let e12 = s.basis(0);
        let e13 = s.basis(1);
        assert_eq!(s.inner(&e12, &e12).unwrap(), 1.0);
        assert_eq!(s.inner(&e12, &e13).unwrap(), 0.0);
        let phi = DVector::from_fn(10, |i, _| (i as f64).sqrt() - 1.0);
        let psi = DVector::from_fn(10, |i, _| 0.3 * i as f64 - (i as f64).cos());
        let coeff = s.inner(&phi, &psi).unwrap();
        let trace = s
            .to_skew(&phi)
            .unwrap()
            .inner(&s.to_skew(&psi).unwrap())
            .unwrap();
        assert!((coeff - trace).abs() < 1e-12);
    }

    #[test]
    fn wedge_endos_examples() {
        let s = BivectorSpace::new(4).unwrap();
        let id = SymEndo::identity(4);
        let ii = s.wedge_endos(&id, &id).unwrap();
        assert!((ii - DMatrix::<f64>::identity(6, 6)).norm() < 1e-15);

        let a = [1.0, -2.0, 0.5, 3.0];
        let w = s.wedge_endos(&SymEndo::from_diagonal(&a), &id).unwrap();
        for (alpha, &(i, j)) in s.pairs().iter().enumerate() {
            for beta in 0..6 {
                let expected = if alpha == beta { (a[i] + a[j]) / 2.0 } else { 0.0 };
                assert_eq!(w[(alpha, beta)], expected);
            }
        }

        let b = SymEndo::new(
            DMatrix::from_fn(4, 4, |i, j| ((i + j) as f64).sin() + (i * j) as f64 * 0.1),
            1e-12,
        )
        .unwrap();
        let c = SymEndo::new(
            DMatrix::from_fn(4, 4, |i, j| ((i * j) as f64).cos() - (i + j) as f64),
            1e-12,
        )
        .unwrap();
        let bc = s.wedge_endos(&b, &c).unwrap();
        let cb = s.wedge_endos(&c, &b).unwrap();
        assert!((&bc - &cb).norm() < 1e-14);
        assert!((&bc - bc.transpose()).norm() < 1e-14);
    }

    #[test]
    fn asymmetric_endomorphism_rejected() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1.0;
        assert!(matches!(SymEndo::new(m, 1e-10), Err(Error::NotSymmetric(_))));
        assert!(SkewMatrix::new(DMatrix::identity(3, 3), 1e-10).is_err());
    }

    #[test]
    fn ad_matrix_is_skew() {
        let s = BivectorSpace::new(5).unwrap();
        let phi = DVector::from_fn(10, |i, _| (i as f64 * 0.37).sin());
        let ad = s.ad_matrix(&phi).unwrap();
        assert!((&ad + ad.transpose()).norm() < 1e-14);
        let psi = DVector::from_fn(10, |i, _| (i as f64 * 0.11).cos());
        assert!((&ad * &psi - s.bracket(&phi, &psi).unwrap()).norm() < 1e-14);
    }
}
