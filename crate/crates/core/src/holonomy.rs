//! The holonomy algebra of a curvature operator: the smallest Lie
//! subalgebra of so(n) containing its image.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bivector::BivectorSpace;
use crate::curvature::{q_of, CurvatureOperator};
use crate::Result;

pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const CONTAINMENT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LieSubalgebraBasis {
    space: BivectorSpace,
    basis: Vec<DVector<f64>>,
}

impl LieSubalgebraBasis {
    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthonormal coefficient vectors.
    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    /// Norm of the part of `v` orthogonal to the span.
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        let mut r = v.clone();
        for b in &self.basis {
            r -= b * b.dot(&r);
        }
        r.norm()
    }

    /// Largest off-span part of a bracket of two basis elements.
    pub fn closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                let br = self.space.bracket(a, b).expect("same space");
                worst = worst.max(self.distance(&br));
            }
        }
        worst
    }

    /// Largest projection onto the span of a basis bivector `e_i∧e_j` with
    /// `i < split <= j`.
    pub fn mixed_component(&self, split: usize) -> f64 {
        let mixed: Vec<usize> = self
            .space
            .pairs()
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| i < split && j >= split)
            .map(|(a, _)| a)
            .collect();
        let mut worst: f64 = 0.0;
        for &a in &mixed {
            let proj: f64 = self.basis.iter().map(|b| b[a] * b[a]).sum::<f64>();
            worst = worst.max(proj.sqrt());
        }
        worst
    }
}

/// Image of `R` with its singular values (descending).
#[derive(Clone, Debug)]
pub struct Image {
    pub basis: Vec<DVector<f64>>,
    pub singular_values: Vec<f64>,
}

/// Orthonormal basis of the column space of the coefficient matrix; rank
/// counts singular values above `rank_tol` times the largest.
pub fn image_basis(r: &CurvatureOperator, rank_tol: f64) -> Image {
    // R is symmetric: singular values are |eigenvalues|, singular vectors
    // are eigenvectors
    let eig = nalgebra::SymmetricEigen::new(r.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let singular_values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].abs()).collect();
    let top = singular_values.first().copied().unwrap_or(0.0);
    let basis = order
        .iter()
        .zip(&singular_values)
        .filter(|(_, &sv)| top > 0.0 && sv > rank_tol * top)
        .map(|(&i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    Image {
        basis,
        singular_values,
    }
}

/// Appends `v` to the orthonormal list if its residual after two
/// Gram–Schmidt passes exceeds `tol`.
fn push_orthonormal(basis: &mut Vec<DVector<f64>>, v: &DVector<f64>, tol: f64) -> bool {
    let mut r = v.clone();
    let start = r.norm();
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis.iter() {
            let c = b.dot(&r);
            r -= b * c;
        }
    }
    let left = r.norm();
    if left > tol * start.max(1.0) {
        basis.push(r / left);
        true
    } else {
        false
    }
}

/// Smallest bracket-closed span containing `seed`.
pub fn lie_closure(space: &BivectorSpace, seed: &[DVector<f64>], rank_tol: f64) -> LieSubalgebraBasis {
    let mut basis = Vec::new();
    for v in seed {
        push_orthonormal(&mut basis, v, rank_tol);
    }
    // each round brackets the newly added elements with all earlier ones
    let mut checked = 0;
    while checked < basis.len() && basis.len() < space.dim() {
        let end = basis.len();
        for i in checked..end {
            for j in 0..i {
                let br = space.bracket(&basis[i], &basis[j]).expect("same space");
                push_orthonormal(&mut basis, &br, rank_tol);
            }
        }
        checked = end;
    }
    LieSubalgebraBasis {
        space: space.clone(),
        basis,
    }
}

pub fn holonomy_algebra(r: &CurvatureOperator, rank_tol: f64) -> LieSubalgebraBasis {
    lie_closure(r.space(), &image_basis(r, rank_tol).basis, rank_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub dim: usize,
    pub singular_values: Vec<f64>,
    pub contained: bool,
    pub defect: f64,
    /// Dimension of the holonomy algebra of Q(R).
    pub q_dim: usize,
}

/// Checks `hol(Q(R)) ⊆ hol(R)`: the defect is the largest off-span part of
/// a basis element of `hol(Q(R))`.
pub fn holonomy_preservation_check(r: &CurvatureOperator) -> Result<HolonomyReport> {
    holonomy_preservation_check_with(r, DEFAULT_RANK_TOL)
}

pub fn holonomy_preservation_check_with(r: &CurvatureOperator, rank_tol: f64) -> Result<HolonomyReport> {
    let image = image_basis(r, rank_tol);
    let hol = lie_closure(r.space(), &image.basis, rank_tol);
    let hol_q = holonomy_algebra(&q_of(r), rank_tol);
    let defect = hol_q.basis().iter().map(|b| hol.distance(b)).fold(0.0, f64::max);
    Ok(HolonomyReport {
        dim: hol.dim(),
        singular_values: image.singular_values,
        contained: defect <= CONTAINMENT_TOL,
        defect,
        q_dim: hol_q.dim(),
    })
}

/// Coefficient matrix with the basis vectors as columns.
pub fn basis_matrix(b: &LieSubalgebraBasis) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(b.space.dim(), b.dim());
    for (c, v) in b.basis.iter().enumerate() {
        m.set_column(c, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn e(space: &BivectorSpace, i: usize, j: usize) -> DVector<f64> {
        let mut v = DVector::zeros(space.dim());
        v[space.index(i, j).unwrap()] = 1.0;
        v
    }

    #[test]
    fn image_examples() {
        let s = BivectorSpace::new(4).unwrap();
        assert_eq!(image_basis(&CurvatureOperator::identity(&s), 1e-9).basis.len(), 6);
        assert!(image_basis(&CurvatureOperator::zero(&s), 1e-9).basis.is_empty());
        let r = models::sphere_times_flat(3, 1).unwrap();
        let img = image_basis(&r, 1e-9);
        assert_eq!(img.basis.len(), 3);
        let hol = lie_closure(r.space(), &img.basis, 1e-9);
        assert!(hol.mixed_component(3) <= 1e-12);
    }

    #[test]
    fn closure_examples() {
        let s = BivectorSpace::new(4).unwrap();
        assert_eq!(lie_closure(&s, &[e(&s, 0, 1)], 1e-9).dim(), 1);
        let so3 = lie_closure(&s, &[e(&s, 0, 1), e(&s, 1, 2)], 1e-9);
        assert_eq!(so3.dim(), 3);
        assert!(so3.distance(&e(&s, 0, 2)) < 1e-12);
        assert!(so3.distance(&e(&s, 0, 3)) > 0.99);
        assert!(so3.closure_defect() < 1e-12);
        let again = lie_closure(&s, so3.basis(), 1e-9);
        assert_eq!(again.dim(), 3);
    }

    #[test]
    fn random_operators_generate_everything_and_are_preserved() {
        for seed in 0..5 {
            let r = models::random_bianchi(5, seed, 1.0).unwrap();
            let rep = holonomy_preservation_check(&r).unwrap();
            assert_eq!(rep.dim, 10);
            assert!(rep.contained);
        }
    }

    #[test]
    fn products_keep_block_structure() {
        let spec: models::ProductSpec = "s3:1,s2:1".parse().unwrap();
        let r = models::product(&spec, true).unwrap();
        let hol = holonomy_algebra(&r, 1e-9);
        assert_eq!(hol.dim(), 3 + 1);
        assert!(hol.mixed_component(3) <= 1e-9);
        let rep = holonomy_preservation_check(&r).unwrap();
        assert!(rep.contained);
        assert!(holonomy_algebra(&q_of(&r), 1e-9).mixed_component(3) <= 1e-9);
    }

    #[test]
    fn zero_is_trivially_contained() {
        let s = BivectorSpace::new(3).unwrap();
        let rep = holonomy_preservation_check(&CurvatureOperator::zero(&s)).unwrap();
        assert_eq!((rep.dim, rep.q_dim), (0, 0));
        assert!(rep.contained);
    }
}
