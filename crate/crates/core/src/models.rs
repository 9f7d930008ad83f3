//! Named curvature operators: space forms, products with flat factors, ℂP²
//! and seeded random operators.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bivector::BivectorSpace;
use crate::curvature::{q_tilde_unchecked, CurvatureOperator};
use crate::{Error, NumericPolicy, Result};

/// `c · id∧id` with `c = 1`, or `c = 1/(n(n-1))` so that `s = 1`.
pub fn sphere(n: usize, normalize: bool) -> Result<CurvatureOperator> {
    let space = BivectorSpace::new(n)?;
    let c = if normalize {
        1.0 / ((n * (n - 1)) as f64)
    } else {
        1.0
    };
    Ok(CurvatureOperator::identity(&space).scaled(c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    /// Constant sectional curvature with Ricci tensor `λ · id`.
    Sphere,
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub dim: usize,
    pub lambda: f64,
    pub kind: FactorKind,
}

impl Factor {
    pub fn sphere(dim: usize, lambda: f64) -> Self {
        Self {
            dim,
            lambda,
            kind: FactorKind::Sphere,
        }
    }

    pub fn flat(dim: usize) -> Self {
        Self {
            dim,
            lambda: 0.0,
            kind: FactorKind::Flat,
        }
    }

    /// Sectional curvature of the factor before any global rescaling.
    fn sectional(&self) -> f64 {
        match self.kind {
            FactorKind::Flat => 0.0,
            FactorKind::Sphere => self.lambda / ((self.dim - 1) as f64),
        }
    }
}

/// A Riemannian product of constant-curvature and flat factors, in the order
/// given. Parsed from strings like `s3:1,flat:2` (a 3-dimensional factor
/// with Einstein constant 1, then ℝ²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub factors: Vec<Factor>,
}

impl ProductSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        let spec = Self { factors };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::InvalidArgument("product needs at least one factor".into()));
        }
        for f in &self.factors {
            if f.dim == 0 {
                return Err(Error::InvalidArgument("factor dimension must be positive".into()));
            }
            if f.kind == FactorKind::Sphere && f.dim < 2 {
                return Err(Error::InvalidArgument(
                    "a curved factor needs dimension at least 2".into(),
                ));
            }
            if !f.lambda.is_finite() {
                return Err(Error::InvalidArgument("Einstein constant must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).sum()
    }

    /// Scalar curvature `Σ nᵢλᵢ` of the unscaled product.
    pub fn scalar(&self) -> f64 {
        self.factors
            .iter()
            .filter(|f| f.kind == FactorKind::Sphere)
            .map(|f| f.dim as f64 * f.lambda)
            .sum()
    }

    /// Index offset of every factor in ℝⁿ.
    pub fn offsets(&self) -> Vec<usize> {
        self.factors
            .iter()
            .scan(0, |acc, f| {
                let start = *acc;
                *acc += f.dim;
                Some(start)
            })
            .collect()
    }
}

impl fmt::Display for ProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| match x.kind {
                FactorKind::Flat => format!("flat:{}", x.dim),
                FactorKind::Sphere => format!("s{}:{}", x.dim, x.lambda),
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for ProductSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |part: &str| Error::InvalidArgument(format!("cannot parse factor `{part}`"));
        let mut factors = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (head, value) = part.split_once(':').ok_or_else(|| bad(part))?;
            if head == "flat" {
                let dim = value.parse().map_err(|_| bad(part))?;
                factors.push(Factor::flat(dim));
            } else if let Some(dim) = head.strip_prefix('s') {
                let dim = dim.parse().map_err(|_| bad(part))?;
                let lambda = value.parse().map_err(|_| bad(part))?;
                factors.push(Factor::sphere(dim, lambda));
            } else {
                return Err(bad(part));
            }
        }
        Self::new(factors)
    }
}

/// Block-diagonal product operator. Normalization rescales by `1/Σnᵢλᵢ`,
/// which requires positive total scalar curvature.
pub fn product(spec: &ProductSpec, normalize: bool) -> Result<CurvatureOperator> {
    spec.validate()?;
    let n = spec.total_dim();
    let space = BivectorSpace::new(n)?;
    let scale = if normalize {
        let s = spec.scalar();
        if s <= 0.0 {
            return Err(Error::NonPositiveScalar(s));
        }
        1.0 / s
    } else {
        1.0
    };
    let mut m = DMatrix::zeros(space.dim(), space.dim());
    for (f, start) in spec.factors.iter().zip(spec.offsets()) {
        let c = f.sectional() * scale;
        for i in start..start + f.dim {
            for j in (i + 1)..start + f.dim {
                let a = space.index(i, j).expect("ordered pair");
                m[(a, a)] = c;
            }
        }
    }
    Ok(CurvatureOperator::from_matrix_unchecked(&space, m))
}

/// Normalized `Sⁿ × ℝᵏ`.
pub fn sphere_times_flat(n: usize, k: usize) -> Result<CurvatureOperator> {
    let mut factors = vec![Factor::sphere(n, 1.0)];
    if k > 0 {
        factors.push(Factor::flat(k));
    }
    product(&ProductSpec::new(factors)?, true)
}

/// Orthonormal self-dual (`+`) and anti-self-dual (`-`) bases of Λ²ℝ⁴:
/// `(e12 ± e34)/√2, (e13 ∓ e24)/√2, (e14 ± e23)/√2`.
pub fn dual_bases() -> [[DVector<f64>; 3]; 2] {
    let space = BivectorSpace::new(4).expect("n = 4");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let e = |i, j| space.basis(space.index(i, j).expect("ordered pair"));
    let make = |sg: f64| {
        [
            (e(0, 1) + e(2, 3) * sg) * r,
            (e(0, 2) - e(1, 3) * sg) * r,
            (e(0, 3) + e(1, 2) * sg) * r,
        ]
    };
    [make(1.0), make(-1.0)]
}

/// Operator on Λ²ℝ⁴ with eigenvalues `plus[i]` on the i-th self-dual basis
/// element and `minus[i]` on the i-th anti-self-dual one. It satisfies the
/// Bianchi identity iff the two traces agree.
pub fn from_dual_spectra(plus: [f64; 3], minus: [f64; 3]) -> Result<CurvatureOperator> {
    let space = BivectorSpace::new(4)?;
    let [p, q] = dual_bases();
    let mut m = DMatrix::zeros(6, 6);
    for i in 0..3 {
        m += &p[i] * p[i].transpose() * plus[i] + &q[i] * q[i].transpose() * minus[i];
    }
    CurvatureOperator::from_matrix(&space, m)
}

/// ℂP² from its spectral data: self-dual eigenvalues `(0, 0, 1/4)` and
/// anti-self-dual block `(1/12) Id` when normalized, twelve times that
/// otherwise.
pub fn cp2(normalize: bool) -> Result<CurvatureOperator> {
    let c = if normalize { 1.0 } else { 12.0 };
    from_dual_spectra(
        [0.0, 0.0, c / 4.0],
        [c / 12.0, c / 12.0, c / 12.0],
    )
}

/// Seeded random operator of S²_B.
///
/// Algorithm: a ChaCha8 generator seeded with `seed_from_u64(seed)` draws
/// N² standard normals, filling an N×N matrix row by row; the matrix is
/// symmetrized `(M + Mᵀ)/2`, multiplied by `scale` and projected onto S²_B.
pub fn random_bianchi(n: usize, seed: u64, scale: f64) -> Result<CurvatureOperator> {
    if n < 3 {
        return Err(Error::UnsupportedDimension {
            n,
            reason: "random operators are generated for n >= 3",
        });
    }
    let space = BivectorSpace::new(n)?;
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let sym = (&m + m.transpose()) * (0.5 * scale);
    CurvatureOperator::project(&space, &sym)
}

/// [`random_bianchi`] shifted by `shift · id∧id`, e.g. to get positive
/// scalar curvature.
pub fn random_bianchi_shifted(n: usize, seed: u64, scale: f64, shift: f64) -> Result<CurvatureOperator> {
    let r = random_bianchi(n, seed, scale)?;
    Ok(&r + &CurvatureOperator::identity(r.space()).scaled(shift))
}

/// Places `r` on the coordinates `offset..offset + r.n()` of ℝ^`total`,
/// zero elsewhere.
pub fn embed(r: &CurvatureOperator, offset: usize, total: usize) -> Result<CurvatureOperator> {
    let n = r.n();
    if offset + n > total {
        return Err(Error::InvalidArgument(format!(
            "block of size {n} at offset {offset} does not fit in dimension {total}"
        )));
    }
    let small = r.space();
    let big = BivectorSpace::new(total)?;
    let map: Vec<usize> = small
        .pairs()
        .iter()
        .map(|&(i, j)| big.index(i + offset, j + offset).expect("ordered pair"))
        .collect();
    let mut m = DMatrix::zeros(big.dim(), big.dim());
    for (a, &ba) in map.iter().enumerate() {
        for (b, &bb) in map.iter().enumerate() {
            m[(ba, bb)] = r.matrix()[(a, b)];
        }
    }
    Ok(CurvatureOperator::from_matrix_unchecked(&big, m))
}

/// `R ⊕ 0` on ℝⁿ ⊕ ℝᵏ.
pub fn pad(r: &CurvatureOperator, k: usize) -> Result<CurvatureOperator> {
    embed(r, 0, r.n() + k)
}

/// Outcome of the product-zero test for two constant-curvature factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductZeroReport {
    pub n1: usize,
    pub lambda1: f64,
    pub n2: usize,
    pub lambda2: f64,
    /// `‖Q̃(R)‖` of the normalized product, computed numerically.
    pub defect: f64,
    /// The same norm from the closed-form block coefficients.
    pub predicted_defect: f64,
    /// `defect <= zero_tol`.
    pub is_zero: bool,
    /// `λ₁ = λ₂` or one factor flat.
    pub analytic_zero: bool,
}

/// Decides whether the normalized product of two constant-curvature factors
/// is a zero of Q̃ and compares with the block formula: on factor `i`,
/// `Q̃(R) = cᵢ (λᵢ/S - ‖Ric‖²) id∧id` with `cᵢ = λᵢ/((nᵢ-1)S)`,
/// `S = n₁λ₁ + n₂λ₂`, `‖Ric‖² = (n₁λ₁² + n₂λ₂²)/S²`.
pub fn product_zero_check(
    n1: usize,
    lambda1: f64,
    n2: usize,
    lambda2: f64,
    policy: &NumericPolicy,
) -> Result<ProductZeroReport> {
    let spec = ProductSpec::new(vec![Factor::sphere(n1, lambda1), Factor::sphere(n2, lambda2)])?;
    let r = product(&spec, true)?;
    let defect = q_tilde_unchecked(&r).norm();

    let s = spec.scalar();
    let ric2 = (n1 as f64 * lambda1 * lambda1 + n2 as f64 * lambda2 * lambda2) / (s * s);
    let predicted_defect = [(n1, lambda1), (n2, lambda2)]
        .iter()
        .map(|&(ni, li)| {
            let c = li / ((ni - 1) as f64 * s);
            let coeff = c * (li / s - ric2);
            let block = (ni * (ni - 1) / 2) as f64;
            coeff * coeff * block
        })
        .sum::<f64>()
        .sqrt();

    Ok(ProductZeroReport {
        n1,
        lambda1,
        n2,
        lambda2,
        defect,
        predicted_defect,
        is_zero: defect <= policy.zero_tol,
        analytic_zero: lambda1 == lambda2 || lambda1 == 0.0 || lambda2 == 0.0,
    })
}
