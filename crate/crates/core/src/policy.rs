use serde::{Deserialize, Serialize};

/// Tolerances shared by every module.
///
/// Absolute tolerances apply to matrix entries of operators whose entries are
/// of order one; checks that scale with the operator (Bianchi residual,
/// symmetry) multiply by `max(1, max |entry|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericPolicy {
    /// Symmetry / skew-symmetry of input matrices.
    pub entry_tol: f64,
    /// Admissible first-Bianchi residual for validated operators.
    pub bianchi_tol: f64,
    /// |s(R) - 1| allowed where unit scalar curvature is required.
    pub scalar_tol: f64,
    /// Relative singular-value cutoff for numerical rank.
    pub rank_tol: f64,
    /// Norm below which Q̃(R) counts as a zero.
    pub zero_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            entry_tol: 1e-10,
            bianchi_tol: 1e-10,
            scalar_tol: 1e-10,
            rank_tol: 1e-9,
            zero_tol: 1e-10,
        }
    }
}

impl NumericPolicy {
    pub fn validate(&self) -> crate::Result<()> {
        let all = [
            self.entry_tol,
            self.bianchi_tol,
            self.scalar_tol,
            self.rank_tol,
            self.zero_tol,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(
                "all tolerances must be positive and finite".into(),
            ))
        }
    }
}
