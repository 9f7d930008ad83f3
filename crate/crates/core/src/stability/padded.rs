//! Einstein perturbations padded by a flat factor: `R̂ ⊕ 0` on ℝⁿ ⊕ ℝᵏ.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureOperator;
use crate::flow::{einstein_perturbation, two_component_experiment, PerturbationRecord, StepPolicy, Variant};
use crate::models::pad;
use crate::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PaddedRecord {
    pub n: usize,
    pub k: usize,
    pub record: PerturbationRecord,
    /// Largest entry outside the top `n`-block over all samples.
    pub max_padding_leak: f64,
    /// Distance of the last sample, scaled by its dominant coefficient, to
    /// the padded unit dominant part.
    pub limit_distance: f64,
}

fn padding_leak(r: &CurvatureOperator, n: usize) -> f64 {
    let s = r.space();
    let mut leak: f64 = 0.0;
    for (a, &(_, j)) in s.pairs().iter().enumerate() {
        let top_a = j < n;
        for (b, &(_, q)) in s.pairs().iter().enumerate() {
            if !(top_a && q < n) {
                leak = leak.max(r.matrix()[(a, b)].abs());
            }
        }
    }
    leak
}

/// Runs the Einstein perturbation of `r_hat` inside the top block of
/// `r_hat ⊕ 0` in dimension `n + k`.
pub fn padded_product_instability(
    r_hat: &CurvatureOperator,
    k: usize,
    alpha0: f64,
    t_end: f64,
    variant: Variant,
    policy: &StepPolicy,
) -> Result<PaddedRecord> {
    let n = r_hat.n();
    // validates the hypotheses on r_hat and gives λ
    let base = einstein_perturbation(r_hat, alpha0, 0.0, variant, policy)?;
    let parts = r_hat.decompose()?;
    let (dominant, minor) = match variant {
        Variant::ShrinkIdentity => (parts.r_w, parts.r_i),
        Variant::ShrinkWeyl => (parts.r_i, parts.r_w),
    };
    let (dominant, minor) = (pad(&dominant, k)?, pad(&minor, k)?);
    let (points, traj) = two_component_experiment(&dominant, &minor, alpha0, base.lambda, t_end, policy)?;
    let max_padding_leak = traj
        .samples
        .iter()
        .map(|s| padding_leak(&s.operator, n))
        .fold(0.0, f64::max);
    let record = PerturbationRecord {
        variant,
        alpha0,
        lambda: base.lambda,
        blowup_time: base.blowup_time,
        termination: traj.termination,
        max_relative_bianchi: traj.max_relative_bianchi(),
        points,
    };
    Ok(PaddedRecord {
        n,
        k,
        limit_distance: record.final_distance(),
        record,
        max_padding_leak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn s2s2() -> CurvatureOperator {
        let spec: models::ProductSpec = "s2:1,s2:1".parse().unwrap();
        models::product(&spec, true).unwrap()
    }

    #[test]
    fn padded_limit_is_padded_weyl_direction() {
        let policy = StepPolicy::rk4(1e-3);
        let rec = padded_product_instability(&s2s2(), 2, 0.9, 10.0, Variant::ShrinkIdentity, &policy).unwrap();
        assert!(rec.max_padding_leak <= 1e-9);
        assert!(rec.limit_distance <= 1e-3, "{}", rec.limit_distance);
        assert!(rec.record.max_relative_bianchi <= 1e-8);
    }

    #[test]
    fn no_padding_reduces_to_plain_experiment() {
        let policy = StepPolicy::rk4(1e-2);
        let r = s2s2();
        let padded = padded_product_instability(&r, 0, 0.9, 3.0, Variant::ShrinkIdentity, &policy).unwrap();
        let plain = einstein_perturbation(&r, 0.9, 3.0, Variant::ShrinkIdentity, &policy).unwrap();
        assert_eq!(padded.record.points.len(), plain.points.len());
        for (a, b) in padded.record.points.iter().zip(&plain.points) {
            assert_eq!(a.alpha, b.alpha);
            assert_eq!(a.distance, b.distance);
        }
    }

    #[test]
    fn sphere_is_rejected() {
        let policy = StepPolicy::rk4(1e-2);
        let r = models::sphere(4, true).unwrap();
        assert!(padded_product_instability(&r, 2, 0.9, 1.0, Variant::ShrinkIdentity, &policy).is_err());
    }
}
