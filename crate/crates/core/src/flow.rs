//! Integration of the raw flow `dR/dt = Q(R)` and of the normalized flow
//! `dR/dτ = Q̃(R)` on `s = 1`.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::{q_bilinear_matrix, q_of, CurvatureOperator};
use crate::{Error, NumericPolicy, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Adaptive Dormand–Prince 5(4).
    Rk45,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepPolicy {
    pub method: Method,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Local error tolerance per step (adaptive only), relative to `max(1, ‖R‖)`.
    pub tolerance: f64,
    /// Frobenius norm beyond which the run stops with [`Termination::BlowUp`].
    pub blowup_norm: f64,
    /// Keep every k-th step (the last state is always kept).
    pub sample_every: usize,
    /// Abort when the Bianchi residual exceeds this times `max(1, max |entry|)`.
    pub bianchi_abort: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: 1.0,
            tolerance: 1e-10,
            blowup_norm: 1e8,
            sample_every: 1,
            bianchi_abort: 1e-8,
        }
    }
}

impl StepPolicy {
    pub fn rk4(step: f64) -> Self {
        Self {
            initial_step: step,
            max_step: step.max(1.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.initial_step,
            self.min_step,
            self.max_step,
            self.tolerance,
            self.blowup_norm,
            self.bianchi_abort,
        ];
        if !positive.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument(
                "step sizes and tolerances must be positive and finite".into(),
            ));
        }
        if !(self.min_step <= self.initial_step && self.initial_step <= self.max_step) {
            return Err(Error::InvalidArgument(
                "require min_step <= initial_step <= max_step".into(),
            ));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedEnd,
    BlowUp,
    StepUnderflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub s: f64,
    pub norm_i: f64,
    pub norm_ric0: f64,
    pub norm_w: f64,
    pub bianchi_residual: f64,
}

impl Diagnostics {
    pub fn of(r: &CurvatureOperator) -> Result<Self> {
        let parts = r.decompose()?;
        Ok(Self {
            s: r.scalar(),
            norm_i: parts.r_i.norm(),
            norm_ric0: parts.r_ric0.norm(),
            norm_w: parts.r_w.norm(),
            bianchi_residual: r.bianchi_residual(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub time: f64,
    pub operator: CurvatureOperator,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    Normalized,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub mode: Mode,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    /// Largest `|s - 1|` observed before renormalization (normalized mode).
    pub max_scalar_drift: f64,
}

impl FlowTrajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory has at least one sample")
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Bianchi residual relative to `max(1, max |entry|)`, worst over samples.
    pub fn max_relative_bianchi(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.diagnostics.bianchi_residual / entry_scale(s.operator.matrix()))
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t` (or `tau`), `s`, `norm_I`, `norm_Ric0`, `norm_W`,
    /// `bianchi_residual`, floats in `{:.16e}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let time = match self.mode {
            Mode::Raw => "t",
            Mode::Normalized => "tau",
        };
        writeln!(w, "{time},s,norm_I,norm_Ric0,norm_W,bianchi_residual")?;
        for s in &self.samples {
            let d = &s.diagnostics;
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.time, d.s, d.norm_i, d.norm_ric0, d.norm_w, d.bianchi_residual
            )?;
        }
        Ok(())
    }
}

fn entry_scale(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

type Field<'a> = dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + 'a;

fn rk4_step(f: &Field, y: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let k1 = f(y);
    let k2 = f(&(y + &k1 * (h / 2.0)));
    let k3 = f(&(y + &k2 * (h / 2.0)));
    let k4 = f(&(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: returns the fifth-order solution and the
/// max-norm error estimate.
fn dp_step(f: &Field, y: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, f64) {
    debug_assert_eq!(DP_C[0], 0.0);
    let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
    for i in 0..7 {
        let mut yi = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if DP_A[i][j] != 0.0 {
                yi += kj * (h * DP_A[i][j]);
            }
        }
        k.push(f(&yi));
    }
    let mut y5 = y.clone();
    let mut err = DMatrix::zeros(y.nrows(), y.ncols());
    for i in 0..7 {
        y5 += &k[i] * (h * DP_B5[i]);
        err += &k[i] * (h * (DP_B5[i] - DP_B4[i]));
    }
    let e = err.amax();
    (y5, e)
}

struct Stepper<'a> {
    field: &'a Field<'a>,
    /// Applied after every accepted step; returns the value to continue with
    /// and the drift it removed.
    project: &'a dyn Fn(DMatrix<f64>) -> Result<(DMatrix<f64>, f64)>,
    mode: Mode,
}

impl Stepper<'_> {
    fn run(&self, r0: &CurvatureOperator, t_end: f64, policy: &StepPolicy) -> Result<FlowTrajectory> {
        policy.validate()?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("end time {t_end} must be nonnegative")));
        }
        let space = r0.space().clone();
        let make = |t: f64, m: DMatrix<f64>| -> Result<Sample> {
            let operator = CurvatureOperator::from_matrix_unchecked(&space, m);
            let diagnostics = Diagnostics::of(&operator)?;
            let scale = entry_scale(operator.matrix());
            if diagnostics.bianchi_residual > policy.bianchi_abort * scale {
                return Err(Error::Integration {
                    time: t,
                    reason: format!("Bianchi residual {:e} above bound", diagnostics.bianchi_residual),
                });
            }
            Ok(Sample {
                time: t,
                operator,
                diagnostics,
            })
        };

        let mut samples = vec![make(0.0, r0.matrix().clone())?];
        let mut y = r0.matrix().clone();
        let mut t = 0.0;
        let mut drift: f64 = 0.0;
        let mut steps = 0usize;
        let mut termination = Termination::ReachedEnd;

        match policy.method {
            Method::Rk4 => {
                let count = (t_end / policy.initial_step - 1e-9).ceil().max(0.0) as usize;
                let h = if count > 0 { t_end / count as f64 } else { 0.0 };
                for i in 1..=count {
                    let next = rk4_step(self.field, &y, h);
                    let (next, d) = (self.project)(next).map_err(|e| with_time(e, t))?;
                    let blown = !next.norm().is_finite() || next.norm() > policy.blowup_norm;
                    if blown {
                        termination = Termination::BlowUp;
                        break;
                    }
                    drift = drift.max(d);
                    y = next;
                    t = if i == count { t_end } else { i as f64 * h };
                    steps += 1;
                    if steps.is_multiple_of(policy.sample_every) || i == count {
                        samples.push(make(t, y.clone())?);
                    }
                }
            }
            Method::Rk45 => {
                let mut h = policy.initial_step;
                while t < t_end {
                    h = h.min(t_end - t).min(policy.max_step);
                    if h < policy.min_step && t_end - t > policy.min_step {
                        termination = Termination::StepUnderflow;
                        break;
                    }
                    let (next, err) = dp_step(self.field, &y, h);
                    let allowed = policy.tolerance * y.norm().max(1.0);
                    if !err.is_finite() || err > allowed {
                        let factor = if err.is_finite() {
                            (0.9 * (allowed / err).powf(0.2)).clamp(0.1, 0.9)
                        } else {
                            0.1
                        };
                        h *= factor;
                        continue;
                    }
                    let (next, d) = (self.project)(next).map_err(|e| with_time(e, t))?;
                    if !next.norm().is_finite() || next.norm() > policy.blowup_norm {
                        termination = Termination::BlowUp;
                        break;
                    }
                    drift = drift.max(d);
                    y = next;
                    t = if t_end - (t + h) <= f64::EPSILON * t_end { t_end } else { t + h };
                    steps += 1;
                    let grow = if err > 0.0 {
                        (0.9 * (allowed / err).powf(0.2)).clamp(1.0, 5.0)
                    } else {
                        5.0
                    };
                    h *= grow;
                    if steps.is_multiple_of(policy.sample_every) || t >= t_end {
                        samples.push(make(t, y.clone())?);
                    }
                }
            }
        }
        if termination != Termination::ReachedEnd && samples.last().is_some_and(|s| s.time < t) {
            samples.push(make(t, y)?);
        }
        Ok(FlowTrajectory {
            mode: self.mode,
            samples,
            termination,
            max_scalar_drift: drift,
        })
    }
}

fn with_time(e: Error, time: f64) -> Error {
    match e {
        Error::NonPositiveScalar(s) => Error::Integration {
            time,
            reason: format!("scalar curvature {s} left the positive half-space"),
        },
        other => other,
    }
}

/// `dR/dt = Q(R)`. Stops early on blow-up (norm above the policy threshold;
/// the last state below it is always recorded) or step underflow.
pub fn integrate_raw(r0: &CurvatureOperator, t_end: f64, policy: &StepPolicy) -> Result<FlowTrajectory> {
    check_bianchi(r0)?;
    let space = r0.space().clone();
    let field = move |m: &DMatrix<f64>| q_bilinear_matrix(&space, m, m).expect("square");
    let project = |m: DMatrix<f64>| Ok((m, 0.0));
    Stepper {
        field: &field,
        project: &project,
        mode: Mode::Raw,
    }
    .run(r0, t_end, policy)
}

fn check_bianchi(r: &CurvatureOperator) -> Result<()> {
    // Revalidates operators that may have been built through unchecked paths.
    CurvatureOperator::from_matrix(r.space(), r.matrix().clone()).map(|_| ())
}

fn normalized_field(space: &crate::bivector::BivectorSpace) -> impl Fn(&DMatrix<f64>) -> DMatrix<f64> + '_ {
    move |m: &DMatrix<f64>| {
        let r = CurvatureOperator::from_matrix_unchecked(space, m.clone());
        let q = q_of(&r);
        q.matrix() - m * r.ricci_norm_squared()
    }
}

fn renormalize(m: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let s = 2.0 * m.trace();
    if !(s > 0.0) {
        return Err(Error::NonPositiveScalar(s));
    }
    Ok((m / s, (s - 1.0).abs()))
}

/// `dR/dτ = Q̃(R)` from `s(R0) = 1`, renormalizing `R ← R/s(R)` after every
/// step. Aborts if the scalar curvature stops being positive.
pub fn integrate_normalized(r0: &CurvatureOperator, tau_end: f64, policy: &StepPolicy) -> Result<FlowTrajectory> {
    integrate_normalized_with(r0, tau_end, policy, &NumericPolicy::default())
}

pub fn integrate_normalized_with(
    r0: &CurvatureOperator,
    tau_end: f64,
    policy: &StepPolicy,
    numeric: &NumericPolicy,
) -> Result<FlowTrajectory> {
    check_unit_scalar(r0, numeric)?;
    let space = r0.space().clone();
    let field = normalized_field(&space);
    Stepper {
        field: &field,
        project: &renormalize,
        mode: Mode::Normalized,
    }
    .run(r0, tau_end, policy)
}

fn check_unit_scalar(r0: &CurvatureOperator, numeric: &NumericPolicy) -> Result<()> {
    check_bianchi(r0)?;
    let s = r0.scalar();
    if (s - 1.0).abs() > numeric.scalar_tol {
        return Err(Error::NotUnitScalar(s));
    }
    Ok(())
}

/// Normalized flow sampled exactly at the given increasing times, with
/// `substeps` RK4 steps between consecutive times.
pub fn integrate_normalized_at(r0: &CurvatureOperator, taus: &[f64], substeps: usize) -> Result<FlowTrajectory> {
    check_unit_scalar(r0, &NumericPolicy::default())?;
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be positive".into()));
    }
    if taus.first().is_some_and(|&t| t != 0.0) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "sample times must start at 0 and increase strictly".into(),
        ));
    }
    let space = r0.space().clone();
    let field = normalized_field(&space);
    let mut y = r0.matrix().clone();
    let mut drift: f64 = 0.0;
    let mut samples = vec![Sample {
        time: 0.0,
        operator: r0.clone(),
        diagnostics: Diagnostics::of(r0)?,
    }];
    for w in taus.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for _ in 0..substeps {
            let (next, d) = renormalize(rk4_step(&field, &y, h)).map_err(|e| with_time(e, w[0]))?;
            drift = drift.max(d);
            y = next;
        }
        let operator = CurvatureOperator::from_matrix_unchecked(&space, y.clone());
        samples.push(Sample {
            time: w[1],
            diagnostics: Diagnostics::of(&operator)?,
            operator,
        });
    }
    Ok(FlowTrajectory {
        mode: Mode::Normalized,
        samples,
        termination: Termination::ReachedEnd,
        max_scalar_drift: drift,
    })
}

/// Maps a raw trajectory to normalized time: `τᵢ = ∫₀^{tᵢ} s(R) dt` by the
/// trapezoid rule and `R̃ᵢ = R(tᵢ)/s(R(tᵢ))`.
pub fn reparametrization_bridge(raw: &FlowTrajectory) -> Result<FlowTrajectory> {
    if raw.mode != Mode::Raw {
        return Err(Error::InvalidArgument("bridge expects a raw trajectory".into()));
    }
    let mut samples = Vec::with_capacity(raw.samples.len());
    let mut tau = 0.0;
    let mut prev: Option<&Sample> = None;
    for s in &raw.samples {
        let sc = s.diagnostics.s;
        if !(sc > 0.0) {
            return Err(Error::Integration {
                time: s.time,
                reason: format!("scalar curvature {sc} is not positive"),
            });
        }
        if let Some(p) = prev {
            tau += 0.5 * (s.time - p.time) * (sc + p.diagnostics.s);
        }
        let operator = s.operator.scaled(1.0 / sc);
        samples.push(Sample {
            time: tau,
            diagnostics: Diagnostics::of(&operator)?,
            operator,
        });
        prev = Some(s);
    }
    Ok(FlowTrajectory {
        mode: Mode::Normalized,
        samples,
        termination: raw.termination,
        max_scalar_drift: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonCheck {
    pub is_eigen: bool,
    /// `⟨Q(R), R⟩ / ⟨R, R⟩`.
    pub lambda: f64,
    /// `‖Q(R) - λR‖ / ‖R‖`.
    pub defect: f64,
    /// `|λ - s/n|` when R is Einstein with `s > 0`.
    pub einstein_defect: Option<f64>,
}

/// Tests `Q(R) = λR`.
pub fn soliton_check(r: &CurvatureOperator) -> Result<SolitonCheck> {
    let norm2 = r.inner(r);
    if norm2 == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let q = q_of(r);
    let lambda = q.inner(r) / norm2;
    let defect = (&q - &r.scaled(lambda)).norm() / norm2.sqrt();
    let s = r.scalar();
    let einstein = r.n() >= 3 && r.ricci_traceless().norm_squared().sqrt() <= 1e-10 * r.norm().max(1.0);
    let einstein_defect = (einstein && s > 0.0).then(|| (lambda - s / r.n() as f64).abs());
    let is_eigen = defect <= 1e-8 && einstein_defect.is_none_or(|d| d <= 1e-8);
    Ok(SolitonCheck {
        is_eigen,
        lambda,
        defect,
        einstein_defect,
    })
}

/// Which component starts scaled down in the Einstein perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Start `α₀R_I + R_W`; the Weyl part dominates.
    ShrinkIdentity,
    /// Start `R_I + α₀R_W`; the identity part dominates.
    ShrinkWeyl,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationPoint {
    pub t: f64,
    /// Ratio of the minor to the dominant coefficient.
    pub alpha: f64,
    pub alpha_closed: f64,
    /// `‖R/(d(t)‖D‖) - D/‖D‖‖` where `d(t)` is the dominant coefficient.
    pub distance: f64,
    /// Norm of the part of `R(t)` outside span{R_I, R_W}.
    pub off_span: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub variant: Variant,
    pub alpha0: f64,
    pub lambda: f64,
    pub blowup_time: f64,
    pub termination: Termination,
    pub points: Vec<PerturbationPoint>,
    pub max_relative_bianchi: f64,
}

impl PerturbationRecord {
    /// Largest `|α - α_closed|` over samples with `t ≤ t_max`.
    pub fn max_alpha_error(&self, t_max: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.t <= t_max)
            .map(|p| (p.alpha - p.alpha_closed).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_off_span(&self) -> f64 {
        self.points.iter().map(|p| p.off_span).fold(0.0, f64::max)
    }

    /// Distance to the target direction at the last recorded sample.
    pub fn final_distance(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.distance)
    }
}

/// Perturbs an Einstein eigen-operator `Q(R0) = λR0` along its identity or
/// Weyl part and follows the raw flow, comparing the coefficient ratio with
/// `α₀(1-λt)/(1-λα₀t)`.
pub fn einstein_perturbation(
    r0: &CurvatureOperator,
    alpha0: f64,
    t_end: f64,
    variant: Variant,
    policy: &StepPolicy,
) -> Result<PerturbationRecord> {
    if !(alpha0 > 0.0 && alpha0 < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha0 = {alpha0} must lie in (0, 1)")));
    }
    let check = soliton_check(r0)?;
    if !check.is_eigen {
        return Err(Error::NotSoliton(check.defect));
    }
    let parts = r0.decompose()?;
    let scale = r0.norm().max(1.0);
    if parts.r_ric0.norm() > 1e-8 * scale {
        return Err(Error::InvalidArgument("base operator is not Einstein".into()));
    }
    if parts.r_w.norm() <= 1e-8 * scale {
        return Err(Error::InvalidArgument(
            "base operator is a multiple of the identity".into(),
        ));
    }
    if parts.r_i.norm() <= 1e-8 * scale {
        return Err(Error::InvalidArgument("base operator has no identity part".into()));
    }
    let (dominant, minor) = match variant {
        Variant::ShrinkIdentity => (parts.r_w, parts.r_i),
        Variant::ShrinkWeyl => (parts.r_i, parts.r_w),
    };
    two_component_experiment(&dominant, &minor, alpha0, check.lambda, t_end, policy).map(|(points, traj)| {
        PerturbationRecord {
            variant,
            alpha0,
            lambda: check.lambda,
            blowup_time: 1.0 / check.lambda,
            termination: traj.termination,
            max_relative_bianchi: traj.max_relative_bianchi(),
            points,
        }
    })
}

/// Flow from `D + α₀M` where `Q(D) = λD`, `Q(M) = λM`, `Q(D, M) = 0`.
pub(crate) fn two_component_experiment(
    dominant: &CurvatureOperator,
    minor: &CurvatureOperator,
    alpha0: f64,
    lambda: f64,
    t_end: f64,
    policy: &StepPolicy,
) -> Result<(Vec<PerturbationPoint>, FlowTrajectory)> {
    let start = dominant + &minor.scaled(alpha0);
    let traj = integrate_raw(&start, t_end, policy)?;
    let dd = dominant.inner(dominant);
    let mm = minor.inner(minor);
    let dnorm = dd.sqrt();
    let points = traj
        .samples
        .iter()
        .map(|s| {
            let r = &s.operator;
            let d = r.inner(dominant) / dd;
            let m = r.inner(minor) / mm;
            let in_span = &dominant.scaled(d) + &minor.scaled(m);
            let off_span = (r - &in_span).norm();
            let normalized = r.scaled(1.0 / (d * dnorm));
            let distance = (&normalized - &dominant.scaled(1.0 / dnorm)).norm();
            PerturbationPoint {
                t: s.time,
                alpha: m / d,
                alpha_closed: alpha0 * (1.0 - lambda * s.time) / (1.0 - lambda * alpha0 * s.time),
                distance,
                off_span,
            }
        })
        .collect();
    Ok((points, traj))
}
