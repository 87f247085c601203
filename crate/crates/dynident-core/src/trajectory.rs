//! Fourier-series excitation trajectories and swarm-based planning.
//!
//! A trajectory drives each joint with a constant offset plus three
//! sinusoids, `q_j(t) = c_j + sum_k a_kj sin(w_kj t)`. Sampling positions,
//! velocities and accelerations over the horizon fills an `N x 3n` matrix
//! whose Gram determinant measures how thoroughly the motion excites the
//! state space; planning maximizes that measure subject to joint limits,
//! searching the `6n` sinusoid parameters with the swarm optimizer while
//! offsets stay pinned to the start configuration.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::pso::{self, PsoConfig, PsoError, PsoResult, SearchBox};

/// Sinusoids per joint.
pub const TERMS_PER_JOINT: usize = 3;
/// Free parameters per joint when planning: three (amplitude, frequency) pairs.
pub const PARAMS_PER_JOINT: usize = 2 * TERMS_PER_JOINT;
/// Default frequency search range (rad/s), sign-symmetric.
pub const DEFAULT_FREQUENCY_LIMIT: f64 = 3.0;

/// Penalty subtracted from the raw determinant objective when any
/// constraint is violated.
const PENALTY_FAITHFUL: f64 = 1e40;
/// Penalty subtracted from the log-det objective when any constraint is
/// violated.
const PENALTY_STABLE: f64 = 1e6;
/// Log-det stand-in for a singular Gram matrix.
const SINGULAR_SENTINEL: f64 = -1e6;

/// One sinusoid: `amplitude * sin(frequency * t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SinusoidTerm {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Excitation of a single joint.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointFourier {
    /// Constant offset; equals the joint position at `t = 0`.
    pub offset: f64,
    pub terms: [SinusoidTerm; TERMS_PER_JOINT],
}

impl JointFourier {
    pub fn constant(offset: f64) -> Self {
        Self { offset, terms: [SinusoidTerm { amplitude: 0.0, frequency: 0.0 }; TERMS_PER_JOINT] }
    }
}

/// Joint positions, velocities and accelerations at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
}

/// A finite Fourier excitation for every joint over `[0, duration]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FourierTrajectory {
    joints: Vec<JointFourier>,
    duration: f64,
}

impl FourierTrajectory {
    pub fn new(joints: Vec<JointFourier>, duration: f64) -> Result<Self, TrajectoryError> {
        if joints.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(TrajectoryError::BadDuration { duration });
        }
        let finite = joints.iter().all(|j| {
            j.offset.is_finite()
                && j.terms.iter().all(|t| t.amplitude.is_finite() && t.frequency.is_finite())
        });
        if !finite {
            return Err(TrajectoryError::NonFinite);
        }
        Ok(Self { joints, duration })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn joints(&self) -> &[JointFourier] {
        &self.joints
    }

    /// Analytic state at time `t` in `[0, duration]`.
    pub fn evaluate(&self, t: f64) -> Result<JointState, TrajectoryError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(TrajectoryError::TimeOutOfRange { t, duration: self.duration });
        }
        let n = self.dof();
        let mut state = JointState {
            q: alloc::vec![0.0; n],
            qd: alloc::vec![0.0; n],
            qdd: alloc::vec![0.0; n],
        };
        self.eval_into(t, &mut state.q, &mut state.qd, &mut state.qdd);
        Ok(state)
    }

    fn eval_into(&self, t: f64, q: &mut [f64], qd: &mut [f64], qdd: &mut [f64]) {
        for (j, joint) in self.joints.iter().enumerate() {
            let mut pos = joint.offset;
            let mut vel = 0.0;
            let mut acc = 0.0;
            for term in &joint.terms {
                let (s, c) = (libm::sin(term.frequency * t), libm::cos(term.frequency * t));
                pos += term.amplitude * s;
                vel += term.amplitude * term.frequency * c;
                acc -= term.amplitude * term.frequency * term.frequency * s;
            }
            q[j] = pos;
            qd[j] = vel;
            qdd[j] = acc;
        }
    }
}

/// Interval limits on one joint's position, velocity and acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointLimits {
    pub q: (f64, f64),
    pub qd: (f64, f64),
    pub qdd: (f64, f64),
}

/// Per-joint limits plus a safety margin.
///
/// Checks run against bounds shrunk toward each interval's center by
/// `margin` (a fraction of the half-width), since a trajectory can slip
/// between samples even when every sample is in bounds.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointConstraints {
    joints: Vec<JointLimits>,
    margin: f64,
}

impl JointConstraints {
    pub const DEFAULT_MARGIN: f64 = 0.02;

    pub fn new(joints: Vec<JointLimits>, margin: f64) -> Result<Self, TrajectoryError> {
        if joints.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if !(0.0..1.0).contains(&margin) {
            return Err(TrajectoryError::BadMargin { margin });
        }
        for limits in &joints {
            for (lo, hi) in [limits.q, limits.qd, limits.qdd] {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(TrajectoryError::BadLimits { lo, hi });
                }
            }
        }
        Ok(Self { joints, margin })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn joints(&self) -> &[JointLimits] {
        &self.joints
    }

    /// Limits of joint `j` after applying the margin.
    pub fn effective(&self, j: usize) -> JointLimits {
        let shrink = |(lo, hi): (f64, f64)| {
            let center = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * (1.0 - self.margin);
            (center - half, center + half)
        };
        let limits = self.joints[j];
        JointLimits { q: shrink(limits.q), qd: shrink(limits.qd), qdd: shrink(limits.qdd) }
    }
}

/// Which derivative of the joint variable a violation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Deriv {
    Position,
    Velocity,
    Acceleration,
}

impl core::fmt::Display for Deriv {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Deriv::Position => "position",
            Deriv::Velocity => "velocity",
            Deriv::Acceleration => "acceleration",
        })
    }
}

/// One out-of-bounds sample found by the constraint check.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    /// Zero-based joint index.
    pub joint: usize,
    pub order: Deriv,
    pub time: f64,
    pub value: f64,
    /// Effective (margin-shrunk) bounds that were exceeded.
    pub lower: f64,
    pub upper: f64,
}

/// Result of checking a trajectory against joint limits.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConstraintCheck {
    pub violations: Vec<Violation>,
}

impl ConstraintCheck {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    /// The binary penalty flag: 0 when feasible, 1 otherwise.
    pub fn penalty_flag(&self) -> f64 {
        if self.is_feasible() {
            0.0
        } else {
            1.0
        }
    }

    /// The largest-magnitude violation per (joint, derivative), for
    /// diagnostics.
    pub fn worst(&self) -> Vec<Violation> {
        let mut worst: Vec<Violation> = Vec::new();
        for v in &self.violations {
            let overshoot =
                |x: &Violation| (x.value - x.upper).max(x.lower - x.value);
            match worst.iter_mut().find(|w| w.joint == v.joint && w.order == v.order) {
                Some(w) if overshoot(v) > overshoot(w) => *w = *v,
                Some(_) => {}
                None => worst.push(*v),
            }
        }
        worst
    }
}

/// Check every state component on a uniform grid of `grid + 1` instants
/// covering `[0, duration]` against the margin-shrunk limits.
pub fn check_constraints(
    traj: &FourierTrajectory,
    cons: &JointConstraints,
    grid: usize,
) -> Result<ConstraintCheck, TrajectoryError> {
    validate_pair(traj, cons, grid)?;
    let n = traj.dof();
    let effective: Vec<JointLimits> = (0..n).map(|j| cons.effective(j)).collect();
    let mut q = alloc::vec![0.0; n];
    let mut qd = alloc::vec![0.0; n];
    let mut qdd = alloc::vec![0.0; n];
    let mut check = ConstraintCheck::default();
    for i in 0..=grid {
        let t = traj.duration() * (i as f64 / grid as f64);
        traj.eval_into(t, &mut q, &mut qd, &mut qdd);
        for j in 0..n {
            let lims = &effective[j];
            for (order, value, (lo, hi)) in [
                (Deriv::Position, q[j], lims.q),
                (Deriv::Velocity, qd[j], lims.qd),
                (Deriv::Acceleration, qdd[j], lims.qdd),
            ] {
                if !(lo..=hi).contains(&value) {
                    check.violations.push(Violation {
                        joint: j,
                        order,
                        time: t,
                        value,
                        lower: lo,
                        upper: hi,
                    });
                }
            }
        }
    }
    Ok(check)
}

/// Feasibility only, no violation bookkeeping; used inside the planner loop.
fn feasible_on_grid(
    traj: &FourierTrajectory,
    effective: &[JointLimits],
    grid: usize,
    scratch: &mut (Vec<f64>, Vec<f64>, Vec<f64>),
) -> bool {
    let (q, qd, qdd) = scratch;
    for i in 0..=grid {
        let t = traj.duration() * (i as f64 / grid as f64);
        traj.eval_into(t, q, qd, qdd);
        for (j, lims) in effective.iter().enumerate() {
            if !(lims.q.0..=lims.q.1).contains(&q[j])
                || !(lims.qd.0..=lims.qd.1).contains(&qd[j])
                || !(lims.qdd.0..=lims.qdd.1).contains(&qdd[j])
            {
                return false;
            }
        }
    }
    true
}

/// The `N x 3n` matrix of sampled states: row `i` holds
/// `[q_1, qd_1, qdd_1, ..., q_n, qd_n, qdd_n]` at `t = (T/N) i`, `i = 1..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct QsamMatrix {
    data: DMatrix<f64>,
    joints: usize,
}

impl QsamMatrix {
    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// The `3n x 3n` Gram matrix `Q^T Q`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.data.tr_mul(&self.data)
    }

    /// Determinant of the Gram matrix (LU); nonnegative up to roundoff.
    pub fn det_gram(&self) -> f64 {
        self.gram().determinant()
    }

    /// Log-determinant of the Gram matrix via Cholesky; `None` when the
    /// matrix is numerically singular (not positive definite).
    pub fn log_det_gram(&self) -> Option<f64> {
        let chol = self.gram().cholesky()?;
        let l = chol.l();
        let mut sum = 0.0;
        for i in 0..l.nrows() {
            sum += libm::log(l[(i, i)]);
        }
        Some(2.0 * sum)
    }
}

/// Sample a trajectory into its excitation matrix.
pub fn build_qsam(traj: &FourierTrajectory, n_samples: usize) -> Result<QsamMatrix, TrajectoryError> {
    if n_samples == 0 {
        return Err(TrajectoryError::NoSamples);
    }
    let n = traj.dof();
    let mut data = DMatrix::zeros(n_samples, 3 * n);
    let mut q = alloc::vec![0.0; n];
    let mut qd = alloc::vec![0.0; n];
    let mut qdd = alloc::vec![0.0; n];
    for i in 0..n_samples {
        let t = traj.duration() * ((i + 1) as f64 / n_samples as f64);
        traj.eval_into(t, &mut q, &mut qd, &mut qdd);
        for j in 0..n {
            data[(i, 3 * j)] = q[j];
            data[(i, 3 * j + 1)] = qd[j];
            data[(i, 3 * j + 2)] = qdd[j];
        }
    }
    Ok(QsamMatrix { data, joints: n })
}

/// How the excitation objective handles the Gram determinant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ObjectiveMode {
    /// `|det(Q^T Q)| - a * 1e40`: the raw determinant form. Overflows for
    /// large matrices or magnitudes; kept for fidelity.
    Faithful,
    /// `logdet(Q^T Q) - a * 1e6`, with singular matrices scored at `-1e6`.
    /// A strictly monotone transform of the determinant on feasible,
    /// nonsingular trajectories, so the argmax is unchanged.
    #[default]
    Stable,
}

/// Excitation quality of a trajectory: the (log-)determinant of the sampled
/// Gram matrix, minus a large penalty if any constraint is violated on the
/// check grid.
pub fn excitation_objective(
    traj: &FourierTrajectory,
    cons: &JointConstraints,
    n_samples: usize,
    grid: usize,
    mode: ObjectiveMode,
) -> Result<f64, TrajectoryError> {
    validate_pair(traj, cons, grid)?;
    if n_samples == 0 {
        return Err(TrajectoryError::NoSamples);
    }
    let effective: Vec<JointLimits> = (0..cons.dof()).map(|j| cons.effective(j)).collect();
    let n = traj.dof();
    let mut scratch = (alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]);
    Ok(objective_value(traj, &effective, n_samples, grid, mode, &mut scratch))
}

fn objective_value(
    traj: &FourierTrajectory,
    effective: &[JointLimits],
    n_samples: usize,
    grid: usize,
    mode: ObjectiveMode,
    scratch: &mut (Vec<f64>, Vec<f64>, Vec<f64>),
) -> f64 {
    let feasible = feasible_on_grid(traj, effective, grid, scratch);
    let qsam = build_qsam(traj, n_samples).expect("n_samples validated");
    match mode {
        ObjectiveMode::Faithful => {
            let det = qsam.det_gram().abs();
            if feasible {
                det
            } else {
                det - PENALTY_FAITHFUL
            }
        }
        ObjectiveMode::Stable => {
            let logdet = qsam
                .log_det_gram()
                .unwrap_or(SINGULAR_SENTINEL)
                .max(SINGULAR_SENTINEL);
            if feasible {
                logdet
            } else {
                logdet - PENALTY_STABLE
            }
        }
    }
}

/// Sampling and checking resolution for the planner.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanSettings {
    /// Rows of the excitation matrix.
    pub n_samples: usize,
    /// Constraint-check grid intervals; denser than the sample grid.
    pub grid: usize,
    /// Horizon length (s).
    pub duration: f64,
    pub mode: ObjectiveMode,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self { n_samples: 100, grid: 1000, duration: 10.0, mode: ObjectiveMode::Stable }
    }
}

/// A successful plan: the trajectory, its objective value and the swarm
/// trace that produced it.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub trajectory: FourierTrajectory,
    /// Excitation objective of the returned trajectory, in the planner's mode.
    pub objective: f64,
    pub pso: PsoResult,
}

/// Plan an excitation trajectory: offsets are fixed to `start`, the swarm
/// searches the `6n` sinusoid parameters inside `bounds` (per joint:
/// `a_1, w_1, a_2, w_2, a_3, w_3`), maximizing the excitation objective.
/// The returned trajectory is guaranteed feasible.
pub fn plan_trajectory(
    cons: &JointConstraints,
    start: &[f64],
    bounds: &SearchBox,
    pso_config: &PsoConfig,
    settings: &PlanSettings,
) -> Result<PlanOutcome, TrajectoryError> {
    let n = cons.dof();
    if start.len() != n {
        return Err(TrajectoryError::DimensionMismatch { expected: n, got: start.len() });
    }
    if bounds.dim() != PARAMS_PER_JOINT * n {
        return Err(PsoError::DimensionMismatch {
            expected: PARAMS_PER_JOINT * n,
            got: bounds.dim(),
        }
        .into());
    }
    if settings.n_samples == 0 {
        return Err(TrajectoryError::NoSamples);
    }
    if settings.grid == 0 {
        return Err(TrajectoryError::BadGrid);
    }
    let effective: Vec<JointLimits> = (0..n).map(|j| cons.effective(j)).collect();
    for (j, (s, lims)) in start.iter().zip(&effective).enumerate() {
        if !(lims.q.0..=lims.q.1).contains(s) {
            return Err(TrajectoryError::StartOutOfBounds { joint: j, value: *s });
        }
    }

    let objective = |position: &[f64]| {
        let traj = decode(position, start, settings.duration);
        let mut scratch = (alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]);
        -objective_value(&traj, &effective, settings.n_samples, settings.grid, settings.mode, &mut scratch)
    };
    let result = pso::minimize(objective, bounds, pso_config)?;

    let trajectory = decode(&result.best_position, start, settings.duration);
    let check = check_constraints(&trajectory, cons, settings.grid)?;
    if !check.is_feasible() {
        return Err(TrajectoryError::PlanningFailed { worst: check.worst() });
    }
    Ok(PlanOutcome { trajectory, objective: -result.best_value, pso: result })
}

/// Rebuild a trajectory from a planner position vector.
fn decode(position: &[f64], start: &[f64], duration: f64) -> FourierTrajectory {
    let joints = start
        .iter()
        .enumerate()
        .map(|(j, offset)| {
            let base = PARAMS_PER_JOINT * j;
            let term = |k: usize| SinusoidTerm {
                amplitude: position[base + 2 * k],
                frequency: position[base + 2 * k + 1],
            };
            JointFourier { offset: *offset, terms: [term(0), term(1), term(2)] }
        })
        .collect();
    FourierTrajectory { joints, duration }
}

/// Default planner search box: amplitudes scaled so the worst-case sum of
/// the three sinusoids stays inside the margin-shrunk position range from
/// `start`, frequencies in `[-freq_limit, freq_limit]`.
pub fn default_planner_box(
    cons: &JointConstraints,
    start: &[f64],
    freq_limit: f64,
) -> Result<SearchBox, TrajectoryError> {
    let n = cons.dof();
    if start.len() != n {
        return Err(TrajectoryError::DimensionMismatch { expected: n, got: start.len() });
    }
    if !(freq_limit.is_finite() && freq_limit > 0.0) {
        return Err(TrajectoryError::BadLimits { lo: -freq_limit, hi: freq_limit });
    }
    let mut lower = Vec::with_capacity(PARAMS_PER_JOINT * n);
    let mut upper = Vec::with_capacity(PARAMS_PER_JOINT * n);
    for (j, s) in start.iter().enumerate() {
        let lims = cons.effective(j);
        let room = (s - lims.q.0).min(lims.q.1 - s);
        if room <= 0.0 {
            return Err(TrajectoryError::StartOutOfBounds { joint: j, value: *s });
        }
        let amp = room / TERMS_PER_JOINT as f64;
        for _ in 0..TERMS_PER_JOINT {
            lower.push(-amp);
            upper.push(amp);
            lower.push(-freq_limit);
            upper.push(freq_limit);
        }
    }
    Ok(SearchBox::new(lower, upper)?)
}

fn validate_pair(
    traj: &FourierTrajectory,
    cons: &JointConstraints,
    grid: usize,
) -> Result<(), TrajectoryError> {
    if traj.dof() != cons.dof() {
        return Err(TrajectoryError::DimensionMismatch { expected: cons.dof(), got: traj.dof() });
    }
    if grid == 0 {
        return Err(TrajectoryError::BadGrid);
    }
    Ok(())
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("at least one joint is required")]
    Empty,
    #[error("duration {duration} must be finite and positive")]
    BadDuration { duration: f64 },
    #[error("trajectory parameters must be finite")]
    NonFinite,
    #[error("time {t} outside [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("margin {margin} must lie in [0, 1)")]
    BadMargin { margin: f64 },
    #[error("limits ({lo}, {hi}) must be finite with lo < hi")]
    BadLimits { lo: f64, hi: f64 },
    #[error("expected {expected} joints, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("check grid must have at least one interval")]
    BadGrid,
    #[error("start configuration of joint {joint} ({value}) is outside the position bounds")]
    StartOutOfBounds { joint: usize, value: f64 },
    #[error("no feasible trajectory found; {} constraint(s) still violated", worst.len())]
    PlanningFailed { worst: Vec<Violation> },
    #[error(transparent)]
    Pso(#[from] PsoError),
}
