//! Dynamic parameter identification for serial manipulators.
//!
//! The crate covers the full identification pipeline on the algorithmic
//! side, with no IO:
//!
//! - [`dynamics`]: standard-DH kinematic models and recursive Newton-Euler
//!   inverse dynamics over raw physical parameters (mass, center of mass,
//!   inertia tensor, friction) — no regressor factorization anywhere.
//! - [`pso`]: a bounded, seeded particle swarm minimizer used both for
//!   parameter estimation and (with a negated objective) trajectory design.
//! - [`trajectory`]: finite Fourier-series excitation trajectories, the
//!   sampled-state Gram-determinant excitation measure, and constraint-aware
//!   planning.
//! - [`estimation`]: sample synthesis with measurement noise, the torque
//!   prediction-error cost, repeated-run estimation, identifiability
//!   classification, and torque-trace verification.
//!
//! Everything is deterministic for a fixed seed: random draws come from
//! per-purpose ChaCha8 streams derived from the master seed, so results do
//! not depend on evaluation order or worker count.
//!
//! The crate is `no_std` (with `alloc`); file formats, configuration, and
//! the command-line front end live in the companion `dynident-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod estimation;
pub mod pso;
pub mod trajectory;

mod rng;

pub use dynamics::{
    inverse_dynamics, link_transform, DHLink, DynamicParams, DynamicsError, JointKind,
    LinkDynamicParams, RobotModel,
};
pub use estimation::{
    classify, cost, cost_with, estimate, estimate_with, generate_samples, prediction_error,
    sensitivity_probe, verify, ClassifySettings, ErrorMatrix, ErrorNorm, EstimationError,
    EstimationReport, EstimationRun, ParamReport, ParamSpace, ParamStatus, Sample,
    VerificationResult,
};
pub use pso::{minimize, minimize_with, Evaluate, PsoConfig, PsoError, PsoResult, SearchBox,
    Sequential};
pub use trajectory::{
    build_qsam, check_constraints, default_planner_box, excitation_objective, plan_trajectory,
    ConstraintCheck, Deriv, FourierTrajectory, JointConstraints, JointFourier, JointState,
    JointLimits, ObjectiveMode, PlanOutcome, PlanSettings, QsamMatrix, SinusoidTerm,
    TrajectoryError, Violation,
};
