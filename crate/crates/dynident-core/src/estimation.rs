//! Parameter estimation from sampled joint data, identifiability
//! classification, and model verification.
//!
//! The estimator never forms a regressor: each swarm particle is a full
//! candidate parameter set, its torque prediction runs through the exact
//! inverse dynamics, and the cost is the norm of the prediction-error
//! matrix over all samples. Repeating the estimation with different seeds
//! exposes which parameters the data actually pins down: a parameter whose
//! estimates barely move across runs is identifiable; one that wanders is
//! probed for cost sensitivity to separate "only a combination matters"
//! from "no influence at all".

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::dynamics::{
    inverse_dynamics, DynamicParams, DynamicsError, RobotModel, PARAMS_PER_LINK, PARAM_NAMES,
};
use crate::pso::{self, Evaluate, PsoConfig, PsoError, SearchBox, Sequential};
use crate::rng::UniformStream;
use crate::trajectory::{FourierTrajectory, TrajectoryError};

/// One measurement record: timestamp, joint state and applied torques.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub qdd: Vec<f64>,
    pub tau: Vec<f64>,
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("sample set is empty")]
    NoSamples,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("noise level {level} must be finite and nonnegative")]
    BadNoise { level: f64 },
    #[error("classification needs at least 2 runs, got {runs}")]
    TooFewRuns { runs: usize },
    #[error("invalid parameter space: {0}")]
    BadSpace(&'static str),
    #[error("flat parameter index {index} out of range for {n_links} links")]
    ParamIndexOutOfRange { index: usize, n_links: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Pso(#[from] PsoError),
}

/// Sample a trajectory through a known model and perturb every stored
/// scalar multiplicatively.
///
/// States come from the analytic trajectory at `t = (T/N) i`, torques from
/// the exact inverse dynamics of `true_params`; then every stored value in
/// `q`, `qd`, `qdd` and `tau` independently becomes `x (1 + u)` with `u`
/// uniform in `[-noise_level, +noise_level]`, drawn deterministically from
/// `seed`. Timestamps are left exact.
pub fn generate_samples(
    model: &RobotModel,
    true_params: &DynamicParams,
    traj: &FourierTrajectory,
    n_samples: usize,
    noise_level: f64,
    seed: u64,
) -> Result<Vec<Sample>, EstimationError> {
    let n = model.dof();
    if traj.dof() != n {
        return Err(EstimationError::DimensionMismatch { expected: n, got: traj.dof() });
    }
    if n_samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    if !(noise_level.is_finite() && noise_level >= 0.0) {
        return Err(EstimationError::BadNoise { level: noise_level });
    }
    let mut noise = UniformStream::new(seed, 0);
    let mut perturb = |xs: &mut [f64]| {
        for x in xs {
            *x *= 1.0 + noise.next_in(-noise_level, noise_level);
        }
    };
    let mut samples = Vec::with_capacity(n_samples);
    for i in 1..=n_samples {
        let t = traj.duration() * (i as f64 / n_samples as f64);
        let state = traj.evaluate(t)?;
        let tau = inverse_dynamics(model, true_params, &state.q, &state.qd, &state.qdd)?;
        let mut sample = Sample { t, q: state.q, qd: state.qd, qdd: state.qdd, tau };
        if noise_level > 0.0 {
            perturb(&mut sample.q);
            perturb(&mut sample.qd);
            perturb(&mut sample.qdd);
            perturb(&mut sample.tau);
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// The `n x N` prediction-error matrix; column `i` is
/// `tau_(i) - tau_hat_(i)` for the i-th sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMatrix {
    data: DMatrix<f64>,
}

impl ErrorMatrix {
    pub fn joints(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Prediction errors of a candidate parameter set against a sample set.
pub fn prediction_error(
    model: &RobotModel,
    candidate: &DynamicParams,
    samples: &[Sample],
) -> Result<ErrorMatrix, EstimationError> {
    validate_samples(model, samples)?;
    if candidate.n_links() != model.dof() {
        return Err(EstimationError::DimensionMismatch {
            expected: model.dof(),
            got: candidate.n_links(),
        });
    }
    let n = model.dof();
    let mut data = DMatrix::zeros(n, samples.len());
    for (i, sample) in samples.iter().enumerate() {
        let predicted = inverse_dynamics(model, candidate, &sample.q, &sample.qd, &sample.qdd)?;
        for j in 0..n {
            data[(j, i)] = sample.tau[j] - predicted[j];
        }
    }
    Ok(ErrorMatrix { data })
}

/// Which matrix norm the cost uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ErrorNorm {
    /// Square root of the sum of squared entries (the 2-norm of the
    /// stacked error vector). Default.
    #[default]
    Frobenius,
    /// Largest singular value of the error matrix.
    Spectral,
}

/// Estimation cost: the Frobenius norm of the error matrix.
pub fn cost(errors: &ErrorMatrix) -> f64 {
    cost_with(errors, ErrorNorm::Frobenius)
}

/// Estimation cost under an explicit norm choice.
pub fn cost_with(errors: &ErrorMatrix, norm: ErrorNorm) -> f64 {
    match norm {
        ErrorNorm::Frobenius => {
            libm::sqrt(errors.data.iter().map(|e| e * e).sum())
        }
        ErrorNorm::Spectral => errors
            .data
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max),
    }
}

/// Direct residual cost of a candidate, bypassing the matrix (hot path).
fn frobenius_cost(model: &RobotModel, candidate: &DynamicParams, samples: &[Sample]) -> f64 {
    let mut sum = 0.0;
    for sample in samples {
        // dimensions are validated before any search starts
        let predicted = inverse_dynamics(model, candidate, &sample.q, &sample.qd, &sample.qdd)
            .expect("validated sample dimensions");
        for (tau, hat) in sample.tau.iter().zip(&predicted) {
            let e = tau - hat;
            sum += e * e;
        }
    }
    libm::sqrt(sum)
}

fn spectral_cost(model: &RobotModel, candidate: &DynamicParams, samples: &[Sample]) -> f64 {
    let errors = prediction_error(model, candidate, samples).expect("validated sample dimensions");
    cost_with(&errors, ErrorNorm::Spectral)
}

/// The searchable parameter space: which of the `12n` scalars are free,
/// their box bounds, and the base values the fixed ones keep.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpace {
    base: DynamicParams,
    free: Vec<usize>,
    bounds: SearchBox,
}

impl ParamSpace {
    /// All `12n` parameters free, fixed part zero.
    pub fn full(n_links: usize, bounds: SearchBox) -> Result<Self, EstimationError> {
        let dim = n_links * PARAMS_PER_LINK;
        if n_links == 0 {
            return Err(EstimationError::BadSpace("a robot needs at least one link"));
        }
        if bounds.dim() != dim {
            return Err(EstimationError::DimensionMismatch { expected: dim, got: bounds.dim() });
        }
        Ok(Self { base: DynamicParams::zeros(n_links), free: (0..dim).collect(), bounds })
    }

    /// Search only `free` (flat indices, see [`DynamicParams::flatten`]);
    /// the rest stay at their `base` values.
    pub fn subset(
        base: DynamicParams,
        free: Vec<usize>,
        bounds: SearchBox,
    ) -> Result<Self, EstimationError> {
        if free.is_empty() {
            return Err(EstimationError::BadSpace("no free parameters selected"));
        }
        if bounds.dim() != free.len() {
            return Err(EstimationError::DimensionMismatch {
                expected: free.len(),
                got: bounds.dim(),
            });
        }
        let limit = base.n_links() * PARAMS_PER_LINK;
        for (i, idx) in free.iter().enumerate() {
            if *idx >= limit {
                return Err(EstimationError::ParamIndexOutOfRange {
                    index: *idx,
                    n_links: base.n_links(),
                });
            }
            if free[..i].contains(idx) {
                return Err(EstimationError::BadSpace("duplicate free parameter index"));
            }
        }
        Ok(Self { base, free, bounds })
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn n_links(&self) -> usize {
        self.base.n_links()
    }

    pub fn bounds(&self) -> &SearchBox {
        &self.bounds
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn base(&self) -> &DynamicParams {
        &self.base
    }

    /// Materialize a search position into a full parameter set.
    pub fn realize(&self, position: &[f64]) -> DynamicParams {
        let mut params = self.base.clone();
        for (idx, value) in self.free.iter().zip(position) {
            params.set_flat(*idx, *value);
        }
        params
    }
}

/// Default search box for one link, in canonical parameter order: mass in
/// `[0, 10]`, center-of-mass components in `[-2, 2]`, inertia components in
/// `[-6, 6]` (products may be negative), frictions in `[0, 3]`.
pub fn default_link_bounds() -> [(f64, f64); PARAMS_PER_LINK] {
    [
        (0.0, 10.0),
        (-2.0, 2.0),
        (-2.0, 2.0),
        (-2.0, 2.0),
        (-6.0, 6.0),
        (-6.0, 6.0),
        (-6.0, 6.0),
        (-6.0, 6.0),
        (-6.0, 6.0),
        (-6.0, 6.0),
        (0.0, 3.0),
        (0.0, 3.0),
    ]
}

/// Default `12n` search box (see [`default_link_bounds`]).
pub fn default_search_box(n_links: usize) -> Result<SearchBox, EstimationError> {
    let mut lower = Vec::with_capacity(n_links * PARAMS_PER_LINK);
    let mut upper = Vec::with_capacity(n_links * PARAMS_PER_LINK);
    for _ in 0..n_links {
        for (lo, hi) in default_link_bounds() {
            lower.push(lo);
            upper.push(hi);
        }
    }
    Ok(SearchBox::new(lower, upper)?)
}

/// One completed estimation run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimationRun {
    pub best_params: DynamicParams,
    pub best_cost: f64,
    /// Swarm-best cost after each iteration.
    pub history: Vec<f64>,
}

/// Estimate parameters by minimizing the prediction-error cost with the
/// swarm optimizer (sequential evaluation, Frobenius cost).
pub fn estimate(
    model: &RobotModel,
    samples: &[Sample],
    space: &ParamSpace,
    config: &PsoConfig,
) -> Result<EstimationRun, EstimationError> {
    estimate_with(model, samples, space, config, ErrorNorm::Frobenius, &Sequential)
}

/// [`estimate`] with an explicit norm and evaluation strategy.
pub fn estimate_with(
    model: &RobotModel,
    samples: &[Sample],
    space: &ParamSpace,
    config: &PsoConfig,
    norm: ErrorNorm,
    evaluator: &dyn Evaluate,
) -> Result<EstimationRun, EstimationError> {
    validate_samples(model, samples)?;
    if space.n_links() != model.dof() {
        return Err(EstimationError::DimensionMismatch {
            expected: model.dof(),
            got: space.n_links(),
        });
    }
    let objective = |position: &[f64]| {
        let candidate = space.realize(position);
        match norm {
            ErrorNorm::Frobenius => frobenius_cost(model, &candidate, samples),
            ErrorNorm::Spectral => spectral_cost(model, &candidate, samples),
        }
    };
    let result = pso::minimize_with(objective, space.bounds(), config, evaluator)?;
    Ok(EstimationRun {
        best_params: space.realize(&result.best_position),
        best_cost: result.best_value,
        history: result.history,
    })
}

/// Identifiability verdict for one parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ParamStatus {
    /// Estimates agree across runs.
    #[cfg_attr(feature = "serde", serde(rename = "I"))]
    Identifiable,
    /// Estimates vary, but the cost reacts to this parameter: either only a
    /// combination of parameters matters (semi-identifiable) or its
    /// influence is small (nearly unidentifiable). The two are reported
    /// merged, as separating them reliably is not possible from the data.
    #[cfg_attr(feature = "serde", serde(rename = "SI/NUI"))]
    SemiOrNearly,
    /// The cost ignores this parameter entirely.
    #[cfg_attr(feature = "serde", serde(rename = "UI"))]
    Unidentifiable,
}

impl core::fmt::Display for ParamStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            ParamStatus::Identifiable => "I",
            ParamStatus::SemiOrNearly => "SI/NUI",
            ParamStatus::Unidentifiable => "UI",
        })
    }
}

/// Statistics for a single parameter over repeated runs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamReport {
    /// One-based link number.
    pub link: usize,
    /// Short parameter name (`m`, `s_x`, ..., `f_v`).
    pub name: &'static str,
    /// Flat index into the canonical parameter vector.
    pub flat_index: usize,
    pub true_value: Option<f64>,
    pub mean: f64,
    /// Coefficient of variation: sample standard deviation over `|mean|`.
    pub cv: f64,
    /// `max - min` of the estimates.
    pub spread: f64,
    pub status: ParamStatus,
}

/// Classification output: per-parameter statistics plus the underlying runs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimationReport {
    pub rows: Vec<ParamReport>,
    pub runs: Vec<EstimationRun>,
    /// Index of the lowest-cost run.
    pub best_run: usize,
}

impl EstimationReport {
    pub fn best(&self) -> &EstimationRun {
        &self.runs[self.best_run]
    }

    pub fn row(&self, link: usize, name: &str) -> Option<&ParamReport> {
        self.rows.iter().find(|r| r.link == link && r.name == name)
    }
}

/// Thresholds for the classification rules.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifySettings {
    /// Number of estimation runs.
    pub runs: usize,
    /// CV at or below this marks a parameter identifiable.
    pub cv_threshold: f64,
    /// Relative cost change above this in the sensitivity probe marks a
    /// scattered parameter SI/NUI rather than UI.
    pub sens_threshold: f64,
    /// Relative perturbation used by the probe.
    pub probe_delta: f64,
    /// Absolute floor for the probe step, for near-zero estimates.
    pub probe_floor: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            runs: 10,
            cv_threshold: 0.15,
            sens_threshold: 0.01,
            probe_delta: 0.2,
            probe_floor: 0.1,
        }
    }
}

/// Run the estimator `runs` times (seeds `seed+1 ..= seed+runs`) and
/// classify every free parameter.
///
/// A parameter passes as identifiable when its CV stays at or below the
/// threshold; otherwise the sensitivity probe on the best run's estimate
/// decides between SI/NUI (cost reacts) and UI (cost indifferent). When
/// `truth` is given, its values fill the report's `true_value` column.
pub fn classify(
    model: &RobotModel,
    samples: &[Sample],
    space: &ParamSpace,
    config: &PsoConfig,
    settings: &ClassifySettings,
    truth: Option<&DynamicParams>,
) -> Result<EstimationReport, EstimationError> {
    if settings.runs < 2 {
        return Err(EstimationError::TooFewRuns { runs: settings.runs });
    }
    let mut runs = Vec::with_capacity(settings.runs);
    for r in 1..=settings.runs {
        let run_config = config.clone().with_seed(config.seed.wrapping_add(r as u64));
        runs.push(estimate(model, samples, space, &run_config)?);
    }
    let best_run = runs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.best_cost.total_cmp(&b.best_cost))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let base = runs[best_run].best_params.clone();

    let mut rows = Vec::with_capacity(space.dim());
    for (d, &flat_index) in space.free_indices().iter().enumerate() {
        let estimates: Vec<f64> = runs
            .iter()
            .map(|run| run.best_params.get_flat(flat_index).unwrap_or(f64::NAN))
            .collect();
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let var = estimates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (estimates.len() - 1) as f64;
        let std = libm::sqrt(var);
        let cv = if std == 0.0 { 0.0 } else { std / mean.abs() };
        let spread = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - estimates.iter().copied().fold(f64::INFINITY, f64::min);
        let status = if cv <= settings.cv_threshold {
            ParamStatus::Identifiable
        } else {
            let change = sensitivity_probe(
                model,
                samples,
                &base,
                flat_index,
                settings.probe_delta,
                settings.probe_floor,
            )?;
            if change > settings.sens_threshold {
                ParamStatus::SemiOrNearly
            } else {
                ParamStatus::Unidentifiable
            }
        };
        rows.push(ParamReport {
            link: flat_index / PARAMS_PER_LINK + 1,
            name: PARAM_NAMES[flat_index % PARAMS_PER_LINK],
            flat_index,
            true_value: truth.and_then(|t| t.get_flat(flat_index)),
            mean,
            cv,
            spread,
            status,
        });
        let _ = d;
    }
    Ok(EstimationReport { rows, runs, best_run })
}

/// Relative cost change when one parameter moves by
/// `±delta * max(|value|, floor)` with all others held fixed.
pub fn sensitivity_probe(
    model: &RobotModel,
    samples: &[Sample],
    base: &DynamicParams,
    flat_index: usize,
    delta: f64,
    floor: f64,
) -> Result<f64, EstimationError> {
    validate_samples(model, samples)?;
    let value = base
        .get_flat(flat_index)
        .ok_or(EstimationError::ParamIndexOutOfRange { index: flat_index, n_links: base.n_links() })?;
    let base_cost = frobenius_cost(model, base, samples);
    let step = delta * value.abs().max(floor);
    let mut change = 0.0f64;
    for sign in [1.0, -1.0] {
        let mut perturbed = base.clone();
        perturbed.set_flat(flat_index, value + sign * step);
        let c = frobenius_cost(model, &perturbed, samples);
        change = change.max((c - base_cost).abs() / base_cost.max(1e-12));
    }
    Ok(change)
}

/// Paired torque traces of two parameter sets along a noise-free
/// trajectory, plus per-joint relative RMS error.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationResult {
    pub times: Vec<f64>,
    /// `times.len()` rows of `n` torques from the reference parameters.
    pub tau_true: Vec<Vec<f64>>,
    /// Torques from the estimated parameters on the same grid.
    pub tau_est: Vec<Vec<f64>>,
    /// Per joint: `rms(tau_est - tau_true) / rms(tau_true)`.
    pub rms_relative: Vec<f64>,
}

/// Drive both parameter sets through `traj` on a uniform grid of
/// `n_samples + 1` instants covering `[0, T]` and compare torques.
pub fn verify(
    model: &RobotModel,
    true_params: &DynamicParams,
    est_params: &DynamicParams,
    traj: &FourierTrajectory,
    n_samples: usize,
) -> Result<VerificationResult, EstimationError> {
    let n = model.dof();
    if traj.dof() != n {
        return Err(EstimationError::DimensionMismatch { expected: n, got: traj.dof() });
    }
    if n_samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    let mut times = Vec::with_capacity(n_samples + 1);
    let mut tau_true = Vec::with_capacity(n_samples + 1);
    let mut tau_est = Vec::with_capacity(n_samples + 1);
    for i in 0..=n_samples {
        let t = traj.duration() * (i as f64 / n_samples as f64);
        let state = traj.evaluate(t)?;
        tau_true.push(inverse_dynamics(model, true_params, &state.q, &state.qd, &state.qdd)?);
        tau_est.push(inverse_dynamics(model, est_params, &state.q, &state.qd, &state.qdd)?);
        times.push(t);
    }
    let mut rms_relative = Vec::with_capacity(n);
    for j in 0..n {
        let mut num = 0.0;
        let mut den = 0.0;
        for (tt, te) in tau_true.iter().zip(&tau_est) {
            let e = te[j] - tt[j];
            num += e * e;
            den += tt[j] * tt[j];
        }
        rms_relative.push(if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            libm::sqrt(num / den)
        });
    }
    Ok(VerificationResult { times, tau_true, tau_est, rms_relative })
}

fn validate_samples(model: &RobotModel, samples: &[Sample]) -> Result<(), EstimationError> {
    if samples.is_empty() {
        return Err(EstimationError::NoSamples);
    }
    let n = model.dof();
    for sample in samples {
        for len in [sample.q.len(), sample.qd.len(), sample.qdd.len(), sample.tau.len()] {
            if len != n {
                return Err(EstimationError::DimensionMismatch { expected: n, got: len });
            }
        }
    }
    Ok(())
}
