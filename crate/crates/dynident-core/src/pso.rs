//! Bounded particle swarm minimization.
//!
//! Synchronous PSO over a rectangular search box: every particle keeps its
//! personal best, the swarm best is refreshed once per iteration, and the
//! velocity update is
//!
//! ```text
//! V <- w V + c1 r1 (Pbest - p) + c2 r2 (Gbest - p)
//! p <- p + V
//! ```
//!
//! with `r1`, `r2` drawn per dimension, per particle, per iteration.
//! Positions are clipped to the box (the violating velocity component is
//! zeroed) and velocities are capped per dimension at a fraction of the
//! box width. The run length is exactly `iterations`; there is no early
//! exit.
//!
//! Randomness comes from ChaCha8 streams: the master seed keys the cipher
//! and each particle owns stream `particle index`, so a run's result is a
//! pure function of (seed, box, objective) no matter how objective
//! evaluations are scheduled.

use alloc::vec::Vec;

use crate::rng::UniformStream;

/// Swarm hyperparameters. Defaults: swarm 20, 100 iterations,
/// `c1 = c2 = 1.3`, `w = 0.6`, velocity cap at half the box width.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub iterations: usize,
    /// Cognitive learning rate.
    pub c1: f64,
    /// Social learning rate.
    pub c2: f64,
    /// Inertia weight.
    pub w: f64,
    /// Optional final inertia weight; when set, `w` decays linearly to this
    /// value over the run. Off by default.
    pub w_final: Option<f64>,
    /// Per-dimension velocity cap as a fraction of the box width, in (0, 1].
    pub vmax_fraction: f64,
    /// Master RNG seed.
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            iterations: 100,
            c1: 1.3,
            c2: 1.3,
            w: 0.6,
            w_final: None,
            vmax_fraction: 0.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    fn validate(&self) -> Result<(), PsoError> {
        if self.swarm_size == 0 {
            return Err(PsoError::InvalidConfig("swarm_size must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(PsoError::InvalidConfig("iterations must be at least 1"));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.w >= 0.0) {
            return Err(PsoError::InvalidConfig("c1, c2 and w must be nonnegative"));
        }
        if let Some(wf) = self.w_final {
            if !(wf >= 0.0) {
                return Err(PsoError::InvalidConfig("w_final must be nonnegative"));
            }
        }
        if !(self.vmax_fraction > 0.0 && self.vmax_fraction <= 1.0) {
            return Err(PsoError::InvalidConfig("vmax_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    fn inertia_at(&self, iteration: usize) -> f64 {
        match self.w_final {
            None => self.w,
            Some(wf) => {
                let steps = (self.iterations - 1).max(1) as f64;
                self.w + (wf - self.w) * iteration as f64 / steps
            }
        }
    }
}

/// Axis-aligned search region with `lower < upper` in every dimension.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PsoError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(PsoError::InvalidBox("bounds must be nonempty and of equal length"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(PsoError::InvalidBox("each dimension needs finite lower < upper"));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same finite interval in every dimension.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self, PsoError> {
        Self::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .enumerate()
                .all(|(d, x)| (self.lower[d]..=self.upper[d]).contains(x))
    }
}

/// Outcome of a swarm run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PsoResult {
    /// Best position found (inside the box).
    pub best_position: Vec<f64>,
    /// Objective value at `best_position`.
    pub best_value: f64,
    /// Swarm-best value after each iteration; non-increasing, and its last
    /// entry equals `best_value`.
    pub history: Vec<f64>,
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum PsoError {
    #[error("invalid PSO configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid search box: {0}")]
    InvalidBox(&'static str),
    #[error("search box has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Strategy for evaluating a batch of candidate positions.
///
/// The core ships the sequential strategy; callers with a thread pool can
/// evaluate batches in parallel. Each output slot depends only on its own
/// position, so any strategy yields bit-identical runs.
pub trait Evaluate {
    fn evaluate(
        &self,
        objective: &(dyn Fn(&[f64]) -> f64 + Sync),
        positions: &[Vec<f64>],
        values: &mut [f64],
    );
}

/// In-order, single-worker evaluation.
pub struct Sequential;

impl Evaluate for Sequential {
    fn evaluate(
        &self,
        objective: &(dyn Fn(&[f64]) -> f64 + Sync),
        positions: &[Vec<f64>],
        values: &mut [f64],
    ) {
        for (slot, position) in values.iter_mut().zip(positions) {
            *slot = objective(position);
        }
    }
}

/// Minimize `objective` over `bounds` with sequential evaluation.
pub fn minimize<F>(objective: F, bounds: &SearchBox, config: &PsoConfig) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    minimize_with(objective, bounds, config, &Sequential)
}

/// Minimize `objective` over `bounds`, delegating batch evaluation to
/// `evaluator`. An objective returning NaN is treated as `+inf`.
pub fn minimize_with<F>(
    objective: F,
    bounds: &SearchBox,
    config: &PsoConfig,
    evaluator: &dyn Evaluate,
) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = bounds.dim();
    let swarm = config.swarm_size;

    let mut streams: Vec<UniformStream> = (0..swarm)
        .map(|k| UniformStream::new(config.seed, k as u64))
        .collect();

    let mut positions: Vec<Vec<f64>> = streams
        .iter_mut()
        .map(|s| (0..dim).map(|d| s.next_in(bounds.lower[d], bounds.upper[d])).collect())
        .collect();
    let mut velocities = alloc::vec![alloc::vec![0.0; dim]; swarm];
    let mut values = alloc::vec![0.0; swarm];

    evaluator.evaluate(&objective, &positions, &mut values);
    sanitize(&mut values);

    let mut pbest_pos = positions.clone();
    let mut pbest_val = values.clone();
    let (mut gbest_idx, mut gbest_val) = argmin(&pbest_val);
    let mut gbest_pos = pbest_pos[gbest_idx].clone();

    let mut history = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let w = config.inertia_at(iteration);
        for (k, stream) in streams.iter_mut().enumerate() {
            let p = &mut positions[k];
            let v = &mut velocities[k];
            for d in 0..dim {
                let r1 = stream.next_unit();
                let r2 = stream.next_unit();
                let mut vel = w * v[d]
                    + config.c1 * r1 * (pbest_pos[k][d] - p[d])
                    + config.c2 * r2 * (gbest_pos[d] - p[d]);
                let cap = config.vmax_fraction * bounds.width(d);
                vel = vel.clamp(-cap, cap);
                let mut x = p[d] + vel;
                if x < bounds.lower[d] {
                    x = bounds.lower[d];
                    vel = 0.0;
                } else if x > bounds.upper[d] {
                    x = bounds.upper[d];
                    vel = 0.0;
                }
                v[d] = vel;
                p[d] = x;
            }
        }

        evaluator.evaluate(&objective, &positions, &mut values);
        sanitize(&mut values);

        for k in 0..swarm {
            if values[k] < pbest_val[k] {
                pbest_val[k] = values[k];
                pbest_pos[k].copy_from_slice(&positions[k]);
            }
        }
        let (idx, val) = argmin(&pbest_val);
        if val < gbest_val {
            gbest_val = val;
            gbest_idx = idx;
            gbest_pos.copy_from_slice(&pbest_pos[idx]);
        }
        history.push(gbest_val);
    }

    let _ = gbest_idx;
    Ok(PsoResult { best_position: gbest_pos, best_value: gbest_val, history })
}

fn sanitize(values: &mut [f64]) {
    for v in values {
        if v.is_nan() {
            *v = f64::INFINITY;
        }
    }
}

/// First index of the minimum (ties keep the earliest particle).
fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    (best, values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_objective_is_trivially_optimal() {
        let bounds = SearchBox::uniform(3, -1.0, 1.0).unwrap();
        let result = minimize(|_| 0.0, &bounds, &PsoConfig::default()).unwrap();
        assert_eq!(result.best_value, 0.0);
        assert!(bounds.contains(&result.best_position));
        assert_eq!(result.history.len(), 100);
    }

    #[test]
    fn particle_at_optimum_with_zero_velocity_never_moves() {
        // Discover where the single particle starts, then make that point
        // the optimum and rerun with the same seed: Pbest = Gbest = p gives
        // a zero velocity update forever.
        let bounds = SearchBox::uniform(2, -3.0, 3.0).unwrap();
        let config = PsoConfig { swarm_size: 1, iterations: 50, ..PsoConfig::default() };
        let probe = minimize(|_| 0.0, &bounds, &config).unwrap();
        let start = probe.best_position.clone();

        let target = start.clone();
        let objective = move |x: &[f64]| {
            x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        };
        let result = minimize(objective, &bounds, &config).unwrap();
        assert_eq!(result.best_position, start);
        assert_eq!(result.best_value, 0.0);
        assert!(result.history.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bounds = SearchBox::uniform(2, -1.0, 1.0).unwrap();
        for config in [
            PsoConfig { swarm_size: 0, ..PsoConfig::default() },
            PsoConfig { iterations: 0, ..PsoConfig::default() },
            PsoConfig { c1: -0.1, ..PsoConfig::default() },
            PsoConfig { vmax_fraction: 0.0, ..PsoConfig::default() },
            PsoConfig { vmax_fraction: 1.5, ..PsoConfig::default() },
        ] {
            assert!(minimize(|_| 0.0, &bounds, &config).is_err());
        }
    }

    #[test]
    fn invalid_boxes_are_rejected() {
        assert!(SearchBox::new(alloc::vec![], alloc::vec![]).is_err());
        assert!(SearchBox::new(alloc::vec![0.0], alloc::vec![0.0]).is_err());
        assert!(SearchBox::new(alloc::vec![1.0], alloc::vec![-1.0]).is_err());
        assert!(SearchBox::new(alloc::vec![0.0, 0.0], alloc::vec![1.0]).is_err());
        assert!(SearchBox::new(alloc::vec![f64::NEG_INFINITY], alloc::vec![0.0]).is_err());
    }

    #[test]
    fn nan_objective_values_are_treated_as_infinite() {
        let bounds = SearchBox::uniform(1, -1.0, 1.0).unwrap();
        let config = PsoConfig { swarm_size: 4, iterations: 20, ..PsoConfig::default() };
        let result = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { x[0] },
            &bounds,
            &config,
        )
        .unwrap();
        assert!(result.best_value >= 0.0);
        assert!(result.best_value.is_finite());
    }

    #[test]
    fn history_is_monotone_and_ends_at_best() {
        let bounds = SearchBox::uniform(4, -5.0, 5.0).unwrap();
        let config = PsoConfig { seed: 9, ..PsoConfig::default() };
        let result = minimize(
            |x| x.iter().map(|v| (v - 0.7) * (v - 0.7)).sum::<f64>(),
            &bounds,
            &config,
        )
        .unwrap();
        for pair in result.history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        assert_eq!(*result.history.last().unwrap(), result.best_value);
        assert!(bounds.contains(&result.best_position));
    }

    #[test]
    fn linear_inertia_decay_interpolates_endpoints() {
        let config = PsoConfig {
            iterations: 5,
            w: 0.9,
            w_final: Some(0.4),
            ..PsoConfig::default()
        };
        assert_eq!(config.inertia_at(0), 0.9);
        assert_eq!(config.inertia_at(4), 0.4);
        assert!((config.inertia_at(2) - 0.65).abs() < 1e-15);
        let constant = PsoConfig::default();
        assert_eq!(constant.inertia_at(0), constant.inertia_at(99));
    }
}
