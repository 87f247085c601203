//! Swarm optimizer behavior: convergence fixture, determinism, and the
//! motion invariants observable through the objective.

use std::sync::Mutex;

use dynident_core::pso::{minimize, Evaluate, PsoConfig, PsoResult, SearchBox, Sequential};

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Frozen outcome of the reference seeded sphere run (swarm 20, 100
/// iterations, c1 = c2 = 1.3, w = 0.6, seed 42 on [-5, 5]^3).
const SPHERE_SEED: u64 = 42;
const SPHERE_BEST: f64 = 2.424063252165848e-19;

fn sphere_config() -> PsoConfig {
    PsoConfig { seed: SPHERE_SEED, ..PsoConfig::default() }
}

#[test]
fn sphere_regression_fixture() {
    let bounds = SearchBox::uniform(3, -5.0, 5.0).unwrap();
    let result = minimize(sphere, &bounds, &sphere_config()).unwrap();
    assert!(result.best_value < 1e-3, "sphere best {} not below 1e-3", result.best_value);
    assert!(
        (result.best_value - SPHERE_BEST).abs() <= 1e-18 + 1e-12 * SPHERE_BEST,
        "regression drift: {} vs frozen {}",
        result.best_value,
        SPHERE_BEST
    );
}

fn bits(result: &PsoResult) -> Vec<u64> {
    result
        .best_position
        .iter()
        .chain(core::iter::once(&result.best_value))
        .chain(result.history.iter())
        .map(|v| v.to_bits())
        .collect()
}

#[test]
fn identical_runs_are_bit_identical() {
    let bounds = SearchBox::uniform(4, -2.0, 7.0).unwrap();
    let config = PsoConfig { seed: 1234, ..PsoConfig::default() };
    let objective = |x: &[f64]| x.iter().map(|v| (v - 1.5) * (v - 1.5)).sum::<f64>();
    let a = minimize(objective, &bounds, &config).unwrap();
    let b = minimize(objective, &bounds, &config).unwrap();
    assert_eq!(bits(&a), bits(&b));

    let c = minimize(objective, &bounds, &config.clone().with_seed(1235)).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

/// Evaluates batches in reverse order; any batch strategy must produce the
/// same run because slots are independent.
struct ReverseOrder;

impl Evaluate for ReverseOrder {
    fn evaluate(
        &self,
        objective: &(dyn Fn(&[f64]) -> f64 + Sync),
        positions: &[Vec<f64>],
        values: &mut [f64],
    ) {
        for k in (0..positions.len()).rev() {
            values[k] = objective(&positions[k]);
        }
    }
}

#[test]
fn evaluation_order_does_not_change_the_run() {
    let bounds = SearchBox::uniform(3, -5.0, 5.0).unwrap();
    let config = sphere_config();
    let seq = dynident_core::pso::minimize_with(sphere, &bounds, &config, &Sequential).unwrap();
    let rev = dynident_core::pso::minimize_with(sphere, &bounds, &config, &ReverseOrder).unwrap();
    assert_eq!(bits(&seq), bits(&rev));
}

#[test]
fn every_evaluated_position_stays_inside_the_box_and_under_the_velocity_cap() {
    let lower = vec![-1.0, 0.5];
    let upper = vec![2.0, 4.5];
    let bounds = SearchBox::new(lower.clone(), upper.clone()).unwrap();
    let config = PsoConfig {
        swarm_size: 1, // one particle: consecutive evaluations are its path
        iterations: 200,
        vmax_fraction: 0.25,
        seed: 8,
        ..PsoConfig::default()
    };
    let seen: Mutex<Vec<Vec<f64>>> = Mutex::new(Vec::new());
    let objective = |x: &[f64]| {
        seen.lock().unwrap().push(x.to_vec());
        (x[0] + 1.0) * (x[0] + 1.0) + (x[1] - 4.5) * (x[1] - 4.5)
    };
    minimize(objective, &bounds, &config).unwrap();
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.len(), 201); // init + one per iteration
    for pos in &seen {
        for d in 0..2 {
            assert!(pos[d] >= lower[d] && pos[d] <= upper[d], "position {pos:?} escaped");
        }
    }
    for pair in seen.windows(2) {
        for d in 0..2 {
            let cap = 0.25 * (upper[d] - lower[d]);
            let step = (pair[1][d] - pair[0][d]).abs();
            assert!(step <= cap + 1e-12, "step {step} exceeds cap {cap}");
        }
    }
}

#[test]
fn optimum_on_the_boundary_is_reached_exactly() {
    // Clipping lands particles exactly on the bound, so a boundary optimum
    // is representable and found bit-exactly.
    let bounds = SearchBox::uniform(1, 0.0, 2.0).unwrap();
    let config = PsoConfig { seed: 3, iterations: 60, ..PsoConfig::default() };
    let result = minimize(|x| (3.0 - x[0]).abs(), &bounds, &config).unwrap();
    assert_eq!(result.best_position[0], 2.0);
    assert_eq!(result.best_value, 1.0);
}
