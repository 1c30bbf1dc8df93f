mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use common::{closed_form, random_problem, rng};
use tailsitter::model::VehicleParams;
use tailsitter::pivot::{pivot_allocate, pivot_equilibrium, THRUST_WEIGHT_SCALE};
use tailsitter::wls::{allocation_cost, allocation_gradient, solve_wls, AllocationProblem, AllocationStatus};

fn unbounded(mut p: AllocationProblem) -> AllocationProblem {
    p.lower = DVector::from_element(p.lower.len(), -1e6);
    p.upper = DVector::from_element(p.upper.len(), 1e6);
    p
}

#[test]
fn matches_closed_form_without_active_bounds() {
    let mut r = rng(11);
    for _ in 0..100 {
        let p = unbounded(random_problem(&mut r, 4, 6, 1.0));
        let sol = solve_wls(&p).unwrap();
        let cf = closed_form(&p);
        assert_eq!(sol.status, AllocationStatus::Optimal);
        assert!((&sol.u - &cf).amax() < 1e-8, "{} vs {}", sol.u, cf);
    }
}

#[test]
fn beats_random_feasible_points_when_bounded() {
    let mut r = rng(12);
    for _ in 0..100 {
        let mut p = random_problem(&mut r, 4, 6, 0.4);
        p.objective *= 5.0;
        let sol = solve_wls(&p).unwrap();
        let best = allocation_cost(&p, &sol.u);
        for _ in 0..10_000 {
            let x = DVector::from_fn(6, |i, _| r.random_range(p.lower[i]..=p.upper[i]));
            assert!(best <= allocation_cost(&p, &x) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn one_bound_active_matches_grid_search() {
    let p = AllocationProblem {
        effectiveness: DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
        objective: DVector::from_element(1, 1.0),
        u0: DVector::zeros(2),
        preferred: DVector::zeros(2),
        lower: DVector::from_column_slice(&[-0.1, -0.1]),
        upper: DVector::from_column_slice(&[0.6, 0.1]),
        input_weights: DVector::from_element(2, 1.0),
        objective_weights: DVector::from_element(1, 1.0),
        gamma: 1.0,
        max_iterations: None,
    };
    let sol = solve_wls(&p).unwrap();
    let step = 1e-4;
    let (mut best, mut arg) = (f64::INFINITY, DVector::zeros(2));
    let nx = ((p.upper[0] - p.lower[0]) / step).round() as usize;
    let ny = ((p.upper[1] - p.lower[1]) / step).round() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            let x = DVector::from_column_slice(&[p.lower[0] + i as f64 * step, p.lower[1] + j as f64 * step]);
            let c = allocation_cost(&p, &x);
            if c < best {
                best = c;
                arg = x;
            }
        }
    }
    assert!((&sol.u - &arg).amax() <= 2e-4, "{} vs grid {}", sol.u, arg);
    assert_eq!(sol.u[1], p.upper[1]);
}

#[test]
fn zero_cost_point_is_returned() {
    let mut r = rng(13);
    let mut p = random_problem(&mut r, 4, 6, 1.0);
    p.objective = &p.effectiveness * &p.preferred;
    let sol = solve_wls(&p).unwrap();
    assert!((&sol.u - &p.preferred).amax() < 1e-9);
}

#[test]
fn satisfies_kkt_conditions() {
    let mut r = rng(14);
    for _ in 0..200 {
        let mut p = random_problem(&mut r, 4, 6, 0.5);
        p.objective *= 4.0;
        let sol = solve_wls(&p).unwrap();
        let g = allocation_gradient(&p, &sol.u);
        for i in 0..6 {
            let at_lower = sol.u[i] == p.lower[i];
            let at_upper = sol.u[i] == p.upper[i];
            if at_lower {
                assert!(g[i] >= -1e-7, "lower {i}: {}", g[i]);
            } else if at_upper {
                assert!(g[i] <= 1e-7, "upper {i}: {}", g[i]);
            } else {
                assert!(g[i].abs() <= 1e-7, "free {i}: {}", g[i]);
            }
        }
    }
}

#[test]
fn pivot_split_is_exact_and_minimum_norm() {
    let params = VehicleParams::default();
    let mut r = rng(15);
    let delta_range = 63f64.to_radians();
    let w = [1.0 / THRUST_WEIGHT_SCALE.powi(2), 1.0 / delta_range.powi(2)];
    let norm = |x: [f64; 2]| w[0] * x[0] * x[0] + w[1] * x[1] * x[1];
    for _ in 0..1000 {
        let pitch = r.random_range(-1.55..-0.02);
        let du = r.random_range(-3.0..3.0);
        let (dt, dd) = pivot_allocate(du, pitch, &params).unwrap();
        let (t_eq, d_eq) = pivot_equilibrium(pitch, &params);
        let b = [d_eq.sin(), t_eq * d_eq.cos()];
        assert!((b[0] * dt + b[1] * dd - du).abs() < 1e-9);
        // any other solution differs by a multiple of the null vector
        let null = [b[1], -b[0]];
        let s = r.random_range(-1.0..1.0);
        let other = [dt + s * null[0], dd + s * null[1]];
        assert!(norm([dt, dd]) <= norm(other) + 1e-15);
    }
}

fn problem() -> impl Strategy<Value = AllocationProblem> {
    any::<u64>().prop_map(|seed| {
        let mut r = rng(seed);
        let mut p = random_problem(&mut r, 4, 6, 0.5);
        p.objective *= r.random_range(0.5..6.0);
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn output_is_within_bounds(p in problem()) {
        let sol = solve_wls(&p).unwrap();
        for i in 0..6 {
            prop_assert!(sol.u[i] >= p.lower[i] && sol.u[i] <= p.upper[i]);
        }
    }

    #[test]
    fn objective_scaling_leaves_minimiser_unchanged(p in problem(), c in 0.01f64..100.0) {
        let a = solve_wls(&p).unwrap();
        let mut q = p.clone();
        q.gamma *= c;
        q.objective_weights /= c.sqrt();
        let b = solve_wls(&q).unwrap();
        prop_assert!((&a.u - &b.u).amax() < 1e-8, "{} vs {}", a.u, b.u);
    }

    #[test]
    fn repeated_solves_are_bitwise_identical(p in problem()) {
        let a = solve_wls(&p).unwrap();
        let b = solve_wls(&p).unwrap();
        prop_assert_eq!(a.u.as_slice(), b.u.as_slice());
        prop_assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn heavier_input_weight_never_moves_that_input_further(p in problem(), i in 0usize..6, k in 1.0f64..50.0) {
        let a = solve_wls(&p).unwrap();
        let mut q = p.clone();
        q.input_weights[i] *= k;
        let b = solve_wls(&q).unwrap();
        let da = (a.u[i] - p.preferred[i]).abs();
        let db = (b.u[i] - p.preferred[i]).abs();
        prop_assert!(db <= da + 1e-9, "{db} > {da}");
    }
}
