//! Bounded weighted least-squares control allocation.
//!
//! Minimises
//!
//! ```text
//! C(u) = |W_u (u - u_p)|^2 + gamma |W_v (G u - nu)|^2,   lower <= u <= upper
//! ```
//!
//! with a primal active-set method on the stacked least-squares form
//! `|A u - b|^2`, `A = [sqrt(gamma) W_v G; W_u]`, `b = [sqrt(gamma) W_v nu; W_u u_p]`.
//! Each iteration solves the unconstrained problem over the free coordinates;
//! a full step that stays feasible is taken and the multipliers of the working
//! set are checked, otherwise the step is cut at the first bound it crosses
//! and that bound joins the working set.

use nalgebra::{DMatrix, DVector};

/// Objective priority factor used by both control loops.
pub const DEFAULT_GAMMA: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocationError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("infeasible bounds at coordinate {0} (lower > upper)")]
    Bounds(usize),
}

/// One allocation problem. `u0` is the warm start (current actuator state).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub effectiveness: DMatrix<f64>,
    pub objective: DVector<f64>,
    pub u0: DVector<f64>,
    pub preferred: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub input_weights: DVector<f64>,
    pub objective_weights: DVector<f64>,
    pub gamma: f64,
    /// Active-set iteration budget; `None` means twice the input count.
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationStatus {
    Optimal,
    /// The iteration budget ran out; the iterate is feasible but may not be
    /// optimal.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub u: DVector<f64>,
    pub iterations: usize,
    pub status: AllocationStatus,
}

impl AllocationProblem {
    fn validate(&self) -> Result<(), AllocationError> {
        let (m, n) = self.effectiveness.shape();
        let check = |what: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(AllocationError::Dimension(format!(
                    "{what} has length {len}, expected {want}"
                )))
            }
        };
        check("objective", self.objective.len(), m)?;
        check("objective_weights", self.objective_weights.len(), m)?;
        check("u0", self.u0.len(), n)?;
        check("preferred", self.preferred.len(), n)?;
        check("lower", self.lower.len(), n)?;
        check("upper", self.upper.len(), n)?;
        check("input_weights", self.input_weights.len(), n)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(AllocationError::Weights(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self
            .input_weights
            .iter()
            .chain(self.objective_weights.iter())
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(AllocationError::Weights(
                "weights must be finite and non-negative".into(),
            ));
        }
        if let Some(i) = (0..n).find(|&i| self.lower[i] > self.upper[i]) {
            return Err(AllocationError::Bounds(i));
        }
        Ok(())
    }

    /// Stacked least-squares matrix and right-hand side.
    fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (m, n) = self.effectiveness.shape();
        let sg = self.gamma.sqrt();
        let mut a = DMatrix::zeros(m + n, n);
        let mut b = DVector::zeros(m + n);
        for i in 0..m {
            let w = sg * self.objective_weights[i];
            for j in 0..n {
                a[(i, j)] = w * self.effectiveness[(i, j)];
            }
            b[i] = w * self.objective[i];
        }
        for j in 0..n {
            a[(m + j, j)] = self.input_weights[j];
            b[m + j] = self.input_weights[j] * self.preferred[j];
        }
        (a, b)
    }
}

/// Evaluates the allocation cost at `u`.
pub fn allocation_cost(problem: &AllocationProblem, u: &DVector<f64>) -> f64 {
    let input = problem.input_weights.component_mul(&(u - &problem.preferred));
    let residual = problem
        .objective_weights
        .component_mul(&(&problem.effectiveness * u - &problem.objective));
    input.norm_squared() + problem.gamma * residual.norm_squared()
}

/// Gradient of [`allocation_cost`] at `u`.
pub fn allocation_gradient(problem: &AllocationProblem, u: &DVector<f64>) -> DVector<f64> {
    let (a, b) = problem.stacked();
    2.0 * a.transpose() * (a * u - b)
}

/// Working-set membership of a coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

const FEAS_TOL: f64 = 1e-12;

/// Solves the bounded WLS problem. The output is always within bounds.
pub fn solve_wls(problem: &AllocationProblem) -> Result<Allocation, AllocationError> {
    problem.validate()?;
    let n = problem.u0.len();
    let (a, b) = problem.stacked();
    let max_iter = problem.max_iterations.unwrap_or(2 * n).max(1);

    let mut u = DVector::from_fn(n, |i, _| problem.u0[i].clamp(problem.lower[i], problem.upper[i]));
    let mut set: Vec<Bound> = (0..n)
        .map(|i| {
            if problem.lower[i] == problem.upper[i] || u[i] <= problem.lower[i] {
                Bound::Lower
            } else if u[i] >= problem.upper[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let mut d = &b - &a * &u;

    for iter in 1..=max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| set[i] == Bound::Free).collect();
        let p = free_step(&a, &d, &free);

        let feasible = free
            .iter()
            .zip(p.iter())
            .all(|(&i, &pi)| u[i] + pi >= problem.lower[i] - FEAS_TOL && u[i] + pi <= problem.upper[i] + FEAS_TOL);

        if feasible {
            for (&i, &pi) in free.iter().zip(p.iter()) {
                u[i] = (u[i] + pi).clamp(problem.lower[i], problem.upper[i]);
            }
            d = &b - &a * &u;
            let grad = a.transpose() * &d; // = -gradient / 2
                                           // multiplier of each constraint in the working set, positive when
                                           // the bound is holding the solution back
            let mut worst: Option<(usize, f64)> = None;
            for i in 0..n {
                if problem.lower[i] == problem.upper[i] {
                    continue;
                }
                let lambda = match set[i] {
                    Bound::Free => continue,
                    Bound::Lower => -grad[i],
                    Bound::Upper => grad[i],
                };
                if lambda < worst.map_or(0.0, |(_, l)| l) {
                    worst = Some((i, lambda));
                }
            }
            match worst {
                None => {
                    return Ok(Allocation {
                        u,
                        iterations: iter,
                        status: AllocationStatus::Optimal,
                    })
                }
                Some((i, _)) => set[i] = Bound::Free,
            }
        } else {
            // largest step that keeps every free coordinate feasible; ties go
            // to the coordinate that overshoots the most, then the lowest index
            let mut alpha = 1.0;
            let mut blocking: Option<(usize, Bound, f64)> = None;
            for (&i, &pi) in free.iter().zip(p.iter()) {
                let (limit, side) = if pi < 0.0 {
                    ((problem.lower[i] - u[i]) / pi, Bound::Lower)
                } else if pi > 0.0 {
                    ((problem.upper[i] - u[i]) / pi, Bound::Upper)
                } else {
                    continue;
                };
                let overshoot = pi.abs() * (1.0 - limit).max(0.0);
                let better = match blocking {
                    None => limit < alpha,
                    Some((_, _, best)) => limit < alpha || (limit == alpha && overshoot > best),
                };
                if better && limit < 1.0 {
                    alpha = limit.max(0.0);
                    blocking = Some((i, side, overshoot));
                }
            }
            for (&i, &pi) in free.iter().zip(p.iter()) {
                u[i] = (u[i] + alpha * pi).clamp(problem.lower[i], problem.upper[i]);
            }
            if let Some((i, side, _)) = blocking {
                u[i] = if side == Bound::Lower {
                    problem.lower[i]
                } else {
                    problem.upper[i]
                };
                set[i] = side;
            }
            d = &b - &a * &u;
        }
    }

    Ok(Allocation {
        u,
        iterations: max_iter,
        status: AllocationStatus::IterationLimit,
    })
}

/// Least-squares step over the free columns: `min |A_f p - d|`.
fn free_step(a: &DMatrix<f64>, d: &DVector<f64>, free: &[usize]) -> Vec<f64> {
    if free.is_empty() {
        return Vec::new();
    }
    let af = a.select_columns(free);
    let svd = af.svd(true, true);
    let tol = svd.singular_values.max() * 1e-13;
    match svd.solve(d, tol) {
        Ok(p) => p.iter().copied().collect(),
        Err(_) => vec![0.0; free.len()],
    }
}
