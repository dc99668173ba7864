//! Exact Gittins indices from a known arm via the retirement problem.
//!
//! For a retirement reward `M` the single-arm value is the fixed point of
//!
//! ```text
//! V(x) = max{ r(x) + gamma * sum_j P(j|x) V(j),  M }
//! ```
//!
//! and the index of `x` is `(1 - gamma) * M(x)` where `M(x)` is the smallest
//! `M` at which retiring in `x` is already optimal. The continuation
//! advantage `r(x) + gamma * P V_M - M` is strictly decreasing in `M` (slope at
//! most `-(1 - gamma)`), so `M(x)` is found by bisection.

use crate::env::{ArmModel, BanditInstance};
use crate::error::{invalid, Result};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const REGRESSION_TOL: f64 = 1e-9;

const MAX_BISECTIONS: usize = 200;

/// Per-state retirement fixed points and the indices they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct RetirementSolution {
    /// `M*(x)`, in discounted-value units.
    pub retirement: Vec<f64>,
    /// `G*(x) = (1 - gamma) M*(x)`, in per-step reward units.
    pub indices: Vec<f64>,
    pub gamma: f64,
    pub tolerance: f64,
}

impl RetirementSolution {
    /// Optimal value at each state used as the Bellman-error reference:
    /// the state's own retirement fixed point.
    pub fn value_star(&self) -> Vec<f64> {
        self.retirement.clone()
    }

    pub fn num_states(&self) -> usize {
        self.indices.len()
    }
}

fn check_params(gamma: f64, tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(invalid(format!("tolerance {tol} must be positive")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("discount {gamma} outside (0,1)")));
    }
    Ok(())
}

/// Value iteration from zeros; stops when the sup-norm change drops below
/// `tol (1 - gamma) / gamma`, which bounds the true error by `tol`.
fn iterate_retirement(arm: &ArmModel, m: f64, gamma: f64, tol: f64) -> Vec<f64> {
    let n = arm.num_states();
    let stop = tol * (1.0 - gamma) / gamma;
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    loop {
        let mut change = 0.0f64;
        for x in 0..n {
            let cont = arm.reward(x) + gamma * arm.row(x).iter().map(|&(j, p)| p * v[j]).sum::<f64>();
            let val = cont.max(m);
            change = change.max((val - v[x]).abs());
            next[x] = val;
        }
        std::mem::swap(&mut v, &mut next);
        if change < stop {
            return v;
        }
    }
}

/// `V_r(., M)`: the optimal value of the retirement problem with terminal reward `m`.
pub fn retirement_value(arm: &ArmModel, m: f64, gamma: f64, tol: f64) -> Result<Vec<f64>> {
    check_params(gamma, tol)?;
    if !m.is_finite() {
        return Err(invalid("retirement reward must be finite"));
    }
    Ok(iterate_retirement(arm, m, gamma, tol))
}

/// Exact Gittins indices for every state of `arm`.
pub fn gittins_exact(arm: &ArmModel, gamma: f64, tol: f64) -> Result<RetirementSolution> {
    check_params(gamma, tol)?;
    let (r_min, r_max) = arm.reward_range();
    let lo0 = r_min / (1.0 - gamma);
    let hi0 = r_max / (1.0 - gamma);
    // Value-iteration error feeds the bisection predicate; keep it well
    // below the bracket tolerance in M units.
    let vi_tol = 0.5 * tol * (1.0 - gamma);

    let n = arm.num_states();
    let mut retirement = vec![0.0; n];
    for (x, slot) in retirement.iter_mut().enumerate() {
        let (mut lo, mut hi) = (lo0, hi0);
        let mut iters = 0;
        while hi - lo >= tol && iters < MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let v = iterate_retirement(arm, mid, gamma, vi_tol);
            let cont = arm.reward(x) + gamma * arm.row(x).iter().map(|&(j, p)| p * v[j]).sum::<f64>();
            if cont <= mid {
                hi = mid;
            } else {
                lo = mid;
            }
            iters += 1;
        }
        *slot = 0.5 * (lo + hi);
    }
    let indices = retirement.iter().map(|m| (1.0 - gamma) * m).collect();
    Ok(RetirementSolution {
        retirement,
        indices,
        gamma,
        tolerance: tol,
    })
}

/// Exact solutions for every distinct arm of a bandit.
#[derive(Debug, Clone)]
pub struct BanditOracle {
    solutions: Vec<RetirementSolution>,
    homogeneous: bool,
}

impl BanditOracle {
    pub fn new(env: &BanditInstance, tol: f64) -> Result<Self> {
        let solutions = env
            .tables()
            .into_iter()
            .map(|arm| gittins_exact(arm, env.gamma(), tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            solutions,
            homogeneous: env.is_homogeneous(),
        })
    }

    pub fn from_solutions(solutions: Vec<RetirementSolution>, homogeneous: bool) -> Self {
        Self { solutions, homogeneous }
    }

    pub fn solution(&self, table: usize) -> &RetirementSolution {
        &self.solutions[table]
    }

    pub fn solutions(&self) -> &[RetirementSolution] {
        &self.solutions
    }

    pub fn index(&self, arm: usize, state: usize) -> f64 {
        let t = if self.homogeneous { 0 } else { arm };
        self.solutions[t].indices[state]
    }

    /// Whether pulling `arm` is optimal: its index attains the maximum over
    /// available arms.
    pub fn is_optimal(&self, arm: usize, states: &[usize], available: &[bool]) -> bool {
        let chosen = self.index(arm, states[arm]);
        let best = (0..states.len())
            .filter(|&i| available[i])
            .map(|i| self.index(i, states[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        chosen >= best - 1e-12
    }
}
