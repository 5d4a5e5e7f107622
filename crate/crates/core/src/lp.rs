//! The Lipschitz program in any dimension, solved with a simplex backend.
//!
//! ```text
//! maximize  sum_i c_i phi_i
//! s.t.      0 <= phi_i <= cap_i,  phi_i - phi_j <= |x_i - x_j|
//! ```
//!
//! The pairwise constraints are generated lazily: a nearest-neighbour seed set
//! is solved first and violated pairs are added until none remain.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable};

use crate::{Error, Result};

/// Largest number of points accepted by [`solve_lipschitz`].
pub const MAX_POINTS: usize = 4000;

/// Feasibility tolerance of the pairwise constraints.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LpSolution {
    /// Objective reported by the simplex solver.
    pub value: f64,
    /// Objective of the repaired, exactly feasible witness.
    pub witness_value: f64,
    pub phi: Vec<f64>,
    pub rounds: usize,
    pub constraints: usize,
}

fn dist(points: &[f64], dim: usize, i: usize, j: usize) -> f64 {
    let a = &points[i * dim..(i + 1) * dim];
    let b = &points[j * dim..(j + 1) * dim];
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn fault(e: minilp::Error) -> Error {
    Error::LpFault(e.to_string())
}

/// Replaces `phi` by `min(cap_i, min_j phi_j + |x_i - x_j|)` clipped at zero,
/// the largest 1-Lipschitz minorant below the caps.
pub fn repair(points: &[f64], dim: usize, cap: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = cap.len();
    (0..n)
        .map(|i| {
            let mut v = cap[i].min(phi[i]);
            for j in 0..n {
                if j != i {
                    v = v.min(phi[j] + dist(points, dim, i, j));
                }
            }
            v.max(0.0)
        })
        .collect()
}

/// Largest violation of the program's constraints by `phi`.
pub fn violation(points: &[f64], dim: usize, cap: &[f64], phi: &[f64]) -> f64 {
    let n = cap.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(-phi[i]).max(phi[i] - cap[i]);
        for j in 0..i {
            worst = worst.max((phi[i] - phi[j]).abs() - dist(points, dim, i, j));
        }
    }
    worst
}

fn add_pair(
    sol: Solution,
    vars: &[Variable],
    i: usize,
    j: usize,
    d: f64,
) -> std::result::Result<Solution, minilp::Error> {
    let sol = sol.add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d)?;
    sol.add_constraint([(vars[j], 1.0), (vars[i], -1.0)], ComparisonOp::Le, d)
}

/// Solves the program for `n = cap.len()` points stored flat in `points`.
pub fn solve_lipschitz(points: &[f64], dim: usize, c: &[f64], cap: &[f64]) -> Result<LpSolution> {
    let n = cap.len();
    if points.len() != n * dim || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n * dim,
            got: points.len(),
        });
    }
    if n > MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "{n} points exceed the dense program limit {MAX_POINTS}"
        )));
    }
    if n == 0 {
        return Ok(LpSolution {
            value: 0.0,
            witness_value: 0.0,
            phi: Vec::new(),
            rounds: 0,
            constraints: 0,
        });
    }

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..n)
        .map(|i| problem.add_var(c[i], (0.0, cap[i])))
        .collect();
    let seed = (2 * dim + 2).min(n - 1);
    let mut pairs = std::collections::HashSet::new();
    for i in 0..n {
        let mut near: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist(points, dim, i, j), j))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, j) in near.iter().take(seed) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    for &(i, j) in &pairs {
        let d = dist(points, dim, i, j);
        problem.add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d);
        problem.add_constraint([(vars[j], 1.0), (vars[i], -1.0)], ComparisonOp::Le, d);
    }
    let mut sol = problem.solve().map_err(fault)?;
    let mut rounds = 1;
    loop {
        let phi: Vec<f64> = vars.iter().map(|v| *sol.var_value(*v)).collect();
        // Most violated partner for every point.
        let mut fresh = Vec::new();
        for i in 0..n {
            let mut worst = (FEAS_TOL, usize::MAX);
            for j in 0..n {
                let excess = phi[i] - phi[j] - dist(points, dim, i, j);
                if excess > worst.0 {
                    worst = (excess, j);
                }
            }
            if worst.1 != usize::MAX {
                let key = (i.min(worst.1), i.max(worst.1));
                if pairs.insert(key) {
                    fresh.push(key);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (i, j) in fresh {
            sol = add_pair(sol, &vars, i, j, dist(points, dim, i, j)).map_err(fault)?;
        }
        rounds += 1;
        if rounds > 10 * n + 10 {
            return Err(Error::LpFault("constraint generation did not settle".into()));
        }
    }
    let raw: Vec<f64> = vars.iter().map(|v| *sol.var_value(*v)).collect();
    let phi = repair(points, dim, cap, &raw);
    let witness_value = phi.iter().zip(c).map(|(p, c)| p * c).sum();
    Ok(LpSolution {
        value: sol.objective(),
        witness_value,
        phi,
        rounds,
        constraints: 2 * pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::solve_chain;
    use proptest::prelude::*;

    #[test]
    fn single_point_takes_cap() {
        let s = solve_lipschitz(&[0.0, 0.0], 2, &[2.0], &[1.5]).unwrap();
        assert!((s.value - 3.0).abs() < 1e-9);
        assert!((s.witness_value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_points_in_the_plane() {
        let pts = [0.0, 0.0, 0.3, 0.4];
        let cap = [1.5, 1.1];
        let s = solve_lipschitz(&pts, 2, &[1.0, -1.0], &cap).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9);
        assert!(violation(&pts, 2, &cap, &s.phi) < 1e-12);
    }

    #[test]
    fn repair_is_feasible_and_below() {
        let pts = [0.0, 1.0, 2.0];
        let cap = [1.0, 1.0, 1.0];
        let phi = [1.0, 0.0, 1.0];
        let r = repair(&pts, 1, &cap, &phi);
        assert_eq!(r, vec![1.0, 0.0, 1.0]);
        let phi = [5.0, 0.0, 0.5];
        let r = repair(&pts, 1, &cap, &phi);
        assert!(violation(&pts, 1, &cap, &r) <= 0.0);
        assert!(r.iter().zip(&phi).all(|(a, b)| a <= b));
    }

    #[test]
    fn rejects_oversized_programs() {
        let n = MAX_POINTS + 1;
        let err = solve_lipschitz(&vec![0.0; n], 1, &vec![0.0; n], &vec![0.0; n]);
        assert!(matches!(err, Err(Error::TooLarge(_))));
    }

    proptest! {
        #[test]
        fn agrees_with_chain_solver_on_the_line(
            raw in prop::collection::vec((-4.4f64..4.4, -2.0f64..2.0), 1..25)
        ) {
            let mut pts = raw.clone();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let c: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let cap: Vec<f64> = x.iter().map(|v| (4.5 - v.abs()).max(0.0)).collect();
            let lp = solve_lipschitz(&x, 1, &c, &cap).unwrap();
            let chain = solve_chain(&x, &c, &cap);
            prop_assert!((lp.value - chain.value).abs() < 1e-7, "{} vs {}", lp.value, chain.value);
            prop_assert!((lp.witness_value - chain.value).abs() < 1e-7);
        }

        #[test]
        fn witness_is_feasible_in_the_plane(
            raw in prop::collection::vec((-1.4f64..1.4, -1.4f64..1.4, -2.0f64..2.0), 1..20)
        ) {
            let pts: Vec<f64> = raw.iter().flat_map(|p| [p.0, p.1]).collect();
            let c: Vec<f64> = raw.iter().map(|p| p.2).collect();
            let cap: Vec<f64> = raw.iter().map(|p| (1.5 - p.0.abs()).min(1.5 - p.1.abs())).collect();
            let s = solve_lipschitz(&pts, 2, &c, &cap).unwrap();
            prop_assert!(violation(&pts, 2, &cap, &s.phi) <= 1e-12);
            prop_assert!(s.witness_value <= s.value + 1e-7);
            prop_assert!(s.value - s.witness_value < 1e-6);
        }
    }
}
