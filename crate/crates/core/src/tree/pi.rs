use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{word_distance, TreeMeasure, Weight};
use crate::{Error, Result};

/// Largest combined support accepted by [`pi_metric_lp`].
pub const PI_LP_MAX_WORDS: usize = 400;

fn common_depth<T: Weight>(mu: &TreeMeasure<T>, nu: &TreeMeasure<T>) -> Result<(TreeMeasure<T>, TreeMeasure<T>)> {
    if mu.alphabet() != nu.alphabet() {
        return Err(Error::DimensionMismatch {
            expected: mu.alphabet(),
            got: nu.alphabet(),
        });
    }
    let n = mu.depth().max(nu.depth());
    Ok((mu.refine(n - mu.depth())?, nu.refine(n - nu.depth())?))
}

/// `pi(mu, nu)` in closed form: the transport cost on the tree whose edge
/// into level `k` has length `2^{-(k+2)}` for `k < n` and `2^{-(n+1)}` at the
/// leaves.
pub fn pi_metric<T: Weight>(mu: &TreeMeasure<T>, nu: &TreeMeasure<T>) -> Result<T> {
    let (mu, nu) = common_depth(mu, nu)?;
    let n = mu.depth();
    let two = T::from_count(2);
    let mut edge = T::one() / (two.clone() * two.clone() * two.clone());
    let mut total = T::zero();
    for k in 1..=n {
        let length = if k == n { edge.clone() * two.clone() } else { edge.clone() };
        let diff = mu
            .level(k)
            .iter()
            .zip(nu.level(k))
            .fold(T::zero(), |acc, (a, b)| acc + a.abs_diff(&b));
        total = total + length * diff;
        edge = edge / two.clone();
    }
    Ok(total)
}

/// [`pi_metric_lp`] together with the same program without `|phi| <= 1`.
#[derive(Clone, Copy, Debug)]
pub struct LpPi {
    pub value: f64,
    /// Optimum with the sup-norm bound dropped and one value pinned at zero.
    pub unbounded_value: f64,
}

impl LpPi {
    /// Whether dropping `|phi| <= 1` leaves the optimum unchanged.
    pub fn bound_inactive(&self, tol: f64) -> bool {
        (self.value - self.unbounded_value).abs() <= tol
    }
}

fn solve(words: &[Vec<u8>], c: &[f64], bounded: bool) -> Result<f64> {
    let fault = |e: minilp::Error| Error::LpFault(e.to_string());
    let m = words.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..m)
        .map(|i| {
            let bounds = match (bounded, i) {
                (true, _) => (-1.0, 1.0),
                (false, 0) => (0.0, 0.0),
                (false, _) => (f64::NEG_INFINITY, f64::INFINITY),
            };
            problem.add_var(c[i], bounds)
        })
        .collect();
    // Lexicographic neighbours first; the rest are added when violated.
    for i in 1..m {
        let d = word_distance(&words[i - 1], &words[i]);
        problem.add_constraint([(vars[i], 1.0), (vars[i - 1], -1.0)], ComparisonOp::Le, d);
        problem.add_constraint([(vars[i - 1], 1.0), (vars[i], -1.0)], ComparisonOp::Le, d);
    }
    let mut sol = problem.solve().map_err(fault)?;
    loop {
        let mut added = false;
        for i in 0..m {
            let worst = (0..m)
                .filter(|&j| j != i)
                .map(|j| (j, sol[vars[i]] - sol[vars[j]] - word_distance(&words[i], &words[j])))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, v)) = worst {
                if v > 1e-12 {
                    let d = word_distance(&words[i], &words[j]);
                    sol = sol
                        .add_constraint([(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, d)
                        .map_err(fault)?;
                    added = true;
                }
            }
        }
        if !added {
            return Ok(sol.objective());
        }
    }
}

/// `pi(mu, nu)` as the linear program over the values of a test function at
/// one point of each cylinder in the combined support.
pub fn pi_metric_lp(mu: &TreeMeasure, nu: &TreeMeasure) -> Result<LpPi> {
    let (mu, nu) = common_depth(mu, nu)?;
    let (words, c): (Vec<Vec<u8>>, Vec<f64>) = mu
        .weights()
        .iter()
        .zip(nu.weights())
        .enumerate()
        .filter(|(_, (a, b))| **a > 0.0 || **b > 0.0)
        .map(|(i, (a, b))| (mu.word_at(i), a - b))
        .unzip();
    if words.len() > PI_LP_MAX_WORDS {
        return Err(Error::TooLarge(format!(
            "{} words in the combined support, limit {PI_LP_MAX_WORDS}",
            words.len()
        )));
    }
    if words.is_empty() {
        return Ok(LpPi { value: 0.0, unbounded_value: 0.0 });
    }
    // The feasible set is symmetric, so maximising one sign suffices.
    let value = solve(&words, &c, true)?;
    let unbounded_value = solve(&words, &c, false)?;
    Ok(LpPi { value, unbounded_value })
}
