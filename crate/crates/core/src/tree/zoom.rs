use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::{format_word, pi_metric, word_distance, TreeMeasure, Weight, Word};
use crate::{Error, Result};

/// Largest `|P1| * |P2|` accepted by [`distribution_distance`].
pub const DISTRIBUTION_MAX_PAIRS: usize = 10_000;

/// A measure together with the part of a point's address not yet consumed.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeState {
    pub measure: TreeMeasure,
    pub word: Word,
}

impl TreeState {
    pub fn new(measure: TreeMeasure, word: Word) -> Result<Self> {
        if let Some(&s) = word.iter().find(|&&s| s == 0 || s as usize > measure.alphabet()) {
            return Err(Error::Parse(format!("symbol {s} outside 1..={}", measure.alphabet())));
        }
        Ok(Self { measure, word })
    }
}

/// `(mu, x) -> (mu_{x_1}, shift x)`.
pub fn zoom(state: &TreeState) -> Result<TreeState> {
    let Some((&first, rest)) = state.word.split_first() else {
        return Err(Error::DepthExhausted("word exhausted".into()));
    };
    if state.measure.depth() < 2 {
        return Err(Error::DepthExhausted("measure depth below 2".into()));
    }
    Ok(TreeState {
        measure: state.measure.condition(&[first])?,
        word: rest.to_vec(),
    })
}

pub fn zoom_n(state: &TreeState, n: usize) -> Result<TreeState> {
    (0..n).try_fold(state.clone(), |s, _| zoom(&s))
}

/// `mu_{x|n}` for each requested `n`.
pub fn micromeasure_orbit(mu: &TreeMeasure, x: &[u8], depths: &[usize]) -> Result<Vec<TreeMeasure>> {
    depths
        .iter()
        .map(|&n| {
            if n > x.len() {
                return Err(Error::DepthExhausted(format!("word of length {} cut at {n}", x.len())));
            }
            if n == 0 {
                Ok(mu.clone())
            } else {
                mu.condition(&x[..n])
            }
        })
        .collect()
}

/// `mu^k = sum_{|y| = k} mu[y] nu^y`, with the cylinders of `mu`-mass zero
/// listed separately.
#[derive(Clone, Debug)]
pub struct Approximant<T = f64> {
    pub measure: TreeMeasure<T>,
    pub zero_cylinders: Vec<Word>,
}

/// Places a copy of `nu` below every depth-`k` cylinder, weighted by its
/// `mu`-mass. Cylinders of mass zero get weight zero and are flagged.
pub fn construct_tree_approximant<T: Weight>(mu: &TreeMeasure<T>, nu: &TreeMeasure<T>, k: usize) -> Result<Approximant<T>> {
    if mu.alphabet() != nu.alphabet() {
        return Err(Error::DimensionMismatch {
            expected: mu.alphabet(),
            got: nu.alphabet(),
        });
    }
    if k > mu.depth() {
        return Err(Error::DepthExhausted(format!("k = {k} beyond depth {}", mu.depth())));
    }
    let level = mu.level(k);
    let b = mu.alphabet();
    let zero_cylinders = level
        .iter()
        .enumerate()
        .filter(|(_, m)| **m <= T::zero())
        .map(|(i, _)| {
            let mut word = vec![0u8; k];
            let mut rest = i;
            for slot in word.iter_mut().rev() {
                *slot = (rest % b) as u8 + 1;
                rest /= b;
            }
            word
        })
        .collect();
    let weights = level
        .iter()
        .flat_map(|m| nu.weights().iter().map(move |w| m.clone() * w.clone()))
        .collect();
    Ok(Approximant {
        measure: TreeMeasure::new(b, k + nu.depth(), weights)?,
        zero_cylinders,
    })
}

/// The states `ZOOM^1, ..., ZOOM^N` of `(mu, x)`, each with weight `1/N`.
pub fn empirical_distribution(mu: &TreeMeasure, x: &[u8], n: usize) -> Result<Vec<(TreeState, f64)>> {
    if n == 0 {
        return Err(Error::OutOfRange("N = 0".into()));
    }
    let mut state = TreeState::new(mu.clone(), x.to_vec())?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        state = zoom(&state).map_err(|e| match e {
            Error::ZeroCylinder(_) => Error::ZeroCylinder(format_word(&x[..=i], mu.alphabet())),
            other => other,
        })?;
        out.push((state.clone(), 1.0 / n as f64));
    }
    Ok(out)
}

/// `pi(mu, nu) + d(x, y)`.
pub fn state_distance(s: &TreeState, t: &TreeState) -> Result<f64> {
    Ok(pi_metric(&s.measure, &t.measure)? + word_distance(&s.word, &t.word))
}

/// Transport distance between two weighted state lists under [`state_distance`].
pub fn distribution_distance(p: &[(TreeState, f64)], q: &[(TreeState, f64)]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::OutOfRange("empty distribution".into()));
    }
    if p.len() * q.len() > DISTRIBUTION_MAX_PAIRS {
        return Err(Error::TooLarge(format!(
            "{} x {} states, limit {DISTRIBUTION_MAX_PAIRS} pairs",
            p.len(),
            q.len()
        )));
    }
    let total_p: f64 = p.iter().map(|s| s.1).sum();
    let total_q: f64 = q.iter().map(|s| s.1).sum();
    if (total_p - total_q).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("masses {total_p} and {total_q}")));
    }
    let cost = p
        .iter()
        .map(|(s, _)| q.iter().map(|(t, _)| state_distance(s, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = cost
        .iter()
        .map(|row| row.iter().map(|&c| problem.add_var(c, (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, (_, w)) in p.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        problem.add_constraint(row.as_slice(), ComparisonOp::Eq, *w);
    }
    // Columns absorb at most their mass; the totals agree up to rounding.
    for (j, (_, w)) in q.iter().enumerate() {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        problem.add_constraint(col.as_slice(), ComparisonOp::Le, w * (1.0 + 1e-12) + 1e-15);
    }
    let sol = problem.solve().map_err(|e| Error::LpFault(e.to_string()))?;
    Ok(sol.objective().max(0.0))
}
