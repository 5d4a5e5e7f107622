//! Blow-ups `c T_{x,r#}`, weighted duplication and the level parameters.

use serde::Serialize;

use crate::measure::{AtomicMeasure, AxisBox};
use crate::triadic::{contracted_box, expanded_box, neighbour_offsets, pow3, standard_box};
use crate::{Error, Result};

/// A weight vector of `W`: `3^d` positive weights, the first equal to one.
///
/// Entry `j` belongs to the `j`-th neighbour in [`neighbour_offsets`] order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightVector {
    dim: usize,
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(dim: usize, w: Vec<f64>) -> Result<Self> {
        let n = 3usize.pow(dim as u32);
        if w.len() != n {
            return Err(Error::InvalidWeights(format!(
                "expected {n} weights, got {}",
                w.len()
            )));
        }
        if w[0] != 1.0 {
            return Err(Error::InvalidWeights(format!(
                "first weight must be 1, got {}",
                w[0]
            )));
        }
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidWeights(format!("non-positive weight {bad}")));
        }
        Ok(Self { dim, w })
    }

    pub fn ones(dim: usize) -> Self {
        Self {
            dim,
            w: vec![1.0; 3usize.pow(dim as u32)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// `c T_{x,r#} mu`: each atom `(p, w)` becomes `((p - x) / r, c w)`.
pub fn blowup(mu: &AtomicMeasure, x: &[f64], r: f64, c: f64) -> Result<AtomicMeasure> {
    check_scale(r, c)?;
    mu.push_affine(x, r, c)
}

/// Inverse of [`blowup`]: each atom `(q, w)` becomes `(x + r q, w / c)`.
pub fn inverse_blowup(sigma: &AtomicMeasure, x: &[f64], r: f64, c: f64) -> Result<AtomicMeasure> {
    check_scale(r, c)?;
    sigma.pull_affine(x, r, 1.0 / c)
}

fn check_scale(r: f64, c: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::OutOfRange(format!("radius {r}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::OutOfRange(format!("normalisation {c}")));
    }
    Ok(())
}

/// `nu_a^w = sum_j w_j (nu ⌞ I_a translated by the centre of the j-th neighbour of I_a)`.
pub fn weighted_duplication(nu: &AtomicMeasure, a: i32, w: &WeightVector) -> Result<AtomicMeasure> {
    if w.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: nu.dim(),
            got: w.dim(),
        });
    }
    let nu_a = nu.restrict(&standard_box(a, nu.dim()))?;
    let side = pow3(a);
    let copies = neighbour_offsets(nu.dim())
        .iter()
        .zip(w.as_slice())
        .map(|(e, &wj)| {
            let shift: Vec<f64> = e.iter().map(|&o| o as f64 * side).collect();
            nu_a.pull_affine(&shift, 1.0, wj)
        })
        .collect::<Result<Vec<_>>>()?;
    AtomicMeasure::sum_all(nu.dim(), &copies)
}

/// `beta_a = 3^{-a} / (8 nu(I_{-a}))`, half the largest admissible value.
pub fn default_beta(nu: &AtomicMeasure, a: u32) -> Result<f64> {
    let central = nu.mass_in(&standard_box(-(a as i32), nu.dim()))?;
    if central <= 0.0 {
        return Err(Error::ZeroMass(format!("nu(I_-{a}) = 0")));
    }
    Ok(pow3(-(a as i32)) / (8.0 * central))
}

/// Mass of `mu` in `I^+_{a,eps} \ I^-_{a,eps}`.
pub fn buffer_mass(mu: &AtomicMeasure, a: i32, eps: f64) -> Result<f64> {
    let d = mu.dim();
    let outer = expanded_box(a, eps, d)?;
    let inner = contracted_box(a, eps, d)?;
    Ok(ring_mass(mu, &outer, &inner))
}

fn ring_mass(mu: &AtomicMeasure, outer: &AxisBox, inner: &AxisBox) -> f64 {
    mu.atoms()
        .filter(|(p, _)| outer.contains(p) && !inner.contains(p))
        .map(|(_, w)| w)
        .sum()
}

/// Number of halvings tried by [`choose_epsilon_w`].
pub const EPSILON_LADDER: u32 = 60;

/// Largest `eps_a 2^{-j}`, `1 <= j <= 60`, whose buffers around `I_{-a}` (for
/// `nu`) and `I_a` (for `nu_a^w`) both carry mass below `eps_a`.
pub fn choose_epsilon_w(nu: &AtomicMeasure, a: u32, w: &WeightVector, eps_a: f64) -> Result<f64> {
    let dup = weighted_duplication(nu, a as i32, w)?;
    choose_epsilon_w_for(nu, &dup, a, eps_a)
}

pub(crate) fn choose_epsilon_w_for(
    nu: &AtomicMeasure,
    dup: &AtomicMeasure,
    a: u32,
    eps_a: f64,
) -> Result<f64> {
    let a = a as i32;
    for j in 1..=EPSILON_LADDER {
        let eps = eps_a * 0.5f64.powi(j as i32);
        if eps >= pow3(-a) / 2.0 {
            continue;
        }
        if buffer_mass(nu, -a, eps)? < eps_a && buffer_mass(dup, a, eps)? < eps_a {
            return Ok(eps);
        }
    }
    Err(Error::NoEpsilonCandidate { eps_a })
}

/// The parameters `beta_a`, `eps_a`, `eps_a^w` for one level and weight vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonChoice {
    pub a: u32,
    pub beta_a: f64,
    pub eps_a: f64,
    pub eps_a_w: f64,
}

impl EpsilonChoice {
    /// Uses `beta` when given, [`default_beta`] otherwise.
    pub fn new(nu: &AtomicMeasure, a: u32, w: &WeightVector, beta: Option<f64>) -> Result<Self> {
        let dup = weighted_duplication(nu, a as i32, w)?;
        Self::with_duplicate(nu, &dup, a, beta)
    }

    pub(crate) fn with_duplicate(
        nu: &AtomicMeasure,
        dup: &AtomicMeasure,
        a: u32,
        beta: Option<f64>,
    ) -> Result<Self> {
        let central = nu.mass_in(&standard_box(-(a as i32), nu.dim()))?;
        if central <= 0.0 {
            return Err(Error::ZeroMass(format!("nu(I_-{a}) = 0")));
        }
        let limit = pow3(-(a as i32)) / (4.0 * central);
        let beta_a = match beta {
            Some(b) if b > 0.0 && b < limit => b,
            Some(b) => {
                return Err(Error::OutOfRange(format!(
                    "beta {b} outside (0, {limit})"
                )))
            }
            None => default_beta(nu, a)?,
        };
        let eps_a = beta_a * central;
        let eps_a_w = choose_epsilon_w_for(nu, dup, a, eps_a)?;
        Ok(Self {
            a,
            beta_a,
            eps_a,
            eps_a_w,
        })
    }

    /// `rho_a = (1 + 2 beta_a) / (1 - 2 beta_a)`.
    pub fn rho(&self) -> f64 {
        (1.0 + 2.0 * self.beta_a) / (1.0 - 2.0 * self.beta_a)
    }
}
