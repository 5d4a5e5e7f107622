//! Bounded-Lipschitz distances `F_a` and the summed metric `d`.
//!
//! `F_a(mu, nu)` is the supremum of `|∫ phi dmu - ∫ phi dnu|` over nonnegative
//! 1-Lipschitz `phi` supported in `I_a`. On atomic measures this is the
//! Lipschitz program over the atoms in the closed cube, with each `phi_i`
//! capped by the distance of `x_i` to the complement of `I_a`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::line::solve_chain;
use crate::lp::solve_lipschitz;
use crate::measure::{lex_cmp, AtomicMeasure};
use crate::triadic::pow3;
use crate::{Error, Result};

/// Which solver evaluates the Lipschitz program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Chain dynamic program in dimension one, simplex otherwise.
    Auto,
    /// Always the simplex backend.
    Simplex,
}

/// Distance from `x` to the complement of `[-half, half)^d`, clipped at zero.
pub fn cap(x: &[f64], half: f64) -> f64 {
    x.iter()
        .map(|v| (v + half).min(half - v))
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// The atoms of two measures inside a closed cube, merged on common positions.
#[derive(Clone, Debug)]
pub struct PairOnCube {
    pub dim: usize,
    pub points: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub cap: Vec<f64>,
}

impl PairOnCube {
    /// Collects atoms of `mu` and `nu` in the closed cube `[-half, half]^d`.
    pub fn new(mu: &AtomicMeasure, nu: &AtomicMeasure, half: f64) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(Error::DimensionMismatch {
                expected: mu.dim(),
                got: nu.dim(),
            });
        }
        let dim = mu.dim();
        let inside = |p: &[f64]| p.iter().all(|v| v.abs() <= half);
        let mut out = Self {
            dim,
            points: Vec::new(),
            lhs: Vec::new(),
            rhs: Vec::new(),
            cap: Vec::new(),
        };
        let (mut i, mut j) = (0, 0);
        while i < mu.len() || j < nu.len() {
            let ord = match (i < mu.len(), j < nu.len()) {
                (true, true) => lex_cmp(mu.position(i), nu.position(j)),
                (true, false) => Ordering::Less,
                _ => Ordering::Greater,
            };
            let (p, a, b) = match ord {
                Ordering::Less => {
                    i += 1;
                    (mu.position(i - 1), mu.weight(i - 1), 0.0)
                }
                Ordering::Greater => {
                    j += 1;
                    (nu.position(j - 1), 0.0, nu.weight(j - 1))
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    (mu.position(i - 1), mu.weight(i - 1), nu.weight(j - 1))
                }
            };
            if inside(p) {
                out.points.extend_from_slice(p);
                out.lhs.push(a);
                out.rhs.push(b);
                out.cap.push(cap(p, half));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.cap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cap.is_empty()
    }

    pub fn lhs_mass(&self) -> f64 {
        self.lhs.iter().sum()
    }

    pub fn rhs_mass(&self) -> f64 {
        self.rhs.iter().sum()
    }

    /// `F(s * mu, t * nu)` on this cube.
    pub fn distance(&self, s: f64, t: f64, route: Route) -> Result<f64> {
        let c: Vec<f64> = self
            .lhs
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| s * a - t * b)
            .collect();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let one_side = |c: &[f64]| -> Result<f64> {
            if self.dim == 1 && route == Route::Auto {
                let sol = solve_chain(&self.points, c, &self.cap);
                Ok(sol.value.max(sol.witness_value(c)))
            } else {
                Ok(solve_lipschitz(&self.points, self.dim, c, &self.cap)?.value)
            }
        };
        let (up, down) = rayon::join(|| one_side(&c), || one_side(&neg));
        Ok(up?.max(down?).max(0.0))
    }
}

/// `F_a(mu, nu)`.
pub fn f_a(mu: &AtomicMeasure, nu: &AtomicMeasure, a: i32) -> Result<f64> {
    f_a_via(mu, nu, a, Route::Auto)
}

pub fn f_a_via(mu: &AtomicMeasure, nu: &AtomicMeasure, a: i32, route: Route) -> Result<f64> {
    PairOnCube::new(mu, nu, pow3(a) / 2.0)?.distance(1.0, 1.0, route)
}

/// `U_a(nu, eps)` membership: `F_a(mu, nu) < eps`.
pub fn in_ball(mu: &AtomicMeasure, nu: &AtomicMeasure, a: i32, eps: f64) -> Result<bool> {
    Ok(f_a(mu, nu, a)? < eps)
}

/// Default truncation level of the summed metric.
pub const DEFAULT_A_MAX: u32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricResult {
    pub value: f64,
    pub certified_error: f64,
    pub saturation_level: Option<u32>,
}

/// `d(mu, nu) = sum_a 2^{-a} min(1, F_a)`, truncated at `a_max`.
///
/// `F_a` is nondecreasing in `a`, so once a term saturates the tail is known
/// exactly.
pub fn d_metric(mu: &AtomicMeasure, nu: &AtomicMeasure, a_max: u32) -> Result<MetricResult> {
    let mut value = 0.0;
    for a in 1..=a_max {
        let f = f_a(mu, nu, a as i32)?;
        let w = 0.5f64.powi(a as i32);
        if f >= 1.0 {
            // Terms a..infinity each equal 2^{-a}; their sum is 2^{1-a}.
            return Ok(MetricResult {
                value: value + 2.0 * w,
                certified_error: 0.0,
                saturation_level: Some(a),
            });
        }
        value += w * f;
    }
    Ok(MetricResult {
        value,
        certified_error: 0.5f64.powi(a_max as i32),
        saturation_level: None,
    })
}

/// Minimiser of `c -> F_a(c mu, nu)` and the minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BestConstant {
    pub c: f64,
    pub value: f64,
}

/// Relative tolerance of [`best_constant`].
pub const BEST_CONSTANT_RTOL: f64 = 1e-6;

/// Minimises the convex map `c -> F_a(c mu, nu)` by golden-section search
/// around the mass ratio `nu(I_a) / mu(I_a)`.
pub fn best_constant(mu: &AtomicMeasure, nu: &AtomicMeasure, a: i32) -> Result<BestConstant> {
    let pair = PairOnCube::new(mu, nu, pow3(a) / 2.0)?;
    let m = pair.lhs_mass();
    if m <= 0.0 {
        return Err(Error::ZeroMass(format!("lhs has no mass on closed I_{a}")));
    }
    let f = |c: f64| pair.distance(c, 1.0, Route::Auto);
    let ratio = pair.rhs_mass() / m;
    let center = if ratio > 0.0 { ratio } else { 1.0 / m };
    let (mut lo, mut hi) = (center / 4.0, center * 4.0);
    // Grow the bracket until the interior beats both ends.
    for _ in 0..60 {
        let (flo, fmid, fhi) = (f(lo)?, f((lo + hi) / 2.0)?, f(hi)?);
        if fhi < fmid {
            hi *= 4.0;
        } else if flo < fmid && lo > f64::MIN_POSITIVE * 1e10 {
            lo /= 4.0;
        } else {
            break;
        }
    }
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > BEST_CONSTANT_RTOL * (lo + hi) / 2.0 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let c = (lo + hi) / 2.0;
    let mut best = BestConstant { c, value: f(c)? };
    if ratio > 0.0 {
        let at_ratio = f(ratio)?;
        if at_ratio <= best.value {
            best = BestConstant {
                c: ratio,
                value: at_ratio,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize_lebesgue, AxisBox};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dirac(x: f64) -> AtomicMeasure {
        AtomicMeasure::dirac(&[x], 1.0).unwrap()
    }

    #[test]
    fn f_a_examples() {
        let z = AtomicMeasure::zero(1);
        assert_abs_diff_eq!(f_a(&dirac(0.0), &z, 1).unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f_a(&dirac(0.0), &dirac(0.5), 1).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(f_a(&dirac(0.3), &dirac(0.3), 2).unwrap(), 0.0);
        let r = f_a_via(&dirac(0.0), &dirac(0.5), 1, Route::Simplex).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn upper_boundary_atoms_have_zero_cap() {
        let z = AtomicMeasure::zero(1);
        assert_eq!(f_a(&dirac(1.5), &z, 1).unwrap(), 0.0);
        assert_eq!(f_a(&dirac(-1.5), &z, 1).unwrap(), 0.0);
        assert_eq!(f_a(&dirac(7.0), &z, 1).unwrap(), 0.0);
    }

    #[test]
    fn d_metric_examples() {
        let r = d_metric(&dirac(0.0), &dirac(0.0), 20).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.certified_error, 2f64.powi(-20));
        let r = d_metric(&dirac(0.0), &AtomicMeasure::zero(1), 20).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.certified_error, 0.0);
        assert_eq!(r.saturation_level, Some(1));
    }

    #[test]
    fn in_ball_examples() {
        assert!(!in_ball(&dirac(0.0), &dirac(0.5), 1, 0.4).unwrap());
        assert!(in_ball(&dirac(0.0), &dirac(0.5), 1, 0.6).unwrap());
        assert!(in_ball(&dirac(0.0), &dirac(0.0), 1, 1e-12).unwrap());
    }

    #[test]
    fn best_constant_examples() {
        let mu = AtomicMeasure::from_atoms(1, &[([0.1], 1.0), ([-0.4], 2.0)]).unwrap();
        let nu = mu.scaled(2.0).unwrap();
        let b = best_constant(&mu, &nu, 1).unwrap();
        assert_abs_diff_eq!(b.c, 2.0, epsilon = 2e-6);
        assert!(b.value < 1e-5);
        let b = best_constant(&dirac(0.0), &dirac(0.5), 1).unwrap();
        assert_abs_diff_eq!(b.value, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn best_constant_is_unimodal_on_a_grid() {
        let mu = AtomicMeasure::from_atoms(1, &[([0.0], 1.0), ([0.7], 0.5)]).unwrap();
        let nu = AtomicMeasure::from_atoms(1, &[([0.2], 3.0), ([-0.9], 1.0)]).unwrap();
        let b = best_constant(&mu, &nu, 1).unwrap();
        let grid: Vec<(f64, f64)> = (1..200)
            .map(|i| {
                let c = i as f64 * 0.05;
                (c, f_a(&mu.scaled(c).unwrap(), &nu, 1).unwrap())
            })
            .collect();
        for w in grid.windows(2) {
            if w[1].0 <= b.c {
                assert!(w[1].1 <= w[0].1 + 1e-9);
            } else if w[0].0 >= b.c {
                assert!(w[1].1 >= w[0].1 - 1e-9);
            }
        }
        assert!(grid.iter().all(|(_, v)| *v >= b.value - 1e-7));
    }

    #[test]
    fn discretization_error_bound() {
        for (d, h) in [(1usize, 0.25), (1, 0.1), (2, 0.5)] {
            let b = AxisBox::centered(d, 1.0).unwrap();
            let fine = discretize_lebesgue(&b, h / 5.0).unwrap();
            let coarse = discretize_lebesgue(&b, h).unwrap();
            // The fine grid stands in for Lebesgue; the bound applies to both
            // atomisations, so the coarse one is within twice the bound.
            let bound = (d as f64).sqrt() * h / 2.0 * b.volume();
            let f = f_a(&fine, &coarse, 1).unwrap();
            assert!(f <= bound + 1e-9, "d={d} h={h}: {f} > {bound}");
        }
    }

    fn measure_strategy() -> impl Strategy<Value = AtomicMeasure> {
        prop::collection::vec((-2.0f64..2.0, 0.05f64..2.0), 1..6).prop_map(|v| {
            let atoms: Vec<(Vec<f64>, f64)> = v.into_iter().map(|(x, w)| (vec![x], w)).collect();
            AtomicMeasure::from_atoms(1, &atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metric_axioms(mu in measure_strategy(), nu in measure_strategy(), la in measure_strategy(), a in 0i32..3) {
            let mn = f_a(&mu, &nu, a).unwrap();
            prop_assert!((mn - f_a(&nu, &mu, a).unwrap()).abs() < 1e-9);
            prop_assert!(f_a(&mu, &mu, a).unwrap().abs() < 1e-9);
            let ml = f_a(&mu, &la, a).unwrap();
            let ln = f_a(&la, &nu, a).unwrap();
            prop_assert!(mn <= ml + ln + 1e-9);
        }

        #[test]
        fn monotone_in_a(mu in measure_strategy(), nu in measure_strategy(), a in 0i32..3) {
            prop_assert!(f_a(&mu, &nu, a).unwrap() <= f_a(&mu, &nu, a + 1).unwrap() + 1e-9);
        }

        #[test]
        fn homogeneous(mu in measure_strategy(), nu in measure_strategy(), t in 0.1f64..10.0) {
            let lhs = f_a(&mu.scaled(t).unwrap(), &nu.scaled(t).unwrap(), 1).unwrap();
            let rhs = t * f_a(&mu, &nu, 1).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs));
        }

        #[test]
        fn routes_agree(mu in measure_strategy(), nu in measure_strategy()) {
            let a = f_a_via(&mu, &nu, 1, Route::Auto).unwrap();
            let b = f_a_via(&mu, &nu, 1, Route::Simplex).unwrap();
            prop_assert!((a - b).abs() < 1e-7);
        }

        #[test]
        fn d_metric_symmetric_and_triangle(mu in measure_strategy(), nu in measure_strategy(), la in measure_strategy()) {
            let mn = d_metric(&mu, &nu, 8).unwrap();
            let nm = d_metric(&nu, &mu, 8).unwrap();
            prop_assert!((mn.value - nm.value).abs() < 1e-9);
            let ml = d_metric(&mu, &la, 8).unwrap();
            let ln = d_metric(&la, &nu, 8).unwrap();
            let slack = mn.certified_error + ml.certified_error + ln.certified_error;
            prop_assert!(mn.value <= ml.value + ln.value + slack + 1e-9);
        }
    }
}
