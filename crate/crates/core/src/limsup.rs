//! Borel–Cantelli bounds on finite probability spaces and the central-cube
//! event systems built from certified generations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::measure::{AtomicMeasure, AxisBox};
use crate::triadic::{cubes_inside, standard_box};
use crate::typical::certify_generation;
use crate::{Error, Result};

/// Tolerance on the total probability of a [`FiniteProbSpace`].
pub const TOTAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteProbSpace {
    labels: Vec<String>,
    probs: Vec<f64>,
}

impl FiniteProbSpace {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::OutOfRange(format!("probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOTAL_TOL {
            return Err(Error::OutOfRange(format!("probabilities sum to {total}")));
        }
        Ok(Self { labels, probs })
    }

    /// Uniform space on `n` outcomes labelled `0..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(
            (0..n).map(|i| i.to_string()).collect(),
            vec![1.0 / n as f64; n],
        )
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prob(&self, event: &[usize]) -> f64 {
        event.iter().map(|&i| self.probs[i]).sum()
    }
}

/// Events `A_1, ..., A_N` as sorted sets of outcome indices.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSeq {
    events: Vec<Vec<usize>>,
}

impl EventSeq {
    pub fn new(space: &FiniteProbSpace, mut events: Vec<Vec<usize>>) -> Result<Self> {
        for e in &mut events {
            e.sort_unstable();
            e.dedup();
            if let Some(&i) = e.iter().find(|&&i| i >= space.len()) {
                return Err(Error::OutOfRange(format!(
                    "outcome {i} of a space with {} outcomes",
                    space.len()
                )));
            }
        }
        Ok(Self { events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Vec<usize>] {
        &self.events
    }

    /// Number of the first `n` events containing each outcome.
    fn multiplicity(&self, outcomes: usize, n: usize) -> Vec<u64> {
        let mut count = vec![0u64; outcomes];
        for e in &self.events[..n] {
            for &i in e {
                count[i] += 1;
            }
        }
        count
    }
}

fn check_prefix(events: &EventSeq, n: usize) -> Result<()> {
    if n == 0 || n > events.len() {
        return Err(Error::OutOfRange(format!(
            "N = {n} for {} events",
            events.len()
        )));
    }
    Ok(())
}

/// `(sum_{n<=N} P(A_n))^2 / sum_{n,l<=N} P(A_n ∩ A_l)`.
///
/// Both sums are taken outcome by outcome through the number of events
/// containing it, so the value does not depend on the order of the events.
pub fn bc_lower_bound(space: &FiniteProbSpace, events: &EventSeq, n: usize) -> Result<f64> {
    check_prefix(events, n)?;
    let count = events.multiplicity(space.len(), n);
    let mut first = 0.0;
    let mut second = 0.0;
    for (p, &c) in space.probs.iter().zip(&count) {
        first += p * c as f64;
        second += p * (c * c) as f64;
    }
    if second <= 0.0 {
        return Err(Error::Undefined("every event is null".into()));
    }
    Ok(first * first / second)
}

/// Exact value of [`bc_lower_bound`] for the binary values of the probabilities.
pub fn bc_lower_bound_exact(space: &FiniteProbSpace, events: &EventSeq, n: usize) -> Result<BigRational> {
    check_prefix(events, n)?;
    let count = events.multiplicity(space.len(), n);
    let mut first = BigRational::zero();
    let mut second = BigRational::zero();
    for (p, &c) in space.probs.iter().zip(&count) {
        let p = exact(*p);
        let c = BigRational::from_integer(BigInt::from(c));
        first += &p * &c;
        second += &p * &c * &c;
    }
    if second.is_zero() {
        return Err(Error::Undefined("every event is null".into()));
    }
    Ok(&first * &first / second)
}

/// `P(A_1 ∪ ... ∪ A_N)`, which is `P(limsup A_n)` for the periodic extension.
pub fn periodic_limsup_prob(space: &FiniteProbSpace, events: &EventSeq) -> f64 {
    let count = events.multiplicity(space.len(), events.len());
    space
        .probs
        .iter()
        .zip(&count)
        .filter(|(_, &c)| c > 0)
        .map(|(p, _)| p)
        .sum()
}

/// On-disk form of an event system.
#[derive(Debug, Serialize, Deserialize)]
pub struct EventFile {
    pub outcomes: Vec<OutcomeRecord>,
    pub events: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub label: String,
    pub p: f64,
}

impl EventFile {
    pub fn into_system(self) -> Result<(FiniteProbSpace, EventSeq)> {
        let (labels, probs) = self.outcomes.into_iter().map(|o| (o.label, o.p)).unzip();
        let space = FiniteProbSpace::new(labels, probs)?;
        let events = EventSeq::new(&space, self.events)?;
        Ok((space, events))
    }
}

/// The exact rational value of a float.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn exact_sum(xs: impl Iterator<Item = f64>) -> BigRational {
    xs.fold(BigRational::zero(), |acc, x| acc + exact(x))
}

/// `(1 + 2 beta) / (1 - 2 beta)`.
pub fn rho_exact(beta: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    (BigRational::one() + &two * beta) / (BigRational::one() - &two * beta)
}

#[derive(Clone, Debug, Serialize)]
pub struct EventReport {
    pub k: i32,
    pub probability: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
    pub within_exact: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub k: i32,
    pub l: i32,
    pub probability: f64,
    pub bound: f64,
    pub within: bool,
    pub within_exact: bool,
}

/// The events `A_{a,n}^b` of one measure and their bounds.
#[derive(Clone, Debug, Serialize)]
pub struct CubeEventSystem {
    pub a: u32,
    pub b: i32,
    pub beta: f64,
    pub p: f64,
    pub rho: f64,
    pub events: Vec<EventReport>,
    pub pairs: Vec<PairReport>,
    pub bc_bound: f64,
    /// `N p / (rho^2 (rho + (N - 1) rho^2 p))`, the bound the proof gives for `N` events.
    pub finite_n_target: f64,
    /// `rho^{-4}`, the limit of `finite_n_target`.
    pub asymptotic_target: f64,
    #[serde(skip)]
    pub space: FiniteProbSpace,
    #[serde(skip)]
    pub sequence: EventSeq,
}

/// Builds `P = mu(I_b)^{-1} mu ⌞ I_b` and the events
/// `A_{a,k}^b = I_b ∩ ⋃ Q_c` over `Q ∈ Q_a^k`, `Q ⊂ I_b`, for each `k` in
/// `k_list`. Every listed generation must be certified on all cubes `Q ⊂ I_a`.
pub fn cube_event_system(
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    a: u32,
    b: i32,
    k_list: &[i32],
    window: &AxisBox,
    beta: Option<f64>,
) -> Result<CubeEventSystem> {
    let d = mu.dim();
    let ib = standard_box(b, d);
    let local = mu.restrict(&ib)?;
    let total_exact = exact_sum(local.weights().iter().copied());
    if local.total_mass() <= 0.0 {
        return Err(Error::ZeroMass(format!("mu(I_{b}) = 0")));
    }
    let total = local.total_mass();
    let space = FiniteProbSpace::new(
        (0..local.len()).map(|i| format!("{:?}", local.position(i))).collect(),
        local.weights().iter().map(|w| w / total).collect(),
    )
    .or_else(|_| {
        // Normalised floats may miss one by more than the tolerance only for
        // huge atom counts; fall back to renormalising the last weight.
        let mut probs: Vec<f64> = local.weights().iter().map(|w| w / total).collect();
        let rest: f64 = probs[..probs.len() - 1].iter().sum();
        *probs.last_mut().unwrap() = 1.0 - rest;
        FiniteProbSpace::new(
            (0..local.len()).map(|i| format!("{:?}", local.position(i))).collect(),
            probs,
        )
    })?;

    let mut chosen_beta = None;
    let mut nu_masses = None;
    let mut events = Vec::new();
    for &k in k_list {
        let certs = certify_generation(mu, nu, a, k, window, beta)?;
        if !certs.iter().all(|c| c.passed()) {
            return Err(Error::UncertifiedGeneration(k));
        }
        let ev = certs[0].evidence.as_ref().expect("passed certificates carry evidence");
        chosen_beta = Some(ev.epsilon.beta_a);
        nu_masses = Some((ev.nu_inner, ev.nu_outer));
        let centrals: Vec<AxisBox> = cubes_inside(a, k, &ib)
            .iter()
            .map(|q| q.central_cube().to_box())
            .collect();
        let members: Vec<usize> = (0..local.len())
            .filter(|&i| {
                let p = local.position(i);
                centrals.iter().any(|c| c.contains(p))
            })
            .collect();
        events.push(members);
    }
    let beta_a = chosen_beta.ok_or_else(|| Error::OutOfRange("empty generation list".into()))?;
    let (nu_inner, nu_outer) = nu_masses.expect("set with beta");
    let sequence = EventSeq::new(&space, events)?;

    let p = nu_inner / nu_outer;
    let rho = (1.0 + 2.0 * beta_a) / (1.0 - 2.0 * beta_a);
    let p_exact = {
        let ib_a = nu.restrict(&standard_box(a as i32, d))?;
        let inner = nu.restrict(&standard_box(-(a as i32), d))?;
        exact_sum(inner.weights().iter().copied()) / exact_sum(ib_a.weights().iter().copied())
    };
    let rho_q = rho_exact(&exact(beta_a));
    let event_exact = |e: &[usize]| exact_sum(e.iter().map(|&i| local.weight(i))) / &total_exact;

    let reports = k_list
        .iter()
        .zip(sequence.events())
        .map(|(&k, e)| {
            let probability = space.prob(e);
            let q = event_exact(e);
            EventReport {
                k,
                probability,
                lower: p / rho,
                upper: rho * p,
                within: p / rho <= probability && probability <= rho * p,
                within_exact: &p_exact / &rho_q <= q && q <= &rho_q * &p_exact,
            }
        })
        .collect();
    let mut pairs = Vec::new();
    let bound_exact = &rho_q * &rho_q * &p_exact * &p_exact;
    for i in 0..k_list.len() {
        for j in i + 1..k_list.len() {
            if k_list[i] == k_list[j] {
                continue;
            }
            let both: Vec<usize> = intersect(&sequence.events()[i], &sequence.events()[j]);
            let probability = space.prob(&both);
            let bound = rho * rho * p * p;
            pairs.push(PairReport {
                k: k_list[i],
                l: k_list[j],
                probability,
                bound,
                within: probability <= bound,
                within_exact: event_exact(&both) <= bound_exact,
            });
        }
    }
    let n = sequence.len();
    let bc_bound = bc_lower_bound(&space, &sequence, n)?;
    let nf = n as f64;
    Ok(CubeEventSystem {
        a,
        b,
        beta: beta_a,
        p,
        rho,
        events: reports,
        pairs,
        bc_bound,
        finite_n_target: nf * p / (rho * rho * (rho + (nf - 1.0) * rho * rho * p)),
        asymptotic_target: rho.powi(-4),
        space,
        sequence,
    })
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingRow {
    pub r: f64,
    pub inner: f64,
    pub outer: f64,
    /// `mu(B(x, 2r)) / mu(B(x, r))`, absent when the inner mass vanishes.
    pub ratio: Option<f64>,
    /// Set when `mu(B(x, r)) = 0 < mu(B(x, 2r))`.
    pub infinite_candidate: bool,
}

/// Ratios `mu(B(x, 2r)) / mu(B(x, r))` for `r = r0 factor^{-i}`, `i < count`.
pub fn doubling_scan(mu: &AtomicMeasure, x: &[f64], r0: f64, factor: f64, count: usize) -> Result<Vec<DoublingRow>> {
    if !(r0 > 0.0 && factor > 1.0) {
        return Err(Error::OutOfRange(format!("r0 = {r0}, factor = {factor}")));
    }
    Ok((0..count)
        .map(|i| {
            let r = r0 * factor.powi(-(i as i32));
            let inner = mu.mass_ball(x, r);
            let outer = mu.mass_ball(x, 2.0 * r);
            DoublingRow {
                r,
                inner,
                outer,
                ratio: (inner > 0.0).then(|| outer / inner),
                infinite_candidate: inner == 0.0 && outer > 0.0,
            }
        })
        .collect())
}
