//! Points of a measure on the line where the half-line Lebesgue measure is not
//! a tangent measure.
//!
//! Measures are [`LineMeasure`]s: atoms plus piecewise constant densities, so
//! that blow-ups over many orders of magnitude stay exact. Distances to the
//! Heaviside reference are bracketed: the density pieces are split into cells
//! of width at most `h` for the chain solver, and the maximiser is then
//! integrated exactly against the undiscretised measures, which yields a
//! lower bound free of discretisation error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::line::solve_chain;
use crate::measure::AtomicMeasure;
use crate::{Error, Result};

/// Half side of the search window `I_3`.
pub const SEARCH_HALF: f64 = 13.5;
/// Half side of the certificate window `I_2`.
pub const CERTIFICATE_HALF: f64 = 4.5;
/// `mu(B(x, r)) <= 52 mu(B(y_i, r_i))` in the iteration; the threshold is
/// `min(eps' / 52, eps^2)`.
pub const MASS_RATIO_BOUND: f64 = 52.0;
/// Allowance on certificate rows.
pub const PASS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

/// A finite measure on the line: atoms and constant densities on intervals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineMeasure {
    atoms: Vec<(f64, f64)>,
    segments: Vec<Segment>,
}

impl LineMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>, segments: Vec<Segment>) -> Result<Self> {
        for &(x, w) in &atoms {
            if !x.is_finite() {
                return Err(Error::NonFiniteCoordinate);
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonPositiveWeight(w));
            }
        }
        for s in &segments {
            if !(s.lo.is_finite() && s.hi.is_finite() && s.lo < s.hi) {
                return Err(Error::InvalidBox(format!("[{}, {}]", s.lo, s.hi)));
            }
            if !(s.density > 0.0 && s.density.is_finite()) {
                return Err(Error::NonPositiveWeight(s.density));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Ok(Self {
            atoms: merged,
            segments,
        })
    }

    /// Lebesgue measure on `[lo, hi]`.
    pub fn lebesgue(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![Segment { lo, hi, density: 1.0 }])
    }

    pub fn from_atomic(mu: &AtomicMeasure) -> Result<Self> {
        if mu.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: mu.dim(),
            });
        }
        Self::new(mu.atoms().map(|(p, w)| (p[0], w)).collect(), Vec::new())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.segments.is_empty()
    }

    pub fn plus(&self, other: &LineMeasure) -> Result<Self> {
        Self::new(
            self.atoms.iter().chain(&other.atoms).copied().collect(),
            self.segments.iter().chain(&other.segments).copied().collect(),
        )
    }

    /// Mass of the closed interval `[lo, hi]`.
    pub fn mass_closed(&self, lo: f64, hi: f64) -> f64 {
        let start = self.atoms.partition_point(|a| a.0 < lo);
        let end = self.atoms.partition_point(|a| a.0 <= hi);
        let atoms: f64 = self.atoms[start..end].iter().map(|a| a.1).sum();
        let dens: f64 = self
            .segments
            .iter()
            .map(|s| (s.hi.min(hi) - s.lo.max(lo)).max(0.0) * s.density)
            .sum();
        atoms + dens
    }

    pub fn mass_ball(&self, x: f64, r: f64) -> f64 {
        self.mass_closed(x - r, x + r)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>()
            + self.segments.iter().map(|s| (s.hi - s.lo) * s.density).sum::<f64>()
    }

    /// `c T_{x,r#}`: atoms move to `(p - x) / r` with weight `c w`; densities
    /// become `c r` times larger on the rescaled intervals.
    pub fn blowup(&self, x: f64, r: f64, c: f64) -> Result<Self> {
        if !(r > 0.0 && c > 0.0) {
            return Err(Error::OutOfRange(format!("r = {r}, c = {c}")));
        }
        Ok(Self {
            atoms: self.atoms.iter().map(|&(p, w)| ((p - x) / r, c * w)).collect(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    lo: (s.lo - x) / r,
                    hi: (s.hi - x) / r,
                    density: s.density * c * r,
                })
                .collect(),
        })
    }

    /// Blow-up normalised so that `B(x, r)` maps to unit mass.
    pub fn normalized_blowup(&self, x: f64, r: f64) -> Result<Self> {
        let mass = self.mass_ball(x, r);
        if mass <= 0.0 {
            return Err(Error::ZeroMass(format!("mu(B({x}, {r})) = 0")));
        }
        self.blowup(x, r, 1.0 / mass)
    }

    /// A point `t` of `[lo, hi]` splitting the mass of the interval in half.
    pub fn median(&self, lo: f64, hi: f64) -> Result<f64> {
        let total = self.mass_closed(lo, hi);
        if total <= 0.0 {
            return Err(Error::ZeroMass(format!("no mass in [{lo}, {hi}]")));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.mass_closed(lo, m) >= 0.5 * total {
                b = m;
            } else {
                a = m;
            }
        }
        Ok(b)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Reads `{ "dim": 1, "atoms": [..], "segments": [..] }`; `segments` is optional.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: LineMeasureFile = serde_json::from_str(text)?;
        if file.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: file.dim,
            });
        }
        let atoms = file
            .atoms
            .into_iter()
            .map(|a| {
                if a.x.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        got: a.x.len(),
                    });
                }
                Ok((a.x[0], a.w))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms, file.segments)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LineMeasureFile {
    dim: usize,
    #[serde(default)]
    atoms: Vec<crate::measure::AtomRecord>,
    #[serde(default)]
    segments: Vec<Segment>,
}

/// Bracket for `F` on `[-half, half]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DistanceBounds {
    /// Value of the discretised program.
    pub estimate: f64,
    /// Exact value of the discretised maximiser against the true measures.
    pub lower: f64,
    /// `estimate + slack`.
    pub upper: f64,
    /// Worst-case cell error `sum |density| len^2 / 4`.
    pub slack: f64,
}

/// Signed density on elementary intervals of `[-half, half]`.
fn signed_pieces(sigma: &LineMeasure, tau: &LineMeasure, half: f64) -> Vec<Segment> {
    let mut cuts = vec![-half, half];
    let signed = sigma
        .segments
        .iter()
        .map(|s| (s, 1.0))
        .chain(tau.segments.iter().map(|s| (s, -1.0)));
    for (s, _) in signed.clone() {
        for e in [s.lo, s.hi] {
            if e > -half && e < half {
                cuts.push(e);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let density: f64 = signed
            .clone()
            .filter(|(s, _)| s.lo <= mid && mid <= s.hi)
            .map(|(s, sign)| sign * s.density)
            .sum();
        if density != 0.0 {
            out.push(Segment { lo, hi, density });
        }
    }
    out
}

fn interpolate(xs: &[f64], phi: &[f64], half: f64, t: f64) -> f64 {
    let i = xs.partition_point(|&x| x <= t);
    let (x0, y0) = if i == 0 { (-half, 0.0) } else { (xs[i - 1], phi[i - 1]) };
    let (x1, y1) = if i == xs.len() { (half, 0.0) } else { (xs[i], phi[i]) };
    if x1 <= x0 {
        return y0;
    }
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

/// `int_lo^hi` of the piecewise linear interpolant of `(xs, phi)`, which
/// vanishes at `-half` and `half`.
fn integrate(xs: &[f64], phi: &[f64], half: f64, lo: f64, hi: f64) -> f64 {
    let start = xs.partition_point(|&x| x <= lo);
    let end = xs.partition_point(|&x| x < hi);
    let mut knots = Vec::with_capacity(end - start + 2);
    knots.push((lo, interpolate(xs, phi, half, lo)));
    for i in start..end {
        knots.push((xs[i], phi[i]));
    }
    knots.push((hi, interpolate(xs, phi, half, hi)));
    knots
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Brackets `F` between `sigma` and `tau` on the window `[-half, half]`,
/// splitting density pieces into cells no wider than `h`.
pub fn distance_bounds(sigma: &LineMeasure, tau: &LineMeasure, half: f64, h: f64) -> Result<DistanceBounds> {
    if !(h > 0.0 && half > 0.0) {
        return Err(Error::OutOfRange(format!("h = {h}, half = {half}")));
    }
    let pieces = signed_pieces(sigma, tau, half);
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let inside = |x: f64| (-half..=half).contains(&x);
    nodes.extend(sigma.atoms.iter().filter(|a| inside(a.0)).copied());
    nodes.extend(tau.atoms.iter().filter(|a| inside(a.0)).map(|&(x, w)| (x, -w)));
    let mut slack = 0.0;
    for p in &pieces {
        let cells = ((p.hi - p.lo) / h).ceil().max(1.0) as usize;
        let len = (p.hi - p.lo) / cells as f64;
        for j in 0..cells {
            nodes.push((p.lo + (j as f64 + 0.5) * len, p.density * len));
        }
        slack += p.density.abs() * len * (p.hi - p.lo) / 4.0;
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut cs: Vec<f64> = Vec::with_capacity(nodes.len());
    for (x, c) in nodes {
        if xs.last() == Some(&x) {
            *cs.last_mut().unwrap() += c;
        } else {
            xs.push(x);
            cs.push(c);
        }
    }
    let cap: Vec<f64> = xs.iter().map(|x| (half - x.abs()).max(0.0)).collect();
    let neg: Vec<f64> = cs.iter().map(|c| -c).collect();
    let (plus, minus) = rayon::join(|| solve_chain(&xs, &cs, &cap), || solve_chain(&xs, &neg, &cap));
    let estimate = plus.value.max(minus.value).max(0.0);

    let exact_value = |phi: &[f64]| -> f64 {
        let atoms: f64 = sigma
            .atoms
            .iter()
            .filter(|a| inside(a.0))
            .map(|&(x, w)| w * interpolate(&xs, phi, half, x))
            .sum::<f64>()
            - tau
                .atoms
                .iter()
                .filter(|a| inside(a.0))
                .map(|&(x, w)| w * interpolate(&xs, phi, half, x))
                .sum::<f64>();
        let dens: f64 = pieces
            .iter()
            .map(|p| p.density * integrate(&xs, phi, half, p.lo, p.hi))
            .sum();
        atoms + dens
    };
    let lower = exact_value(&plus.phi).max(-exact_value(&minus.phi)).max(0.0);
    Ok(DistanceBounds {
        estimate,
        lower,
        upper: estimate + slack,
        slack,
    })
}

/// `F_3` between the normalised blow-up of `mu` at `(y, s)` and `L^+` on `I_3`.
pub fn f3_heaviside(mu: &LineMeasure, y: f64, s: f64, h: f64) -> Result<DistanceBounds> {
    let blown = mu.normalized_blowup(y, s)?;
    distance_bounds(&blown, &LineMeasure::lebesgue(0.0, SEARCH_HALF)?, SEARCH_HALF, h)
}

/// `F_2` between the normalised blow-up of `mu` at `(x, r)` and `reference`.
pub fn f2_against(mu: &LineMeasure, x: f64, r: f64, reference: &LineMeasure, h: f64) -> Result<DistanceBounds> {
    let blown = mu.normalized_blowup(x, r)?;
    distance_bounds(&blown, reference, CERTIFICATE_HALF, h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// A support point `x` with no mass on one side within `eps_gap`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Gap {
    pub x: f64,
    pub eps_gap: f64,
    pub side: Side,
    /// False when the gap runs into the edge of the scanned window.
    pub interior: bool,
}

/// The largest one-sided gap of width at least `resolution` next to the
/// support of `mu` inside `[lo, hi]`. Gaps between two pieces of support are
/// preferred to gaps reaching the window edge.
pub fn support_gap_scan(mu: &LineMeasure, window: (f64, f64), resolution: f64) -> Option<Gap> {
    let (lo, hi) = window;
    let mut parts: Vec<(f64, f64)> = mu
        .atoms
        .iter()
        .filter(|a| a.0 >= lo && a.0 <= hi)
        .map(|a| (a.0, a.0))
        .chain(
            mu.segments
                .iter()
                .filter(|s| s.hi > lo && s.lo < hi)
                .map(|s| (s.lo.max(lo), s.hi.min(hi))),
        )
        .collect();
    if parts.is_empty() {
        return None;
    }
    parts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut comps: Vec<(f64, f64)> = Vec::new();
    for (a, b) in parts {
        match comps.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => comps.push((a, b)),
        }
    }
    let mut best: Option<Gap> = None;
    let mut consider = |g: Gap| {
        if g.eps_gap < resolution {
            return;
        }
        let better = match &best {
            None => true,
            Some(b) => (g.interior, g.eps_gap) > (b.interior, b.eps_gap),
        };
        if better {
            best = Some(g);
        }
    };
    for w in comps.windows(2) {
        let width = w[1].0 - w[0].1;
        consider(Gap { x: w[0].1, eps_gap: width, side: Side::Right, interior: true });
        consider(Gap { x: w[1].0, eps_gap: width, side: Side::Left, interior: true });
    }
    let last = comps[comps.len() - 1];
    consider(Gap { x: last.1, eps_gap: hi - last.1, side: Side::Right, interior: false });
    consider(Gap { x: comps[0].0, eps_gap: comps[0].0 - lo, side: Side::Left, interior: false });
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessConfig {
    pub eps: f64,
    /// Initial scales, tried in order.
    pub r0_candidates: Vec<f64>,
    pub i_max: u32,
    pub y_grid_points: usize,
    pub s_grid_points: usize,
    /// Cell width for the chain solver, in blown-up coordinates.
    pub h: f64,
    pub cert_scales: usize,
    /// Base point; the mass median of `window` when absent.
    pub y0: Option<f64>,
    pub window: (f64, f64),
}

impl SharpnessConfig {
    pub fn new(eps: f64, window: (f64, f64)) -> Result<Self> {
        let cfg = Self {
            eps,
            r0_candidates: vec![1.0, 0.5, 0.25, 0.1],
            i_max: 12,
            y_grid_points: 5,
            s_grid_points: 5,
            h: 1e-3,
            cert_scales: 50,
            y0: None,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0 / 20.0) {
            return Err(Error::OutOfRange(format!("eps = {} not in (0, 1/20)", self.eps)));
        }
        if self.y_grid_points == 0 || self.s_grid_points == 0 || self.cert_scales == 0 {
            return Err(Error::OutOfRange("empty grid".into()));
        }
        if !(self.h > 0.0) || self.r0_candidates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::OutOfRange("nonpositive scale".into()));
        }
        Ok(())
    }

    /// `eps / 16 - 5 eps^2 / 4`.
    pub fn eps_prime(&self) -> f64 {
        self.eps / 16.0 - 5.0 * self.eps * self.eps / 4.0
    }

    /// `min(eps' / 52, eps^2)`.
    pub fn threshold(&self) -> f64 {
        (self.eps_prime() / MASS_RATIO_BOUND).min(self.eps * self.eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    /// A one-sided gap next to the support.
    SupportGap,
    /// The iteration over `r_i = 4^{-i} r_0`.
    Iteration,
    /// No initial scale brings the blow-up at `y_0` within `eps^2` of `L^+`.
    NoInitialScale,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleRow {
    pub r: f64,
    pub mass: f64,
    pub bounds: Option<DistanceBounds>,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRow {
    pub i: u32,
    pub r: f64,
    pub y: Option<f64>,
    pub s: Option<f64>,
    pub distance: Option<f64>,
    pub x: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateRow {
    pub r: f64,
    pub mass: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpnessResult {
    pub case: Case,
    pub x: f64,
    pub y0: f64,
    pub r0: Option<f64>,
    pub eps: f64,
    pub eps_prime: f64,
    pub threshold: f64,
    pub gap: Option<Gap>,
    pub r0_scan: Vec<ScaleRow>,
    pub iterations: Vec<IterationRow>,
    pub certificate: Vec<CertificateRow>,
}

impl SharpnessResult {
    /// True when the certificate is nonempty and every row passes.
    pub fn passed(&self) -> bool {
        !self.certificate.is_empty() && self.certificate.iter().all(|r| r.pass)
    }

    /// Largest gap between the discretised value and the exact lower bound
    /// over the certificate rows.
    pub fn observed_slack(&self) -> f64 {
        self.certificate
            .iter()
            .map(|r| (r.estimate - r.lower).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn certificate_csv(&self) -> String {
        let mut out = String::from("r,mass,estimate,lower,upper,slack,threshold,pass\n");
        for r in &self.certificate {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.r, r.mass, r.estimate, r.lower, r.upper, r.slack, r.threshold, r.pass
            ));
        }
        out
    }
}

fn certificate(
    mu: &LineMeasure,
    x: f64,
    scales: &[f64],
    reference: &LineMeasure,
    h: f64,
    threshold: f64,
) -> Vec<CertificateRow> {
    scales
        .par_iter()
        .map(|&r| {
            let mass = mu.mass_ball(x, r);
            match f2_against(mu, x, r, reference, h) {
                Ok(b) => CertificateRow {
                    r,
                    mass,
                    estimate: b.estimate,
                    lower: b.lower,
                    upper: b.upper,
                    slack: b.slack,
                    threshold,
                    pass: b.lower >= threshold - PASS_TOL,
                },
                Err(_) => CertificateRow {
                    r,
                    mass,
                    estimate: f64::NAN,
                    lower: f64::NAN,
                    upper: f64::NAN,
                    slack: f64::NAN,
                    threshold,
                    pass: false,
                },
            }
        })
        .collect()
}

/// `count` scales `r_0 q^{j/count}`, `j = 0..count`, with `q = lowest / r_0`.
fn log_scales(r0: f64, lowest: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| r0 * (lowest / r0).powf(j as f64 / count as f64))
        .collect()
}

fn scan_r0(mu: &LineMeasure, y0: f64, cfg: &SharpnessConfig) -> Vec<ScaleRow> {
    let eps2 = cfg.eps * cfg.eps;
    cfg.r0_candidates
        .par_iter()
        .map(|&r| {
            let mass = mu.mass_ball(y0, r);
            let bounds = f3_heaviside(mu, y0, r, cfg.h).ok();
            let accepted = bounds.is_some_and(|b| b.upper < eps2);
            ScaleRow { r, mass, bounds, accepted }
        })
        .collect()
}

/// Runs the iteration from `y_0` and certifies the final point on
/// `cert_scales` scales in `(r_{i_max + 1}, r_0]`.
pub fn heaviside_avoider(mu: &LineMeasure, cfg: &SharpnessConfig) -> Result<SharpnessResult> {
    cfg.validate()?;
    if mu.is_zero() {
        return Err(Error::ZeroMass("zero measure".into()));
    }
    let y0 = match cfg.y0 {
        Some(y) => y,
        None => mu.median(cfg.window.0, cfg.window.1)?,
    };
    let eps2 = cfg.eps * cfg.eps;
    let threshold = cfg.threshold();
    let r0_scan = scan_r0(mu, y0, cfg);
    let mut result = SharpnessResult {
        case: Case::NoInitialScale,
        x: y0,
        y0,
        r0: None,
        eps: cfg.eps,
        eps_prime: cfg.eps_prime(),
        threshold,
        gap: None,
        r0_scan,
        iterations: Vec::new(),
        certificate: Vec::new(),
    };
    let Some(r0) = result.r0_scan.iter().find(|row| row.accepted).map(|row| row.r) else {
        return Ok(result);
    };
    result.case = Case::Iteration;
    result.r0 = Some(r0);
    let radius = |i: u32| r0 * 0.25f64.powi(i as i32);
    let mut x = y0 + r0;
    result.iterations.push(IterationRow {
        i: 0,
        r: r0,
        y: Some(y0),
        s: Some(r0),
        distance: result.r0_scan.iter().find(|row| row.accepted).and_then(|row| row.bounds.map(|b| b.upper)),
        x,
    });
    for i in 1..=cfg.i_max {
        let (ri, rnext) = (radius(i), radius(i + 1));
        let ny = cfg.y_grid_points;
        let ns = cfg.s_grid_points;
        let pairs: Vec<(f64, f64)> = (0..ny)
            .flat_map(|p| {
                let y = if ny == 1 { x } else { x + ri * p as f64 / (ny - 1) as f64 };
                (1..=ns).map(move |q| (y, rnext + (ri - rnext) * q as f64 / ns as f64))
            })
            .collect();
        let found = pairs
            .par_iter()
            .map(|&(y, s)| {
                f3_heaviside(mu, y, s, cfg.h)
                    .ok()
                    .filter(|b| b.upper < eps2)
                    .map(|b| (y, s, b.upper))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .next();
        let row = match found {
            Some((y, s, d)) => {
                x = y + ri;
                IterationRow { i, r: ri, y: Some(y), s: Some(s), distance: Some(d), x }
            }
            None => IterationRow { i, r: ri, y: None, s: None, distance: None, x },
        };
        result.iterations.push(row);
    }
    result.x = x;
    let scales = log_scales(r0, radius(cfg.i_max + 1), cfg.cert_scales);
    let reference = LineMeasure::lebesgue(0.0, CERTIFICATE_HALF)?;
    result.certificate = certificate(mu, x, &scales, &reference, cfg.h, threshold);
    Ok(result)
}

/// Uses a support gap inside the window when there is one, certifying that
/// `L` is not tangent there; otherwise runs [`heaviside_avoider`].
pub fn find_non_tangent_point(mu: &LineMeasure, cfg: &SharpnessConfig, resolution: f64) -> Result<SharpnessResult> {
    cfg.validate()?;
    match support_gap_scan(mu, cfg.window, resolution) {
        Some(gap) if gap.interior => {
            let threshold = cfg.threshold();
            let lowest = gap.eps_gap * 0.25f64.powi(cfg.i_max as i32 + 1);
            let scales = log_scales(gap.eps_gap, lowest, cfg.cert_scales);
            let reference = LineMeasure::lebesgue(-CERTIFICATE_HALF, CERTIFICATE_HALF)?;
            Ok(SharpnessResult {
                case: Case::SupportGap,
                x: gap.x,
                y0: gap.x,
                r0: None,
                eps: cfg.eps,
                eps_prime: cfg.eps_prime(),
                threshold,
                gap: Some(gap),
                r0_scan: Vec::new(),
                iterations: Vec::new(),
                certificate: certificate(mu, gap.x, &scales, &reference, cfg.h, threshold),
            })
        }
        _ => heaviside_avoider(mu, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{discretize_lebesgue, AxisBox};
    use crate::metric::f_a;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lebesgue_plus() -> LineMeasure {
        LineMeasure::lebesgue(0.0, 100.0).unwrap()
    }

    #[test]
    fn constants() {
        let cfg = SharpnessConfig::new(0.04, (-100.0, 100.0)).unwrap();
        assert_abs_diff_eq!(cfg.eps_prime(), 0.0005, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.threshold(), 0.0005 / 52.0, epsilon = 1e-15);
        assert!(SharpnessConfig::new(0.05, (0.0, 1.0)).is_err());
    }

    #[test]
    fn atomic_distance_matches_metric() {
        let mu = AtomicMeasure::from_atoms(1, &[([0.3], 1.0), ([-2.0], 0.5), ([7.0], 2.0)]).unwrap();
        let nu = AtomicMeasure::from_atoms(1, &[([1.1], 0.7), ([-4.4], 1.2)]).unwrap();
        let b = distance_bounds(
            &LineMeasure::from_atomic(&mu).unwrap(),
            &LineMeasure::from_atomic(&nu).unwrap(),
            SEARCH_HALF,
            0.1,
        )
        .unwrap();
        let exact = f_a(&mu, &nu, 3).unwrap();
        assert_abs_diff_eq!(b.estimate, exact, epsilon = 1e-9);
        assert_abs_diff_eq!(b.lower, exact, epsilon = 1e-9);
        assert_eq!(b.slack, 0.0);
    }

    #[test]
    fn density_distance_is_bracketed() {
        // A unit atom at 0 against Lebesgue on [-1/2, 1/2] in I_1: the best
        // test function is a tent of height 1/2, worth 1/2 - 1/4.
        let atom = LineMeasure::new(vec![(0.0, 1.0)], Vec::new()).unwrap();
        let leb = LineMeasure::lebesgue(-0.5, 0.5).unwrap();
        let b = distance_bounds(&atom, &leb, 1.5, 1e-3).unwrap();
        assert!(b.lower <= 0.25 + 1e-12 && 0.25 <= b.upper + 1e-12);
        assert_abs_diff_eq!(b.lower, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn heaviside_examples() {
        let plus = lebesgue_plus();
        for s in [1.0, 0.37, 1e-5] {
            let b = f3_heaviside(&plus, 0.0, s, 1e-2).unwrap();
            assert!(b.upper < 1e-12, "{b:?}");
        }
        let full = LineMeasure::lebesgue(-100.0, 100.0).unwrap();
        assert!(f3_heaviside(&full, 0.3, 1.0, 1e-2).unwrap().lower >= 1.0);
        let point = LineMeasure::new(vec![(0.3, 1.0)], Vec::new()).unwrap();
        assert!(f3_heaviside(&point, 0.3, 1.0, 1e-2).unwrap().lower >= 1.0);
        assert!(f3_heaviside(&point, 5.0, 1.0, 1e-2).is_err());
    }

    #[test]
    fn blowup_agrees_with_atomic() {
        let mu = discretize_lebesgue(&AxisBox::new(vec![-2.0], vec![2.0]).unwrap(), 0.25).unwrap();
        let line = LineMeasure::from_atomic(&mu).unwrap();
        let blown = line.blowup(0.5, 0.5, 2.0).unwrap();
        let direct = crate::blowup::blowup(&mu, &[0.5], 0.5, 2.0).unwrap();
        let back = LineMeasure::from_atomic(&direct).unwrap();
        for (a, b) in blown.atoms().iter().zip(back.atoms()) {
            assert_abs_diff_eq!(a.0, b.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.1, b.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        let point = LineMeasure::new(vec![(0.0, 1.0)], Vec::new()).unwrap();
        let g = support_gap_scan(&point, (-40.5, 40.5), 0.1).unwrap();
        assert_eq!((g.x, g.eps_gap, g.interior), (0.0, 40.5, false));

        let two = LineMeasure::new(
            Vec::new(),
            vec![
                Segment { lo: 0.0, hi: 1.0, density: 1.0 },
                Segment { lo: 2.0, hi: 3.0, density: 1.0 },
            ],
        )
        .unwrap();
        let g = support_gap_scan(&two, (-40.5, 40.5), 0.1).unwrap();
        assert_eq!((g.x, g.eps_gap, g.side, g.interior), (1.0, 1.0, Side::Right, true));

        let h = 1.0 / 81.0;
        let leb = discretize_lebesgue(&AxisBox::new(vec![-40.5], vec![40.5]).unwrap(), h).unwrap();
        let leb = LineMeasure::from_atomic(&leb).unwrap();
        assert!(support_gap_scan(&leb, (-40.5, 40.5), 2.0 * h).is_none());
    }

    #[test]
    fn lebesgue_has_no_initial_scale() {
        let full = LineMeasure::lebesgue(-100.0, 100.0).unwrap();
        let mut cfg = SharpnessConfig::new(0.04, (-100.0, 100.0)).unwrap();
        cfg.h = 1e-2;
        let res = heaviside_avoider(&full, &cfg).unwrap();
        assert_eq!(res.case, Case::NoInitialScale);
        assert!(res.certificate.is_empty());
    }

    #[test]
    fn heaviside_iteration_stays_put() {
        let mut cfg = SharpnessConfig::new(0.04, (0.0, 100.0)).unwrap();
        cfg.y0 = Some(0.0);
        cfg.h = 1e-2;
        cfg.i_max = 4;
        cfg.y_grid_points = 3;
        cfg.s_grid_points = 3;
        cfg.cert_scales = 8;
        let res = heaviside_avoider(&lebesgue_plus(), &cfg).unwrap();
        assert_eq!(res.case, Case::Iteration);
        assert_eq!(res.x, 1.0);
        assert!(res.iterations[1..].iter().all(|r| r.y.is_none()));
        assert!(res.passed());
    }

    #[test]
    fn gap_case_certifies() {
        let two = LineMeasure::new(
            Vec::new(),
            vec![
                Segment { lo: 0.0, hi: 1.0, density: 1.0 },
                Segment { lo: 2.0, hi: 3.0, density: 1.0 },
            ],
        )
        .unwrap();
        let mut cfg = SharpnessConfig::new(0.04, (-40.5, 40.5)).unwrap();
        cfg.h = 1e-2;
        cfg.cert_scales = 6;
        let res = find_non_tangent_point(&two, &cfg, 0.1).unwrap();
        assert_eq!(res.case, Case::SupportGap);
        assert!(res.passed());
    }

    proptest! {
        #[test]
        fn bounds_are_ordered(
            atoms in prop::collection::vec((-12.0f64..12.0, 0.01f64..2.0), 0..12),
            lo in -12.0f64..0.0,
            len in 0.1f64..10.0,
            density in 0.1f64..3.0,
        ) {
            let sigma = LineMeasure::new(atoms, Vec::new()).unwrap();
            let tau = LineMeasure::new(Vec::new(), vec![Segment { lo, hi: lo + len, density }]).unwrap();
            let b = distance_bounds(&sigma, &tau, SEARCH_HALF, 0.05).unwrap();
            prop_assert!(b.lower <= b.upper + 1e-9);
            prop_assert!(b.estimate - b.slack <= b.lower + 1e-9);
            let finer = distance_bounds(&sigma, &tau, SEARCH_HALF, 0.01).unwrap();
            prop_assert!(finer.lower <= b.upper + 1e-9);
            prop_assert!(b.lower <= finer.upper + 1e-9);
        }

        #[test]
        fn blowup_preserves_ball_mass(x in -5.0f64..5.0, r in 0.01f64..3.0) {
            let mu = LineMeasure::new(vec![(0.5, 1.0), (-1.0, 0.3)], vec![Segment { lo: -3.0, hi: 2.0, density: 0.7 }]).unwrap();
            let mass = mu.mass_ball(x, r);
            prop_assume!(mass > 0.0);
            let blown = mu.normalized_blowup(x, r).unwrap();
            prop_assert!((blown.mass_ball(0.0, 1.0) - 1.0).abs() < 1e-9);
        }
    }
}
