//! Atomic measures on `R^d` and half-open boxes.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::triadic::{self, CubeId};
use crate::{Error, Result};

/// Axis-aligned box `prod_i [lo_i, hi_i)`.
///
/// Membership is half-open: lower faces belong to the box, upper faces do not.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidBox(format!(
                "corner dimensions {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::InvalidBox(format!("side [{l}, {h})")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-half, half)^d`.
    pub fn centered(dim: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    /// The cube of side `side` centred at `center`.
    pub fn cube(center: &[f64], side: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - side / 2.0).collect(),
            center.iter().map(|c| c + side / 2.0).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v < *h)
    }

    /// Membership in the closure of the box.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// True when `other` is a subset of `self` (both half-open).
    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// Image of the box under `y -> (y - x) / r`.
    pub fn pushed(&self, x: &[f64], r: f64) -> Result<AxisBox> {
        Self::new(
            self.lo.iter().zip(x).map(|(l, c)| (l - c) / r).collect(),
            self.hi.iter().zip(x).map(|(h, c)| (h - c) / r).collect(),
        )
    }

    /// Image of the box under `y -> x + r y`.
    pub fn pulled(&self, x: &[f64], r: f64) -> Result<AxisBox> {
        Self::new(
            self.lo.iter().zip(x).map(|(l, c)| c + r * l).collect(),
            self.hi.iter().zip(x).map(|(h, c)| c + r * h).collect(),
        )
    }
}

impl fmt::Display for AxisBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sides: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| format!("[{l}, {h})"))
            .collect();
        write!(f, "{}", sides.join(" x "))
    }
}

/// Finitely many weighted points in `R^d`.
///
/// Positions are stored flat (`dim` coordinates per atom), sorted
/// lexicographically and pairwise distinct; every weight is positive.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
}

/// First index in `0..n` where `below` turns false; `below` must be monotone.
fn partition(n: usize, below: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if below(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl AtomicMeasure {
    /// The zero measure.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            positions: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Unit-free point mass `w * delta_x`.
    pub fn dirac(x: &[f64], w: f64) -> Result<Self> {
        Self::from_flat(x.len(), x.to_vec(), vec![w])
    }

    pub fn from_atoms<P: AsRef<[f64]>>(dim: usize, atoms: &[(P, f64)]) -> Result<Self> {
        let mut positions = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            positions.extend_from_slice(p);
            weights.push(*w);
        }
        Self::from_flat(dim, positions, weights)
    }

    /// Builds a measure from flat coordinates, coalescing duplicate positions.
    pub fn from_flat(dim: usize, positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange("dimension must be positive".into()));
        }
        if positions.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                got: positions.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::NonPositiveWeight(*w));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        let n = weights.len();
        let mut order: Vec<usize> = (0..n).collect();
        let sorted = (1..n).all(|i| {
            lex_cmp(
                &positions[(i - 1) * dim..i * dim],
                &positions[i * dim..(i + 1) * dim],
            ) == Ordering::Less
        });
        if sorted {
            return Ok(Self {
                dim,
                positions,
                weights,
            });
        }
        order.sort_unstable_by(|&i, &j| {
            lex_cmp(
                &positions[i * dim..(i + 1) * dim],
                &positions[j * dim..(j + 1) * dim],
            )
        });
        let mut out_pos: Vec<f64> = Vec::with_capacity(positions.len());
        let mut out_w: Vec<f64> = Vec::with_capacity(n);
        for i in order {
            let p = &positions[i * dim..(i + 1) * dim];
            let dup = !out_w.is_empty() && lex_cmp(&out_pos[out_pos.len() - dim..], p).is_eq();
            if dup {
                *out_w.last_mut().unwrap() += weights[i];
            } else {
                out_pos.extend_from_slice(p);
                out_w.push(weights[i]);
            }
        }
        Ok(Self {
            dim,
            positions: out_pos,
            weights: out_w,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn positions_flat(&self) -> &[f64] {
        &self.positions
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.positions
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim != d {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d,
            });
        }
        Ok(())
    }

    /// Indices of atoms whose first coordinate lies in `[lo, hi]`.
    pub fn first_coordinate_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let d = self.dim;
        let n = self.len();
        let start = partition(n, |i| self.positions[i * d] < lo);
        let end = partition(n, |i| self.positions[i * d] <= hi);
        start..end.max(start)
    }

    fn filter(&self, b: &AxisBox, keep: impl Fn(&[f64]) -> bool) -> Self {
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        for i in self.first_coordinate_range(b.lo()[0], b.hi()[0]) {
            let p = self.position(i);
            if keep(p) {
                positions.extend_from_slice(p);
                weights.push(self.weights[i]);
            }
        }
        Self {
            dim: self.dim,
            positions,
            weights,
        }
    }

    /// `mu ⌞ B` with half-open membership.
    pub fn restrict(&self, b: &AxisBox) -> Result<Self> {
        self.check_dim(b.dim())?;
        Ok(self.filter(b, |p| b.contains(p)))
    }

    /// `mu ⌞ closure(B)`.
    pub fn restrict_closed(&self, b: &AxisBox) -> Result<Self> {
        self.check_dim(b.dim())?;
        Ok(self.filter(b, |p| b.contains_closed(p)))
    }

    pub fn mass_in(&self, b: &AxisBox) -> Result<f64> {
        self.check_dim(b.dim())?;
        Ok(self
            .first_coordinate_range(b.lo()[0], b.hi()[0])
            .filter(|&i| b.contains(self.position(i)))
            .map(|i| self.weights[i])
            .sum())
    }

    /// `mu(B(x, r))` for the closed Euclidean ball.
    pub fn mass_ball(&self, x: &[f64], r: f64) -> f64 {
        let r2 = r * r;
        self.atoms()
            .filter(|(p, _)| {
                p.iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    <= r2
            })
            .map(|(_, w)| w)
            .sum()
    }

    /// `c * mu`; `c` must be positive.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::OutOfRange(format!("scale factor {c}")));
        }
        Ok(Self {
            dim: self.dim,
            positions: self.positions.clone(),
            weights: self.weights.iter().map(|w| w * c).collect(),
        })
    }

    /// Image under `p -> (p - shift) / r` with weights multiplied by `c`.
    pub(crate) fn push_affine(&self, shift: &[f64], r: f64, c: f64) -> Result<Self> {
        self.check_dim(shift.len())?;
        let positions = self
            .positions
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(move |(v, s)| (v - s) / r))
            .collect();
        let weights = self.weights.iter().map(|w| w * c).collect();
        Self::from_flat(self.dim, positions, weights)
    }

    /// Image under `q -> shift + r q` with weights multiplied by `c`.
    pub(crate) fn pull_affine(&self, shift: &[f64], r: f64, c: f64) -> Result<Self> {
        self.check_dim(shift.len())?;
        let positions = self
            .positions
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(move |(v, s)| s + r * v))
            .collect();
        let weights = self.weights.iter().map(|w| w * c).collect();
        Self::from_flat(self.dim, positions, weights)
    }

    /// Sum of two measures.
    pub fn plus(&self, other: &AtomicMeasure) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Self::from_flat(self.dim, positions, weights)
    }

    /// Sum of many measures of equal dimension.
    pub fn sum_all(dim: usize, parts: &[AtomicMeasure]) -> Result<Self> {
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        for p in parts {
            p.check_dim(dim)?;
            positions.extend_from_slice(&p.positions);
            weights.extend_from_slice(&p.weights);
        }
        Self::from_flat(dim, positions, weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile = serde_json::from_str(text)?;
        file.into_measure()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MeasureFile::from(self))?)
    }
}

/// On-disk form `{ "dim": d, "atoms": [ { "x": [..], "w": .. }, .. ] }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dim: usize,
    pub atoms: Vec<AtomRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AtomRecord {
    pub x: Vec<f64>,
    pub w: f64,
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<AtomicMeasure> {
        let atoms: Vec<(Vec<f64>, f64)> = self.atoms.into_iter().map(|a| (a.x, a.w)).collect();
        AtomicMeasure::from_atoms(self.dim, &atoms)
    }
}

impl From<&AtomicMeasure> for MeasureFile {
    fn from(m: &AtomicMeasure) -> Self {
        Self {
            dim: m.dim,
            atoms: m
                .atoms()
                .map(|(p, w)| AtomRecord { x: p.to_vec(), w })
                .collect(),
        }
    }
}

fn grid_counts(b: &AxisBox, h: f64) -> Result<Vec<usize>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::OutOfRange(format!("spacing {h}")));
    }
    b.lo()
        .iter()
        .zip(b.hi())
        .map(|(l, hi)| {
            let side = hi - l;
            let n = (side / h).round();
            if n < 1.0 || (n * h - side).abs() > 1e-12 * side {
                Err(Error::NonDivisibleSpacing { h, side })
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

/// Visits every multi-index of a box grid in lexicographic order.
pub(crate) fn for_each_index(counts: &[usize], mut f: impl FnMut(&[usize])) {
    if counts.iter().any(|&c| c == 0) {
        return;
    }
    let mut idx = vec![0usize; counts.len()];
    loop {
        f(&idx);
        let mut axis = counts.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Atoms at the centres of the regular `h`-grid tiling `b`, each of weight `h^d`.
pub fn discretize_lebesgue(b: &AxisBox, h: f64) -> Result<AtomicMeasure> {
    let counts = grid_counts(b, h)?;
    let d = b.dim();
    let total: usize = counts.iter().product();
    let mut positions = Vec::with_capacity(total * d);
    for_each_index(&counts, |idx| {
        for (i, &j) in idx.iter().enumerate() {
            positions.push(b.lo()[i] + (j as f64 + 0.5) * h);
        }
    });
    AtomicMeasure::from_flat(d, positions, vec![h.powi(d as i32); total])
}

/// Rejects atoms lying on a hyperplane `x_i = (m + 1/2) 3^{-j}` for `|j| <= depth`.
pub fn check_off_triadic_boundaries(mu: &AtomicMeasure, depth: i32) -> Result<()> {
    for (p, _) in mu.atoms() {
        for &x in p {
            for j in -depth..=depth {
                let t = x * triadic::pow3(j) + 0.5;
                if (t - t.round()).abs() < 1e-9 {
                    return Err(Error::AtomOnBoundary {
                        position: p.to_vec(),
                        exponent: -j,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Rational weight `p / q` drawn for one cube of a sampled measure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeWeight {
    pub cube: String,
    pub p: u32,
    pub q: u32,
}

/// A discretised member of the countable dense family of reference measures.
#[derive(Clone, Debug)]
pub struct SampledMeasure {
    pub measure: AtomicMeasure,
    pub level: u32,
    pub seed: u64,
    pub cube_weights: Vec<CubeWeight>,
}

/// Largest numerator and denominator of the rational weight pool.
pub const RATIONAL_POOL_MAX: u32 = 16;

/// Default number of triadic levels checked for boundary collisions.
pub const BOUNDARY_CHECK_DEPTH: i32 = 10;

/// Draws Lebesgue measure outside `I_n` plus `sum_Q q_Q L_Q` over the cubes
/// `Q` of side `3^{-n}` inside `I_n`, atomised with spacing `h` inside `window`.
pub fn sample_s(n: u32, window: &AxisBox, h: f64, seed: u64) -> Result<SampledMeasure> {
    sample_s_with_depth(n, window, h, seed, BOUNDARY_CHECK_DEPTH)
}

pub fn sample_s_with_depth(
    n: u32,
    window: &AxisBox,
    h: f64,
    seed: u64,
    depth: i32,
) -> Result<SampledMeasure> {
    if n == 0 {
        return Err(Error::OutOfRange("level n must be positive".into()));
    }
    let d = window.dim();
    let core = triadic::standard_box(n as i32, d);
    if !window.contains_box(&core) {
        return Err(Error::OutOfRange(format!(
            "window {window} does not contain I_{n} = {core}"
        )));
    }
    let cubes = triadic::cubes_inside(1, n as i32, &core);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cube_weights = Vec::with_capacity(cubes.len());
    let mut q_of = std::collections::HashMap::with_capacity(cubes.len());
    for q in &cubes {
        let p_num = rng.gen_range(1..=RATIONAL_POOL_MAX);
        let q_den = rng.gen_range(1..=RATIONAL_POOL_MAX);
        cube_weights.push(CubeWeight {
            cube: q.to_string(),
            p: p_num,
            q: q_den,
        });
        q_of.insert(q.m.clone(), p_num as f64 / q_den as f64);
    }

    let grid = discretize_lebesgue(window, h)?;
    let cell = h.powi(d as i32);
    let cube_volume = triadic::pow3(-(n as i32)).powi(d as i32);
    let mut weights = Vec::with_capacity(grid.len());
    let mut hits = std::collections::HashMap::<Vec<i64>, usize>::new();
    for (p, _) in grid.atoms() {
        if core.contains(p) {
            let m = CubeId::locate(p, 1, n as i32).m;
            let q = q_of[&m];
            *hits.entry(m).or_default() += 1;
            weights.push(q * cell / cube_volume);
        } else {
            weights.push(cell);
        }
    }
    if hits.len() != cubes.len() {
        return Err(Error::NonDivisibleSpacing {
            h,
            side: triadic::pow3(-(n as i32)),
        });
    }
    let measure = AtomicMeasure::from_flat(d, grid.positions, weights)?;
    check_off_triadic_boundaries(&measure, depth)?;
    Ok(SampledMeasure {
        measure,
        level: n,
        seed,
        cube_weights,
    })
}
