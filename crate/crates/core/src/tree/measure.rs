use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};
use std::path::Path;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{format_word, parse_word, Word};
use crate::{Error, Result};

/// Largest number of depth-`n` cylinders held densely.
const MAX_CELLS: usize = 1 << 24;

/// Scalars usable as cylinder weights.
pub trait Weight:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_count(n: u64) -> Self;
    /// Whether a total counts as one.
    fn is_unit(&self) -> bool;
    fn to_f64(&self) -> f64;

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }
}

impl Weight for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn is_unit(&self) -> bool {
        (self - 1.0).abs() <= 1e-12
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(n.into())
    }

    fn is_unit(&self) -> bool {
        self.is_one()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// A probability measure on `I^N` that is uniform inside each depth-`n`
/// cylinder, stored densely in lexicographic word order.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeMeasure<T = f64> {
    b: usize,
    n: usize,
    weights: Vec<T>,
}

fn cells(b: usize, n: usize) -> Result<usize> {
    (0..n)
        .try_fold(1usize, |acc, _| acc.checked_mul(b).filter(|&c| c <= MAX_CELLS))
        .ok_or_else(|| Error::TooLarge(format!("{b}^{n} cylinders")))
}

impl<T: Weight> TreeMeasure<T> {
    pub fn new(b: usize, n: usize, weights: Vec<T>) -> Result<Self> {
        let m = Self::raw(b, n, weights)?;
        if m.weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidWeights("negative cylinder weight".into()));
        }
        let total = m.weights.iter().fold(T::zero(), |acc, w| acc + w.clone());
        if !total.is_unit() {
            return Err(Error::InvalidWeights(format!("weights sum to {}", total.to_f64())));
        }
        Ok(m)
    }

    fn raw(b: usize, n: usize, weights: Vec<T>) -> Result<Self> {
        if b < 2 || b > u8::MAX as usize {
            return Err(Error::OutOfRange(format!("alphabet size {b}")));
        }
        if n == 0 {
            return Err(Error::OutOfRange("depth 0".into()));
        }
        let len = cells(b, n)?;
        if weights.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: weights.len(),
            });
        }
        Ok(Self { b, n, weights })
    }

    pub fn uniform(b: usize, n: usize) -> Result<Self> {
        let len = cells(b, n)?;
        let w = T::one() / T::from_count(len as u64);
        Self::new(b, n, vec![w; len])
    }

    /// Unlisted words get weight zero.
    pub fn from_words(b: usize, n: usize, words: impl IntoIterator<Item = (Word, T)>) -> Result<Self> {
        let mut weights = vec![T::zero(); cells(b, n)?];
        let mut seen = vec![false; weights.len()];
        for (word, w) in words {
            if word.len() != n {
                return Err(Error::Parse(format!("word of length {} at depth {n}", word.len())));
            }
            let i = index(b, &word)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Parse(format!("duplicate word {}", format_word(&word, b))));
            }
            weights[i] = w;
        }
        Self::new(b, n, weights)
    }

    /// Point mass on the cylinder of a full-depth word.
    pub fn dirac(b: usize, word: &[u8]) -> Result<Self> {
        Self::from_words(b, word.len(), [(word.to_vec(), T::one())])
    }

    pub fn alphabet(&self) -> usize {
        self.b
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn word_at(&self, i: usize) -> Word {
        let mut word = vec![0u8; self.n];
        let mut rest = i;
        for slot in word.iter_mut().rev() {
            *slot = (rest % self.b) as u8 + 1;
            rest /= self.b;
        }
        word
    }

    /// Full-depth words of positive weight.
    pub fn support(&self) -> impl Iterator<Item = (Word, &T)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > T::zero())
            .map(|(i, w)| (self.word_at(i), w))
    }

    fn block(&self, y: &[u8]) -> Result<std::ops::Range<usize>> {
        if y.len() > self.n {
            return Err(Error::DepthExhausted(format!(
                "word of length {} at depth {}",
                y.len(),
                self.n
            )));
        }
        let len = self.b.pow((self.n - y.len()) as u32);
        let start = index(self.b, y)? * len;
        Ok(start..start + len)
    }

    /// `mu[y]`.
    pub fn cylinder_mass(&self, y: &[u8]) -> Result<T> {
        Ok(self.weights[self.block(y)?]
            .iter()
            .fold(T::zero(), |acc, w| acc + w.clone()))
    }

    /// `mu_y[z] = mu[yz] / mu[y]`, a measure of depth `n - |y|`.
    pub fn condition(&self, y: &[u8]) -> Result<Self> {
        if y.len() >= self.n {
            return Err(Error::DepthExhausted(format!(
                "cannot condition on {} symbols at depth {}",
                y.len(),
                self.n
            )));
        }
        let block = self.block(y)?;
        let mass = self.weights[block.clone()]
            .iter()
            .fold(T::zero(), |acc, w| acc + w.clone());
        if mass <= T::zero() {
            return Err(Error::ZeroCylinder(format_word(y, self.b)));
        }
        let weights = self.weights[block].iter().map(|w| w.clone() / mass.clone()).collect();
        Self::raw(self.b, self.n - y.len(), weights)
    }

    /// Masses of all words of length `k <= n`, in lexicographic order.
    pub fn level(&self, k: usize) -> Vec<T> {
        assert!(k <= self.n);
        let chunk = self.b.pow((self.n - k) as u32);
        self.weights
            .chunks(chunk)
            .map(|c| c.iter().fold(T::zero(), |acc, w| acc + w.clone()))
            .collect()
    }

    /// The same measure described `extra` levels deeper.
    pub fn refine(&self, extra: usize) -> Result<Self> {
        if extra == 0 {
            return Ok(self.clone());
        }
        let split = cells(self.b, extra)?;
        let part = T::from_count(split as u64);
        cells(self.b, self.n + extra)?;
        let weights = self
            .weights
            .iter()
            .flat_map(|w| std::iter::repeat(w.clone() / part.clone()).take(split))
            .collect();
        Self::raw(self.b, self.n + extra, weights)
    }

    pub fn to_f64(&self) -> TreeMeasure<f64> {
        TreeMeasure {
            b: self.b,
            n: self.n,
            weights: self.weights.iter().map(Weight::to_f64).collect(),
        }
    }
}

impl TreeMeasure<f64> {
    /// The exact binary values of the weights as rationals. The total is the
    /// exact sum of those values and may differ from one by rounding.
    pub fn to_exact(&self) -> TreeMeasure<BigRational> {
        TreeMeasure {
            b: self.b,
            n: self.n,
            weights: self
                .weights
                .iter()
                .map(|w| BigRational::from_float(*w).expect("finite weight"))
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(text)?;
        let words = file
            .weights
            .iter()
            .map(|(k, w)| Ok((parse_word(k, file.alphabet)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(file.alphabet, file.depth, words)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TreeFile::from(self))?)
    }
}

/// On-disk form `{ "alphabet": b, "depth": n, "weights": { "112": 0.25, .. } }`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub alphabet: usize,
    pub depth: usize,
    pub weights: BTreeMap<String, f64>,
}

impl From<&TreeMeasure<f64>> for TreeFile {
    fn from(m: &TreeMeasure<f64>) -> Self {
        Self {
            alphabet: m.b,
            depth: m.n,
            weights: m.support().map(|(w, p)| (format_word(&w, m.b), *p)).collect(),
        }
    }
}

/// Lexicographic rank of `word` among words of its length.
fn index(b: usize, word: &[u8]) -> Result<usize> {
    word.iter().try_fold(0usize, |acc, &s| {
        if s == 0 || s as usize > b {
            Err(Error::Parse(format!("symbol {s} outside 1..={b}")))
        } else {
            Ok(acc * b + (s as usize - 1))
        }
    })
}
