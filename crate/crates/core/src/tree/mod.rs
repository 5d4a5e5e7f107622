//! Probability measures on the symbolic space `I^N`, `I = {1, ..., b}`,
//! truncated at a finite depth.
//!
//! The metric on sequences is `d(x, y) = 2^{-k}` where `k` is the first index
//! (counting from one) at which `x` and `y` differ.

mod measure;
mod pi;
mod zoom;

pub use measure::{TreeFile, TreeMeasure, Weight};
pub use pi::{pi_metric, pi_metric_lp, LpPi, PI_LP_MAX_WORDS};
pub use zoom::{
    construct_tree_approximant, distribution_distance, empirical_distribution, micromeasure_orbit,
    state_distance, zoom, zoom_n, Approximant, TreeState, DISTRIBUTION_MAX_PAIRS,
};

use crate::{Error, Result};

/// A finite word over `{1, ..., b}`.
pub type Word = Vec<u8>;

/// First index, counting from one, at which `u` and `v` differ.
pub fn split_index(u: &[u8], v: &[u8]) -> Option<usize> {
    u.iter().zip(v).position(|(a, b)| a != b).map(|i| i + 1)
}

/// `2^{-k}` for the first differing index `k`, or zero when one word is a
/// prefix of the other.
pub fn word_distance(u: &[u8], v: &[u8]) -> f64 {
    split_index(u, v).map_or(0.0, |k| 0.5f64.powi(k as i32))
}

/// Digit strings for `b <= 9`, comma-separated symbols otherwise.
pub fn parse_word(text: &str, b: usize) -> Result<Word> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let symbols: Vec<u64> = if b <= 9 && !text.contains(',') {
        text.chars()
            .map(|c| c.to_digit(10).map(u64::from).ok_or_else(|| Error::Parse(format!("symbol {c:?}"))))
            .collect::<Result<_>>()?
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| Error::Parse(format!("symbol {s:?}"))))
            .collect::<Result<_>>()?
    };
    symbols
        .into_iter()
        .map(|s| {
            if s >= 1 && s as usize <= b && s <= u8::MAX as u64 {
                Ok(s as u8)
            } else {
                Err(Error::Parse(format!("symbol {s} outside 1..={b}")))
            }
        })
        .collect()
}

pub fn format_word(word: &[u8], b: usize) -> String {
    if b <= 9 {
        word.iter().map(|s| char::from(b'0' + s)).collect()
    } else {
        word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}
