//! Exact solver for the Lipschitz program on the real line.
//!
//! On a line a vector `phi` is 1-Lipschitz as soon as consecutive entries are,
//! so the program
//!
//! ```text
//! maximize  sum_i c_i phi_i
//! s.t.      0 <= phi_i <= cap_i,  |phi_{i+1} - phi_i| <= x_{i+1} - x_i
//! ```
//!
//! is a chain. It is solved by dynamic programming over concave piecewise
//! linear value functions on `[0, cap_i]`. Such a function is a multiset of
//! segments ordered by slope. Adding `c_i u` shifts every slope, widening
//! inserts a flat segment and clipping trims both ends, so with the slopes
//! stored relative to the running sum of `c` every segment keeps a fixed key.
//! The keys are known up front, which lets a Fenwick tree over them locate
//! the maximiser in `O(log n)`.

use std::collections::BTreeSet;

/// Prefix sums of segment lengths and of `key * length`, indexed by rank.
struct Fenwick {
    len: Vec<f64>,
    moment: Vec<f64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            len: vec![0.0; n + 1],
            moment: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, rank: usize, dl: f64, dm: f64) {
        let mut i = rank + 1;
        while i < self.len.len() {
            self.len[i] += dl;
            self.moment[i] += dm;
            i += i & i.wrapping_neg();
        }
    }

    /// Sums over ranks `< rank`.
    fn prefix(&self, rank: usize) -> (f64, f64) {
        let (mut l, mut m) = (0.0, 0.0);
        let mut i = rank;
        while i > 0 {
            l += self.len[i];
            m += self.moment[i];
            i &= i - 1;
        }
        (l, m)
    }
}

/// Concave piecewise-linear function on `[0, hi]`, as slope segments.
///
/// The slope of a segment with key `k` is `k + offset`; segments run left to
/// right in decreasing slope.
struct ValueFn {
    keys: Vec<f64>,
    seg: Vec<f64>,
    live: BTreeSet<usize>,
    tree: Fenwick,
    offset: f64,
    /// Value at zero.
    base: f64,
}

impl ValueFn {
    fn new(keys: Vec<f64>) -> Self {
        let n = keys.len();
        Self {
            keys,
            seg: vec![0.0; n],
            live: BTreeSet::new(),
            tree: Fenwick::new(n),
            offset: 0.0,
            base: 0.0,
        }
    }

    fn insert(&mut self, rank: usize, length: f64) {
        if length <= 0.0 {
            return;
        }
        self.seg[rank] += length;
        self.live.insert(rank);
        self.tree.add(rank, length, self.keys[rank] * length);
    }

    fn shrink(&mut self, rank: usize, take: f64) {
        if take >= self.seg[rank] {
            let all = self.seg[rank];
            self.seg[rank] = 0.0;
            self.live.remove(&rank);
            self.tree.add(rank, -all, -self.keys[rank] * all);
        } else {
            self.seg[rank] -= take;
            self.tree.add(rank, -take, -self.keys[rank] * take);
        }
    }

    /// Drops `length` from the left end, moving the origin right.
    fn trim_left(&mut self, mut length: f64) {
        while length > 0.0 {
            let Some(&r) = self.live.last() else { break };
            let take = length.min(self.seg[r]);
            self.base += (self.keys[r] + self.offset) * take;
            self.shrink(r, take);
            length -= take;
        }
    }

    fn trim_right(&mut self, mut length: f64) {
        while length > 0.0 {
            let Some(&r) = self.live.first() else { break };
            let take = length.min(self.seg[r]);
            self.shrink(r, take);
            length -= take;
        }
    }

    /// Rank of the first segment with positive slope.
    fn rising_from(&self) -> usize {
        self.keys.partition_point(|k| k + self.offset <= 0.0)
    }

    fn argmax(&self, hi: f64) -> f64 {
        let split = self.rising_from();
        let (total, _) = self.tree.prefix(self.keys.len());
        let (below, _) = self.tree.prefix(split);
        (total - below).clamp(0.0, hi)
    }

    fn max_value(&self) -> f64 {
        let split = self.rising_from();
        let n = self.keys.len();
        let (total, total_m) = self.tree.prefix(n);
        let (below, below_m) = self.tree.prefix(split);
        self.base + (total_m - below_m) + self.offset * (total - below)
    }
}

/// Optimal value and maximiser of a chain program.
#[derive(Clone, Debug)]
pub struct ChainSolution {
    /// Optimum tracked by the dynamic program.
    pub value: f64,
    /// A feasible maximiser.
    pub phi: Vec<f64>,
}

impl ChainSolution {
    /// `sum_i c_i phi_i` recomputed from the maximiser.
    pub fn witness_value(&self, c: &[f64]) -> f64 {
        self.phi.iter().zip(c).map(|(p, c)| p * c).sum()
    }
}

/// Solves the chain program for strictly increasing `x`.
///
/// `cap` must itself be 1-Lipschitz along `x` and nonnegative, which holds for
/// the distance to the complement of an interval.
pub fn solve_chain(x: &[f64], c: &[f64], cap: &[f64]) -> ChainSolution {
    let n = x.len();
    assert!(c.len() == n && cap.len() == n);
    if n == 0 {
        return ChainSolution {
            value: 0.0,
            phi: Vec::new(),
        };
    }
    // Segment i is created at step i with slope zero, i.e. key -sum_{j<i} c_j.
    let mut raw = vec![0.0; n];
    let mut running = 0.0;
    for i in 1..n {
        running += c[i - 1];
        raw[i] = -running;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| raw[p].total_cmp(&raw[q]));
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut f = ValueFn::new(order.iter().map(|&i| raw[i]).collect());

    let mut best = Vec::with_capacity(n);
    f.insert(rank[0], cap[0]);
    f.offset += c[0];
    best.push(f.argmax(cap[0]));
    for i in 1..n {
        let g = x[i] - x[i - 1];
        f.insert(rank[i], 2.0 * g);
        f.trim_left(g);
        f.trim_right((cap[i - 1] + g - cap[i]).max(0.0));
        f.offset += c[i];
        best.push(f.argmax(cap[i]));
    }
    let value = f.max_value();
    let mut phi = vec![0.0; n];
    phi[n - 1] = best[n - 1].clamp(0.0, cap[n - 1]);
    for i in (0..n - 1).rev() {
        let g = x[i + 1] - x[i];
        phi[i] = best[i]
            .clamp(phi[i + 1] - g, phi[i + 1] + g)
            .clamp(0.0, cap[i]);
    }
    ChainSolution { value, phi }
}
/// Largest violation of the chain constraints by `phi`.
pub fn chain_violation(x: &[f64], cap: &[f64], phi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..phi.len() {
        worst = worst.max(-phi[i]).max(phi[i] - cap[i]);
        if i > 0 {
            worst = worst.max((phi[i] - phi[i - 1]).abs() - (x[i] - x[i - 1]));
        }
    }
    worst
}
