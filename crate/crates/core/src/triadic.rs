//! The `3^a`-adic cube filtrations `Q_a^k` and their central cubes.

use std::fmt;

use crate::measure::{for_each_index, AxisBox};
use crate::{Error, Result};

/// `3^j` as a float, exact for moderate `|j|` in the positive direction.
pub fn pow3(j: i32) -> f64 {
    3f64.powi(j)
}

/// `I_a = [-3^a / 2, 3^a / 2)^d`.
pub fn standard_box(a: i32, dim: usize) -> AxisBox {
    AxisBox::centered(dim, pow3(a) / 2.0).expect("standard box is well formed")
}

/// The `eps`-expansion `[-3^a/2 - eps, 3^a/2 + eps)^d`.
pub fn expanded_box(a: i32, eps: f64, dim: usize) -> Result<AxisBox> {
    if !(eps >= 0.0) {
        return Err(Error::OutOfRange(format!("expansion {eps}")));
    }
    AxisBox::centered(dim, pow3(a) / 2.0 + eps)
}

/// The `eps`-contraction `[-3^a/2 + eps, 3^a/2 - eps)^d`.
pub fn contracted_box(a: i32, eps: f64, dim: usize) -> Result<AxisBox> {
    let half = pow3(a) / 2.0;
    if !(eps >= 0.0) || eps >= half {
        return Err(Error::OutOfRange(format!(
            "contraction {eps} of a cube with half side {half}"
        )));
    }
    AxisBox::centered(dim, half - eps)
}

/// `r_a^k = 3^{-(k+1)a}`, the scale sending `Q in Q_a^k` onto `I_a`.
pub fn blowup_radius(a: u32, k: i32) -> f64 {
    pow3(-(k + 1) * a as i32)
}

/// Half the side of a generation `k + 1` cube; reported next to [`blowup_radius`].
pub fn half_side_radius(a: u32, k: i32) -> f64 {
    blowup_radius(a, k) / 2.0
}

/// A cube of `Q_a^k`: side `3^{-ak}`, centre `m * 3^{-ak}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeId {
    pub a: u32,
    pub k: i32,
    pub m: Vec<i64>,
}

impl CubeId {
    pub fn new(a: u32, k: i32, m: Vec<i64>) -> Self {
        Self { a, k, m }
    }

    /// The unit cube `[-1/2, 1/2)^d` seen as a member of `Q_a^0`.
    pub fn unit(a: u32, dim: usize) -> Self {
        Self::new(a, 0, vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn side(&self) -> f64 {
        pow3(-(self.a as i32) * self.k)
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.m.iter().map(|&m| m as f64 * s).collect()
    }

    pub fn to_box(&self) -> AxisBox {
        AxisBox::cube(&self.center(), self.side()).expect("cube is well formed")
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        Self::locate(x, self.a, self.k).m == self.m
    }

    /// The cube of `Q_a^k` containing `x`.
    pub fn locate(x: &[f64], a: u32, k: i32) -> Self {
        let scale = pow3(a as i32 * k);
        let m = x
            .iter()
            .map(|v| (v * scale + 0.5).floor() as i64)
            .collect();
        Self::new(a, k, m)
    }

    /// The generation `k + 2` cube sharing this cube's centre.
    pub fn central_cube(&self) -> Self {
        let f = 3i64.pow(2 * self.a);
        Self::new(self.a, self.k + 2, self.m.iter().map(|m| m * f).collect())
    }

    /// This cube followed by its `3^d - 1` neighbours in lexicographic offset order.
    pub fn neighbours(&self) -> Vec<Self> {
        neighbour_offsets(self.dim())
            .into_iter()
            .map(|e| {
                Self::new(
                    self.a,
                    self.k,
                    self.m.iter().zip(&e).map(|(m, o)| m + o).collect(),
                )
            })
            .collect()
    }

    /// The `3^{ad}` cubes of generation `k + 1` inside this cube.
    pub fn children(&self) -> Vec<Self> {
        let base = 3i64.pow(self.a);
        let half = (base - 1) / 2;
        let counts = vec![base as usize; self.dim()];
        let mut out = Vec::with_capacity(counts.iter().product());
        for_each_index(&counts, |idx| {
            let m = self
                .m
                .iter()
                .zip(idx)
                .map(|(m, &j)| m * base + j as i64 - half)
                .collect();
            out.push(Self::new(self.a, self.k + 1, m));
        });
        out
    }
}

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.m.iter().map(|v| v.to_string()).collect();
        write!(f, "a{}:k{}:[{}]", self.a, self.k, m.join(","))
    }
}

/// Offsets `{-1,0,1}^d` with the zero offset first, the rest lexicographic.
pub fn neighbour_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0; dim]];
    for_each_index(&vec![3; dim], |idx| {
        let e: Vec<i64> = idx.iter().map(|&j| j as i64 - 1).collect();
        if e.iter().any(|&v| v != 0) {
            out.push(e);
        }
    });
    out
}

/// All cubes of `Q_a^k` contained in `b`, in lexicographic index order.
pub fn cubes_inside(a: u32, k: i32, b: &AxisBox) -> Vec<CubeId> {
    let s = pow3(-(a as i32) * k);
    let ranges: Vec<(i64, i64)> = b
        .lo()
        .iter()
        .zip(b.hi())
        .map(|(lo, hi)| {
            let first = (lo / s + 0.5 - 1e-9).ceil() as i64;
            let last = (hi / s - 0.5 + 1e-9).floor() as i64;
            (first, last)
        })
        .collect();
    if ranges.iter().any(|(f, l)| l < f) {
        return Vec::new();
    }
    let counts: Vec<usize> = ranges.iter().map(|(f, l)| (l - f + 1) as usize).collect();
    let mut out = Vec::with_capacity(counts.iter().product());
    for_each_index(&counts, |idx| {
        let m = ranges
            .iter()
            .zip(idx)
            .map(|((f, _), &j)| f + j as i64)
            .collect();
        out.push(CubeId::new(a, k, m));
    });
    out
}

/// Image of `y` under `T_{x,r}(y) = (y - x) / r`.
pub fn blowup_point(y: &[f64], x: &[f64], r: f64) -> Vec<f64> {
    y.iter().zip(x).map(|(v, c)| (v - c) / r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn locate_examples() {
        assert_eq!(CubeId::locate(&[0.4], 1, 0).m, vec![0]);
        assert_eq!(CubeId::locate(&[0.5], 1, 0).m, vec![1]);
        assert_eq!(CubeId::locate(&[-0.5], 1, 0).m, vec![0]);
        assert_eq!(CubeId::locate(&[0.2, -0.2], 1, 1).m, vec![1, -1]);
    }

    #[test]
    fn central_cube_examples() {
        let q = CubeId::unit(1, 1);
        let c = q.central_cube();
        assert_eq!(c, CubeId::new(1, 2, vec![0]));
        assert_abs_diff_eq!(c.side(), 1.0 / 9.0, epsilon = 1e-15);
        let q = CubeId::new(2, 1, vec![3, -4]);
        let c = q.central_cube();
        assert_abs_diff_eq!(c.side() / q.side(), pow3(-4), epsilon = 1e-15);
        let cc = c.central_cube();
        assert_eq!(cc.k, q.k + 4);
        for (x, y) in cc.center().iter().zip(q.center()) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn neighbour_order() {
        let n = CubeId::unit(1, 1).neighbours();
        let ms: Vec<i64> = n.iter().map(|q| q.m[0]).collect();
        assert_eq!(ms, vec![0, -1, 1]);
        let n = CubeId::new(1, 0, vec![2, 2]).neighbours();
        assert_eq!(n.len(), 9);
        assert_eq!(n[0].m, vec![2, 2]);
        assert_eq!(n[1].m, vec![1, 1]);
        assert_eq!(n[8].m, vec![3, 3]);
    }

    #[test]
    fn neighbours_tile_the_next_standard_box() {
        for d in 1..=3 {
            for a in 1..=2u32 {
                // Generation -1 cubes of Q_a have side 3^a, the side of I_a.
                let q = CubeId::new(a, -1, vec![0; d]);
                let big = standard_box(a as i32 + 1, d);
                let vol: f64 = q.neighbours().iter().map(|n| n.to_box().volume()).sum();
                assert_abs_diff_eq!(vol, big.volume(), epsilon = 1e-9 * big.volume());
                assert!(q.neighbours().iter().all(|n| big.contains_box(&n.to_box())));
            }
        }
    }

    #[test]
    fn radius_maps_cube_onto_standard_boxes() {
        let r = blowup_radius(1, 0);
        assert_abs_diff_eq!(r, 1.0 / 3.0, epsilon = 1e-15);
        let img = CubeId::unit(1, 1).to_box().pushed(&[0.0], r).unwrap();
        assert_abs_diff_eq!(img.lo()[0], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(img.hi()[0], 1.5, epsilon = 1e-12);
        let img = CubeId::unit(1, 1).central_cube().to_box().pushed(&[0.0], r).unwrap();
        assert_abs_diff_eq!(img.hi()[0] - img.lo()[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(blowup_radius(2, 3) / blowup_radius(2, 2), pow3(-2), epsilon = 1e-15);
        assert_abs_diff_eq!(half_side_radius(1, 0), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn expanded_and_contracted_boxes() {
        let e = expanded_box(0, 0.25, 1).unwrap();
        assert_eq!((e.lo()[0], e.hi()[0]), (-0.75, 0.75));
        let i = standard_box(2, 2);
        let c = contracted_box(2, 0.5, 2).unwrap();
        let e = expanded_box(2, 0.5, 2).unwrap();
        assert!(i.contains_box(&c) && e.contains_box(&i));
        assert!(c.volume() < i.volume() && i.volume() < e.volume());
        assert!(contracted_box(0, 0.5, 1).is_err());
        let buffer = |eps: f64| {
            expanded_box(1, eps, 2).unwrap().volume() - contracted_box(1, eps, 2).unwrap().volume()
        };
        assert!(buffer(1e-6) < 1e-4 && buffer(1e-3) > buffer(1e-6));
    }

    #[test]
    fn cubes_inside_counts() {
        // Q_a^{k} inside I_a: 3^{a(k+1)d} cubes.
        assert_eq!(cubes_inside(1, 1, &standard_box(1, 1)).len(), 9);
        assert_eq!(cubes_inside(2, 0, &standard_box(2, 2)).len(), 81);
        assert_eq!(cubes_inside(1, 0, &standard_box(0, 1)).len(), 1);
        assert!(cubes_inside(1, -1, &standard_box(0, 1)).is_empty());
    }

    #[test]
    fn display_format() {
        assert_eq!(CubeId::new(2, 3, vec![1, -4]).to_string(), "a2:k3:[1,-4]");
    }

    proptest! {
        #[test]
        fn locate_inverts_membership(x in prop::collection::vec(-20.0f64..20.0, 1..4), a in 1u32..3, k in -1i32..4) {
            let q = CubeId::locate(&x, a, k);
            prop_assert!(q.to_box().contains_closed(&x));
            let c = q.center();
            let s = q.side();
            for (v, m) in x.iter().zip(&c) {
                prop_assert!(*v >= m - s / 2.0 - 1e-9 && *v < m + s / 2.0 + 1e-9);
            }
        }

        #[test]
        fn central_cube_is_located_at_center(m in prop::collection::vec(-50i64..50, 1..4), a in 1u32..3, k in -1i32..3) {
            let q = CubeId::new(a, k, m);
            prop_assert_eq!(CubeId::locate(&q.center(), a, k + 2), q.central_cube());
            prop_assert!(q.to_box().contains_box(&q.central_cube().to_box()));
        }

        #[test]
        fn children_partition_parent(m in prop::collection::vec(-5i64..5, 1..3), a in 1u32..3, k in 0i32..3) {
            let q = CubeId::new(a, k, m);
            let kids = q.children();
            prop_assert_eq!(kids.len(), 3usize.pow(a * q.dim() as u32));
            let vol: f64 = kids.iter().map(|c| c.to_box().volume()).sum();
            prop_assert!((vol - q.to_box().volume()).abs() <= 1e-9 * q.to_box().volume());
            for c in &kids {
                prop_assert_eq!(CubeId::locate(&c.center(), a, k), q.clone());
            }
        }

        #[test]
        fn blowup_normalization(m in prop::collection::vec(-30i64..30, 1..3), a in 1u32..3, k in 0i32..3) {
            let q = CubeId::new(a, k, m);
            let r = blowup_radius(a, k);
            let x = q.center();
            let img = q.to_box().pushed(&x, r).unwrap();
            let target = standard_box(a as i32, q.dim());
            let cimg = q.central_cube().to_box().pushed(&x, r).unwrap();
            let ctarget = standard_box(-(a as i32), q.dim());
            for i in 0..q.dim() {
                prop_assert!((img.lo()[i] - target.lo()[i]).abs() < 1e-12 * target.hi()[i].max(1.0) * 10.0);
                prop_assert!((img.hi()[i] - target.hi()[i]).abs() < 1e-12 * target.hi()[i].max(1.0) * 10.0);
                prop_assert!((cimg.lo()[i] - ctarget.lo()[i]).abs() < 1e-12);
                prop_assert!((cimg.hi()[i] - ctarget.hi()[i]).abs() < 1e-12);
            }
        }
    }
}
