//! Finite lattices: the torus `Z_n^d` and the box `Λ_n` with an absorbing
//! exterior, plus the centred boxes `Λ_k` of `Z^d` and their projections.
//!
//! Sites are indexed row-major over `{0..n-1}^d`, coordinate 0 being the
//! most significant. Neighbours are listed in the fixed direction order
//! `+e_1, -e_1, ..., +e_d, -e_d`; jump instructions index into that order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Torus,
    Box,
}

/// Wire form of a topology: `{"kind": "torus"|"box", "n": int, "d": int}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    pub d: usize,
}

/// Target of a single step from a site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Neighbor {
    Site(usize),
    /// The absorbing sink outside a box.
    Exterior,
}

const EXTERIOR: u32 = u32::MAX;

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologySpec", into = "TopologySpec")]
pub struct Topology {
    kind: TopologyKind,
    n: usize,
    d: usize,
    volume: usize,
    strides: Vec<usize>,
    table: Vec<u32>,
}

impl fmt::Debug for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}(n={}, d={})", self.kind, self.n, self.d)
    }
}

impl TryFrom<TopologySpec> for Topology {
    type Error = ArwError;

    fn try_from(spec: TopologySpec) -> Result<Self> {
        Topology::new(spec.kind, spec.n, spec.d)
    }
}

impl From<Topology> for TopologySpec {
    fn from(t: Topology) -> Self {
        t.spec()
    }
}

impl Topology {
    pub fn new(kind: TopologyKind, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(ArwError::param(format!(
                "topology needs n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        let volume = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(n))
            .filter(|&v| v < EXTERIOR as usize)
            .ok_or_else(|| ArwError::param(format!("n^d too large for n={n}, d={d}")))?;
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * n;
        }
        let mut topo = Topology {
            kind,
            n,
            d,
            volume,
            strides,
            table: Vec::new(),
        };
        topo.table = topo.build_table();
        Ok(topo)
    }

    pub fn torus(n: usize, d: usize) -> Result<Self> {
        Self::new(TopologyKind::Torus, n, d)
    }

    /// The box `Λ_n ⊂ Z^d` with particles killed when they step outside.
    pub fn open_box(n: usize, d: usize) -> Result<Self> {
        Self::new(TopologyKind::Box, n, d)
    }

    fn build_table(&self) -> Vec<u32> {
        let deg = self.degree();
        let mut table = vec![EXTERIOR; self.volume * deg];
        let mut grid = vec![0usize; self.d];
        for x in 0..self.volume {
            self.grid_coords_into(x, &mut grid);
            for axis in 0..self.d {
                let c = grid[axis];
                let stride = self.strides[axis];
                let (plus, minus) = match self.kind {
                    TopologyKind::Torus => {
                        let up = if c + 1 == self.n { x - c * stride } else { x + stride };
                        let down = if c == 0 { x + (self.n - 1) * stride } else { x - stride };
                        (up as u32, down as u32)
                    }
                    TopologyKind::Box => {
                        let up = if c + 1 == self.n { EXTERIOR } else { (x + stride) as u32 };
                        let down = if c == 0 { EXTERIOR } else { (x - stride) as u32 };
                        (up, down)
                    }
                };
                table[x * deg + 2 * axis] = plus;
                table[x * deg + 2 * axis + 1] = minus;
            }
        }
        table
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            kind: self.kind,
            n: self.n,
            d: self.d,
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn is_torus(&self) -> bool {
        self.kind == TopologyKind::Torus
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of sites, `n^d`.
    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Number of jump directions, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.d
    }

    pub fn check(&self, x: usize) -> Result<()> {
        if x < self.volume {
            Ok(())
        } else {
            Err(ArwError::InvalidSite {
                site: x,
                volume: self.volume,
            })
        }
    }

    /// One step from `x` in direction `dir` (`0..2d`). Unchecked beyond
    /// slice bounds; callers validate `x` once.
    #[inline]
    pub fn step(&self, x: usize, dir: usize) -> Neighbor {
        match self.table[x * self.degree() + dir] {
            EXTERIOR => Neighbor::Exterior,
            y => Neighbor::Site(y as usize),
        }
    }

    pub fn neighbors(&self, x: usize) -> Result<Vec<Neighbor>> {
        self.check(x)?;
        Ok((0..self.degree()).map(|dir| self.step(x, dir)).collect())
    }

    fn grid_coords_into(&self, mut x: usize, out: &mut [usize]) {
        for axis in (0..self.d).rev() {
            out[axis] = x % self.n;
            x /= self.n;
        }
    }

    /// Raw grid coordinates in `{0..n-1}^d`.
    pub fn grid_coords(&self, x: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        self.grid_coords_into(x, &mut out);
        out
    }

    fn box_offset(&self) -> i64 {
        match self.kind {
            TopologyKind::Torus => 0,
            TopologyKind::Box => (self.n as i64 - 1).div_euclid(2),
        }
    }

    /// Lattice coordinates of a site: torus coordinates in `{0..n-1}^d`,
    /// box coordinates in `Λ_n`.
    pub fn coords(&self, x: usize) -> Result<Vec<i64>> {
        self.check(x)?;
        let off = self.box_offset();
        Ok(self.grid_coords(x).into_iter().map(|c| c as i64 - off).collect())
    }

    /// Site at lattice coordinates. On the torus this is the canonical
    /// projection `Z^d → Z_n^d`; on a box, `None` outside `Λ_n`.
    pub fn site_at(&self, z: &[i64]) -> Option<usize> {
        if z.len() != self.d {
            return None;
        }
        let n = self.n as i64;
        let off = self.box_offset();
        let mut x = 0usize;
        for (axis, &c) in z.iter().enumerate() {
            let g = match self.kind {
                TopologyKind::Torus => c.rem_euclid(n),
                TopologyKind::Box => {
                    let g = c + off;
                    if !(0..n).contains(&g) {
                        return None;
                    }
                    g
                }
            };
            x += g as usize * self.strides[axis];
        }
        Some(x)
    }

    /// Graph distance. On the torus, `Σ min(|Δ|, n-|Δ|)`.
    pub fn distance(&self, x: usize, y: usize) -> Result<u64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, mut x: usize, mut y: usize) -> u64 {
        let mut total = 0u64;
        for _ in 0..self.d {
            let (cx, cy) = (x % self.n, y % self.n);
            x /= self.n;
            y /= self.n;
            let delta = cx.abs_diff(cy);
            total += match self.kind {
                TopologyKind::Torus => delta.min(self.n - delta),
                TopologyKind::Box => delta,
            } as u64;
        }
        total
    }

    pub fn all_sites(&self) -> SiteSet {
        SiteSet::full(self.volume)
    }

    /// Projects a set of `Z^d` points onto the lattice (dropping points
    /// outside a box).
    pub fn project<'a>(&self, points: impl IntoIterator<Item = &'a Vec<i64>>) -> SiteSet {
        SiteSet::from_sites(
            self.volume,
            points.into_iter().filter_map(|z| self.site_at(z)),
        )
    }
}

/// A subset of the sites of a lattice, kept both as a membership mask and
/// as a sorted member list.
#[derive(Clone, PartialEq, Eq)]
pub struct SiteSet {
    mask: Vec<bool>,
    members: Vec<usize>,
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.members).finish()
    }
}

impl SiteSet {
    pub fn empty(volume: usize) -> Self {
        SiteSet {
            mask: vec![false; volume],
            members: Vec::new(),
        }
    }

    pub fn full(volume: usize) -> Self {
        SiteSet {
            mask: vec![true; volume],
            members: (0..volume).collect(),
        }
    }

    /// Builds a set; indices `>= volume` are ignored, duplicates collapse.
    pub fn from_sites(volume: usize, sites: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; volume];
        for x in sites {
            if x < volume {
                mask[x] = true;
            }
        }
        Self::from_mask(mask)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(x, &m)| m.then_some(x))
            .collect();
        SiteSet { mask, members }
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn volume(&self) -> usize {
        self.mask.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        SiteSet::from_mask(
            self.mask
                .iter()
                .zip(&other.mask)
                .map(|(&a, &b)| a || b)
                .collect(),
        )
    }

    pub fn difference(&self, other: &SiteSet) -> SiteSet {
        SiteSet::from_mask(
            self.mask
                .iter()
                .enumerate()
                .map(|(x, &a)| a && !other.contains(x))
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }
}

fn lambda_range(k: usize) -> (i64, i64) {
    let k = k as i64;
    (-(k - 1).div_euclid(2), k.div_euclid(2))
}

/// Whether `z` lies in `Λ_k = (-k/2, k/2]^d ∩ Z^d`.
pub fn in_lambda(k: usize, z: &[i64]) -> bool {
    let (lo, hi) = lambda_range(k);
    z.iter().all(|&c| lo <= c && c <= hi)
}

/// The centred box `Λ_k = {-⌊(k-1)/2⌋, ..., ⌊k/2⌋}^d`, in lexicographic
/// order. `|Λ_k| = k^d`.
pub fn box_lambda(k: usize, d: usize) -> Vec<Vec<i64>> {
    let (lo, hi) = lambda_range(k);
    let mut out: Vec<Vec<i64>> = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * k);
        for prefix in &out {
            for c in lo..=hi {
                let mut z = prefix.clone();
                z.push(c);
                next.push(z);
            }
        }
        out = next;
    }
    if k == 0 {
        out.clear();
    }
    out
}

/// Internal boundary `Λ_k \ Λ_{k-2}` and external boundary (points outside
/// `Λ_k` adjacent to it) of a centred box, both sorted lexicographically.
pub fn boundaries(k: usize, d: usize) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let inside = box_lambda(k, d);
    let internal = inside
        .iter()
        .filter(|z| k < 2 || !in_lambda(k - 2, z))
        .cloned()
        .collect();
    let mut external = BTreeSet::new();
    for z in &inside {
        for axis in 0..d {
            for delta in [1i64, -1] {
                let mut y = z.clone();
                y[axis] += delta;
                if !in_lambda(k, &y) {
                    external.insert(y);
                }
            }
        }
    }
    (internal, external.into_iter().collect())
}

/// The four nested boxes `B_j = p(Λ_{n - j⌊an⌋})` of the torus, with their
/// projected internal and external boundaries.
#[derive(Clone, Debug)]
pub struct BoxFamily {
    pub n: usize,
    pub d: usize,
    pub a: f64,
    /// `⌊an⌋`, the side decrement between consecutive boxes.
    pub shrink: usize,
    pub sides: [usize; 4],
    pub boxes: [SiteSet; 4],
    pub inner: [SiteSet; 4],
    pub outer: [SiteSet; 4],
}

impl BoxFamily {
    pub fn whole(&self) -> &SiteSet {
        &self.boxes[0]
    }

    pub fn medium(&self) -> &SiteSet {
        &self.boxes[1]
    }

    pub fn small(&self) -> &SiteSet {
        &self.boxes[2]
    }

    pub fn tiny(&self) -> &SiteSet {
        &self.boxes[3]
    }
}

pub fn nested_boxes(n: usize, d: usize, a: f64) -> Result<BoxFamily> {
    if !(a > 0.0 && a < 1.0 / 3.0) {
        return Err(ArwError::param(format!("box parameter a={a} must lie in (0, 1/3)")));
    }
    let torus = Topology::torus(n, d)?;
    let shrink = (a * n as f64).floor() as usize;
    if n <= 3 * shrink {
        return Err(ArwError::param(format!(
            "tiny box is empty: n={n}, ⌊an⌋={shrink}"
        )));
    }
    let sides = [n, n - shrink, n - 2 * shrink, n - 3 * shrink];
    let build = |f: &dyn Fn(usize) -> SiteSet| -> [SiteSet; 4] {
        [f(sides[0]), f(sides[1]), f(sides[2]), f(sides[3])]
    };
    let boxes = build(&|k| torus.project(&box_lambda(k, d)));
    let inner = build(&|k| torus.project(&boundaries(k, d).0));
    let outer = build(&|k| torus.project(&boundaries(k, d).1));
    Ok(BoxFamily {
        n,
        d,
        a,
        shrink,
        sides,
        boxes,
        inner,
        outer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus_site(t: &Topology, z: &[i64]) -> usize {
        t.site_at(z).unwrap()
    }

    #[test]
    fn cycle_neighbors() {
        let t = Topology::torus(3, 1).unwrap();
        assert_eq!(t.neighbors(0).unwrap(), vec![Neighbor::Site(1), Neighbor::Site(2)]);
    }

    #[test]
    fn torus_wraps_in_fixed_order() {
        let t = Topology::torus(4, 2).unwrap();
        let s = |z: [i64; 2]| Neighbor::Site(torus_site(&t, &z));
        assert_eq!(
            t.neighbors(0).unwrap(),
            vec![s([1, 0]), s([3, 0]), s([0, 1]), s([0, 3])]
        );
    }

    #[test]
    fn box_edge_has_exterior() {
        let t = Topology::open_box(3, 1).unwrap();
        let right = t.site_at(&[1]).unwrap();
        let zero = t.site_at(&[0]).unwrap();
        assert_eq!(
            t.neighbors(right).unwrap(),
            vec![Neighbor::Exterior, Neighbor::Site(zero)]
        );
        assert_eq!(t.coords(right).unwrap(), vec![1]);
        assert!(t.site_at(&[2]).is_none());
    }

    #[test]
    fn invalid_site_rejected() {
        let t = Topology::torus(3, 1).unwrap();
        assert!(matches!(t.neighbors(3), Err(ArwError::InvalidSite { .. })));
        assert!(t.distance(0, 7).is_err());
    }

    #[test]
    fn distance_examples() {
        let t = Topology::torus(5, 1).unwrap();
        assert_eq!(t.distance(0, 3).unwrap(), 2);
        assert_eq!(t.distance(4, 4).unwrap(), 0);
        let t = Topology::torus(4, 2).unwrap();
        let y = torus_site(&t, &[2, 2]);
        assert_eq!(t.distance(0, y).unwrap(), 4);
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(box_lambda(2, 1), vec![vec![0], vec![1]]);
        assert_eq!(box_lambda(3, 1), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(box_lambda(1, 2), vec![vec![0, 0]]);
        assert!(box_lambda(0, 2).is_empty());
        for k in 0..7 {
            for d in 1..4 {
                assert_eq!(box_lambda(k, d).len(), k.pow(d as u32));
            }
        }
    }

    #[test]
    fn boundary_examples() {
        let (int, ext) = boundaries(3, 1);
        assert_eq!(int, vec![vec![-1], vec![1]]);
        assert_eq!(ext, vec![vec![-2], vec![2]]);
        assert_eq!(boundaries(1, 1).0, vec![vec![0]]);
        // Λ_4 in d=2: 16 sites minus the 2x2 core.
        assert_eq!(boundaries(4, 2).0.len(), 12);
        assert_eq!(boundaries(4, 2).1.len(), 16);
    }

    #[test]
    fn nested_box_sides() {
        let f = nested_boxes(20, 1, 0.1).unwrap();
        assert_eq!(f.shrink, 2);
        assert_eq!(f.sides, [20, 18, 16, 14]);
        for j in 0..4 {
            assert_eq!(f.boxes[j].len(), f.sides[j]);
        }
        for j in 1..4 {
            assert!(f.boxes[j].is_subset(&f.boxes[j - 1]));
        }
        assert!(!f.inner[0].is_empty());
    }

    #[test]
    fn degenerate_a_collapses_boxes() {
        let f = nested_boxes(10, 2, 0.05).unwrap();
        assert_eq!(f.shrink, 0);
        for j in 1..4 {
            assert_eq!(f.boxes[j], f.boxes[0]);
        }
    }

    #[test]
    fn a_out_of_contract_rejected() {
        assert!(nested_boxes(10, 1, 0.34).is_err());
        assert!(nested_boxes(10, 1, 0.0).is_err());
    }

    #[test]
    fn torus_metric_exhaustive() {
        for d in 1..=2 {
            for n in 1..=(if d == 1 { 10 } else { 6 }) {
                let t = Topology::torus(n, d).unwrap();
                let v = t.volume();
                for x in 0..v {
                    for dir in 0..t.degree() {
                        let Neighbor::Site(y) = t.step(x, dir) else { panic!() };
                        assert!(t.distance_unchecked(x, y) <= 1);
                    }
                    for y in 0..v {
                        let dxy = t.distance_unchecked(x, y);
                        assert_eq!(dxy, t.distance_unchecked(y, x));
                        assert_eq!(dxy == 0, x == y);
                        for z in 0..v {
                            assert!(dxy <= t.distance_unchecked(x, z) + t.distance_unchecked(z, y));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn inner_boundary_of_whole_torus_nonempty() {
        for n in 2..12 {
            let f = nested_boxes(n, 2, 0.01).unwrap();
            assert!(!f.inner[0].is_empty());
        }
    }

    #[test]
    fn serde_shape() {
        let t: Topology = serde_json::from_str(r#"{"kind":"box","n":5,"d":2}"#).unwrap();
        assert_eq!(t.volume(), 25);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"kind":"box","n":5,"d":2}"#
        );
        assert!(serde_json::from_str::<Topology>(r#"{"kind":"torus","n":0,"d":2}"#).is_err());
    }
}
