//! Longest increasing chains of a point configuration.
//!
//! A chain is a sequence of points that is weakly increasing in both `x` and
//! `y`. The longest increasing path through a configuration, optionally
//! pinned at endpoints `a`, `b` and confined to a region `R`, passes through
//! exactly the points of a longest chain among the *feasible* points: those
//! inside `R`, dominating `a` and dominated by `b`.
//!
//! Convexity: if `R` is convex and every chain point lies in `R`, then
//! the polyline `a -> p1 -> ... -> pk -> b` is increasing and stays in `R`,
//! because each straight segment joins two points of `R` with `dx, dy >= 0`.
//! Hence no path-level feasibility check is needed beyond point membership.
//! Every [`Region`] variant is convex; [`Region::polygon`] rejects reflex
//! corners at construction.
//!
//! Endpoints contribute nothing to the length. A configuration point equal to
//! `a` or `b` is treated as infeasible.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::geometry::{dominates, DiagRect, PointTS, PointXY, Region};
use crate::regeneration::{self, Side};
use crate::sampling::{poisson_draw, PointSet, SeedSpec};

/// A longest-chain question about a point configuration.
#[derive(Debug, Clone)]
pub struct ChainQuery<'a> {
    pub points: &'a PointSet,
    pub region: Option<Region>,
    pub start: Option<PointXY>,
    pub end: Option<PointXY>,
}

impl<'a> ChainQuery<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        Self {
            points,
            region: None,
            start: None,
            end: None,
        }
    }

    pub fn within(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }

    pub fn from(mut self, start: PointXY) -> Self {
        self.start = Some(start);
        self
    }

    pub fn to(mut self, end: PointXY) -> Self {
        self.end = Some(end);
        self
    }

    pub fn between(self, start: PointXY, end: PointXY) -> Self {
        self.from(start).to(end)
    }

    pub fn validate(&self) -> Result<()> {
        if let (Some(a), Some(b)) = (self.start, self.end) {
            if !dominates(a, b) {
                return Err(Error::InvalidQuery(format!(
                    "end ({}, {}) does not dominate start ({}, {})",
                    b.x, b.y, a.x, a.y
                )));
            }
        }
        if let Some(r) = &self.region {
            for (name, p) in [("start", self.start), ("end", self.end)] {
                if let Some(p) = p {
                    if !r.contains(p) {
                        return Err(Error::InvalidQuery(format!("{name} ({}, {}) lies outside the region", p.x, p.y)));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn is_feasible(&self, p: PointXY) -> bool {
        if let Some(a) = self.start {
            if !dominates(a, p) || p == a {
                return false;
            }
        }
        if let Some(b) = self.end {
            if !dominates(p, b) || p == b {
                return false;
            }
        }
        self.region.as_ref().is_none_or(|r| r.contains(p))
    }

    fn feasible_indices(&self) -> Vec<u32> {
        self.points
            .points()
            .iter()
            .enumerate()
            .filter(|(_, p)| self.is_feasible(**p))
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Length of a longest chain and one chain achieving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainResult {
    pub length: u32,
    /// Point indices in dominance order.
    pub witness: Vec<usize>,
}

/// Patience piles for weak chains: `tails[j]` is the smallest key ending a
/// chain of length `j + 1` seen so far.
struct Patience<K> {
    tails: Vec<K>,
    owner: Vec<u32>,
}

impl<K: PartialOrd + Copy> Patience<K> {
    fn new() -> Self {
        Self {
            tails: Vec::new(),
            owner: Vec::new(),
        }
    }

    /// Inserts `key` (owned by `idx`) and returns its 1-based level together
    /// with the owner of the pile below, if any.
    #[inline]
    fn insert(&mut self, key: K, idx: u32) -> (u32, Option<u32>) {
        let pos = self.tails.partition_point(|t| *t <= key);
        let below = if pos > 0 { Some(self.owner[pos - 1]) } else { None };
        if pos == self.tails.len() {
            self.tails.push(key);
            self.owner.push(idx);
        } else {
            self.tails[pos] = key;
            self.owner[pos] = idx;
        }
        (pos as u32 + 1, below)
    }
}

/// Longest feasible chain, in `O(k log k)`.
pub fn longest_chain(q: &ChainQuery) -> Result<ChainResult> {
    q.validate()?;
    let pts = q.points.points();
    let feasible = q.feasible_indices();
    let mut piles = Patience::new();
    let mut pred = vec![u32::MAX; pts.len()];
    for &i in &feasible {
        let (_, below) = piles.insert(pts[i as usize].y, i);
        if let Some(b) = below {
            pred[i as usize] = b;
        }
    }
    let length = piles.tails.len() as u32;
    let mut witness = Vec::with_capacity(length as usize);
    let mut cur = piles.owner.last().copied();
    while let Some(i) = cur {
        witness.push(i as usize);
        let p = pred[i as usize];
        cur = (p != u32::MAX).then_some(p);
    }
    witness.reverse();
    Ok(ChainResult { length, witness })
}

/// Forward and backward chain lengths for every point, and which points lie
/// on at least one longest chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    /// Longest feasible chain ending at the point (inclusive); 0 if infeasible.
    pub forward: Vec<u32>,
    /// Longest feasible chain starting at the point (inclusive); 0 if infeasible.
    pub backward: Vec<u32>,
    pub member: Vec<bool>,
    pub total: u32,
}

impl Skeleton {
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.member.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }

    pub fn member_count(&self) -> usize {
        self.member.iter().filter(|m| **m).count()
    }
}

pub fn build_skeleton(q: &ChainQuery) -> Result<Skeleton> {
    q.validate()?;
    let pts = q.points.points();
    let feasible = q.feasible_indices();
    let mut forward = vec![0u32; pts.len()];
    let mut backward = vec![0u32; pts.len()];

    let mut piles = Patience::new();
    for &i in &feasible {
        forward[i as usize] = piles.insert(pts[i as usize].y, i).0;
    }
    let total = piles.tails.len() as u32;

    let mut piles = Patience::new();
    for &i in feasible.iter().rev() {
        backward[i as usize] = piles.insert(-pts[i as usize].y, i).0;
    }

    let member = forward
        .iter()
        .zip(&backward)
        .map(|(&f, &b)| f > 0 && f + b - 1 == total)
        .collect();
    Ok(Skeleton {
        forward,
        backward,
        member,
        total,
    })
}

/// Maximal anti-diagonal excursion of maximizers from the starting level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversal {
    /// Over skeleton members and the endpoints.
    pub s_points: f64,
    /// Over every curve realization of every maximizer.
    pub s_envelope: f64,
}

/// Transversal fluctuation of the maximizers between two endpoints at equal `s`.
pub fn transversal_s(q: &ChainQuery) -> Result<Transversal> {
    let sk = build_skeleton(q)?;
    transversal_with_skeleton(q, &sk)
}

pub fn transversal_with_skeleton(q: &ChainQuery, sk: &Skeleton) -> Result<Transversal> {
    let (a, b) = match (q.start, q.end) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidQuery("transversal fluctuation needs both endpoints".into())),
    };
    let s0 = a.s();
    if (b.s() - s0).abs() > 1e-9 * (1.0 + s0.abs().max(b.t().abs())) {
        return Err(Error::InvalidQuery("endpoints must share the same s coordinate".into()));
    }
    let pts = q.points.points();
    let s_points = sk.members().map(|i| (pts[i].s() - s0).abs()).fold(0.0, f64::max);

    let pairs = regeneration::valid_pairs(sk, q)?;
    let segments = regeneration::pair_segments(&pairs, q);
    let clip = q
        .region
        .as_ref()
        .map_or((f64::NEG_INFINITY, f64::INFINITY), |r| r.s_range());
    let upper = regeneration::tent_envelope(&segments, Side::Upper, clip)?;
    let lower = regeneration::tent_envelope(&segments, Side::Lower, clip)?;
    let up = upper.breakpoints.iter().map(|p| p.s - s0).fold(0.0, f64::max);
    let down = lower.breakpoints.iter().map(|p| s0 - p.s).fold(0.0, f64::max);
    Ok(Transversal {
        s_points,
        s_envelope: up.max(down).max(s_points),
    })
}

/// Spread of boundary-to-boundary chain lengths in a diagonal rectangle:
/// `max L^R(a, b) - min L^R(a, b)` over `a` on the left edge and `b` on the
/// right edge (pairs with `|s_b - s_a| > len` admit no path and are skipped).
///
/// `L^R(a, b)` only changes when `a` or `b` crosses the boundary of some
/// point's cone, so the edges are cut at those critical values. The grids are
/// closed under `s -> s ± len` so that every cell of the `(s_a, s_b)` plane is
/// either wholly admissible, wholly inadmissible, or split along its diagonal.
/// Each cell is then sampled once. For a fixed `a` the lengths for all `b` come
/// from one forward pass plus an interval-stabbing sweep.
pub fn delta_spread(rect: &DiagRect, points: &PointSet) -> u32 {
    let inside: Vec<PointTS> = points
        .points()
        .iter()
        .filter(|p| rect.contains(**p))
        .map(|p| p.to_ts())
        .collect();
    if inside.is_empty() {
        return 0;
    }
    let (t0, t1) = (rect.t_min, rect.t_max());
    let (lo, hi) = (rect.s_min, rect.s_max());
    let len = rect.len;
    let clamp = |s: f64| s.clamp(lo, hi);

    let mut left = vec![lo, hi];
    let mut right = vec![lo, hi];
    for p in &inside {
        left.push(clamp(p.s - (p.t - t0)));
        left.push(clamp(p.s + (p.t - t0)));
        right.push(clamp(p.s - (t1 - p.t)));
        right.push(clamp(p.s + (t1 - p.t)));
    }
    sort_dedup(&mut left);
    sort_dedup(&mut right);
    if rect.width > len {
        close_under_shift(&mut left, &mut right, len, lo, hi);
    }
    let left = with_midpoints(&left);
    let right = with_midpoints(&right);

    // Points in (x, y) order, with their right-cone intervals.
    let mut order: Vec<usize> = (0..inside.len()).collect();
    let xy: Vec<PointXY> = inside.iter().map(|p| p.to_xy()).collect();
    order.sort_unstable_by(|&i, &j| xy[i].x.total_cmp(&xy[j].x).then(xy[i].y.total_cmp(&xy[j].y)));
    let reach_lo: Vec<f64> = inside.iter().map(|p| p.s - (t1 - p.t)).collect();
    let reach_hi: Vec<f64> = inside.iter().map(|p| p.s + (t1 - p.t)).collect();
    let mut by_reach_lo: Vec<usize> = (0..inside.len()).collect();
    by_reach_lo.sort_unstable_by(|&i, &j| reach_lo[i].total_cmp(&reach_lo[j]));

    let slack = 1e-9 * (1.0 + len);
    let mut best = 0u32;
    let mut worst = u32::MAX;
    let mut level = vec![0u32; inside.len()];
    for &sa in &left {
        level.iter_mut().for_each(|l| *l = 0);
        let mut piles = Patience::new();
        for &i in &order {
            let p = inside[i];
            if (p.s - sa).abs() <= p.t - t0 {
                level[i] = piles.insert(xy[i].y, i as u32).0;
            }
        }
        // Sweep b upward; the heap holds cone intervals that opened, keyed by level.
        let mut heap: BinaryHeap<(u32, Reverse<usize>)> = BinaryHeap::new();
        let mut next = 0;
        for &sb in &right {
            if (sb - sa).abs() > len + slack {
                continue;
            }
            while next < by_reach_lo.len() && reach_lo[by_reach_lo[next]] <= sb {
                let i = by_reach_lo[next];
                if level[i] > 0 {
                    heap.push((level[i], Reverse(i)));
                }
                next += 1;
            }
            while let Some(&(_, Reverse(i))) = heap.peek() {
                if reach_hi[i] < sb {
                    heap.pop();
                } else {
                    break;
                }
            }
            let value = heap.peek().map_or(0, |&(l, _)| l);
            best = best.max(value);
            worst = worst.min(value);
        }
    }
    if worst == u32::MAX {
        0
    } else {
        best - worst
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_unstable_by(f64::total_cmp);
    v.dedup();
}

fn with_midpoints(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for (k, &g) in grid.iter().enumerate() {
        if k > 0 {
            out.push(0.5 * (grid[k - 1] + g));
        }
        out.push(g);
    }
    out
}

fn close_under_shift(left: &mut Vec<f64>, right: &mut Vec<f64>, len: f64, lo: f64, hi: f64) {
    loop {
        let before = (left.len(), right.len());
        let shifted = |src: &[f64]| -> Vec<f64> {
            src.iter()
                .flat_map(|&s| [s - len, s + len])
                .filter(|&s| s > lo && s < hi)
                .collect()
        };
        let to_right = shifted(left);
        let to_left = shifted(right);
        right.extend(to_right);
        left.extend(to_left);
        sort_dedup(left);
        sort_dedup(right);
        merge_near(left, 1e-12 * (1.0 + hi.abs().max(lo.abs())));
        merge_near(right, 1e-12 * (1.0 + hi.abs().max(lo.abs())));
        if (left.len(), right.len()) == before {
            break;
        }
    }
}

/// Drops grid values within `eps` of their predecessor so that repeated
/// shifting cannot grow the grid through rounding noise.
fn merge_near(v: &mut Vec<f64>, eps: f64) {
    v.dedup_by(|b, a| (*b - *a).abs() <= eps);
}

/// Length of the longest increasing path between opposite corners of an
/// axis-aligned box of the given area, for a unit-intensity Poisson process.
///
/// Only the relative order of the points matters. Read in increasing `x`,
/// the `y` values of independent uniform points are themselves independent
/// uniforms, so the `x` draws and the sort are skipped: the chain length is
/// the longest weakly increasing run of `N ~ Poisson(area)` random 64-bit keys.
pub fn poisson_box_length(area: f64, seed: SeedSpec) -> Result<u32> {
    let mut rng = seed.rng();
    let n = poisson_draw(&mut rng, area)?;
    let mut tails: Vec<u64> = Vec::with_capacity(2 * (n as f64).sqrt() as usize + 16);
    for _ in 0..n {
        let key = rng.next_u64();
        let pos = tails.partition_point(|&t| t <= key);
        if pos == tails.len() {
            tails.push(key);
        } else {
            tails[pos] = key;
        }
    }
    Ok(tails.len() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointTS;

    fn pts(v: &[(f64, f64)]) -> PointSet {
        PointSet::from_points(v.iter().map(|&(x, y)| PointXY::new(x, y)).collect())
    }

    #[test]
    fn total_order_and_antichain() {
        let chain = pts(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        let r = longest_chain(&ChainQuery::new(&chain)).unwrap();
        assert_eq!(r.length, 3);
        assert_eq!(r.witness, vec![0, 1, 2]);

        let anti = pts(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]);
        assert_eq!(longest_chain(&ChainQuery::new(&anti)).unwrap().length, 1);
    }

    #[test]
    fn restricted_rectangle_example() {
        let ps = PointSet::from_ts(&[PointTS::new(1.0, 0.5), PointTS::new(2.0, 1.8), PointTS::new(3.0, 0.2)]);
        let rect = DiagRect::at_origin(4.0, 2.0).unwrap();
        let q = ChainQuery::new(&ps)
            .within(Region::Diag(rect))
            .between(PointTS::new(0.0, 0.0).to_xy(), PointTS::new(4.0, 0.0).to_xy());
        let r = longest_chain(&q).unwrap();
        assert_eq!(r.length, 2);
        let got: Vec<PointTS> = r.witness.iter().map(|&i| ps.get(i).to_ts()).collect();
        assert!((got[0].t - 1.0).abs() < 1e-12 && (got[1].t - 3.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints_not_counted_and_coincident_points_excluded() {
        let ps = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        let q = ChainQuery::new(&ps).between(PointXY::new(0.0, 0.0), PointXY::new(2.0, 2.0));
        assert_eq!(longest_chain(&q).unwrap().length, 1);
    }

    #[test]
    fn invalid_query() {
        let ps = PointSet::empty();
        let q = ChainQuery::new(&ps).between(PointXY::new(1.0, 1.0), PointXY::new(0.0, 2.0));
        assert!(matches!(longest_chain(&q), Err(Error::InvalidQuery(_))));
        let q = ChainQuery::new(&ps)
            .within(Region::square(1.0).unwrap())
            .between(PointXY::new(0.0, 0.0), PointXY::new(2.0, 2.0));
        assert!(matches!(build_skeleton(&q), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn weak_ties() {
        // same x, same y: weak order chains them
        let ps = pts(&[(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]);
        assert_eq!(longest_chain(&ChainQuery::new(&ps)).unwrap().length, 4);
    }

    #[test]
    fn skeleton_examples() {
        let chain = pts(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]);
        let sk = build_skeleton(&ChainQuery::new(&chain)).unwrap();
        assert_eq!(sk.forward, vec![1, 2, 3]);
        assert_eq!(sk.backward, vec![3, 2, 1]);
        assert!(sk.member.iter().all(|m| *m));

        let anti = pts(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]);
        let sk = build_skeleton(&ChainQuery::new(&anti)).unwrap();
        assert_eq!(sk.forward, vec![1, 1, 1]);
        assert_eq!(sk.backward, vec![1, 1, 1]);
        assert_eq!(sk.total, 1);
        assert!(sk.member.iter().all(|m| *m));
    }

    #[test]
    fn skeleton_marks_non_members_and_infeasible() {
        let ps = pts(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (2.5, 0.5), (5.0, 0.0)]);
        let q = ChainQuery::new(&ps).between(PointXY::new(0.0, 0.0), PointXY::new(4.0, 4.0));
        let sk = build_skeleton(&q).unwrap();
        assert_eq!(sk.total, 3);
        // order: (1,1) (2,2) (2.5,0.5) (3,3) (5,0)
        assert_eq!(sk.member, vec![true, true, false, true, false]);
        assert_eq!(sk.forward[4], 0);
        let r = longest_chain(&q).unwrap();
        assert!(r.witness.iter().all(|&i| sk.member[i]));
    }

    #[test]
    fn transversal_examples() {
        let a = PointTS::new(0.0, 0.0).to_xy();
        let b = PointTS::new(4.0, 0.0).to_xy();
        let one = PointSet::from_ts(&[PointTS::new(2.0, 1.0)]);
        let tr = transversal_s(&ChainQuery::new(&one).between(a, b)).unwrap();
        assert!((tr.s_points - 1.0).abs() < 1e-12);

        let empty = PointSet::empty();
        let tr = transversal_s(&ChainQuery::new(&empty).between(a, b)).unwrap();
        assert_eq!(tr.s_points, 0.0);
        assert!((tr.s_envelope - 2.0).abs() < 1e-12);

        let bad = ChainQuery::new(&empty).between(a, PointTS::new(4.0, 1.0).to_xy());
        assert!(transversal_s(&bad).is_err());
    }

    #[test]
    fn delta_examples() {
        let rect = DiagRect::at_origin(4.0, 1.0).unwrap();
        assert_eq!(delta_spread(&rect, &PointSet::empty()), 0);
        let one = PointSet::from_ts(&[PointTS::new(2.0, 0.5)]);
        assert_eq!(delta_spread(&rect, &one), 0);

        let square = DiagRect::at_origin(2.0, 2.0).unwrap();
        let corner = PointSet::from_ts(&[PointTS::new(0.5, 1.9)]);
        assert_eq!(delta_spread(&square, &corner), 1);
    }

    #[test]
    fn poisson_box_deterministic() {
        let s = SeedSpec::new(4, 9);
        assert_eq!(poisson_box_length(500.0, s).unwrap(), poisson_box_length(500.0, s).unwrap());
        assert_eq!(poisson_box_length(0.0, s).unwrap(), 0);
    }
}
