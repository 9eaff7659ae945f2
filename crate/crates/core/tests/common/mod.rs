//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the patience, skeleton or pair code under test.
#![allow(dead_code)]

use lipstrip::geometry::{dominates, DiagRect, PointTS, PointXY, Region};
use lipstrip::sampling::{PointSet, SeedSpec};
use lipstrip::ChainQuery;
use rand::Rng;

/// A random small instance: points in a diagonal rectangle, and feasible endpoints.
pub struct Instance {
    pub rect: DiagRect,
    pub points: PointSet,
    pub start: Option<PointXY>,
    pub end: Option<PointXY>,
    pub restrict: bool,
}

impl Instance {
    pub fn query(&self) -> ChainQuery<'_> {
        let mut q = ChainQuery::new(&self.points);
        if self.restrict {
            q = q.within(Region::Diag(self.rect));
        }
        q.start = self.start;
        q.end = self.end;
        q
    }
}

pub fn random_instance(seed: u64, max_k: usize, pinned: bool) -> Instance {
    let mut rng = SeedSpec::new(0xACCE_5500, seed).rng();
    let len = rng.random_range(2.0..8.0);
    let width = rng.random_range(1.0..3.0);
    let rect = DiagRect::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), len, width).unwrap();
    let k = rng.random_range(0..=max_k);
    let pts: Vec<PointTS> = (0..k)
        .map(|_| {
            PointTS::new(
                rect.t_min + len * rng.random::<f64>(),
                rect.s_min + width * rng.random::<f64>(),
            )
        })
        .collect();
    let restrict = rng.random_bool(0.7);
    let (start, end) = if pinned || rng.random_bool(0.6) {
        let sa = rect.s_min + width * rng.random::<f64>();
        let sb = loop {
            let sb = rect.s_min + width * rng.random::<f64>();
            if (sb - sa).abs() <= len {
                break sb;
            }
        };
        (
            Some(PointTS::new(rect.t_min, sa).to_xy()),
            Some(PointTS::new(rect.t_max(), sb).to_xy()),
        )
    } else {
        (None, None)
    };
    // Restricted queries need endpoints inside the rectangle even after the
    // (t, s) -> (x, y) round trip.
    let shrink = |p: Option<PointXY>| p.filter(|p| !restrict || rect.contains(*p));
    Instance {
        rect,
        points: PointSet::from_ts(&pts),
        start: shrink(start),
        end: shrink(end),
        restrict,
    }
}

/// Feasible point indices, checked directly against the query description.
pub fn feasible(inst: &Instance) -> Vec<usize> {
    inst.points
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let p = **p;
            (!inst.restrict || inst.rect.contains(p))
                && inst.start.is_none_or(|a| dominates(a, p) && a != p)
                && inst.end.is_none_or(|b| dominates(p, b) && b != p)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Longest path in the dominance DAG by quadratic dynamic programming.
pub fn dag_longest(inst: &Instance) -> u32 {
    let idx = feasible(inst);
    let p = |i: usize| inst.points.get(idx[i]);
    // feasible indices are in lexicographic order, so every chain runs forward
    let mut best = vec![1u32; idx.len()];
    for j in 0..idx.len() {
        for i in 0..j {
            if dominates(p(i), p(j)) {
                best[j] = best[j].max(best[i] + 1);
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

/// All maximum-cardinality chains, by enumerating every subset.
pub fn subset_maximizers(inst: &Instance) -> Vec<Vec<usize>> {
    let idx = feasible(inst);
    let k = idx.len();
    assert!(k <= 16);
    let mut best = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1u32 << k) {
        let chosen: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| idx[b]).collect();
        let is_chain = chosen
            .windows(2)
            .all(|w| dominates(inst.points.get(w[0]), inst.points.get(w[1])));
        if !is_chain {
            continue;
        }
        match chosen.len().cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = chosen.len();
                out = vec![chosen];
            }
            std::cmp::Ordering::Equal => out.push(chosen),
            std::cmp::Ordering::Less => {}
        }
    }
    out.sort();
    out
}

/// Reference upper-tent value of a single chain (endpoints included) at `t`.
pub fn chain_upper(chain: &[PointTS], t: f64, hi: f64) -> Option<f64> {
    for w in chain.windows(2) {
        if w[0].t <= t && t <= w[1].t {
            return Some((w[0].s + (t - w[0].t)).min(w[1].s + (w[1].t - t)).min(hi));
        }
    }
    None
}

/// Reference lower-tent value of a single chain at `t`.
pub fn chain_lower(chain: &[PointTS], t: f64, lo: f64) -> Option<f64> {
    for w in chain.windows(2) {
        if w[0].t <= t && t <= w[1].t {
            return Some((w[0].s - (t - w[0].t)).max(w[1].s - (w[1].t - t)).max(lo));
        }
    }
    None
}
