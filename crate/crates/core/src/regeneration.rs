//! Maximizer families, their reachable-`s` envelopes, and the regeneration
//! event: some maximizer between the bottom corners of a diagonal rectangle
//! meets some maximizer between its top corners.
//!
//! Two consecutive points `p`, `q` of a maximizer can be joined by any curve
//! with slope in `[-1, 1]`; at time `t` such a curve can sit anywhere in the
//! tent `[max(s_p - (t - t_p), s_q - (t_q - t)), min(s_p + (t - t_p), s_q + (t_q - t))]`.
//! No feasible point lies strictly inside that parallelogram (it would lengthen
//! the chain), so every such curve is again a maximizer. The union over all
//! consecutive pairs is therefore exactly the set of positions maximizers can
//! occupy, and its upper/lower boundary is a piecewise-linear envelope.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::chains::{build_skeleton, ChainQuery, Skeleton};
use crate::error::{Error, Result};
use crate::geometry::{dominates, DiagRect, PointTS, PointXY, Region};
use crate::sampling::PointSet;

/// Default cap on the number of consecutive pairs.
pub const DEFAULT_PAIR_CAP: usize = 10_000_000;

/// Slack in the envelope comparison; touching within this margin counts.
pub const OMEGA_EPS: f64 = 1e-9;

/// A node of a maximizer: a configuration point or one of the pinned endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Start,
    Point(usize),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// Piecewise-linear function of `t`, given by its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePolyline {
    /// `(t, s)` with strictly increasing `t`.
    pub breakpoints: Vec<PointTS>,
    pub side: Side,
    pub clip: (f64, f64),
}

impl EnvelopePolyline {
    pub fn t_range(&self) -> Option<(f64, f64)> {
        Some((self.breakpoints.first()?.t, self.breakpoints.last()?.t))
    }

    /// Linear interpolation; `None` outside the covered range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let bp = &self.breakpoints;
        let (t0, t1) = self.t_range()?;
        if t < t0 || t > t1 {
            return None;
        }
        let k = bp.partition_point(|p| p.t <= t);
        if k == bp.len() {
            return Some(bp[k - 1].s);
        }
        let (a, b) = (bp[k - 1], bp[k]);
        Some(a.s + (b.s - a.s) * (t - a.t) / (b.t - a.t))
    }

    pub fn max_s(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.s).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_s(&self) -> f64 {
        self.breakpoints.iter().map(|p| p.s).fold(f64::INFINITY, f64::min)
    }
}

/// Result of the regeneration test on one rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaReport {
    pub occurs: bool,
    pub witness_t: Option<f64>,
    /// `max_t (upper_bottom(t) - lower_top(t))`.
    pub margin: f64,
    /// The two member sets share a configuration point.
    pub shared_member: bool,
}

fn node_point(q: &ChainQuery, node: Node) -> PointXY {
    match node {
        Node::Start => q.start.expect("start node without start point"),
        Node::End => q.end.expect("end node without end point"),
        Node::Point(i) => q.points.get(i),
    }
}

/// Pairs of nodes that are consecutive on at least one maximizer.
///
/// Members at one level form an antichain, so in `x` order their `y` values
/// decrease and the members of the next level dominating a given point form a
/// contiguous run found by two binary searches.
pub fn valid_pairs(sk: &Skeleton, q: &ChainQuery) -> Result<Vec<(Node, Node)>> {
    valid_pairs_capped(sk, q, DEFAULT_PAIR_CAP)
}

pub fn valid_pairs_capped(sk: &Skeleton, q: &ChainQuery, cap: usize) -> Result<Vec<(Node, Node)>> {
    let total = sk.total as usize;
    let pts = q.points.points();
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); total + 1];
    for i in sk.members() {
        levels[sk.forward[i] as usize].push(i);
    }
    let mut pairs = Vec::new();
    let push = |pairs: &mut Vec<(Node, Node)>, pair| {
        if pairs.len() >= cap {
            return Err(Error::PairCapExceeded { cap });
        }
        pairs.push(pair);
        Ok(())
    };
    if total == 0 {
        if q.start.is_some() && q.end.is_some() {
            push(&mut pairs, (Node::Start, Node::End))?;
        }
        return Ok(pairs);
    }
    if q.start.is_some() {
        for &i in &levels[1] {
            push(&mut pairs, (Node::Start, Node::Point(i)))?;
        }
    }
    for lvl in 1..total {
        let next = &levels[lvl + 1];
        for &i in &levels[lvl] {
            let p = pts[i];
            let from = next.partition_point(|&j| pts[j].x < p.x);
            let to = next.partition_point(|&j| pts[j].y >= p.y);
            for &j in &next[from..to.max(from)] {
                debug_assert!(dominates(p, pts[j]));
                push(&mut pairs, (Node::Point(i), Node::Point(j)))?;
            }
        }
    }
    if q.end.is_some() {
        for &i in &levels[total] {
            push(&mut pairs, (Node::Point(i), Node::End))?;
        }
    }
    Ok(pairs)
}

/// Pair endpoints in the diagonal frame.
pub fn pair_segments(pairs: &[(Node, Node)], q: &ChainQuery) -> Vec<(PointTS, PointTS)> {
    pairs
        .iter()
        .map(|&(a, b)| (node_point(q, a).to_ts(), node_point(q, b).to_ts()))
        .collect()
}

/// A linear piece `s = slope * t + icpt` on `[from, to]`, slope ±1.
#[derive(Debug, Clone, Copy)]
struct Piece {
    from: f64,
    to: f64,
    rising: bool,
    icpt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Active {
    icpt: f64,
    to: f64,
}

impl Eq for Active {}

impl PartialOrd for Active {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Active {
    fn cmp(&self, other: &Self) -> Ordering {
        self.icpt.total_cmp(&other.icpt).then(self.to.total_cmp(&other.to))
    }
}

/// Upper envelope of upper tents, capped at `hi`.
fn upper_envelope(segments: &[(PointTS, PointTS)], hi: f64) -> Vec<PointTS> {
    let mut pieces = Vec::with_capacity(2 * segments.len());
    for &(p, q) in segments {
        let apex = 0.5 * (q.s - p.s + p.t + q.t);
        let apex = apex.clamp(p.t, q.t);
        pieces.push(Piece {
            from: p.t,
            to: apex,
            rising: true,
            icpt: p.s - p.t,
        });
        pieces.push(Piece {
            from: apex,
            to: q.t,
            rising: false,
            icpt: q.s + q.t,
        });
    }
    pieces.retain(|pc| pc.to > pc.from);
    let mut events: Vec<f64> = pieces.iter().flat_map(|pc| [pc.from, pc.to]).collect();
    events.sort_unstable_by(f64::total_cmp);
    events.dedup();
    pieces.sort_unstable_by(|a, b| a.from.total_cmp(&b.from));

    let mut rising: BinaryHeap<Active> = BinaryHeap::new();
    let mut falling: BinaryHeap<Active> = BinaryHeap::new();
    let mut out: Vec<PointTS> = Vec::new();
    let mut next = 0;
    let emit = |out: &mut Vec<PointTS>, t: f64, s: f64| match out.last_mut() {
        Some(last) if last.t == t => last.s = last.s.max(s),
        _ => out.push(PointTS::new(t, s)),
    };
    for w in events.windows(2) {
        let (a, b) = (w[0], w[1]);
        while next < pieces.len() && pieces[next].from <= a {
            let pc = pieces[next];
            let act = Active {
                icpt: pc.icpt,
                to: pc.to,
            };
            if pc.rising {
                rising.push(act)
            } else {
                falling.push(act)
            }
            next += 1;
        }
        for heap in [&mut rising, &mut falling] {
            while heap.peek().is_some_and(|top| top.to <= a) {
                heap.pop();
            }
        }
        let up = rising.peek().map(|x| x.icpt);
        let down = falling.peek().map(|x| x.icpt);
        if up.is_none() && down.is_none() {
            continue;
        }
        let f = |t: f64| {
            let r = up.map_or(f64::NEG_INFINITY, |c| t + c);
            let d = down.map_or(f64::NEG_INFINITY, |c| c - t);
            r.max(d).min(hi)
        };
        let mut inner: Vec<f64> = Vec::with_capacity(3);
        if let (Some(u), Some(d)) = (up, down) {
            inner.push(0.5 * (d - u));
        }
        if let Some(u) = up {
            inner.push(hi - u);
        }
        if let Some(d) = down {
            inner.push(d - hi);
        }
        inner.retain(|&t| t > a && t < b);
        inner.sort_unstable_by(f64::total_cmp);
        emit(&mut out, a, f(a));
        for t in inner {
            emit(&mut out, t, f(t));
        }
        emit(&mut out, b, f(b));
    }
    out
}

/// Envelope of the tents spanned by a maximizer family.
///
/// `segments` are consecutive pairs `(p, q)` with `t_p <= t_q`, covering a
/// `t` interval without gaps (as produced by [`valid_pairs`]). The upper side
/// is the pointwise maximum of the upper tents capped at `clip.1`; the lower
/// side is the pointwise minimum of the lower tents floored at `clip.0`.
pub fn tent_envelope(segments: &[(PointTS, PointTS)], side: Side, clip: (f64, f64)) -> Result<EnvelopePolyline> {
    if segments.is_empty() {
        return Err(Error::NoMaximizer);
    }
    let breakpoints = match side {
        Side::Upper => upper_envelope(segments, clip.1),
        Side::Lower => {
            let mirrored: Vec<(PointTS, PointTS)> = segments
                .iter()
                .map(|&(p, q)| (PointTS::new(p.t, -p.s), PointTS::new(q.t, -q.s)))
                .collect();
            upper_envelope(&mirrored, -clip.0)
                .into_iter()
                .map(|p| PointTS::new(p.t, -p.s))
                .collect()
        }
    };
    let breakpoints = if breakpoints.is_empty() {
        // every segment is a single point
        let (p, _) = segments[0];
        vec![p]
    } else {
        breakpoints
    };
    Ok(EnvelopePolyline {
        breakpoints,
        side,
        clip,
    })
}

/// `max_t (upper(t) - lower(t))` over the common `t` range, and where it is attained.
pub fn envelope_margin(upper: &EnvelopePolyline, lower: &EnvelopePolyline) -> Option<(f64, f64)> {
    let (ua, ub) = upper.t_range()?;
    let (la, lb) = lower.t_range()?;
    let (a, b) = (ua.max(la), ub.min(lb));
    if a > b {
        return None;
    }
    let mut ts: Vec<f64> = upper
        .breakpoints
        .iter()
        .chain(&lower.breakpoints)
        .map(|p| p.t)
        .filter(|&t| t >= a && t <= b)
        .chain([a, b])
        .collect();
    ts.sort_unstable_by(f64::total_cmp);
    ts.dedup();
    ts.into_iter()
        .filter_map(|t| Some((upper.eval(t)? - lower.eval(t)?, t)))
        .max_by(|x, y| x.0.total_cmp(&y.0))
}

/// Queries between the bottom corners and between the top corners of `rect`.
pub fn corner_queries<'a>(points: &'a PointSet, rect: &DiagRect) -> (ChainQuery<'a>, ChainQuery<'a>) {
    let region = Region::Diag(*rect);
    let (t0, t1) = (rect.t_min, rect.t_max());
    let (s0, s1) = (rect.s_min, rect.s_max());
    let bottom = ChainQuery::new(points)
        .within(region.clone())
        .between(PointTS::new(t0, s0).to_xy(), PointTS::new(t1, s0).to_xy());
    let top = ChainQuery::new(points)
        .within(region)
        .between(PointTS::new(t0, s1).to_xy(), PointTS::new(t1, s1).to_xy());
    (bottom, top)
}

/// Decides exactly whether a bottom maximizer and a top maximizer can meet.
///
/// Both families start apart (bottom at `s_min`, top at `s_min + width`). If the
/// highest bottom realization reaches the lowest top realization at some `t`,
/// the two curves attaining those extremes cross before `t`; conversely any
/// crossing point witnesses such a `t`.
pub fn omega_occurs(points: &PointSet, rect: &DiagRect) -> Result<OmegaReport> {
    let (bottom, top) = corner_queries(points, rect);
    let sk_b = build_skeleton(&bottom)?;
    let sk_t = build_skeleton(&top)?;
    let clip = (rect.s_min, rect.s_max());
    let upper = tent_envelope(&pair_segments(&valid_pairs(&sk_b, &bottom)?, &bottom), Side::Upper, clip)?;
    let lower = tent_envelope(&pair_segments(&valid_pairs(&sk_t, &top)?, &top), Side::Lower, clip)?;
    let (margin, at) = envelope_margin(&upper, &lower).ok_or(Error::NoMaximizer)?;
    let occurs = margin >= -OMEGA_EPS;
    let shared_member = sk_b.member.iter().zip(&sk_t.member).any(|(a, b)| *a && *b);
    Ok(OmegaReport {
        occurs,
        witness_t: occurs.then_some(at),
        margin,
        shared_member,
    })
}

/// All maximal chains, by depth-first search over consecutive pairs. Fails
/// once more than `cap` chains have been found.
pub fn enumerate_maximizers(q: &ChainQuery, cap: usize) -> Result<Vec<Vec<usize>>> {
    if cap == 0 {
        return Err(Error::CapExceeded { cap });
    }
    let sk = build_skeleton(q)?;
    let pairs = valid_pairs(&sk, q)?;
    let mut succ: std::collections::BTreeMap<Node, Vec<Node>> = std::collections::BTreeMap::new();
    for &(a, b) in &pairs {
        succ.entry(a).or_default().push(b);
    }
    let roots: Vec<Node> = if q.start.is_some() {
        vec![Node::Start]
    } else {
        sk.members()
            .filter(|&i| sk.forward[i] == 1)
            .map(Node::Point)
            .collect()
    };
    let total = sk.total as usize;
    let mut out: Vec<Vec<usize>> = Vec::new();
    if total == 0 {
        if q.start.is_some() && q.end.is_some() || q.start.is_none() && q.end.is_none() {
            out.push(Vec::new());
        }
        return Ok(out);
    }
    let mut path: Vec<usize> = Vec::with_capacity(total);
    fn dfs(
        node: Node,
        succ: &std::collections::BTreeMap<Node, Vec<Node>>,
        total: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<()> {
        if let Node::Point(i) = node {
            path.push(i);
        }
        let children = succ.get(&node).map(|v| v.as_slice()).unwrap_or(&[]);
        if path.len() == total {
            if out.len() >= cap {
                return Err(Error::CapExceeded { cap });
            }
            out.push(path.clone());
        } else {
            for &c in children {
                if c != Node::End {
                    dfs(c, succ, total, path, out, cap)?;
                }
            }
        }
        if let Node::Point(_) = node {
            path.pop();
        }
        Ok(())
    }
    for r in roots {
        dfs(r, &succ, total, &mut path, &mut out, cap)?;
    }
    Ok(out)
}

/// Reachable-`s` bound of one chain (endpoints included) at time `t`.
fn chain_tent(chain: &[PointTS], t: f64, side: Side, clip: (f64, f64)) -> Option<f64> {
    let k = chain.windows(2).position(|w| w[0].t <= t && t <= w[1].t)?;
    let (p, q) = (chain[k], chain[k + 1]);
    Some(match side {
        Side::Upper => (p.s + (t - p.t)).min(q.s + (q.t - t)).min(clip.1),
        Side::Lower => (p.s - (t - p.t)).max(q.s - (q.t - t)).max(clip.0),
    })
}

/// Times where a single chain's tent bound can change slope.
fn chain_kinks(chain: &[PointTS], side: Side, clip: (f64, f64)) -> Vec<f64> {
    let mut ts = Vec::new();
    for w in chain.windows(2) {
        let (p, q) = (w[0], w[1]);
        ts.push(p.t);
        ts.push(q.t);
        match side {
            Side::Upper => {
                ts.push(0.5 * (q.s - p.s + p.t + q.t));
                ts.push(p.t + clip.1 - p.s);
                ts.push(q.t - (clip.1 - q.s));
            }
            Side::Lower => {
                ts.push(0.5 * (p.s - q.s + p.t + q.t));
                ts.push(p.t + p.s - clip.0);
                ts.push(q.t - (q.s - clip.0));
            }
        }
    }
    ts
}

/// Pairwise version of [`omega_occurs`]: enumerates both maximizer families
/// and checks every (bottom, top) pair for a meeting realization.
pub fn omega_bruteforce(points: &PointSet, rect: &DiagRect, cap: usize) -> Result<bool> {
    let (bottom, top) = corner_queries(points, rect);
    let clip = (rect.s_min, rect.s_max());
    let as_ts = |q: &ChainQuery, chain: &[usize]| -> Vec<PointTS> {
        std::iter::once(q.start.unwrap())
            .chain(chain.iter().map(|&i| points.get(i)))
            .chain(std::iter::once(q.end.unwrap()))
            .map(|p| p.to_ts())
            .collect()
    };
    let bottoms: Vec<Vec<PointTS>> = enumerate_maximizers(&bottom, cap)?
        .iter()
        .map(|c| as_ts(&bottom, c))
        .collect();
    let tops: Vec<Vec<PointTS>> = enumerate_maximizers(&top, cap)?
        .iter()
        .map(|c| as_ts(&top, c))
        .collect();
    for b in &bottoms {
        let kb = chain_kinks(b, Side::Upper, clip);
        for t in &tops {
            let mut ts = kb.clone();
            ts.extend(chain_kinks(t, Side::Lower, clip));
            let meets = ts.into_iter().any(|x| {
                match (chain_tent(b, x, Side::Upper, clip), chain_tent(t, x, Side::Lower, clip)) {
                    (Some(u), Some(l)) => u - l >= -OMEGA_EPS,
                    _ => false,
                }
            });
            if meets {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
