//! Planar coordinates, regions and the dominance order.
//!
//! Points are stored in the usual `(x, y)` frame. Diagonal coordinates
//! `(t, s)` measure distance along `y = x` and along `y = -x`:
//!
//! ```text
//! t = (x + y) / √2    s = (y - x) / √2
//! x = (t - s) / √2    y = (t + s) / √2
//! ```
//!
//! An increasing path is a curve whose slope in the `(t, s)` frame stays in
//! `[-1, 1]`, which is the same as being non-decreasing in both `x` and `y`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};

/// A point in the `(x, y)` frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointXY {
    pub x: f64,
    pub y: f64,
}

/// A point in the diagonal `(t, s)` frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointTS {
    pub t: f64,
    pub s: f64,
}

impl PointXY {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_ts(self) -> PointTS {
        xy_to_ts(self)
    }

    /// Anti-diagonal coordinate `s`.
    #[inline]
    pub fn s(self) -> f64 {
        (self.y - self.x) * FRAC_1_SQRT_2
    }

    /// Diagonal coordinate `t`.
    #[inline]
    pub fn t(self) -> f64 {
        (self.x + self.y) * FRAC_1_SQRT_2
    }
}

impl PointTS {
    pub const fn new(t: f64, s: f64) -> Self {
        Self { t, s }
    }

    pub fn to_xy(self) -> PointXY {
        ts_to_xy(self)
    }
}

#[inline]
pub fn xy_to_ts(p: PointXY) -> PointTS {
    PointTS {
        t: (p.x + p.y) * FRAC_1_SQRT_2,
        s: (p.y - p.x) * FRAC_1_SQRT_2,
    }
}

#[inline]
pub fn ts_to_xy(p: PointTS) -> PointXY {
    PointXY {
        x: (p.t - p.s) * FRAC_1_SQRT_2,
        y: (p.t + p.s) * FRAC_1_SQRT_2,
    }
}

/// Weak dominance: `q` is reachable from `p` by an increasing path.
#[inline]
pub fn dominates(p: PointXY, q: PointXY) -> bool {
    q.x >= p.x && q.y >= p.y
}

/// Dominance expressed in the diagonal frame (the slope cone).
#[inline]
pub fn dominates_ts(p: PointTS, q: PointTS) -> bool {
    let dt = q.t - p.t;
    dt >= 0.0 && (q.s - p.s).abs() <= dt
}

/// Axis-aligned rectangle in the diagonal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRect {
    pub t_min: f64,
    pub s_min: f64,
    pub len: f64,
    pub width: f64,
}

impl DiagRect {
    pub fn new(t_min: f64, s_min: f64, len: f64, width: f64) -> Result<Self> {
        let finite = [t_min, s_min, len, width].iter().all(|v| v.is_finite());
        if !finite || len <= 0.0 || width <= 0.0 {
            return Err(Error::InvalidRegion(format!(
                "diagonal rectangle needs finite corner and positive sides, got len={len} width={width}"
            )));
        }
        Ok(Self {
            t_min,
            s_min,
            len,
            width,
        })
    }

    /// Rectangle `[0, len] x [0, width]` in the diagonal frame.
    pub fn at_origin(len: f64, width: f64) -> Result<Self> {
        Self::new(0.0, 0.0, len, width)
    }

    pub fn t_max(&self) -> f64 {
        self.t_min + self.len
    }

    pub fn s_max(&self) -> f64 {
        self.s_min + self.width
    }

    pub fn contains_ts(&self, p: PointTS) -> bool {
        p.t >= self.t_min && p.t <= self.t_max() && p.s >= self.s_min && p.s <= self.s_max()
    }

    /// Membership of an `(x, y)` point. The frame change costs a few ulps, so
    /// the closed boundary is widened by a relative `1e-12`.
    pub fn contains(&self, p: PointXY) -> bool {
        let q = p.to_ts();
        let eps = 1e-12 * (1.0 + q.t.abs().max(q.s.abs()));
        q.t >= self.t_min - eps
            && q.t <= self.t_max() + eps
            && q.s >= self.s_min - eps
            && q.s <= self.s_max() + eps
    }

    pub fn area(&self) -> f64 {
        self.len * self.width
    }
}

/// A convex planar region.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `[0, n]^2`.
    AxisSquare { n: f64 },
    /// Rectangle in the diagonal frame.
    Diag(DiagRect),
    /// `[0, n]^2 ∩ {|y - x| <= half_width}`.
    Strip { n: f64, half_width: f64 },
    /// Convex polygon in the `(x, y)` frame, vertices counter-clockwise.
    Polygon { vertices: Vec<PointXY> },
}

/// Where uniform draws for a region come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingFrame {
    /// `[x0, x1] x [y0, y1]` in the `(x, y)` frame.
    Xy { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// A rectangle in the diagonal frame.
    Ts(DiagRect),
}

impl Region {
    pub fn square(n: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::InvalidRegion(format!("square side must be finite and >= 0, got {n}")));
        }
        Ok(Region::AxisSquare { n })
    }

    /// Strip with an explicit half-width `d`.
    pub fn strip(n: f64, half_width: f64) -> Result<Self> {
        if !(n.is_finite() && n >= 0.0 && half_width.is_finite() && half_width >= 0.0) {
            return Err(Error::InvalidRegion(format!(
                "strip needs finite n >= 0 and half-width >= 0, got n={n} d={half_width}"
            )));
        }
        Ok(Region::Strip { n, half_width })
    }

    /// Strip of half-width `n^gamma`, `0 < gamma < 2/3`.
    pub fn strip_gamma(n: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0 / 3.0) {
            return Err(Error::InvalidRegion(format!("strip exponent must lie in (0, 2/3), got {gamma}")));
        }
        Self::strip(n, n.powf(gamma))
    }

    /// Convex polygon. Vertices may be given in either orientation; collinear
    /// runs are allowed, reflex corners are rejected.
    pub fn polygon(vertices: Vec<PointXY>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidRegion("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidRegion("polygon vertices must be finite".into()));
        }
        let mut vertices = vertices;
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let k = vertices.len();
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let c = vertices[(i + 2) % k];
            if cross(a, b, c) < 0.0 {
                return Err(Error::InvalidRegion("polygon is not convex".into()));
            }
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::InvalidRegion("polygon has zero area".into()));
        }
        Ok(Region::Polygon { vertices })
    }

    /// Closed-boundary membership.
    pub fn contains(&self, p: PointXY) -> bool {
        match self {
            Region::AxisSquare { n } => p.x >= 0.0 && p.x <= *n && p.y >= 0.0 && p.y <= *n,
            Region::Diag(rect) => rect.contains(p),
            Region::Strip { n, half_width } => {
                p.x >= 0.0 && p.x <= *n && p.y >= 0.0 && p.y <= *n && (p.y - p.x).abs() <= *half_width
            }
            Region::Polygon { vertices } => {
                let k = vertices.len();
                (0..k).all(|i| cross(vertices[i], vertices[(i + 1) % k], p) >= 0.0)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Region::AxisSquare { n } => n * n,
            Region::Diag(rect) => rect.area(),
            Region::Strip { n, half_width } => {
                let d = half_width.min(*n);
                n * n - (n - d) * (n - d)
            }
            Region::Polygon { vertices } => signed_area(vertices).abs(),
        }
    }

    /// Bounding frame used by the sampler, and whether every draw in it lands
    /// inside the region.
    pub fn sampling_frame(&self) -> (SamplingFrame, bool) {
        match self {
            Region::AxisSquare { n } => (
                SamplingFrame::Xy {
                    x0: 0.0,
                    x1: *n,
                    y0: 0.0,
                    y1: *n,
                },
                true,
            ),
            Region::Diag(rect) => (SamplingFrame::Ts(*rect), true),
            Region::Strip { n, half_width } => {
                let d = half_width.min(*n);
                let half = d * FRAC_1_SQRT_2;
                let frame = DiagRect {
                    t_min: 0.0,
                    s_min: -half,
                    len: n * SQRT_2,
                    width: 2.0 * half,
                };
                (SamplingFrame::Ts(frame), false)
            }
            Region::Polygon { vertices } => {
                let ts: Vec<PointTS> = vertices.iter().map(|v| v.to_ts()).collect();
                let t0 = ts.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
                let t1 = ts.iter().map(|p| p.t).fold(f64::NEG_INFINITY, f64::max);
                let s0 = ts.iter().map(|p| p.s).fold(f64::INFINITY, f64::min);
                let s1 = ts.iter().map(|p| p.s).fold(f64::NEG_INFINITY, f64::max);
                let frame = DiagRect {
                    t_min: t0,
                    s_min: s0,
                    len: t1 - t0,
                    width: s1 - s0,
                };
                let x0 = vertices.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
                let x1 = vertices.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
                let y0 = vertices.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
                let y1 = vertices.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
                // pick the tighter bounding box
                if (x1 - x0) * (y1 - y0) <= frame.area() {
                    (SamplingFrame::Xy { x0, x1, y0, y1 }, false)
                } else {
                    (SamplingFrame::Ts(frame), false)
                }
            }
        }
    }

    /// Range of `s` over the region, used to clip path envelopes.
    pub fn s_range(&self) -> (f64, f64) {
        match self.sampling_frame().0 {
            SamplingFrame::Ts(r) => (r.s_min, r.s_max()),
            SamplingFrame::Xy { x0, x1, y0, y1 } => ((y0 - x1) * FRAC_1_SQRT_2, (y1 - x0) * FRAC_1_SQRT_2),
        }
    }
}

pub fn region_contains(r: &Region, p: PointXY) -> bool {
    r.contains(p)
}

pub fn region_area(r: &Region) -> f64 {
    r.area()
}

#[inline]
fn cross(a: PointXY, b: PointXY, c: PointXY) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn signed_area(v: &[PointXY]) -> f64 {
    let k = v.len();
    0.5 * (0..k)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % k];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}
