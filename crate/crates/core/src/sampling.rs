//! Reproducible unit-intensity Poisson sampling.
//!
//! Every replicate owns a generator derived from `(seed, stream)` through a
//! fixed 64-bit avalanche mix (the SplitMix64 finaliser). Replicate `r` is
//! therefore the same no matter which thread draws it or in which order the
//! replicates run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{PointTS, PointXY, Region, SamplingFrame};

/// Generator used for all simulation draws.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Base seed plus replicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub const fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same base seed, different replicate.
    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    /// A child spec for an independent sub-experiment (e.g. one size of a sweep).
    pub fn derive(self, tag: u64) -> Self {
        Self {
            seed: mix64(self.seed ^ mix64(tag.wrapping_add(GOLDEN_GAMMA))),
            stream: self.stream,
        }
    }

    pub fn rng(self) -> SimRng {
        let mut state = mix64(self.seed) ^ mix64(self.stream.wrapping_mul(GOLDEN_GAMMA).wrapping_add(1));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        SimRng::from_seed(key)
    }
}

/// Immutable point configuration, sorted lexicographically by `(x, y)`,
/// without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    points: Vec<PointXY>,
}

impl PointSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and drops exact duplicates.
    pub fn from_points(mut points: Vec<PointXY>) -> Self {
        sort_lex(&mut points);
        points.dedup();
        Self { points }
    }

    pub fn from_ts(points: &[PointTS]) -> Self {
        Self::from_points(points.iter().map(|p| p.to_xy()).collect())
    }

    pub fn points(&self) -> &[PointXY] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize) -> PointXY {
        self.points[i]
    }

    /// Points that also lie in `region`, as a new set.
    pub fn restrict(&self, region: &Region) -> PointSet {
        PointSet {
            points: self.points.iter().copied().filter(|p| region.contains(*p)).collect(),
        }
    }
}

#[inline]
fn lex_cmp(a: &PointXY, b: &PointXY) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Lexicographic sort. Large inputs are bucketed on `x` first, which keeps the
/// per-bucket sorts cache-resident.
fn sort_lex(points: &mut Vec<PointXY>) {
    let n = points.len();
    if n < 1 << 14 {
        points.sort_unstable_by(lex_cmp);
        return;
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        points.sort_unstable_by(lex_cmp);
        return;
    }
    let buckets = n / 8;
    let scale = buckets as f64 / (hi - lo);
    let bucket_of = |x: f64| (((x - lo) * scale) as usize).min(buckets - 1);
    let mut starts = vec![0usize; buckets + 1];
    for p in points.iter() {
        starts[bucket_of(p.x) + 1] += 1;
    }
    for b in 0..buckets {
        starts[b + 1] += starts[b];
    }
    let mut cursor = starts.clone();
    let mut out = vec![PointXY::default(); n];
    for p in points.iter() {
        let b = bucket_of(p.x);
        out[cursor[b]] = *p;
        cursor[b] += 1;
    }
    for b in 0..buckets {
        out[starts[b]..starts[b + 1]].sort_unstable_by(lex_cmp);
    }
    *points = out;
}

/// One Poisson draw from an existing generator.
pub fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::InvalidMean(mean));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| Error::InvalidMean(mean))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson count for a seed; exact distribution.
pub fn poisson_count(mean: f64, seed: SeedSpec) -> Result<u64> {
    poisson_draw(&mut seed.rng(), mean)
}

fn draw_in_region<R: Rng + ?Sized>(rng: &mut R, region: &Region, frame: SamplingFrame, exact: bool) -> PointXY {
    loop {
        let p = match frame {
            SamplingFrame::Xy { x0, x1, y0, y1 } => {
                PointXY::new(x0 + (x1 - x0) * rng.random::<f64>(), y0 + (y1 - y0) * rng.random::<f64>())
            }
            SamplingFrame::Ts(r) => PointTS::new(
                r.t_min + r.len * rng.random::<f64>(),
                r.s_min + r.width * rng.random::<f64>(),
            )
            .to_xy(),
        };
        if exact || region.contains(p) {
            return p;
        }
    }
}

/// Unit-intensity Poisson process restricted to `region`.
pub fn sample_region(region: &Region, seed: SeedSpec) -> Result<PointSet> {
    let area = region.area();
    if !area.is_finite() {
        return Err(Error::InvalidRegion("region area is not finite".into()));
    }
    let mut rng = seed.rng();
    let count = poisson_draw(&mut rng, area)? as usize;
    if count == 0 {
        return Ok(PointSet::empty());
    }
    let (frame, exact) = region.sampling_frame();
    let mut points: Vec<PointXY> = (0..count).map(|_| draw_in_region(&mut rng, region, frame, exact)).collect();
    loop {
        sort_lex(&mut points);
        points.dedup();
        let missing = count - points.len();
        if missing == 0 {
            break;
        }
        points.extend((0..missing).map(|_| draw_in_region(&mut rng, region, frame, exact)));
    }
    Ok(PointSet { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiagRect;

    #[test]
    fn zero_mean_is_zero() {
        assert_eq!(poisson_count(0.0, SeedSpec::new(1, 2)).unwrap(), 0);
        assert!(poisson_count(f64::NAN, SeedSpec::default()).is_err());
        assert!(poisson_count(-1.0, SeedSpec::default()).is_err());
        assert!(poisson_count(f64::INFINITY, SeedSpec::default()).is_err());
    }

    #[test]
    fn poisson_mean_four() {
        let m = 100_000u64;
        let total: u64 = (0..m).map(|i| poisson_count(4.0, SeedSpec::new(5, i)).unwrap()).sum();
        let mean = total as f64 / m as f64;
        assert!((mean - 4.0).abs() <= 3.0 * (4.0 / m as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn poisson_large_mean_moments() {
        let m = 20_000u64;
        let mu = 1.0e5;
        let xs: Vec<f64> = (0..m).map(|i| poisson_count(mu, SeedSpec::new(9, i)).unwrap() as f64).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        assert!((mean - mu).abs() <= 4.0 * (mu / m as f64).sqrt());
        assert!((var / mu - 1.0).abs() < 0.05);
    }

    #[test]
    fn determinism() {
        let s = SeedSpec::new(42, 3);
        assert_eq!(poisson_count(17.5, s).unwrap(), poisson_count(17.5, s).unwrap());
        let r = Region::Diag(DiagRect::at_origin(30.0, 5.0).unwrap());
        assert_eq!(sample_region(&r, s).unwrap(), sample_region(&r, s).unwrap());
        assert_ne!(sample_region(&r, s).unwrap(), sample_region(&r, s.with_stream(4)).unwrap());
    }

    #[test]
    fn zero_area_strip_is_empty() {
        let r = Region::strip(10.0, 0.0).unwrap();
        assert!(sample_region(&r, SeedSpec::new(1, 1)).unwrap().is_empty());
    }

    #[test]
    fn diag_rect_mean_count() {
        let r = Region::Diag(DiagRect::at_origin(100.0, 10.0).unwrap());
        let m = 10_000u64;
        let total: usize = (0..m).map(|i| sample_region(&r, SeedSpec::new(8, i)).unwrap().len()).sum();
        let mean = total as f64 / m as f64;
        // sd of the mean count is sqrt(1000 / 1e4)
        assert!((mean - 1000.0).abs() <= 3.0 * (1000.0 / m as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn samples_sorted_distinct_and_inside() {
        let regions = [
            Region::square(40.0).unwrap(),
            Region::strip(200.0, 7.0).unwrap(),
            Region::Diag(DiagRect::new(3.0, -2.0, 50.0, 4.0).unwrap()),
            Region::polygon(vec![
                PointXY::new(0.0, 0.0),
                PointXY::new(30.0, 0.0),
                PointXY::new(0.0, 30.0),
            ])
            .unwrap(),
        ];
        for (k, r) in regions.iter().enumerate() {
            let ps = sample_region(r, SeedSpec::new(77, k as u64)).unwrap();
            assert!(!ps.is_empty());
            for w in ps.points().windows(2) {
                assert_eq!(lex_cmp(&w[0], &w[1]), std::cmp::Ordering::Less);
            }
            assert!(ps.points().iter().all(|p| r.contains(*p)));
        }
    }

    #[test]
    fn bucket_sort_agrees_with_plain_sort() {
        let mut rng = SeedSpec::new(3, 3).rng();
        let mut pts: Vec<PointXY> = (0..50_000)
            .map(|_| PointXY::new(rng.random::<f64>() * 10.0, rng.random::<f64>()))
            .collect();
        pts.extend_from_within(..100);
        let mut expected = pts.clone();
        expected.sort_unstable_by(lex_cmp);
        sort_lex(&mut pts);
        assert_eq!(pts, expected);
    }

    /// Equal-area halves must receive statistically equal counts.
    #[test]
    fn uniformity_two_proportion() {
        let cases: Vec<(Region, Box<dyn Fn(PointXY) -> bool>)> = vec![
            (Region::square(10.0).unwrap(), Box::new(|p: PointXY| p.x < 5.0)),
            (Region::strip(20.0, 3.0).unwrap(), Box::new(|p: PointXY| p.y > p.x)),
            (
                Region::Diag(DiagRect::at_origin(12.0, 4.0).unwrap()),
                Box::new(|p: PointXY| p.t() < 6.0),
            ),
        ];
        for (k, (region, left)) in cases.iter().enumerate() {
            let (mut a, mut b) = (0u64, 0u64);
            for i in 0..10_000u64 {
                for p in sample_region(region, SeedSpec::new(100 + k as u64, i)).unwrap().points() {
                    if left(*p) {
                        a += 1
                    } else {
                        b += 1
                    }
                }
            }
            // two-proportion z-test of p_a = 1/2
            let n = (a + b) as f64;
            let z = (a as f64 / n - 0.5) / (0.25 / n).sqrt();
            assert!(z.abs() < 2.576, "case {k}: z = {z}");
        }
    }
}
