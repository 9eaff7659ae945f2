//! Monte Carlo drivers.
//!
//! Every driver fans replicates out over a private rayon pool. Replicate `r`
//! of size index `k` draws from `seed.derive(k).with_stream(r)`, and results
//! are gathered by index, so the records do not depend on the thread count.

pub mod stats;

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::chains::{build_skeleton, longest_chain, poisson_box_length, transversal_with_skeleton, ChainQuery};
use crate::error::{Error, Result};
use crate::geometry::{DiagRect, PointTS, PointXY, Region};
use crate::regeneration::omega_occurs;
use crate::sampling::{sample_region, PointSet, SeedSpec};

pub use stats::{
    ks_one_sample_normal, ks_two_sample, loglog_fit, median, ols_slope, summarize, wilson_ci, KsReport, ProbReport,
    SlopeReport, SummaryStats,
};

/// Tolerance on fitted strip exponents around `1 - gamma` and `1 - gamma / 2`.
pub const STRIP_SLOPE_TOL: f64 = 0.2;
/// Required `r^2` of the strip mean-deficiency fit.
pub const STRIP_R2_MIN: f64 = 0.95;
/// Transversal exponent window `2/3 ± 0.1`.
pub const TRANSVERSAL_TOL: f64 = 0.1;
/// Bounds on `|skewness|` for the Gaussian limit check.
pub const CLT_SKEW_MAX: f64 = 0.25;
/// Acceptance windows for the Tracy–Widom constants, centred on the GUE
/// moments (mean -1.7711, variance 0.8132).
pub const C1_WINDOW: (f64, f64) = (1.47, 2.07);
pub const C2_WINDOW: (f64, f64) = (0.56, 1.06);
/// Required `r^2` of the upper-tail shape fit.
pub const TAIL_R2_MIN: f64 = 0.9;
/// One strip replicate in this many is audited against the full square.
pub const AUDIT_EVERY: u64 = 100;

/// One replicate's measurements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub size_index: usize,
    /// The size parameter of this row (`n`, `t`, `w`, ...).
    pub size: f64,
    pub replicate: u64,
    pub measured: Vec<(String, f64)>,
}

impl ReplicateRecord {
    fn new(size_index: usize, size: f64, replicate: u64, measured: &[(&str, f64)]) -> Self {
        Self {
            size_index,
            size,
            replicate,
            measured: measured.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Values of one column for one size.
pub fn column(records: &[ReplicateRecord], size_index: usize, name: &str) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.size_index == size_index)
        .filter_map(|r| r.get(name))
        .collect()
}

/// Runs `f(0..count)` on `threads` workers and returns results in index order.
pub fn par_map<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Shared sweep parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sizes: Vec<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub delta_prime: Option<f64>,
    pub m: usize,
    pub seed: u64,
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(sizes: Vec<f64>, m: usize, seed: u64) -> Self {
        Self {
            sizes,
            gamma: None,
            delta: None,
            delta_prime: None,
            m,
            seed,
            threads: 1,
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn deltas(mut self, delta: f64, delta_prime: f64) -> Self {
        self.delta = Some(delta);
        self.delta_prime = Some(delta_prime);
        self
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self, min_m: usize) -> Result<()> {
        if self.m < min_m {
            return Err(Error::InvalidConfig(format!("need at least {min_m} replicates, got {}", self.m)));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("no sizes given".into()));
        }
        if self.sizes.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidConfig("sizes must be positive".into()));
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("sizes must be strictly increasing".into()));
        }
        if let Some(g) = self.gamma {
            check_gamma(g)?;
        }
        match (self.delta, self.delta_prime) {
            (Some(d), Some(dp)) => check_deltas(d, dp)?,
            (None, None) => {}
            (Some(d), None) if d > 0.0 => {}
            _ => return Err(Error::InvalidConfig("delta' requires delta".into())),
        }
        Ok(())
    }

    fn seed_for(&self, size_index: usize, replicate: u64) -> SeedSpec {
        SeedSpec::new(self.seed, 0).derive(size_index as u64).with_stream(replicate)
    }
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 / 3.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("gamma must lie in (0, 2/3), got {gamma}")))
    }
}

/// `0 < delta < 1/12` and `0 < delta' < 1/6 - 2 delta`.
pub fn check_deltas(delta: f64, delta_prime: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1/12), got {delta}")));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0 / 6.0 - 2.0 * delta) {
        return Err(Error::InvalidConfig(format!(
            "delta' must lie in (0, 1/6 - 2 delta) = (0, {}), got {delta_prime}",
            1.0 / 6.0 - 2.0 * delta
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tracy–Widom constants

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwReport {
    pub n: f64,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub stats: SummaryStats,
    pub pass: bool,
}

/// Corner-to-corner length in `[0, n]^2`; `c1 = (2n - mean) / n^{1/3}`,
/// `c2 = variance / n^{2/3}`.
pub fn run_tw_constants(n: f64, m: usize, seed: u64, threads: usize) -> Result<(TwReport, Vec<ReplicateRecord>)> {
    if !(n >= 100.0) {
        return Err(Error::InvalidConfig(format!("n must be at least 100, got {n}")));
    }
    let cfg = ExperimentConfig::new(vec![n], m, seed).threads(threads);
    cfg.validate(2)?;
    let records = par_map(threads, m, |r| {
        let len = poisson_box_length(n * n, cfg.seed_for(0, r as u64))?;
        Ok(ReplicateRecord::new(0, n, r as u64, &[("length", len as f64)]))
    })?;
    let stats = summarize(&column(&records, 0, "length"))?;
    let c1_hat = (2.0 * n - stats.mean) / n.cbrt();
    let c2_hat = stats.variance / n.powf(2.0 / 3.0);
    let pass = (C1_WINDOW.0..=C1_WINDOW.1).contains(&c1_hat) && (C2_WINDOW.0..=C2_WINDOW.1).contains(&c2_hat);
    Ok((
        TwReport {
            n,
            c1_hat,
            c2_hat,
            stats,
            pass,
        },
        records,
    ))
}

// ---------------------------------------------------------------------------
// Strip scaling and the Gaussian limit

/// Length in the strip `[0, n]^2 ∩ {|y - x| <= n^gamma}`, corner to corner
/// unless `free_endpoints`.
pub fn strip_length(n: f64, gamma: f64, free_endpoints: bool, seed: SeedSpec) -> Result<(u32, PointSet)> {
    let region = Region::strip_gamma(n, gamma)?;
    let pts = sample_region(&region, seed)?;
    let mut q = ChainQuery::new(&pts).within(region);
    if !free_endpoints {
        q = q.between(PointXY::new(0.0, 0.0), PointXY::new(n, n));
    }
    let len = longest_chain(&q)?.length;
    Ok((len, pts))
}

/// Audit: extend the strip sample to a Poisson sample of the whole square and
/// check that the unrestricted corner-to-corner length is at least the strip
/// length.
fn audit_against_square(n: f64, gamma: f64, strip_pts: &PointSet, strip_len: u32, seed: SeedSpec) -> Result<bool> {
    let strip = Region::strip_gamma(n, gamma)?;
    Ok(superset_square_length(n, &strip, strip_pts, seed.derive(0xA0D1))? >= strip_len)
}

/// Corner-to-corner length in `[0, n]^2` for the union of `inside` (a sample
/// of `region`) and a fresh Poisson sample of the square outside `region`.
///
/// The square is swept in unit-width vertical slabs so that only one slab is
/// held in memory; the chain is a weak longest increasing subsequence of `y`
/// in lexicographic order.
pub fn superset_square_length(n: f64, region: &Region, inside: &PointSet, seed: SeedSpec) -> Result<u32> {
    use rand::Rng;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidRegion(format!("square side must be positive, got {n}")));
    }
    let mut rng = seed.rng();
    let slabs = n.ceil() as usize;
    let inside = inside.points();
    let mut next_inside = 0;
    let mut tails: Vec<f64> = Vec::new();
    let mut slab: Vec<PointXY> = Vec::new();
    for k in 0..slabs {
        let x0 = k as f64;
        let x1 = (x0 + 1.0).min(n);
        slab.clear();
        let count = crate::sampling::poisson_draw(&mut rng, (x1 - x0) * n)?;
        for _ in 0..count {
            let p = PointXY::new(rng.random_range(x0..x1), rng.random_range(0.0..n));
            if !region.contains(p) {
                slab.push(p);
            }
        }
        let last = k + 1 == slabs;
        while next_inside < inside.len() && (last || inside[next_inside].x < x1) {
            slab.push(inside[next_inside]);
            next_inside += 1;
        }
        slab.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        for p in &slab {
            let at = tails.partition_point(|t| *t <= p.y);
            if at == tails.len() {
                tails.push(p.y);
            } else {
                tails[at] = p.y;
            }
        }
    }
    Ok(tails.len() as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    pub gamma: f64,
    pub per_size: Vec<SummaryStats>,
    /// `log(2n - mean)` against `log n`.
    pub deficiency: SlopeReport,
    /// `log variance` against `log n`.
    pub variance: SlopeReport,
    pub audits: usize,
    pub audits_passed: usize,
    pub pass: bool,
}

pub fn run_strip_scaling(cfg: &ExperimentConfig, free_endpoints: bool) -> Result<(StripReport, Vec<ReplicateRecord>)> {
    cfg.validate(2)?;
    let gamma = cfg
        .gamma
        .ok_or_else(|| Error::InvalidConfig("strip scaling needs gamma".into()))?;
    let m = cfg.m;
    let rows = par_map(cfg.threads, cfg.sizes.len() * m, |job| {
        let (k, r) = (job / m, (job % m) as u64);
        let n = cfg.sizes[k];
        let seed = cfg.seed_for(k, r);
        let (len, pts) = strip_length(n, gamma, free_endpoints, seed)?;
        let audit = if r % AUDIT_EVERY == 0 && !free_endpoints {
            Some(audit_against_square(n, gamma, &pts, len, seed)?)
        } else {
            None
        };
        Ok((ReplicateRecord::new(k, n, r, &[("length", len as f64)]), audit))
    })?;
    let audits: Vec<bool> = rows.iter().filter_map(|(_, a)| *a).collect();
    let records: Vec<ReplicateRecord> = rows.into_iter().map(|(rec, _)| rec).collect();
    let per_size = (0..cfg.sizes.len())
        .map(|k| summarize(&column(&records, k, "length")))
        .collect::<Result<Vec<_>>>()?;
    let (deficiency, variance) = strip_fits(&cfg.sizes, &per_size)?;
    let pass = (deficiency.slope - (1.0 - gamma)).abs() <= STRIP_SLOPE_TOL
        && deficiency.r2 > STRIP_R2_MIN
        && (variance.slope - (1.0 - gamma / 2.0)).abs() <= STRIP_SLOPE_TOL
        && audits.iter().all(|a| *a);
    Ok((
        StripReport {
            gamma,
            per_size,
            deficiency,
            variance,
            audits: audits.len(),
            audits_passed: audits.iter().filter(|a| **a).count(),
            pass,
        },
        records,
    ))
}

/// Log-log fits of the mean deficiency `2n - mean` and of the variance.
pub fn strip_fits(sizes: &[f64], per_size: &[SummaryStats]) -> Result<(SlopeReport, SlopeReport)> {
    let deficiency: Vec<f64> = sizes.iter().zip(per_size).map(|(n, s)| 2.0 * n - s.mean).collect();
    let variance: Vec<f64> = per_size.iter().map(|s| s.variance).collect();
    Ok((loglog_fit(sizes, &deficiency)?, loglog_fit(sizes, &variance)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: f64,
    pub gamma: f64,
    pub ks: KsReport,
    pub stats: SummaryStats,
    pub pass: bool,
}

pub fn run_clt(n: f64, gamma: f64, m: usize, seed: u64, threads: usize) -> Result<(CltReport, Vec<ReplicateRecord>)> {
    let cfg = ExperimentConfig::new(vec![n], m, seed).gamma(gamma).threads(threads);
    cfg.validate(stats::KS_MIN_SAMPLES)?;
    let records = par_map(threads, m, |r| {
        let (len, _) = strip_length(n, gamma, false, cfg.seed_for(0, r as u64))?;
        Ok(ReplicateRecord::new(0, n, r as u64, &[("length", len as f64)]))
    })?;
    let lengths = column(&records, 0, "length");
    let stats = summarize(&lengths)?;
    let ks = ks_one_sample_normal(&lengths)?;
    let pass = ks.pass && stats.skewness.abs() < CLT_SKEW_MAX;
    Ok((
        CltReport {
            n,
            gamma,
            ks,
            stats,
            pass,
        },
        records,
    ))
}

/// Lengths in nested strips of one shared sample of `[0, n]^2`, followed by
/// the unrestricted length. Each entry is at most the next.
pub fn nested_strip_lengths(n: f64, gammas: &[f64], seed: SeedSpec) -> Result<Vec<u32>> {
    let pts = sample_region(&Region::square(n)?, seed)?;
    let (a, b) = (PointXY::new(0.0, 0.0), PointXY::new(n, n));
    let mut out = Vec::with_capacity(gammas.len() + 1);
    for &g in gammas {
        let q = ChainQuery::new(&pts).within(Region::strip_gamma(n, g)?).between(a, b);
        out.push(longest_chain(&q)?.length);
    }
    out.push(longest_chain(&ChainQuery::new(&pts).between(a, b))?.length);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Transversal fluctuations

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalReport {
    pub medians: Vec<f64>,
    /// `log median S` against `log n`.
    pub fit: SlopeReport,
    pub pass: bool,
}

pub fn run_transversal(cfg: &ExperimentConfig) -> Result<(TransversalReport, Vec<ReplicateRecord>)> {
    cfg.validate(2)?;
    let m = cfg.m;
    let records = par_map(cfg.threads, cfg.sizes.len() * m, |job| {
        let (k, r) = (job / m, (job % m) as u64);
        let n = cfg.sizes[k];
        let region = Region::square(n)?;
        let pts = sample_region(&region, cfg.seed_for(k, r))?;
        let q = ChainQuery::new(&pts).between(PointXY::new(0.0, 0.0), PointXY::new(n, n));
        let sk = build_skeleton(&q)?;
        let tr = transversal_with_skeleton(&q, &sk)?;
        Ok(ReplicateRecord::new(
            k,
            n,
            r,
            &[
                ("length", sk.total as f64),
                ("s_points", tr.s_points),
                ("s_envelope", tr.s_envelope),
            ],
        ))
    })?;
    let medians: Vec<f64> = (0..cfg.sizes.len())
        .map(|k| median(&column(&records, k, "s_points")).unwrap_or(f64::NAN))
        .collect();
    let fit = loglog_fit(&cfg.sizes, &medians)?;
    let pass = (fit.slope - 2.0 / 3.0).abs() <= TRANSVERSAL_TOL;
    Ok((TransversalReport { medians, fit, pass }, records))
}

// ---------------------------------------------------------------------------
// Regeneration event

/// Basic block dimensions: `w = n^{2/3} (ln n)^{1/3 + delta}` and
/// `len = n floor(sqrt(ln n)) + 2 n / (ln n)^{delta'}`.
pub fn basic_block(n: f64, delta: f64, delta_prime: f64) -> Result<DiagRect> {
    let ln = n.ln();
    if !(ln >= 1.0) {
        return Err(Error::InvalidConfig(format!("basic block needs ln n >= 1, got n = {n}")));
    }
    let width = n.powf(2.0 / 3.0) * ln.powf(1.0 / 3.0 + delta);
    let tau = n / ln.powf(delta_prime);
    let len = n * ln.sqrt().floor() + 2.0 * tau;
    DiagRect::at_origin(len, width)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaSizeReport {
    pub n: f64,
    pub ell_b: f64,
    pub w_b: f64,
    pub omega: ProbReport,
    pub shared_point: ProbReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaRunReport {
    pub delta: f64,
    pub delta_prime: f64,
    pub per_size: Vec<OmegaSizeReport>,
    pub pass: bool,
}

pub fn run_omega(cfg: &ExperimentConfig) -> Result<(OmegaRunReport, Vec<ReplicateRecord>)> {
    cfg.validate(1)?;
    let (delta, delta_prime) = match (cfg.delta, cfg.delta_prime) {
        (Some(d), Some(dp)) => (d, dp),
        _ => return Err(Error::InvalidConfig("omega needs delta and delta'".into())),
    };
    let blocks = cfg
        .sizes
        .iter()
        .map(|&n| basic_block(n, delta, delta_prime))
        .collect::<Result<Vec<_>>>()?;
    let m = cfg.m;
    let records = par_map(cfg.threads, cfg.sizes.len() * m, |job| {
        let (k, r) = (job / m, (job % m) as u64);
        let rect = blocks[k];
        let pts = sample_region(&Region::Diag(rect), cfg.seed_for(k, r))?;
        let rep = omega_occurs(&pts, &rect)?;
        Ok(ReplicateRecord::new(
            k,
            cfg.sizes[k],
            r,
            &[
                ("ell_b", rect.len),
                ("w_b", rect.width),
                ("points", pts.len() as f64),
                ("omega", f64::from(u8::from(rep.occurs))),
                ("shared", f64::from(u8::from(rep.shared_member))),
                ("margin", rep.margin),
            ],
        ))
    })?;
    let per_size: Vec<OmegaSizeReport> = blocks
        .iter()
        .enumerate()
        .map(|(k, rect)| {
            let hits = column(&records, k, "omega").iter().filter(|v| **v > 0.5).count() as u64;
            let shared = column(&records, k, "shared").iter().filter(|v| **v > 0.5).count() as u64;
            OmegaSizeReport {
                n: cfg.sizes[k],
                ell_b: rect.len,
                w_b: rect.width,
                omega: ProbReport::new(hits, m as u64),
                shared_point: ProbReport::new(shared, m as u64),
            }
        })
        .collect();
    let pass = per_size.iter().all(|s| s.omega.wilson_lo > 0.0);
    Ok((
        OmegaRunReport {
            delta,
            delta_prime,
            per_size,
            pass,
        },
        records,
    ))
}

// ---------------------------------------------------------------------------
// Distributional identity

/// Point-to-point length `L((0,0), (t,s))` in the diagonal frame, sampled in
/// the `(x, y)` box spanned by the two endpoints.
pub fn point_to_point_length(t: f64, s: f64, seed: SeedSpec) -> Result<u32> {
    if s.abs() > t {
        return Ok(0);
    }
    let a = PointXY::new(0.0, 0.0);
    let b = PointTS::new(t, s).to_xy();
    if b.x <= 0.0 || b.y <= 0.0 {
        return Ok(0);
    }
    let region = Region::polygon(vec![a, PointXY::new(b.x, 0.0), b, PointXY::new(0.0, b.y)])?;
    let pts = sample_region(&region, seed)?;
    Ok(longest_chain(&ChainQuery::new(&pts).within(region).between(a, b))?.length)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistIdentityReport {
    pub t: f64,
    pub s: f64,
    pub t_equivalent: f64,
    pub ks: KsReport,
    pub mean_ts: f64,
    pub mean_t: f64,
    pub pass: bool,
}

/// Compares `L_{t,s}` with `L_{sqrt(t^2 - s^2)}` by a two-sample KS distance.
/// Rows with `size_index` 0 hold `L_{t,s}`, rows with 1 hold the other sample.
pub fn run_dist_identity(
    t: f64,
    s: f64,
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<(DistIdentityReport, Vec<ReplicateRecord>)> {
    if !(t > 0.0 && t.is_finite() && s.is_finite()) {
        return Err(Error::InvalidConfig("need finite t > 0 and finite s".into()));
    }
    let cfg = ExperimentConfig::new(vec![t], m, seed).threads(threads);
    cfg.validate(stats::KS_MIN_SAMPLES)?;
    let t_eq = (t * t - s * s).max(0.0).sqrt();
    let records = par_map(threads, 2 * m, |job| {
        let (k, r) = (job / m, (job % m) as u64);
        let seed = cfg.seed_for(k, r);
        let len = if k == 0 {
            point_to_point_length(t, s, seed)?
        } else if t_eq > 0.0 {
            point_to_point_length(t_eq, 0.0, seed)?
        } else {
            0
        };
        let size = if k == 0 { t } else { t_eq };
        Ok(ReplicateRecord::new(k, size, r, &[("length", len as f64)]))
    })?;
    let a = column(&records, 0, "length");
    let b = column(&records, 1, "length");
    let ks = ks_two_sample(&a, &b)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok((
        DistIdentityReport {
            t,
            s,
            t_equivalent: t_eq,
            pass: ks.pass,
            ks,
            mean_ts: mean(&a),
            mean_t: mean(&b),
        },
        records,
    ))
}

// ---------------------------------------------------------------------------
// Tails

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTable {
    pub side: TailSide,
    /// `(T, p_hat)`.
    pub rows: Vec<(f64, f64)>,
    pub strictly_decreasing: bool,
    /// `log p_hat` against `T^{3/2}` (upper) or `T^3` (lower), zero estimates skipped.
    pub fit: Option<SlopeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub t: f64,
    pub mean_hat: f64,
    pub sd_hat: f64,
    /// The centring and scale are in-sample estimates.
    pub in_sample_moments: bool,
    pub tables: Vec<TailTable>,
    pub pass: bool,
}

/// Tail frequencies of `(L_t - mean) / sd` for the unrestricted length between
/// `(0, 0)` and `(t, 0)`.
pub fn run_tail(
    t: f64,
    thresholds: &[f64],
    sides: &[TailSide],
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<(TailReport, Vec<ReplicateRecord>)> {
    if !(t >= 1.0) {
        return Err(Error::InvalidConfig(format!("t must be at least 1, got {t}")));
    }
    let limit = t.powf(2.0 / 3.0);
    if thresholds.is_empty() || thresholds.iter().any(|&x| !(1.0..=limit).contains(&x)) {
        return Err(Error::InvalidConfig(format!("thresholds must lie in [1, t^(2/3)] = [1, {limit}]")));
    }
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("thresholds must be strictly increasing".into()));
    }
    let cfg = ExperimentConfig::new(vec![t], m, seed).threads(threads);
    cfg.validate(2)?;
    // the (t, 0) box is a square of side t / sqrt(2)
    let area = 0.5 * t * t;
    let records = par_map(threads, m, |r| {
        let len = poisson_box_length(area, cfg.seed_for(0, r as u64))?;
        Ok(ReplicateRecord::new(0, t, r as u64, &[("length", len as f64)]))
    })?;
    let lengths = column(&records, 0, "length");
    let st = summarize(&lengths)?;
    let sd = st.variance.sqrt();
    let tables: Vec<TailTable> = sides
        .iter()
        .map(|&side| tail_table(&lengths, st.mean, sd, thresholds, side))
        .collect();
    let pass = tables.iter().all(|tb| {
        tb.strictly_decreasing
            && (tb.side == TailSide::Lower || tb.fit.as_ref().is_some_and(|f| f.slope < 0.0 && f.r2 > TAIL_R2_MIN))
    });
    Ok((
        TailReport {
            t,
            mean_hat: st.mean,
            sd_hat: sd,
            in_sample_moments: true,
            tables,
            pass,
        },
        records,
    ))
}

pub fn tail_table(lengths: &[f64], mean: f64, sd: f64, thresholds: &[f64], side: TailSide) -> TailTable {
    let m = lengths.len() as f64;
    let rows: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&thr| {
            let hits = lengths
                .iter()
                .filter(|&&x| {
                    let z = (x - mean) / sd;
                    match side {
                        TailSide::Upper => z >= thr,
                        TailSide::Lower => -z >= thr,
                    }
                })
                .count();
            (thr, hits as f64 / m)
        })
        .collect();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|&(thr, p)| {
            let x = match side {
                TailSide::Upper => thr.powf(1.5),
                TailSide::Lower => thr.powi(3),
            };
            (x, p.ln())
        })
        .unzip();
    let fit = ols_slope(&xs, &ys).ok().map(|(slope, intercept, r2)| SlopeReport {
        points: xs.into_iter().zip(ys).collect(),
        slope,
        intercept,
        r2,
    });
    TailTable {
        side,
        rows,
        strictly_decreasing,
        fit,
    }
}

// ---------------------------------------------------------------------------
// Diagonal rectangles

/// Free-endpoint length inside `[0, len] x [0, width]`.
pub fn rect_length(len: f64, width: f64, seed: SeedSpec) -> Result<u32> {
    let rect = DiagRect::at_origin(len, width)?;
    let pts = sample_region(&Region::Diag(rect), seed)?;
    Ok(longest_chain(&ChainQuery::new(&pts))?.length)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceProfileRow {
    pub w: f64,
    pub variance: f64,
    /// `variance * w^{1/2} / len`.
    pub normalized: f64,
}

/// Exploratory: normalized variance of the rectangle length across widths.
pub fn run_variance_profile(
    ell: f64,
    ws: &[f64],
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<(Vec<VarianceProfileRow>, Vec<ReplicateRecord>)> {
    let cfg = ExperimentConfig::new(ws.to_vec(), m, seed).threads(threads);
    cfg.validate(2)?;
    DiagRect::at_origin(ell, 1.0)?;
    let records = par_map(threads, ws.len() * m, |job| {
        let (k, r) = (job / m, (job % m) as u64);
        let len = rect_length(ell, ws[k], cfg.seed_for(k, r))?;
        Ok(ReplicateRecord::new(k, ws[k], r, &[("length", len as f64)]))
    })?;
    let rows = ws
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let st = summarize(&column(&records, k, "length"))?;
            Ok(VarianceProfileRow {
                w,
                variance: st.variance,
                normalized: st.variance * w.sqrt() / ell,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockExpectationReport {
    pub ell: f64,
    pub w: f64,
    pub delta: f64,
    pub stats: SummaryStats,
    /// `sqrt(2) len - mean`.
    pub deficiency: f64,
    /// `(len / w) / (ln w)^{5/3 - delta}`, unit constant.
    pub bracket_low: f64,
    /// `(len / w) (ln w)^{1/3 + delta}`, unit constant.
    pub bracket_high: f64,
    pub within_bracket: bool,
    /// `w (ln w)^{5/3} <= len^{2/3}`.
    pub aspect_condition: bool,
}

pub fn run_block_expectation(
    ell: f64,
    w: f64,
    delta: f64,
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<(BlockExpectationReport, Vec<ReplicateRecord>)> {
    if !(delta > 0.0 && delta < 1.0 / 6.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1/6), got {delta}")));
    }
    DiagRect::at_origin(ell, w)?;
    let cfg = ExperimentConfig::new(vec![ell], m, seed).threads(threads);
    cfg.validate(2)?;
    let records = par_map(threads, m, |r| {
        let len = rect_length(ell, w, cfg.seed_for(0, r as u64))?;
        Ok(ReplicateRecord::new(0, ell, r as u64, &[("length", len as f64)]))
    })?;
    let stats = summarize(&column(&records, 0, "length"))?;
    let deficiency = SQRT_2 * ell - stats.mean;
    let lw = w.ln();
    let bracket_low = (ell / w) / lw.powf(5.0 / 3.0 - delta);
    let bracket_high = (ell / w) * lw.powf(1.0 / 3.0 + delta);
    Ok((
        BlockExpectationReport {
            ell,
            w,
            delta,
            stats,
            deficiency,
            bracket_low,
            bracket_high,
            within_bracket: bracket_low <= deficiency && deficiency <= bracket_high,
            aspect_condition: w * lw.powf(5.0 / 3.0) <= ell.powf(2.0 / 3.0),
        },
        records,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(vec![10.0, 20.0], 1, 0).validate(2).is_err());
        assert!(ExperimentConfig::new(vec![20.0, 10.0], 5, 0).validate(2).is_err());
        assert!(ExperimentConfig::new(vec![10.0], 5, 0).gamma(0.7).validate(2).is_err());
        assert!(ExperimentConfig::new(vec![10.0], 5, 0).deltas(0.1, 0.01).validate(2).is_err());
        assert!(ExperimentConfig::new(vec![10.0], 5, 0).deltas(0.05, 0.07).validate(2).is_err());
        assert!(ExperimentConfig::new(vec![10.0], 5, 0).deltas(0.05, 0.05).validate(2).is_ok());
    }

    #[test]
    fn block_dimensions() {
        let b = basic_block(100.0, 0.05, 0.05).unwrap();
        let ln = 100f64.ln();
        assert!((b.width - 100f64.powf(2.0 / 3.0) * ln.powf(1.0 / 3.0 + 0.05)).abs() < 1e-9);
        // floor(sqrt(ln 100)) = floor(2.146) = 2
        assert!((b.len - (200.0 + 200.0 / ln.powf(0.05))).abs() < 1e-9);
        assert!(basic_block(2.0, 0.05, 0.05).is_err());
    }

    #[test]
    fn tw_smoke_and_determinism() {
        let (a, _) = run_tw_constants(100.0, 2, 7, 1).unwrap();
        assert!(a.c1_hat.is_finite() && a.c2_hat.is_finite());
        let (b, _) = run_tw_constants(100.0, 2, 7, 3).unwrap();
        assert_eq!(a, b);
        assert!(run_tw_constants(50.0, 10, 7, 1).is_err());
    }

    #[test]
    fn strip_smoke() {
        let cfg = ExperimentConfig::new(vec![64.0, 128.0, 256.0], 2, 1).gamma(0.3);
        let (rep, recs) = run_strip_scaling(&cfg, false).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(rep.per_size.len(), 3);
        assert_eq!(rep.audits, 3);
        assert_eq!(rep.audits_passed, 3);
    }

    #[test]
    fn strip_thread_independence() {
        let cfg = ExperimentConfig::new(vec![64.0, 128.0, 256.0], 4, 9).gamma(0.4);
        let (_, one) = run_strip_scaling(&cfg.clone().threads(1), false).unwrap();
        let (_, many) = run_strip_scaling(&cfg.threads(4), false).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn clt_minimum_and_determinism() {
        assert!(run_clt(128.0, 0.3, 19, 1, 1).is_err());
        let (a, _) = run_clt(128.0, 0.3, 20, 1, 1).unwrap();
        let (b, _) = run_clt(128.0, 0.3, 20, 1, 2).unwrap();
        assert_eq!(a, b);
        assert!(run_clt(128.0, 0.9, 20, 1, 1).is_err());
    }

    #[test]
    fn transversal_sanity() {
        let cfg = ExperimentConfig::new(vec![16.0, 32.0, 64.0], 3, 2);
        let (_, recs) = run_transversal(&cfg).unwrap();
        for r in &recs {
            let sp = r.get("s_points").unwrap();
            let se = r.get("s_envelope").unwrap();
            assert!(sp >= 0.0 && se >= sp);
        }
    }

    #[test]
    fn omega_smoke() {
        let cfg = ExperimentConfig::new(vec![20.0], 1, 3).deltas(0.05, 0.05);
        let (rep, recs) = run_omega(&cfg).unwrap();
        assert_eq!(rep.per_size[0].omega.trials, 1);
        assert!(recs[0].get("ell_b").unwrap() > 0.0 && recs[0].get("w_b").unwrap() > 0.0);
    }

    #[test]
    fn dist_identity_edge_cases() {
        assert_eq!(point_to_point_length(5.0, 6.0, SeedSpec::new(1, 1)).unwrap(), 0);
        let (rep, _) = run_dist_identity(20.0, 0.0, 20, 1, 1).unwrap();
        assert_eq!(rep.t_equivalent, 20.0);
        assert!(rep.mean_ts > 0.0 && rep.mean_t > 0.0);
        let (rep, _) = run_dist_identity(20.0, 25.0, 20, 1, 1).unwrap();
        assert_eq!(rep.mean_ts, 0.0);
    }

    #[test]
    fn tail_range_checked() {
        assert!(run_tail(8.0, &[1.0, 5.0], &[TailSide::Upper], 10, 1, 1).is_err());
        assert!(run_tail(1000.0, &[0.5], &[TailSide::Upper], 10, 1, 1).is_err());
        let (rep, _) = run_tail(100.0, &[1.0, 1.5, 2.0], &[TailSide::Upper, TailSide::Lower], 200, 1, 1).unwrap();
        assert_eq!(rep.tables.len(), 2);
        for tb in &rep.tables {
            assert!(tb.rows.windows(2).all(|w| w[1].1 <= w[0].1));
        }
    }

    #[test]
    fn variance_profile_and_block() {
        let (rows, _) = run_variance_profile(200.0, &[2.0, 4.0, 8.0], 10, 1, 1).unwrap();
        assert!(rows.iter().all(|r| r.normalized > 0.0));
        let (rep, _) = run_block_expectation(200.0, 4.0, 0.1, 10, 1, 1).unwrap();
        assert!(rep.deficiency > 0.0);
        let (again, _) = run_block_expectation(200.0, 4.0, 0.1, 10, 1, 2).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn streamed_superset_matches_materialized() {
        // with nothing outside the region the streamed sweep is a plain LIS
        let sq = Region::square(30.0).unwrap();
        for r in 0..10 {
            let pts = sample_region(&sq, SeedSpec::new(8, r)).unwrap();
            let q = ChainQuery::new(&pts).between(PointXY::new(0.0, 0.0), PointXY::new(30.0, 30.0));
            let direct = longest_chain(&q).unwrap().length;
            assert_eq!(superset_square_length(30.0, &sq, &pts, SeedSpec::new(9, r)).unwrap(), direct);
        }
        let strip = Region::strip_gamma(64.0, 0.3).unwrap();
        for r in 0..10 {
            let (len, pts) = strip_length(64.0, 0.3, false, SeedSpec::new(3, r)).unwrap();
            assert!(superset_square_length(64.0, &strip, &pts, SeedSpec::new(4, r)).unwrap() >= len);
        }
    }

    #[test]
    fn nested_strips_ordered() {
        for r in 0..5 {
            let l = nested_strip_lengths(128.0, &[0.2, 0.4, 0.6], SeedSpec::new(4, r)).unwrap();
            assert!(l.windows(2).all(|w| w[0] <= w[1]), "{l:?}");
        }
    }

    #[test]
    fn box_fast_path_matches_geometric_path() {
        // the key-only kernel and the full sampler must give the same law
        let m = 400;
        let fast: Vec<f64> = (0..m)
            .map(|r| poisson_box_length(400.0, SeedSpec::new(1, r)).unwrap() as f64)
            .collect();
        let full: Vec<f64> = (0..m)
            .map(|r| {
                let pts = sample_region(&Region::square(20.0).unwrap(), SeedSpec::new(2, r)).unwrap();
                let q = ChainQuery::new(&pts).between(PointXY::new(0.0, 0.0), PointXY::new(20.0, 20.0));
                longest_chain(&q).unwrap().length as f64
            })
            .collect();
        let ks = ks_two_sample(&fast, &full).unwrap();
        assert!(ks.pass, "{ks:?}");
    }
}
