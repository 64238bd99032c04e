//! Change point detection by thresholded CUSUM inner-product scans.
//!
//! [`nbs_detect`] recurses over randomly drawn candidate intervals: each
//! interval is clipped to the current segment, shrunk inward by 1/64 of its
//! length on both ends, and scanned for the split maximizing the CUSUM inner
//! product of the two input sequences. The best score across intervals is
//! compared against the threshold; a detection splits the segment and
//! recursion continues on both sides.
//!
//! [`bs_detect`] is the simplified variant that scans each full segment with
//! neither random intervals nor shrinking.

use rand::Rng;

use crate::cusum::scan_argmax;
use crate::error::{Error, Result};
use crate::netgen::NetworkSequence;
use crate::scalar::{to_f64, Scalar};
use crate::seed::SeedSpace;

/// Candidate intervals `(a_m, b_m)` with `0 <= a_m < b_m <= T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    pub intervals: Vec<(usize, usize)>,
}

/// Draws `m` intervals with endpoints uniform on `{1, ..., horizon}`.
///
/// Unordered endpoint pairs are swapped into order, equal endpoints are
/// redrawn, and when `cap` is set any pair longer than `cap` is redrawn.
pub fn gen_random_intervals(
    horizon: usize,
    m: usize,
    cap: Option<usize>,
    seed: u64,
) -> Result<IntervalSet> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "interval count must be at least 1".into(),
        ));
    }
    if horizon < 2 {
        return Err(Error::InvalidParameter(
            "horizon must be at least 2 to draw ordered pairs".into(),
        ));
    }
    if let Some(c) = cap {
        if c < 2 {
            return Err(Error::InvalidParameter(format!(
                "interval length cap {c} must be at least 2"
            )));
        }
    }
    let mut rng = SeedSpace::new(seed).stream("detector/intervals", &[]);
    let mut intervals = Vec::with_capacity(m);
    while intervals.len() < m {
        let a = rng.random_range(1..=horizon);
        let b = rng.random_range(1..=horizon);
        if a == b {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if cap.is_some_and(|c| hi - lo > c) {
            continue;
        }
        intervals.push((lo, hi));
    }
    Ok(IntervalSet { intervals })
}

/// Detection tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Detection threshold; scores must strictly exceed it.
    pub threshold: f64,
    /// Each clipped interval is shrunk inward by `length / shrink_denom` on
    /// both ends; 0 disables shrinking.
    pub shrink_denom: usize,
    /// Smallest `e - s` admitting a scan (the range `s+1, ..., e-1` must be
    /// nonempty).
    pub min_scan: usize,
    /// Recursion depth guard; defaults to `ceil(log2 T) + 5`.
    pub max_depth: Option<usize>,
}

impl DetectorConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "threshold {threshold} must be positive and finite"
            )));
        }
        Ok(DetectorConfig {
            threshold,
            shrink_denom: 64,
            min_scan: 2,
            max_depth: None,
        })
    }
}

/// One detected change point.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedPoint {
    pub location: usize,
    pub score: f64,
    /// Index of the interval that produced the detection (`None` for the
    /// full-segment variant).
    pub interval: Option<usize>,
}

/// Sorted set of detected change points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Estimate {
    points: Vec<DetectedPoint>,
}

impl Estimate {
    fn from_points(mut points: Vec<DetectedPoint>) -> Self {
        points.sort_by_key(|p| p.location);
        Estimate { points }
    }

    /// Builds an estimate from bare locations (used in evaluation code).
    pub fn from_locations(locations: &[usize]) -> Self {
        Estimate::from_points(
            locations
                .iter()
                .map(|&location| DetectedPoint {
                    location,
                    score: f64::NAN,
                    interval: None,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[DetectedPoint] {
        &self.points
    }

    pub fn locations(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.location).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Map from the even/odd half scale back to the original time scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitIndexMap;

impl SplitIndexMap {
    /// Half-scale index `t` corresponds to original time `2 t`.
    pub fn to_original(&self, half_t: usize) -> usize {
        2 * half_t
    }
}

/// Splits a sequence into its odd-time and even-time halves.
///
/// The first half holds times `1, 3, 5, ...` and the second `2, 4, 6, ...`;
/// when the horizon is odd the trailing odd time is dropped so both halves
/// have the same length.
pub fn split_even_odd<S: Scalar>(
    seq: &NetworkSequence<S>,
) -> Result<(NetworkSequence<S>, NetworkSequence<S>, SplitIndexMap)> {
    let t = seq.horizon();
    if t < 2 {
        return Err(Error::InvalidParameter(
            "splitting requires a horizon of at least 2".into(),
        ));
    }
    let half = t / 2;
    let odd = (0..half).map(|k| seq.frame(2 * k + 1).clone()).collect();
    let even = (0..half).map(|k| seq.frame(2 * k + 2).clone()).collect();
    Ok((
        NetworkSequence::from_parts(odd, seq.domain(), seq.is_symmetric()),
        NetworkSequence::from_parts(even, seq.domain(), seq.is_symmetric()),
        SplitIndexMap,
    ))
}

fn check_pair<S: Scalar>(u: &NetworkSequence<S>, v: &NetworkSequence<S>) -> Result<()> {
    if u.horizon() != v.horizon() || u.n1() != v.n1() || u.n2() != v.n2() {
        return Err(Error::ShapeMismatch(format!(
            "detector inputs differ: {}x{}x{} vs {}x{}x{}",
            u.horizon(),
            u.n1(),
            u.n2(),
            v.horizon(),
            v.n1(),
            v.n2()
        )));
    }
    Ok(())
}

fn default_depth(horizon: usize) -> usize {
    (horizon.max(2) as f64).log2().ceil() as usize + 5
}

struct Search<'a, S: Scalar> {
    u: &'a NetworkSequence<S>,
    v: &'a NetworkSequence<S>,
    cfg: &'a DetectorConfig,
    intervals: Option<&'a [(usize, usize)]>,
    max_depth: usize,
    found: Vec<DetectedPoint>,
}

impl<S: Scalar> Search<'_, S> {
    /// Applies the inward shrink to a clipped interval.
    fn shrink(&self, lo: usize, hi: usize) -> (usize, usize) {
        if self.cfg.shrink_denom == 0 {
            return (lo, hi);
        }
        let margin = (hi - lo) as f64 / self.cfg.shrink_denom as f64;
        let s = (lo as f64 + margin).ceil() as usize;
        let e = (hi as f64 - margin).floor() as usize;
        (s, e)
    }

    /// Best split of segment `(s, e)`: the maximal interval score with its
    /// location, or `None` when no interval admits a scan.
    fn best_split(&self, s: usize, e: usize) -> Result<Option<DetectedPoint>> {
        let mut best: Option<DetectedPoint> = None;
        match self.intervals {
            Some(intervals) => {
                for (m, &(a, b)) in intervals.iter().enumerate() {
                    let lo = s.max(a);
                    let hi = e.min(b);
                    if hi <= lo {
                        continue;
                    }
                    let (sm, em) = self.shrink(lo, hi);
                    if em <= sm || em - sm < self.cfg.min_scan {
                        continue;
                    }
                    let (split, score) = scan_argmax(self.u, self.v, sm, em)?;
                    let score = to_f64(score);
                    if best.as_ref().is_none_or(|p| score > p.score) {
                        best = Some(DetectedPoint {
                            location: split,
                            score,
                            interval: Some(m),
                        });
                    }
                }
            }
            None => {
                if e - s >= self.cfg.min_scan {
                    let (split, score) = scan_argmax(self.u, self.v, s, e)?;
                    best = Some(DetectedPoint {
                        location: split,
                        score: to_f64(score),
                        interval: None,
                    });
                }
            }
        }
        Ok(best)
    }

    fn recurse(&mut self, s: usize, e: usize, depth: usize) -> Result<()> {
        if depth > self.max_depth || e <= s {
            return Ok(());
        }
        if let Some(point) = self.best_split(s, e)? {
            if point.score > self.cfg.threshold {
                let b = point.location;
                self.found.push(point);
                self.recurse(s, b, depth + 1)?;
                self.recurse(b + 1, e, depth + 1)?;
            }
        }
        Ok(())
    }
}

/// Network binary segmentation over random intervals.
pub fn nbs_detect<S: Scalar>(
    u: &NetworkSequence<S>,
    v: &NetworkSequence<S>,
    intervals: &IntervalSet,
    cfg: &DetectorConfig,
) -> Result<Estimate> {
    check_pair(u, v)?;
    if intervals.intervals.is_empty() {
        return Err(Error::InvalidParameter(
            "interval set must be nonempty".into(),
        ));
    }
    for &(a, b) in &intervals.intervals {
        if a >= b || b > u.horizon() {
            return Err(Error::InvalidParameter(format!(
                "interval ({a}, {b}) is not ordered within [0, {}]",
                u.horizon()
            )));
        }
    }
    let mut search = Search {
        u,
        v,
        cfg,
        intervals: Some(&intervals.intervals),
        max_depth: cfg.max_depth.unwrap_or_else(|| default_depth(u.horizon())),
        found: Vec::new(),
    };
    search.recurse(0, u.horizon(), 0)?;
    Ok(Estimate::from_points(search.found))
}

/// Simplified binary segmentation: scans each full segment.
pub fn bs_detect<S: Scalar>(
    u: &NetworkSequence<S>,
    v: &NetworkSequence<S>,
    cfg: &DetectorConfig,
) -> Result<Estimate> {
    check_pair(u, v)?;
    let mut search = Search {
        u,
        v,
        cfg,
        intervals: None,
        max_depth: cfg.max_depth.unwrap_or_else(|| default_depth(u.horizon())),
        found: Vec::new(),
    };
    search.recurse(0, u.horizon(), 0)?;
    Ok(Estimate::from_points(search.found))
}

/// Single-pass detection for the balanced single-change setting: one scan
/// of the full horizon, declaring the maximizing split when its score
/// exceeds the threshold. Never returns more than one point.
pub fn scan_detect<S: Scalar>(
    u: &NetworkSequence<S>,
    v: &NetworkSequence<S>,
    cfg: &DetectorConfig,
) -> Result<Estimate> {
    check_pair(u, v)?;
    if u.horizon() < cfg.min_scan.max(2) {
        return Err(Error::InvalidWindow(format!(
            "horizon {} admits no scan",
            u.horizon()
        )));
    }
    let (split, score) = scan_argmax(u, v, 0, u.horizon())?;
    let score = to_f64(score);
    let mut points = Vec::new();
    if score > cfg.threshold {
        points.push(DetectedPoint {
            location: split,
            score,
            interval: None,
        });
    }
    Ok(Estimate::from_points(points))
}
