//! Random-labelling test with extreme-rank-length (ERL) global envelopes.
//!
//! Marks are permuted over the fixed points; every permutation yields a
//! summary curve. Curves are ranked by ERL:
//!
//! 1. at each r, a curve's rank from below is `1 + #{values < v}` and from
//!    above `1 + #{values > v}` among all `s + 1` curves (ties share the
//!    minimum rank); its pointwise rank is the smaller of the two;
//! 2. a curve's ERL vector is its pointwise ranks sorted ascending;
//! 3. curves compare lexicographically on ERL vectors, smaller being more
//!    extreme.
//!
//! The p-value is `(1 + #{permuted curves at least as extreme as the
//! observed}) / (s + 1)`. The envelope is the pointwise min/max of the curves
//! left after dropping the `floor(alpha (s + 1))` most extreme ones, the
//! observed curve included in the pool.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estim::{KappaEstimator, RGrid, SummaryCurve, SummarySurface};
use crate::marks::{FunctionalMark, MarkedPattern};
use crate::rng::{substream, tag};
use crate::testfun::TestFunctionId;

pub const DEFAULT_NPERM: usize = 500;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConfig {
    pub n_perm: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl EnvelopeConfig {
    pub fn new(n_perm: usize, alpha: f64, seed: u64) -> Self {
        Self { n_perm, alpha, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_perm == 0 {
            return Err(Error::InvalidArgument("need at least one permutation".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self::new(DEFAULT_NPERM, DEFAULT_ALPHA, 0)
    }
}

/// Envelope test on the global curve `kappa(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub observed: SummaryCurve,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Observed value strictly outside `[lower, upper]` at an unmasked r.
    pub outside: Vec<bool>,
    pub p_value: f64,
    pub n_perm: usize,
    pub alpha: f64,
    /// Checksum of the distance matrix used for every replicate.
    pub distance_checksum: u64,
}

impl EnvelopeResult {
    pub fn rejects(&self) -> bool {
        self.p_value <= self.alpha
    }

    /// Indices where the observed curve lies below the envelope.
    pub fn below(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.lower.len()).filter(|&i| self.outside[i] && self.observed.values[i] < self.lower[i])
    }

    /// Indices where the observed curve lies above the envelope.
    pub fn above(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.upper.len()).filter(|&i| self.outside[i] && self.observed.values[i] > self.upper[i])
    }
}

/// Envelope test on the pointwise surface flattened over (r, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceEnvelopeResult {
    pub observed: SummarySurface,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub outside: Vec<bool>,
    pub p_value: f64,
    pub n_perm: usize,
    pub alpha: f64,
    pub distance_checksum: u64,
}

/// Indices `0..n` shuffled by the `k`-th permutation stream of `seed`.
pub fn permutation(n: usize, seed: u64, k: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, tag::PERMUTATION, k));
    idx
}

fn permuted(marks: &[FunctionalMark], seed: u64, k: u64) -> Vec<FunctionalMark> {
    permutation(marks.len(), seed, k).into_iter().map(|i| marks[i].clone()).collect()
}

/// The pattern with whole mark curves reassigned by the `k`-th permutation.
/// A single-point pattern is returned unchanged.
pub fn permute_marks(p: &MarkedPattern, seed: u64, k: u64) -> Result<MarkedPattern> {
    if p.len() < 2 {
        return Ok(p.clone());
    }
    p.with_marks(permuted(p.marks(), seed, k))
}

/// Pointwise two-sided ranks, one vector per curve.
#[allow(clippy::needless_range_loop)]
fn pointwise_ranks(curves: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = curves.len();
    let len = curves[0].len();
    let mut ranks = vec![Vec::with_capacity(len); n];
    let mut order: Vec<usize> = (0..n).collect();
    for col in 0..len {
        order.sort_by(|&a, &b| curves[a][col].total_cmp(&curves[b][col]));
        let mut start = 0;
        while start < n {
            let v = curves[order[start]][col];
            let mut end = start;
            while end + 1 < n && curves[order[end + 1]][col] == v {
                end += 1;
            }
            let below = start + 1;
            let above = n - end;
            for &c in &order[start..=end] {
                ranks[c].push(below.min(above));
            }
            start = end + 1;
        }
    }
    ranks
}

/// Sorted pointwise-rank vectors of each curve.
pub fn erl_vectors(curves: &[Vec<f64>]) -> Result<Vec<Vec<usize>>> {
    if curves.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 curves, got {}", curves.len())));
    }
    let len = curves[0].len();
    if let Some(bad) = curves.iter().position(|c| c.len() != len) {
        return Err(Error::GridMismatch(format!("curve {bad} has {} values, expected {len}", curves[bad].len())));
    }
    let mut ranks = pointwise_ranks(curves);
    ranks.iter_mut().for_each(|r| r.sort_unstable());
    Ok(ranks)
}

/// Curve indices from most to least extreme; ties keep input order.
pub fn erl_order(curves: &[Vec<f64>]) -> Result<Vec<usize>> {
    let erl = erl_vectors(curves)?;
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| erl[a].cmp(&erl[b]));
    Ok(order)
}

/// Envelope bounds and p-value for `curves[0]` (observed) against
/// `curves[1..]`, ranking only the columns where `masked` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub outside: Vec<bool>,
    pub p_value: f64,
}

pub fn envelope_from_curves(curves: &[Vec<f64>], masked: &[bool], alpha: f64, neutral: f64) -> Result<Envelope> {
    let len = masked.len();
    if let Some(bad) = curves.iter().position(|c| c.len() != len) {
        return Err(Error::GridMismatch(format!("curve {bad} has {} values, expected {len}", curves[bad].len())));
    }
    let live: Vec<usize> = (0..len).filter(|&i| !masked[i]).collect();
    let reduced: Vec<Vec<f64>> = curves.iter().map(|c| live.iter().map(|&i| c[i]).collect()).collect();
    let erl = erl_vectors(&reduced)?;

    let observed = &erl[0];
    let as_extreme = erl[1..].iter().filter(|e| e.cmp(&observed) != Ordering::Greater).count();
    let s = curves.len() - 1;
    let p_value = (1 + as_extreme) as f64 / (s + 1) as f64;

    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| erl[a].cmp(&erl[b]));
    let drop = ((alpha * (s + 1) as f64) + 1e-9).floor() as usize;
    let kept = &order[drop.min(s)..];

    let mut lower = vec![neutral; len];
    let mut upper = vec![neutral; len];
    let mut outside = vec![false; len];
    for &i in &live {
        let (lo, hi) = kept
            .iter()
            .map(|&c| curves[c][i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        lower[i] = lo;
        upper[i] = hi;
        outside[i] = curves[0][i] < lo || curves[0][i] > hi;
    }
    Ok(Envelope { lower, upper, outside, p_value })
}

/// Global envelope test for one statistic.
pub fn global_envelope(
    p: &MarkedPattern,
    id: TestFunctionId,
    rgrid: &RGrid,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeResult> {
    Ok(global_envelopes(p, &[id], rgrid, cfg)?.remove(0))
}

/// Global envelope tests for several statistics sharing one set of permutations.
pub fn global_envelopes(
    p: &MarkedPattern,
    ids: &[TestFunctionId],
    rgrid: &RGrid,
    cfg: &EnvelopeConfig,
) -> Result<Vec<EnvelopeResult>> {
    let dist = p.distance_matrix()?;
    let est = KappaEstimator::new(&dist, rgrid)?;
    global_envelopes_with(&est, p, ids, cfg, dist.checksum())
}

/// As [`global_envelopes`], reusing a prebuilt estimator for the pattern's points.
pub fn global_envelopes_with(
    est: &KappaEstimator,
    p: &MarkedPattern,
    ids: &[TestFunctionId],
    cfg: &EnvelopeConfig,
    distance_checksum: u64,
) -> Result<Vec<EnvelopeResult>> {
    cfg.validate()?;
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    let grid = p.grid();
    let observed: Vec<SummaryCurve> =
        ids.iter().map(|&id| est.summary(p.marks(), grid, id).map(|s| s.curve)).collect::<Result<_>>()?;

    // replicate k is a pure function of (seed, k); results are collected in k order
    let replicates: Vec<Vec<Vec<f64>>> = (0..cfg.n_perm as u64)
        .into_par_iter()
        .map(|k| {
            let marks = permuted(p.marks(), cfg.seed, k);
            ids.iter().map(|&id| est.summary(&marks, grid, id).map(|s| s.curve.values)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    ids.iter()
        .enumerate()
        .map(|(s, &id)| {
            let obs = &observed[s];
            let mut curves = Vec::with_capacity(cfg.n_perm + 1);
            curves.push(obs.values.clone());
            curves.extend(replicates.iter().map(|r| r[s].clone()));
            let masked: Vec<bool> = obs.weight_ok.iter().map(|ok| !ok).collect();
            let env = envelope_from_curves(&curves, &masked, cfg.alpha, id.neutral_value())?;
            Ok(EnvelopeResult {
                observed: obs.clone(),
                lower: env.lower,
                upper: env.upper,
                outside: env.outside,
                p_value: env.p_value,
                n_perm: cfg.n_perm,
                alpha: cfg.alpha,
                distance_checksum,
            })
        })
        .collect()
}

/// Envelope test on the pointwise surface, flattened row-major over (r, t).
pub fn surface_envelope(
    p: &MarkedPattern,
    id: TestFunctionId,
    rgrid: &RGrid,
    cfg: &EnvelopeConfig,
) -> Result<SurfaceEnvelopeResult> {
    cfg.validate()?;
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    let dist = p.distance_matrix()?;
    let est = KappaEstimator::new(&dist, rgrid)?;
    let observed = est.surface(p.marks(), p.grid(), id)?;
    let replicates: Vec<Vec<f64>> = (0..cfg.n_perm as u64)
        .into_par_iter()
        .map(|k| est.surface(&permuted(p.marks(), cfg.seed, k), p.grid(), id).map(|s| s.values))
        .collect::<Result<_>>()?;
    let t_len = p.grid().len();
    let masked: Vec<bool> = (0..observed.values.len()).map(|x| observed.is_masked(x / t_len, x % t_len)).collect();
    let mut curves = Vec::with_capacity(cfg.n_perm + 1);
    curves.push(observed.values.clone());
    curves.extend(replicates);
    let env = envelope_from_curves(&curves, &masked, cfg.alpha, id.neutral_value())?;
    Ok(SurfaceEnvelopeResult {
        observed,
        lower: env.lower,
        upper: env.upper,
        outside: env.outside,
        p_value: env.p_value,
        n_perm: cfg.n_perm,
        alpha: cfg.alpha,
        distance_checksum: dist.checksum(),
    })
}
