//! Kernel ratio estimation of the pointwise summary `kappa(r)(t)` and its
//! time-integrated global curve `kappa(r)`.
//!
//! For a test function `tau` the pointwise estimate is
//!
//! ```text
//! kappa(r)(t) = c(r)(t) / c(t)
//! c(r)(t)     = sum_{i != j} tau(h_i(t), h_j(t)) K(d_ij - r) / sum_{i != j} K(d_ij - r)
//! c(t)        = sum_{i != j} tau(h_i(t), h_j(t)) / N^2
//! ```
//!
//! with an Epanechnikov kernel `K`. Sums run over ordered pairs. The centred
//! statistics (covariance, Isham, Schlather, Shimatani) have a pair average
//! that vanishes up to O(1/N), so they are normalised by their closed-form
//! factor instead (1 or `sigma^2(t)`).
//!
//! [`KappaEstimator`] precomputes, for every pair with kernel mass somewhere
//! on the r-grid, the run of r-rows it contributes to and the corresponding
//! weights. Distances never change under mark relabelling, so one estimator
//! serves every permutation of an envelope run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::{mean_of, variance_of, FunctionalMark, MarkedPattern, TimeGrid};
use crate::netgeom::DistanceMatrix;
use crate::testfun::TestFunctionId;

/// Default number of r values.
pub const DEFAULT_NR: usize = 100;
/// Default `r_max` as a fraction of the largest finite interpoint distance.
pub const DEFAULT_RMAX_FRACTION: f64 = 0.25;
/// Rule-of-thumb constant: `bandwidth = 0.15 / lambda` with `lambda = N / |L|`.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 0.15;

const DEGENERACY_EPS: f64 = 1e-12;

/// Epanechnikov kernel centred at `r` with half-width `bw`.
#[inline]
pub fn kernel_weight(d: f64, r: f64, bw: f64) -> f64 {
    let u = (d - r) / bw;
    if u.abs() <= 1.0 {
        0.75 / bw * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Discretisation of the distance argument together with the kernel bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    r_values: Vec<f64>,
    bandwidth: f64,
}

impl RGrid {
    pub fn new(r_values: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if r_values.is_empty() {
            return Err(Error::InvalidArgument("r-grid must not be empty".into()));
        }
        if r_values.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || r_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("r-grid must be non-negative and strictly increasing".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(Self { r_values, bandwidth })
    }

    /// `n` equally spaced values from 0 to `r_max`.
    pub fn uniform(r_max: f64, n: usize, bandwidth: f64) -> Result<Self> {
        if n == 0 || !(r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("need nr >= 1 and r_max > 0 (nr = {n}, r_max = {r_max})")));
        }
        let values = if n == 1 { vec![r_max] } else { (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect() };
        Self::new(values, bandwidth)
    }

    /// Default grid for a pattern: `0.15 |L| / N` bandwidth and 100 values up
    /// to a quarter of the largest finite interpoint distance. Either part can
    /// be overridden.
    pub fn default_for(
        p: &MarkedPattern,
        dist: &DistanceMatrix,
        r_max: Option<f64>,
        nr: Option<usize>,
        bandwidth: Option<f64>,
    ) -> Result<Self> {
        let bw = bandwidth.unwrap_or_else(|| default_bandwidth(p.len(), p.network().total_length()));
        let r_max = r_max.unwrap_or_else(|| DEFAULT_RMAX_FRACTION * dist.max_finite());
        Self::uniform(r_max, nr.unwrap_or(DEFAULT_NR), bw)
    }

    pub fn values(&self) -> &[f64] {
        &self.r_values
    }

    pub fn len(&self) -> usize {
        self.r_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_values.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.r_values.last().expect("non-empty r-grid")
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

pub fn default_bandwidth(n_points: usize, total_length: f64) -> f64 {
    DEFAULT_BANDWIDTH_FACTOR * total_length / n_points as f64
}

/// Pointwise estimate `kappa(r_i)(t_k)`, stored row-major (r outer, t inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySurface {
    pub stat: TestFunctionId,
    pub grid: TimeGrid,
    pub rgrid: RGrid,
    pub values: Vec<f64>,
    /// False where no pair carries kernel mass at `r_i`.
    pub weight_ok: Vec<bool>,
    /// False where the normaliser at `t_k` vanished.
    pub time_ok: Vec<bool>,
}

impl SummarySurface {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.grid.len() + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let t = self.grid.len();
        &self.values[i * t..(i + 1) * t]
    }

    pub fn is_masked(&self, i: usize, k: usize) -> bool {
        !self.weight_ok[i] || !self.time_ok[k]
    }
}

/// Global curve `kappa(r_i)`: the normalised time integral of the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCurve {
    pub stat: TestFunctionId,
    pub rgrid: RGrid,
    pub values: Vec<f64>,
    /// Unnormalised trapezoid integral over the retained timestamps.
    pub raw: Vec<f64>,
    pub weight_ok: Vec<bool>,
}

impl SummaryCurve {
    pub fn is_masked(&self, i: usize) -> bool {
        !self.weight_ok[i]
    }

    /// A curve with every entry masked at the neutral value.
    pub fn all_masked(stat: TestFunctionId, rgrid: RGrid) -> Self {
        let n = rgrid.len();
        Self { stat, rgrid, values: vec![stat.neutral_value(); n], raw: vec![0.0; n], weight_ok: vec![false; n] }
    }
}

/// Surface, curve and any degeneracy warnings from one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub surface: SummarySurface,
    pub curve: SummaryCurve,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct PairWindow {
    i: u32,
    j: u32,
    first_row: u32,
    n_rows: u32,
    weight_start: u32,
}

/// Precomputed pair/kernel structure for a fixed distance matrix and r-grid.
#[derive(Debug, Clone)]
pub struct KappaEstimator {
    n: usize,
    rgrid: RGrid,
    pairs: Vec<PairWindow>,
    weights: Vec<f64>,
    /// Kernel mass per r row, over ordered pairs.
    row_weight: Vec<f64>,
}

impl KappaEstimator {
    pub fn new(dist: &DistanceMatrix, rgrid: &RGrid) -> Result<Self> {
        let n = dist.len();
        if n < 2 {
            return Err(Error::TooFewPoints(n));
        }
        let r = rgrid.values();
        let bw = rgrid.bandwidth();
        let mut pairs = Vec::new();
        let mut weights = Vec::new();
        let mut row_weight = vec![0.0; r.len()];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist.get(i, j);
                if !d.is_finite() {
                    continue;
                }
                let lo = r.partition_point(|&rk| rk < d - bw);
                let hi = r.partition_point(|&rk| rk <= d + bw);
                if lo >= hi {
                    continue;
                }
                let weight_start = weights.len() as u32;
                for (k, &rk) in r.iter().enumerate().take(hi).skip(lo) {
                    let w = kernel_weight(d, rk, bw);
                    weights.push(w);
                    row_weight[k] += 2.0 * w;
                }
                pairs.push(PairWindow {
                    i: i as u32,
                    j: j as u32,
                    first_row: lo as u32,
                    n_rows: (hi - lo) as u32,
                    weight_start,
                });
            }
        }
        Ok(Self { n, rgrid: rgrid.clone(), pairs, weights, row_weight })
    }

    pub fn rgrid(&self) -> &RGrid {
        &self.rgrid
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Total kernel weight at each r over ordered pairs.
    pub fn row_weights(&self) -> &[f64] {
        &self.row_weight
    }

    /// Accumulates `w_k(pair) * f(h_i(t), h_j(t), t)` into an R x T buffer,
    /// pair by pair in ascending `(i, j)` order.
    fn accumulate(&self, marks: &[FunctionalMark], t_len: usize, f: impl Fn(f64, f64, usize) -> f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.rgrid.len() * t_len];
        let mut v = vec![0.0; t_len];
        for p in &self.pairs {
            let hi = &marks[p.i as usize].0;
            let hj = &marks[p.j as usize].0;
            for (t, vt) in v.iter_mut().enumerate() {
                *vt = f(hi[t], hj[t], t);
            }
            let ws = &self.weights[p.weight_start as usize..(p.weight_start + p.n_rows) as usize];
            for (k, &w) in (p.first_row as usize..).zip(ws) {
                let row = &mut acc[k * t_len..(k + 1) * t_len];
                for (a, &vt) in row.iter_mut().zip(&v) {
                    *a += w * vt;
                }
            }
        }
        acc
    }

    /// Kernel-weighted pair sums `sum_{i != j} tau K` for every (r, t).
    fn numerator(&self, id: TestFunctionId, marks: &[FunctionalMark], mu: &[f64]) -> Vec<f64> {
        use TestFunctionId::*;
        let t_len = mu.len();
        macro_rules! sym {
            ($id:expr) => {
                self.accumulate(marks, t_len, |a, b, t| $id.value(a, b, mu[t], 0.0) + $id.value(b, a, mu[t], 0.0))
            };
        }
        match id {
            StoyanCorr => sym!(StoyanCorr),
            BeisbartKerscher => sym!(BeisbartKerscher),
            RMarkLeft => sym!(RMarkLeft),
            RMarkRight => sym!(RMarkRight),
            MarkVariogram => sym!(MarkVariogram),
            StoyanCov => sym!(StoyanCov),
            IshamCorr => sym!(IshamCorr),
            ShimataniI => sym!(ShimataniI),
            SchlatherI => {
                let cond = self.conditional_means(marks, t_len);
                let mut acc = vec![0.0; cond.len()];
                for p in &self.pairs {
                    let hi = &marks[p.i as usize].0;
                    let hj = &marks[p.j as usize].0;
                    let ws = &self.weights[p.weight_start as usize..(p.weight_start + p.n_rows) as usize];
                    for (k, &w) in (p.first_row as usize..).zip(ws) {
                        let row = k * t_len..(k + 1) * t_len;
                        for ((a, m), t) in acc[row.clone()].iter_mut().zip(&cond[row]).zip(0..t_len) {
                            *a += w * 2.0 * SchlatherI.value(hi[t], hj[t], 0.0, *m);
                        }
                    }
                }
                acc
            }
        }
    }

    /// `mu(r_k)(t)` for every row; rows without kernel mass hold 0.
    pub fn conditional_means(&self, marks: &[FunctionalMark], t_len: usize) -> Vec<f64> {
        let mut acc = self.accumulate(marks, t_len, |a, b, _| a + b);
        for (k, &w) in self.row_weight.iter().enumerate() {
            let row = &mut acc[k * t_len..(k + 1) * t_len];
            if w > 0.0 {
                row.iter_mut().for_each(|a| *a /= w);
            } else {
                row.iter_mut().for_each(|a| *a = 0.0);
            }
        }
        acc
    }

    /// Pointwise surface for the given marks.
    pub fn surface(&self, marks: &[FunctionalMark], grid: &TimeGrid, id: TestFunctionId) -> Result<SummarySurface> {
        if marks.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "estimator built for {} points, got {} marks",
                self.n,
                marks.len()
            )));
        }
        let t_len = grid.len();
        if let Some(bad) = marks.iter().position(|m| m.len() != t_len) {
            return Err(Error::GridMismatch(format!("mark {bad} does not match the time grid")));
        }
        let denominators = denominators(marks, t_len, id);
        let mu = mean_of(marks, t_len);
        let num = self.numerator(id, marks, &mu);

        let neutral = id.neutral_value();
        let r_len = self.rgrid.len();
        let mut values = vec![neutral; r_len * t_len];
        let weight_ok: Vec<bool> = self.row_weight.iter().map(|&w| w > 0.0).collect();
        let time_ok: Vec<bool> = denominators.iter().map(|d| d.ok).collect();
        for k in 0..r_len {
            if !weight_ok[k] {
                continue;
            }
            for (t, den) in denominators.iter().enumerate() {
                if den.ok {
                    values[k * t_len + t] = num[k * t_len + t] / self.row_weight[k] / den.value;
                }
            }
        }
        Ok(SummarySurface { stat: id, grid: grid.clone(), rgrid: self.rgrid.clone(), values, weight_ok, time_ok })
    }

    /// Surface followed by its global curve.
    pub fn summary(&self, marks: &[FunctionalMark], grid: &TimeGrid, id: TestFunctionId) -> Result<Summary> {
        let surface = self.surface(marks, grid, id)?;
        let mut warnings = Vec::new();
        let degenerate = surface.time_ok.iter().filter(|ok| !**ok).count();
        if degenerate > 0 {
            warnings.push(format!(
                "{id}: {degenerate} of {} timestamps have a vanishing normaliser and were excluded",
                surface.grid.len()
            ));
        }
        let masked_rows = surface.weight_ok.iter().filter(|ok| !**ok).count();
        if masked_rows > 0 {
            warnings.push(format!("{id}: {masked_rows} r values carry no kernel mass"));
        }
        let curve = match global_kappa(&surface) {
            Ok(c) => c,
            Err(Error::AllTimesDegenerate(_)) => SummaryCurve::all_masked(id, surface.rgrid.clone()),
            Err(e) => return Err(e),
        };
        Ok(Summary { surface, curve, warnings })
    }
}

#[derive(Debug, Clone, Copy)]
struct Denominator {
    value: f64,
    ok: bool,
}

/// `c(t)` for every timestamp together with its degeneracy flag.
fn denominators(marks: &[FunctionalMark], t_len: usize, id: TestFunctionId) -> Vec<Denominator> {
    let n = marks.len() as f64;
    let mu = mean_of(marks, t_len);
    let var = variance_of(marks, &mu);
    (0..t_len)
        .map(|t| {
            let s1: f64 = marks.iter().map(|m| m.0[t]).sum();
            let s2: f64 = marks.iter().map(|m| m.0[t] * m.0[t]).sum();
            let abs1: f64 = marks.iter().map(|m| m.0[t].abs()).sum::<f64>() / n;
            let value = pair_average(id, n, s1, s2, var[t]);
            let scale = if id.degree() == 1 { abs1 } else { s2 / n };
            let ok = id == TestFunctionId::StoyanCov || value.abs() > DEGENERACY_EPS * (1.0 + scale);
            Denominator { value, ok }
        })
        .collect()
}

/// Closed forms of `sum_{i != j} tau / N^2` (ratio-type statistics) or the
/// normalising factor (centred ones), from `S1 = sum h`, `S2 = sum h^2` and
/// the population variance.
fn pair_average(id: TestFunctionId, n: f64, s1: f64, s2: f64, var: f64) -> f64 {
    use TestFunctionId::*;
    let n2 = n * n;
    match id {
        StoyanCorr => (s1 * s1 - s2) / n2,
        BeisbartKerscher => 2.0 * (n - 1.0) * s1 / n2,
        RMarkLeft | RMarkRight => (n - 1.0) * s1 / n2,
        // N sum (h - mu)^2 / N^2
        MarkVariogram => var,
        StoyanCov => 1.0,
        IshamCorr | SchlatherI | ShimataniI => var,
    }
}

fn check_t_index(p: &MarkedPattern, t_index: usize) -> Result<()> {
    if t_index >= p.grid().len() {
        return Err(Error::GridMismatch(format!("time index {t_index} outside grid of length {}", p.grid().len())));
    }
    Ok(())
}

/// `c(r)(t)` at one `(r, t)`; returns the ratio and the total kernel weight
/// over ordered pairs. The ratio is meaningless when the weight is zero.
pub fn chat_rt(
    p: &MarkedPattern,
    dist: &DistanceMatrix,
    id: TestFunctionId,
    r: f64,
    bw: f64,
    t_index: usize,
) -> Result<(f64, f64)> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    check_t_index(p, t_index)?;
    let est = KappaEstimator::new(dist, &RGrid::new(vec![r], bw)?)?;
    let mu = mean_of(p.marks(), p.grid().len());
    let num = est.numerator(id, p.marks(), &mu);
    let w = est.row_weight[0];
    let value = if w > 0.0 { num[t_index] / w } else { 0.0 };
    Ok((value, w))
}

/// `c(t)` at one timestamp: the pair average over `N^2` for ratio-type
/// statistics, the closed-form factor for centred ones.
pub fn chat_t(p: &MarkedPattern, id: TestFunctionId, t_index: usize) -> Result<f64> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    check_t_index(p, t_index)?;
    Ok(denominators(p.marks(), p.grid().len(), id)[t_index].value)
}

/// Pointwise surface over `rgrid x grid`.
pub fn pointwise_kappa(
    p: &MarkedPattern,
    dist: &DistanceMatrix,
    id: TestFunctionId,
    rgrid: &RGrid,
) -> Result<SummarySurface> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    KappaEstimator::new(dist, rgrid)?.surface(p.marks(), p.grid(), id)
}

/// Normalised trapezoid integral of each surface row over the timestamps
/// whose normaliser did not vanish.
pub fn global_kappa(s: &SummarySurface) -> Result<SummaryCurve> {
    let times = s.grid.values();
    let kept: Vec<usize> = (0..times.len()).filter(|&k| s.time_ok[k]).collect();
    if kept.is_empty() {
        return Err(Error::AllTimesDegenerate(s.stat.name()));
    }
    let neutral = s.stat.neutral_value();
    let r_len = s.rgrid.len();
    let mut values = vec![neutral; r_len];
    let mut raw = vec![0.0; r_len];
    let measure = times[*kept.last().unwrap()] - times[kept[0]];
    for i in 0..r_len {
        if !s.weight_ok[i] {
            continue;
        }
        let row = s.row(i);
        if kept.len() == 1 {
            values[i] = row[kept[0]];
            raw[i] = row[kept[0]];
            continue;
        }
        let integral: f64 = kept.windows(2).map(|w| 0.5 * (times[w[1]] - times[w[0]]) * (row[w[0]] + row[w[1]])).sum();
        raw[i] = integral;
        values[i] = integral / measure;
    }
    Ok(SummaryCurve { stat: s.stat, rgrid: s.rgrid.clone(), values, raw, weight_ok: s.weight_ok.clone() })
}

/// Distances, pointwise surface and global curve in one call.
pub fn estimate_summary(p: &MarkedPattern, id: TestFunctionId, rgrid: &RGrid) -> Result<Summary> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints(p.len()));
    }
    let dist = p.distance_matrix()?;
    KappaEstimator::new(&dist, rgrid)?.summary(p.marks(), p.grid(), id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgeom::{build_network, NetworkPoint, RawSegment, DEFAULT_SNAP_TOL};
    use std::sync::Arc;
    use TestFunctionId::*;

    fn line_pattern(offsets: &[f64], marks: Vec<Vec<f64>>) -> MarkedPattern {
        let net = build_network(&[RawSegment::new(0, [0.0, 0.0], [100.0, 0.0])], DEFAULT_SNAP_TOL).unwrap();
        let t = marks[0].len();
        MarkedPattern::new(
            Arc::new(net),
            offsets.iter().map(|&o| NetworkPoint::new(0, o)).collect(),
            marks.into_iter().map(FunctionalMark).collect(),
            TimeGrid::unit(t).unwrap(),
        )
        .unwrap()
    }

    fn six_points() -> (MarkedPattern, Vec<f64>, Vec<Vec<f64>>) {
        let offsets = vec![2.0, 5.5, 9.0, 14.0, 21.0, 23.5];
        let marks: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..3).map(|t| ((i * 7 + t * 3) % 5) as f64 * 0.4 + 0.1 * t as f64 + 0.2).collect())
            .collect();
        (line_pattern(&offsets, marks.clone()), offsets, marks)
    }

    fn k(x: f64, bw: f64) -> f64 {
        if x.abs() <= bw {
            0.75 / bw * (1.0 - (x / bw) * (x / bw))
        } else {
            0.0
        }
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_weight(5.0, 5.0, 2.0), 0.375);
        assert_eq!(kernel_weight(7.0, 5.0, 2.0), 0.0);
        assert_eq!(kernel_weight(3.0, 5.0, 2.0), 0.0);
        assert_eq!(kernel_weight(6.0, 5.0, 2.0), 0.375 * 0.75);
        assert_eq!(kernel_weight(f64::INFINITY, 5.0, 2.0), 0.0);
    }

    #[test]
    fn chat_rt_two_points() {
        let p = line_pattern(&[10.0, 20.0], vec![vec![2.0], vec![3.0]]);
        let d = p.distance_matrix().unwrap();
        let (v, w) = chat_rt(&p, &d, StoyanCorr, 10.0, 4.0, 0).unwrap();
        assert_eq!(v, 6.0);
        assert_eq!(w, 2.0 * kernel_weight(0.0, 0.0, 4.0));
        let (_, w) = chat_rt(&p, &d, StoyanCorr, 50.0, 4.0, 0).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn chat_t_two_points() {
        let p = line_pattern(&[10.0, 20.0], vec![vec![2.0], vec![3.0]]);
        assert_eq!(chat_t(&p, StoyanCorr, 0).unwrap(), 3.0);
        let c = line_pattern(&[10.0, 20.0, 30.0], vec![vec![0.4]; 3]);
        assert_eq!(chat_t(&c, MarkVariogram, 0).unwrap(), 0.0);
    }

    #[test]
    fn too_few_points() {
        let p = line_pattern(&[10.0], vec![vec![2.0]]);
        let d = p.distance_matrix().unwrap();
        assert!(matches!(chat_t(&p, StoyanCorr, 0), Err(Error::TooFewPoints(1))));
        assert!(matches!(chat_rt(&p, &d, StoyanCorr, 1.0, 1.0, 0), Err(Error::TooFewPoints(1))));
    }

    #[test]
    fn chat_rt_matches_double_loop() {
        let (p, offsets, marks) = six_points();
        let d = p.distance_matrix().unwrap();
        let (r, bw) = (6.0, 5.0);
        for t in 0..3 {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..6 {
                for j in 0..6 {
                    if i != j {
                        let w = k((offsets[i] - offsets[j]).abs() - r, bw);
                        num += 0.5 * (marks[i][t] - marks[j][t]).powi(2) * w;
                        den += w;
                    }
                }
            }
            let (v, w) = chat_rt(&p, &d, MarkVariogram, r, bw, t).unwrap();
            assert!((v - num / den).abs() < 1e-12);
            assert!((w - den).abs() < 1e-12);
        }
    }

    #[test]
    fn chat_t_matches_double_loop() {
        let (p, _, marks) = six_points();
        for id in [StoyanCorr, BeisbartKerscher, RMarkLeft, RMarkRight, MarkVariogram] {
            for t in 0..3 {
                let mut s = 0.0;
                for i in 0..6 {
                    for j in 0..6 {
                        if i != j {
                            s += id.value(marks[i][t], marks[j][t], 0.0, 0.0);
                        }
                    }
                }
                assert!((chat_t(&p, id, t).unwrap() - s / 36.0).abs() < 1e-12, "{id} t={t}");
            }
        }
    }

    #[test]
    fn constant_marks_markcorr_is_pair_count_ratio() {
        // c(r)(t) = c^2 and c(t) = c^2 (N - 1) / N under the N^2 convention
        let p = line_pattern(&[1.0, 3.0, 6.0, 10.0], vec![vec![1.5, 1.5]; 4]);
        let d = p.distance_matrix().unwrap();
        let rg = RGrid::uniform(6.0, 7, 3.0).unwrap();
        let s = pointwise_kappa(&p, &d, StoyanCorr, &rg).unwrap();
        for i in 0..rg.len() {
            for t in 0..2 {
                if !s.is_masked(i, t) {
                    assert!((s.get(i, t) - 4.0 / 3.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constant_marks_variogram_is_masked_neutral() {
        let p = line_pattern(&[1.0, 3.0, 6.0, 10.0], vec![vec![0.7, 0.7]; 4]);
        let summary = estimate_summary(&p, MarkVariogram, &RGrid::uniform(6.0, 7, 3.0).unwrap()).unwrap();
        assert!(summary.surface.time_ok.iter().all(|ok| !ok));
        assert!(summary.surface.values.iter().all(|&v| v == 1.0));
        assert!(summary.curve.values.iter().all(|&v| v == 1.0));
        assert!(summary.curve.weight_ok.iter().all(|ok| !ok));
        assert!(!summary.warnings.is_empty());
        assert!(matches!(global_kappa(&summary.surface), Err(Error::AllTimesDegenerate("variogram"))));
    }

    #[test]
    fn rows_without_mass_are_masked() {
        let p = line_pattern(&[0.0, 10.0], vec![vec![1.0], vec![2.0]]);
        let d = p.distance_matrix().unwrap();
        let rg = RGrid::new(vec![0.0, 10.0, 40.0], 2.0).unwrap();
        let s = pointwise_kappa(&p, &d, StoyanCorr, &rg).unwrap();
        assert_eq!(s.weight_ok, vec![false, true, false]);
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.get(2, 0), 1.0);
    }

    fn surface_from(values: Vec<f64>, r_len: usize, times: Vec<f64>, time_ok: Vec<bool>) -> SummarySurface {
        SummarySurface {
            stat: StoyanCorr,
            grid: TimeGrid::new(times).unwrap(),
            rgrid: RGrid::uniform(1.0, r_len, 0.1).unwrap(),
            values,
            weight_ok: vec![true; r_len],
            time_ok,
        }
    }

    #[test]
    fn global_of_constant_surface() {
        let s = surface_from(vec![1.0; 12], 3, vec![0.0, 1.0, 3.0, 7.0], vec![true; 4]);
        assert!(global_kappa(&s).unwrap().values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn global_two_times_is_average() {
        let s = surface_from(vec![2.0, 5.0, 2.0, 5.0], 2, vec![0.0, 1.0], vec![true; 2]);
        assert_eq!(global_kappa(&s).unwrap().values, vec![3.5, 3.5]);
    }

    #[test]
    fn global_skips_degenerate_times() {
        let s = surface_from(vec![2.0, 100.0, 4.0], 1, vec![0.0, 1.0, 2.0], vec![true, false, true]);
        let c = global_kappa(&s).unwrap();
        assert_eq!(c.values, vec![3.0]);
        assert_eq!(c.raw, vec![6.0]);
    }

    #[test]
    fn global_matches_hand_trapezoid() {
        let times = vec![0.0, 0.5, 2.0, 2.5];
        let values: Vec<f64> = (0..20).map(|x| ((x * 37 % 11) as f64).sin()).collect();
        let s = surface_from(values.clone(), 5, times.clone(), vec![true; 4]);
        let c = global_kappa(&s).unwrap();
        for i in 0..5 {
            let f = &values[i * 4..i * 4 + 4];
            let hand = (0.5 * 0.5 * (f[0] + f[1]) + 1.5 * 0.5 * (f[1] + f[2]) + 0.5 * 0.5 * (f[2] + f[3])) / 2.5;
            assert!((c.values[i] - hand).abs() < 1e-12);
        }
    }

    #[test]
    fn default_grid() {
        let (p, _, _) = six_points();
        let d = p.distance_matrix().unwrap();
        let rg = RGrid::default_for(&p, &d, None, None, None).unwrap();
        assert_eq!(rg.len(), DEFAULT_NR);
        assert_eq!(rg.r_max(), 0.25 * 21.5);
        assert!((rg.bandwidth() - 0.15 * 100.0 / 6.0).abs() < 1e-12);
    }
}
