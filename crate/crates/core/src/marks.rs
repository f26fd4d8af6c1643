//! Function-valued marks sampled on a shared time grid, and their moment fields.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estim::kernel_weight;
use crate::netgeom::{DistanceMatrix, LinearNetwork, NetworkPoint};

/// Strictly increasing sample times shared by all marks of a pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(Error::InvalidArgument("time grid must have at least one timestamp".into()));
        }
        if timestamps.iter().any(|t| !t.is_finite()) || timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("time grid must be finite and strictly increasing".into()));
        }
        Ok(Self(timestamps))
    }

    /// The grid `1, 2, ..., len`.
    pub fn unit(len: usize) -> Result<Self> {
        Self::new((1..=len).map(|t| t as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One mark curve `h(x)(t_k)`, k = 1..T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalMark(pub Vec<f64>);

impl FunctionalMark {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for FunctionalMark {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Points on a network together with their function-valued marks.
#[derive(Debug, Clone)]
pub struct MarkedPattern {
    network: Arc<LinearNetwork>,
    points: Vec<NetworkPoint>,
    marks: Vec<FunctionalMark>,
    grid: TimeGrid,
}

impl MarkedPattern {
    pub fn new(
        network: Arc<LinearNetwork>,
        points: Vec<NetworkPoint>,
        marks: Vec<FunctionalMark>,
        grid: TimeGrid,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("pattern must contain at least one point".into()));
        }
        if points.len() != marks.len() {
            return Err(Error::GridMismatch(format!("{} points but {} marks", points.len(), marks.len())));
        }
        for (i, m) in marks.iter().enumerate() {
            if m.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "mark {i} has {} values, time grid has {}",
                    m.len(),
                    grid.len()
                )));
            }
            if m.0.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("mark {i} has non-finite values")));
            }
        }
        for p in &points {
            network.validate_point(p)?;
        }
        Ok(Self { network, points, marks, grid })
    }

    /// Same points and grid, different marks (e.g. a relabelling).
    pub fn with_marks(&self, marks: Vec<FunctionalMark>) -> Result<Self> {
        Self::new(self.network.clone(), self.points.clone(), marks, self.grid.clone())
    }

    pub fn network(&self) -> &Arc<LinearNetwork> {
        &self.network
    }

    pub fn points(&self) -> &[NetworkPoint] {
        &self.points
    }

    pub fn marks(&self) -> &[FunctionalMark] {
        &self.marks
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pairwise shortest-path distances between the pattern's points.
    pub fn distance_matrix(&self) -> Result<DistanceMatrix> {
        self.network.distance_matrix(&self.points)
    }
}

/// `mu(t_k) = (1/N) sum_i h_i(t_k)`.
pub fn pointwise_mean(p: &MarkedPattern) -> Vec<f64> {
    mean_of(p.marks(), p.grid().len())
}

/// Population variance `(1/N) sum_i (h_i(t_k) - mu(t_k))^2`.
pub fn pointwise_variance(p: &MarkedPattern) -> Vec<f64> {
    let mu = pointwise_mean(p);
    variance_of(p.marks(), &mu)
}

// Both moments are taken about the first mark so that identical marks give
// exactly their common value and exactly zero variance.
pub(crate) fn mean_of(marks: &[FunctionalMark], t_len: usize) -> Vec<f64> {
    let origin = &marks[0].0;
    let mut acc = vec![0.0; t_len];
    for m in &marks[1..] {
        for ((a, v), o) in acc.iter_mut().zip(&m.0).zip(origin) {
            *a += v - o;
        }
    }
    let n = marks.len() as f64;
    acc.iter_mut().zip(origin).for_each(|(a, o)| *a = o + *a / n);
    acc
}

pub(crate) fn variance_of(marks: &[FunctionalMark], mu: &[f64]) -> Vec<f64> {
    let origin = &marks[0].0;
    let shift: Vec<f64> = mu.iter().zip(origin).map(|(m, o)| m - o).collect();
    let mut acc = vec![0.0; mu.len()];
    for m in marks {
        for (((a, v), o), s) in acc.iter_mut().zip(&m.0).zip(origin).zip(&shift) {
            let dev = (v - o) - s;
            *a += dev * dev;
        }
    }
    let n = marks.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Kernel-weighted mean of the marks of points that have a partner at distance ~ r.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMean {
    pub values: Vec<f64>,
    /// Total kernel weight over ordered pairs.
    pub weight: f64,
    /// Set when no pair carries kernel mass at `r`; `values` then holds the
    /// unconditional mean.
    pub degenerate: bool,
}

/// `mu(r)(t) = sum_{i != j} K(d_ij - r) h_i(t) / sum_{i != j} K(d_ij - r)` over ordered pairs.
pub fn conditional_mean_at_r(p: &MarkedPattern, dist: &DistanceMatrix, r: f64, bw: f64) -> Result<ConditionalMean> {
    if !(r >= 0.0) || !(bw > 0.0) {
        return Err(Error::InvalidArgument(format!("need r >= 0 and bandwidth > 0 (r = {r}, bw = {bw})")));
    }
    if dist.len() != p.len() {
        return Err(Error::GridMismatch(format!(
            "distance matrix is {0}x{0} but pattern has {1} points",
            dist.len(),
            p.len()
        )));
    }
    let t_len = p.grid().len();
    let mut acc = vec![0.0; t_len];
    let mut weight = 0.0;
    for i in 0..p.len() {
        // weight on i from every ordered pair (i, j)
        let wi: f64 = (0..p.len()).filter(|&j| j != i).map(|j| kernel_weight(dist.get(i, j), r, bw)).sum();
        if wi > 0.0 {
            for (a, v) in acc.iter_mut().zip(&p.marks()[i].0) {
                *a += wi * v;
            }
            weight += wi;
        }
    }
    if weight > 0.0 {
        acc.iter_mut().for_each(|a| *a /= weight);
        Ok(ConditionalMean { values: acc, weight, degenerate: false })
    } else {
        Ok(ConditionalMean { values: pointwise_mean(p), weight, degenerate: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgeom::{build_network, RawSegment, DEFAULT_SNAP_TOL};

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

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 2.0]).is_ok());
    }

    #[test]
    fn pattern_rejects_ragged_marks() {
        let net = Arc::new(build_network(&[RawSegment::new(0, [0.0, 0.0], [1.0, 0.0])], 0.0).unwrap());
        let err = MarkedPattern::new(
            net,
            vec![NetworkPoint::new(0, 0.1), NetworkPoint::new(0, 0.2)],
            vec![FunctionalMark(vec![1.0, 2.0]), FunctionalMark(vec![1.0])],
            TimeGrid::unit(2).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    #[test]
    fn mean_and_variance() {
        let p = line_pattern(&[1.0, 2.0], vec![vec![1.0, 1.0], vec![3.0, 3.0]]);
        assert_eq!(pointwise_mean(&p), vec![2.0, 2.0]);
        assert_eq!(pointwise_variance(&p), vec![1.0, 1.0]);
        let single = line_pattern(&[1.0], vec![vec![5.0, 7.0]]);
        assert_eq!(pointwise_mean(&single), vec![5.0, 7.0]);
        assert_eq!(pointwise_variance(&single), vec![0.0, 0.0]);
    }

    #[test]
    fn identical_marks_have_zero_variance() {
        let p = line_pattern(&[1.0, 2.0, 3.0], vec![vec![0.1, 0.7]; 3]);
        assert_eq!(pointwise_variance(&p), vec![0.0, 0.0]);
    }

    #[test]
    fn conditional_mean_two_points() {
        let p = line_pattern(&[10.0, 20.0], vec![vec![0.0], vec![4.0]]);
        let d = p.distance_matrix().unwrap();
        let cm = conditional_mean_at_r(&p, &d, 10.0, 2.0).unwrap();
        assert_eq!(cm.values, vec![2.0]);
        assert!(!cm.degenerate);
    }

    #[test]
    fn conditional_mean_falls_back_when_weightless() {
        let p = line_pattern(&[10.0, 80.0, 90.0], vec![vec![0.0], vec![4.0], vec![5.0]]);
        let d = p.distance_matrix().unwrap();
        let cm = conditional_mean_at_r(&p, &d, 30.0, 2.0).unwrap();
        assert!(cm.degenerate);
        assert_eq!(cm.weight, 0.0);
        assert_eq!(cm.values, vec![3.0]);
    }

    #[test]
    fn conditional_mean_matches_double_loop() {
        let offsets = [3.0, 7.5, 12.0, 30.0, 33.3];
        let marks: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.7 - 1.0, (i * i) as f64 * 0.3]).collect();
        let p = line_pattern(&offsets, marks.clone());
        let d = p.distance_matrix().unwrap();
        let (r, bw) = (6.0, 5.0);
        let k = |x: f64| if x.abs() <= bw { 0.75 / bw * (1.0 - (x / bw).powi(2)) } else { 0.0 };
        let cm = conditional_mean_at_r(&p, &d, r, bw).unwrap();
        for t in 0..2 {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        let w = k((offsets[i] - offsets[j]).abs() - r);
                        num += w * marks[i][t];
                        den += w;
                    }
                }
            }
            assert!((cm.values[t] - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_marks_give_constant_conditional_mean() {
        let p = line_pattern(&[1.0, 4.0, 9.0, 15.0], vec![vec![2.5, 2.5]; 4]);
        let d = p.distance_matrix().unwrap();
        for r in [0.0, 3.0, 5.0, 8.0] {
            let cm = conditional_mean_at_r(&p, &d, r, 4.0).unwrap();
            if !cm.degenerate {
                assert!(cm.values.iter().all(|v| (v - 2.5).abs() < 1e-14));
            }
        }
    }
}
