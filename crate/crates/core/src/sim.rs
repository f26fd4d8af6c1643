//! Homogeneous Poisson patterns on a network with function-valued marks.
//!
//! Three mark scenarios are provided:
//!
//! * **One**: every mark value iid `U(0, 1)`.
//! * **Two**: scenario-one marks multiplied by the point's shortest-path
//!   distance to the network border (degree-1 nodes).
//! * **Three**: with `a` the number of other points within `radius`, every
//!   mark value iid `U(a/2, 3a/2)`; isolated points get the zero curve.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marks::{FunctionalMark, MarkedPattern, TimeGrid};
use crate::netgeom::{LinearNetwork, NetworkPoint};
use crate::rng::{substream, tag};

pub const DEFAULT_TIMESTAMPS: usize = 30;
pub const DEFAULT_NEIGHBOR_RADIUS: f64 = 876.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    One,
    Two,
    Three,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Scenario::One => 1,
            Scenario::Two => 2,
            Scenario::Three => 3,
        };
        write!(f, "{n}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "one" => Ok(Scenario::One),
            "2" | "two" => Ok(Scenario::Two),
            "3" | "three" => Ok(Scenario::Three),
            _ => Err(Error::InvalidArgument(format!("unknown scenario '{s}' (expected 1, 2 or 3)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Expected points per unit network length.
    pub intensity: f64,
    pub n_timestamps: usize,
    pub scenario: Scenario,
    pub neighbor_radius: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(intensity: f64, scenario: Scenario, seed: u64) -> Self {
        Self { intensity, n_timestamps: DEFAULT_TIMESTAMPS, scenario, neighbor_radius: DEFAULT_NEIGHBOR_RADIUS, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity must be > 0, got {}", self.intensity)));
        }
        if self.n_timestamps == 0 {
            return Err(Error::InvalidArgument("need at least one timestamp".into()));
        }
        if !(self.neighbor_radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {}", self.neighbor_radius)));
        }
        Ok(())
    }
}

/// Homogeneous Poisson process of intensity `lambda` on the network.
///
/// The count is Poisson(`lambda |L|`); each point lands on a segment with
/// probability proportional to its length, uniformly along it.
pub fn simulate_poisson_network(net: &LinearNetwork, lambda: f64, seed: u64) -> Result<Vec<NetworkPoint>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("intensity must be > 0, got {lambda}")));
    }
    let total = net.total_length();
    if net.segments().is_empty() || !(total > 0.0) {
        return Err(Error::EmptyNetwork);
    }
    let mut rng = substream(seed, tag::PLACEMENT, 0);
    let dist = Poisson::new(lambda * total).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n = dist.sample(&mut rng) as usize;

    let cumulative: Vec<f64> = net
        .segments()
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s.length;
            Some(*acc)
        })
        .collect();
    let last = cumulative.len() - 1;
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(last);
            let start = if k == 0 { 0.0 } else { cumulative[k - 1] };
            let len = net.segments()[k].length;
            NetworkPoint::new(k, (u - start).clamp(0.0, len))
        })
        .collect())
}

/// `n` curves of `t_len` iid `U(0, 1)` values, drawn point by point.
pub fn marks_scenario_one(n: usize, t_len: usize, seed: u64) -> Vec<FunctionalMark> {
    let mut rng = substream(seed, tag::MARKS_UNIFORM, 0);
    (0..n).map(|_| FunctionalMark((0..t_len).map(|_| rng.random::<f64>()).collect())).collect()
}

/// Scales each base curve by the point's distance to the network border.
pub fn marks_scenario_two(
    net: &LinearNetwork,
    pts: &[NetworkPoint],
    base: &[FunctionalMark],
) -> Result<Vec<FunctionalMark>> {
    if pts.len() != base.len() {
        return Err(Error::GridMismatch(format!("{} points but {} base marks", pts.len(), base.len())));
    }
    pts.iter()
        .zip(base)
        .map(|(p, m)| {
            let d = net.distance_to_border(p)?;
            Ok(FunctionalMark(m.0.iter().map(|v| v * d).collect()))
        })
        .collect()
}

/// Curves of iid `U(a/2, 3a/2)` values with `a` the neighbour count within `radius`.
pub fn marks_scenario_three(
    net: &LinearNetwork,
    pts: &[NetworkPoint],
    radius: f64,
    t_len: usize,
    seed: u64,
) -> Result<Vec<FunctionalMark>> {
    let counts = net.neighbor_counts(pts, radius)?;
    let mut rng = substream(seed, tag::MARKS_NEIGHBOR, 0);
    Ok(counts
        .into_iter()
        .map(|a| {
            let a = a as f64;
            FunctionalMark((0..t_len).map(|_| a / 2.0 + a * rng.random::<f64>()).collect())
        })
        .collect())
}

/// Full simulation: Poisson points, then marks for the configured scenario.
///
/// All scenarios share the same point locations for a given seed, and
/// scenario two reuses the scenario-one marks as its base curves.
pub fn simulate(net: Arc<LinearNetwork>, cfg: &SimConfig) -> Result<MarkedPattern> {
    cfg.validate()?;
    let pts = simulate_poisson_network(&net, cfg.intensity, cfg.seed)?;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("the simulated pattern has no points".into()));
    }
    let t_len = cfg.n_timestamps;
    let marks = match cfg.scenario {
        Scenario::One => marks_scenario_one(pts.len(), t_len, cfg.seed),
        Scenario::Two => {
            let base = marks_scenario_one(pts.len(), t_len, cfg.seed);
            marks_scenario_two(&net, &pts, &base)?
        }
        Scenario::Three => marks_scenario_three(&net, &pts, cfg.neighbor_radius, t_len, cfg.seed)?,
    };
    MarkedPattern::new(net, pts, marks, TimeGrid::unit(t_len)?)
}
