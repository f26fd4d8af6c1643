//! The nine pointwise test functions and their normalising factors.
//!
//! | id  | name                          | tau(h1, h2)                 | factor   |
//! |-----|-------------------------------|-----------------------------|----------|
//! | t1  | Stoyan's mark correlation     | h1 h2                       | mu^2     |
//! | t2  | Beisbart-Kerscher correlation | h1 + h2                     | 2 mu     |
//! | t3  | r-mark correlation (left)     | h1                          | mu       |
//! | t4  | r-mark correlation (right)    | h2                          | mu       |
//! | t5  | mark variogram                | (h1 - h2)^2 / 2             | sigma^2  |
//! | t6  | Stoyan's covariance           | h1 h2 - mu^2                | 1        |
//! | t7  | Isham's mark correlation      | h1 h2 - mu^2                | sigma^2  |
//! | t8  | Schlather's I                 | (h1 - mu(r))(h2 - mu(r))    | sigma^2  |
//! | t9  | Shimatani's I                 | (h1 - mu)(h2 - mu)          | sigma^2  |
//!
//! Here `mu`, `sigma^2` are the pointwise mean and variance of all marks at
//! time t and `mu(r)` is the conditional mean at interpoint distance r.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestFunctionId {
    StoyanCorr,
    BeisbartKerscher,
    RMarkLeft,
    RMarkRight,
    MarkVariogram,
    StoyanCov,
    IshamCorr,
    SchlatherI,
    ShimataniI,
}

/// Moments at one timestamp needed to evaluate a test function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentContext {
    pub mu_t: f64,
    pub sigma2_t: f64,
    /// Conditional mean at the current r; only Schlather's I uses it.
    pub mu_rt: Option<f64>,
}

impl MomentContext {
    pub fn new(mu_t: f64, sigma2_t: f64) -> Self {
        Self { mu_t, sigma2_t, mu_rt: None }
    }

    pub fn with_conditional_mean(mut self, mu_rt: f64) -> Self {
        self.mu_rt = Some(mu_rt);
        self
    }
}

impl TestFunctionId {
    pub const ALL: [TestFunctionId; 9] = [
        Self::StoyanCorr,
        Self::BeisbartKerscher,
        Self::RMarkLeft,
        Self::RMarkRight,
        Self::MarkVariogram,
        Self::StoyanCov,
        Self::IshamCorr,
        Self::SchlatherI,
        Self::ShimataniI,
    ];

    /// Command-line / file name.
    pub fn name(self) -> &'static str {
        match self {
            Self::StoyanCorr => "markcorr",
            Self::BeisbartKerscher => "beisbart",
            Self::RMarkLeft => "rmark-left",
            Self::RMarkRight => "rmark-right",
            Self::MarkVariogram => "variogram",
            Self::StoyanCov => "cov",
            Self::IshamCorr => "isham",
            Self::SchlatherI => "schlather",
            Self::ShimataniI => "shimantani",
        }
    }

    /// Value of the normalised statistic when marks are independent of locations.
    pub fn neutral_value(self) -> f64 {
        match self {
            Self::StoyanCorr | Self::BeisbartKerscher | Self::RMarkLeft | Self::RMarkRight | Self::MarkVariogram => 1.0,
            Self::StoyanCov | Self::IshamCorr | Self::SchlatherI | Self::ShimataniI => 0.0,
        }
    }

    /// Ratio-type statistics are normalised by the empirical pair average of
    /// the test function; the centred ones by their closed-form factor.
    pub fn uses_empirical_normalizer(self) -> bool {
        self.neutral_value() == 1.0
    }

    /// Polynomial degree of the test function in the marks.
    pub fn degree(self) -> u8 {
        match self {
            Self::BeisbartKerscher | Self::RMarkLeft | Self::RMarkRight => 1,
            _ => 2,
        }
    }

    pub fn needs_conditional_mean(self) -> bool {
        self == Self::SchlatherI
    }

    /// Pointwise test-function value.
    pub fn evaluate(self, h1: f64, h2: f64, ctx: &MomentContext) -> Result<f64> {
        let mu_rt = match (self, ctx.mu_rt) {
            (Self::SchlatherI, None) => return Err(Error::MissingContext(self.name())),
            (_, m) => m.unwrap_or(0.0),
        };
        Ok(self.value(h1, h2, ctx.mu_t, mu_rt))
    }

    #[inline(always)]
    pub(crate) fn value(self, h1: f64, h2: f64, mu_t: f64, mu_rt: f64) -> f64 {
        match self {
            Self::StoyanCorr => h1 * h2,
            Self::BeisbartKerscher => h1 + h2,
            Self::RMarkLeft => h1,
            Self::RMarkRight => h2,
            Self::MarkVariogram => 0.5 * (h1 - h2) * (h1 - h2),
            Self::StoyanCov | Self::IshamCorr => h1 * h2 - mu_t * mu_t,
            Self::SchlatherI => (h1 - mu_rt) * (h2 - mu_rt),
            Self::ShimataniI => (h1 - mu_t) * (h2 - mu_t),
        }
    }

    /// Closed-form normalising factor.
    pub fn normalizer(self, ctx: &MomentContext) -> f64 {
        match self {
            Self::StoyanCorr => ctx.mu_t * ctx.mu_t,
            Self::BeisbartKerscher => 2.0 * ctx.mu_t,
            Self::RMarkLeft | Self::RMarkRight => ctx.mu_t,
            Self::StoyanCov => 1.0,
            Self::MarkVariogram | Self::IshamCorr | Self::SchlatherI | Self::ShimataniI => ctx.sigma2_t,
        }
    }
}

impl fmt::Display for TestFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|id| id.name()).collect();
            Error::InvalidArgument(format!("unknown statistic '{s}'; expected one of: {}", names.join(", ")))
        })
    }
}
