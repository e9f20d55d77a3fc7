//! Historical (order-statistic) Value-at-Risk and the mapping between
//! probability levels and average waiting periods.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Frequency, Position, ReturnSeries};
use crate::error::{Error, Result};

/// Slack used when deciding whether `n * q` sits on an integer.
const RANK_EPS: f64 = 1e-9;

/// VaR confidence level, optionally tagged with the average waiting time
/// `k = 1 / (1 - p)` in units of the return frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityLevel {
    p: f64,
    waiting_periods: Option<u32>,
}

impl ProbabilityLevel {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self {
            p,
            waiting_periods: None,
        })
    }

    /// `p = 1 - 1/k`.
    pub fn from_waiting_periods(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidProbability(if k == 0 {
                f64::NAN
            } else {
                0.0
            }));
        }
        Ok(Self {
            p: 1.0 - 1.0 / f64::from(k),
            waiting_periods: Some(k),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn waiting_periods(&self) -> Option<u32> {
        self.waiting_periods
    }

    /// Tail probability `1 - p`, exact `1/k` when the waiting period is known.
    pub fn tail(&self) -> f64 {
        match self.waiting_periods {
            Some(k) => 1.0 / f64::from(k),
            None => 1.0 - self.p,
        }
    }

    /// Percent with two decimals, e.g. `99.62%`.
    pub fn percent_label(&self) -> String {
        format!("{:.2}%", self.p * 100.0)
    }
}

impl fmt::Display for ProbabilityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.percent_label())
    }
}

/// Calendar horizons used as average waiting periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Week,
    Month,
    Quarter,
    Semester,
    Year,
    TwoYears,
}

impl Horizon {
    pub const ALL: [Horizon; 6] = [
        Horizon::Week,
        Horizon::Month,
        Horizon::Quarter,
        Horizon::Semester,
        Horizon::Year,
        Horizon::TwoYears,
    ];

    /// Horizon length in units of `frequency` on a 5-day-week, 52-week-year
    /// trading calendar. `None` where the horizon is not expressible (a week
    /// of weekly data) or not used (two years of weekly data).
    pub fn periods(self, frequency: Frequency) -> Option<u32> {
        match (frequency, self) {
            (Frequency::Daily, Horizon::Week) => Some(5),
            (Frequency::Daily, Horizon::Month) => Some(22),
            (Frequency::Daily, Horizon::Quarter) => Some(65),
            (Frequency::Daily, Horizon::Semester) => Some(130),
            (Frequency::Daily, Horizon::Year) => Some(260),
            (Frequency::Daily, Horizon::TwoYears) => Some(520),
            (Frequency::Weekly, Horizon::Month) => Some(4),
            (Frequency::Weekly, Horizon::Quarter) => Some(13),
            (Frequency::Weekly, Horizon::Semester) => Some(26),
            (Frequency::Weekly, Horizon::Year) => Some(52),
            (Frequency::Weekly, Horizon::Week | Horizon::TwoYears) => None,
        }
    }

    /// Horizons available at `frequency`, shortest first.
    pub fn for_frequency(frequency: Frequency) -> Vec<Horizon> {
        Self::ALL
            .into_iter()
            .filter(|h| h.periods(frequency).is_some())
            .collect()
    }

    /// Inverse of [`Horizon::periods`].
    pub fn from_periods(frequency: Frequency, k: u32) -> Option<Horizon> {
        Self::ALL
            .into_iter()
            .find(|h| h.periods(frequency) == Some(k))
    }

    pub fn label(self) -> &'static str {
        match self {
            Horizon::Week => "1 week",
            Horizon::Month => "1 month",
            Horizon::Quarter => "1 quarter",
            Horizon::Semester => "1 semester",
            Horizon::Year => "1 year",
            Horizon::TwoYears => "2 years",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Horizon::Week => "week",
            Horizon::Month => "month",
            Horizon::Quarter => "quarter",
            Horizon::Semester => "semester",
            Horizon::Year => "year",
            Horizon::TwoYears => "two_years",
        };
        f.write_str(s)
    }
}

impl FromStr for Horizon {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|h| h.to_string() == s)
            .ok_or_else(|| format!("unknown waiting period '{s}'"))
    }
}

pub fn waiting_period_to_probability(
    frequency: Frequency,
    period: Horizon,
) -> Result<ProbabilityLevel> {
    let k = period
        .periods(frequency)
        .ok_or_else(|| Error::UnsupportedCombination {
            frequency: frequency.to_string(),
            period: period.to_string(),
        })?;
    ProbabilityLevel::from_waiting_periods(k)
}

/// Human label for a waiting period, e.g. `1 quarter` or `7 days`.
pub fn waiting_period_label(frequency: Frequency, k: u32) -> String {
    match Horizon::from_periods(frequency, k) {
        Some(h) => h.label().to_string(),
        None => match frequency {
            Frequency::Daily => format!("{k} days"),
            Frequency::Weekly => format!("{k} weeks"),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarMethod {
    PortfolioQuantile,
    Aggregated,
}

/// A loss magnitude at a probability level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEstimate {
    pub value: f64,
    pub level: ProbabilityLevel,
    pub position: Position,
    pub method: VarMethod,
    pub n_obs: usize,
}

/// 1-based rank `ceil(n * q)`, snapping `n * q` to the nearest integer when it
/// is within rounding of one.
fn order_rank(n: usize, q: f64) -> usize {
    let x = n as f64 * q;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= RANK_EPS * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n)
}

fn supports_tail(n: usize, tail: f64) -> bool {
    n as f64 * tail >= 1.0 - RANK_EPS
}

/// The `ceil(n * q)`-th smallest element of `sample`. No interpolation.
pub fn empirical_quantile(sample: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidProbability(q));
    }
    SortedSample::new(sample)?.quantile(q)
}

/// An ascending-sorted sample; all VaR figures for one series are read off a
/// single sort.
#[derive(Debug, Clone)]
pub struct SortedSample {
    sorted: Vec<f64>,
}

impl SortedSample {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientSample { n: 0, q: f64::NAN });
        }
        if let Some(v) = sample.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value {v}")));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn from_series(r: &ReturnSeries) -> Result<Self> {
        Self::new(r.values())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidProbability(q));
        }
        Ok(self.sorted[order_rank(self.len(), q) - 1])
    }

    /// Historical VaR of a position on this sample.
    ///
    /// With `k = ceil(n * (1 - p))`, a long position loses the k-th smallest
    /// return and a short position the k-th largest. Both tails use the same
    /// rank, so negating the sample swaps the two positions exactly.
    pub fn var(&self, level: ProbabilityLevel, position: Position) -> Result<VarEstimate> {
        let n = self.len();
        let tail = level.tail();
        if !supports_tail(n, tail) {
            return Err(Error::InsufficientSample { n, q: level.p() });
        }
        let k = order_rank(n, tail);
        let loss = match position {
            Position::Long => -self.sorted[k - 1],
            Position::Short => self.sorted[n - k],
        };
        Ok(VarEstimate {
            value: if loss > 0.0 { loss } else { 0.0 },
            level,
            position,
            method: VarMethod::PortfolioQuantile,
            n_obs: n,
        })
    }
}

pub fn historical_var(
    r: &ReturnSeries,
    level: ProbabilityLevel,
    position: Position,
) -> Result<VarEstimate> {
    SortedSample::from_series(r)?.var(level, position)
}
