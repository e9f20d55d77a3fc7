//! VaR aggregation, the correlation implied by it, and correlation surfaces
//! over a grid of probability levels, weights and positions.
//!
//! For two assets with individual VaRs `v1`, `v2` and weights `w1`, `w2`, the
//! risk-factor portfolio VaR is
//!
//! ```text
//! v_agg = sqrt(w1^2 v1^2 + w2^2 v2^2 + 2 w1 w2 rho v1 v2)
//! ```
//!
//! Solving for `rho` with the portfolio-approach VaR in place of `v_agg` gives
//! the implied correlation
//!
//! ```text
//! rho = (v_port^2 - w1^2 v1^2 - w2^2 v2^2) / (2 w1 w2 v1 v2)
//! ```
//!
//! Under joint normality both approaches agree and `rho` equals the Pearson
//! coefficient for every probability, weight and position.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    ensure_compatible, portfolio_returns, Frequency, PortfolioSpec, Position, ReturnSeries,
};
use crate::error::{Error, Result};
use crate::var::{Horizon, ProbabilityLevel, SortedSample, VarEstimate, VarMethod};

/// Portfolio weight pairs of the reference experiment.
pub const PAPER_WEIGHTS: [(f64, f64); 3] = [(0.25, 0.75), (0.5, 0.5), (0.75, 0.25)];

fn ensure_same_level(a: &VarEstimate, b: &VarEstimate) -> Result<()> {
    if a.level.p() != b.level.p() {
        return Err(Error::MismatchedInputs(format!(
            "probability {} vs {}",
            a.level.p(),
            b.level.p()
        )));
    }
    if a.position != b.position {
        return Err(Error::MismatchedInputs(format!(
            "position {} vs {}",
            a.position, b.position
        )));
    }
    Ok(())
}

fn ensure_magnitude(v: &VarEstimate) -> Result<()> {
    if !(v.value.is_finite() && v.value >= 0.0) {
        return Err(Error::MismatchedInputs(format!(
            "VaR must be a non-negative magnitude, got {}",
            v.value
        )));
    }
    Ok(())
}

/// Risk-factor portfolio VaR from individual VaRs and a correlation.
pub fn aggregate_var(
    v1: &VarEstimate,
    v2: &VarEstimate,
    spec: &PortfolioSpec,
    rho: f64,
) -> Result<VarEstimate> {
    ensure_same_level(v1, v2)?;
    ensure_magnitude(v1)?;
    ensure_magnitude(v2)?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidCorrelation(rho));
    }
    let a = spec.w1() * v1.value;
    let b = spec.w2() * v2.value;
    let radicand = a * a + b * b + 2.0 * rho * a * b;
    Ok(VarEstimate {
        // rounding can leave -0.0-ish residue at rho = -1 with a = b
        value: radicand.max(0.0).sqrt(),
        level: v1.level,
        position: v1.position,
        method: VarMethod::Aggregated,
        n_obs: v1.n_obs.min(v2.n_obs),
    })
}

/// One point of a correlation surface. `rho` is never clamped; `in_range`
/// records whether it is a valid correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedCorrelationPoint {
    pub rho: f64,
    pub frequency: Frequency,
    pub level: ProbabilityLevel,
    pub spec: PortfolioSpec,
    pub in_range: bool,
}

/// Correlation that makes the aggregated VaR equal `v_port`.
///
/// The returned point carries [`Frequency::Daily`]; [`build_surface`] sets the
/// frequency of the series it was computed from.
pub fn implied_correlation(
    v_port: &VarEstimate,
    v1: &VarEstimate,
    v2: &VarEstimate,
    spec: &PortfolioSpec,
) -> Result<ImpliedCorrelationPoint> {
    ensure_same_level(v1, v2)?;
    ensure_same_level(v_port, v1)?;
    for v in [v_port, v1, v2] {
        ensure_magnitude(v)?;
    }
    if v1.value <= 0.0 || v2.value <= 0.0 {
        return Err(Error::DegenerateVar {
            v1: v1.value,
            v2: v2.value,
        });
    }
    let a = spec.w1() * v1.value;
    let b = spec.w2() * v2.value;
    let rho = (v_port.value * v_port.value - a * a - b * b) / (2.0 * a * b);
    Ok(ImpliedCorrelationPoint {
        rho,
        frequency: Frequency::Daily,
        level: v1.level,
        spec: spec.with_position(v1.position),
        in_range: (-1.0..=1.0).contains(&rho),
    })
}

/// Sample product-moment correlation of two aligned series.
pub fn pearson_correlation(r1: &ReturnSeries, r2: &ReturnSeries) -> Result<f64> {
    if r1.dates() != r2.dates() {
        return Err(Error::DateMismatch);
    }
    let n = r1.len();
    if n < 2 {
        return Err(Error::TooShortSeries { len: n, min: 2 });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (m1, m2) = (mean(r1.values()), mean(r2.values()));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in r1.values().iter().zip(r2.values()) {
        let (dx, dy) = (x - m1, y - m2);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantSeries(r1.asset_id().to_string()));
    }
    if syy == 0.0 {
        return Err(Error::ConstantSeries(r2.asset_id().to_string()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub level: ProbabilityLevel,
    pub spec: PortfolioSpec,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} w=({},{}) {}",
            self.level,
            self.spec.w1(),
            self.spec.w2(),
            self.spec.position()
        )
    }
}

/// Builds the cross product `levels x weights x positions`, in that nesting
/// order.
pub fn grid(
    levels: &[ProbabilityLevel],
    weights: &[(f64, f64)],
    positions: &[Position],
) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(levels.len() * weights.len() * positions.len());
    for &level in levels {
        for &(w1, w2) in weights {
            for &position in positions {
                out.push(GridPoint {
                    level,
                    spec: PortfolioSpec::new(w1, w2, position)?,
                });
            }
        }
    }
    Ok(out)
}

/// Named grids reproducing the reference experiment layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPreset {
    PaperDaily,
    PaperWeekly,
}

impl GridPreset {
    pub fn frequency(self) -> Frequency {
        match self {
            GridPreset::PaperDaily => Frequency::Daily,
            GridPreset::PaperWeekly => Frequency::Weekly,
        }
    }

    /// Probability levels of the preset, shortest waiting period first.
    pub fn levels(self) -> Vec<ProbabilityLevel> {
        paper_levels(self.frequency())
    }

    pub fn points(self) -> Vec<GridPoint> {
        grid(&self.levels(), &PAPER_WEIGHTS, &Position::BOTH).expect("preset weights are valid")
    }
}

impl FromStr for GridPreset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper-daily" | "paper-grid-daily" => Ok(GridPreset::PaperDaily),
            "paper-weekly" | "paper-grid-weekly" => Ok(GridPreset::PaperWeekly),
            other => Err(format!("unknown grid preset '{other}'")),
        }
    }
}

/// Waiting-period probability levels for `frequency`.
pub fn paper_levels(frequency: Frequency) -> Vec<ProbabilityLevel> {
    Horizon::for_frequency(frequency)
        .into_iter()
        .map(|h| {
            let k = h.periods(frequency).expect("filtered by frequency");
            ProbabilityLevel::from_waiting_periods(k).expect("calendar constants exceed 1")
        })
        .collect()
}

/// Implied correlations over a grid at one frequency, plus the full-sample
/// Pearson coefficient for reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSurface {
    pub frequency: Frequency,
    pub points: Vec<ImpliedCorrelationPoint>,
    pub pearson: f64,
}

impl CorrelationSurface {
    pub fn get(&self, p: f64, w1: f64, position: Position) -> Option<&ImpliedCorrelationPoint> {
        self.points
            .iter()
            .find(|pt| pt.level.p() == p && pt.spec.w1() == w1 && pt.spec.position() == position)
    }

    /// Distinct probability levels in grid order.
    pub fn levels(&self) -> Vec<ProbabilityLevel> {
        let mut seen = HashSet::new();
        self.points
            .iter()
            .filter(|pt| seen.insert(pt.level.p().to_bits()))
            .map(|pt| pt.level)
            .collect()
    }

    /// Distinct weight pairs in grid order.
    pub fn weights(&self) -> Vec<(f64, f64)> {
        let mut seen = HashSet::new();
        self.points
            .iter()
            .filter(|pt| seen.insert(pt.spec.w1().to_bits()))
            .map(|pt| (pt.spec.w1(), pt.spec.w2()))
            .collect()
    }

    /// Distinct positions in grid order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        for pt in &self.points {
            if !out.contains(&pt.spec.position()) {
                out.push(pt.spec.position());
            }
        }
        out
    }
}

/// Computes the implied correlation at every grid point.
///
/// Each series (both assets and one portfolio per distinct weight pair) is
/// sorted once; the grid points then read order statistics off those sorts.
/// Output order follows `grid`.
pub fn build_surface(
    r1: &ReturnSeries,
    r2: &ReturnSeries,
    frequency: Frequency,
    grid: &[GridPoint],
) -> Result<CorrelationSurface> {
    ensure_compatible(r1, r2)?;
    if r1.frequency() != frequency {
        return Err(Error::FrequencyMismatch(
            r1.frequency().to_string(),
            frequency.to_string(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut keys = HashSet::new();
    for pt in grid {
        let key = (
            pt.level.p().to_bits(),
            pt.spec.w1().to_bits(),
            pt.spec.position(),
        );
        if !keys.insert(key) {
            return Err(Error::DuplicateGridPoint(pt.to_string()));
        }
    }

    let mut weight_keys: Vec<u64> = Vec::new();
    for pt in grid {
        let key = pt.spec.w1().to_bits();
        if !weight_keys.contains(&key) {
            weight_keys.push(key);
        }
    }
    let weight_specs: Vec<PortfolioSpec> = weight_keys
        .iter()
        .map(|&key| {
            grid.iter()
                .find(|pt| pt.spec.w1().to_bits() == key)
                .map(|pt| pt.spec)
                .expect("key taken from grid")
        })
        .collect();

    // Index 0 and 1 are the assets, then one portfolio per weight pair.
    let mut series: Vec<ReturnSeries> = vec![r1.clone(), r2.clone()];
    for spec in &weight_specs {
        series.push(portfolio_returns(r1, r2, spec)?);
    }
    let sorted: Vec<SortedSample> = series
        .par_iter()
        .map(SortedSample::from_series)
        .collect::<Result<_>>()?;

    let points = grid
        .par_iter()
        .map(|pt| {
            let port_idx = 2 + weight_keys
                .iter()
                .position(|&k| k == pt.spec.w1().to_bits())
                .expect("weight registered");
            let evaluate = || -> Result<ImpliedCorrelationPoint> {
                let position = pt.spec.position();
                let v1 = sorted[0].var(pt.level, position)?;
                let v2 = sorted[1].var(pt.level, position)?;
                let vp = sorted[port_idx].var(pt.level, position)?;
                let mut point = implied_correlation(&vp, &v1, &v2, &pt.spec)?;
                point.frequency = frequency;
                Ok(point)
            };
            evaluate().map_err(|e| Error::GridPoint {
                point: pt.to_string(),
                source: Box::new(e),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    Ok(CorrelationSurface {
        frequency,
        points,
        pearson: pearson_correlation(r1, r2)?,
    })
}
