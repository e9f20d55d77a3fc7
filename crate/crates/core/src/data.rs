//! Price ingestion, calendar alignment, return construction and portfolio
//! series.
//!
//! Returns are simple (arithmetic) returns `close_t / close_{t-1} - 1`, which
//! makes the weighted portfolio return `w1 * r1 + w2 * r2` exact for a
//! value-weighted two-asset portfolio.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `w1 + w2 = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Daily => f.write_str("daily"),
            Frequency::Weekly => f.write_str("weekly"),
        }
    }
}

impl FromStr for Frequency {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "daily" => Ok(Frequency::Daily),
            "weekly" => Ok(Frequency::Weekly),
            other => Err(format!(
                "unknown frequency '{other}' (expected daily or weekly)"
            )),
        }
    }
}

/// Long positions lose on price falls, short positions on price rises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Long,
    Short,
}

impl Position {
    pub const BOTH: [Position; 2] = [Position::Long, Position::Short];

    pub fn label(self) -> &'static str {
        match self {
            Position::Long => "Long",
            Position::Short => "Short",
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Long => f.write_str("long"),
            Position::Short => f.write_str("short"),
        }
    }
}

impl FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "long" => Ok(Position::Long),
            "short" => Ok(Position::Short),
            other => Err(format!(
                "unknown position '{other}' (expected long or short)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceObservation {
    pub date: NaiveDate,
    pub close: f64,
}

/// Dated closing prices of one asset. Dates are strictly increasing and every
/// close is a finite positive number.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset_id: String,
    observations: Vec<PriceObservation>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, observations: Vec<PriceObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, obs) in observations.iter().enumerate() {
            if !(obs.close.is_finite() && obs.close > 0.0) {
                return Err(Error::InvalidSeries(format!(
                    "non-positive close {} on {}",
                    obs.close, obs.date
                )));
            }
            if i > 0 && observations[i - 1].date >= obs.date {
                return Err(Error::InvalidSeries(format!(
                    "dates not strictly increasing at {}",
                    obs.date
                )));
            }
        }
        Ok(Self {
            asset_id: asset_id.into(),
            observations,
        })
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn observations(&self) -> &[PriceObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|o| o.date)
    }

    /// Keeps observations whose date lies in `[from, to]`.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> Result<Self> {
        let obs = self
            .observations
            .iter()
            .filter(|o| o.date >= from && o.date <= to)
            .copied()
            .collect();
        Self::new(self.asset_id.clone(), obs)
    }

    /// Writes the series in the `date,close` CSV format read by [`load_csv`].
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "date,close")?;
        for obs in &self.observations {
            writeln!(out, "{},{}", obs.date.format("%Y-%m-%d"), obs.close)?;
        }
        Ok(())
    }
}

/// Simple returns of one asset (or portfolio) at a given frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    asset_id: String,
    frequency: Frequency,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(
        asset_id: impl Into<String>,
        frequency: Frequency,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} dates for {} values",
                dates.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::TooShortSeries { len: 0, min: 1 });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSeries(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite return {v}")));
        }
        Ok(Self {
            asset_id: asset_id.into(),
            frequency,
            dates,
            values,
        })
    }

    /// Attaches consecutive business-day dates starting at [`SYNTHETIC_START`]
    /// to a bare list of returns.
    pub fn from_values(
        asset_id: impl Into<String>,
        frequency: Frequency,
        values: Vec<f64>,
    ) -> Result<Self> {
        let dates = business_days(next_business_day(SYNTHETIC_START), values.len());
        Self::new(asset_id, frequency, dates, values)
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same dates and frequency, values transformed elementwise.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.asset_id.clone(),
            self.frequency,
            self.dates.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Compounds the returns into a price path starting at `base` on the
    /// business day before the first return date.
    pub fn to_price_path(&self, base: f64) -> Result<PriceSeries> {
        let mut obs = Vec::with_capacity(self.len() + 1);
        obs.push(PriceObservation {
            date: previous_business_day(self.dates[0]),
            close: base,
        });
        let mut level = base;
        for (&date, &r) in self.dates.iter().zip(&self.values) {
            level *= 1.0 + r;
            obs.push(PriceObservation { date, close: level });
        }
        PriceSeries::new(self.asset_id.clone(), obs)
    }
}

/// Two portfolio weights summing to one, plus the position type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    w1: f64,
    w2: f64,
    position: Position,
}

impl PortfolioSpec {
    pub fn new(w1: f64, w2: f64, position: Position) -> Result<Self> {
        let open_unit = |w: f64| w > 0.0 && w < 1.0;
        if !(open_unit(w1) && open_unit(w2) && (w1 + w2 - 1.0).abs() <= WEIGHT_SUM_TOLERANCE) {
            return Err(Error::InvalidWeights { w1, w2 });
        }
        Ok(Self { w1, w2, position })
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn position(&self) -> Position {
        self.position
    }

    /// The same portfolio seen with the assets swapped.
    pub fn swapped(&self) -> Self {
        Self {
            w1: self.w2,
            w2: self.w1,
            position: self.position,
        }
    }

    pub fn with_position(&self, position: Position) -> Self {
        Self { position, ..*self }
    }
}

/// Base date for synthetic series.
pub const SYNTHETIC_START: NaiveDate = match NaiveDate::from_ymd_opt(2000, 1, 3) {
    Some(d) => d,
    None => panic!("invalid date"),
};

fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

fn next_business_day(d: NaiveDate) -> NaiveDate {
    let mut d = d + Days::new(1);
    while is_weekend(d) {
        d = d + Days::new(1);
    }
    d
}

fn previous_business_day(d: NaiveDate) -> NaiveDate {
    let mut d = d - Days::new(1);
    while is_weekend(d) {
        d = d - Days::new(1);
    }
    d
}

/// `n` consecutive Monday-to-Friday dates starting at `start` (rolled forward
/// if it falls on a weekend).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut d = start;
    while is_weekend(d) {
        d = d + Days::new(1);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(d);
        d = next_business_day(d);
    }
    out
}

/// Reads a `date,close` CSV file. The asset id is the file stem.
///
/// Rows are rejected, never repaired: an unparsable date, a non-positive or
/// non-numeric close, or a date not after the previous one all fail with the
/// offending line number.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let asset_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "asset".to_string());
    read_csv(asset_id, file)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(asset_id: impl Into<String>, reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.len() != 2 || &header[0] != "date" || &header[1] != "close" {
        return Err(malformed(
            1,
            format!(
                "expected header 'date,close', got '{}'",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut observations: Vec<PriceObservation> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| malformed(line, format!("bad date '{}': {e}", &record[0])))?;
        let close: f64 = record[1]
            .parse()
            .map_err(|_| malformed(line, format!("bad price '{}'", &record[1])))?;
        if !(close.is_finite() && close > 0.0) {
            return Err(malformed(
                line,
                format!("price must be positive, got '{}'", &record[1]),
            ));
        }
        if let Some(prev) = observations.last() {
            if date <= prev.date {
                return Err(malformed(
                    line,
                    format!("date {date} not after previous date {}", prev.date),
                ));
            }
        }
        observations.push(PriceObservation { date, close });
    }
    PriceSeries::new(asset_id, observations)
}

fn malformed(line: u64, reason: String) -> Error {
    Error::MalformedRow { line, reason }
}

/// Restricts both series to the dates they have in common.
pub fn align(a: &PriceSeries, b: &PriceSeries) -> Result<(PriceSeries, PriceSeries)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let common: BTreeSet<NaiveDate> = {
        let da: BTreeSet<_> = a.dates().collect();
        b.dates().filter(|d| da.contains(d)).collect()
    };
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let keep = |s: &PriceSeries| {
        let obs = s
            .observations
            .iter()
            .filter(|o| common.contains(&o.date))
            .copied()
            .collect();
        PriceSeries::new(s.asset_id.clone(), obs)
    };
    Ok((keep(a)?, keep(b)?))
}

/// Daily simple returns; the return is dated at the later close.
pub fn to_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    to_returns_at(p, Frequency::Daily)
}

/// Simple returns of a series already sampled at `frequency`.
pub fn to_returns_at(p: &PriceSeries, frequency: Frequency) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShortSeries {
            len: p.len(),
            min: 2,
        });
    }
    let (dates, values) = p
        .observations
        .windows(2)
        .map(|w| (w[1].date, w[1].close / w[0].close - 1.0))
        .unzip();
    ReturnSeries::new(p.asset_id.clone(), frequency, dates, values)
}

/// Last available close in each ISO week.
pub fn resample_weekly(p: &PriceSeries) -> Result<PriceSeries> {
    if p.len() < 2 {
        return Err(Error::TooShortSeries {
            len: p.len(),
            min: 2,
        });
    }
    let mut out: Vec<PriceObservation> = Vec::new();
    let mut current_week = None;
    for obs in &p.observations {
        let week = obs.date.iso_week();
        let key = (week.year(), week.week());
        if current_week == Some(key) {
            *out.last_mut().expect("week already started") = *obs;
        } else {
            out.push(*obs);
            current_week = Some(key);
        }
    }
    PriceSeries::new(p.asset_id.clone(), out)
}

/// Weighted sum `w1 * r1 + w2 * r2`. The position type does not enter here;
/// it selects the loss tail when the VaR is computed.
pub fn portfolio_returns(
    r1: &ReturnSeries,
    r2: &ReturnSeries,
    spec: &PortfolioSpec,
) -> Result<ReturnSeries> {
    ensure_compatible(r1, r2)?;
    let values = r1
        .values
        .iter()
        .zip(&r2.values)
        .map(|(&a, &b)| spec.w1 * a + spec.w2 * b)
        .collect();
    ReturnSeries::new(
        format!("portfolio({},{})", r1.asset_id, r2.asset_id),
        r1.frequency,
        r1.dates.clone(),
        values,
    )
}

pub(crate) fn ensure_compatible(r1: &ReturnSeries, r2: &ReturnSeries) -> Result<()> {
    if r1.frequency != r2.frequency {
        return Err(Error::FrequencyMismatch(
            r1.frequency.to_string(),
            r2.frequency.to_string(),
        ));
    }
    if r1.dates != r2.dates {
        return Err(Error::DateMismatch);
    }
    Ok(())
}

/// Aligns two price series and turns them into returns at `frequency`.
pub fn prepare_returns(
    a: &PriceSeries,
    b: &PriceSeries,
    frequency: Frequency,
) -> Result<(ReturnSeries, ReturnSeries)> {
    let (a, b) = align(a, b)?;
    match frequency {
        Frequency::Daily => Ok((to_returns(&a)?, to_returns(&b)?)),
        Frequency::Weekly => {
            let (wa, wb) = (resample_weekly(&a)?, resample_weekly(&b)?);
            Ok((
                to_returns_at(&wa, Frequency::Weekly)?,
                to_returns_at(&wb, Frequency::Weekly)?,
            ))
        }
    }
}
