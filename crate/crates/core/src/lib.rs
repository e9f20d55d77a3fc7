//! Historical Value-at-Risk for two-asset portfolios and the correlation
//! implied by the standard VaR aggregation formula.
//!
//! The portfolio VaR is computed two ways: directly, as an empirical quantile
//! of the weighted portfolio return series, and by aggregating the two
//! individual VaRs with a correlation coefficient. The correlation that makes
//! both agree is the *implied correlation*; [`correlation::build_surface`]
//! evaluates it across probability levels, weights and positions.
//!
//! ```
//! use implied_corr::correlation::{build_surface, GridPreset};
//! use implied_corr::data::Frequency;
//! use implied_corr::synthetic::{gen_bivariate_gaussian, GeneratorConfig};
//!
//! let cfg = GeneratorConfig::gaussian(1, 20_000, 0.42, 0.011, 0.009);
//! let (r1, r2) = gen_bivariate_gaussian(&cfg).unwrap();
//! let surface = build_surface(&r1, &r2, Frequency::Daily, &GridPreset::PaperDaily.points()).unwrap();
//! assert_eq!(surface.points.len(), 36);
//! ```

pub mod cli;
pub mod correlation;
pub mod data;
pub mod error;
pub mod report;
pub mod selftest;
pub mod synthetic;
pub mod var;

pub use error::{Error, Result};
