//! Gaussian-constancy check: on bivariate normal data the implied correlation
//! must match the generating correlation at every probability level, weight
//! pair and position.

use std::fmt::Write as _;

use crate::correlation::{build_surface, CorrelationSurface, GridPreset};
use crate::data::Frequency;
use crate::error::Result;
use crate::synthetic::{gen_bivariate_gaussian, GeneratorConfig};

pub const TARGET_RHO: f64 = 0.42;
pub const DEFAULT_SAMPLE_SIZE: usize = 500_000;
/// Tolerance for levels up to 98.46% (waiting period of a quarter or less).
pub const MODERATE_TOLERANCE: f64 = 0.03;
/// Tolerance for levels of 99.23% and beyond.
pub const DEEP_TOLERANCE: f64 = 0.10;
/// Levels below this use [`MODERATE_TOLERANCE`].
pub const DEEP_LEVEL: f64 = 0.99;

pub fn tolerance_for(p: f64) -> f64 {
    if p < DEEP_LEVEL {
        MODERATE_TOLERANCE
    } else {
        DEEP_TOLERANCE
    }
}

#[derive(Debug, Clone)]
pub struct SelftestConfig {
    pub seed: u64,
    pub n: usize,
    pub rho: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl SelftestConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            n: DEFAULT_SAMPLE_SIZE,
            rho: TARGET_RHO,
            sigma1: 0.011,
            sigma2: 0.009,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointCheck {
    pub label: String,
    pub rho: f64,
    pub deviation: f64,
    pub tolerance: f64,
}

impl PointCheck {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub config: SelftestConfig,
    pub pearson: f64,
    pub checks: Vec<PointCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(PointCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn render(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "gaussian constancy selftest: seed={} n={} rho={} sigma=({}, {})",
            c.seed, c.n, c.rho, c.sigma1, c.sigma2
        );
        let _ = writeln!(out, "sample pearson: {:.4}", self.pearson);
        for check in &self.checks {
            let _ = writeln!(
                out,
                "{:<34} rho={:>7.4} dev={:.4} tol={:.2} {}",
                check.label,
                check.rho,
                check.deviation,
                check.tolerance,
                if check.passed() { "PASS" } else { "FAIL" }
            );
        }
        let failed = self.failures().count();
        if failed == 0 {
            let _ = writeln!(out, "result: PASS ({} points)", self.checks.len());
        } else {
            let _ = writeln!(
                out,
                "result: FAIL ({failed} of {} points outside tolerance)",
                self.checks.len()
            );
        }
        out
    }
}

/// Builds the daily preset surface on Gaussian data.
pub fn gaussian_surface(cfg: &SelftestConfig) -> Result<CorrelationSurface> {
    let gen = GeneratorConfig::gaussian(cfg.seed, cfg.n, cfg.rho, cfg.sigma1, cfg.sigma2);
    let (r1, r2) = gen_bivariate_gaussian(&gen)?;
    build_surface(&r1, &r2, Frequency::Daily, &GridPreset::PaperDaily.points())
}

pub fn run_selftest(cfg: &SelftestConfig) -> Result<SelftestReport> {
    let surface = gaussian_surface(cfg)?;
    let checks = surface
        .points
        .iter()
        .map(|pt| {
            let deviation = (pt.rho - cfg.rho).abs();
            PointCheck {
                label: format!(
                    "p={} w=({:.2},{:.2}) {}",
                    pt.level,
                    pt.spec.w1(),
                    pt.spec.w2(),
                    pt.spec.position()
                ),
                rho: pt.rho,
                // NaN deviations must fail
                deviation: if deviation.is_nan() {
                    f64::INFINITY
                } else {
                    deviation
                },
                tolerance: tolerance_for(pt.level.p()),
            }
        })
        .collect();
    Ok(SelftestReport {
        config: cfg.clone(),
        pearson: surface.pearson,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::paper_levels;

    #[test]
    fn tolerance_bands_split_the_daily_grid() {
        let tols: Vec<f64> = paper_levels(Frequency::Daily)
            .iter()
            .map(|l| tolerance_for(l.p()))
            .collect();
        assert_eq!(tols, [0.03, 0.03, 0.03, 0.10, 0.10, 0.10]);
    }

    #[test]
    fn small_sample_fails_and_names_points() {
        let cfg = SelftestConfig {
            n: 2_000,
            ..SelftestConfig::new(1)
        };
        let report = run_selftest(&cfg).unwrap();
        assert!(!report.passed());
        let text = report.render();
        assert!(text.contains("FAIL"));
        assert!(text.contains("result: FAIL"));
    }
}
