//! Seeded bivariate return generators.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`), whose output stream is
//! fixed by the algorithm and independent of platform and toolchain. Each
//! 64-bit word is mapped to a uniform on the open interval `(0, 1)` through
//! its top 52 bits, then to a standard normal by the inverse normal CDF, so
//! every observation consumes exactly two words from the normal stream.
//! Regime selection in the crash mixture draws from a separate ChaCha20
//! stream (stream id 1) of the same seed, leaving the normal draws unchanged.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Frequency, ReturnSeries};
use crate::error::{Error, Result};

const NORMAL_STREAM: u64 = 0;
const REGIME_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Gaussian,
    CrashMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    pub rho: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub regime: Regime,
    pub crash_prob: f64,
    pub crash_rho: f64,
    pub crash_shift: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n: 2340,
            rho: 0.42,
            sigma1: 0.011,
            sigma2: 0.010,
            mu1: 0.0,
            mu2: 0.0,
            regime: Regime::Gaussian,
            crash_prob: 0.0,
            crash_rho: 0.9,
            crash_shift: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn gaussian(seed: u64, n: usize, rho: f64, sigma1: f64, sigma2: f64) -> Self {
        Self {
            seed,
            n,
            rho,
            sigma1,
            sigma2,
            ..Self::default()
        }
    }

    /// Gaussian regime `rho` mixed with a negatively shifted, highly
    /// correlated crash regime.
    pub fn crash_mixture(
        seed: u64,
        n: usize,
        rho: f64,
        sigma: f64,
        crash_prob: f64,
        crash_rho: f64,
        crash_shift: f64,
    ) -> Self {
        Self {
            seed,
            n,
            rho,
            sigma1: sigma,
            sigma2: sigma,
            regime: Regime::CrashMixture,
            crash_prob,
            crash_rho,
            crash_shift,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("{name} must be positive, got {s}"));
            }
        }
        for (name, m) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !m.is_finite() {
                return bad(format!("{name} must be finite, got {m}"));
            }
        }
        if self.regime == Regime::CrashMixture {
            if !(0.0..1.0).contains(&self.crash_prob) {
                return bad(format!(
                    "crash_prob must lie in [0, 1), got {}",
                    self.crash_prob
                ));
            }
            if !(-1.0..=1.0).contains(&self.crash_rho) {
                return bad(format!(
                    "crash_rho must lie in [-1, 1], got {}",
                    self.crash_rho
                ));
            }
            if !(self.crash_shift.is_finite() && self.crash_shift <= 0.0) {
                return bad(format!(
                    "crash_shift must be <= 0, got {}",
                    self.crash_shift
                ));
            }
        }
        Ok(())
    }
}

/// Maps a 64-bit word to `(k + 0.5) / 2^52` for its top 52 bits `k`; exact in
/// `f64`, so the result never reaches 0 or 1.
fn open_unit(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

struct NormalSource {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(NORMAL_STREAM);
        Self {
            rng,
            normal: Normal::standard(),
        }
    }

    fn next(&mut self) -> f64 {
        self.normal.inverse_cdf(open_unit(self.rng.next_u64()))
    }
}

struct Params {
    mu1: f64,
    mu2: f64,
    rho: f64,
    rho_c: f64,
}

impl Params {
    fn new(mu1: f64, mu2: f64, rho: f64) -> Self {
        Self {
            mu1,
            mu2,
            rho,
            rho_c: (1.0 - rho * rho).sqrt(),
        }
    }
}

fn generate(
    cfg: &GeneratorConfig,
    crash: Option<(f64, Params)>,
) -> Result<(ReturnSeries, ReturnSeries)> {
    let calm = Params::new(cfg.mu1, cfg.mu2, cfg.rho);
    let mut normals = NormalSource::new(cfg.seed);
    let mut regime_rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    regime_rng.set_stream(REGIME_STREAM);

    let mut r1 = Vec::with_capacity(cfg.n);
    let mut r2 = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let z1 = normals.next();
        let z2 = normals.next();
        let params = match &crash {
            Some((prob, crash_params)) if open_unit(regime_rng.next_u64()) < *prob => crash_params,
            _ => &calm,
        };
        r1.push(params.mu1 + cfg.sigma1 * z1);
        r2.push(params.mu2 + cfg.sigma2 * (params.rho * z1 + params.rho_c * z2));
    }
    Ok((
        ReturnSeries::from_values("synthetic1", Frequency::Daily, r1)?,
        ReturnSeries::from_values("synthetic2", Frequency::Daily, r2)?,
    ))
}

/// `n` draws from a bivariate normal with correlation `rho`, built as
/// `z2' = rho z1 + sqrt(1 - rho^2) z2` from independent normals.
pub fn gen_bivariate_gaussian(cfg: &GeneratorConfig) -> Result<(ReturnSeries, ReturnSeries)> {
    cfg.validate()?;
    if cfg.regime != Regime::Gaussian {
        return Err(Error::InvalidConfig(
            "gaussian generator needs regime = gaussian".into(),
        ));
    }
    generate(cfg, None)
}

/// Each observation comes from the crash regime with probability
/// `crash_prob` (correlation `crash_rho`, both means shifted by
/// `crash_shift`) and from the Gaussian regime otherwise.
pub fn gen_crash_mixture(cfg: &GeneratorConfig) -> Result<(ReturnSeries, ReturnSeries)> {
    cfg.validate()?;
    if cfg.regime != Regime::CrashMixture {
        return Err(Error::InvalidConfig(
            "crash mixture generator needs regime = crash_mixture".into(),
        ));
    }
    let crash = Params::new(
        cfg.mu1 + cfg.crash_shift,
        cfg.mu2 + cfg.crash_shift,
        cfg.crash_rho,
    );
    generate(cfg, Some((cfg.crash_prob, crash)))
}

/// Dispatches on the configured regime.
pub fn generate_pair(cfg: &GeneratorConfig) -> Result<(ReturnSeries, ReturnSeries)> {
    match cfg.regime {
        Regime::Gaussian => gen_bivariate_gaussian(cfg),
        Regime::CrashMixture => gen_crash_mixture(cfg),
    }
}
