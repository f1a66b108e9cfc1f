//! The two distribution families used throughout: a three-parameter
//! lognormal (shape sigma, log-scale mu, location x0) and a shifted
//! exponential (rate lambda, location x0).
//!
//! Lognormal density for x > x0:
//!   pdf(x) = exp(-(ln(x-x0) - mu)^2 / (2 sigma^2)) / ((x-x0) sigma sqrt(2 pi))
//! Exponential density for x >= x0:
//!   pdf(x) = lambda exp(-lambda (x-x0))
//!
//! Medians in closed form: x0 + e^mu and x0 + ln(2)/lambda.

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistFamily {
    Lognormal,
    Exponential,
}

impl DistFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            DistFamily::Lognormal => "lognormal",
            DistFamily::Exponential => "exponential",
        }
    }

    pub fn parse(s: &str) -> Option<DistFamily> {
        match s {
            "lognormal" => Some(DistFamily::Lognormal),
            "exponential" => Some(DistFamily::Exponential),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    Lognormal { sigma: f64, mu: f64, x0: f64 },
    Exponential { lambda: f64, x0: f64 },
}

/// A concrete distribution, either fitted from samples (then `ks_statistic`
/// holds the fit's KS distance) or constructed from known parameters
/// (`ks_statistic` = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedDist {
    pub kind: DistKind,
    pub ks_statistic: f64,
}

impl FittedDist {
    pub fn lognormal(sigma: f64, mu: f64, x0: f64) -> FittedDist {
        assert!(sigma > 0.0, "lognormal sigma must be positive");
        FittedDist { kind: DistKind::Lognormal { sigma, mu, x0 }, ks_statistic: 0.0 }
    }

    pub fn exponential(lambda: f64, x0: f64) -> FittedDist {
        assert!(lambda > 0.0, "exponential lambda must be positive");
        FittedDist { kind: DistKind::Exponential { lambda, x0 }, ks_statistic: 0.0 }
    }

    pub fn family(&self) -> DistFamily {
        match self.kind {
            DistKind::Lognormal { .. } => DistFamily::Lognormal,
            DistKind::Exponential { .. } => DistFamily::Exponential,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Lognormal { sigma, mu, x0 } => {
                if x <= x0 {
                    return 0.0;
                }
                let z = (x - x0).ln() - mu;
                (-z * z / (2.0 * sigma * sigma)).exp()
                    / ((x - x0) * sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            DistKind::Exponential { lambda, x0 } => {
                if x < x0 {
                    0.0
                } else {
                    lambda * (-lambda * (x - x0)).exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Lognormal { sigma, mu, x0 } => {
                if x <= x0 {
                    0.0
                } else {
                    normal_cdf(((x - x0).ln() - mu) / sigma)
                }
            }
            DistKind::Exponential { lambda, x0 } => {
                if x < x0 {
                    0.0
                } else {
                    1.0 - (-lambda * (x - x0)).exp()
                }
            }
        }
    }

    pub fn median(&self) -> f64 {
        match self.kind {
            DistKind::Lognormal { mu, x0, .. } => x0 + mu.exp(),
            DistKind::Exponential { lambda, x0 } => x0 + std::f64::consts::LN_2 / lambda,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Lognormal { sigma, mu, x0 } => {
                let z: f64 = rng.sample(StandardNormal);
                x0 + (mu + sigma * z).exp()
            }
            DistKind::Exponential { lambda, x0 } => {
                // Inverse CDF; 1-u avoids ln(0) since gen() is in [0,1).
                let u: f64 = rng.gen();
                x0 - (1.0 - u).ln() / lambda
            }
        }
    }

    /// Draw restricted to [lo, hi] by rejection; after `max_retries` failed
    /// draws the last one is clamped to the violated boundary.
    pub fn sample_truncated<R: Rng>(&self, lo: f64, hi: f64, rng: &mut R) -> f64 {
        const MAX_RETRIES: usize = 100;
        let mut x = self.sample(rng);
        for _ in 0..MAX_RETRIES {
            if x >= lo && x <= hi {
                return x;
            }
            x = self.sample(rng);
        }
        x.clamp(lo, hi)
    }
}

/// Standard normal CDF via the Abramowitz-Stegun erf approximation
/// (absolute error < 1.5e-7, far below any tolerance used here).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}
