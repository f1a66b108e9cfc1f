//! Continuous samplers tied to the inter-event-time bins and call durations,
//! plus the CSV export format for fitted distributions.

use crate::dist::{DistFamily, DistKind, FittedDist};
use cdrkit_core::types::{IET_BIN_COUNT, IET_BIN_EDGES_S};
use rand::Rng;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Per-bin continuous gap distributions. Bin 0 covers [0, 30 min], bin 1
/// (30 min, 24 h], bin 2 everything beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct IetSampler {
    pub bins: [FittedDist; IET_BIN_COUNT],
}

impl IetSampler {
    /// Stock parameters for the three bins.
    pub fn stock() -> IetSampler {
        IetSampler {
            bins: [
                FittedDist::lognormal(1.798, 4.04, 0.99),
                FittedDist::lognormal(1.731, 8.59, 1749.08),
                FittedDist::exponential(6.21e-6, 86_401.0),
            ],
        }
    }

    pub fn from_fits(bins: [FittedDist; IET_BIN_COUNT]) -> IetSampler {
        IetSampler { bins }
    }

    fn bounds(bin: usize) -> (f64, f64) {
        match bin {
            0 => (0.0, IET_BIN_EDGES_S[0]),
            1 => (IET_BIN_EDGES_S[0] + f64::EPSILON, IET_BIN_EDGES_S[1]),
            2 => (IET_BIN_EDGES_S[1] + 1.0, f64::INFINITY),
            _ => panic!("bin index {bin} out of range"),
        }
    }

    /// Raw draw from the bin's distribution, no truncation.
    pub fn sample_untruncated<R: Rng>(&self, bin: usize, rng: &mut R) -> f64 {
        assert!(bin < IET_BIN_COUNT, "bin index {bin} out of range");
        self.bins[bin].sample(rng)
    }

    /// Truncated draw: rejection inside the bin interval, clamped to the
    /// boundary after 100 failed retries.
    pub fn sample<R: Rng>(&self, bin: usize, rng: &mut R) -> f64 {
        let (lo, hi) = Self::bounds(bin);
        self.bins[bin].sample_truncated(lo, hi, rng)
    }

    /// Median of `n` truncated draws; n = 1 degenerates to a single draw.
    pub fn sample_median<R: Rng>(&self, bin: usize, n: usize, rng: &mut R) -> f64 {
        assert!(n >= 1, "need at least one sampling");
        if n == 1 {
            return self.sample(bin, rng);
        }
        let mut draws: Vec<f64> = (0..n).map(|_| self.sample(bin, rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if n % 2 == 1 {
            draws[n / 2]
        } else {
            0.5 * (draws[n / 2 - 1] + draws[n / 2])
        }
    }

    /// Mean of `n` truncated draws, used when scoring bin predictions
    /// against continuous truth.
    pub fn sample_mean<R: Rng>(&self, bin: usize, n: usize, rng: &mut R) -> f64 {
        assert!(n >= 1, "need at least one sampling");
        (0..n).map(|_| self.sample(bin, rng)).sum::<f64>() / n as f64
    }
}

/// Call-duration distribution.
pub fn call_duration_dist() -> FittedDist {
    FittedDist::lognormal(1.29, 3.78, -0.47)
}

/// Positive call duration in seconds; non-positive draws are rejected.
pub fn sample_call_duration<R: Rng>(rng: &mut R) -> f64 {
    sample_positive(&call_duration_dist(), rng)
}

pub fn sample_positive<R: Rng>(dist: &FittedDist, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

/// Whole-range inter-event-time distribution (no bin conditioning), used as
/// an evaluation baseline.
pub fn overall_iet_dist() -> FittedDist {
    FittedDist::lognormal(2.67, 4.97, 1.0)
}

// ---- fitted-distribution export ----

const FITS_HEADER: &str = "label,family,sigma_or_lambda,mu,x0,ks";

/// Write labeled distributions as CSV. Float fields carry the exact f64
/// bits (hex) next to a readable decimal so reloads are lossless.
pub fn write_fits(path: &Path, fits: &[(String, FittedDist)]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{FITS_HEADER}")?;
    for (label, dist) in fits {
        let (family, p1, p2, x0) = match dist.kind {
            DistKind::Lognormal { sigma, mu, x0 } => (DistFamily::Lognormal, sigma, mu, x0),
            DistKind::Exponential { lambda, x0 } => (DistFamily::Exponential, lambda, 0.0, x0),
        };
        writeln!(
            out,
            "{label},{},{:016x},{:016x},{:016x},{:016x}",
            family.as_str(),
            p1.to_bits(),
            p2.to_bits(),
            x0.to_bits(),
            dist.ks_statistic.to_bits(),
        )?;
    }
    out.flush()
}

pub fn read_fits(path: &Path) -> std::io::Result<Vec<(String, FittedDist)>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    match lines.next() {
        Some(Ok(h)) if h == FITS_HEADER => {}
        other => return Err(bad(format!("bad fits header: {other:?}"))),
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(bad(format!("bad fits row: {line:?}")));
        }
        let bits = |s: &str| -> std::io::Result<f64> {
            u64::from_str_radix(s, 16)
                .map(f64::from_bits)
                .map_err(|_| bad(format!("bad float bits {s:?}")))
        };
        let p1 = bits(parts[2])?;
        let p2 = bits(parts[3])?;
        let x0 = bits(parts[4])?;
        let ks = bits(parts[5])?;
        let kind = match DistFamily::parse(parts[1]) {
            Some(DistFamily::Lognormal) => DistKind::Lognormal { sigma: p1, mu: p2, x0 },
            Some(DistFamily::Exponential) => DistKind::Exponential { lambda: p1, x0 },
            None => return Err(bad(format!("bad family {:?}", parts[1]))),
        };
        out.push((parts[0].to_string(), FittedDist { kind, ks_statistic: ks }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::types::iet_bin;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn untruncated_shortest_bin_median_matches_closed_form() {
        let sampler = IetSampler::stock();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 200_000;
        let mut draws: Vec<f64> =
            (0..n).map(|_| sampler.sample_untruncated(0, &mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[n / 2];
        let expected = 0.99 + 4.04f64.exp();
        assert!(
            (median - expected).abs() / expected < 0.02,
            "median {median} vs {expected}"
        );
    }

    #[test]
    fn truncated_draws_stay_in_bin() {
        let sampler = IetSampler::stock();
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for bin in 0..IET_BIN_COUNT {
            for _ in 0..20_000 {
                let x = sampler.sample(bin, &mut rng);
                assert_eq!(iet_bin(x), bin, "draw {x} left bin {bin}");
            }
        }
    }

    #[test]
    fn longest_bin_never_below_location() {
        let sampler = IetSampler::stock();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50_000 {
            assert!(sampler.sample_untruncated(2, &mut rng) >= 86_401.0);
        }
    }

    #[test]
    fn median_of_n_reduces_spread() {
        let sampler = IetSampler::stock();
        let mut a = ChaCha12Rng::seed_from_u64(8);
        let single: Vec<f64> = (0..4_000).map(|_| sampler.sample_median(0, 1, &mut a)).collect();
        let mut b = ChaCha12Rng::seed_from_u64(8);
        let med9: Vec<f64> = (0..4_000).map(|_| sampler.sample_median(0, 9, &mut b)).collect();
        let spread = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
        };
        assert!(spread(&med9) < spread(&single));
    }

    #[test]
    fn call_durations_positive_and_median_close() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let n = 200_000;
        let mut draws: Vec<f64> = (0..n).map(|_| sample_call_duration(&mut rng)).collect();
        assert!(draws.iter().all(|&x| x > 0.0));
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = -0.47 + 3.78f64.exp();
        assert!((draws[n / 2] - expected).abs() / expected < 0.02);
    }

    #[test]
    fn seeded_draws_reproduce() {
        let sampler = IetSampler::stock();
        let mut a = ChaCha12Rng::seed_from_u64(77);
        let mut b = ChaCha12Rng::seed_from_u64(77);
        for bin in 0..IET_BIN_COUNT {
            for _ in 0..100 {
                assert_eq!(sampler.sample(bin, &mut a), sampler.sample(bin, &mut b));
            }
        }
    }

    #[test]
    fn fits_roundtrip_exact_bits() {
        let dir = tempdir_path("fits");
        let path = dir.join("fits.csv");
        let fits = vec![
            ("iet_bin0".to_string(), FittedDist::lognormal(1.798, 4.04, 0.99)),
            ("iet_bin2".to_string(), FittedDist::exponential(6.21e-6, 86_401.0)),
        ];
        write_fits(&path, &fits).unwrap();
        assert_eq!(read_fits(&path).unwrap(), fits);
    }

    fn tempdir_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("cdrkit-statmodel-{name}"));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }
}
