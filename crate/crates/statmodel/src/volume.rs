//! Data-volume draws for data events: each user carries a usage profile and
//! each profile has separate peak / off-peak byte distributions.

use crate::dist::FittedDist;
use cdrkit_core::config::{ConfigDist, VolumeConfig};
use cdrkit_core::types::hour_of_day;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeProfile {
    Light,
    Medium,
    Heavy,
}

impl VolumeProfile {
    pub const ALL: [VolumeProfile; 3] =
        [VolumeProfile::Light, VolumeProfile::Medium, VolumeProfile::Heavy];

    pub fn index(self) -> usize {
        match self {
            VolumeProfile::Light => 0,
            VolumeProfile::Medium => 1,
            VolumeProfile::Heavy => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VolumeProfile::Light => "light",
            VolumeProfile::Medium => "medium",
            VolumeProfile::Heavy => "heavy",
        }
    }

    pub fn parse(s: &str) -> Option<VolumeProfile> {
        VolumeProfile::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VolumeDist {
    Fitted(FittedDist),
    Const(f64),
}

impl VolumeDist {
    fn from_config(d: &ConfigDist) -> VolumeDist {
        match *d {
            ConfigDist::Lognormal { mu, sigma, x0 } => {
                VolumeDist::Fitted(FittedDist::lognormal(sigma, mu, x0))
            }
            ConfigDist::Exponential { lambda, x0 } => {
                VolumeDist::Fitted(FittedDist::exponential(lambda, x0))
            }
            ConfigDist::Const { value } => VolumeDist::Const(value),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            VolumeDist::Fitted(d) => d.sample(rng),
            VolumeDist::Const(v) => *v,
        }
    }
}

/// Profile shares plus the [profile][daypart] distribution grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTable {
    shares: [f64; 3],
    peak_start_h: u64,
    peak_end_h: u64,
    /// Indexed [profile][0 = offpeak, 1 = peak].
    dists: [[VolumeDist; 2]; 3],
}

impl VolumeTable {
    pub fn from_config(cfg: &VolumeConfig) -> VolumeTable {
        VolumeTable {
            shares: cfg.shares,
            peak_start_h: cfg.peak_start_h,
            peak_end_h: cfg.peak_end_h,
            dists: [
                [
                    VolumeDist::from_config(&cfg.dists[0][0]),
                    VolumeDist::from_config(&cfg.dists[0][1]),
                ],
                [
                    VolumeDist::from_config(&cfg.dists[1][0]),
                    VolumeDist::from_config(&cfg.dists[1][1]),
                ],
                [
                    VolumeDist::from_config(&cfg.dists[2][0]),
                    VolumeDist::from_config(&cfg.dists[2][1]),
                ],
            ],
        }
    }

    /// Assign a usage profile according to the configured shares.
    pub fn draw_profile<R: Rng>(&self, rng: &mut R) -> VolumeProfile {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for p in VolumeProfile::ALL {
            acc += self.shares[p.index()];
            if u < acc {
                return p;
            }
        }
        VolumeProfile::Heavy
    }

    fn is_peak(&self, timestamp_s: u64) -> bool {
        let h = hour_of_day(timestamp_s);
        h >= self.peak_start_h && h < self.peak_end_h
    }

    /// Bytes for one data event; draws are floored at 1 byte.
    pub fn sample<R: Rng>(&self, profile: VolumeProfile, timestamp_s: u64, rng: &mut R) -> u64 {
        let daypart = usize::from(self.is_peak(timestamp_s));
        let raw = self.dists[profile.index()][daypart].sample(rng);
        raw.max(1.0).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::config::PipelineConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn default_table() -> VolumeTable {
        VolumeTable::from_config(&PipelineConfig::default().volume)
    }

    #[test]
    fn const_dist_is_point_mass() {
        let mut cfg = PipelineConfig::default().volume;
        cfg.dists = [[ConfigDist::Const { value: 1_000_000.0 }; 2]; 3];
        let table = VolumeTable::from_config(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for p in VolumeProfile::ALL {
            for ts in [0u64, 10 * 3600, 23 * 3600] {
                assert_eq!(table.sample(p, ts, &mut rng), 1_000_000);
            }
        }
    }

    #[test]
    fn heavy_profile_outweighs_light() {
        let table = default_table();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mean = |p: VolumeProfile, rng: &mut ChaCha12Rng| {
            (0..100_000).map(|_| table.sample(p, 12 * 3600, rng) as f64).sum::<f64>() / 1e5
        };
        let light = mean(VolumeProfile::Light, &mut rng);
        let heavy = mean(VolumeProfile::Heavy, &mut rng);
        assert!(heavy > 4.0 * light, "heavy {heavy} vs light {light}");
    }

    #[test]
    fn peak_window_selects_daypart() {
        // Distinguishable point masses expose which daypart was picked.
        let mut cfg = PipelineConfig::default().volume;
        cfg.dists = [[
            ConfigDist::Const { value: 10.0 },
            ConfigDist::Const { value: 20.0 },
        ]; 3];
        let table = VolumeTable::from_config(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        // Default window is [08:00, 20:00).
        assert_eq!(table.sample(VolumeProfile::Light, 3 * 3600, &mut rng), 10);
        assert_eq!(table.sample(VolumeProfile::Light, 8 * 3600, &mut rng), 20);
        assert_eq!(table.sample(VolumeProfile::Light, 19 * 3600 + 3599, &mut rng), 20);
        assert_eq!(table.sample(VolumeProfile::Light, 20 * 3600, &mut rng), 10);
        // Day boundaries wrap.
        assert_eq!(table.sample(VolumeProfile::Light, 86_400 + 3 * 3600, &mut rng), 10);
    }

    #[test]
    fn profile_shares_respected() {
        let table = default_table();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let mut counts = [0u32; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[table.draw_profile(&mut rng).index()] += 1;
        }
        for (i, expect) in [0.5, 0.35, 0.15].iter().enumerate() {
            let got = counts[i] as f64 / n as f64;
            assert!((got - expect).abs() < 0.01, "profile {i}: {got} vs {expect}");
        }
    }
}
