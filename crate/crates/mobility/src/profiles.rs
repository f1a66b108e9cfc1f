//! Behavioral profile assignment: exploration class (how often an agent
//! goes out at night), displacement class (how far home and office may sit
//! apart), and car ownership.

use cdrkit_core::config::MobilityConfig;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exploration {
    Scouter,
    Regular,
    Routiner,
}

impl Exploration {
    pub const ALL: [Exploration; 3] = [Exploration::Scouter, Exploration::Regular, Exploration::Routiner];

    pub fn index(self) -> usize {
        match self {
            Exploration::Scouter => 0,
            Exploration::Regular => 1,
            Exploration::Routiner => 2,
        }
    }

    pub fn night_prob(self, cfg: &MobilityConfig) -> f64 {
        cfg.night_prob[self.index()]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Exploration::Scouter => "scouter",
            Exploration::Regular => "regular",
            Exploration::Routiner => "routiner",
        }
    }

    pub fn parse(s: &str) -> Option<Exploration> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }
}

/// How home and office relate to the map's vertical bands: same band, two
/// adjacent bands, or anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceClass {
    P1,
    P2,
    P3,
}

impl DistanceClass {
    pub const ALL: [DistanceClass; 3] = [DistanceClass::P1, DistanceClass::P2, DistanceClass::P3];

    pub fn index(self) -> usize {
        match self {
            DistanceClass::P1 => 0,
            DistanceClass::P2 => 1,
            DistanceClass::P3 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceClass::P1 => "p1",
            DistanceClass::P2 => "p2",
            DistanceClass::P3 => "p3",
        }
    }

    pub fn parse(s: &str) -> Option<DistanceClass> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityProfile {
    pub exploration: Exploration,
    pub distance_class: DistanceClass,
    pub owns_car: bool,
}

pub(crate) fn pick_weighted(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

pub fn assign_profiles(n_users: u32, cfg: &MobilityConfig, rng: &mut impl Rng) -> Vec<MobilityProfile> {
    (0..n_users)
        .map(|_| MobilityProfile {
            exploration: Exploration::ALL[pick_weighted(&cfg.explore_shares, rng)],
            distance_class: DistanceClass::ALL[pick_weighted(&cfg.distance_shares, rng)],
            owns_car: rng.gen::<f64>() < cfg.prob_own_car,
        })
        .collect()
}
