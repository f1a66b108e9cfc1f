//! Place agents on the map: a home and an office point drawn inside
//! popularity-weighted neighborhoods, constrained by the displacement class,
//! plus stable evening friend groups within each home cluster.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use cdrkit_core::geo::Rect;

use crate::map::{CityMap, MobilityError, Neighborhood, NeighborhoodKind};
use crate::profiles::{pick_weighted, DistanceClass, Exploration, MobilityProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub user_id: u32,
    pub profile: MobilityProfile,
    pub home: (f64, f64),
    pub office: (f64, f64),
    pub home_cluster: u32,
    pub office_cluster: u32,
    /// Stable social circle for evening activities; ≤ group_max members,
    /// all from the same home cluster.
    pub friends_group: u32,
}

fn uniform_point(rect: &Rect, rng: &mut impl Rng) -> (f64, f64) {
    (rng.gen_range(rect.min_x..=rect.max_x), rng.gen_range(rect.min_y..=rect.max_y))
}

/// Vertical band index of an x coordinate.
fn band(x: f64, width: f64, areas: u32) -> u32 {
    ((x / width * areas as f64) as u32).min(areas - 1)
}

fn pick_neighborhood<'a>(
    candidates: &[&'a Neighborhood],
    rng: &mut impl Rng,
) -> &'a Neighborhood {
    let weights: Vec<f64> = candidates.iter().map(|n| n.popularity).collect();
    candidates[pick_weighted(&weights, rng)]
}

pub fn assign_places(
    profiles: &[MobilityProfile],
    map: &CityMap,
    areas: u32,
    rng: &mut impl Rng,
) -> Result<Vec<Agent>, MobilityError> {
    let homes = map.neighborhoods_of(NeighborhoodKind::Home);
    let offices = map.neighborhoods_of(NeighborhoodKind::Office);
    if homes.is_empty() {
        return Err(MobilityError::MissingNeighborhoods("home"));
    }
    if offices.is_empty() {
        return Err(MobilityError::MissingNeighborhoods("office"));
    }
    let width = map.bbox.width().max(1.0);
    let areas = areas.max(1);

    let mut agents = Vec::with_capacity(profiles.len());
    for (uid, profile) in profiles.iter().enumerate() {
        let home_nb = pick_neighborhood(&homes, rng);
        let home = uniform_point(&home_nb.rect, rng);
        let hb = band(home.0, width, areas);

        let allowed = |office_band: u32| match profile.distance_class {
            DistanceClass::P1 => office_band == hb,
            DistanceClass::P2 => office_band.abs_diff(hb) == 1,
            DistanceClass::P3 => true,
        };
        let mut candidates: Vec<&Neighborhood> = offices
            .iter()
            .copied()
            .filter(|n| allowed(band(n.rect.center().0, width, areas)))
            .collect();
        if candidates.is_empty() {
            // The drawn band combination has no office cluster; fall back to
            // the whole map rather than failing the assignment.
            candidates = offices.clone();
        }
        let office_nb = pick_neighborhood(&candidates, rng);
        let office = uniform_point(&office_nb.rect, rng);

        agents.push(Agent {
            user_id: uid as u32,
            profile: *profile,
            home,
            office,
            home_cluster: home_nb.id,
            office_cluster: office_nb.id,
            friends_group: 0,
        });
    }
    Ok(agents)
}

/// Partition each home cluster's residents into groups of at most
/// `group_max`, shuffled so group composition varies with the seed.
pub fn assign_groups(agents: &mut [Agent], group_max: u32, rng: &mut impl Rng) {
    let group_max = group_max.max(1) as usize;
    let mut clusters: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, a) in agents.iter().enumerate() {
        clusters.entry(a.home_cluster).or_default().push(i);
    }
    let mut next_group = 0u32;
    for (_, mut members) in clusters {
        members.shuffle(rng);
        for chunk in members.chunks(group_max) {
            for &i in chunk {
                agents[i].friends_group = next_group;
            }
            next_group += 1;
        }
    }
}

pub const AGENTS_HEADER: &str = "user_id,exploration,distance_class,owns_car,home_cluster,office_cluster,friends_group,home_lat,home_lon,office_lat,office_lon";

pub fn write_agents(path: &Path, map: &CityMap, agents: &[Agent]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{AGENTS_HEADER}")?;
    for a in agents {
        let (hlat, hlon) = map.proj.to_latlon(a.home.0, a.home.1);
        let (olat, olon) = map.proj.to_latlon(a.office.0, a.office.1);
        writeln!(
            f,
            "{},{},{},{},{},{},{},{hlat:.6},{hlon:.6},{olat:.6},{olon:.6}",
            a.user_id,
            a.profile.exploration.as_str(),
            a.profile.distance_class.as_str(),
            a.profile.owns_car as u8,
            a.home_cluster,
            a.office_cluster,
            a.friends_group
        )?;
    }
    f.flush()
}

pub fn read_agents(path: &Path, map: &CityMap) -> Result<Vec<Agent>, MobilityError> {
    let file = std::fs::File::open(path)
        .map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
    let display = path.display().to_string();
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
        let line = line.trim_end();
        let bad = |msg: String| MobilityError::BadMapFile { path: display.clone(), line: ln + 1, msg };
        if ln == 0 {
            if line != AGENTS_HEADER {
                return Err(bad(format!("expected header `{AGENTS_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let [uid, expl, dist, car, hc, oc, fg, hlat, hlon, olat, olon] = parts[..] else {
            return Err(bad("expected 11 fields".into()));
        };
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let agent = Agent {
            user_id: uid.parse().map_err(|_| bad(format!("bad user_id `{uid}`")))?,
            profile: MobilityProfile {
                exploration: Exploration::parse(expl)
                    .ok_or_else(|| bad(format!("bad exploration `{expl}`")))?,
                distance_class: DistanceClass::parse(dist)
                    .ok_or_else(|| bad(format!("bad distance class `{dist}`")))?,
                owns_car: car == "1",
            },
            home: map.proj.to_xy(parse_f(hlat)?, parse_f(hlon)?),
            office: map.proj.to_xy(parse_f(olat)?, parse_f(olon)?),
            home_cluster: hc.parse().map_err(|_| bad(format!("bad home cluster `{hc}`")))?,
            office_cluster: oc.parse().map_err(|_| bad(format!("bad office cluster `{oc}`")))?,
            friends_group: fg.parse().map_err(|_| bad(format!("bad group `{fg}`")))?,
        };
        out.push(agent);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::generate_map;
    use cdrkit_core::config::PipelineConfig;
    use cdrkit_core::RngFactory;

    fn setup(n: u32, seed: u64) -> (CityMap, Vec<Agent>) {
        let cfg = PipelineConfig::default();
        let factory = RngFactory::new(seed);
        let map = generate_map(
            &cfg.map,
            cfg.mobility.leisure_side_m,
            (cfg.mobility.home_w_m, cfg.mobility.home_h_m),
            (cfg.mobility.office_w_m, cfg.mobility.office_h_m),
            &mut factory.stream("map"),
        );
        let profiles =
            crate::profiles::assign_profiles(n, &cfg.mobility, &mut factory.stream("profiles"));
        let mut agents =
            assign_places(&profiles, &map, cfg.map.areas, &mut factory.stream("places")).unwrap();
        assign_groups(&mut agents, cfg.mobility.group_max, &mut factory.stream("groups"));
        (map, agents)
    }

    #[test]
    fn points_land_inside_their_neighborhoods() {
        let (map, agents) = setup(300, 42);
        for a in &agents {
            let home_nb = map.neighborhoods.iter().find(|n| n.id == a.home_cluster).unwrap();
            let office_nb = map.neighborhoods.iter().find(|n| n.id == a.office_cluster).unwrap();
            assert_eq!(home_nb.kind, NeighborhoodKind::Home);
            assert_eq!(office_nb.kind, NeighborhoodKind::Office);
            assert!(home_nb.rect.contains(a.home.0, a.home.1));
            assert!(office_nb.rect.contains(a.office.0, a.office.1));
        }
    }

    #[test]
    fn distance_classes_respect_bands_when_available() {
        let (map, agents) = setup(600, 43);
        let width = map.bbox.width();
        let band_of = |x: f64| band(x, width, 3);
        let office_bands: std::collections::BTreeSet<u32> = map
            .neighborhoods_of(NeighborhoodKind::Office)
            .iter()
            .map(|n| band_of(n.rect.center().0))
            .collect();
        for a in &agents {
            let hb = band_of(a.home.0);
            let ob = band_of(
                map.neighborhoods
                    .iter()
                    .find(|n| n.id == a.office_cluster)
                    .unwrap()
                    .rect
                    .center()
                    .0,
            );
            match a.profile.distance_class {
                DistanceClass::P1 => {
                    if office_bands.contains(&hb) {
                        assert_eq!(ob, hb, "user {}", a.user_id);
                    }
                }
                DistanceClass::P2 => {
                    let feasible = office_bands.iter().any(|&b| b.abs_diff(hb) == 1);
                    if feasible {
                        assert_eq!(ob.abs_diff(hb), 1, "user {}", a.user_id);
                    }
                }
                DistanceClass::P3 => {}
            }
        }
    }

    #[test]
    fn groups_are_within_cluster_and_bounded() {
        let (_, agents) = setup(400, 44);
        let mut by_group: std::collections::BTreeMap<u32, Vec<&Agent>> = Default::default();
        for a in &agents {
            by_group.entry(a.friends_group).or_default().push(a);
        }
        for (_, members) in by_group {
            assert!(members.len() <= 5);
            let cluster = members[0].home_cluster;
            assert!(members.iter().all(|a| a.home_cluster == cluster));
        }
    }

    #[test]
    fn agents_csv_roundtrip() {
        let (map, agents) = setup(50, 45);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agents.csv");
        write_agents(&path, &map, &agents).unwrap();
        let loaded = read_agents(&path, &map).unwrap();
        assert_eq!(loaded.len(), agents.len());
        for (a, b) in agents.iter().zip(loaded.iter()) {
            assert_eq!(a.user_id, b.user_id);
            assert_eq!(a.profile, b.profile);
            assert_eq!(a.friends_group, b.friends_group);
            assert!((a.home.0 - b.home.0).abs() < 0.2);
            assert!((a.office.1 - b.office.1).abs() < 0.2);
        }
    }
}
