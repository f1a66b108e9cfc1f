//! Relationship mining from the mobility trace. Two users are neighbors when
//! they sleep in the same home neighborhood (01-04 h), colleagues when they
//! work in the same office neighborhood (10-14 h), and friends when they have
//! shared at least one evening group activity.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use cdrkit_core::io::TrajectoryReader;
use cdrkit_core::types::hour_of_day;
use cdrkit_mobility::{read_group_members, CityMap, NeighborhoodKind};

use crate::SocialError;

#[derive(Debug, Clone)]
pub struct Relationships {
    /// Home neighborhood id each user occupies most nights, if any.
    pub home_cluster: Vec<Option<u32>>,
    pub office_cluster: Vec<Option<u32>>,
    pub friends: Vec<BTreeSet<u32>>,
    home_members: BTreeMap<u32, Vec<u32>>,
    office_members: BTreeMap<u32, Vec<u32>>,
}

impl Relationships {
    pub fn new(
        home_cluster: Vec<Option<u32>>,
        office_cluster: Vec<Option<u32>>,
        friends: Vec<BTreeSet<u32>>,
    ) -> Relationships {
        assert_eq!(home_cluster.len(), office_cluster.len());
        assert_eq!(home_cluster.len(), friends.len());
        let members = |clusters: &[Option<u32>]| {
            let mut m: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for (uid, c) in clusters.iter().enumerate() {
                if let Some(c) = c {
                    m.entry(*c).or_default().push(uid as u32);
                }
            }
            m
        };
        let home_members = members(&home_cluster);
        let office_members = members(&office_cluster);
        Relationships { home_cluster, office_cluster, friends, home_members, office_members }
    }

    pub fn n_users(&self) -> usize {
        self.home_cluster.len()
    }

    fn cluster_peers(
        &self,
        u: u32,
        cluster: &[Option<u32>],
        members: &BTreeMap<u32, Vec<u32>>,
    ) -> Vec<u32> {
        match cluster.get(u as usize).copied().flatten() {
            Some(c) => members[&c].iter().copied().filter(|&v| v != u).collect(),
            None => Vec::new(),
        }
    }

    pub fn neighbors_of(&self, u: u32) -> Vec<u32> {
        self.cluster_peers(u, &self.home_cluster, &self.home_members)
    }

    pub fn colleagues_of(&self, u: u32) -> Vec<u32> {
        self.cluster_peers(u, &self.office_cluster, &self.office_members)
    }

    pub fn friends_of(&self, u: u32) -> &BTreeSet<u32> {
        &self.friends[u as usize]
    }
}

struct WindowCounts {
    /// counts[user][neighborhood slot] = ticks inside that rectangle.
    counts: Vec<Vec<u32>>,
}

impl WindowCounts {
    fn new(n_users: usize, n_rects: usize) -> WindowCounts {
        WindowCounts { counts: vec![vec![0; n_rects]; n_users] }
    }

    /// Neighborhood holding the most window ticks. Plurality, not majority:
    /// positions wander around the anchor, so a user near a rectangle edge
    /// spends a big share of ticks just outside every rectangle.
    fn dominant(&self, ids: &[u32]) -> Vec<Option<u32>> {
        self.counts
            .iter()
            .map(|per_rect| {
                per_rect
                    .iter()
                    .enumerate()
                    .max_by_key(|(_, &c)| c)
                    .filter(|(_, &c)| c > 0)
                    .map(|(slot, _)| ids[slot])
            })
            .collect()
    }
}

/// Mine neighbor/colleague/friend sets for users 0..n_users from a trajectory
/// file, the map's neighborhood rectangles, and the evening groups log.
/// `margin_m` widens every rectangle to tolerate position jitter around an
/// anchor that can itself sit on the rectangle edge.
pub fn mine_relationships(
    trajectory_path: &Path,
    groups_path: &Path,
    map: &CityMap,
    n_users: u32,
    margin_m: f64,
) -> Result<Relationships, SocialError> {
    let n = n_users as usize;
    let homes = map.neighborhoods_of(NeighborhoodKind::Home);
    let offices = map.neighborhoods_of(NeighborhoodKind::Office);
    let home_ids: Vec<u32> = homes.iter().map(|nb| nb.id).collect();
    let office_ids: Vec<u32> = offices.iter().map(|nb| nb.id).collect();
    let home_rects: Vec<_> = homes.iter().map(|nb| nb.rect.expanded(margin_m)).collect();
    let office_rects: Vec<_> = offices.iter().map(|nb| nb.rect.expanded(margin_m)).collect();

    let mut night = WindowCounts::new(n, homes.len());
    let mut midday = WindowCounts::new(n, offices.len());

    for row in TrajectoryReader::open(trajectory_path)? {
        let p = row?;
        if p.user_id >= n_users {
            return Err(SocialError::UnknownUser { user_id: p.user_id, n_users });
        }
        let hour = hour_of_day(p.timestamp);
        let (counts, rects) = if (1..4).contains(&hour) {
            (&mut night, &home_rects)
        } else if (10..14).contains(&hour) {
            (&mut midday, &office_rects)
        } else {
            continue;
        };
        let (x, y) = map.proj.to_xy(p.lat, p.lon);
        let uid = p.user_id as usize;
        for (slot, rect) in rects.iter().enumerate() {
            if rect.contains(x, y) {
                counts.counts[uid][slot] += 1;
            }
        }
    }

    let mut friends: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for evenings in read_group_members(groups_path)?.values() {
        for members in evenings {
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    if a >= n_users || b >= n_users {
                        return Err(SocialError::UnknownUser {
                            user_id: a.max(b),
                            n_users,
                        });
                    }
                    friends[a as usize].insert(b);
                    friends[b as usize].insert(a);
                }
            }
        }
    }

    Ok(Relationships::new(
        night.dominant(&home_ids),
        midday.dominant(&office_ids),
        friends,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cluster_peers_are_symmetric_and_exclude_self() {
        let rel = Relationships::new(
            vec![Some(1), Some(1), Some(2), None],
            vec![Some(7), Some(8), Some(7), Some(7)],
            vec![BTreeSet::new(); 4],
        );
        assert_eq!(rel.neighbors_of(0), vec![1]);
        assert_eq!(rel.neighbors_of(1), vec![0]);
        assert!(rel.neighbors_of(2).is_empty());
        assert!(rel.neighbors_of(3).is_empty());
        assert_eq!(rel.colleagues_of(0), vec![2, 3]);
        assert_eq!(rel.colleagues_of(2), vec![0, 3]);
    }
}
