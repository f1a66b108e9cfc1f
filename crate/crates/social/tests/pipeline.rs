//! End-to-end: simulate a day of mobility, mine relationships from the
//! trajectory, and build the social graph on top of them.

use std::collections::BTreeSet;
use std::path::Path;

use cdrkit_core::config::PipelineConfig;
use cdrkit_core::RngFactory;
use cdrkit_mobility::{
    assign_groups, assign_places, assign_profiles, generate_map, simulate, Agent, CityMap,
};
use cdrkit_refdata::RefStats;
use cdrkit_social::{
    assign_identities, build_graph, mine_relationships, sample_degrees, write_phonebooks,
    Category, Relationships,
};
use tempfile::TempDir;

fn simulate_day(n_users: u32, seed: u64, dir: &Path) -> (CityMap, Vec<Agent>) {
    let mut cfg = PipelineConfig::default();
    cfg.map.width_m = 3_000.0;
    cfg.map.height_m = 2_000.0;
    cfg.map.home_clusters = 3;
    cfg.map.office_clusters = 2;
    cfg.map.leisure_spots = 3;
    cfg.map.bus_routes = 2;
    cfg.mobility.night_prob = [1.0, 0.7, 0.4];

    let factory = RngFactory::new(seed);
    let map = generate_map(
        &cfg.map,
        cfg.mobility.leisure_side_m,
        (cfg.mobility.home_w_m, cfg.mobility.home_h_m),
        (cfg.mobility.office_w_m, cfg.mobility.office_h_m),
        &mut factory.stream("map"),
    );
    let profiles = assign_profiles(n_users, &cfg.mobility, &mut factory.stream("profiles"));
    let mut agents =
        assign_places(&profiles, &map, cfg.map.areas, &mut factory.stream("places")).unwrap();
    assign_groups(&mut agents, cfg.mobility.group_max, &mut factory.stream("groups"));
    simulate(
        &map,
        &agents,
        &cfg.mobility,
        cfg.map.bus_period_s,
        86_400,
        &mut factory.stream("sim"),
        &dir.join("trajectory.csv"),
        &dir.join("groups.csv"),
    )
    .unwrap();
    (map, agents)
}

fn mined(dir: &Path, map: &CityMap, n_users: u32) -> Relationships {
    let margin = PipelineConfig::default().mobility.pause_radius_m;
    mine_relationships(
        &dir.join("trajectory.csv"),
        &dir.join("groups.csv"),
        map,
        n_users,
        margin,
    )
    .unwrap()
}

#[test]
fn mining_recovers_assigned_clusters_and_groups() {
    let n = 120u32;
    let dir = TempDir::new().unwrap();
    let (map, agents) = simulate_day(n, 41, dir.path());
    let rel = mined(dir.path(), &map, n);

    // Everyone sleeps at home and works a full office block, so the mined
    // clusters should recover the assignment. Overlapping neighborhood
    // rectangles can blur a few users, so allow a small miss rate.
    let mut home_hits = 0u32;
    let mut office_hits = 0u32;
    for agent in &agents {
        let u = agent.user_id as usize;
        home_hits += (rel.home_cluster[u] == Some(agent.home_cluster)) as u32;
        office_hits += (rel.office_cluster[u] == Some(agent.office_cluster)) as u32;
    }
    assert!(home_hits as f64 >= 0.97 * n as f64, "home recovery {home_hits}/{n}");
    assert!(office_hits as f64 >= 0.97 * n as f64, "office recovery {office_hits}/{n}");

    // Users sharing a mined home cluster are mutual neighbors.
    for u in 0..n {
        for v in rel.neighbors_of(u) {
            assert!(rel.neighbors_of(v).contains(&u));
            assert_eq!(rel.home_cluster[u as usize], rel.home_cluster[v as usize]);
        }
    }

    // Friend sets mirror shared evening attendance exactly.
    let evenings = cdrkit_mobility::read_group_members(&dir.path().join("groups.csv")).unwrap();
    let mut expected: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n as usize];
    for per_group in evenings.values() {
        for members in per_group {
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    expected[a as usize].insert(b);
                    expected[b as usize].insert(a);
                }
            }
        }
    }
    assert!(expected.iter().any(|s| !s.is_empty()), "seed should produce some evenings");
    for u in 0..n {
        assert_eq!(rel.friends_of(u), &expected[u as usize], "user {u} friends");
    }
}

#[test]
fn graph_audit_on_mined_relationships() {
    let n = 300u32;
    let dir = TempDir::new().unwrap();
    let (map, _) = simulate_day(n, 43, dir.path());
    let rel = mined(dir.path(), &map, n);

    let stats = RefStats {
        corr_count_dist: {
            let mut d = vec![0.0; 19];
            for k in 3..=18 {
                d[k] = 1.0 / 16.0;
            }
            d
        },
        category_means: [0.1, 0.3, 0.3, 0.3],
        iet_samples_per_bin: [vec![60.0], vec![3600.0], vec![100_000.0]],
        call_durations: vec![30.0],
        seq_lens: vec![10],
        event_type_marginals: [0.25; 4],
    };
    let factory = RngFactory::new(44);
    let degrees = sample_degrees(&stats, n, &mut factory.stream("deg"));
    let ids = assign_identities(
        n,
        &PipelineConfig::default().operators,
        &mut factory.stream("ids"),
    )
    .unwrap();
    let cfg = PipelineConfig::default().social;
    let g = build_graph(&degrees, &rel, &ids, &cfg, &mut factory.stream("graph")).unwrap();

    // Realized category degrees must equal the post-repair request for
    // nearly every user.
    let mut exact = 0u32;
    for (u, want) in g.audit.requested.iter().enumerate() {
        let book = &g.phonebooks[u];
        let count = |c: Category| book.iter().filter(|e| e.category == c).count() as u32;
        let ok = count(Category::Both) == want.both
            && count(Category::Out) == want.out
            && count(Category::In) == want.incoming
            && count(Category::Inter) == want.inter;
        exact += ok as u32;
    }
    assert!(
        exact as f64 >= 0.99 * n as f64,
        "only {exact}/{n} users realized their requested degrees"
    );

    // Full reciprocity scan.
    for (u, book) in g.phonebooks.iter().enumerate() {
        for e in book {
            let Some(v) = e.peer else { continue };
            let back = g.phonebooks[v as usize]
                .iter()
                .find(|pe| pe.peer == Some(u as u32))
                .expect("reciprocal entry");
            let want = match e.category {
                Category::Both => Category::Both,
                Category::Out => Category::In,
                Category::In => Category::Out,
                Category::Inter => unreachable!("inter has no peer"),
            };
            assert_eq!(back.category, want);
        }
    }

    // Same inputs, same seed, same bytes.
    let p1 = dir.path().join("pb1.csv");
    let p2 = dir.path().join("pb2.csv");
    write_phonebooks(&p1, &ids, &g.phonebooks).unwrap();
    let factory2 = RngFactory::new(44);
    let degrees2 = sample_degrees(&stats, n, &mut factory2.stream("deg"));
    let ids2 = assign_identities(
        n,
        &PipelineConfig::default().operators,
        &mut factory2.stream("ids"),
    )
    .unwrap();
    let g2 = build_graph(&degrees2, &rel, &ids2, &cfg, &mut factory2.stream("graph")).unwrap();
    write_phonebooks(&p2, &ids2, &g2.phonebooks).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}
