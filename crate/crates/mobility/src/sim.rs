//! Working-day trajectory simulation. Each agent cycles home, commute,
//! office, optional group evening activity, home. Movement follows shortest
//! road paths at mode speed; stays wander within a small pause radius. The
//! whole horizon is planned as one piecewise-linear timeline per agent, then
//! sampled on a shared tick grid so co-location is observable across agents.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use cdrkit_core::config::MobilityConfig;
use cdrkit_core::io::{IoError, TrajectoryWriter};
use cdrkit_core::types::TrajectoryPoint;

use crate::agents::Agent;
use crate::map::{CityMap, MobilityError, NeighborhoodKind, RoadRouter};

/// Linear motion (or stillness) over [t0, t1).
#[derive(Debug, Clone, Copy)]
struct Piece {
    t0: f64,
    t1: f64,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
}

impl Piece {
    fn still(t0: f64, t1: f64, p: (f64, f64)) -> Piece {
        Piece { t0, t1, ax: p.0, ay: p.1, bx: p.0, by: p.1 }
    }

    fn moving(t0: f64, t1: f64, a: (f64, f64), b: (f64, f64)) -> Piece {
        Piece { t0, t1, ax: a.0, ay: a.1, bx: b.0, by: b.1 }
    }

    fn shifted(self, dt: f64) -> Piece {
        Piece { t0: self.t0 + dt, t1: self.t1 + dt, ..self }
    }

    fn pos(&self, t: f64) -> (f64, f64) {
        if self.t1 <= self.t0 {
            return (self.bx, self.by);
        }
        let f = ((t - self.t0) / (self.t1 - self.t0)).clamp(0.0, 1.0);
        (self.ax + (self.bx - self.ax) * f, self.ay + (self.by - self.ay) * f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TravelMode {
    Walk,
    Car,
    Bus,
}

/// Trips at most this long are walked regardless of car ownership.
const WALK_MAX_M: f64 = 1000.0;

fn choose_mode(dist_m: f64, owns_car: bool) -> TravelMode {
    if dist_m <= WALK_MAX_M {
        TravelMode::Walk
    } else if owns_car {
        TravelMode::Car
    } else {
        TravelMode::Bus
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Fill [t0, t1) with stillness around `anchor`, hopping to a fresh offset
/// within the pause radius at exponential intervals.
fn stay_pieces(
    out: &mut Vec<Piece>,
    anchor: (f64, f64),
    t0: f64,
    t1: f64,
    cfg: &MobilityConfig,
    rng: &mut impl Rng,
) {
    if t1 <= t0 {
        return;
    }
    let mut t = t0;
    let mut off = (0.0, 0.0);
    while t < t1 {
        let dwell = -(rng.gen::<f64>().max(1e-12)).ln() * cfg.pause_mean_s.max(1.0);
        let end = (t + dwell.max(1.0)).min(t1);
        out.push(Piece::still(t, end, (anchor.0 + off.0, anchor.1 + off.1)));
        t = end;
        let r = cfg.pause_radius_m * rng.gen::<f64>().sqrt();
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        off = (r * th.cos(), r * th.sin());
    }
}

fn push_leg(out: &mut Vec<Piece>, t: &mut f64, a: (f64, f64), b: (f64, f64), speed: f64) {
    let d = dist(a, b);
    if d > 0.0 {
        let dur = d / speed;
        out.push(Piece::moving(*t, *t + dur, a, b));
        *t += dur;
    }
}

/// Door-to-door trip pieces starting at `start`; returns the arrival time.
/// Bus trips wait out a headway draw at the boarding node and dwell at every
/// intermediate intersection.
#[allow(clippy::too_many_arguments)]
fn travel_pieces(
    out: &mut Vec<Piece>,
    map: &CityMap,
    router: &mut RoadRouter,
    from: (f64, f64),
    to: (f64, f64),
    mode: TravelMode,
    start: f64,
    cfg: &MobilityConfig,
    bus_period_s: u64,
    rng: &mut impl Rng,
) -> Result<f64, MobilityError> {
    let speed = match mode {
        TravelMode::Walk => cfg.walk_speed_mps,
        TravelMode::Car => cfg.car_speed_mps,
        TravelMode::Bus => cfg.bus_speed_mps,
    };
    let n0 = map.nearest_node(from.0, from.1);
    let n1 = map.nearest_node(to.0, to.1);
    let node0 = map.nodes[n0 as usize];
    let mut t = start;
    push_leg(out, &mut t, from, node0, speed);
    if mode == TravelMode::Bus {
        let wait = rng.gen_range(0.0..bus_period_s.max(1) as f64);
        out.push(Piece::still(t, t + wait, node0));
        t += wait;
    }
    if n0 != n1 {
        let path = router.path(map, n0, n1)?;
        for w in path.windows(2) {
            let a = map.nodes[w[0] as usize];
            let b = map.nodes[w[1] as usize];
            push_leg(out, &mut t, a, b, speed);
            if mode == TravelMode::Bus && w[1] != n1 {
                let dwell = cfg.bus_stop_dwell_s as f64;
                out.push(Piece::still(t, t + dwell, b));
                t += dwell;
            }
        }
    }
    let node1 = map.nodes[n1 as usize];
    push_leg(out, &mut t, node1, to, speed);
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct GroupEvent {
    pub day: u64,
    pub group_id: u32,
    pub spot_id: u32,
    /// Activity window once everyone has arrived.
    pub start: u64,
    pub end: u64,
    pub members: Vec<u32>,
}

pub struct SimSummary {
    pub n_samples: u64,
    pub group_events: Vec<GroupEvent>,
}

pub const GROUPS_HEADER: &str = "day,group_id,spot_id,user_id";

pub fn write_group_events(path: &Path, events: &[GroupEvent]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{GROUPS_HEADER}")?;
    for ev in events {
        for uid in &ev.members {
            writeln!(f, "{},{},{},{}", ev.day, ev.group_id, ev.spot_id, uid)?;
        }
    }
    f.flush()
}

/// Attending user ids per group over the whole trace, from a groups CSV.
pub fn read_group_members(path: &Path) -> Result<BTreeMap<u32, Vec<Vec<u32>>>, MobilityError> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| MobilityError::Io(IoError::io(path, e)))?;
    let display = path.display().to_string();
    // (day, group_id) -> members
    let mut per_evening: BTreeMap<(u64, u32), Vec<u32>> = BTreeMap::new();
    for (ln, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| MobilityError::Io(IoError::io(path, e)))?;
        let line = line.trim_end();
        let bad = |msg: String| MobilityError::BadMapFile { path: display.clone(), line: ln + 1, msg };
        if ln == 0 {
            if line != GROUPS_HEADER {
                return Err(bad(format!("expected header `{GROUPS_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let [day, gid, _spot, uid] = parts[..] else {
            return Err(bad("expected 4 fields".into()));
        };
        let day: u64 = day.parse().map_err(|_| bad(format!("bad day `{day}`")))?;
        let gid: u32 = gid.parse().map_err(|_| bad(format!("bad group `{gid}`")))?;
        let uid: u32 = uid.parse().map_err(|_| bad(format!("bad user `{uid}`")))?;
        per_evening.entry((day, gid)).or_default().push(uid);
    }
    let mut out: BTreeMap<u32, Vec<Vec<u32>>> = BTreeMap::new();
    for ((_, gid), members) in per_evening {
        out.entry(gid).or_default().push(members);
    }
    Ok(out)
}

struct AgentState {
    pieces: Vec<Piece>,
    cursor: usize,
    t_free: f64,
    /// Scratch per day: when this agent walks out of the office.
    office_depart: f64,
    attending: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    map: &CityMap,
    agents: &[Agent],
    cfg: &MobilityConfig,
    bus_period_s: u64,
    duration_s: u64,
    rng: &mut impl Rng,
    trajectory_path: &Path,
    groups_path: &Path,
) -> Result<SimSummary, MobilityError> {
    if duration_s < 86_400 {
        return Err(MobilityError::ShortDuration(duration_s));
    }
    let leisure = map.neighborhoods_of(NeighborhoodKind::Leisure);
    if leisure.is_empty() && !agents.is_empty() {
        return Err(MobilityError::MissingNeighborhoods("leisure"));
    }
    let leisure_weights: Vec<f64> = leisure.iter().map(|n| n.popularity).collect();

    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, a) in agents.iter().enumerate() {
        groups.entry(a.friends_group).or_default().push(i);
    }

    let mut router = RoadRouter::new();
    let mut states: Vec<AgentState> = agents
        .iter()
        .map(|_| AgentState {
            pieces: Vec::new(),
            cursor: 0,
            t_free: 0.0,
            office_depart: 0.0,
            attending: false,
        })
        .collect();
    let mut group_events: Vec<GroupEvent> = Vec::new();

    let n_days = duration_s.div_ceil(86_400);
    for day in 0..n_days {
        let day_start = (day * 86_400) as f64;

        // Morning and office block for everyone.
        for (i, agent) in agents.iter().enumerate() {
            let st = &mut states[i];
            st.attending = false;
            let jitter = if cfg.office_arrival_jitter_s > 0 {
                let j = cfg.office_arrival_jitter_s as f64;
                rng.gen_range(-j..=j)
            } else {
                0.0
            };
            let target = day_start + cfg.office_arrival_s as f64 + jitter;
            let mode = choose_mode(dist(agent.home, agent.office), agent.profile.owns_car);
            let mut trip = Vec::new();
            let dur = travel_pieces(
                &mut trip, map, &mut router, agent.home, agent.office, mode, 0.0, cfg,
                bus_period_s, rng,
            )?;
            let leave = (target - dur).max(st.t_free);
            stay_pieces(&mut st.pieces, agent.home, st.t_free, leave, cfg, rng);
            st.pieces.extend(trip.into_iter().map(|p| p.shifted(leave)));
            let arrive = leave + dur;
            let depart = arrive + cfg.workday_s as f64;
            stay_pieces(&mut st.pieces, agent.office, arrive, depart, cfg, rng);
            st.office_depart = depart;
        }

        // Evening groups: whoever opts in heads to a shared leisure spot,
        // waits for the slowest member, and the activity window is common.
        for (&gid, members) in &groups {
            let attending: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| rng.gen::<f64>() < agents[i].profile.exploration.night_prob(cfg))
                .collect();
            if attending.is_empty() {
                continue;
            }
            let spot = leisure[crate::profiles::pick_weighted(&leisure_weights, rng)];
            let spot_point = spot.rect.center();
            let duration = rng.gen_range(cfg.evening_min_s as f64..=cfg.evening_max_s as f64);
            let mut arrivals = Vec::with_capacity(attending.len());
            for &i in &attending {
                let agent = &agents[i];
                let mode = choose_mode(dist(agent.office, spot_point), agent.profile.owns_car);
                let st = &mut states[i];
                let arrive = travel_pieces(
                    &mut st.pieces, map, &mut router, agent.office, spot_point, mode,
                    st.office_depart, cfg, bus_period_s, rng,
                )?;
                arrivals.push(arrive);
                st.attending = true;
            }
            let start = arrivals.iter().cloned().fold(f64::MIN, f64::max);
            let end = start + duration;
            for (&i, &arrive) in attending.iter().zip(arrivals.iter()) {
                let agent = &agents[i];
                let st = &mut states[i];
                stay_pieces(&mut st.pieces, spot_point, arrive, end, cfg, rng);
                let mode = choose_mode(dist(spot_point, agent.home), agent.profile.owns_car);
                let home_arrive = travel_pieces(
                    &mut st.pieces, map, &mut router, spot_point, agent.home, mode, end, cfg,
                    bus_period_s, rng,
                )?;
                st.t_free = home_arrive;
            }
            group_events.push(GroupEvent {
                day,
                group_id: gid,
                spot_id: spot.id,
                start: start.ceil() as u64,
                end: end.floor() as u64,
                members: attending.iter().map(|&i| agents[i].user_id).collect(),
            });
        }

        // Everyone else drives, rides, or walks straight home.
        for (i, agent) in agents.iter().enumerate() {
            let st = &mut states[i];
            if st.attending {
                continue;
            }
            let mode = choose_mode(dist(agent.office, agent.home), agent.profile.owns_car);
            let home_arrive = travel_pieces(
                &mut st.pieces, map, &mut router, agent.office, agent.home, mode,
                st.office_depart, cfg, bus_period_s, rng,
            )?;
            st.t_free = home_arrive;
        }
    }

    // Closing home stay so every tick up to the horizon is covered.
    let interval = cfg.sampling_interval_s.max(1);
    for (i, agent) in agents.iter().enumerate() {
        let st = &mut states[i];
        let end = (duration_s + 2 * interval) as f64;
        stay_pieces(&mut st.pieces, agent.home, st.t_free, end.max(st.t_free + 1.0), cfg, rng);
    }

    let mut traj = TrajectoryWriter::create(trajectory_path).map_err(MobilityError::Io)?;
    let mut n_samples = 0u64;
    let mut t = 0u64;
    while t < duration_s {
        let tf = t as f64;
        for (i, st) in states.iter_mut().enumerate() {
            while st.cursor + 1 < st.pieces.len() && st.pieces[st.cursor].t1 <= tf {
                st.cursor += 1;
            }
            let (x, y) = st.pieces[st.cursor].pos(tf);
            let (lat, lon) = map.proj.to_latlon(x, y);
            traj.write(&TrajectoryPoint { timestamp: t, user_id: agents[i].user_id, lat, lon })
                .map_err(MobilityError::Io)?;
            n_samples += 1;
        }
        t += interval;
    }
    traj.finish().map_err(MobilityError::Io)?;
    write_group_events(groups_path, &group_events)
        .map_err(|e| MobilityError::Io(IoError::io(groups_path, e)))?;

    Ok(SimSummary { n_samples, group_events })
}
