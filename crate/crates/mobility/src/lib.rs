//! Agent mobility: a synthetic grid-road city, commuter agents with
//! exploration and displacement profiles, and a working-day simulator that
//! emits position samples on a fixed tick grid.

mod agents;
mod map;
mod profiles;
mod sim;

pub use agents::{
    assign_groups, assign_places, read_agents, write_agents, Agent, AGENTS_HEADER,
};
pub use map::{
    generate_map, load_map, read_neighborhoods, write_map, write_neighborhoods, BusRoute,
    CityMap, MobilityError, Neighborhood, NeighborhoodKind, RoadRouter,
};
pub use profiles::{assign_profiles, DistanceClass, Exploration, MobilityProfile};
pub use sim::{
    read_group_members, simulate, write_group_events, GroupEvent, SimSummary, GROUPS_HEADER,
};
