//! Pipeline configuration: flat `key = value` text, `#` comments, defaults
//! for every key. The canonical dump (all effective keys, sorted) is hashed
//! to key stage caching, so the hash changes exactly when an effective value
//! changes.

use crate::types::Weekday;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: malformed line (expected `key = value`): {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for {key}: {reason}")]
    InvalidValue { line: usize, key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub mcc: String,
    pub mnc: String,
    pub share: f64,
}

impl Operator {
    pub fn prefix(&self) -> String {
        format!("{}{}", self.mcc, self.mnc)
    }
}

/// Parametric distribution named in a config value, e.g. data-volume models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConfigDist {
    /// Three-parameter lognormal: `lognormal:<mu>:<sigma>:<x0>`.
    Lognormal { mu: f64, sigma: f64, x0: f64 },
    /// Shifted exponential: `exponential:<lambda>:<x0>`.
    Exponential { lambda: f64, x0: f64 },
    /// Point mass: `const:<value>`.
    Const { value: f64 },
}

impl ConfigDist {
    fn parse(s: &str) -> Result<ConfigDist, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}"));
        match parts.as_slice() {
            ["lognormal", mu, sigma, x0] => Ok(ConfigDist::Lognormal {
                mu: num(mu)?,
                sigma: num(sigma)?,
                x0: num(x0)?,
            }),
            ["exponential", lambda, x0] => Ok(ConfigDist::Exponential {
                lambda: num(lambda)?,
                x0: num(x0)?,
            }),
            ["const", value] => Ok(ConfigDist::Const { value: num(value)? }),
            _ => Err(format!(
                "expected lognormal:<mu>:<sigma>:<x0>, exponential:<lambda>:<x0> or \
                 const:<value>, got {s:?}"
            )),
        }
    }

    fn dump(&self) -> String {
        match self {
            ConfigDist::Lognormal { mu, sigma, x0 } => format!("lognormal:{mu}:{sigma}:{x0}"),
            ConfigDist::Exponential { lambda, x0 } => format!("exponential:{lambda}:{x0}"),
            ConfigDist::Const { value } => format!("const:{value}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Chronological when the trace spans >= 4 weeks, otherwise by user.
    Auto,
    ByUser,
    Chronological,
}

impl SplitMode {
    fn parse(s: &str) -> Option<SplitMode> {
        match s {
            "auto" => Some(SplitMode::Auto),
            "by_user" => Some(SplitMode::ByUser),
            "chronological" => Some(SplitMode::Chronological),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            SplitMode::Auto => "auto",
            SplitMode::ByUser => "by_user",
            SplitMode::Chronological => "chronological",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipMode {
    Value,
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationBound {
    Caller,
    MinCallerCallee,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub file: String,
    pub width_m: f64,
    pub height_m: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub road_spacing_m: f64,
    pub home_clusters: u32,
    pub office_clusters: u32,
    pub leisure_spots: u32,
    pub bus_routes: u32,
    pub bus_period_s: u64,
    pub areas: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub sampling_interval_s: u64,
    pub walk_speed_mps: f64,
    pub car_speed_mps: f64,
    pub bus_speed_mps: f64,
    pub bus_stop_dwell_s: u64,
    pub prob_own_car: f64,
    pub office_arrival_s: u64,
    pub office_arrival_jitter_s: u64,
    pub workday_s: u64,
    pub evening_min_s: u64,
    pub evening_max_s: u64,
    pub group_max: u32,
    pub home_w_m: f64,
    pub home_h_m: f64,
    pub office_w_m: f64,
    pub office_h_m: f64,
    pub leisure_side_m: f64,
    /// Shares of the scouter / regular / routiner exploration classes.
    pub explore_shares: [f64; 3],
    /// Night-activity probability per exploration class, same order.
    pub night_prob: [f64; 3],
    /// Shares of the one-area / two-area / whole-map displacement classes.
    pub distance_shares: [f64; 3],
    pub pause_mean_s: f64,
    pub pause_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub stations_file: String,
    pub n_stations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialConfig {
    pub select_friend: f64,
    pub select_colleague: f64,
    pub select_neighbor: f64,
    pub select_other: f64,
    pub zipf_exponent: f64,
    pub foreign_mccs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden_evt: usize,
    pub hidden_iet: usize,
    pub hidden_corr: usize,
    pub layers: usize,
    pub batch: usize,
    pub lr: f64,
    pub dropout: f64,
    pub clip: f64,
    pub clip_mode: ClipMode,
    pub epochs: usize,
    pub patience: usize,
    pub seq_quantile: f64,
    /// Median-of-n smoothing when drawing a continuous gap from a bin.
    pub iet_median_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub mode: SplitMode,
    /// The correspondent model always splits by user unless overridden.
    pub mode_correspondent: SplitMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombineConfig {
    pub intl_incoming_share: f64,
    pub duration_bound: DurationBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeConfig {
    /// Light / medium / heavy data-profile shares.
    pub shares: [f64; 3],
    pub peak_start_h: u64,
    pub peak_end_h: u64,
    /// Volume distributions, bytes: [light, medium, heavy] x [offpeak, peak].
    pub dists: [[ConfigDist; 2]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub n_users: u32,
    pub weeks: u32,
    pub self_bias: f64,
    pub night_ratio: f64,
    pub corr_min: u32,
    pub corr_max: u32,
    /// Planted correspondent-category means: international, outgoing-only,
    /// incoming-only, both-ways.
    pub category_means: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub contact_radius_m: f64,
    pub iet_eval_samples: usize,
    pub return_bucket_s: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsClass {
    pub n_trx: f64,
    pub p0_w: f64,
    pub pmax_w: f64,
    pub delta_p: f64,
}

impl BsClass {
    fn parse(s: &str) -> Result<BsClass, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(format!("expected ntrx:p0:pmax:deltap, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}"));
        Ok(BsClass {
            n_trx: num(parts[0])?,
            p0_w: num(parts[1])?,
            pmax_w: num(parts[2])?,
            delta_p: num(parts[3])?,
        })
    }

    fn dump(&self) -> String {
        format!("{}:{}:{}:{}", self.n_trx, self.p0_w, self.pmax_w, self.delta_p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub micro: BsClass,
    pub macro_: BsClass,
    pub rho_min: f64,
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub window_s: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub n_users: u32,
    pub duration_s: u64,
    pub start_weekday: Weekday,
    pub operators: Vec<Operator>,
    pub map: MapConfig,
    pub mobility: MobilityConfig,
    pub topology: TopologyConfig,
    pub social: SocialConfig,
    pub model: ModelConfig,
    pub split: SplitConfig,
    pub combine: CombineConfig,
    pub volume: VolumeConfig,
    pub bootstrap: BootstrapConfig,
    pub eval: EvalConfig,
    pub power: PowerConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            n_users: 1000,
            duration_s: 7 * 86_400,
            start_weekday: Weekday::Monday,
            operators: vec![
                Operator { mcc: "244".into(), mnc: "05".into(), share: 0.6 },
                Operator { mcc: "244".into(), mnc: "91".into(), share: 0.4 },
            ],
            map: MapConfig {
                file: String::new(),
                width_m: 10_000.0,
                height_m: 8_000.0,
                origin_lat: 60.1699,
                origin_lon: 24.9384,
                road_spacing_m: 500.0,
                home_clusters: 12,
                office_clusters: 8,
                leisure_spots: 10,
                bus_routes: 3,
                bus_period_s: 600,
                areas: 3,
            },
            mobility: MobilityConfig {
                sampling_interval_s: 60,
                walk_speed_mps: 1.4,
                car_speed_mps: 13.9,
                bus_speed_mps: 8.3,
                bus_stop_dwell_s: 20,
                prob_own_car: 0.19,
                office_arrival_s: 8 * 3600,
                office_arrival_jitter_s: 1800,
                workday_s: 8 * 3600,
                evening_min_s: 3600,
                evening_max_s: 4 * 3600,
                group_max: 5,
                home_w_m: 250.0,
                home_h_m: 150.0,
                office_w_m: 500.0,
                office_h_m: 300.0,
                leisure_side_m: 100.0,
                explore_shares: [0.2027, 0.5475, 0.2498],
                night_prob: [0.8, 0.5, 0.2],
                distance_shares: [0.72, 0.19, 0.09],
                pause_mean_s: 1800.0,
                pause_radius_m: 30.0,
            },
            topology: TopologyConfig { stations_file: String::new(), n_stations: 100 },
            social: SocialConfig {
                select_friend: 0.4,
                select_colleague: 0.25,
                select_neighbor: 0.15,
                select_other: 0.2,
                zipf_exponent: 1.0,
                foreign_mccs: vec!["208".into(), "262".into(), "310".into()],
            },
            model: ModelConfig {
                hidden_evt: 50,
                hidden_iet: 100,
                hidden_corr: 100,
                layers: 2,
                batch: 64,
                lr: 1e-3,
                dropout: 0.2,
                clip: 0.01,
                clip_mode: ClipMode::Value,
                epochs: 30,
                patience: 5,
                seq_quantile: 0.9,
                iet_median_samples: 1,
            },
            split: SplitConfig { mode: SplitMode::Auto, mode_correspondent: SplitMode::ByUser },
            combine: CombineConfig {
                intl_incoming_share: 0.5,
                duration_bound: DurationBound::Caller,
            },
            volume: VolumeConfig {
                shares: [0.5, 0.35, 0.15],
                peak_start_h: 8,
                peak_end_h: 20,
                dists: [
                    [
                        ConfigDist::Lognormal { mu: 11.0, sigma: 1.2, x0: 0.0 },
                        ConfigDist::Lognormal { mu: 11.7, sigma: 1.2, x0: 0.0 },
                    ],
                    [
                        ConfigDist::Lognormal { mu: 12.6, sigma: 1.2, x0: 0.0 },
                        ConfigDist::Lognormal { mu: 13.3, sigma: 1.2, x0: 0.0 },
                    ],
                    [
                        ConfigDist::Lognormal { mu: 14.0, sigma: 1.3, x0: 0.0 },
                        ConfigDist::Lognormal { mu: 14.8, sigma: 1.3, x0: 0.0 },
                    ],
                ],
            },
            bootstrap: BootstrapConfig {
                n_users: 500,
                weeks: 2,
                self_bias: 0.6,
                night_ratio: 0.2,
                corr_min: 3,
                corr_max: 18,
                category_means: [0.1, 0.3, 0.3, 0.3],
            },
            eval: EvalConfig {
                contact_radius_m: 10.0,
                iet_eval_samples: 500,
                return_bucket_s: 3600,
            },
            power: PowerConfig {
                micro: BsClass { n_trx: 2.0, p0_w: 56.0, pmax_w: 6.3, delta_p: 2.6 },
                macro_: BsClass { n_trx: 6.0, p0_w: 130.0, pmax_w: 20.0, delta_p: 4.7 },
                rho_min: 0.37,
                grid_rows: 5,
                grid_cols: 5,
                window_s: 3600,
            },
        }
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(s: &str, f: F) -> Result<Vec<T>, String> {
    s.split(',').map(|p| f(p.trim())).collect()
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad number {s:?}"))
}

fn parse_arr3(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s, parse_f64)?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 values, got {}", v.len()))
}

fn parse_operators(s: &str) -> Result<Vec<Operator>, String> {
    parse_list(s, |item| {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected mcc:mnc:share, got {item:?}"));
        }
        Ok(Operator {
            mcc: parts[0].trim().to_string(),
            mnc: parts[1].trim().to_string(),
            share: parse_f64(parts[2])?,
        })
    })
}

impl PipelineConfig {
    /// Parse config text over the defaults. An empty file is a valid config.
    pub fn parse(text: &str) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = PipelineConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ConfigError::Malformed { line, text: raw.to_string() })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Malformed { line, text: raw.to_string() });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
            seen.push(key.to_string());
            cfg.apply(key, value)
                .map_err(|e| match e {
                    ApplyError::Unknown => ConfigError::UnknownKey { line, key: key.to_string() },
                    ApplyError::Bad(reason) => {
                        ConfigError::InvalidValue { line, key: key.to_string(), reason }
                    }
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ApplyError> {
        macro_rules! num {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|_| ApplyError::Bad(format!("bad number {value:?}")))?
            };
        }
        let bad = |reason: String| ApplyError::Bad(reason);
        match key {
            "seed" => self.seed = num!(u64),
            "n_users" => self.n_users = num!(u32),
            "duration_s" => self.duration_s = num!(u64),
            "start_weekday" => {
                self.start_weekday = Weekday::parse(value)
                    .ok_or_else(|| bad(format!("unknown weekday {value:?}")))?
            }
            "operators" => self.operators = parse_operators(value).map_err(bad)?,

            "map.file" => self.map.file = value.to_string(),
            "map.width_m" => self.map.width_m = num!(f64),
            "map.height_m" => self.map.height_m = num!(f64),
            "map.origin_lat" => self.map.origin_lat = num!(f64),
            "map.origin_lon" => self.map.origin_lon = num!(f64),
            "map.road_spacing_m" => self.map.road_spacing_m = num!(f64),
            "map.home_clusters" => self.map.home_clusters = num!(u32),
            "map.office_clusters" => self.map.office_clusters = num!(u32),
            "map.leisure_spots" => self.map.leisure_spots = num!(u32),
            "map.bus_routes" => self.map.bus_routes = num!(u32),
            "map.bus_period_s" => self.map.bus_period_s = num!(u64),
            "map.areas" => self.map.areas = num!(u32),

            "mobility.sampling_interval_s" => self.mobility.sampling_interval_s = num!(u64),
            "mobility.walk_speed_mps" => self.mobility.walk_speed_mps = num!(f64),
            "mobility.car_speed_mps" => self.mobility.car_speed_mps = num!(f64),
            "mobility.bus_speed_mps" => self.mobility.bus_speed_mps = num!(f64),
            "mobility.bus_stop_dwell_s" => self.mobility.bus_stop_dwell_s = num!(u64),
            "mobility.prob_own_car" => self.mobility.prob_own_car = num!(f64),
            "mobility.office_arrival_s" => self.mobility.office_arrival_s = num!(u64),
            "mobility.office_arrival_jitter_s" => {
                self.mobility.office_arrival_jitter_s = num!(u64)
            }
            "mobility.workday_s" => self.mobility.workday_s = num!(u64),
            "mobility.evening_min_s" => self.mobility.evening_min_s = num!(u64),
            "mobility.evening_max_s" => self.mobility.evening_max_s = num!(u64),
            "mobility.group_max" => self.mobility.group_max = num!(u32),
            "mobility.home_w_m" => self.mobility.home_w_m = num!(f64),
            "mobility.home_h_m" => self.mobility.home_h_m = num!(f64),
            "mobility.office_w_m" => self.mobility.office_w_m = num!(f64),
            "mobility.office_h_m" => self.mobility.office_h_m = num!(f64),
            "mobility.leisure_side_m" => self.mobility.leisure_side_m = num!(f64),
            "mobility.explore_shares" => {
                self.mobility.explore_shares = parse_arr3(value).map_err(bad)?
            }
            "mobility.night_prob" => self.mobility.night_prob = parse_arr3(value).map_err(bad)?,
            "mobility.distance_shares" => {
                self.mobility.distance_shares = parse_arr3(value).map_err(bad)?
            }
            "mobility.pause_mean_s" => self.mobility.pause_mean_s = num!(f64),
            "mobility.pause_radius_m" => self.mobility.pause_radius_m = num!(f64),

            "topology.stations_file" => self.topology.stations_file = value.to_string(),
            "topology.n_stations" => self.topology.n_stations = num!(u32),

            "social.select_friend" => self.social.select_friend = num!(f64),
            "social.select_colleague" => self.social.select_colleague = num!(f64),
            "social.select_neighbor" => self.social.select_neighbor = num!(f64),
            "social.select_other" => self.social.select_other = num!(f64),
            "social.zipf_exponent" => self.social.zipf_exponent = num!(f64),
            "social.foreign_mccs" => {
                self.social.foreign_mccs =
                    parse_list(value, |s| Ok(s.to_string())).map_err(bad)?
            }

            "model.hidden_evt" => self.model.hidden_evt = num!(usize),
            "model.hidden_iet" => self.model.hidden_iet = num!(usize),
            "model.hidden_corr" => self.model.hidden_corr = num!(usize),
            "model.layers" => self.model.layers = num!(usize),
            "model.batch" => self.model.batch = num!(usize),
            "model.lr" => self.model.lr = num!(f64),
            "model.dropout" => self.model.dropout = num!(f64),
            "model.clip" => self.model.clip = num!(f64),
            "model.clip_mode" => {
                self.model.clip_mode = match value {
                    "value" => ClipMode::Value,
                    "norm" => ClipMode::Norm,
                    _ => return Err(bad(format!("expected value|norm, got {value:?}"))),
                }
            }
            "model.epochs" => self.model.epochs = num!(usize),
            "model.patience" => self.model.patience = num!(usize),
            "model.seq_quantile" => self.model.seq_quantile = num!(f64),
            "model.iet_median_samples" => self.model.iet_median_samples = num!(usize),

            "split.mode" => {
                self.split.mode = SplitMode::parse(value)
                    .ok_or_else(|| bad(format!("expected auto|by_user|chronological")))?
            }
            "split.mode_correspondent" => {
                self.split.mode_correspondent = SplitMode::parse(value)
                    .ok_or_else(|| bad(format!("expected auto|by_user|chronological")))?
            }

            "combine.intl_incoming_share" => self.combine.intl_incoming_share = num!(f64),
            "combine.duration_bound" => {
                self.combine.duration_bound = match value {
                    "caller" => DurationBound::Caller,
                    "min_caller_callee" => DurationBound::MinCallerCallee,
                    _ => {
                        return Err(bad(format!(
                            "expected caller|min_caller_callee, got {value:?}"
                        )))
                    }
                }
            }

            "volume.shares" => self.volume.shares = parse_arr3(value).map_err(bad)?,
            "volume.peak_start_h" => self.volume.peak_start_h = num!(u64),
            "volume.peak_end_h" => self.volume.peak_end_h = num!(u64),
            "volume.light_offpeak" => self.volume.dists[0][0] = ConfigDist::parse(value).map_err(bad)?,
            "volume.light_peak" => self.volume.dists[0][1] = ConfigDist::parse(value).map_err(bad)?,
            "volume.medium_offpeak" => self.volume.dists[1][0] = ConfigDist::parse(value).map_err(bad)?,
            "volume.medium_peak" => self.volume.dists[1][1] = ConfigDist::parse(value).map_err(bad)?,
            "volume.heavy_offpeak" => self.volume.dists[2][0] = ConfigDist::parse(value).map_err(bad)?,
            "volume.heavy_peak" => self.volume.dists[2][1] = ConfigDist::parse(value).map_err(bad)?,

            "bootstrap.n_users" => self.bootstrap.n_users = num!(u32),
            "bootstrap.weeks" => self.bootstrap.weeks = num!(u32),
            "bootstrap.self_bias" => self.bootstrap.self_bias = num!(f64),
            "bootstrap.night_ratio" => self.bootstrap.night_ratio = num!(f64),
            "bootstrap.corr_min" => self.bootstrap.corr_min = num!(u32),
            "bootstrap.corr_max" => self.bootstrap.corr_max = num!(u32),
            "bootstrap.category_means" => {
                let v = parse_list(value, parse_f64).map_err(bad)?;
                self.bootstrap.category_means = <[f64; 4]>::try_from(v)
                    .map_err(|v| bad(format!("expected 4 values, got {}", v.len())))?;
            }

            "eval.contact_radius_m" => self.eval.contact_radius_m = num!(f64),
            "eval.iet_eval_samples" => self.eval.iet_eval_samples = num!(usize),
            "eval.return_bucket_s" => self.eval.return_bucket_s = num!(u64),

            "power.micro" => self.power.micro = BsClass::parse(value).map_err(bad)?,
            "power.macro" => self.power.macro_ = BsClass::parse(value).map_err(bad)?,
            "power.rho_min" => self.power.rho_min = num!(f64),
            "power.grid" => {
                let (r, c) = value
                    .split_once(':')
                    .ok_or_else(|| bad(format!("expected rows:cols, got {value:?}")))?;
                self.power.grid_rows =
                    r.trim().parse().map_err(|_| bad(format!("bad number {r:?}")))?;
                self.power.grid_cols =
                    c.trim().parse().map_err(|_| bad(format!("bad number {c:?}")))?;
            }
            "power.window_s" => self.power.window_s = num!(u64),

            _ => return Err(ApplyError::Unknown),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Invalid(m));
        if self.n_users == 0 {
            return err("n_users must be >= 1".into());
        }
        if self.duration_s == 0 {
            return err("duration_s must be >= 1".into());
        }
        if self.operators.is_empty() {
            return err("at least one operator required".into());
        }
        let share_sum: f64 = self.operators.iter().map(|o| o.share).sum();
        if (share_sum - 1.0).abs() > 1e-6 {
            return err(format!("operator shares must sum to 1, got {share_sum}"));
        }
        for op in &self.operators {
            if op.mcc.len() != 3 || !op.mcc.bytes().all(|b| b.is_ascii_digit()) {
                return err(format!("operator mcc must be 3 digits, got {:?}", op.mcc));
            }
            if op.mnc.len() != 2 || !op.mnc.bytes().all(|b| b.is_ascii_digit()) {
                return err(format!("operator mnc must be 2 digits, got {:?}", op.mnc));
            }
            if !(0.0..=1.0).contains(&op.share) {
                return err(format!("operator share out of [0,1]: {}", op.share));
            }
        }
        let n_ops = self.operators.len();
        for i in 0..n_ops {
            for j in i + 1..n_ops {
                if self.operators[i].mcc == self.operators[j].mcc
                    && self.operators[i].mnc == self.operators[j].mnc
                {
                    return err(format!(
                        "duplicate operator {}{}",
                        self.operators[i].mcc, self.operators[i].mnc
                    ));
                }
            }
        }
        let probs: [(&str, f64); 8] = [
            ("mobility.prob_own_car", self.mobility.prob_own_car),
            ("social.select_friend", self.social.select_friend),
            ("social.select_colleague", self.social.select_colleague),
            ("social.select_neighbor", self.social.select_neighbor),
            ("social.select_other", self.social.select_other),
            ("combine.intl_incoming_share", self.combine.intl_incoming_share),
            ("model.dropout", self.model.dropout),
            ("bootstrap.night_ratio", self.bootstrap.night_ratio),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} out of [0,1]: {p}"));
            }
        }
        for (name, arr, must_sum) in [
            ("mobility.explore_shares", &self.mobility.explore_shares, true),
            ("mobility.night_prob", &self.mobility.night_prob, false),
            ("mobility.distance_shares", &self.mobility.distance_shares, true),
            ("volume.shares", &self.volume.shares, true),
        ] {
            for p in arr {
                if !(0.0..=1.0).contains(p) {
                    return err(format!("{name} entry out of [0,1]: {p}"));
                }
            }
            if must_sum {
                let s: f64 = arr.iter().sum();
                if (s - 1.0).abs() > 1e-3 {
                    return err(format!("{name} must sum to 1, got {s}"));
                }
            }
        }
        let sel_sum = self.social.select_friend
            + self.social.select_colleague
            + self.social.select_neighbor
            + self.social.select_other;
        if (sel_sum - 1.0).abs() > 1e-6 {
            return err(format!("social.select_* must sum to 1, got {sel_sum}"));
        }
        let cat_sum: f64 = self.bootstrap.category_means.iter().sum();
        if (cat_sum - 1.0).abs() > 1e-6 {
            return err(format!("bootstrap.category_means must sum to 1, got {cat_sum}"));
        }
        if self.map.width_m <= 0.0 || self.map.height_m <= 0.0 {
            return err("map dimensions must be positive".into());
        }
        if self.map.areas == 0 || self.map.home_clusters == 0 || self.map.office_clusters == 0 {
            return err("map must have at least one area, home cluster and office cluster".into());
        }
        if self.mobility.sampling_interval_s == 0 {
            return err("mobility.sampling_interval_s must be >= 1".into());
        }
        if self.mobility.evening_min_s > self.mobility.evening_max_s {
            return err("mobility.evening_min_s > mobility.evening_max_s".into());
        }
        if self.mobility.group_max == 0 {
            return err("mobility.group_max must be >= 1".into());
        }
        for (name, v) in [
            ("mobility.walk_speed_mps", self.mobility.walk_speed_mps),
            ("mobility.car_speed_mps", self.mobility.car_speed_mps),
            ("mobility.bus_speed_mps", self.mobility.bus_speed_mps),
        ] {
            if v <= 0.0 {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.topology.n_stations == 0 && self.topology.stations_file.is_empty() {
            return err("topology needs n_stations >= 1 or a stations file".into());
        }
        if self.model.layers == 0 || self.model.batch == 0 || self.model.epochs == 0 {
            return err("model.layers, model.batch and model.epochs must be >= 1".into());
        }
        if self.model.hidden_evt == 0 || self.model.hidden_iet == 0 || self.model.hidden_corr == 0
        {
            return err("model hidden sizes must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.model.dropout) {
            return err(format!("model.dropout out of [0,1): {}", self.model.dropout));
        }
        if self.model.clip <= 0.0 || self.model.lr <= 0.0 {
            return err("model.clip and model.lr must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.model.seq_quantile) {
            return err(format!("model.seq_quantile out of [0,1]: {}", self.model.seq_quantile));
        }
        if self.model.iet_median_samples == 0 {
            return err("model.iet_median_samples must be >= 1".into());
        }
        if self.volume.peak_start_h >= self.volume.peak_end_h || self.volume.peak_end_h > 24 {
            return err("volume peak window must satisfy 0 <= start < end <= 24".into());
        }
        if self.bootstrap.n_users == 0 || self.bootstrap.weeks == 0 {
            return err("bootstrap.n_users and bootstrap.weeks must be >= 1".into());
        }
        if self.bootstrap.corr_min == 0 || self.bootstrap.corr_min > self.bootstrap.corr_max {
            return err("bootstrap correspondent range must satisfy 1 <= min <= max".into());
        }
        if !(0.0..=1.0).contains(&self.bootstrap.self_bias) {
            return err(format!("bootstrap.self_bias out of [0,1]: {}", self.bootstrap.self_bias));
        }
        if self.eval.contact_radius_m <= 0.0 {
            return err("eval.contact_radius_m must be positive".into());
        }
        if self.eval.iet_eval_samples == 0 || self.eval.return_bucket_s == 0 {
            return err("eval.iet_eval_samples and eval.return_bucket_s must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.power.rho_min) {
            return err(format!("power.rho_min out of [0,1]: {}", self.power.rho_min));
        }
        if self.power.grid_rows == 0 || self.power.grid_cols == 0 || self.power.window_s == 0 {
            return err("power grid and window must be >= 1".into());
        }
        Ok(())
    }

    /// Every effective key, sorted, one per line. Parsing the dump yields an
    /// equal config; the stage-cache hash is computed over this text.
    pub fn canonical(&self) -> String {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        push("seed", self.seed.to_string());
        push("n_users", self.n_users.to_string());
        push("duration_s", self.duration_s.to_string());
        push("start_weekday", self.start_weekday.as_str().to_string());
        push(
            "operators",
            self.operators
                .iter()
                .map(|o| format!("{}:{}:{}", o.mcc, o.mnc, o.share))
                .collect::<Vec<_>>()
                .join(","),
        );
        push("map.file", self.map.file.clone());
        push("map.width_m", self.map.width_m.to_string());
        push("map.height_m", self.map.height_m.to_string());
        push("map.origin_lat", self.map.origin_lat.to_string());
        push("map.origin_lon", self.map.origin_lon.to_string());
        push("map.road_spacing_m", self.map.road_spacing_m.to_string());
        push("map.home_clusters", self.map.home_clusters.to_string());
        push("map.office_clusters", self.map.office_clusters.to_string());
        push("map.leisure_spots", self.map.leisure_spots.to_string());
        push("map.bus_routes", self.map.bus_routes.to_string());
        push("map.bus_period_s", self.map.bus_period_s.to_string());
        push("map.areas", self.map.areas.to_string());
        push("mobility.sampling_interval_s", self.mobility.sampling_interval_s.to_string());
        push("mobility.walk_speed_mps", self.mobility.walk_speed_mps.to_string());
        push("mobility.car_speed_mps", self.mobility.car_speed_mps.to_string());
        push("mobility.bus_speed_mps", self.mobility.bus_speed_mps.to_string());
        push("mobility.bus_stop_dwell_s", self.mobility.bus_stop_dwell_s.to_string());
        push("mobility.prob_own_car", self.mobility.prob_own_car.to_string());
        push("mobility.office_arrival_s", self.mobility.office_arrival_s.to_string());
        push(
            "mobility.office_arrival_jitter_s",
            self.mobility.office_arrival_jitter_s.to_string(),
        );
        push("mobility.workday_s", self.mobility.workday_s.to_string());
        push("mobility.evening_min_s", self.mobility.evening_min_s.to_string());
        push("mobility.evening_max_s", self.mobility.evening_max_s.to_string());
        push("mobility.group_max", self.mobility.group_max.to_string());
        push("mobility.home_w_m", self.mobility.home_w_m.to_string());
        push("mobility.home_h_m", self.mobility.home_h_m.to_string());
        push("mobility.office_w_m", self.mobility.office_w_m.to_string());
        push("mobility.office_h_m", self.mobility.office_h_m.to_string());
        push("mobility.leisure_side_m", self.mobility.leisure_side_m.to_string());
        let arr3 = |a: &[f64; 3]| a.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        push("mobility.explore_shares", arr3(&self.mobility.explore_shares));
        push("mobility.night_prob", arr3(&self.mobility.night_prob));
        push("mobility.distance_shares", arr3(&self.mobility.distance_shares));
        push("mobility.pause_mean_s", self.mobility.pause_mean_s.to_string());
        push("mobility.pause_radius_m", self.mobility.pause_radius_m.to_string());
        push("topology.stations_file", self.topology.stations_file.clone());
        push("topology.n_stations", self.topology.n_stations.to_string());
        push("social.select_friend", self.social.select_friend.to_string());
        push("social.select_colleague", self.social.select_colleague.to_string());
        push("social.select_neighbor", self.social.select_neighbor.to_string());
        push("social.select_other", self.social.select_other.to_string());
        push("social.zipf_exponent", self.social.zipf_exponent.to_string());
        push("social.foreign_mccs", self.social.foreign_mccs.join(","));
        push("model.hidden_evt", self.model.hidden_evt.to_string());
        push("model.hidden_iet", self.model.hidden_iet.to_string());
        push("model.hidden_corr", self.model.hidden_corr.to_string());
        push("model.layers", self.model.layers.to_string());
        push("model.batch", self.model.batch.to_string());
        push("model.lr", self.model.lr.to_string());
        push("model.dropout", self.model.dropout.to_string());
        push("model.clip", self.model.clip.to_string());
        push(
            "model.clip_mode",
            match self.model.clip_mode {
                ClipMode::Value => "value".to_string(),
                ClipMode::Norm => "norm".to_string(),
            },
        );
        push("model.epochs", self.model.epochs.to_string());
        push("model.patience", self.model.patience.to_string());
        push("model.seq_quantile", self.model.seq_quantile.to_string());
        push("model.iet_median_samples", self.model.iet_median_samples.to_string());
        push("split.mode", self.split.mode.as_str().to_string());
        push("split.mode_correspondent", self.split.mode_correspondent.as_str().to_string());
        push("combine.intl_incoming_share", self.combine.intl_incoming_share.to_string());
        push(
            "combine.duration_bound",
            match self.combine.duration_bound {
                DurationBound::Caller => "caller".to_string(),
                DurationBound::MinCallerCallee => "min_caller_callee".to_string(),
            },
        );
        push("volume.shares", arr3(&self.volume.shares));
        push("volume.peak_start_h", self.volume.peak_start_h.to_string());
        push("volume.peak_end_h", self.volume.peak_end_h.to_string());
        push("volume.light_offpeak", self.volume.dists[0][0].dump());
        push("volume.light_peak", self.volume.dists[0][1].dump());
        push("volume.medium_offpeak", self.volume.dists[1][0].dump());
        push("volume.medium_peak", self.volume.dists[1][1].dump());
        push("volume.heavy_offpeak", self.volume.dists[2][0].dump());
        push("volume.heavy_peak", self.volume.dists[2][1].dump());
        push("bootstrap.n_users", self.bootstrap.n_users.to_string());
        push("bootstrap.weeks", self.bootstrap.weeks.to_string());
        push("bootstrap.self_bias", self.bootstrap.self_bias.to_string());
        push("bootstrap.night_ratio", self.bootstrap.night_ratio.to_string());
        push("bootstrap.corr_min", self.bootstrap.corr_min.to_string());
        push("bootstrap.corr_max", self.bootstrap.corr_max.to_string());
        push(
            "bootstrap.category_means",
            self.bootstrap
                .category_means
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        push("eval.contact_radius_m", self.eval.contact_radius_m.to_string());
        push("eval.iet_eval_samples", self.eval.iet_eval_samples.to_string());
        push("eval.return_bucket_s", self.eval.return_bucket_s.to_string());
        push("power.micro", self.power.micro.dump());
        push("power.macro", self.power.macro_.dump());
        push("power.rho_min", self.power.rho_min.to_string());
        push("power.grid", format!("{}:{}", self.power.grid_rows, self.power.grid_cols));
        push("power.window_s", self.power.window_s.to_string());

        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Hex SHA-256 of the canonical dump.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

enum ApplyError {
    Unknown,
    Bad(String),
}
