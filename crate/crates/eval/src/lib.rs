//! Model-quality scoring against baseline predictors, mobility-law metrics,
//! and the two network use cases (population density maps, micro-BS
//! sleeping). Everything returns plain tables; plotting stays outside.

mod baselines;
mod density;
mod mobility;
mod power;
mod predict;
mod score;
mod streams;
mod tables;

pub use baselines::{
    multinomial_event_streams, multinomial_iet_streams, overall_lognormal_minutes,
    ranged_multinomial_streams, ranged_uniform_streams, repeat_event_streams,
    repeat_iet_streams, uniform_event_streams, uniform_iet_streams, BaselineKind, Marginals,
};
pub use density::{active_users, density_map, top_decile_office_share};
pub use mobility::{
    cdf, contact_metrics, radius_of_gyration, repetitiveness, return_probability, xy_tracks,
    ContactMetrics,
};
pub use power::{bs_sleeping, BsPowerParams, CellPower, MacroPower, PowerModelConfig, SleepReport};
pub use predict::{
    iet_minutes_from_bins, lstm_corr_streams, lstm_event_streams, lstm_iet_streams,
};
pub use score::{accuracy, mae, nll, MaeReport, Report};
pub use streams::{
    corr_steps, event_steps, gap_steps, ClassStream, CorrStep, EventStep, GapStep, UserCorrSteps,
    UserEventSteps, UserGapSteps, ValueStream,
};
pub use tables::{write_user_values, write_xy_table, MetricRow, UserValueRow};

use cdrkit_core::io::IoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("user {user_id}: {preds} predictions against {truths} truths")]
    LengthMismatch { user_id: u32, preds: usize, truths: usize },
    #[error("contact metrics need at least 2 users, got {n}")]
    TooFewUsers { n: usize },
    #[error("no steps to score")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] IoError),
}
