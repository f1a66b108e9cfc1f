//! Parametric distribution machinery for trace synthesis: three-parameter
//! lognormal and shifted exponential families with MLE fitting, KS-based
//! family selection, truncated per-bin inter-event-time samplers, the call
//! duration sampler, and profile-based data-volume draws.

mod dist;
mod fit;
mod samplers;
mod volume;

pub use dist::{normal_cdf, DistFamily, DistKind, FittedDist};
pub use fit::{fit, fit_family, ks_statistic, StatError};
pub use samplers::{
    call_duration_dist, overall_iet_dist, read_fits, sample_call_duration, sample_positive,
    write_fits, IetSampler,
};
pub use volume::{VolumeDist, VolumeProfile, VolumeTable};
