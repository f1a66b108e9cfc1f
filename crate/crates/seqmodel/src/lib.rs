//! Recurrent sequence models over user event histories: a shared LSTM core
//! with three heads' worth of configurations (next event type, gap bin,
//! correspondent rank), trained with Adam on teacher-forced batches.

mod adam;
mod checkpoint;
mod dataset;
mod features;
mod generate;
mod gradcheck;
mod lstm;
mod train;

pub use adam::{clip_grads, Adam};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError};
pub use dataset::{
    corr_dataset, event_dataset, iet_dataset, make_batch, ModelKind, SeqDataset, SeqExample,
};
pub use features::{
    encode_corr_input, encode_event_input, encode_iet_input, encode_temporal, CORR_INPUT_DIM,
    EVENT_INPUT_DIM, IET_INPUT_DIM, TEMPORAL_DIM,
};
pub use generate::{softmax, step_state, LstmState};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use lstm::{
    accumulate_scores, backward, forward, mean_loss, Batch, Cache, Layer, LossKind, LstmError,
    LstmGrads, LstmParams,
};
pub use train::{
    cfg_for, eval_dataset, train, write_metrics, EpochMetrics, TrainCfg, TrainError, TrainResult,
};
