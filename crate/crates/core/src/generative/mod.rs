//! Neural samplers: a vanilla GAN on min-max-scaled features and a
//! conditional GAN on mode-normalized features, built on a small
//! feed-forward network with hand-written gradients.

mod ctgan;
mod gan;
mod mode;
mod net;
mod optim;
mod persist;

pub use ctgan::{train_ctgan, CondSampler, DiscreteCondition};
pub use gan::{
    head_backward, head_forward, train_gan, train_gan_with_discriminator, Discriminator, Encoding, GanConfig,
    GenerativeMethod, GeneratorModel, LossRecord, MinMaxScaler,
};
pub use mode::{
    fit_mode_column, ColumnCodec, ModeChoice, ModeColumn, ModeNormalizer, Span, SpanKind, DEFAULT_MAX_MODES,
    PRUNE_WEIGHT,
};
pub use net::{
    sigmoid, softplus, Dense, FeedforwardNet, ForwardCache, GradWrt, Gradients, OutputActivation, LEAKY_SLOPE,
};
pub use optim::{Optimizer, OptimizerKind};
pub use persist::{load_model, read_model, save_model, write_loss_trace, write_model, FORMAT_VERSION};
