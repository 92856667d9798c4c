//! The latent scenario variable: exact enumerated posterior, evidence lower
//! bound, amortized encoder and temperature schedule.

mod anneal;
mod encoder;
mod posterior;

pub use anneal::TemperatureSchedule;
pub use encoder::{encoder_features, feature_dim, Encoder};
pub use posterior::{elbo, elbo_from_log_likelihoods, exact_posterior, log_likelihoods, LatentPosterior};
