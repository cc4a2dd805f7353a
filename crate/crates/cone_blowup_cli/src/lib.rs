pub mod config;
pub mod output;
pub mod pipeline;
pub mod stages;

use cone_blowup::Error;

/// Exit status for a failed run: 3 when the evolution lost hyperbolicity or
/// positivity, 2 for configuration errors, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::HyperbolicityLoss { .. } | Error::PositivityLoss { .. } => 3,
                Error::InvalidConfig(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<config::ConfigError>().is_some() {
            return 2;
        }
    }
    1
}
