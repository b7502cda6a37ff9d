//! Free-alphabet mechanisms: offline (whole word) and online (per symbol).

mod offline;
mod online;

pub(crate) use offline::ln_ratio;
pub use offline::{
    offline_distance_distribution, privatize_offline, DistanceDistribution, OfflineMechanism,
};
pub use online::{online_policy, privatize_online, privatize_online_step, OnlinePolicy};

/// `-epsilon * distance / (2k)`, with `0 * inf` treated as 0.
pub(crate) fn distance_penalty(epsilon: f64, distance: usize, k: usize) -> f64 {
    if distance == 0 {
        0.0
    } else {
        -epsilon * distance as f64 / (2.0 * k as f64)
    }
}
