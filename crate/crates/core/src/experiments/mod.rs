//! Stochastic evaluation protocols over whole system sets.

mod noise;
mod selection;
mod stability;

pub use noise::{noise_experiment, noisy_annotation, NoiseConfig, NoiseModel, NoiseReport};
pub use selection::{model_selection, SelectionReport};
pub use stability::{stability_experiment, StabilityReport};

pub(crate) fn mean_and_variance(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var))
}
