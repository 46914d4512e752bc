//! Position → RIS configuration network.
//!
//! Phases are learned as `(cos φ, sin φ)` pairs, so the squared distance between
//! the encoded label and a unit-circle output equals `Σ_n |e^{jφ_n} − e^{jφ̂_n}|²`,
//! the Frobenius distance between the diagonal phase matrices. Coordinates are
//! mapped affinely from the room floor onto `[−1, 1]²`.

mod adagrad;
mod io;
mod network;
mod train;

pub use adagrad::{adagrad_step, AdagradState};
pub use io::{load_model, read_model, save_model, write_model};
pub use network::{backprop_gradients, loss, Gradients, Layer, Mlp, Sample};
pub use train::{
    sample_from, samples_from_database, train, train_observed, train_on_database, TrainConfig,
    TrainReport,
};

use crate::channel::PhaseConfig;
use crate::error::{Error, Result};
use crate::numerics::wrap_phase;
use crate::scene::{Position, Scene};

/// `[cos φ_1, sin φ_1, …, cos φ_N, sin φ_N]`.
pub fn encode_phases(cfg: &PhaseConfig) -> Vec<f64> {
    cfg.phases()
        .iter()
        .flat_map(|phi| [phi.cos(), phi.sin()])
        .collect()
}

/// Angle of each `(cos, sin)` pair; a pair that is exactly `(0, 0)` has no angle.
pub fn decode_output(v: &[f64]) -> Result<PhaseConfig> {
    if v.is_empty() || v.len() % 2 != 0 {
        return Err(Error::domain(format!(
            "output length must be a positive even number, got {}",
            v.len()
        )));
    }
    let phases = v
        .chunks_exact(2)
        .enumerate()
        .map(|(n, pair)| {
            if pair[0] == 0.0 && pair[1] == 0.0 {
                Err(Error::domain(format!(
                    "output pair {} is (0, 0); phase undefined",
                    n + 1
                )))
            } else {
                Ok(wrap_phase(pair[1].atan2(pair[0])))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseConfig::new(phases)
}

/// Floor coordinates scaled to `[−1, 1]`.
pub fn scale_input(scene: &Scene, p: &Position) -> [f64; 2] {
    let room = scene.room();
    [2.0 * p.x / room.width - 1.0, 2.0 * p.y / room.length - 1.0]
}

/// Online phase: predicted configuration for an estimated user position.
pub fn predict_phase(mlp: &Mlp, position: &Position, scene: &Scene) -> Result<PhaseConfig> {
    decode_output(&mlp.forward(&scale_input(scene, position))?)
}
