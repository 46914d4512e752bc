//! RIS-assisted indoor link simulation with learned phase configurations.
//!
//! The offline phase fingerprints reference points with the SNR-optimal RIS
//! phases of their channels and trains a small network mapping floor
//! coordinates to phases; the online phase predicts a configuration for an
//! estimated user position.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dnn;
pub mod error;
pub mod fingerprint;
pub mod focus;
pub mod harness;
pub mod numerics;
pub mod scene;

pub use channel::{
    draw_channels, effective_gain, pathloss_db, pathloss_linear, rate, received_signal, snr,
    ChannelSet, LinkBudget, PhaseConfig,
};
pub use dnn::{decode_output, encode_phases, predict_phase, Mlp, TrainConfig};
pub use error::{Error, Result};
pub use fingerprint::{build_database, load_database, save_database, verify_database, Database};
pub use focus::{optimal_phases_continuous, optimal_phases_exhaustive, QuantizationSpec};
pub use harness::{run_mse_vs_epochs, run_rate_vs_snr, ExperimentConfig, ResultTable};
pub use numerics::{Complex, ComplexMatrix, ComplexVector, SimRng};
pub use scene::{build_default_scene, Position, Scene, SceneConfig};
