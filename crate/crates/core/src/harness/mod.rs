//! Experiment orchestration for the rate-vs-SNR and MSE-vs-epochs studies.

mod config;
mod experiments;
mod table;

pub use config::ExperimentConfig;
pub use experiments::{
    evaluation_positions, offset_column, predict_table, rate_vs_snr_with, run_mse_vs_epochs,
    run_offline, run_rate_vs_snr, test_samples, OfflineArtifacts,
};
pub use table::ResultTable;

use std::path::Path;

use crate::error::{Error, Result};

/// Manifest text: the resolved config as TOML followed by a `[run]` table.
/// Feeding the manifest back as a config file reproduces the run.
pub fn manifest_text(cfg: &ExperimentConfig, run: &[(String, String)]) -> String {
    let mut table = toml::Table::new();
    table.insert("crate_version".into(), env!("CARGO_PKG_VERSION").into());
    table.insert("subcarrier_spacing_hz".into(), 150e3.into());
    for (k, v) in run {
        table.insert(k.clone(), v.clone().into());
    }
    let mut wrapper = toml::Table::new();
    wrapper.insert("run".into(), toml::Value::Table(table));
    format!(
        "{}\n{}",
        cfg.to_toml(),
        toml::to_string(&wrapper).expect("manifest serializes")
    )
}

pub fn write_manifest(
    path: impl AsRef<Path>,
    cfg: &ExperimentConfig,
    run: &[(String, String)],
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest_text(cfg, run)).map_err(|e| Error::io(path, e))
}
