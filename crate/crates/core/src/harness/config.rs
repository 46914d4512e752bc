use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dnn::TrainConfig;
use crate::error::{Error, Result};
use crate::scene::SceneConfig;

/// Everything an experiment run depends on. Serialized as TOML; the `[scene]`
/// table uses the same schema as a standalone scene file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Apply the scene's blockage penalty to paths crossing obstacles.
    pub blockage: bool,
    /// Transmit SNR grid `p/σ²` in dB.
    pub snr_grid_db: Vec<f64>,
    /// Distances from the target at which the focused configuration is evaluated.
    pub offsets_m: Vec<f64>,
    /// Floor direction of the offsets (normalized on use).
    pub offset_direction: [f64; 2],
    /// Target position; defaults to the test point nearest the room center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 2]>,
    pub monte_carlo_runs: usize,
    /// Position estimates per reference point (J).
    pub estimates_per_rp: usize,
    /// Standard deviation of the position estimates, meters.
    pub sigma_pos: f64,
    /// RIS sizes compared by the MSE-vs-epochs study.
    pub n_values: Vec<usize>,
    /// Independent seeds averaged by the MSE-vs-epochs study.
    pub mse_seeds: usize,
    pub train: TrainConfig,
    pub scene: SceneConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            blockage: true,
            snr_grid_db: (0..=8).map(|i| -10.0 + 5.0 * i as f64).collect(),
            offsets_m: vec![0.5, 1.0, 2.0],
            offset_direction: [1.0, 0.0],
            target: None,
            monte_carlo_runs: 200,
            estimates_per_rp: 5,
            sigma_pos: 0.05,
            n_values: vec![8, 16, 32],
            mse_seeds: 5,
            train: TrainConfig {
                seed: 1,
                ..TrainConfig::default()
            },
            scene: SceneConfig::office(32, 32),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config(
                "SNR grid must be a non-empty list of finite values",
            ));
        }
        if self
            .offsets_m
            .iter()
            .any(|o| !(*o >= 0.0) || !o.is_finite())
        {
            return Err(Error::config("offsets must be finite and >= 0"));
        }
        let [dx, dy] = self.offset_direction;
        if !(dx.hypot(dy) > 0.0) {
            return Err(Error::config("offset direction must be non-zero"));
        }
        if self.monte_carlo_runs == 0 {
            return Err(Error::config("need at least one Monte Carlo run"));
        }
        if self.estimates_per_rp == 0 {
            return Err(Error::config(
                "need at least one estimate per reference point",
            ));
        }
        if !(self.sigma_pos >= 0.0) {
            return Err(Error::config("position noise must be >= 0"));
        }
        if self.mse_seeds == 0 {
            return Err(Error::config("need at least one seed for the MSE study"));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::config(
                "RIS sizes for the MSE study must be positive",
            ));
        }
        if let Some([x, y]) = self.target {
            let r = self.scene.room;
            if !(0.0..=r.width).contains(&x) || !(0.0..=r.length).contains(&y) {
                return Err(Error::config(format!(
                    "target ({x}, {y}) lies outside the room"
                )));
            }
        }
        self.train.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        // A run manifest carries an extra [run] table; it is informational only.
        let mut value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        value.remove("run");
        value
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
