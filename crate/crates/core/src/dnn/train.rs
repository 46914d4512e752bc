use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adagrad::{adagrad_step, AdagradState};
use super::network::{backprop_gradients, loss, Mlp, Sample};
use super::{encode_phases, scale_input};
use crate::error::{Error, Result};
use crate::fingerprint::Database;
use crate::numerics::SimRng;
use crate::scene::{Position, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adagrad_epsilon: f64,
    /// Widths of the three hidden layers.
    pub hidden: [usize; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            adagrad_epsilon: 1e-8,
            hidden: [64, 64, 64],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.adagrad_epsilon > 0.0) {
            return Err(Error::config(
                "learning rate and Adagrad epsilon must be positive",
            ));
        }
        if self.epochs == 0 {
            return Err(Error::config("training needs at least one epoch"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        Ok(())
    }

    /// Freshly initialized network for `n_elements` outputs pairs, seeded from
    /// this config.
    pub fn init_network(&self, n_elements: usize) -> Result<Mlp> {
        let [h1, h2, h3] = self.hidden;
        let mut rng = SimRng::new(self.seed).child("train/init");
        Mlp::init([2, h1, h2, h3, 2 * n_elements], &mut rng)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Full-dataset loss after each epoch.
    pub epoch_loss: Vec<f64>,
    /// Mean per-sample loss on the validation set after the last epoch.
    pub validation_mse: Option<f64>,
}

pub fn sample_from(
    scene: &Scene,
    position: &Position,
    label: &crate::channel::PhaseConfig,
) -> Sample {
    Sample {
        input: scale_input(scene, position).to_vec(),
        target: encode_phases(label),
    }
}

pub fn samples_from_database(db: &Database, scene: &Scene) -> Vec<Sample> {
    db.records
        .iter()
        .map(|r| sample_from(scene, &Position::floor(r.x, r.y), &r.label))
        .collect()
}

pub fn train(mlp: Mlp, samples: &[Sample], cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    train_observed(mlp, samples, None, cfg, |_, _| {})
}

/// Mini-batch Adagrad. Records are reshuffled each epoch from the config seed;
/// `observer` sees the network after every epoch (1-based).
pub fn train_observed(
    mut mlp: Mlp,
    samples: &[Sample],
    validation: Option<&[Sample]>,
    cfg: &TrainConfig,
    mut observer: impl FnMut(usize, &Mlp),
) -> Result<(Mlp, TrainReport)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let mut state = AdagradState::new(&mlp);
    let mut rng = SimRng::new(cfg.seed).child("train/shuffle");
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut report = TrainReport::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i].clone()));
            let grads = backprop_gradients(&mlp, &batch)?;
            adagrad_step(
                &mut mlp,
                &mut state,
                &grads,
                cfg.learning_rate,
                cfg.adagrad_epsilon,
            )?;
        }
        report.epoch_loss.push(loss(&mlp, samples)?);
        observer(epoch, &mlp);
    }
    if let Some(val) = validation.filter(|v| !v.is_empty()) {
        report.validation_mse = Some(loss(&mlp, val)? / val.len() as f64);
    }
    Ok((mlp, report))
}

/// Train on a fingerprint database of `scene`.
pub fn train_on_database(
    mlp: Mlp,
    db: &Database,
    scene: &Scene,
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport)> {
    if mlp.output_dim() != 2 * db.meta.n {
        return Err(Error::dim(
            2 * db.meta.n,
            mlp.output_dim(),
            "network output vs 2N",
        ));
    }
    if mlp.input_dim() != 2 {
        return Err(Error::dim(2, mlp.input_dim(), "network input"));
    }
    train(mlp, &samples_from_database(db, scene), cfg)
}
