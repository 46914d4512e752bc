use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::table::ResultTable;
use crate::channel::{draw_channels, rate, snr, ChannelSet, LinkBudget, PhaseConfig};
use crate::dnn::{predict_phase, sample_from, train_observed, Mlp, Sample, TrainConfig};
use crate::error::{Error, Result};
use crate::fingerprint::{build_database, Database};
use crate::focus::optimal_phases_continuous;
use crate::numerics::SimRng;
use crate::scene::{Position, Scene};

/// Column name for an offset distance: `0.5 → rate_off_0p5`, `2 → rate_off_2`.
pub fn offset_column(offset: f64) -> String {
    format!(
        "rate_off_{}",
        offset.to_string().replace('.', "p").replace('-', "m")
    )
}

fn target_position(cfg: &ExperimentConfig, scene: &Scene) -> Result<Position> {
    match cfg.target {
        Some([x, y]) => Ok(Position::floor(x, y)),
        None => scene
            .central_test_point()
            .ok_or_else(|| Error::config("scene has no test points and no target was given")),
    }
}

/// Target and offset positions, offsets taken along the configured floor direction
/// and clamped into the room.
pub fn evaluation_positions(
    cfg: &ExperimentConfig,
    scene: &Scene,
) -> Result<(Position, Vec<Position>)> {
    let target = target_position(cfg, scene)?;
    let [dx, dy] = cfg.offset_direction;
    let norm = dx.hypot(dy);
    let offsets = cfg
        .offsets_m
        .iter()
        .map(|o| scene.clamp_to_floor(target.x + o * dx / norm, target.y + o * dy / norm))
        .collect();
    Ok((target, offsets))
}

/// Scene, database and trained network of one experiment.
pub struct OfflineArtifacts {
    pub scene: Scene,
    pub database: Database,
    pub network: Mlp,
    pub epoch_loss: Vec<f64>,
}

pub fn run_offline(cfg: &ExperimentConfig) -> Result<OfflineArtifacts> {
    cfg.validate()?;
    let scene = Scene::from_config(cfg.scene.clone())?;
    let database = build_database(
        &scene,
        cfg.estimates_per_rp,
        cfg.sigma_pos,
        cfg.seed,
        cfg.blockage,
    )?;
    let samples = crate::dnn::samples_from_database(&database, &scene);
    let mlp = cfg.train.init_network(scene.ris_elements())?;
    let (network, report) = train_observed(mlp, &samples, None, &cfg.train, |_, _| {})?;
    Ok(OfflineArtifacts {
        scene,
        database,
        network,
        epoch_loss: report.epoch_loss,
    })
}

/// Squared effective-gain magnitudes of one Monte Carlo run:
/// `[target, offsets.., no RIS, oracle]`.
fn run_gains(
    scene: &Scene,
    positions: &[Position],
    predicted: &PhaseConfig,
    rng: &SimRng,
    blockage: bool,
) -> Result<Vec<f64>> {
    let unit = LinkBudget::new(1.0, 1.0)?;
    // Every position replays the same stream, so the AP-RIS link is shared and
    // position differences come from geometry alone.
    let draw = |p: &Position| -> Result<ChannelSet> {
        draw_channels(scene, p, &mut rng.clone(), blockage)
    };
    let target = draw(&positions[0])?;
    let mut gains = Vec::with_capacity(positions.len() + 2);
    gains.push(snr(&target, predicted, &unit)?);
    for p in &positions[1..] {
        gains.push(snr(&draw(p)?, predicted, &unit)?);
    }
    gains.push(snr(&target.without_ris(), predicted, &unit)?);
    gains.push(snr(&target, &optimal_phases_continuous(&target), &unit)?);
    Ok(gains)
}

/// Mean achievable rate versus transmit SNR for the configuration predicted at the
/// target, evaluated there and at each offset. The no-RIS and per-run oracle
/// baselines come last.
pub fn run_rate_vs_snr(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let offline = run_offline(cfg)?;
    rate_vs_snr_with(cfg, &offline.scene, &offline.network)
}

/// Online half of [`run_rate_vs_snr`] with an already trained network.
pub fn rate_vs_snr_with(
    cfg: &ExperimentConfig,
    scene: &Scene,
    network: &Mlp,
) -> Result<ResultTable> {
    cfg.validate()?;
    let (target, offsets) = evaluation_positions(cfg, scene)?;
    let predicted = predict_phase(network, &target, scene)?;
    let mut positions = vec![target];
    positions.extend(offsets);

    let root = SimRng::new(cfg.seed).child("rate-vs-snr/run");
    let per_run: Vec<Vec<f64>> = (0..cfg.monte_carlo_runs)
        .into_par_iter()
        .map(|r| {
            run_gains(
                scene,
                &positions,
                &predicted,
                &root.indexed("run", r as u64),
                cfg.blockage,
            )
        })
        .collect::<Result<_>>()?;

    let mut columns = vec!["snr_db".to_string(), "rate_target".to_string()];
    columns.extend(cfg.offsets_m.iter().map(|o| offset_column(*o)));
    columns.push("rate_noris".into());
    columns.push("rate_oracle".into());
    let mut table = ResultTable::new(columns)?;

    let runs = cfg.monte_carlo_runs as f64;
    for &snr_db in &cfg.snr_grid_db {
        let p = 10f64.powf(snr_db / 10.0);
        let mut sums = vec![0.0; positions.len() + 2];
        for gains in &per_run {
            for (s, g) in sums.iter_mut().zip(gains) {
                *s += rate(p * g)?;
            }
        }
        let mut row = vec![snr_db];
        row.extend(sums.iter().map(|s| s / runs));
        table.push_row(row)?;
    }
    table.meta = vec![
        ("seed".into(), cfg.seed.to_string()),
        ("monte_carlo_runs".into(), cfg.monte_carlo_runs.to_string()),
        ("target".into(), format!("{} {}", target.x, target.y)),
    ];
    Ok(table)
}

/// Held-out evaluation set: the scene's test points labelled with the continuous
/// optimum of a fresh channel draw at each point.
pub fn test_samples(scene: &Scene, seed: u64, blockage: bool) -> Result<Vec<Sample>> {
    let root = SimRng::new(seed).child("mse-vs-epochs/test");
    scene
        .test_points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ch = draw_channels(scene, p, &mut root.indexed("point", i as u64), blockage)?;
            Ok(sample_from(scene, p, &optimal_phases_continuous(&ch)))
        })
        .collect()
}

fn mean_sample_loss(mlp: &Mlp, samples: &[Sample]) -> Result<f64> {
    Ok(crate::dnn::loss(mlp, samples)? / samples.len() as f64)
}

/// Per-epoch raw test MSE of one (N, seed) pair.
fn mse_curve(cfg: &ExperimentConfig, scene: &Scene, seed: u64) -> Result<Vec<f64>> {
    let db = build_database(
        scene,
        cfg.estimates_per_rp,
        cfg.sigma_pos,
        seed,
        cfg.blockage,
    )?;
    let train_set = crate::dnn::samples_from_database(&db, scene);
    let test_set = test_samples(scene, seed, cfg.blockage)?;
    if test_set.is_empty() {
        return Err(Error::config("scene has no test points"));
    }
    let train_cfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let mlp = train_cfg.init_network(scene.ris_elements())?;
    let mut curve = Vec::with_capacity(train_cfg.epochs);
    let mut failure = None;
    train_observed(
        mlp,
        &train_set,
        None,
        &train_cfg,
        |_, net| match mean_sample_loss(net, &test_set) {
            Ok(v) => curve.push(v),
            Err(e) => failure = Some(e),
        },
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(curve),
    }
}

/// Test MSE after every epoch for each RIS size, averaged over `cfg.mse_seeds`
/// seeds. Columns: `n, epoch, mse_per_element, mse_raw`.
pub fn run_mse_vs_epochs(cfg: &ExperimentConfig, n_values: &[usize]) -> Result<ResultTable> {
    cfg.validate()?;
    if n_values.is_empty() {
        return Err(Error::config("need at least one RIS size"));
    }
    let base = Scene::from_config(cfg.scene.clone())?;
    let scenes = n_values
        .iter()
        .map(|&n| base.with_ris_elements(n))
        .collect::<Result<Vec<_>>>()?;
    let seed_root = SimRng::new(cfg.seed).child("mse-vs-epochs/seed");
    let seeds: Vec<u64> = (0..cfg.mse_seeds)
        .map(|s| rand::RngCore::next_u64(&mut seed_root.indexed("seed", s as u64)))
        .collect();

    let jobs: Vec<(usize, u64)> = (0..scenes.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let curves: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, s)| mse_curve(cfg, &scenes[i], s))
        .collect::<Result<_>>()?;

    let mut table = ResultTable::new(
        ["n", "epoch", "mse_per_element", "mse_raw"]
            .map(String::from)
            .to_vec(),
    )?;
    for (i, &n) in n_values.iter().enumerate() {
        let mine = &curves[i * seeds.len()..(i + 1) * seeds.len()];
        for epoch in 0..cfg.train.epochs {
            let raw = mine.iter().map(|c| c[epoch]).sum::<f64>() / seeds.len() as f64;
            table.push_row(vec![n as f64, (epoch + 1) as f64, raw / n as f64, raw])?;
        }
    }
    table.meta = vec![
        ("seed".into(), cfg.seed.to_string()),
        ("mse_seeds".into(), cfg.mse_seeds.to_string()),
    ];
    Ok(table)
}

/// Predictions for a list of floor positions: one row per position with the
/// phases of every element.
pub fn predict_table(scene: &Scene, network: &Mlp, positions: &[[f64; 2]]) -> Result<ResultTable> {
    let n = network.output_dim() / 2;
    let mut columns = vec!["x".to_string(), "y".to_string()];
    columns.extend((1..=n).map(|i| format!("phi_{i}")));
    let mut table = ResultTable::new(columns)?;
    for &[x, y] in positions {
        let p = Position::floor(x, y);
        if !scene.contains(&p) {
            return Err(Error::domain(format!(
                "position ({x}, {y}) lies outside the room"
            )));
        }
        let cfg = predict_phase(network, &p, scene)?;
        let mut row = vec![x, y];
        row.extend_from_slice(cfg.phases());
        table.push_row(row)?;
    }
    Ok(table)
}
