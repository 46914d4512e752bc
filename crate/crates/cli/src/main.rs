use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};

use risfocus_core::dnn::{load_model, samples_from_database, save_model, train};
use risfocus_core::fingerprint::{load_database, save_database};
use risfocus_core::harness::{predict_table, run_mse_vs_epochs, run_rate_vs_snr, write_manifest};
use risfocus_core::{build_database, ExperimentConfig, Scene, SceneConfig};

#[derive(Parser, Debug)]
#[command(
    name = "risfocus",
    version,
    about = "RIS-assisted indoor link simulator with learned phase configurations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the fingerprint database of the reference-point grid.
    BuildDb {
        #[command(flatten)]
        common: Common,
    },
    /// Train the position-to-phase network.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on an existing database instead of building one.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Predict phase configurations for floor positions.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Floor position `x,y`; repeatable. Defaults to the scene's test points.
        #[arg(long = "at", value_parser = parse_pair)]
        at: Vec<[f64; 2]>,
    },
    /// Mean rate versus transmit SNR around a target position.
    RateVsSnr {
        #[command(flatten)]
        common: Common,
    },
    /// Test MSE after each training epoch for several RIS sizes.
    MseVsEpochs {
        #[command(flatten)]
        common: Common,
    },
}

/// Flags shared by every subcommand. Each one overrides the config file value.
#[derive(Args, Debug)]
struct Common {
    /// Output file. Written atomically; a manifest goes to `<out>.manifest.toml`.
    #[arg(long)]
    out: PathBuf,
    /// Experiment config (TOML); a previous run manifest also works.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene config (TOML), replacing the `[scene]` table.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Master seed; also seeds training unless `--train-seed` is given.
    #[arg(long)]
    seed: Option<u64>,

    /// RIS elements N.
    #[arg(long)]
    n: Option<usize>,
    /// AP antennas M.
    #[arg(long)]
    m: Option<usize>,
    /// Remove all obstacles from the scene.
    #[arg(long)]
    no_obstacles: bool,
    /// Apply blockage loss to obstructed paths.
    #[arg(long)]
    blockage: Option<bool>,
    #[arg(long)]
    blockage_penalty_db: Option<f64>,
    /// Room `width,length,height` in meters.
    #[arg(long, value_parser = parse_triple)]
    room: Option<[f64; 3]>,
    #[arg(long)]
    carrier_hz: Option<f64>,
    /// AP position `x,y,z`.
    #[arg(long, value_parser = parse_triple)]
    ap_position: Option<[f64; 3]>,
    #[arg(long)]
    ris_center_x: Option<f64>,
    #[arg(long)]
    ris_height: Option<f64>,
    #[arg(long)]
    rp_spacing: Option<f64>,
    #[arg(long)]
    rp_offset: Option<f64>,
    #[arg(long)]
    rp_exclude_obstacles: Option<bool>,

    /// Comma-separated transmit SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_grid: Option<Vec<f64>>,
    /// Comma-separated offsets in meters.
    #[arg(long, value_delimiter = ',')]
    offsets: Option<Vec<f64>>,
    /// Offset direction `dx,dy`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    offset_direction: Option<[f64; 2]>,
    /// Target position `x,y`.
    #[arg(long, value_parser = parse_pair)]
    target: Option<[f64; 2]>,
    /// Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Position estimates per reference point.
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    sigma_pos: Option<f64>,
    /// Comma-separated RIS sizes for `mse-vs-epochs`.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    mse_seeds: Option<usize>,

    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    adagrad_epsilon: Option<f64>,
    /// Hidden layer widths `h1,h2,h3`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    train_seed: Option<u64>,
}

fn parse_list<const K: usize>(s: &str) -> std::result::Result<[f64; K], String> {
    let vals = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    vals.try_into()
        .map_err(|v: Vec<f64>| format!("expected {K} comma-separated numbers, got {}", v.len()))
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_list::<2>(s)
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_list::<3>(s)
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.scene {
            cfg.scene = SceneConfig::load(p).with_context(|| format!("loading {}", p.display()))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.train.seed = seed;
        }
        let sc = &mut cfg.scene;
        set(&mut sc.ris_elements, self.n);
        set(&mut sc.ap_antennas, self.m);
        if self.no_obstacles {
            sc.obstacles.clear();
        }
        set(&mut sc.blockage_penalty_db, self.blockage_penalty_db);
        if let Some([w, l, h]) = self.room {
            sc.room.width = w;
            sc.room.length = l;
            sc.room.height = h;
        }
        set(&mut sc.carrier_hz, self.carrier_hz);
        set(&mut sc.ap_position, self.ap_position);
        set(&mut sc.ris_center_x, self.ris_center_x);
        set(&mut sc.ris_height, self.ris_height);
        set(&mut sc.rp_spacing, self.rp_spacing);
        set(&mut sc.rp_offset, self.rp_offset);
        set(&mut sc.rp_exclude_obstacles, self.rp_exclude_obstacles);

        set(&mut cfg.blockage, self.blockage);
        set(&mut cfg.snr_grid_db, self.snr_grid.clone());
        set(&mut cfg.offsets_m, self.offsets.clone());
        set(&mut cfg.offset_direction, self.offset_direction);
        if self.target.is_some() {
            cfg.target = self.target;
        }
        set(&mut cfg.monte_carlo_runs, self.runs);
        set(&mut cfg.estimates_per_rp, self.j);
        set(&mut cfg.sigma_pos, self.sigma_pos);
        set(&mut cfg.n_values, self.n_values.clone());
        set(&mut cfg.mse_seeds, self.mse_seeds);

        let t = &mut cfg.train;
        set(&mut t.epochs, self.epochs);
        set(&mut t.learning_rate, self.learning_rate);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.adagrad_epsilon, self.adagrad_epsilon);
        set(&mut t.seed, self.train_seed);
        if let Some(h) = &self.hidden {
            t.hidden = h
                .as_slice()
                .try_into()
                .map_err(|_| anyhow::anyhow!("--hidden takes exactly three widths"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Runs `write` against a temporary sibling of `out`, then moves it into place
/// together with the manifest. Nothing is left behind on failure.
fn emit(
    out: &Path,
    cfg: &ExperimentConfig,
    command: &str,
    extra: Vec<(String, String)>,
    write: impl FnOnce(&Path) -> Result<()>,
) -> Result<()> {
    let partial = partial_path(out);
    let manifest = manifest_path(out);
    let result = (|| {
        write(&partial)?;
        let mut run = vec![
            ("command".to_string(), command.to_string()),
            ("output".to_string(), out.display().to_string()),
        ];
        run.extend(extra);
        write_manifest(&manifest, cfg, &run)?;
        std::fs::rename(&partial, out)
            .with_context(|| format!("moving output to {}", out.display()))?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&partial);
        let _ = std::fs::remove_file(&manifest);
    }
    result
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildDb { common } => {
            let cfg = common.resolve()?;
            let scene = Scene::from_config(cfg.scene.clone())?;
            let db = build_database(
                &scene,
                cfg.estimates_per_rp,
                cfg.sigma_pos,
                cfg.seed,
                cfg.blockage,
            )?;
            emit(&common.out, &cfg, "build-db", vec![], |p| {
                Ok(save_database(&db, p)?)
            })
        }
        Command::Train { common, db } => {
            let cfg = common.resolve()?;
            let scene = Scene::from_config(cfg.scene.clone())?;
            let (database, mut extra) = match &db {
                Some(path) => {
                    let d = load_database(path)
                        .with_context(|| format!("loading {}", path.display()))?;
                    if d.meta.scene_hash != scene.hash() {
                        bail!(
                            "database {} was built for a different scene",
                            path.display()
                        );
                    }
                    (
                        d,
                        vec![("database".to_string(), path.display().to_string())],
                    )
                }
                None => (
                    build_database(
                        &scene,
                        cfg.estimates_per_rp,
                        cfg.sigma_pos,
                        cfg.seed,
                        cfg.blockage,
                    )?,
                    vec![],
                ),
            };
            let mlp = cfg.train.init_network(scene.ris_elements())?;
            let samples = samples_from_database(&database, &scene);
            let (mlp, report) = train(mlp, &samples, &cfg.train)?;
            if let Some(last) = report.epoch_loss.last() {
                extra.push(("final_loss".into(), last.to_string()));
            }
            emit(&common.out, &cfg, "train", extra, |p| {
                Ok(save_model(&mlp, p)?)
            })
        }
        Command::Predict { common, model, at } => {
            let cfg = common.resolve()?;
            let scene = Scene::from_config(cfg.scene.clone())?;
            let mlp = load_model(&model).with_context(|| format!("loading {}", model.display()))?;
            if mlp.output_dim() != 2 * scene.ris_elements() {
                bail!(
                    "model predicts {} elements but the scene has {}",
                    mlp.output_dim() / 2,
                    scene.ris_elements()
                );
            }
            let positions = if at.is_empty() {
                scene.test_points().iter().map(|p| [p.x, p.y]).collect()
            } else {
                at
            };
            let table = predict_table(&scene, &mlp, &positions)?;
            let extra = vec![("model".to_string(), model.display().to_string())];
            emit(&common.out, &cfg, "predict", extra, |p| {
                Ok(table.save_csv(p)?)
            })
        }
        Command::RateVsSnr { common } => {
            let cfg = common.resolve()?;
            let table = run_rate_vs_snr(&cfg)?;
            emit(&common.out, &cfg, "rate-vs-snr", table.meta.clone(), |p| {
                Ok(table.save_csv(p)?)
            })
        }
        Command::MseVsEpochs { common } => {
            let cfg = common.resolve()?;
            let table = run_mse_vs_epochs(&cfg, &cfg.n_values)?;
            emit(
                &common.out,
                &cfg,
                "mse-vs-epochs",
                table.meta.clone(),
                |p| Ok(table.save_csv(p)?),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub = std::env::args().nth(1).unwrap_or_default();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let mut cmd = Cli::command();
            let usage = match cmd.find_subcommand_mut(&sub) {
                Some(s) => s.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{usage}");
            ExitCode::FAILURE
        }
    }
}
